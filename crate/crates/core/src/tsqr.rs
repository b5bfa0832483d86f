//! Tall-skinny QR of a row-distributed matrix over a reduction tree, and
//! application of the implicitly stored orthonormal factor.
//!
//! Each rank factors its local block (the leaf), then triangular factors are
//! combined pairwise up a tree. With the butterfly tree both partners of a
//! pair compute the same node, so the final `R` ends up on every rank and
//! applying `Q` needs no communication when `P` is a power of two. Ranks at
//! or above `2^⌊log₂ P⌋` are folded into a partner below it before the
//! butterfly and receive the final `R` afterwards.

use crate::comm::Communicator;
use crate::error::{shape_err, Error, Result};
use crate::linalg::{HouseholderQr, Mat, MatRef};
use crate::trace;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TreeVariant {
    #[default]
    Butterfly,
    Binomial,
}

/// QR of two stacked triangular factors.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    qr: HouseholderQr,
    top_rows: usize,
    keep_top: bool,
    peer: usize,
}

impl TreeNode {
    fn build(mine: &Mat, theirs: &Mat, me: usize, peer: usize) -> Result<Self> {
        let keep_top = me < peer;
        let (top, bottom) = if keep_top { (mine, theirs) } else { (theirs, mine) };
        let qr = HouseholderQr::factor(Mat::vstack(top.as_ref(), bottom.as_ref()))?;
        Ok(TreeNode { qr, top_rows: top.rows(), keep_top, peer })
    }

    pub fn factor(&self) -> &HouseholderQr {
        &self.qr
    }

    pub fn peer(&self) -> usize {
        self.peer
    }

    /// Applies the node to `[B; 0]` and splits the result into this rank's
    /// part and the peer's part.
    fn apply(&self, b: &Mat, upper: bool) -> Result<(Mat, Mat)> {
        let out = if upper { self.qr.apply_q_upper(b.as_ref())? } else { self.qr.apply_q(b.as_ref())? };
        let top = out.row_block(0, self.top_rows);
        let bottom = out.row_block(self.top_rows, out.rows());
        Ok(if self.keep_top { (top, bottom) } else { (bottom, top) })
    }
}

/// Role of a rank in the cleanup step for a non-power-of-two group.
#[derive(Clone, Debug, PartialEq)]
pub enum Cleanup {
    None,
    /// Regular rank that absorbed the leaf factor of `node.peer()`.
    Partner(TreeNode),
    /// Rank whose leaf factor was absorbed by `partner`.
    Remainder {
        partner: usize,
    },
}

/// Per-rank implicit orthonormal factor produced by [`tsqr_factor`].
#[derive(Clone, Debug, PartialEq)]
pub struct TsqrFactor {
    variant: TreeVariant,
    rank: usize,
    size: usize,
    cols: usize,
    q_cols: usize,
    leaf: HouseholderQr,
    levels: Vec<Option<TreeNode>>,
    cleanup: Cleanup,
    parent: Option<usize>,
}

impl TsqrFactor {
    pub fn variant(&self) -> TreeVariant {
        self.variant
    }

    pub fn leaf(&self) -> &HouseholderQr {
        &self.leaf
    }

    /// Butterfly: node formed at exchange level `l` (partner `p xor 2^l`).
    /// Binomial: node formed at step `l` (child `p + 2^l`).
    pub fn level(&self, l: usize) -> Option<&TreeNode> {
        self.levels.get(l).and_then(Option::as_ref)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.iter().filter(|n| n.is_some()).count()
    }

    pub fn cleanup(&self) -> &Cleanup {
        &self.cleanup
    }

    /// Columns of the factored matrix.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Rows of the local block.
    pub fn local_rows(&self) -> usize {
        self.leaf.rows()
    }

    /// Number of columns of `Q`, `min(m, b)` for the global row count `m`.
    pub fn q_cols(&self) -> usize {
        self.q_cols
    }

    fn check_rhs(&self, c: MatRef<'_>, comm: &dyn Communicator) -> Result<Mat> {
        if comm.rank() != self.rank || comm.size() != self.size {
            return Err(Error::Contract("factor applied on a different communicator".into()));
        }
        let k = self.q_cols();
        if c.rows() != self.cols && c.rows() != k {
            return Err(shape_err!("Q applies to blocks with {} (or {k}) rows, got {}", self.cols, c.rows()));
        }
        Ok(c.row_block(0, k))
    }

    /// Local rows of `Q [C; 0]`. `C` has `b` rows (rows past `min(m, b)` are
    /// ignored) and must be identical on all ranks.
    pub fn apply_q(&self, c: MatRef<'_>, comm: &dyn Communicator) -> Result<Mat> {
        let _g = trace::phase(trace::APPLY_Q);
        let c = self.check_rhs(c, comm)?;
        self.apply_inner(c, comm, false)
    }

    /// Same as [`TsqrFactor::apply_q`] for an upper trapezoidal `C`, which
    /// skips structurally zero work.
    pub fn apply_q_upper(&self, c: MatRef<'_>, comm: &dyn Communicator) -> Result<Mat> {
        let _g = trace::phase(trace::APPLY_Q);
        let c = self.check_rhs(c, comm)?;
        self.apply_inner(c, comm, true)
    }

    /// Local rows of the thin orthonormal factor.
    pub fn explicit_q(&self, comm: &dyn Communicator) -> Result<Mat> {
        let k = self.q_cols();
        self.apply_q_upper(Mat::identity(k).as_ref(), comm)
    }

    fn apply_inner(&self, c: Mat, comm: &dyn Communicator, upper: bool) -> Result<Mat> {
        if c.cols() == 0 {
            return Ok(Mat::zeros(self.local_rows(), 0));
        }
        let b = match self.variant {
            TreeVariant::Butterfly => self.butterfly_down(c, comm, upper)?,
            TreeVariant::Binomial => self.binomial_down(c, comm, upper)?,
        };
        let leaf = if upper { self.leaf.apply_q_upper(b.as_ref())? } else { self.leaf.apply_q(b.as_ref())? };
        Ok(leaf)
    }

    fn butterfly_down(&self, c: Mat, comm: &dyn Communicator, upper: bool) -> Result<Mat> {
        let width = c.cols();
        let mut b = c;
        if let Cleanup::Remainder { partner } = self.cleanup {
            let data = comm.recv(partner)?;
            return rows_from(data, width);
        }
        for node in self.levels.iter().flatten() {
            b = node.apply(&b, upper)?.0;
        }
        if let Cleanup::Partner(node) = &self.cleanup {
            let (mine, theirs) = node.apply(&b, upper)?;
            comm.send(node.peer, theirs.data())?;
            b = mine;
        }
        Ok(b)
    }

    fn binomial_down(&self, c: Mat, comm: &dyn Communicator, upper: bool) -> Result<Mat> {
        let width = c.cols();
        let mut b = match self.parent {
            Some(parent) => rows_from(comm.recv(parent)?, width)?,
            None => c,
        };
        for node in self.levels.iter().rev().flatten() {
            let (mine, theirs) = node.apply(&b, upper)?;
            comm.send(node.peer, theirs.data())?;
            b = mine;
        }
        Ok(b)
    }
}

fn rows_from(data: Vec<f64>, cols: usize) -> Result<Mat> {
    if cols == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if !data.len().is_multiple_of(cols) {
        return Err(Error::Contract(format!("received {} values for a block of {cols} columns", data.len())));
    }
    Ok(Mat::from_col_major(data.len() / cols, cols, data))
}

/// Largest power of two not exceeding `p`.
pub fn regular_ranks(p: usize) -> usize {
    if p == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - p.leading_zeros())
    }
}

/// Butterfly partner at level `l`: `2^(l+1)⌊p/2^(l+1)⌋ + ((p + 2^l) mod 2^(l+1))`.
pub fn butterfly_partner(p: usize, l: u32) -> usize {
    let h = 1usize << l;
    2 * h * (p / (2 * h)) + (p + h) % (2 * h)
}

/// Factors the row-distributed matrix whose local block is `local`. Every
/// rank passes a block with the same number of columns. Returns this rank's
/// implicit factor and the `min(m, b) × b` triangular factor, which is
/// bitwise identical on all ranks.
pub fn tsqr_factor(local: Mat, comm: &dyn Communicator, variant: TreeVariant) -> Result<(TsqrFactor, Mat)> {
    let _g = trace::phase(trace::TSQR);
    let b = local.cols();
    let leaf = HouseholderQr::factor(local)?;
    let rbar = leaf.r();
    let (p, np) = (comm.rank(), comm.size());
    let mut f = TsqrFactor {
        variant,
        rank: p,
        size: np,
        cols: b,
        q_cols: 0,
        leaf,
        levels: Vec::new(),
        cleanup: Cleanup::None,
        parent: None,
    };
    let r = match variant {
        TreeVariant::Butterfly => butterfly_up(&mut f, rbar, comm)?,
        TreeVariant::Binomial => binomial_up(&mut f, rbar, comm)?,
    };
    // Every node keeps min(rows, b) rows, so the root has min(m, b).
    f.q_cols = r.rows();
    Ok((f, r))
}

fn butterfly_up(f: &mut TsqrFactor, mut rbar: Mat, comm: &dyn Communicator) -> Result<Mat> {
    let (p, np, b) = (f.rank, f.size, f.cols);
    let pf = regular_ranks(np);
    let levels = pf.trailing_zeros();
    if p >= pf {
        let partner = p - pf;
        comm.send(partner, rbar.data())?;
        f.cleanup = Cleanup::Remainder { partner };
        return rows_from(comm.recv(partner)?, b);
    }
    let remainder = p + pf;
    if remainder < np {
        let theirs = rows_from(comm.recv(remainder)?, b)?;
        let node = TreeNode::build(&rbar, &theirs, p, remainder)?;
        rbar = node.qr.r();
        f.cleanup = Cleanup::Partner(node);
    }
    f.levels = vec![None; levels as usize];
    for l in (0..levels).rev() {
        let j = butterfly_partner(p, l);
        let theirs = rows_from(comm.sendrecv(j, rbar.data())?, b)?;
        let node = TreeNode::build(&rbar, &theirs, p, j)?;
        rbar = node.qr.r();
        f.levels[l as usize] = Some(node);
    }
    if remainder < np {
        comm.send(remainder, rbar.data())?;
    }
    Ok(rbar)
}

fn binomial_up(f: &mut TsqrFactor, mut rbar: Mat, comm: &dyn Communicator) -> Result<Mat> {
    let (p, np, b) = (f.rank, f.size, f.cols);
    let depth = crate::comm::tree_depth(np);
    f.levels = vec![None; depth as usize];
    for s in 0..depth {
        let h = 1usize << s;
        if p % (2 * h) == h {
            comm.send(p - h, rbar.data())?;
            f.parent = Some(p - h);
            break;
        }
        if p + h < np {
            let theirs = rows_from(comm.recv(p + h)?, b)?;
            let node = TreeNode::build(&rbar, &theirs, p, p + h)?;
            rbar = node.qr.r();
            f.levels[s as usize] = Some(node);
        }
    }
    let root = if p == 0 { rbar.data().to_vec() } else { Vec::new() };
    rows_from(comm.broadcast(0, &root)?, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partner_table_for_four_ranks() {
        let table: Vec<Vec<usize>> = (0..2).map(|l| (0..4).map(|p| butterfly_partner(p, l)).collect()).collect();
        assert_eq!(table, vec![vec![1, 0, 3, 2], vec![2, 3, 0, 1]]);
        for p in 0..16 {
            for l in 0..4 {
                assert_eq!(butterfly_partner(p, l), p ^ (1 << l));
            }
        }
    }

    #[test]
    fn regular_rank_counts() {
        let r: Vec<usize> = (1..=9).map(regular_ranks).collect();
        assert_eq!(r, vec![1, 2, 2, 4, 4, 4, 4, 8, 8]);
    }
}
