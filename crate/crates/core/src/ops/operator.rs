//! Sums of Kronecker products of sparse factors.
//!
//! Text format (whitespace separated, `#` starts a comment):
//!
//! ```text
//! N T
//! t n size nnz      # one header per term t and mode n, in order
//! row col value     # nnz zero-based triplets
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::comm::{Communicator, LocalComm};
use crate::error::{shape_err, Error, Result};
use crate::linalg::CsrMatrix;
use crate::ops::arith::add_cores;
use crate::parallel::{block_range, round_dist, DistTTTensor, RoundingOptions};
use crate::tt::{TTCore, TTTensor};

#[derive(Clone, Debug, PartialEq)]
pub struct KroneckerOperator {
    dims: Vec<usize>,
    terms: Vec<Vec<CsrMatrix>>,
}

impl KroneckerOperator {
    pub fn new(terms: Vec<Vec<CsrMatrix>>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| shape_err!("operator has no terms"))?;
        let dims: Vec<usize> = first.iter().map(CsrMatrix::rows).collect();
        if dims.is_empty() {
            return Err(shape_err!("operator terms have no factors"));
        }
        for (t, term) in terms.iter().enumerate() {
            if term.len() != dims.len() {
                return Err(shape_err!("term {t} has {} factors, expected {}", term.len(), dims.len()));
            }
            for (n, a) in term.iter().enumerate() {
                a.check_square(dims[n]).map_err(|e| shape_err!("term {t}, mode {n}: {e}"))?;
            }
        }
        Ok(KroneckerOperator { dims, terms })
    }

    /// One term of identity factors.
    pub fn identity(dims: &[usize]) -> Result<Self> {
        Self::new(vec![dims.iter().map(|&d| CsrMatrix::identity(d)).collect()])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn terms(&self) -> &[Vec<CsrMatrix>] {
        &self.terms
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in r.lines() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("");
            tokens.extend(body.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        let mut next = |what: &str| -> Result<String> {
            it.next().ok_or_else(|| Error::Format(format!("operator file ends before {what}")))
        };
        let n: usize = parse(&next("N")?, "N")?;
        let t: usize = parse(&next("term count")?, "term count")?;
        let mut terms = Vec::with_capacity(t);
        for ti in 0..t {
            let mut term = Vec::with_capacity(n);
            for ni in 0..n {
                let ht: usize = parse(&next("factor header")?, "term index")?;
                let hn: usize = parse(&next("factor header")?, "mode index")?;
                if (ht, hn) != (ti, ni) {
                    return Err(Error::Format(format!("expected factor ({ti}, {ni}), found ({ht}, {hn})")));
                }
                let size: usize = parse(&next("factor size")?, "size")?;
                let nnz: usize = parse(&next("nnz")?, "nnz")?;
                let mut trip = Vec::with_capacity(nnz);
                for _ in 0..nnz {
                    let i: usize = parse(&next("triplet")?, "row")?;
                    let j: usize = parse(&next("triplet")?, "col")?;
                    let v: f64 = parse(&next("triplet")?, "value")?;
                    trip.push((i, j, v));
                }
                term.push(CsrMatrix::from_triplets(size, size, &trip)?);
            }
            terms.push(term);
        }
        if let Ok(extra) = next("") {
            return Err(Error::Format(format!("unexpected trailing token {extra:?}")));
        }
        Self::new(terms)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.dims.len(), self.terms.len())?;
        for (t, term) in self.terms.iter().enumerate() {
            for (n, a) in term.iter().enumerate() {
                writeln!(w, "{t} {n} {} {}", a.rows(), a.nnz())?;
                for (i, j, v) in a.triplets() {
                    writeln!(w, "{i} {j} {v:e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Sequential apply; see [`apply_operator_dist`].
    pub fn apply(&self, x: &TTTensor, round_eps: Option<f64>) -> Result<TTTensor> {
        apply_operator_dist(self, &DistTTTensor::from_tt(x.clone()), &LocalComm, round_eps)?.into_tt()
    }
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format(format!("invalid {what} {s:?}")))
}

/// Applies every term by mode products of the local slabs, sums the terms
/// and rounds the sum to `round_eps` if given. Slices referenced by the
/// local rows of a factor but owned elsewhere are exchanged first.
pub fn apply_operator_dist(
    op: &KroneckerOperator,
    x: &DistTTTensor,
    comm: &dyn Communicator,
    round_eps: Option<f64>,
) -> Result<DistTTTensor> {
    x.check_comm(comm)?;
    if op.dims() != x.dims() {
        return Err(shape_err!("operator dims {:?} do not match tensor dims {:?}", op.dims(), x.dims()));
    }
    let mut sum: Option<Vec<TTCore>> = None;
    for term in op.terms() {
        let mut cores = Vec::with_capacity(x.order());
        for (n, (a, c)) in term.iter().zip(x.local_cores()).enumerate() {
            cores.push(apply_factor(a, c, x.dims()[n], comm)?);
        }
        sum = Some(match sum {
            None => cores,
            Some(acc) => add_cores(&acc, &cores)?,
        });
    }
    let cores = sum.expect("operators have at least one term");
    let y = DistTTTensor::from_parts_unchecked(x.dims().to_vec(), x.rank(), x.size(), cores);
    match round_eps {
        Some(eps0) => Ok(round_dist(&y, comm, &RoundingOptions { eps0, ..Default::default() })?.0),
        None => Ok(y),
    }
}

/// Global column indices referenced by rows `lo..hi` of `a` that fall in
/// `[qlo, qhi)`, sorted.
fn needed(a: &CsrMatrix, (lo, hi): (usize, usize), (qlo, qhi): (usize, usize)) -> Vec<usize> {
    let mut v: Vec<usize> =
        (lo..hi).flat_map(|i| a.row(i).0.iter().copied()).filter(|&j| j >= qlo && j < qhi).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn apply_factor(a: &CsrMatrix, c: &TTCore, dim: usize, comm: &dyn Communicator) -> Result<TTCore> {
    let (me, np) = (comm.rank(), comm.size());
    let own = block_range(dim, me, np);
    let (rl, rr) = (c.r_left(), c.r_right());
    let mut parts = vec![c.clone()];
    let mut locate: HashMap<usize, usize> = HashMap::new();
    let mut pos = own.1 - own.0;
    for s in 1..np {
        let dest = (me + s) % np;
        let src = (me + np - s) % np;
        let out = needed(a, block_range(dim, dest, np), own);
        if !out.is_empty() {
            let pack = TTCore::from_fn(rl, out.len(), rr, |l, t, r| c.get(l, out[t] - own.0, r));
            comm.send(dest, pack.data())?;
        }
        let inc = needed(a, own, block_range(dim, src, np));
        if !inc.is_empty() {
            let data = comm.recv(src)?;
            parts.push(TTCore::new(rl, inc.len(), rr, data)?);
            for j in inc {
                locate.insert(j, pos);
                pos += 1;
            }
        }
    }
    let ext = if parts.len() == 1 { parts.pop().expect("own slab") } else { TTCore::concat(&parts)? };
    Ok(ext.mode2_rows(a, own.0, own.1, |j| if j >= own.0 && j < own.1 { j - own.0 } else { locate[&j] }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::random_tt;

    fn tridiag(n: usize, d: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, d));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let op = KroneckerOperator::new(vec![
            vec![tridiag(3, 2.0), CsrMatrix::identity(4)],
            vec![CsrMatrix::identity(3), tridiag(4, 0.5)],
        ])
        .unwrap();
        let mut buf = Vec::new();
        op.write(&mut buf).unwrap();
        let back = KroneckerOperator::read(&buf[..]).unwrap();
        assert_eq!(back, op);
    }

    #[test]
    fn comments_and_errors() {
        let text = "# demo\n1 1\n0 0 2 2 # header\n0 0 1.5\n1 1 -1\n";
        let op = KroneckerOperator::read(text.as_bytes()).unwrap();
        assert_eq!(op.dims(), &[2]);
        assert!(matches!(KroneckerOperator::read("1 1\n0 0 2 3\n0 0 1\n".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(KroneckerOperator::read("1 1\n0 0 2 1\n5 0 1\n".as_bytes()), Err(Error::Bounds(_))));
        assert!(matches!(KroneckerOperator::read("1 1\n0 0 2 0\n7\n".as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn identity_is_bitwise_noop() {
        let x = random_tt(&[3, 4, 2], &[1, 2, 3, 1], 5).unwrap();
        let op = KroneckerOperator::identity(&x.dims()).unwrap();
        assert_eq!(op.apply(&x, None).unwrap(), x);
    }

    #[test]
    fn mismatched_dims_are_rejected() {
        let x = random_tt(&[3, 4], &[1, 2, 1], 5).unwrap();
        let op = KroneckerOperator::identity(&[3, 5]).unwrap();
        assert!(matches!(op.apply(&x, None), Err(Error::Shape(_))));
        assert!(KroneckerOperator::new(vec![vec![CsrMatrix::identity(2)], vec![]]).is_err());
    }
}
