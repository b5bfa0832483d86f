use crate::error::{shape_err, Result};
use crate::linalg::mat::axpy;
use crate::linalg::{CsrMatrix, Mat, MatRef};
use crate::trace;

/// One `r_left × dim × r_right` core.
///
/// Entry `(a, i, b)` lives at `a + r_left * (i + dim * b)`, so the vertical
/// unfolding `(r_left·dim) × r_right` and the horizontal unfolding
/// `r_left × (dim·r_right)` are both column-major views of `data`.
#[derive(Clone, Debug, PartialEq)]
pub struct TTCore {
    r_left: usize,
    dim: usize,
    r_right: usize,
    data: Vec<f64>,
}

impl TTCore {
    pub fn new(r_left: usize, dim: usize, r_right: usize, data: Vec<f64>) -> Result<Self> {
        let len = r_left
            .checked_mul(dim)
            .and_then(|x| x.checked_mul(r_right))
            .ok_or_else(|| shape_err!("core {r_left}x{dim}x{r_right} overflows"))?;
        if data.len() != len {
            return Err(shape_err!("core {r_left}x{dim}x{r_right} needs {len} entries, got {}", data.len()));
        }
        Ok(TTCore { r_left, dim, r_right, data })
    }

    pub fn zeros(r_left: usize, dim: usize, r_right: usize) -> Self {
        TTCore { r_left, dim, r_right, data: vec![0.0; r_left * dim * r_right] }
    }

    pub fn from_fn(r_left: usize, dim: usize, r_right: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(r_left * dim * r_right);
        for b in 0..r_right {
            for i in 0..dim {
                for a in 0..r_left {
                    data.push(f(a, i, b));
                }
            }
        }
        TTCore { r_left, dim, r_right, data }
    }

    /// Reinterprets a `(r_left·dim) × r_right` matrix as a core.
    pub fn from_vertical(v: Mat, r_left: usize) -> Result<Self> {
        if r_left == 0 || !v.rows().is_multiple_of(r_left) {
            return Err(shape_err!("{} rows are not a multiple of r_left = {r_left}", v.rows()));
        }
        let (dim, r_right) = (v.rows() / r_left, v.cols());
        Self::new(r_left, dim, r_right, v.into_data())
    }

    /// Reinterprets an `r_left × (dim·r_right)` matrix as a core.
    pub fn from_horizontal(h: Mat, r_right: usize) -> Result<Self> {
        if r_right == 0 || !h.cols().is_multiple_of(r_right) {
            return Err(shape_err!("{} columns are not a multiple of r_right = {r_right}", h.cols()));
        }
        let (r_left, dim) = (h.rows(), h.cols() / r_right);
        Self::new(r_left, dim, r_right, h.into_data())
    }

    #[inline]
    pub fn r_left(&self) -> usize {
        self.r_left
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn r_right(&self) -> usize {
        self.r_right
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.r_left, self.dim, self.r_right)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, a: usize, i: usize, b: usize) -> usize {
        a + self.r_left * (i + self.dim * b)
    }

    #[inline]
    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[self.offset(a, i, b)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, i: usize, b: usize, v: f64) {
        let o = self.offset(a, i, b);
        self.data[o] = v;
    }

    pub fn vertical(&self) -> MatRef<'_> {
        MatRef::new(self.r_left * self.dim, self.r_right, &self.data)
    }

    pub fn horizontal(&self) -> MatRef<'_> {
        MatRef::new(self.r_left, self.dim * self.r_right, &self.data)
    }

    /// The `r_left × r_right` matrix `X(:, i, :)`.
    pub fn slice(&self, i: usize) -> Mat {
        Mat::from_fn(self.r_left, self.r_right, |a, b| self.get(a, i, b))
    }

    /// Copies slices `lo..hi` into a new core.
    pub fn slice_range(&self, lo: usize, hi: usize) -> TTCore {
        TTCore::from_fn(self.r_left, hi - lo, self.r_right, |a, i, b| self.get(a, lo + i, b))
    }

    /// Concatenates cores with equal ranks along the mode index.
    pub fn concat(parts: &[TTCore]) -> Result<TTCore> {
        let first = parts.first().ok_or_else(|| shape_err!("nothing to concatenate"))?;
        let (rl, rr) = (first.r_left, first.r_right);
        if parts.iter().any(|c| c.r_left != rl || c.r_right != rr) {
            return Err(shape_err!("concatenated cores must share ranks"));
        }
        let dim: usize = parts.iter().map(|c| c.dim).sum();
        let mut data = Vec::with_capacity(rl * dim * rr);
        for b in 0..rr {
            for c in parts {
                let blk = rl * c.dim;
                data.extend_from_slice(&c.data[b * blk..(b + 1) * blk]);
            }
        }
        TTCore::new(rl, dim, rr, data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
        trace::add_flops(self.data.len() as u64);
    }

    /// `Y(:, i, :) = Σ_j A(i, j) X(:, j, :)` for a sparse square `A`.
    pub fn mode2_multiply(&self, a: &CsrMatrix) -> Result<TTCore> {
        a.check_square(self.dim)?;
        Ok(self.mode2_rows(a, 0, self.dim, |j| j))
    }

    /// Dense variant of [`TTCore::mode2_multiply`]: each `r_left × dim` block
    /// is multiplied by `Aᵀ`.
    pub fn mode2_multiply_dense(&self, a: &Mat) -> Result<TTCore> {
        if a.rows() != self.dim || a.cols() != self.dim {
            return Err(shape_err!("expected a {0}x{0} factor, got {1}x{2}", self.dim, a.rows(), a.cols()));
        }
        let (rl, d) = (self.r_left, self.dim);
        let mut out = TTCore::zeros(rl, d, self.r_right);
        for b in 0..self.r_right {
            let blk = MatRef::new(rl, d, &self.data[b * rl * d..(b + 1) * rl * d]);
            let y = crate::linalg::matmul_nt(blk, a.as_ref());
            out.data[b * rl * d..(b + 1) * rl * d].copy_from_slice(y.data());
        }
        Ok(out)
    }

    /// Rows `lo..hi` of the mode-2 product, reading input slice `j` of this
    /// core at local position `locate(j)`. Used directly by the distributed
    /// operator apply, where this core holds a set of gathered slices.
    pub(crate) fn mode2_rows(&self, a: &CsrMatrix, lo: usize, hi: usize, locate: impl Fn(usize) -> usize) -> TTCore {
        let (rl, rr) = (self.r_left, self.r_right);
        let mut out = TTCore::zeros(rl, hi - lo, rr);
        let mut nnz = 0usize;
        for i in lo..hi {
            let (cols, vals) = a.row(i);
            nnz += cols.len();
            for b in 0..rr {
                let o = out.offset(0, i - lo, b);
                for (&j, &v) in cols.iter().zip(vals) {
                    let s = self.offset(0, locate(j), b);
                    axpy(&mut out.data[o..o + rl], v, &self.data[s..s + rl]);
                }
            }
        }
        trace::add_flops(2 * (nnz * rl * rr) as u64);
        out
    }
}
