use std::fmt;
use std::ops::{Index, IndexMut};

use crate::trace;

/// Owned dense matrix in column-major order.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Borrowed column-major matrix with leading dimension equal to `rows`.
///
/// TT core unfoldings are exposed through this type without copying.
#[derive(Clone, Copy)]
pub struct MatRef<'a> {
    rows: usize,
    cols: usize,
    data: &'a [f64],
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.as_ref().fmt(f)
    }
}

impl fmt::Debug for MatRef<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                write!(f, " {:>12.5e}", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major buffer has wrong length");
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from row slices; convenient in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Mat::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Mat::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn as_ref(&self) -> MatRef<'_> {
        MatRef { rows: self.rows, cols: self.cols, data: &self.data }
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Mat {
        self.as_ref().transpose()
    }

    /// Copy of rows `r0..r1`.
    pub fn row_block(&self, r0: usize, r1: usize) -> Mat {
        self.as_ref().row_block(r0, r1)
    }

    /// Copy of columns `c0..c1`.
    pub fn col_block(&self, c0: usize, c1: usize) -> Mat {
        Mat::from_col_major(self.rows, c1 - c0, self.data[c0 * self.rows..c1 * self.rows].to_vec())
    }

    /// Vertical concatenation `[top; bottom]`.
    pub fn vstack(top: MatRef<'_>, bottom: MatRef<'_>) -> Mat {
        assert_eq!(top.cols, bottom.cols, "vstack needs equal column counts");
        let rows = top.rows + bottom.rows;
        let mut out = Mat::zeros(rows, top.cols);
        for j in 0..top.cols {
            let c = out.col_mut(j);
            c[..top.rows].copy_from_slice(top.col(j));
            c[top.rows..].copy_from_slice(bottom.col(j));
        }
        out
    }

    /// Returns a copy padded with zero rows up to `rows` rows.
    pub fn pad_rows(&self, rows: usize) -> Mat {
        assert!(rows >= self.rows);
        Mat::from_fn(rows, self.cols, |i, j| if i < self.rows { self[(i, j)] } else { 0.0 })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.as_ref().frobenius_norm()
    }

    pub fn scale_cols(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.cols);
        for (j, &sj) in s.iter().enumerate() {
            for x in self.col_mut(j) {
                *x *= sj;
            }
        }
        trace::add_flops((self.rows * self.cols) as u64);
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat::from_col_major(self.rows, self.cols, data)
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.rows]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.rows]
    }
}

impl<'a> MatRef<'a> {
    pub fn new(rows: usize, cols: usize, data: &'a [f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major view has wrong length");
        MatRef { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &'a [f64] {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &'a [f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn to_owned(&self) -> Mat {
        Mat::from_col_major(self.rows, self.cols, self.data.to_vec())
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            let c = self.col(j);
            for (i, &v) in c.iter().enumerate() {
                out.data[j + i * self.cols] = v;
            }
        }
        out
    }

    pub fn row_block(&self, r0: usize, r1: usize) -> Mat {
        assert!(r0 <= r1 && r1 <= self.rows);
        let mut out = Mat::zeros(r1 - r0, self.cols);
        for j in 0..self.cols {
            out.col_mut(j).copy_from_slice(&self.col(j)[r0..r1]);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent accumulators let the compiler vectorize.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `C = A * B`.
pub fn matmul(a: MatRef<'_>, b: MatRef<'_>) -> Mat {
    assert_eq!(a.cols, b.rows, "matmul: inner dimensions differ");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = Mat::zeros(m, n);
    for j in 0..n {
        let bj = b.col(j);
        let cj = c.col_mut(j);
        for (l, &blj) in bj.iter().enumerate() {
            if blj != 0.0 {
                axpy(cj, blj, a.col(l));
            }
        }
    }
    trace::add_flops(2 * (m * k * n) as u64);
    c
}

/// `C = Aᵀ * B`.
pub fn matmul_tn(a: MatRef<'_>, b: MatRef<'_>) -> Mat {
    assert_eq!(a.rows, b.rows, "matmul_tn: row counts differ");
    let (m, k, n) = (a.cols, a.rows, b.cols);
    let mut c = Mat::zeros(m, n);
    for j in 0..n {
        let bj = b.col(j);
        for i in 0..m {
            c.data[i + j * m] = dot(a.col(i), bj);
        }
    }
    trace::add_flops(2 * (m * k * n) as u64);
    c
}

/// `C = A * Bᵀ`.
pub fn matmul_nt(a: MatRef<'_>, b: MatRef<'_>) -> Mat {
    assert_eq!(a.cols, b.cols, "matmul_nt: column counts differ");
    let (m, k, n) = (a.rows, a.cols, b.rows);
    let mut c = Mat::zeros(m, n);
    for l in 0..k {
        let al = a.col(l);
        let bl = b.col(l);
        for (j, &bjl) in bl.iter().enumerate() {
            if bjl != 0.0 {
                axpy(c.col_mut(j), bjl, al);
            }
        }
    }
    trace::add_flops(2 * (m * k * n) as u64);
    c
}

/// `C = U * B` where `U` is upper trapezoidal (entries below the diagonal are
/// ignored). Costs half of a general product.
pub fn upper_mul(u: MatRef<'_>, b: MatRef<'_>) -> Mat {
    assert_eq!(u.cols, b.rows, "upper_mul: inner dimensions differ");
    let (k, c) = (u.rows, b.cols);
    let mut out = Mat::zeros(k, c);
    let mut flops = 0u64;
    for col in 0..c {
        let bc = b.col(col);
        let oc = out.col_mut(col);
        for (j, &bj) in bc.iter().enumerate() {
            let top = (j + 1).min(k);
            axpy(&mut oc[..top], bj, &u.col(j)[..top]);
            flops += 2 * top as u64;
        }
    }
    trace::add_flops(flops);
    out
}

/// `C = A * Uᵀ` where `U` is `k × n` upper trapezoidal.
pub fn mul_upper_t(a: MatRef<'_>, u: MatRef<'_>) -> Mat {
    assert_eq!(a.cols, u.cols, "mul_upper_t: column counts differ");
    let (m, k) = (a.rows, u.rows);
    let mut out = Mat::zeros(m, k);
    let mut flops = 0u64;
    for i in 0..k {
        let oc = out.col_mut(i);
        for j in i..u.cols {
            let uij = u.get(i, j);
            axpy(oc, uij, a.col(j));
            flops += 2 * m as u64;
        }
    }
    trace::add_flops(flops);
    out
}

/// Symmetric `Aᵀ A`, computing only one triangle.
pub fn gram(a: MatRef<'_>) -> Mat {
    let n = a.cols;
    let mut g = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = dot(a.col(i), a.col(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    trace::add_flops((a.rows * n * (n + 1)) as u64);
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Mat, b: &Mat) -> Mat {
        Mat::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|l| a[(i, l)] * b[(l, j)]).sum())
    }

    fn sample(r: usize, c: usize, seed: u64) -> Mat {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        Mat::from_fn(r, c, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn products_match_naive() {
        let a = sample(7, 5, 1);
        let b = sample(5, 4, 2);
        assert!(matmul(a.as_ref(), b.as_ref()).max_abs_diff(&naive(&a, &b)) < 1e-14);
        let at = a.transpose();
        assert!(matmul_tn(at.as_ref(), b.as_ref()).max_abs_diff(&naive(&a, &b)) < 1e-14);
        let bt = b.transpose();
        assert!(matmul_nt(a.as_ref(), bt.as_ref()).max_abs_diff(&naive(&a, &b)) < 1e-14);
        assert!(gram(a.as_ref()).max_abs_diff(&naive(&at, &a)) < 1e-14);
    }

    #[test]
    fn triangular_products_ignore_lower_part() {
        let u = sample(4, 6, 3);
        let mut ut = u.clone();
        for j in 0..6 {
            for i in (j + 1)..4 {
                ut[(i, j)] = 0.0;
            }
        }
        let b = sample(6, 3, 4);
        assert!(upper_mul(u.as_ref(), b.as_ref()).max_abs_diff(&naive(&ut, &b)) < 1e-14);
        let a = sample(9, 6, 5);
        let expect = naive(&a, &ut.transpose());
        assert!(mul_upper_t(a.as_ref(), u.as_ref()).max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn flop_counts_are_nominal() {
        trace::reset();
        let a = sample(10, 4, 6);
        let b = sample(4, 3, 7);
        let _ = matmul(a.as_ref(), b.as_ref());
        assert_eq!(trace::take().total().flops, 2 * 10 * 4 * 3);
        let r = Mat::from_fn(4, 4, |i, j| if i <= j { 1.0 } else { 0.0 });
        let _ = upper_mul(r.as_ref(), b.as_ref());
        // 3 columns × (1+2+3+4) multiply-adds
        assert_eq!(trace::take().total().flops, 3 * 2 * 10);
    }

    #[test]
    fn transpose_and_blocks() {
        let a = sample(3, 2, 8);
        assert_eq!(a.transpose().transpose(), a);
        let s = Mat::vstack(a.row_block(0, 1).as_ref(), a.row_block(1, 3).as_ref());
        assert_eq!(s, a);
        assert_eq!(a.pad_rows(5).row_block(0, 3), a);
    }
}
