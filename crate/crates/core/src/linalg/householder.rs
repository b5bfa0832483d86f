//! Householder QR with a nonnegative triangular diagonal and implicit
//! application of the orthonormal factor.

use crate::error::{Error, Result};
use crate::linalg::mat::{axpy, dot, Mat, MatRef};
use crate::trace;

/// Packed Householder factorization `A = Q R` of an `m × b` matrix.
///
/// Reflector `j` is `H_j = I - tau_j v_j v_jᵀ` with `v_j(j) = 1`; its tail is
/// stored below the diagonal of `packed`, `R` on and above it. There are
/// `k = min(m, b)` reflectors, so `Q` is `m × k` with orthonormal columns and
/// `R` is `k × b` upper trapezoidal with `R(j, j) >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct HouseholderQr {
    packed: Mat,
    tau: Vec<f64>,
}

/// Computes a reflector that maps `x` onto `|x| e_1`.
///
/// On return `x[0]` holds `|x|` and `x[1..]` the reflector tail (with an
/// implicit leading one). Uses the cancellation-free choice of the first
/// component so the image is always the nonnegative multiple of `e_1`.
fn make_reflector(x: &mut [f64]) -> f64 {
    let l = x.len();
    let x0 = x[0];
    let sigma = if l > 1 { dot(&x[1..], &x[1..]) } else { 0.0 };
    trace::add_flops(3 * l as u64);
    if sigma == 0.0 {
        x[0] = x0.abs();
        return if x0 >= 0.0 { 0.0 } else { 2.0 };
    }
    let mu = (x0 * x0 + sigma).sqrt();
    let v0 = if x0 <= 0.0 { x0 - mu } else { -sigma / (x0 + mu) };
    let tau = 2.0 * v0 * v0 / (sigma + v0 * v0);
    for xi in &mut x[1..] {
        *xi /= v0;
    }
    x[0] = mu;
    tau
}

/// `c -= tau (vᵀ c) v` with `v = [1; tail]`.
#[inline]
fn reflect(tail: &[f64], tau: f64, c: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let (c0, rest) = c.split_first_mut().expect("reflector applied to empty column");
    let w = tau * (*c0 + dot(tail, rest));
    *c0 -= w;
    axpy(rest, -w, tail);
}

impl HouseholderQr {
    pub fn factor(mut a: Mat) -> Result<Self> {
        if a.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("QR input contains non-finite entries".into()));
        }
        let (m, b) = (a.rows(), a.cols());
        let k = m.min(b);
        let mut tau = Vec::with_capacity(k);
        for j in 0..k {
            let t = make_reflector(&mut a.col_mut(j)[j..]);
            tau.push(t);
            if t != 0.0 {
                // Split the buffer so the reflector column can be borrowed
                // while the trailing columns are updated.
                let (head, tail) = a.data_mut().split_at_mut((j + 1) * m);
                let v = &head[j * m + j + 1..(j + 1) * m];
                for c in tail.chunks_exact_mut(m) {
                    reflect(v, t, &mut c[j..]);
                }
                trace::add_flops(4 * ((m - j) * (b - j - 1)) as u64);
            }
        }
        Ok(HouseholderQr { packed: a, tau })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.packed.rows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.packed.cols()
    }

    /// Number of reflectors, `min(m, b)`; also the row count of `R`.
    #[inline]
    pub fn rank_bound(&self) -> usize {
        self.tau.len()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// The `k × b` upper trapezoidal factor.
    pub fn r(&self) -> Mat {
        let k = self.rank_bound();
        Mat::from_fn(k, self.cols(), |i, j| if i <= j { self.packed[(i, j)] } else { 0.0 })
    }

    fn tail(&self, j: usize) -> &[f64] {
        &self.packed.col(j)[j + 1..]
    }

    fn embed(&self, c: MatRef<'_>) -> Result<Mat> {
        let k = self.rank_bound();
        if c.rows() != k {
            return Err(Error::Shape(format!(
                "implicit Q has {k} columns but the applied block has {} rows",
                c.rows()
            )));
        }
        let m = self.rows();
        let mut out = Mat::zeros(m, c.cols());
        for j in 0..c.cols() {
            out.col_mut(j)[..k].copy_from_slice(c.col(j));
        }
        Ok(out)
    }

    /// `Q [C; 0]` for a general `k × c` block `C`.
    pub fn apply_q(&self, c: MatRef<'_>) -> Result<Mat> {
        let mut out = self.embed(c)?;
        let m = self.rows();
        let ncols = out.cols();
        for j in (0..self.rank_bound()).rev() {
            let t = self.tau[j];
            if t == 0.0 {
                continue;
            }
            let v = self.tail(j);
            for col in 0..ncols {
                reflect(v, t, &mut out.col_mut(col)[j..]);
            }
            trace::add_flops(4 * ((m - j) * ncols) as u64);
        }
        Ok(out)
    }

    /// `Q [C; 0]` for an upper trapezoidal `C`. Reflector `j` cannot touch
    /// columns left of `j`, which halves the work; with `C = I` this forms
    /// the explicit thin `Q`.
    pub fn apply_q_upper(&self, c: MatRef<'_>) -> Result<Mat> {
        let mut out = self.embed(c)?;
        let m = self.rows();
        let ncols = out.cols();
        for j in (0..self.rank_bound()).rev() {
            let t = self.tau[j];
            if t == 0.0 || j >= ncols {
                continue;
            }
            let v = self.tail(j);
            for col in j..ncols {
                reflect(v, t, &mut out.col_mut(col)[j..]);
            }
            trace::add_flops(4 * ((m - j) * (ncols - j)) as u64);
        }
        Ok(out)
    }

    /// Explicit thin orthonormal factor (`m × k`).
    pub fn explicit_q(&self) -> Mat {
        let k = self.rank_bound();
        self.apply_q_upper(Mat::identity(k).as_ref()).expect("identity has k rows")
    }

    /// `Qᵀ B` for an `m × c` block, returning the leading `k` rows.
    pub fn apply_qt(&self, b: MatRef<'_>) -> Result<Mat> {
        if b.rows() != self.rows() {
            return Err(Error::Shape(format!("Qᵀ expects {} rows, got {}", self.rows(), b.rows())));
        }
        let mut w = b.to_owned();
        let m = self.rows();
        for j in 0..self.rank_bound() {
            let t = self.tau[j];
            if t == 0.0 {
                continue;
            }
            let v = self.tail(j);
            for col in 0..w.cols() {
                reflect(v, t, &mut w.col_mut(col)[j..]);
            }
            trace::add_flops(4 * ((m - j) * w.cols()) as u64);
        }
        Ok(w.row_block(0, self.rank_bound()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat::{matmul, matmul_tn};

    fn lcg(r: usize, c: usize, seed: u64) -> Mat {
        let mut s = seed ^ 0x9e3779b97f4a7c15;
        Mat::from_fn(r, c, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    fn check_factorization(a: &Mat) {
        let qr = HouseholderQr::factor(a.clone()).unwrap();
        let q = qr.explicit_q();
        let r = qr.r();
        let k = a.rows().min(a.cols());
        assert_eq!((q.rows(), q.cols()), (a.rows(), k));
        for j in 0..k {
            assert!(r[(j, j)] >= 0.0, "diagonal sign at {j}");
        }
        let qtq = matmul_tn(q.as_ref(), q.as_ref());
        assert!(qtq.max_abs_diff(&Mat::identity(k)) < 1e-13);
        let back = matmul(q.as_ref(), r.as_ref());
        let scale = a.frobenius_norm().max(1.0);
        assert!(back.sub(a).frobenius_norm() / scale < 1e-14);
        // general apply path agrees with the triangular shortcut
        let q2 = qr.apply_q(Mat::identity(k).as_ref()).unwrap();
        assert!(q2.max_abs_diff(&q) < 1e-14);
    }

    #[test]
    fn tall_wide_and_square_blocks() {
        check_factorization(&lcg(64, 5, 1));
        check_factorization(&lcg(5, 5, 2));
        check_factorization(&lcg(3, 7, 3));
        check_factorization(&lcg(1, 4, 4));
    }

    #[test]
    fn ones_column_gives_sqrt_m() {
        let qr = HouseholderQr::factor(Mat::from_fn(9, 1, |_, _| 1.0)).unwrap();
        assert!((qr.r()[(0, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_columns_give_identity_r() {
        // columns of a signed permutation-free orthonormal matrix
        let a = Mat::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let qr = HouseholderQr::factor(a).unwrap();
        assert_eq!(qr.r(), Mat::identity(2));
        let neg = Mat::from_fn(4, 2, |i, j| if i == j { -1.0 } else { 0.0 });
        let qr = HouseholderQr::factor(neg.clone()).unwrap();
        assert_eq!(qr.r(), Mat::identity(2));
        assert!(qr.explicit_q().max_abs_diff(&neg) < 1e-15);
    }

    #[test]
    fn zero_rows_and_zero_matrix() {
        let qr = HouseholderQr::factor(Mat::zeros(0, 3)).unwrap();
        assert_eq!(qr.rank_bound(), 0);
        assert_eq!(qr.r().rows(), 0);
        assert_eq!(qr.apply_q(Mat::zeros(0, 2).as_ref()).unwrap().rows(), 0);
        let qr = HouseholderQr::factor(Mat::zeros(5, 2)).unwrap();
        assert_eq!(qr.r(), Mat::zeros(2, 2));
        let q = qr.explicit_q();
        assert!(matmul_tn(q.as_ref(), q.as_ref()).max_abs_diff(&Mat::identity(2)) < 1e-15);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut a = lcg(3, 2, 5);
        a[(1, 1)] = f64::NAN;
        assert!(matches!(HouseholderQr::factor(a), Err(Error::Numeric(_))));
    }

    #[test]
    fn qt_inverts_q_on_its_range() {
        let a = lcg(20, 4, 6);
        let qr = HouseholderQr::factor(a.clone()).unwrap();
        let r = qr.apply_qt(a.as_ref()).unwrap();
        assert!(r.max_abs_diff(&qr.r()) < 1e-13);
    }

    #[test]
    fn flop_count_tracks_leading_term() {
        let (m, b) = (4000usize, 20usize);
        let a = lcg(m, b, 7);
        trace::reset();
        let qr = HouseholderQr::factor(a).unwrap();
        let f = trace::take().total().flops as f64;
        let lead = 2.0 * (m * b * b) as f64;
        let exact: usize = (0..b).map(|j| 3 * (m - j) + 4 * (m - j) * (b - j - 1)).sum();
        assert_eq!(f, exact as f64);
        assert!((f - lead).abs() / lead < 1.0 / b as f64, "qr flops {f} vs {lead}");
        let _ = qr.explicit_q();
        let f = trace::take().total().flops as f64;
        assert!((f - lead).abs() / lead < 1.0 / b as f64, "form-q flops {f} vs {lead}");
        let _ = qr.apply_q(Mat::identity(b).as_ref()).unwrap();
        let f = trace::take().total().flops as f64;
        assert!((f - 2.0 * lead).abs() / (2.0 * lead) < 1.0 / b as f64, "apply flops {f}");
    }
}
