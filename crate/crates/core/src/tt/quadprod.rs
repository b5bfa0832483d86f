//! Check of the factorization of an unfolding into four matrices:
//!
//! `X_(1:n) = (I_{I_n} ⊗ Q_(1:n−1)) · V(X_n) · H(X_{n+1}) · (Z_(1) ⊗ I_{I_{n+1}})`
//!
//! where `Q` contracts cores `1..n−1` and `Z` contracts cores `n+2..N`
//! (1-based). The Kronecker order follows from the first-index-fastest
//! linearization used for dense tensors and unfoldings alike.

use crate::error::{contract_err, Result};
use crate::linalg::{matmul, Mat};
use crate::tt::dense::checked_size;
use crate::tt::tensor::{TTTensor, FULL_GUARD};

/// `A ⊗ B` for column-major matrices.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (br, bc) = (b.rows(), b.cols());
    Mat::from_fn(a.rows() * br, a.cols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `Q_(1:k)`: rows indexed by `(i_1..i_k)` first index fastest, columns by
/// the open right rank.
pub fn left_interface(t: &TTTensor, k: usize) -> Mat {
    let mut q = Mat::identity(1);
    for c in &t.cores()[..k] {
        let m = q.rows();
        let mut next = Mat::zeros(m * c.dim(), c.r_right());
        for i in 0..c.dim() {
            let qi = matmul(q.as_ref(), c.slice(i).as_ref());
            for b in 0..c.r_right() {
                next.col_mut(b)[i * m..(i + 1) * m].copy_from_slice(qi.col(b));
            }
        }
        q = next;
    }
    q
}

/// `Z_(1)` for cores `k..N` (0-based): rows indexed by the open left rank,
/// columns by `(i_k..i_N)` first index fastest.
pub fn right_interface(t: &TTTensor, k: usize) -> Mat {
    let mut z = Mat::identity(1);
    for c in t.cores()[k..].iter().rev() {
        let rest = z.cols();
        let d = c.dim();
        let mut next = Mat::zeros(c.r_left(), d * rest);
        for i in 0..d {
            let zi = matmul(c.slice(i).as_ref(), z.as_ref());
            for col in 0..rest {
                next.col_mut(i + d * col).copy_from_slice(zi.col(col));
            }
        }
        z = next;
    }
    z
}

/// Relative Frobenius residual between the directly reshaped unfolding
/// `X_(1:split)` and the four-matrix product. `split` is 1-based and must
/// satisfy `1 <= split < N`.
pub fn verify_quadprod(t: &TTTensor, split: usize) -> Result<f64> {
    let n_modes = t.order();
    if split == 0 || split >= n_modes {
        return Err(contract_err!("split {split} must lie in 1..{n_modes}"));
    }
    let dims = t.dims();
    checked_size(&dims, FULL_GUARD)?;
    let direct = t.full()?.unfold(split)?;

    let (xn, xn1) = (t.core(split - 1), t.core(split));
    let q = left_interface(t, split - 1);
    let z = right_interface(t, split + 1);
    let left = kron(&Mat::identity(xn.dim()), &q);
    let right = kron(&z, &Mat::identity(xn1.dim()));
    checked_size(&[left.rows(), left.cols()], FULL_GUARD)?;
    checked_size(&[right.rows(), right.cols()], FULL_GUARD)?;

    let lv = matmul(left.as_ref(), xn.vertical());
    let lvh = matmul(lv.as_ref(), xn1.horizontal());
    let prod = matmul(lvh.as_ref(), right.as_ref());

    let denom = direct.frobenius_norm();
    let diff = prod.sub(&direct).frobenius_norm();
    Ok(if denom > 0.0 { diff / denom } else { diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::random::random_tt;

    #[test]
    fn kron_matches_definition() {
        let a = Mat::from_rows(&[&[1.0, 2.0]]);
        let b = Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let k = kron(&a, &b);
        assert_eq!(k, Mat::from_rows(&[&[0.0, 1.0, 0.0, 2.0], &[1.0, 0.0, 2.0, 0.0]]));
    }

    #[test]
    fn interfaces_reassemble_the_tensor() {
        let t = random_tt(&[2, 3, 2, 2], &[1, 2, 3, 2, 1], 3).unwrap();
        let q = left_interface(&t, 4);
        assert_eq!((q.rows(), q.cols()), (24, 1));
        let full = t.full().unwrap();
        for (a, b) in q.data().iter().zip(full.data()) {
            assert!((a - b).abs() < 1e-13);
        }
        let z = right_interface(&t, 0);
        for (a, b) in z.data().iter().zip(full.data()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn residual_is_tiny_at_every_split() {
        let t = random_tt(&[3, 3, 3, 3], &[1, 3, 3, 3, 1], 11).unwrap();
        for n in 1..4 {
            assert!(verify_quadprod(&t, n).unwrap() <= 1e-12, "split {n}");
        }
        assert!(verify_quadprod(&t, 0).is_err());
        assert!(verify_quadprod(&t, 4).is_err());
    }
}
