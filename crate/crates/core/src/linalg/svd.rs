//! Thin SVD of small dense matrices by one-sided Jacobi rotations.

use crate::error::{Error, Result};
use crate::linalg::mat::{dot, Mat};
use crate::trace;

const MAX_SWEEPS: usize = 80;

/// `A = U diag(s) Vᵀ` with `s` sorted nonincreasing. `U` is `m × r`, `V` is
/// `n × r`, `r = min(m, n)`. Columns belonging to zero singular values are
/// zero vectors.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

pub fn svd(a: &Mat) -> Result<Svd> {
    if a.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("SVD input contains non-finite entries".into()));
    }
    let mut d = if a.rows() >= a.cols() {
        jacobi_tall(a.clone())?
    } else {
        let t = jacobi_tall(a.transpose())?;
        Svd { u: t.v, s: t.s, v: t.u }
    };
    normalize_signs(&mut d);
    Ok(d)
}

/// Flips each singular pair so the largest-magnitude entry of `u` (lowest
/// index on ties) is positive, making the factors a deterministic function
/// of the input.
fn normalize_signs(d: &mut Svd) {
    for j in 0..d.s.len() {
        let col = d.u.col(j);
        let mut best = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col.get(best).is_some_and(|&x| x < 0.0) {
            d.u.col_mut(j).iter_mut().for_each(|x| *x = -*x);
            d.v.col_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn rotate(x: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let rows = x.rows();
    let (lo, hi) = x.data_mut().split_at_mut(q * rows);
    let xp = &mut lo[p * rows..(p + 1) * rows];
    let xq = &mut hi[..rows];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (ap, aq) = (*a, *b);
        *a = c * ap - s * aq;
        *b = s * ap + c * aq;
    }
}

fn jacobi_tall(mut a: Mat) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    let mut v = Mat::identity(n);
    let tol = f64::EPSILON;
    let fro2: f64 = a.data().iter().map(|x| x * x).sum();
    // columns below this squared norm are rounding noise of a rank-deficient input
    let negligible = fro2 * (f64::EPSILON * f64::EPSILON);
    let mut converged = n < 2;
    let mut flops = 0u64;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = dot(a.col(p), a.col(p));
                let beta = dot(a.col(q), a.col(q));
                let gamma = dot(a.col(p), a.col(q));
                flops += 6 * m as u64;
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                flops += 6 * (m + n) as u64;
            }
        }
        converged = !rotated;
    }
    trace::add_flops(flops);
    if !converged {
        return Err(Error::Numeric(format!("Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")));
    }

    let norms: Vec<f64> = (0..n).map(|j| dot(a.col(j), a.col(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the lowest column index first among equal values.
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let mut u = Mat::zeros(m, n);
    let mut vs = Mat::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        if sigma > 0.0 {
            for (o, x) in u.col_mut(dst).iter_mut().zip(a.col(src)) {
                *o = x / sigma;
            }
        }
        vs.col_mut(dst).copy_from_slice(v.col(src));
    }
    Ok(Svd { u, s, v: vs })
}
