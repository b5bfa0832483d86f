use crate::error::{contract_err, Result};
use crate::linalg::{svd, Mat};

/// Leading `L` singular triplets of a small replicated factor.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSvd {
    pub u_hat: Mat,
    pub sigma: Vec<f64>,
    pub v_hat: Mat,
    /// ℓ₂ norm of the dropped singular values.
    pub discarded_tail: f64,
    /// The rank cap cut below the rank the threshold asked for.
    pub capped: bool,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `V̂ Σ`.
    pub fn v_sigma(&self) -> Mat {
        let mut m = self.v_hat.clone();
        m.scale_cols(&self.sigma);
        m
    }
}

/// `tails[l]` is the ℓ₂ norm of `s[l..]`.
pub fn tail_norms(s: &[f64]) -> Vec<f64> {
    let mut sq = vec![0.0; s.len() + 1];
    for l in (0..s.len()).rev() {
        sq[l] = sq[l + 1] + s[l] * s[l];
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// Keeps the smallest `L ≥ 1` whose dropped tail is at most `eps`, then
/// applies `max_rank`.
pub fn truncated_svd(r: &Mat, eps: f64, max_rank: Option<usize>) -> Result<TruncatedSvd> {
    if eps.is_nan() || eps < 0.0 {
        return Err(contract_err!("truncation threshold must be nonnegative, got {eps}"));
    }
    if max_rank == Some(0) {
        return Err(contract_err!("rank cap must be at least 1"));
    }
    if r.rows() == 0 || r.cols() == 0 {
        return Err(contract_err!("cannot truncate an empty {}x{} factor", r.rows(), r.cols()));
    }
    let d = svd(r)?;
    let tails = tail_norms(&d.s);
    let wanted = (1..=d.s.len()).find(|&l| tails[l] <= eps).unwrap_or(d.s.len());
    let (l, capped) = match max_rank {
        Some(m) if m < wanted => (m, true),
        _ => (wanted, false),
    };
    let mut u_hat = d.u.col_block(0, l);
    let mut v_hat = d.v.col_block(0, l);
    for j in 0..l {
        if d.s[j] == 0.0 {
            u_hat.col_mut(j).fill(0.0);
            u_hat.col_mut(j)[j] = 1.0;
            v_hat.col_mut(j).fill(0.0);
            v_hat.col_mut(j)[j] = 1.0;
        }
    }
    Ok(TruncatedSvd { u_hat, sigma: d.s[..l].to_vec(), v_hat, discarded_tail: tails[l], capped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_zero_is_dropped() {
        let t = truncated_svd(&Mat::diag(&[2.0, 1.0, 0.0]), 0.0, None).unwrap();
        assert_eq!(t.rank(), 2);
        assert_eq!(t.discarded_tail, 0.0);
    }

    #[test]
    fn at_least_one_is_kept() {
        let t = truncated_svd(&Mat::diag(&[3.0, 2.0]), 10.0, None).unwrap();
        assert_eq!(t.rank(), 1);
        assert_eq!(t.discarded_tail, 2.0);
        let z = truncated_svd(&Mat::zeros(2, 2), 0.0, None).unwrap();
        assert_eq!(z.rank(), 1);
        assert_eq!(z.u_hat.col(0), &[1.0, 0.0]);
    }

    #[test]
    fn cap_is_flagged() {
        let t = truncated_svd(&Mat::diag(&[3.0, 2.0, 1.0]), 0.5, Some(2)).unwrap();
        assert_eq!(t.rank(), 2);
        assert!(t.capped);
        let t = truncated_svd(&Mat::diag(&[3.0, 2.0, 1.0]), 2.5, Some(2)).unwrap();
        assert_eq!(t.rank(), 1);
        assert!(!t.capped);
    }

    #[test]
    fn bad_arguments() {
        assert!(truncated_svd(&Mat::identity(2), -1.0, None).is_err());
        assert!(truncated_svd(&Mat::identity(2), f64::NAN, None).is_err());
        assert!(truncated_svd(&Mat::identity(2), 0.0, Some(0)).is_err());
    }
}
