use std::fmt;
use std::str::FromStr;

use crate::comm::{Communicator, LocalComm};
use crate::error::{contract_err, Error, Result};
use crate::linalg::{matmul, matmul_tn, mul_upper_t, upper_mul};
use crate::ops::inner::ZERO_NORM;
use crate::parallel::dist::core_norm;
use crate::parallel::ortho::{core_from_transposed, factor_horizontal, factor_vertical};
use crate::parallel::{truncated_svd, DistTTTensor, TruncatedSvd};
use crate::tsqr::{TreeVariant, TsqrFactor};
use crate::tt::{TTCore, TTTensor};

/// Sweep order and Q handling. `Lrl` orthonormalizes left to right and
/// truncates right to left; `Rlr` is the mirror. The `I` suffix keeps the
/// first sweep's orthonormal cores as implicit TSQR factors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RoundingVariant {
    Lrl,
    #[default]
    Lrli,
    Rlr,
    Rlri,
}

impl RoundingVariant {
    pub const ALL: [RoundingVariant; 4] =
        [RoundingVariant::Lrli, RoundingVariant::Lrl, RoundingVariant::Rlri, RoundingVariant::Rlr];

    pub fn implicit(self) -> bool {
        matches!(self, RoundingVariant::Lrli | RoundingVariant::Rlri)
    }

    /// Whether the orthonormalization sweep runs left to right.
    pub fn left_first(self) -> bool {
        matches!(self, RoundingVariant::Lrl | RoundingVariant::Lrli)
    }
}

impl fmt::Display for RoundingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoundingVariant::Lrl => "LRL",
            RoundingVariant::Lrli => "LRLI",
            RoundingVariant::Rlr => "RLR",
            RoundingVariant::Rlri => "RLRI",
        })
    }
}

impl FromStr for RoundingVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LRL" => Ok(RoundingVariant::Lrl),
            "LRLI" => Ok(RoundingVariant::Lrli),
            "RLR" => Ok(RoundingVariant::Rlr),
            "RLRI" => Ok(RoundingVariant::Rlri),
            _ => Err(contract_err!("unknown rounding variant {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingOptions {
    /// Relative accuracy `ε₀`.
    pub eps0: f64,
    pub variant: RoundingVariant,
    pub max_rank: Option<usize>,
    pub tree: TreeVariant,
    /// Cross-check the truncation ranks over all ranks with one extra
    /// allreduce per bond.
    pub check_consistency: bool,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        RoundingOptions {
            eps0: 0.0,
            variant: RoundingVariant::default(),
            max_rank: None,
            tree: TreeVariant::default(),
            check_consistency: false,
        }
    }
}

impl RoundingOptions {
    pub fn with_eps(eps0: f64) -> Self {
        RoundingOptions { eps0, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingReport {
    pub ranks: Vec<usize>,
    /// Norm of the input, taken from the orthonormalized end core.
    pub norm: f64,
    /// Absolute per-bond threshold `ε₀‖x‖/√(N−1)`.
    pub eps: f64,
    /// Dropped ℓ₂ tail per bond, in bond order.
    pub tails: Vec<f64>,
    /// `sqrt(Σ tails²)`, an upper bound on the rounding error.
    pub error_bound: f64,
    /// A rank cap forced the error past `ε₀‖x‖`.
    pub bound_violated: bool,
    pub zero_input: bool,
}

fn validate(opts: &RoundingOptions) -> Result<()> {
    if !opts.eps0.is_finite() || opts.eps0 < 0.0 {
        return Err(contract_err!("eps0 must be finite and nonnegative, got {}", opts.eps0));
    }
    if opts.max_rank == Some(0) {
        return Err(contract_err!("rank cap must be at least 1"));
    }
    Ok(())
}

fn check_rank(t: &TruncatedSvd, comm: &dyn Communicator, opts: &RoundingOptions) -> Result<()> {
    if !opts.check_consistency || comm.size() == 1 {
        return Ok(());
    }
    let l = t.rank() as f64;
    let s = comm.allreduce_sum(&[l, l * l])?;
    let p = comm.size() as f64;
    if s[0] != l * p || s[1] != l * l * p {
        return Err(contract_err!("truncation rank {l} on rank {} disagrees with other ranks", comm.rank()));
    }
    Ok(())
}

/// Rounds `x` so that the result is within `ε₀‖x‖` of it (unless capped).
/// LRL variants return a right-orthonormal train, RLR variants a
/// left-orthonormal one.
pub fn round_dist(
    x: &DistTTTensor,
    comm: &dyn Communicator,
    opts: &RoundingOptions,
) -> Result<(DistTTTensor, RoundingReport)> {
    validate(opts)?;
    x.check_comm(comm)?;
    let n = x.order();
    if n == 0 {
        return Err(contract_err!("cannot round an empty tensor train"));
    }
    let mut cores = x.local_cores().to_vec();
    let mut facs: Vec<Option<TsqrFactor>> = (0..n).map(|_| None).collect();
    let left = opts.variant.left_first();
    let implicit = opts.variant.implicit();

    if left {
        for k in 0..n - 1 {
            let (f, r) = factor_vertical(&cores[k], comm, opts.tree)?;
            let next = &cores[k + 1];
            cores[k + 1] = TTCore::from_horizontal(upper_mul(r.as_ref(), next.horizontal()), next.r_right())?;
            if implicit {
                facs[k] = Some(f);
            } else {
                cores[k] = TTCore::from_vertical(f.explicit_q(comm)?, cores[k].r_left())?;
            }
        }
    } else {
        for k in (1..n).rev() {
            let (f, r) = factor_horizontal(&cores[k], comm, opts.tree)?;
            let prev = &cores[k - 1];
            cores[k - 1] = TTCore::from_vertical(mul_upper_t(prev.vertical(), r.as_ref()), prev.r_left())?;
            if implicit {
                facs[k] = Some(f);
            } else {
                cores[k] = core_from_transposed(&f.explicit_q(comm)?, cores[k].r_right())?;
            }
        }
    }

    let end = if left { n - 1 } else { 0 };
    let norm = core_norm(&cores[end], comm)?;
    let mut report = RoundingReport {
        ranks: vec![],
        norm,
        eps: 0.0,
        tails: vec![],
        error_bound: 0.0,
        bound_violated: false,
        zero_input: false,
    };
    if norm < ZERO_NORM {
        let z = x.zeros_like();
        report.ranks = z.ranks();
        report.norm = 0.0;
        report.zero_input = true;
        return Ok((z, report));
    }
    let eps = if n > 1 { opts.eps0 / ((n - 1) as f64).sqrt() * norm } else { 0.0 };
    report.eps = eps;

    let mut tails = Vec::with_capacity(n.saturating_sub(1));
    if left {
        for k in (1..n).rev() {
            let (g, r) = factor_horizontal(&cores[k], comm, opts.tree)?;
            let t = truncated_svd(&r, eps, opts.max_rank)?;
            check_rank(&t, comm, opts)?;
            let u = g.apply_q(t.u_hat.as_ref(), comm)?;
            cores[k] = core_from_transposed(&u, cores[k].r_right())?;
            let sv = t.v_sigma();
            let prev = &cores[k - 1];
            let v = match facs[k - 1].take() {
                Some(f) => f.apply_q(sv.as_ref(), comm)?,
                None => matmul(prev.vertical(), sv.as_ref()),
            };
            cores[k - 1] = TTCore::from_vertical(v, prev.r_left())?;
            report.bound_violated |= t.capped;
            tails.push(t.discarded_tail);
        }
        tails.reverse();
    } else {
        for k in 0..n - 1 {
            let (g, r) = factor_vertical(&cores[k], comm, opts.tree)?;
            let t = truncated_svd(&r, eps, opts.max_rank)?;
            check_rank(&t, comm, opts)?;
            let u = g.apply_q(t.u_hat.as_ref(), comm)?;
            cores[k] = TTCore::from_vertical(u, cores[k].r_left())?;
            let sv = t.v_sigma();
            let next = &cores[k + 1];
            let h = match facs[k + 1].take() {
                Some(f) => f.apply_q(sv.as_ref(), comm)?.transpose(),
                None => matmul_tn(sv.as_ref(), next.horizontal()),
            };
            cores[k + 1] = TTCore::from_horizontal(h, next.r_right())?;
            report.bound_violated |= t.capped;
            tails.push(t.discarded_tail);
        }
    }
    report.error_bound = tails.iter().map(|t| t * t).sum::<f64>().sqrt();
    report.tails = tails;
    let out = DistTTTensor::from_parts_unchecked(x.dims().to_vec(), x.rank(), x.size(), cores);
    report.ranks = out.ranks();
    Ok((out, report))
}

/// Sequential rounding.
pub fn round(x: &TTTensor, opts: &RoundingOptions) -> Result<(TTTensor, RoundingReport)> {
    let (y, rep) = round_dist(&DistTTTensor::from_tt(x.clone()), &LocalComm, opts)?;
    Ok((y.into_tt()?, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names() {
        for v in RoundingVariant::ALL {
            assert_eq!(v.to_string().parse::<RoundingVariant>().unwrap(), v);
        }
        assert_eq!("rlri".parse::<RoundingVariant>().unwrap(), RoundingVariant::Rlri);
        assert!("LR".parse::<RoundingVariant>().is_err());
        assert_eq!(RoundingVariant::default(), RoundingVariant::Lrli);
    }

    #[test]
    fn bad_options() {
        let x = crate::tt::random_tt(&[2, 2], &[1, 2, 1], 0).unwrap();
        assert!(round(&x, &RoundingOptions::with_eps(-1.0)).is_err());
        assert!(round(&x, &RoundingOptions { max_rank: Some(0), ..Default::default() }).is_err());
    }
}
