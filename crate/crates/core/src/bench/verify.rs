use std::fmt;

use crate::comm::{Communicator, SimWorld};
use crate::error::{Error, Result};
use crate::linalg::{gram, Mat};
use crate::ops::{add_dist, hadamard_dist, inner_product_dist, norm_dist, scale_dist, NormMethod};
use crate::parallel::{distribute, gather, right_orthonormalize, round_dist, RoundingOptions, RoundingVariant};
use crate::tsqr::TreeVariant;
use crate::tt::{random_tt, DenseTensor, TTTensor};

/// Tolerance on relative differences from the dense reference.
pub const TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub p: usize,
    pub error: f64,
    pub limit: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error.is_finite() && self.error <= self.limit
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} P={} err={:.3e} limit={:.1e}", self.name, self.p, self.error, self.limit)
    }
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

fn dense_rel(got: &TTTensor, want: &DenseTensor) -> Result<f64> {
    got.full()?.rel_diff(want)
}

/// Distributed results on every rank, compared with dense references built
/// from the full tensors.
fn checks_on(p: usize, x: &TTTensor, y: &TTTensor) -> Result<Vec<Check>> {
    let (xd, yd) = (x.full()?, y.full()?);
    let outs = SimWorld::new(p).run(|c| one_rank(c, x, y, &xd, &yd));
    let mut first: Option<Vec<(String, f64, f64)>> = None;
    for o in outs {
        let v = o.value?;
        match &first {
            None => first = Some(v),
            // replicated quantities must agree bitwise across ranks
            Some(f) if f.iter().zip(&v).any(|(a, b)| a.1.to_bits() != b.1.to_bits()) => {
                return Err(Error::Numeric(format!("ranks disagree at P={p}")));
            }
            Some(_) => {}
        }
    }
    Ok(first.unwrap_or_default().into_iter().map(|(name, error, limit)| Check { name, p, error, limit }).collect())
}

fn one_rank(
    c: &dyn Communicator,
    x: &TTTensor,
    y: &TTTensor,
    xd: &DenseTensor,
    yd: &DenseTensor,
) -> Result<Vec<(String, f64, f64)>> {
    let dx = distribute(x, c, true)?;
    let dy = distribute(y, c, true)?;
    let mut out = Vec::new();

    let sum = gather(&add_dist(&dx, &dy)?, c)?;
    out.push(("add".into(), dense_rel(&sum, &xd.zip_with(yd, |a, b| a + b)?)?, TOL));
    let scaled = gather(&scale_dist(&dx, -2.5), c)?;
    out.push(("scale".into(), dense_rel(&scaled, &xd.zip_with(xd, |a, _| -2.5 * a)?)?, TOL));
    let prod = gather(&hadamard_dist(&dx, &dy)?, c)?;
    out.push(("hadamard".into(), dense_rel(&prod, &xd.zip_with(yd, |a, b| a * b)?)?, TOL));

    out.push(("dot".into(), rel(inner_product_dist(&dx, &dy, c)?, xd.dot(yd)?), TOL));
    for m in [NormMethod::InnerProduct, NormMethod::Symmetric, NormMethod::Ortho] {
        let got = norm_dist(&dx, c, m)?.value;
        out.push((format!("norm/{m}"), rel(got, xd.frobenius_norm()), TOL));
    }

    for tree in [TreeVariant::Butterfly, TreeVariant::Binomial] {
        let o = gather(&right_orthonormalize(&dx, c, tree)?, c)?;
        out.push((format!("ortho/{tree:?}/value"), dense_rel(&o, xd)?, TOL));
        let mut worst = 0.0f64;
        for core in &o.cores()[1..] {
            let h = core.horizontal().transpose();
            worst = worst.max(gram(h.as_ref()).max_abs_diff(&Mat::identity(h.cols())));
        }
        out.push((format!("ortho/{tree:?}/orthonormal"), worst, TOL));
    }

    // X + X stored with doubled ranks; rounding must recover X within the bound
    let doubled = add_dist(&dx, &dx)?;
    let twice = xd.zip_with(xd, |a, _| 2.0 * a)?;
    for v in RoundingVariant::ALL {
        for eps0 in [1e-4, 1e-10] {
            let (z, rep) = round_dist(&doubled, c, &RoundingOptions { eps0, variant: v, ..Default::default() })?;
            let z = gather(&z, c)?;
            let err = dense_rel(&z, &twice)?;
            out.push((format!("round/{v}/eps={eps0:e}"), err, eps0 * (1.0 + 1e-6) + 1e-14));
            let over = z.ranks().iter().zip(x.ranks()).any(|(a, b)| *a > b);
            out.push((format!("round/{v}/eps={eps0:e}/ranks"), if over { 1.0 } else { 0.0 }, 0.0));
            if rep.bound_violated {
                out.push((format!("round/{v}/eps={eps0:e}/report"), 1.0, 0.0));
            }
        }
    }
    Ok(out)
}

/// Runs the oracle suite; `quick` uses fewer ranks and smaller tensors.
pub fn verify(quick: bool, seed: u64) -> Result<Vec<Check>> {
    let (dims, ranks, ps): (Vec<usize>, Vec<usize>, Vec<usize>) = if quick {
        (vec![6, 5, 7, 4], vec![1, 3, 4, 2, 1], vec![1, 3])
    } else {
        (vec![9, 8, 7, 6, 5], vec![1, 3, 5, 4, 3, 1], vec![1, 2, 3, 4, 5, 8])
    };
    let x = random_tt(&dims, &ranks, seed)?;
    let y = random_tt(&dims, &ranks, seed.wrapping_add(1))?;
    let mut all = Vec::new();
    for p in ps {
        all.extend(checks_on(p, &x, &y)?);
    }
    Ok(all)
}
