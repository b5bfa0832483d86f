use std::fmt;
use std::str::FromStr;

use crate::comm::{Communicator, LocalComm};
use crate::error::{contract_err, Error, Result};
use crate::linalg::{gram, matmul, matmul_tn, pivoted_cholesky, upper_mul, CholOutcome, Mat};
use crate::parallel::{dist::core_norm, right_orthonormalize, DistTTTensor};
use crate::tsqr::TreeVariant;
use crate::tt::{TTCore, TTTensor};

/// Norms below this are reported as exactly zero.
pub const ZERO_NORM: f64 = 1e-300;

/// Relative tolerance on negative Schur diagonals before the symmetric
/// path gives up and falls back to the general contraction.
pub const INDEFINITE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NormMethod {
    /// `sqrt(<x, x>)` by the general contraction.
    InnerProduct,
    /// Symmetric contraction through pivoted Cholesky factors of the carry.
    #[default]
    Symmetric,
    /// Right-orthonormalize, then the Frobenius norm of the first core.
    Ortho,
}

impl fmt::Display for NormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMethod::InnerProduct => "innerprod",
            NormMethod::Symmetric => "innerprod_sym",
            NormMethod::Ortho => "ortho",
        })
    }
}

impl FromStr for NormMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "innerprod" => Ok(NormMethod::InnerProduct),
            "innerprod_sym" | "sym" => Ok(NormMethod::Symmetric),
            "ortho" => Ok(NormMethod::Ortho),
            _ => Err(contract_err!("unknown norm method {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub value: f64,
    pub method: NormMethod,
    /// Set when the symmetric path met an indefinite carry and the value
    /// was recomputed by the general contraction.
    pub fell_back: bool,
}

fn check_pair(x: &DistTTTensor, y: &DistTTTensor, comm: &dyn Communicator) -> Result<()> {
    x.check_compatible(y)?;
    x.check_comm(comm)
}

/// `<x, y>` of two identically distributed tensors; one allreduce per mode.
pub fn inner_product_dist(x: &DistTTTensor, y: &DistTTTensor, comm: &dyn Communicator) -> Result<f64> {
    check_pair(x, y, comm)?;
    let mut w = Mat::identity(1);
    for (cx, cy) in x.local_cores().iter().zip(y.local_cores()) {
        // H(Z) = W H(X), then W = V(Y)ᵀ V(Z)
        let hz = matmul(w.as_ref(), cx.horizontal());
        let z = TTCore::from_horizontal(hz, cx.r_right())?;
        let local = matmul_tn(cy.vertical(), z.vertical());
        let summed = comm.allreduce_sum(local.data())?;
        w = Mat::from_col_major(local.rows(), local.cols(), summed);
    }
    Ok(w[(0, 0)])
}

fn sym_norm_sq(x: &DistTTTensor, comm: &dyn Communicator) -> Result<Option<f64>> {
    let mut w = Mat::identity(1);
    for c in x.local_cores() {
        let f = match pivoted_cholesky(&w, INDEFINITE_TOL) {
            CholOutcome::Factored(f) => f,
            CholOutcome::Indefinite { .. } => return Ok(None),
        };
        let h = c.horizontal();
        let permuted = Mat::from_fn(h.rows(), h.cols(), |i, j| h.get(f.perm[i], j));
        let hz = upper_mul(f.lt.as_ref(), permuted.as_ref());
        let z = TTCore::from_horizontal(hz, c.r_right())?;
        let local = gram(z.vertical());
        let summed = comm.allreduce_sum(local.data())?;
        w = Mat::from_col_major(local.rows(), local.cols(), summed);
    }
    Ok(Some(w[(0, 0)]))
}

pub fn norm_dist(x: &DistTTTensor, comm: &dyn Communicator, method: NormMethod) -> Result<NormReport> {
    x.check_comm(comm)?;
    if x.order() == 0 {
        return Err(contract_err!("norm of an empty tensor train"));
    }
    let (value, fell_back) = match method {
        NormMethod::InnerProduct => (inner_product_dist(x, x, comm)?.max(0.0).sqrt(), false),
        NormMethod::Symmetric => match sym_norm_sq(x, comm)? {
            Some(s) => (s.max(0.0).sqrt(), false),
            None => (inner_product_dist(x, x, comm)?.max(0.0).sqrt(), true),
        },
        NormMethod::Ortho => {
            let y = right_orthonormalize(x, comm, TreeVariant::default())?;
            (core_norm(&y.local_cores()[0], comm)?, false)
        }
    };
    let value = if value < ZERO_NORM { 0.0 } else { value };
    Ok(NormReport { value, method, fell_back })
}

pub fn inner_product(x: &TTTensor, y: &TTTensor) -> Result<f64> {
    inner_product_dist(&DistTTTensor::from_tt(x.clone()), &DistTTTensor::from_tt(y.clone()), &LocalComm)
}

pub fn norm(x: &TTTensor, method: NormMethod) -> Result<NormReport> {
    norm_dist(&DistTTTensor::from_tt(x.clone()), &LocalComm, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones() -> TTTensor {
        TTTensor::new(vec![
            TTCore::from_fn(1, 2, 2, |_, _, _| 1.0),
            TTCore::from_fn(2, 2, 2, |_, _, _| 1.0),
            TTCore::from_fn(2, 2, 1, |_, _, _| 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn all_ones_closed_form() {
        let x = ones();
        assert_eq!(inner_product(&x, &x).unwrap(), 128.0);
        for m in [NormMethod::InnerProduct, NormMethod::Symmetric, NormMethod::Ortho] {
            let r = norm(&x, m).unwrap();
            assert!((r.value - 128f64.sqrt()).abs() < 1e-12, "{m}: {}", r.value);
            assert!(!r.fell_back);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in [NormMethod::InnerProduct, NormMethod::Symmetric, NormMethod::Ortho] {
            assert_eq!(m.to_string().parse::<NormMethod>().unwrap(), m);
        }
        assert!("fast".parse::<NormMethod>().is_err());
    }
}
