use std::fmt;
use std::str::FromStr;

use crate::comm::Communicator;
use crate::error::{contract_err, Error, Result};
use crate::linalg::{mul_upper_t, upper_mul, Mat};
use crate::parallel::DistTTTensor;
use crate::tsqr::{tsqr_factor, TreeVariant, TsqrFactor};
use crate::tt::TTCore;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Left => "left",
            Direction::Right => "right",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            _ => Err(contract_err!("unknown direction {s:?}")),
        }
    }
}

/// TSQR of the transposed horizontal unfolding of a distributed core.
pub(crate) fn factor_horizontal(c: &TTCore, comm: &dyn Communicator, tree: TreeVariant) -> Result<(TsqrFactor, Mat)> {
    tsqr_factor(c.horizontal().transpose(), comm, tree)
}

/// TSQR of the vertical unfolding of a distributed core.
pub(crate) fn factor_vertical(c: &TTCore, comm: &dyn Communicator, tree: TreeVariant) -> Result<(TsqrFactor, Mat)> {
    tsqr_factor(c.vertical().to_owned(), comm, tree)
}

/// Core whose horizontal unfolding is `qᵀ`.
pub(crate) fn core_from_transposed(q: &Mat, r_right: usize) -> Result<TTCore> {
    TTCore::from_horizontal(q.transpose(), r_right)
}

/// Right-orthonormalizes from the last core down to the second; the
/// triangular factors are absorbed into the preceding core.
pub fn right_orthonormalize(x: &DistTTTensor, comm: &dyn Communicator, tree: TreeVariant) -> Result<DistTTTensor> {
    x.check_comm(comm)?;
    let mut cores = x.local_cores().to_vec();
    for n in (1..cores.len()).rev() {
        let (f, r) = factor_horizontal(&cores[n], comm, tree)?;
        let q = f.explicit_q(comm)?;
        cores[n] = core_from_transposed(&q, cores[n].r_right())?;
        let prev = &cores[n - 1];
        cores[n - 1] = TTCore::from_vertical(mul_upper_t(prev.vertical(), r.as_ref()), prev.r_left())?;
    }
    Ok(DistTTTensor::from_parts_unchecked(x.dims().to_vec(), x.rank(), x.size(), cores))
}

/// Left-orthonormalizes from the first core up to the second to last; the
/// triangular factors are absorbed into the following core.
pub fn left_orthonormalize(x: &DistTTTensor, comm: &dyn Communicator, tree: TreeVariant) -> Result<DistTTTensor> {
    x.check_comm(comm)?;
    let mut cores = x.local_cores().to_vec();
    for n in 0..cores.len().saturating_sub(1) {
        let (f, r) = factor_vertical(&cores[n], comm, tree)?;
        let q = f.explicit_q(comm)?;
        cores[n] = TTCore::from_vertical(q, cores[n].r_left())?;
        let next = &cores[n + 1];
        cores[n + 1] = TTCore::from_horizontal(upper_mul(r.as_ref(), next.horizontal()), next.r_right())?;
    }
    Ok(DistTTTensor::from_parts_unchecked(x.dims().to_vec(), x.rank(), x.size(), cores))
}

pub fn orthonormalize(x: &DistTTTensor, comm: &dyn Communicator, direction: Direction) -> Result<DistTTTensor> {
    match direction {
        Direction::Left => left_orthonormalize(x, comm, TreeVariant::default()),
        Direction::Right => right_orthonormalize(x, comm, TreeVariant::default()),
    }
}
