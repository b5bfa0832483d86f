use crate::comm::Communicator;
use crate::error::{contract_err, shape_err, Result};
use crate::trace;
use crate::tt::random::{check_rank_chain, random_core_slices};
use crate::tt::tensor::{ranks_of, validate_chain};
use crate::tt::{TTCore, TTTensor};

/// Slice range `[lo, hi)` of a mode of size `dim` owned by rank `p` of `np`.
pub fn block_range(dim: usize, p: usize, np: usize) -> (usize, usize) {
    let chunk = dim.div_ceil(np);
    ((p * chunk).min(dim), ((p + 1) * chunk).min(dim))
}

/// The local part of a tensor train distributed by slices: rank `p` owns
/// slices `block_range(I_n, p, P)` of every core. The communicator itself
/// is passed to each operation.
#[derive(Clone, Debug, PartialEq)]
pub struct DistTTTensor {
    dims: Vec<usize>,
    rank: usize,
    size: usize,
    cores: Vec<TTCore>,
}

impl DistTTTensor {
    /// Wraps local slabs, checking them against the block rule.
    pub fn from_local(dims: Vec<usize>, rank: usize, size: usize, cores: Vec<TTCore>) -> Result<Self> {
        if dims.len() != cores.len() {
            return Err(shape_err!("{} mode sizes for {} cores", dims.len(), cores.len()));
        }
        if rank >= size {
            return Err(contract_err!("rank {rank} outside a group of {size}"));
        }
        validate_chain(&cores)?;
        for (n, (&d, c)) in dims.iter().zip(&cores).enumerate() {
            let (lo, hi) = block_range(d, rank, size);
            if c.dim() != hi - lo {
                return Err(shape_err!("core {n} on rank {rank} should hold {} slices, holds {}", hi - lo, c.dim()));
            }
        }
        Ok(DistTTTensor { dims, rank, size, cores })
    }

    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, rank: usize, size: usize, cores: Vec<TTCore>) -> Self {
        debug_assert!(validate_chain(&cores).is_ok());
        DistTTTensor { dims, rank, size, cores }
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ranks(&self) -> Vec<usize> {
        ranks_of(&self.cores)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn local_cores(&self) -> &[TTCore] {
        &self.cores
    }

    pub(crate) fn local_cores_mut(&mut self) -> &mut Vec<TTCore> {
        &mut self.cores
    }

    pub fn into_local_cores(self) -> Vec<TTCore> {
        self.cores
    }

    /// Global slice range of mode `n` held here.
    pub fn local_range(&self, n: usize) -> (usize, usize) {
        block_range(self.dims[n], self.rank, self.size)
    }

    pub fn check_comm(&self, comm: &dyn Communicator) -> Result<()> {
        if comm.rank() != self.rank || comm.size() != self.size {
            return Err(contract_err!(
                "tensor distributed as rank {}/{} used on rank {}/{}",
                self.rank,
                self.size,
                comm.rank(),
                comm.size()
            ));
        }
        Ok(())
    }

    /// Fails unless `other` has the same dims and distribution.
    pub fn check_compatible(&self, other: &DistTTTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(shape_err!("dims {:?} and {:?} differ", self.dims, other.dims));
        }
        if self.rank != other.rank || self.size != other.size {
            return Err(contract_err!("operands are distributed over different groups"));
        }
        Ok(())
    }

    /// A single-rank view of a sequential tensor.
    pub fn from_tt(t: TTTensor) -> Self {
        DistTTTensor { dims: t.dims(), rank: 0, size: 1, cores: t.into_cores() }
    }

    /// Converts a single-rank tensor back to a sequential one.
    pub fn into_tt(self) -> Result<TTTensor> {
        if self.size != 1 {
            return Err(contract_err!("into_tt needs a single-rank tensor; use gather"));
        }
        TTTensor::new(self.cores)
    }

    /// Rank-1 zero tensor with the same dims and distribution.
    pub fn zeros_like(&self) -> Self {
        let cores = (0..self.order())
            .map(|n| {
                let (lo, hi) = self.local_range(n);
                TTCore::zeros(1, hi - lo, 1)
            })
            .collect();
        DistTTTensor { dims: self.dims.clone(), rank: self.rank, size: self.size, cores }
    }
}

fn check_size(dims: &[usize], comm: &dyn Communicator, allow_idle: bool) -> Result<()> {
    let min = dims.iter().copied().min().unwrap_or(0);
    if comm.size() > min && !allow_idle {
        return Err(contract_err!(
            "{} ranks exceed the smallest mode size {min}; enable idle ranks to allow this",
            comm.size()
        ));
    }
    Ok(())
}

/// Takes this rank's slabs from a tensor replicated on every rank.
pub fn distribute(t: &TTTensor, comm: &dyn Communicator, allow_idle: bool) -> Result<DistTTTensor> {
    let dims = t.dims();
    check_size(&dims, comm, allow_idle)?;
    let (p, np) = (comm.rank(), comm.size());
    let cores = t
        .cores()
        .iter()
        .map(|c| {
            let (lo, hi) = block_range(c.dim(), p, np);
            c.slice_range(lo, hi)
        })
        .collect();
    Ok(DistTTTensor { dims, rank: p, size: np, cores })
}

/// Reassembles the full tensor on every rank (bitwise exact).
pub fn gather(dt: &DistTTTensor, comm: &dyn Communicator) -> Result<TTTensor> {
    dt.check_comm(comm)?;
    let _g = trace::phase(trace::OTHER);
    let mut cores = Vec::with_capacity(dt.order());
    for c in &dt.cores {
        let mut parts = Vec::with_capacity(dt.size);
        for q in 0..dt.size {
            let data = comm.broadcast(q, c.data())?;
            let dim = data.len() / (c.r_left() * c.r_right());
            parts.push(TTCore::new(c.r_left(), dim, c.r_right(), data)?);
        }
        cores.push(TTCore::concat(&parts)?);
    }
    TTTensor::new(cores)
}

/// Generates this rank's slabs of `random_tt(dims, ranks, seed)` directly.
pub fn random_dist(
    dims: &[usize],
    ranks: &[usize],
    seed: u64,
    comm: &dyn Communicator,
    allow_idle: bool,
) -> Result<DistTTTensor> {
    check_rank_chain(dims, ranks)?;
    check_size(dims, comm, allow_idle)?;
    let (p, np) = (comm.rank(), comm.size());
    let cores = dims
        .iter()
        .enumerate()
        .map(|(n, &d)| {
            let (lo, hi) = block_range(d, p, np);
            random_core_slices(seed, n, ranks[n], ranks[n + 1], lo, hi)
        })
        .collect();
    Ok(DistTTTensor { dims: dims.to_vec(), rank: p, size: np, cores })
}

/// Frobenius norm of one distributed core.
pub(crate) fn core_norm(c: &TTCore, comm: &dyn Communicator) -> Result<f64> {
    let local: f64 = c.data().iter().map(|x| x * x).sum();
    trace::add_flops(2 * c.data().len() as u64);
    let s = comm.allreduce_sum(&[local])?;
    Ok(s[0].max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_rule_examples() {
        let sizes = |dim, np| (0..np).map(|p| block_range(dim, p, np)).map(|(a, b)| b - a).collect::<Vec<_>>();
        assert_eq!(sizes(8, 4), vec![2, 2, 2, 2]);
        assert_eq!(sizes(8, 3), vec![3, 3, 2]);
        assert_eq!(sizes(3, 5), vec![1, 1, 1, 0, 0]);
        assert_eq!(block_range(5, 3, 4), (5, 5));
    }
}
