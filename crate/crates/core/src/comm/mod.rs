//! SPMD message-passing contract used by every parallel kernel.
//!
//! Payloads are plain `f64` slices; kernels always know the shapes they
//! exchange from replicated metadata.

mod local;
mod sim;

pub use local::LocalComm;
pub use sim::{RankOutput, SimComm, SimWorld};

use crate::trace::Trace;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommError {
    #[error("communicator contract violated: {0}")]
    Contract(String),

    #[error("rank {rank} timed out waiting for a message from rank {from} (likely deadlock)")]
    Deadlock { rank: usize, from: usize },

    #[error("rank {rank} lost its peer {from} before a message arrived")]
    Disconnected { rank: usize, from: usize },

    #[error("rank {rank} expected {expected} from rank {from} but received {got}")]
    Mismatch { rank: usize, from: usize, expected: String, got: String },

    #[error("operation not supported by this backend: {0}")]
    Capability(String),

    #[error("runtime backend failure: {0}")]
    Runtime(String),
}

pub type CommResult<T> = std::result::Result<T, CommError>;

/// One endpoint of a group of `size()` ranks.
///
/// Collectives must be entered by every rank in the same order.
pub trait Communicator {
    fn rank(&self) -> usize;
    fn size(&self) -> usize;

    fn send(&self, dest: usize, data: &[f64]) -> CommResult<()>;
    fn recv(&self, src: usize) -> CommResult<Vec<f64>>;

    /// Symmetric exchange with `peer`; returns the peer's payload.
    fn sendrecv(&self, peer: usize, out: &[f64]) -> CommResult<Vec<f64>> {
        self.check_peer(peer)?;
        if peer == self.rank() {
            return Err(CommError::Contract(format!("rank {peer} cannot exchange with itself")));
        }
        self.send(peer, out)?;
        self.recv(peer)
    }

    /// Elementwise sum over all ranks. The reduction tree is fixed, so every
    /// rank receives bitwise identical results.
    fn allreduce_sum(&self, local: &[f64]) -> CommResult<Vec<f64>>;

    /// Returns `root`'s payload on every rank; other ranks' payloads are
    /// ignored.
    fn broadcast(&self, root: usize, payload: &[f64]) -> CommResult<Vec<f64>>;

    /// Counters recorded on this rank so far.
    fn message_trace(&self) -> CommResult<Trace>;

    fn check_peer(&self, peer: usize) -> CommResult<()> {
        if peer >= self.size() {
            return Err(CommError::Contract(format!("rank {peer} out of range for a group of {}", self.size())));
        }
        Ok(())
    }
}

/// Number of reduction steps of the binomial tree over `p` ranks.
pub(crate) fn tree_depth(p: usize) -> u32 {
    usize::BITS - (p.max(1) - 1).leading_zeros()
}

/// Sequential replay of the reduction order used by [`Communicator::allreduce_sum`].
///
/// At step `s`, rank `p` with `p mod 2^(s+1) == 0` absorbs the partial sum of
/// rank `p + 2^s`, left operand first.
pub fn tree_sum(locals: &[Vec<f64>]) -> Vec<f64> {
    let mut parts: Vec<Vec<f64>> = locals.to_vec();
    let p = parts.len();
    for s in 0..tree_depth(p) {
        let h = 1usize << s;
        let mut r = 0;
        while r + h < p {
            let right = std::mem::take(&mut parts[r + h]);
            for (a, b) in parts[r].iter_mut().zip(right) {
                *a += b;
            }
            r += 2 * h;
        }
    }
    parts.into_iter().next().unwrap_or_default()
}

/// Binomial reduce to rank 0 followed by a binomial broadcast, written
/// against point-to-point calls so every backend shares the same order.
pub(crate) fn tree_allreduce<C: Communicator + ?Sized>(c: &C, local: &[f64]) -> CommResult<Vec<f64>> {
    let (p, me) = (c.size(), c.rank());
    let mut acc = local.to_vec();
    for s in 0..tree_depth(p) {
        let h = 1usize << s;
        if me % (2 * h) == h {
            c.send(me - h, &acc)?;
            break;
        } else if me % (2 * h) == 0 && me + h < p {
            let other = c.recv(me + h)?;
            if other.len() != acc.len() {
                return Err(CommError::Contract(format!(
                    "allreduce length mismatch: rank {me} has {}, rank {} has {}",
                    acc.len(),
                    me + h,
                    other.len()
                )));
            }
            for (a, b) in acc.iter_mut().zip(other) {
                *a += b;
            }
        }
    }
    tree_broadcast(c, 0, &acc)
}

/// Binomial broadcast from `root` over ranks relabelled relative to it.
pub(crate) fn tree_broadcast<C: Communicator + ?Sized>(c: &C, root: usize, payload: &[f64]) -> CommResult<Vec<f64>> {
    c.check_peer(root)?;
    let p = c.size();
    let rel = (c.rank() + p - root) % p;
    let depth = tree_depth(p);
    let mut data = if rel == 0 { Some(payload.to_vec()) } else { None };
    for s in (0..depth).rev() {
        let h = 1usize << s;
        if rel.is_multiple_of(2 * h) {
            if rel + h < p {
                let buf = data.as_ref().expect("sender holds the payload");
                c.send((rel + h + root) % p, buf)?;
            }
        } else if rel % (2 * h) == h {
            data = Some(c.recv((rel - h + root) % p)?);
        }
    }
    Ok(data.expect("every rank receives the broadcast"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_is_ceil_log2() {
        let d: Vec<u32> = (1..=9).map(tree_depth).collect();
        assert_eq!(d, vec![0, 1, 2, 2, 3, 3, 3, 3, 4]);
    }

    #[test]
    fn tree_sum_order() {
        let v = vec![vec![1.0], vec![2.0], vec![3.0]];
        assert_eq!(tree_sum(&v), vec![6.0]);
        // ((a+b)+(c+d)) differs from a left fold for these values
        let v = vec![vec![1e16], vec![1.0], vec![-1e16], vec![1.0]];
        assert_eq!(tree_sum(&v), vec![0.0]);
    }
}
