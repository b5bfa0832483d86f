use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{shape_err, Result};
use crate::tt::core::TTCore;
use crate::tt::tensor::TTTensor;

/// Slices `lo..hi` of core `n` of the random tensor identified by `seed`.
///
/// Every global slice draws from its own stream, so any partition of the
/// slices reproduces the same entries.
pub fn random_core_slices(seed: u64, n: usize, r_left: usize, r_right: usize, lo: usize, hi: usize) -> TTCore {
    let mut core = TTCore::zeros(r_left, hi - lo, r_right);
    for i in lo..hi {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((n as u64) << 32) | i as u64);
        for b in 0..r_right {
            for a in 0..r_left {
                core.set(a, i - lo, b, rng.sample(StandardNormal));
            }
        }
    }
    core
}

pub fn check_rank_chain(dims: &[usize], ranks: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(shape_err!("a tensor train needs at least one mode"));
    }
    if ranks.len() != dims.len() + 1 {
        return Err(shape_err!("{} modes need {} ranks, got {}", dims.len(), dims.len() + 1, ranks.len()));
    }
    if ranks[0] != 1 || ranks[dims.len()] != 1 {
        return Err(shape_err!("end ranks must be 1, got {:?}", ranks));
    }
    if ranks.contains(&0) || dims.contains(&0) {
        return Err(shape_err!("ranks and mode sizes must be positive"));
    }
    Ok(())
}

/// Tensor train with i.i.d. standard normal core entries.
pub fn random_tt(dims: &[usize], ranks: &[usize], seed: u64) -> Result<TTTensor> {
    check_rank_chain(dims, ranks)?;
    let cores =
        dims.iter().enumerate().map(|(n, &d)| random_core_slices(seed, n, ranks[n], ranks[n + 1], 0, d)).collect();
    TTTensor::new(cores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaped() {
        let a = random_tt(&[2, 2], &[1, 3, 1], 9).unwrap();
        let b = random_tt(&[2, 2], &[1, 3, 1], 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.core(0).shape(), (1, 2, 3));
        assert_eq!(a.core(1).shape(), (3, 2, 1));
        assert_ne!(a, random_tt(&[2, 2], &[1, 3, 1], 10).unwrap());
    }

    #[test]
    fn partitions_reproduce_the_core() {
        let full = random_core_slices(4, 2, 3, 2, 0, 7);
        let parts = [random_core_slices(4, 2, 3, 2, 0, 3), random_core_slices(4, 2, 3, 2, 3, 7)];
        assert_eq!(TTCore::concat(&parts).unwrap(), full);
    }

    #[test]
    fn malformed_chains_are_rejected() {
        assert!(random_tt(&[2, 2], &[2, 3, 1], 0).is_err());
        assert!(random_tt(&[2, 2], &[1, 1], 0).is_err());
        assert!(random_tt(&[], &[1], 0).is_err());
    }

    #[test]
    fn sample_mean_is_near_zero() {
        let c = random_core_slices(1, 0, 10, 100, 0, 100);
        let n = c.data().len() as f64;
        let mean = c.data().iter().sum::<f64>() / n;
        let var = c.data().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 3.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }
}
