use crate::error::{shape_err, Error, Result};
use crate::tt::core::TTCore;
use crate::tt::dense::{checked_size, DenseTensor};

/// Default limit on the number of entries `full` will materialize.
pub const FULL_GUARD: usize = 10_000_000;

/// A tensor train: cores whose bond ranks chain, with unit end ranks.
#[derive(Clone, Debug, PartialEq)]
pub struct TTTensor {
    cores: Vec<TTCore>,
}

impl TTTensor {
    pub fn new(cores: Vec<TTCore>) -> Result<Self> {
        validate_chain(&cores)?;
        if let Some(n) = cores.iter().position(|c| c.dim() == 0) {
            return Err(shape_err!("mode {n} has size zero"));
        }
        Ok(TTTensor { cores })
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[TTCore] {
        &self.cores
    }

    pub fn core(&self, n: usize) -> &TTCore {
        &self.cores[n]
    }

    pub(crate) fn cores_mut(&mut self) -> &mut [TTCore] {
        &mut self.cores
    }

    pub fn into_cores(self) -> Vec<TTCore> {
        self.cores
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(TTCore::dim).collect()
    }

    /// `[R_0, R_1, ..., R_N]` with `R_0 = R_N = 1`.
    pub fn ranks(&self) -> Vec<usize> {
        ranks_of(&self.cores)
    }

    /// Total number of stored core entries.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.data().len()).sum()
    }

    /// Chain product of the selected slices, evaluated left to right.
    pub fn entry(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() != self.order() {
            return Err(shape_err!("index of order {} for a tensor of order {}", idx.len(), self.order()));
        }
        for (n, (&i, c)) in idx.iter().zip(&self.cores).enumerate() {
            if i >= c.dim() {
                return Err(Error::Bounds(format!("index {i} out of range for mode {n} of size {}", c.dim())));
            }
        }
        let mut v = vec![1.0];
        for (&i, c) in idx.iter().zip(&self.cores) {
            v = row_times_slice(&v, c, i);
        }
        Ok(v[0])
    }

    /// Dense reconstruction with the default guard.
    pub fn full(&self) -> Result<DenseTensor> {
        self.full_with_limit(FULL_GUARD)
    }

    /// Dense reconstruction. Each entry is computed with exactly the same
    /// operations as [`TTTensor::entry`]; shared prefixes are reused.
    pub fn full_with_limit(&self, max_entries: usize) -> Result<DenseTensor> {
        let dims = self.dims();
        let total = checked_size(&dims, max_entries)?;
        let mut data = vec![0.0; total];
        let mut strides = vec![1usize; dims.len()];
        for n in 1..dims.len() {
            strides[n] = strides[n - 1] * dims[n - 1];
        }
        let mut stack: Vec<Vec<f64>> = vec![vec![1.0]];
        self.fill(0, 0, &strides, &mut stack, &mut data);
        DenseTensor::new(dims, data)
    }

    fn fill(&self, n: usize, offset: usize, strides: &[usize], stack: &mut Vec<Vec<f64>>, out: &mut [f64]) {
        if n == self.order() {
            out[offset] = stack.last().expect("prefix stack is never empty")[0];
            return;
        }
        let c = &self.cores[n];
        for i in 0..c.dim() {
            let v = row_times_slice(stack.last().expect("prefix stack is never empty"), c, i);
            stack.push(v);
            self.fill(n + 1, offset + i * strides[n], strides, stack, out);
            stack.pop();
        }
    }
}

/// `vᵀ X(:, i, :)` with the accumulation order used for every entry.
fn row_times_slice(v: &[f64], c: &TTCore, i: usize) -> Vec<f64> {
    let rl = c.r_left();
    (0..c.r_right())
        .map(|b| {
            let s = c.offset(0, i, b);
            let col = &c.data()[s..s + rl];
            v.iter().zip(col).fold(0.0, |acc, (x, y)| acc + x * y)
        })
        .collect()
}

pub(crate) fn ranks_of(cores: &[TTCore]) -> Vec<usize> {
    let mut r: Vec<usize> = cores.iter().map(TTCore::r_left).collect();
    r.push(cores.last().map_or(1, TTCore::r_right));
    r
}

pub(crate) fn validate_chain(cores: &[TTCore]) -> Result<()> {
    let first = cores.first().ok_or_else(|| shape_err!("a tensor train needs at least one core"))?;
    let last = cores.last().expect("nonempty");
    if first.r_left() != 1 || last.r_right() != 1 {
        return Err(shape_err!("end ranks must be 1, got {} and {}", first.r_left(), last.r_right()));
    }
    for (n, w) in cores.windows(2).enumerate() {
        if w[0].r_right() != w[1].r_left() {
            return Err(shape_err!(
                "core {n} has right rank {} but core {} has left rank {}",
                w[0].r_right(),
                n + 1,
                w[1].r_left()
            ));
        }
    }
    if let Some(n) = cores.iter().position(|c| c.r_left() == 0 || c.r_right() == 0) {
        return Err(shape_err!("core {n} has a zero rank"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(dims: &[usize], ranks: &[usize]) -> TTTensor {
        let cores =
            dims.iter().enumerate().map(|(n, &d)| TTCore::from_fn(ranks[n], d, ranks[n + 1], |_, _, _| 1.0)).collect();
        TTTensor::new(cores).unwrap()
    }

    #[test]
    fn all_ones_chains() {
        assert_eq!(ones(&[3, 2, 4], &[1, 1, 1, 1]).entry(&[2, 1, 3]).unwrap(), 1.0);
        let t = ones(&[2, 2, 2], &[1, 2, 2, 1]);
        assert_eq!(t.entry(&[0, 1, 1]).unwrap(), 4.0);
        let f = t.full().unwrap();
        assert_eq!(f.data(), &[4.0; 8]);
    }

    #[test]
    fn single_core_full() {
        let t = TTTensor::new(vec![TTCore::new(1, 2, 1, vec![1.0, 0.0]).unwrap()]).unwrap();
        assert_eq!(t.full().unwrap().data(), &[1.0, 0.0]);
    }

    #[test]
    fn chain_validation() {
        let bad_end = vec![TTCore::zeros(2, 2, 1)];
        assert!(matches!(TTTensor::new(bad_end), Err(Error::Shape(_))));
        let broken = vec![TTCore::zeros(1, 2, 2), TTCore::zeros(3, 2, 1)];
        assert!(matches!(TTTensor::new(broken), Err(Error::Shape(_))));
        assert!(TTTensor::new(vec![]).is_err());
    }

    #[test]
    fn entry_bounds_and_guard() {
        let t = ones(&[2, 3], &[1, 2, 1]);
        assert!(matches!(t.entry(&[0, 3]), Err(Error::Bounds(_))));
        assert!(matches!(t.entry(&[0]), Err(Error::Shape(_))));
        assert!(matches!(t.full_with_limit(5), Err(Error::Capacity(_))));
        assert_eq!(t.ranks(), vec![1, 2, 1]);
        assert_eq!(t.dims(), vec![2, 3]);
    }
}
