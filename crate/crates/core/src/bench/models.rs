use crate::error::{contract_err, Result};

/// Shape of a synthetic benchmark tensor. `rank` is the bond rank of the
/// random tensor `X`; the operations run on `Y = 2X − X`, whose stored
/// ranks are twice as large.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticModel {
    pub name: String,
    pub dims: Vec<usize>,
    pub rank: usize,
    pub description: &'static str,
}

impl SyntheticModel {
    /// The three reference shapes, unscaled.
    pub fn reference(id: u8) -> Result<Self> {
        let (dims, rank, description) = match id {
            1 => (vec![2000; 50], 50, "50 modes of size 2K, rank 50"),
            2 => {
                let mut d = vec![50_000; 16];
                d[0] = 100_000_000;
                d[15] = 1_000_000;
                (d, 30, "16 modes: 100M, fourteen of 50K, 1M; rank 30")
            }
            3 => (vec![2_000_000; 30], 30, "30 modes of size 2M, rank 30"),
            _ => return Err(contract_err!("unknown model {id}; expected 1, 2 or 3")),
        };
        Ok(SyntheticModel { name: format!("model{id}"), dims, rank, description })
    }

    /// Multiplies every mode size by `factor` (floor, at least 4). Ranks
    /// are left alone.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor <= 0.0 {
            return Err(contract_err!("scale must be positive and finite, got {factor}"));
        }
        let dims = self.dims.iter().map(|&d| ((d as f64 * factor).floor() as usize).max(4)).collect();
        Ok(SyntheticModel { dims, ..self.clone() })
    }

    pub fn with_rank(&self, rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(contract_err!("rank must be positive"));
        }
        Ok(SyntheticModel { rank, ..self.clone() })
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Bond ranks of `X` with `rank` in the interior.
    pub fn ranks(&self) -> Vec<usize> {
        self.ranks_with(self.rank)
    }

    pub fn ranks_with(&self, r: usize) -> Vec<usize> {
        let n = self.order();
        (0..=n).map(|k| if k == 0 || k == n { 1 } else { r }).collect()
    }

    /// Entries stored by a train of this shape with interior rank `r`.
    pub fn storage_with(&self, r: usize) -> u128 {
        let ranks = self.ranks_with(r);
        self.dims.iter().enumerate().map(|(n, &d)| ranks[n] as u128 * d as u128 * ranks[n + 1] as u128).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shapes() {
        let m1 = SyntheticModel::reference(1).unwrap();
        assert_eq!((m1.order(), m1.dims[0], m1.rank), (50, 2000, 50));
        let m2 = SyntheticModel::reference(2).unwrap();
        assert_eq!(
            (m2.order(), m2.dims[0], m2.dims[1], m2.dims[15], m2.rank),
            (16, 100_000_000, 50_000, 1_000_000, 30)
        );
        let m3 = SyntheticModel::reference(3).unwrap();
        assert_eq!((m3.order(), m3.dims[7], m3.rank), (30, 2_000_000, 30));
        assert!(SyntheticModel::reference(4).is_err());
    }

    #[test]
    fn scaling_floors_at_four_and_keeps_ranks() {
        let m = SyntheticModel::reference(2).unwrap().scaled(1e-4).unwrap();
        assert_eq!(m.dims[0], 10_000);
        assert_eq!(m.dims[1], 5);
        assert_eq!(m.dims[15], 100);
        assert_eq!(m.rank, 30);
        let tiny = SyntheticModel::reference(1).unwrap().scaled(1e-9).unwrap();
        assert!(tiny.dims.iter().all(|&d| d == 4));
        assert!(SyntheticModel::reference(1).unwrap().scaled(0.0).is_err());
        assert!(SyntheticModel::reference(1).unwrap().scaled(f64::NAN).is_err());
    }

    #[test]
    fn storage_counts() {
        let m = SyntheticModel::reference(1).unwrap().scaled(0.002).unwrap().with_rank(2).unwrap();
        assert_eq!(m.dims[0], 4);
        assert_eq!(m.storage_with(2), 8 + 48 * 16 + 8);
    }
}
