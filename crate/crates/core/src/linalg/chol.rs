//! Pivoted Cholesky factorization of symmetric positive semidefinite
//! matrices.

use crate::linalg::mat::Mat;
use crate::trace;

/// Relative diagonal threshold below which the remaining Schur complement
/// is treated as zero.
pub const RANK_TOL: f64 = 1e-14;

/// `Pᵀ W P = L Lᵀ` with `L` of size `n × rank`, stored as the transposed
/// factor `lt = Lᵀ` (`rank × n`, upper trapezoidal in pivoted order).
#[derive(Clone, Debug, PartialEq)]
pub struct PivotedCholesky {
    pub lt: Mat,
    pub perm: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CholOutcome {
    Factored(PivotedCholesky),
    Indefinite { pivot: usize, value: f64 },
}

impl PivotedCholesky {
    pub fn rank(&self) -> usize {
        self.lt.rows()
    }

    /// `U = Lᵀ Pᵀ`, so that `W = Uᵀ U`.
    pub fn factor_unpermuted(&self) -> Mat {
        let mut u = Mat::zeros(self.rank(), self.perm.len());
        for (k, &p) in self.perm.iter().enumerate() {
            u.col_mut(p).copy_from_slice(self.lt.col(k));
        }
        u
    }
}

/// Outer-product pivoted Cholesky. The pivot is the largest remaining
/// diagonal entry, lowest index on ties. Stops once the largest remaining
/// diagonal drops to `RANK_TOL` times the largest initial diagonal. A
/// remaining diagonal below `-indefinite_tol` (relative to the same scale)
/// reports the matrix as indefinite.
pub fn pivoted_cholesky(w: &Mat, indefinite_tol: f64) -> CholOutcome {
    let n = w.rows();
    assert_eq!(n, w.cols(), "pivoted_cholesky needs a square matrix");
    let mut a = w.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = (0..n).map(|i| w[(i, i)]).fold(0.0f64, f64::max);
    let stop = RANK_TOL * scale;
    let mut rank = 0;
    let mut flops = 0u64;
    while rank < n {
        let mut piv = rank;
        for k in rank + 1..n {
            if a[(k, k)] > a[(piv, piv)] {
                piv = k;
            }
        }
        let d = a[(piv, piv)];
        if d <= stop || d <= 0.0 {
            break;
        }
        if piv != rank {
            swap_sym(&mut a, rank, piv);
            perm.swap(rank, piv);
        }
        let s = d.sqrt();
        a[(rank, rank)] = s;
        for i in rank + 1..n {
            a[(i, rank)] /= s;
            a[(rank, i)] = a[(i, rank)];
        }
        // Both triangles are kept current so symmetric swaps stay valid.
        for j in rank + 1..n {
            let ljr = a[(j, rank)];
            for i in rank + 1..n {
                let v = a[(i, rank)] * ljr;
                a[(i, j)] -= v;
            }
        }
        flops += ((n - rank) * (n - rank + 1)) as u64;
        rank += 1;
    }
    trace::add_flops(flops);
    for k in rank..n {
        if a[(k, k)] < -indefinite_tol * scale.max(f64::MIN_POSITIVE) {
            return CholOutcome::Indefinite { pivot: perm[k], value: a[(k, k)] };
        }
    }
    let lt = Mat::from_fn(rank, n, |r, c| if c >= r { a[(c, r)] } else { 0.0 });
    CholOutcome::Factored(PivotedCholesky { lt, perm })
}

fn swap_sym(a: &mut Mat, p: usize, q: usize) {
    let n = a.rows();
    for k in 0..n {
        let t = a[(p, k)];
        a[(p, k)] = a[(q, k)];
        a[(q, k)] = t;
    }
    for k in 0..n {
        let t = a[(k, p)];
        a[(k, p)] = a[(k, q)];
        a[(k, q)] = t;
    }
}
