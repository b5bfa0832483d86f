#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ttpar::linalg::Mat;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Row range owned by rank `p` under the ceil-chunk block rule.
pub fn block(m: usize, p: usize, np: usize) -> (usize, usize) {
    let chunk = m.div_ceil(np);
    ((p * chunk).min(m), ((p + 1) * chunk).min(m))
}

/// Classical Gram–Schmidt with reorthogonalization; `R` has a positive
/// diagonal for full-column-rank input.
pub fn cgs2(a: &Mat) -> (Mat, Mat) {
    let (m, n) = (a.rows(), a.cols());
    let mut q = Mat::zeros(m, n);
    let mut r = Mat::zeros(n, n);
    for j in 0..n {
        let mut v: Vec<f64> = a.col(j).to_vec();
        for _pass in 0..2 {
            for i in 0..j {
                let c: f64 = q.col(i).iter().zip(&v).map(|(x, y)| x * y).sum();
                r[(i, j)] += c;
                for (vk, qk) in v.iter_mut().zip(q.col(i)) {
                    *vk -= c * qk;
                }
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        r[(j, j)] = nrm;
        for (o, x) in q.col_mut(j).iter_mut().zip(&v) {
            *o = x / nrm;
        }
    }
    (q, r)
}

pub fn naive_mul(a: &Mat, b: &Mat) -> Mat {
    Mat::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|l| a[(i, l)] * b[(l, j)]).sum())
}

pub fn rel(a: &Mat, b: &Mat) -> f64 {
    let d = a.sub(b).frobenius_norm();
    let n = b.frobenius_norm();
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

use ttpar::comm::SimWorld;
use ttpar::parallel::{distribute, gather, DistTTTensor};
use ttpar::tt::TTTensor;

/// Every entry of `t` by explicit slice-chain products, first index fastest.
pub fn dense(t: &TTTensor) -> Vec<f64> {
    let dims = t.dims();
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..total {
        let mut row = vec![1.0];
        for (n, c) in t.cores().iter().enumerate() {
            let mut next = vec![0.0; c.r_right()];
            for (b, nb) in next.iter_mut().enumerate() {
                *nb = (0..c.r_left()).map(|a| row[a] * c.get(a, idx[n], b)).sum();
            }
            row = next;
        }
        out.push(row[0]);
        for n in 0..dims.len() {
            idx[n] += 1;
            if idx[n] < dims[n] {
                break;
            }
            idx[n] = 0;
        }
    }
    out
}

pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_vec(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let n = norm2(b);
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

pub fn rel_scalar(a: f64, b: f64) -> f64 {
    if b != 0.0 {
        (a - b).abs() / b.abs()
    } else {
        a.abs()
    }
}

/// Dense mode-`n` product `y = x ×_n A`.
pub fn mode_apply(x: &[f64], dims: &[usize], n: usize, a: &Mat) -> Vec<f64> {
    let left: usize = dims[..n].iter().product();
    let d = dims[n];
    let right: usize = dims[n + 1..].iter().product();
    let mut y = vec![0.0; x.len()];
    for r in 0..right {
        for i in 0..d {
            for j in 0..d {
                let aij = a[(i, j)];
                if aij == 0.0 {
                    continue;
                }
                for l in 0..left {
                    y[l + left * (i + d * r)] += aij * x[l + left * (j + d * r)];
                }
            }
        }
    }
    y
}

/// Distributes `ts` over `np` simulated ranks, runs `body` and gathers the
/// resulting tensor from every rank (all copies are checked equal).
pub fn gathered<F>(ts: &[TTTensor], np: usize, body: F) -> TTTensor
where
    F: Fn(&[DistTTTensor], &dyn ttpar::comm::Communicator) -> DistTTTensor + Sync,
{
    let out = SimWorld::new(np).run(|c| {
        let parts: Vec<_> = ts.iter().map(|t| distribute(t, c, true).unwrap()).collect();
        let y = body(&parts, c);
        gather(&y, c).unwrap()
    });
    for o in &out[1..] {
        assert_eq!(o.value, out[0].value, "ranks disagree on the gathered tensor");
    }
    out.into_iter().next().unwrap().value
}
