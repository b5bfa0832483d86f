use crate::error::{shape_err, Error, Result};
use crate::parallel::DistTTTensor;
use crate::trace;
use crate::tt::{TTCore, TTTensor};

fn check_dims(x: &[usize], y: &[usize]) -> Result<()> {
    if x != y {
        return Err(shape_err!("dims {x:?} and {y:?} differ"));
    }
    Ok(())
}

pub(crate) fn scale_cores(cores: &mut [TTCore], s: f64) {
    if let Some(c) = cores.first_mut() {
        c.scale(s);
    }
}

/// Block placement of slices: end cores are concatenated, inner cores are
/// block diagonal. Cores are local slabs with matching slice counts.
pub(crate) fn add_cores(x: &[TTCore], y: &[TTCore]) -> Result<Vec<TTCore>> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b) = (&x[k], &y[k]);
        if a.dim() != b.dim() {
            return Err(shape_err!("core {k} has {} and {} slices", a.dim(), b.dim()));
        }
        let first = k == 0;
        let last = k + 1 == n;
        let rl = if first { 1 } else { checked_add(a.r_left(), b.r_left())? };
        let rr = if last { 1 } else { checked_add(a.r_right(), b.r_right())? };
        let mut z = TTCore::zeros(rl, a.dim(), rr);
        if first && last {
            for (o, (p, q)) in z.data_mut().iter_mut().zip(a.data().iter().zip(b.data())) {
                *o = p + q;
            }
            trace::add_flops(a.data().len() as u64);
            out.push(z);
            continue;
        }
        let (ya, yb) = (if first { 0 } else { a.r_left() }, if last { 0 } else { a.r_right() });
        for i in 0..a.dim() {
            for bb in 0..a.r_right() {
                for aa in 0..a.r_left() {
                    z.set(aa, i, bb, a.get(aa, i, bb));
                }
            }
            for bb in 0..b.r_right() {
                for aa in 0..b.r_left() {
                    z.set(ya + aa, i, yb + bb, b.get(aa, i, bb));
                }
            }
        }
        out.push(z);
    }
    Ok(out)
}

fn checked_add(a: usize, b: usize) -> Result<usize> {
    a.checked_add(b).ok_or_else(|| Error::Capacity(format!("rank sum {a} + {b} overflows")))
}

/// Slicewise Kronecker products, `Z(ax·Ry + ay, i, bx·Ry' + by) = X(ax,i,bx)·Y(ay,i,by)`.
pub(crate) fn hadamard_cores(x: &[TTCore], y: &[TTCore]) -> Result<Vec<TTCore>> {
    let mut out = Vec::with_capacity(x.len());
    for (k, (a, b)) in x.iter().zip(y).enumerate() {
        if a.dim() != b.dim() {
            return Err(shape_err!("core {k} has {} and {} slices", a.dim(), b.dim()));
        }
        let rl = checked_mul(a.r_left(), b.r_left())?;
        let rr = checked_mul(a.r_right(), b.r_right())?;
        rl.checked_mul(rr).and_then(|s| s.checked_mul(a.dim())).ok_or_else(|| {
            Error::Capacity(format!("core {k} of the product would hold more than usize::MAX entries"))
        })?;
        let (ryl, ryr) = (b.r_left(), b.r_right());
        let z = TTCore::from_fn(rl, a.dim(), rr, |l, i, r| a.get(l / ryl, i, r / ryr) * b.get(l % ryl, i, r % ryr));
        trace::add_flops(z.data().len() as u64);
        out.push(z);
    }
    Ok(out)
}

fn checked_mul(a: usize, b: usize) -> Result<usize> {
    a.checked_mul(b).ok_or_else(|| Error::Capacity(format!("rank product {a} x {b} overflows")))
}

/// `s·t`, scaling the first core.
pub fn scale(t: &TTTensor, s: f64) -> TTTensor {
    let mut z = t.clone();
    scale_cores(z.cores_mut(), s);
    z
}

pub fn add(x: &TTTensor, y: &TTTensor) -> Result<TTTensor> {
    check_dims(&x.dims(), &y.dims())?;
    TTTensor::new(add_cores(x.cores(), y.cores())?)
}

pub fn hadamard(x: &TTTensor, y: &TTTensor) -> Result<TTTensor> {
    check_dims(&x.dims(), &y.dims())?;
    TTTensor::new(hadamard_cores(x.cores(), y.cores())?)
}

/// Local scaling of the first core's slab; no communication.
pub fn scale_dist(t: &DistTTTensor, s: f64) -> DistTTTensor {
    let mut z = t.clone();
    scale_cores(z.local_cores_mut(), s);
    z
}

/// Local slab sum; no communication.
pub fn add_dist(x: &DistTTTensor, y: &DistTTTensor) -> Result<DistTTTensor> {
    x.check_compatible(y)?;
    let cores = add_cores(x.local_cores(), y.local_cores())?;
    Ok(DistTTTensor::from_parts_unchecked(x.dims().to_vec(), x.rank(), x.size(), cores))
}

/// Local slab Hadamard product; no communication.
pub fn hadamard_dist(x: &DistTTTensor, y: &DistTTTensor) -> Result<DistTTTensor> {
    x.check_compatible(y)?;
    let cores = hadamard_cores(x.local_cores(), y.local_cores())?;
    Ok(DistTTTensor::from_parts_unchecked(x.dims().to_vec(), x.rank(), x.size(), cores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::random_tt;

    #[test]
    fn rank_arithmetic() {
        let x = random_tt(&[2, 3, 4], &[1, 2, 3, 1], 1).unwrap();
        let y = random_tt(&[2, 3, 4], &[1, 4, 5, 1], 2).unwrap();
        assert_eq!(add(&x, &y).unwrap().ranks(), vec![1, 6, 8, 1]);
        assert_eq!(hadamard(&x, &y).unwrap().ranks(), vec![1, 8, 15, 1]);
        assert_eq!(scale(&x, 0.0).ranks(), x.ranks());
    }

    #[test]
    fn dim_mismatch_is_shape_error() {
        let x = random_tt(&[2, 3], &[1, 2, 1], 1).unwrap();
        let y = random_tt(&[2, 4], &[1, 2, 1], 1).unwrap();
        assert!(matches!(add(&x, &y), Err(Error::Shape(_))));
        assert!(matches!(hadamard(&x, &y), Err(Error::Shape(_))));
    }

    #[test]
    fn order_one_sum() {
        let x = random_tt(&[5], &[1, 1], 1).unwrap();
        let z = add(&x, &x).unwrap();
        assert_eq!(z.ranks(), vec![1, 1]);
        for i in 0..5 {
            assert_eq!(z.entry(&[i]).unwrap(), 2.0 * x.entry(&[i]).unwrap());
        }
    }

    #[test]
    fn rank_product_overflow_is_capacity_error() {
        let big = usize::MAX / 2 + 1;
        let a = TTCore::zeros(1, 0, big);
        let b = TTCore::zeros(1, 0, 2);
        assert!(matches!(hadamard_cores(&[a], &[b]), Err(Error::Capacity(_))));
    }
}
