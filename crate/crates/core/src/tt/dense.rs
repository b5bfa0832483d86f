use crate::error::{shape_err, Error, Result};
use crate::linalg::Mat;

/// Full tensor with column-major linearization (first index fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

/// Product of `dims`, failing if it exceeds `max_entries` or overflows.
pub fn checked_size(dims: &[usize], max_entries: usize) -> Result<usize> {
    let mut n: usize = 1;
    for &d in dims {
        n = n
            .checked_mul(d)
            .filter(|&n| n <= max_entries)
            .ok_or_else(|| Error::Capacity(format!("dense tensor with dims {dims:?} exceeds {max_entries} entries")))?;
    }
    Ok(n)
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(shape_err!("dims {dims:?} need {n} entries, got {}", data.len()));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        DenseTensor { dims, data: vec![0.0; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() {
            return Err(shape_err!("index of order {} for a tensor of order {}", idx.len(), self.dims.len()));
        }
        let mut lin = 0;
        let mut stride = 1;
        for (n, (&i, &d)) in idx.iter().zip(&self.dims).enumerate() {
            if i >= d {
                return Err(Error::Bounds(format!("index {i} out of range for mode {n} of size {d}")));
            }
            lin += i * stride;
            stride *= d;
        }
        Ok(lin)
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.data[self.linear_index(idx)?])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<DenseTensor> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(DenseTensor { dims: self.dims.clone(), data })
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `‖self − other‖ / ‖other‖`, or the absolute difference when `other`
    /// is zero.
    pub fn rel_diff(&self, other: &DenseTensor) -> Result<f64> {
        let d = self.sub(other)?.frobenius_norm();
        let n = other.frobenius_norm();
        Ok(if n > 0.0 { d / n } else { d })
    }

    /// Matricization with modes `0..split` as rows; a pure reshape.
    pub fn unfold(&self, split: usize) -> Result<Mat> {
        if split > self.dims.len() {
            return Err(shape_err!("split {split} exceeds the order {}", self.dims.len()));
        }
        let rows: usize = self.dims[..split].iter().product();
        let cols: usize = self.dims[split..].iter().product();
        Ok(Mat::from_col_major(rows, cols, self.data.clone()))
    }

    fn check_same(&self, other: &DenseTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(shape_err!("dims {:?} and {:?} differ", self.dims, other.dims));
        }
        Ok(())
    }
}
