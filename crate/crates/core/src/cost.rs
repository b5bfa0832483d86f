//! α-β-γ cost predictions for the parallel kernels.
//!
//! [`estimate`] evaluates the closed forms for uniform dims `I` and ranks
//! `R`. Lower-order terms are only known up to a constant; they are
//! reported with constant 1 in breakdown entries flagged
//! `order_estimate`. The `profile_*` functions evaluate the same leading
//! terms core by core for actual dims and ranks.

use std::fmt;
use std::str::FromStr;

use crate::error::{contract_err, Error, Result};
use crate::parallel::{Direction, RoundingVariant};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModelParams {
    /// Seconds per message.
    pub alpha: f64,
    /// Seconds per word.
    pub beta: f64,
    /// Seconds per flop.
    pub gamma: f64,
}

impl Default for CostModelParams {
    fn default() -> Self {
        CostModelParams { alpha: 1e-6, beta: 1e-9, gamma: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Summation,
    Hadamard,
    InnerProduct,
    Norm,
    Ortho,
    Rounding(RoundingVariant),
    /// TSQR of an `I × R` matrix.
    Tsqr,
    /// Implicit `Q` of an `I × R` TSQR applied to `R × L` (or `R × R`).
    ApplyQ,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpKind::Summation => f.write_str("add"),
            OpKind::Hadamard => f.write_str("hadamard"),
            OpKind::InnerProduct => f.write_str("dot"),
            OpKind::Norm => f.write_str("norm"),
            OpKind::Ortho => f.write_str("ortho"),
            OpKind::Rounding(v) => write!(f, "round-{v}"),
            OpKind::Tsqr => f.write_str("tsqr"),
            OpKind::ApplyQ => f.write_str("applyq"),
        }
    }
}

impl FromStr for OpKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Ok(match s.as_str() {
            "add" | "sum" | "summation" => OpKind::Summation,
            "hadamard" => OpKind::Hadamard,
            "dot" | "inner" | "inner_product" => OpKind::InnerProduct,
            "norm" => OpKind::Norm,
            "ortho" | "orthonormalization" => OpKind::Ortho,
            "round" | "rounding" => OpKind::Rounding(RoundingVariant::default()),
            "tsqr" => OpKind::Tsqr,
            "applyq" | "apply_q" => OpKind::ApplyQ,
            _ => match s.strip_prefix("round-").or_else(|| s.strip_prefix("round_")) {
                Some(v) => OpKind::Rounding(v.parse()?),
                None => return Err(contract_err!("unknown operation {s:?}")),
            },
        })
    }
}

/// Uniform problem shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shape {
    pub n: usize,
    pub i: usize,
    pub r: usize,
    pub p: usize,
    /// Reduced rank for rounding; defaults to `R/2`.
    pub l: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostTerm {
    pub name: &'static str,
    pub flops: f64,
    pub words: f64,
    pub messages: f64,
    /// Only the order of this term is known; its constant is set to 1.
    pub order_estimate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub op: OpKind,
    pub flops: f64,
    pub words: f64,
    pub messages: f64,
    pub breakdown: Vec<CostTerm>,
}

impl CostReport {
    fn from_terms(op: OpKind, breakdown: Vec<CostTerm>) -> Self {
        let flops = breakdown.iter().map(|t| t.flops).sum();
        let words = breakdown.iter().map(|t| t.words).sum();
        let messages = breakdown.iter().map(|t| t.messages).sum();
        CostReport { op, flops, words, messages, breakdown }
    }

    /// Flops of the terms whose constants are exact.
    pub fn leading_flops(&self) -> f64 {
        self.breakdown.iter().filter(|t| !t.order_estimate).map(|t| t.flops).sum()
    }

    pub fn seconds(&self, params: &CostModelParams) -> f64 {
        params.gamma * self.flops + params.beta * self.words + params.alpha * self.messages
    }
}

fn leading(flops: f64) -> CostTerm {
    CostTerm { name: "leading", flops, words: 0.0, messages: 0.0, order_estimate: false }
}

fn lower(flops: f64, words: f64, messages: f64) -> CostTerm {
    CostTerm { name: "lower-order", flops, words, messages, order_estimate: true }
}

/// `⌈log₂ P⌉`.
pub fn log2_ceil(p: usize) -> f64 {
    (usize::BITS - (p.max(1) - 1).leading_zeros()) as f64
}

/// Leading flop coefficient of rounding in units of `NIR/P`, as a
/// polynomial in `R` and `L`.
pub fn rounding_poly(variant: RoundingVariant, r: f64, l: f64) -> f64 {
    if variant.implicit() {
        3.0 * r * r + 6.0 * r * l + 4.0 * l * l
    } else {
        5.0 * r * r + 4.0 * r * l + 4.0 * l * l
    }
}

pub fn estimate(op: OpKind, s: Shape) -> Result<CostReport> {
    if s.n == 0 || s.i == 0 || s.r == 0 || s.p == 0 {
        return Err(contract_err!("N, I, R and P must be positive"));
    }
    if let Some(l) = s.l {
        if l == 0 || l > s.r {
            return Err(contract_err!("L must lie in 1..=R, got {l}"));
        }
    }
    let (n, i, r, p) = (s.n as f64, s.i as f64, s.r as f64, s.p as f64);
    let lg = log2_ceil(s.p);
    let nir = n * i * r / p;
    let terms = match op {
        OpKind::Summation => vec![],
        OpKind::Hadamard => vec![leading(nir * r * r * r)],
        OpKind::InnerProduct => vec![leading(4.0 * nir * r * r), lower(0.0, n * r * r, n * lg)],
        OpKind::Norm => vec![leading(2.0 * nir * r * r), lower(0.0, n * r * r, n * lg)],
        OpKind::Ortho => vec![leading(5.0 * nir * r * r), lower(n * r * r * r * lg, n * r * r * lg, n * lg)],
        OpKind::Rounding(v) => {
            let l = s.l.map_or(r / 2.0, |l| l as f64);
            vec![leading(nir * rounding_poly(v, r, l)), lower(n * r * r * r * lg, n * r * r * lg, n * lg)]
        }
        OpKind::Tsqr => vec![leading(2.0 * i * r * r / p), lower(r * r * r * lg, r * r * lg, lg)],
        OpKind::ApplyQ => {
            let c = s.l.map_or(r, |l| l as f64);
            vec![
                leading(4.0 * i * r * c / p),
                lower(r * r * c * lg, 0.0, 0.0),
                CostTerm { name: "exchange", flops: 0.0, words: r * c, messages: 1.0, order_estimate: false },
            ]
        }
    };
    Ok(CostReport::from_terms(op, terms))
}

/// Predicted speedup `T(1)/T(P)` under the α-β-γ model.
pub fn predicted_speedup(op: OpKind, s: Shape, params: &CostModelParams) -> Result<f64> {
    let one = estimate(op, Shape { p: 1, ..s })?.seconds(params);
    let many = estimate(op, s)?.seconds(params);
    Ok(one / many)
}

fn check_profile(dims: &[usize], ranks: &[usize]) -> Result<()> {
    if dims.is_empty() || ranks.len() != dims.len() + 1 {
        return Err(contract_err!("{} dims need {} ranks", dims.len(), dims.len() + 1));
    }
    Ok(())
}

fn tsqr(m: f64, b: f64) -> f64 {
    2.0 * m * b * b
}

fn apply(m: f64, b: f64, c: f64) -> f64 {
    4.0 * m * b * c
}

/// Leading flops of the inner product of trains with ranks `rx` and `ry`,
/// summed over all ranks.
pub fn profile_inner(dims: &[usize], rx: &[usize], ry: &[usize]) -> Result<f64> {
    check_profile(dims, rx)?;
    check_profile(dims, ry)?;
    Ok(dims
        .iter()
        .enumerate()
        .map(|(n, &d)| {
            let (d, xl, xr, yl, yr) = (d as f64, rx[n] as f64, rx[n + 1] as f64, ry[n] as f64, ry[n + 1] as f64);
            2.0 * yl * xl * d * xr + 2.0 * yl * d * yr * xr
        })
        .sum())
}

/// Leading flops of the symmetric norm.
pub fn profile_norm(dims: &[usize], r: &[usize]) -> Result<f64> {
    check_profile(dims, r)?;
    Ok(dims
        .iter()
        .enumerate()
        .map(|(n, &d)| {
            let (d, rl, rr) = (d as f64, r[n] as f64, r[n + 1] as f64);
            d * rr * rl * rl + rl * d * rr * rr
        })
        .sum())
}

/// Ranks after an orthonormalization sweep.
fn swept_ranks(dims: &[usize], r: &[usize], left: bool) -> Vec<usize> {
    let mut out = r.to_vec();
    let n = dims.len();
    if left {
        for k in 0..n.saturating_sub(1) {
            out[k + 1] = out[k + 1].min(out[k] * dims[k]);
        }
    } else {
        for k in (1..n).rev() {
            out[k] = out[k].min(dims[k] * out[k + 1]);
        }
    }
    out
}

/// Flops of one orthonormalization sweep. `form_q` adds the explicit
/// formation of the orthonormal cores.
fn sweep(dims: &[usize], r: &[usize], left: bool, form_q: bool) -> f64 {
    let n = dims.len();
    let rs = swept_ranks(dims, r, left);
    let mut f = 0.0;
    for step in 0..n.saturating_sub(1) {
        if left {
            let k = step;
            let (m, b) = ((rs[k] * dims[k]) as f64, r[k + 1] as f64);
            let kk = rs[k + 1] as f64;
            f += tsqr(m, b) + if form_q { tsqr(m, kk) } else { 0.0 };
            f += (dims[k + 1] * r[k + 2]) as f64 * b * kk;
        } else {
            let k = n - 1 - step;
            let (m, b) = ((dims[k] * rs[k + 1]) as f64, r[k] as f64);
            let kk = rs[k] as f64;
            f += tsqr(m, b) + if form_q { tsqr(m, kk) } else { 0.0 };
            f += (r[k - 1] * dims[k - 1]) as f64 * b * kk;
        }
    }
    f
}

/// Leading flops of orthonormalizing in `direction`.
pub fn profile_ortho(dims: &[usize], r: &[usize], direction: Direction) -> Result<f64> {
    check_profile(dims, r)?;
    Ok(sweep(dims, r, direction == Direction::Left, true))
}

/// Leading flops of rounding from ranks `r` to ranks `l`.
pub fn profile_round(dims: &[usize], r: &[usize], l: &[usize], variant: RoundingVariant) -> Result<f64> {
    check_profile(dims, r)?;
    check_profile(dims, l)?;
    let left = variant.left_first();
    let implicit = variant.implicit();
    let n = dims.len();
    let rs = swept_ranks(dims, r, left);
    let mut f = sweep(dims, r, left, !implicit);
    for step in 0..n.saturating_sub(1) {
        if left {
            let k = n - 1 - step;
            let (m, b, c) = ((dims[k] * l[k + 1]) as f64, rs[k] as f64, l[k] as f64);
            f += tsqr(m, b) + apply(m, b, c);
            let prev = (rs[k - 1] * dims[k - 1]) as f64;
            f += if implicit { apply(prev, b, c) } else { 2.0 * prev * b * c };
        } else {
            let k = step;
            let (m, b, c) = ((l[k] * dims[k]) as f64, rs[k + 1] as f64, l[k + 1] as f64);
            f += tsqr(m, b) + apply(m, b, c);
            let next = (dims[k + 1] * rs[k + 2]) as f64;
            f += if implicit { apply(next, b, c) } else { 2.0 * next * b * c };
        }
    }
    Ok(f)
}
