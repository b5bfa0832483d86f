use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::bench::SyntheticModel;
use crate::comm::{CommError, Communicator, SimWorld};
use crate::error::{contract_err, Error, Result};
use crate::ops::{add_dist, hadamard_dist, inner_product_dist, norm_dist, scale_dist, NormMethod};
use crate::parallel::{random_dist, right_orthonormalize, round_dist, DistTTTensor, RoundingOptions, RoundingVariant};
use crate::trace::{self, Trace};
use crate::tsqr::TreeVariant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchOp {
    Add,
    Hadamard,
    Dot,
    Norm,
    Ortho,
    Round,
}

impl BenchOp {
    pub const ALL: [BenchOp; 6] =
        [BenchOp::Add, BenchOp::Hadamard, BenchOp::Dot, BenchOp::Norm, BenchOp::Ortho, BenchOp::Round];
}

impl fmt::Display for BenchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchOp::Add => "add",
            BenchOp::Hadamard => "hadamard",
            BenchOp::Dot => "dot",
            BenchOp::Norm => "norm",
            BenchOp::Ortho => "ortho",
            BenchOp::Round => "round",
        })
    }
}

impl FromStr for BenchOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BenchOp::ALL
            .into_iter()
            .find(|op| op.to_string() == s)
            .ok_or_else(|| contract_err!("unknown op {s:?}; expected add, hadamard, dot, norm, ortho or round"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CommKind {
    #[default]
    Sim,
    Runtime,
}

impl FromStr for CommKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim" => Ok(CommKind::Sim),
            "runtime" => Ok(CommKind::Runtime),
            _ => Err(contract_err!("unknown backend {s:?}; expected sim or runtime")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model_id: u8,
    pub model: SyntheticModel,
    pub op: BenchOp,
    pub p: usize,
    pub comm: CommKind,
    pub variant: RoundingVariant,
    pub eps0: f64,
    pub seed: u64,
    pub norm: NormMethod,
    pub tree: TreeVariant,
    pub allow_idle: bool,
    /// Refuse inputs whose largest operand stores more entries than this.
    pub max_entries: u128,
}

impl RunConfig {
    pub fn new(model_id: u8, model: SyntheticModel, op: BenchOp) -> Self {
        RunConfig {
            model_id,
            model,
            op,
            p: 1,
            comm: CommKind::Sim,
            variant: RoundingVariant::default(),
            eps0: 1e-8,
            seed: 0,
            norm: NormMethod::default(),
            tree: TreeVariant::default(),
            allow_idle: false,
            max_entries: 250_000_000,
        }
    }
}

/// One CSV row: critical-path counters (maximum over ranks) of a phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRow {
    pub model: String,
    pub op: String,
    pub variant: String,
    pub p: usize,
    pub phase: String,
    pub seconds: f64,
    pub flops: u64,
    pub words: u64,
    pub messages: u64,
}

pub const CSV_HEADER: [&str; 9] = ["model", "op", "variant", "P", "phase", "seconds", "flops", "words", "messages"];

/// Deterministic outcome of a run, identical on every rank.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub value: Option<f64>,
    pub ranks: Vec<usize>,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(v) = self.value {
            write!(f, "value={v:.17e} ")?;
        }
        write!(f, "ranks={:?}", self.ranks)
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub rows: Vec<PhaseRow>,
    pub outcome: Outcome,
    pub traces: Vec<Trace>,
}

fn largest_operand(cfg: &RunConfig) -> u128 {
    let r = match cfg.op {
        BenchOp::Hadamard => cfg.model.rank * cfg.model.rank,
        BenchOp::Add => 4 * cfg.model.rank,
        _ => 2 * cfg.model.rank,
    };
    cfg.model.storage_with(r)
}

/// Runs `cfg.op` on `Y = 2X − X` (on `X ∘ X` for the Hadamard product).
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    if cfg.p == 0 {
        return Err(contract_err!("P must be at least 1"));
    }
    if cfg.comm == CommKind::Runtime {
        return Err(Error::Comm(CommError::Capability(
            "this build has no external message-passing runtime; use --comm sim".into(),
        )));
    }
    let need = largest_operand(cfg);
    if need > cfg.max_entries {
        return Err(Error::Capacity(format!(
            "{} {} needs about {need} stored entries, above the limit of {}",
            cfg.model.name, cfg.op, cfg.max_entries
        )));
    }
    let outs = SimWorld::new(cfg.p).run(|c| run_rank(cfg, c));
    let mut traces = Vec::with_capacity(outs.len());
    let mut outcome = None;
    for o in outs {
        let v = o.value?;
        if outcome.is_none() {
            outcome = Some(v);
        }
        traces.push(o.trace);
    }
    let max = Trace::max_over(&traces);
    let variant = if cfg.op == BenchOp::Round { cfg.variant.to_string() } else { String::new() };
    let mut rows: Vec<PhaseRow> = [trace::TSQR, trace::APPLY_Q, trace::OTHER]
        .into_iter()
        .map(|name| (name, max.phase(name)))
        .chain(std::iter::once(("Total", max.total())))
        .map(|(name, c)| PhaseRow {
            model: cfg.model.name.clone(),
            op: cfg.op.to_string(),
            variant: variant.clone(),
            p: cfg.p,
            phase: name.to_string(),
            seconds: c.seconds,
            flops: c.flops,
            words: c.words,
            messages: c.messages,
        })
        .collect();
    // the total is the critical path, not the sum of per-phase maxima
    if let Some(last) = rows.last_mut() {
        let slowest = traces.iter().map(|t| t.total()).max_by(|a, b| a.seconds.total_cmp(&b.seconds));
        if let Some(s) = slowest {
            last.seconds = s.seconds;
        }
    }
    Ok(RunReport { rows, outcome: outcome.expect("at least one rank"), traces })
}

fn run_rank(cfg: &RunConfig, c: &dyn Communicator) -> Result<Outcome> {
    let m = &cfg.model;
    let x = random_dist(&m.dims, &m.ranks(), cfg.seed, c, cfg.allow_idle)?;
    let y = add_dist(&scale_dist(&x, 2.0), &scale_dist(&x, -1.0))?;
    trace::reset();
    let _g = trace::phase(trace::OTHER);
    let outcome = match cfg.op {
        BenchOp::Add => ranks_only(add_dist(&y, &y)?),
        BenchOp::Hadamard => ranks_only(hadamard_dist(&x, &x)?),
        BenchOp::Dot => Outcome { value: Some(inner_product_dist(&x, &y, c)?), ranks: y.ranks() },
        BenchOp::Norm => Outcome { value: Some(norm_dist(&y, c, cfg.norm)?.value), ranks: y.ranks() },
        BenchOp::Ortho => ranks_only(right_orthonormalize(&y, c, cfg.tree)?),
        BenchOp::Round => {
            let opts = RoundingOptions { eps0: cfg.eps0, variant: cfg.variant, tree: cfg.tree, ..Default::default() };
            let (z, rep) = round_dist(&y, c, &opts)?;
            Outcome { value: Some(rep.norm), ranks: z.ranks() }
        }
    };
    Ok(outcome)
}

fn ranks_only(t: DistTTTensor) -> Outcome {
    Outcome { value: None, ranks: t.ranks() }
}

pub fn write_csv<W: Write>(rows: &[PhaseRow], w: W, header: bool) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let wrap = |e: csv::Error| Error::Format(format!("CSV output failed: {e}"));
    if header {
        out.write_record(CSV_HEADER).map_err(wrap)?;
    }
    for r in rows {
        out.write_record([
            r.model.clone(),
            r.op.clone(),
            r.variant.clone(),
            r.p.to_string(),
            r.phase.clone(),
            format!("{:.6e}", r.seconds),
            r.flops.to_string(),
            r.words.to_string(),
            r.messages.to_string(),
        ])
        .map_err(wrap)?;
    }
    out.flush()?;
    Ok(())
}
