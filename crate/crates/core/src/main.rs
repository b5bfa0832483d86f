use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ttpar::bench::{self, BenchOp, CommKind, RunConfig, SyntheticModel};
use ttpar::cost::{estimate, predicted_speedup, CostModelParams, OpKind, Shape};
use ttpar::ops::NormMethod;
use ttpar::parallel::RoundingVariant;
use ttpar::tsqr::TreeVariant;
use ttpar::tt::io::write_tt;
use ttpar::tt::random_tt;
use ttpar::{Error, Result};

#[derive(Parser)]
#[command(name = "ttpar", version, about = "Parallel tensor-train kernels: benchmarks, cost model and self-checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Synthetic model: 1, 2 or 3
    #[arg(long, default_value_t = 1)]
    model: u8,
    /// Multiply every mode size by this factor (floor, at least 4)
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Override the bond rank of the model
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    fn model(&self) -> Result<SyntheticModel> {
        let m = SyntheticModel::reference(self.model)?.scaled(self.scale)?;
        match self.rank {
            Some(r) => m.with_rank(r),
            None => Ok(m),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a random tensor train of a synthetic model to a file
    Gen {
        #[command(flatten)]
        model: ModelArgs,
        /// Output path; defaults to model<id>.tt
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refuse trains storing more entries than this
        #[arg(long, default_value_t = 50_000_000)]
        max_entries: u128,
    },
    /// Time one operation on simulated ranks and print per-phase counters as CSV
    Run {
        #[command(flatten)]
        model: ModelArgs,
        /// add, hadamard, dot, norm, ortho or round
        #[arg(long, default_value = "round")]
        op: String,
        /// Number of ranks
        #[arg(short = 'P', long = "P", visible_alias = "procs", default_value_t = 1)]
        p: usize,
        /// sim or runtime
        #[arg(long, default_value = "sim")]
        comm: String,
        /// Rounding variant: LRLI, LRL, RLRI or RLR
        #[arg(long, default_value = "LRLI")]
        variant: String,
        #[arg(long, default_value_t = 1e-8)]
        eps0: f64,
        /// innerprod, innerprod_sym or ortho
        #[arg(long, default_value = "innerprod_sym")]
        norm: String,
        /// butterfly or binomial
        #[arg(long, default_value = "butterfly")]
        tree: String,
        /// Let ranks own empty slabs when P exceeds a mode size
        #[arg(long)]
        allow_idle: bool,
        /// Append rows to this file instead of printing them
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 250_000_000)]
        max_entries: u128,
    },
    /// Evaluate the analytic cost model for a uniform shape
    Cost {
        /// add, hadamard, dot, norm, ortho, round[-VARIANT], tsqr or applyq
        #[arg(long, default_value = "round")]
        op: String,
        /// Take N, I and R from a synthetic model (I is the mean mode size)
        #[arg(long)]
        model: Option<u8>,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        i: usize,
        #[arg(long, default_value_t = 50)]
        r: usize,
        #[arg(short = 'P', long = "P", visible_alias = "procs", default_value_t = 1)]
        p: usize,
        /// Reduced rank; defaults to R/2
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = CostModelParams::default().alpha)]
        alpha: f64,
        #[arg(long, default_value_t = CostModelParams::default().beta)]
        beta: f64,
        #[arg(long, default_value_t = CostModelParams::default().gamma)]
        gamma: f64,
        /// text or csv
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Compare every kernel with dense references on small tensors
    Verify {
        /// Fewer ranks and smaller tensors
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_tree(s: &str) -> Result<TreeVariant> {
    match s.to_ascii_lowercase().as_str() {
        "butterfly" => Ok(TreeVariant::Butterfly),
        "binomial" => Ok(TreeVariant::Binomial),
        _ => Err(Error::Contract(format!("unknown tree {s:?}; expected butterfly or binomial"))),
    }
}

fn gen(model: &ModelArgs, out: Option<PathBuf>, max_entries: u128) -> Result<()> {
    let m = model.model()?;
    let need = m.storage_with(m.rank);
    if need > max_entries {
        return Err(Error::Capacity(format!("{} stores {need} entries, above --max-entries {max_entries}", m.name)));
    }
    let t = random_tt(&m.dims, &m.ranks(), model.seed)?;
    let path = out.unwrap_or_else(|| PathBuf::from(format!("{}.tt", m.name)));
    let mut w = BufWriter::new(File::create(&path)?);
    write_tt(&t, &mut w)?;
    w.flush()?;
    eprintln!("wrote {} ({} modes, rank {}, {need} entries)", path.display(), m.order(), m.rank);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    model: &ModelArgs,
    op: &str,
    p: usize,
    comm: &str,
    variant: &str,
    eps0: f64,
    norm: &str,
    tree: &str,
    allow_idle: bool,
    csv: Option<PathBuf>,
    max_entries: u128,
) -> Result<()> {
    let mut cfg = RunConfig::new(model.model, model.model()?, op.parse::<BenchOp>()?);
    cfg.p = p;
    cfg.comm = comm.parse::<CommKind>()?;
    cfg.variant = variant.parse::<RoundingVariant>()?;
    cfg.eps0 = eps0;
    cfg.norm = norm.parse::<NormMethod>()?;
    cfg.tree = parse_tree(tree)?;
    cfg.seed = model.seed;
    cfg.allow_idle = allow_idle;
    cfg.max_entries = max_entries;
    let rep = bench::run(&cfg)?;
    match csv {
        Some(path) => {
            let fresh = std::fs::metadata(&path).map(|m| m.len() == 0).unwrap_or(true);
            let f = OpenOptions::new().create(true).append(true).open(&path)?;
            bench::write_csv(&rep.rows, f, fresh)?;
        }
        None => bench::write_csv(&rep.rows, io::stdout().lock(), true)?,
    }
    eprintln!("{} {} P={}: {}", cfg.model.name, cfg.op, cfg.p, rep.outcome);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cost(
    op: &str,
    model: Option<u8>,
    n: usize,
    i: usize,
    r: usize,
    p: usize,
    l: Option<usize>,
    params: CostModelParams,
    format: &str,
) -> Result<()> {
    let op: OpKind = op.parse()?;
    let as_csv = match format {
        "text" => false,
        "csv" => true,
        _ => return Err(Error::Contract(format!("unknown format {format:?}; expected text or csv"))),
    };
    let (n, i, r) = match model {
        Some(id) => {
            let m = SyntheticModel::reference(id)?;
            let mean = m.dims.iter().map(|&d| d as f64).sum::<f64>() / m.order() as f64;
            (m.order(), mean.round() as usize, m.rank)
        }
        None => (n, i, r),
    };
    let shape = Shape { n, i, r, p, l };
    let rep = estimate(op, shape)?;
    let mut out = io::stdout().lock();
    if as_csv {
        let speedup = predicted_speedup(op, shape, &params)?;
        writeln!(out, "op,N,I,R,P,L,term,flops,words,messages,order_estimate,seconds,speedup")?;
        let l = l.map(|l| l.to_string()).unwrap_or_default();
        for t in &rep.breakdown {
            writeln!(
                out,
                "{op},{n},{i},{r},{p},{l},{},{:e},{:e},{},{},{:e},{speedup}",
                t.name,
                t.flops,
                t.words,
                t.messages,
                t.order_estimate,
                params.gamma * t.flops + params.beta * t.words + params.alpha * t.messages
            )?;
        }
        writeln!(
            out,
            "{op},{n},{i},{r},{p},{l},total,{:e},{:e},{},false,{:e},{speedup}",
            rep.flops,
            rep.words,
            rep.messages,
            rep.seconds(&params)
        )?;
        return Ok(());
    }
    writeln!(out, "op={op} N={n} I={i} R={r} P={p}{}", l.map(|l| format!(" L={l}")).unwrap_or_default())?;
    writeln!(out, "{:<12} {:>14} {:>14} {:>10}", "term", "flops", "words", "messages")?;
    for t in &rep.breakdown {
        let mark = if t.order_estimate { " (order only)" } else { "" };
        writeln!(out, "{:<12} {:>14.6e} {:>14.6e} {:>10.1}{mark}", t.name, t.flops, t.words, t.messages)?;
    }
    writeln!(out, "{:<12} {:>14.6e} {:>14.6e} {:>10.1}", "total", rep.flops, rep.words, rep.messages)?;
    writeln!(out, "seconds={:.6e}", rep.seconds(&params))?;
    writeln!(out, "speedup={:.4}", predicted_speedup(op, shape, &params)?)?;
    Ok(())
}

fn verify(quick: bool, seed: u64) -> Result<bool> {
    let checks = bench::verify(quick, seed)?;
    let mut out = io::stdout().lock();
    let mut ok = true;
    for c in &checks {
        writeln!(out, "{c}")?;
        ok &= c.passed();
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    writeln!(out, "{} checks, {failed} failed", checks.len())?;
    Ok(ok)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gen { model, out, max_entries } => gen(&model, out, max_entries)?,
        Cmd::Run { model, op, p, comm, variant, eps0, norm, tree, allow_idle, csv, max_entries } => {
            run(&model, &op, p, &comm, &variant, eps0, &norm, &tree, allow_idle, csv, max_entries)?
        }
        Cmd::Cost { op, model, n, i, r, p, l, alpha, beta, gamma, format } => {
            cost(&op, model, n, i, r, p, l, CostModelParams { alpha, beta, gamma }, &format)?
        }
        Cmd::Verify { quick, seed } => {
            if !verify(quick, seed)? {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
