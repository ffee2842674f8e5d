//! `slsr1`: run sampled SR1 experiments from a TOML config and write
//! trajectories, ledgers and a JSON report.
//!
//! Exit codes: 0 converged or hit the iteration cap, 1 numerical abort,
//! 2 invalid config or arguments, 3 runtime failure (I/O, transport).
//! Log level comes from `SLSR1_LOG` (`error`, `warn`, `info`, `debug`).

use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use slsr1_core::amdahl_bound;
use slsr1_dist::export::read_trajectory_json;
use slsr1_dist::ledger::gibibytes;
use slsr1_dist::report::{build_report, compare, write_artifacts, RunReport};
use slsr1_dist::transport::serve_worker;
use slsr1_dist::{ledger_predict, run, Backend, DistError, RunConfig, Trajectory, Variant};

const LOG_ENV: &str = "SLSR1_LOG";

#[derive(Parser)]
#[command(name = "slsr1", version, about = "Sampled SR1 trust-region experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write its artifacts.
    Run(RunArgs),
    /// Serve one worker rank over TCP until the master shuts it down.
    Worker(WorkerArgs),
    /// Print the closed-form per-iteration traffic.
    Predict(PredictArgs),
    /// Evaluate the Amdahl speedup bound.
    Amdahl(AmdahlArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Serial,
    Naive,
    Dslsr1,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Serial => Variant::Serial,
            VariantArg::Naive => Variant::Naive,
            VariantArg::Dslsr1 => Variant::DsLsr1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Sim,
    Tcp,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_name = "K")]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    transport: Option<TransportArg>,
    /// Sampler seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

impl Overrides {
    fn load(&self) -> Result<RunConfig, DistError> {
        let mut cfg = RunConfig::from_path(&self.config)?;
        if let Some(v) = self.variant {
            cfg.variant = v.into();
        }
        if let Some(k) = self.workers {
            cfg.workers = k;
        }
        if let Some(t) = self.transport {
            cfg.transport.backend = match t {
                TransportArg::Sim => Backend::Sim,
                TransportArg::Tcp => Backend::Tcp,
            };
        }
        if let Some(s) = self.seed {
            cfg.optimizer.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, value_name = "4|8", value_parser = clap::builder::PossibleValuesParser::new(["4", "8"]))]
    bytes_per_float: Option<String>,
    /// Record the model spectrum every N iterations.
    #[arg(long, value_name = "N")]
    spectrum_every: Option<usize>,
    /// Run both acceptance modes and record the Jaccard similarity.
    #[arg(long)]
    jaccard: bool,
    /// Run a second variant on the same config and pair the reports.
    #[arg(long, value_enum, value_name = "VARIANT")]
    variant_compare: Option<VariantArg>,
}

#[derive(Args)]
struct WorkerArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long)]
    rank: usize,
    /// Address to listen on, `host:port`.
    #[arg(long, value_name = "ADDR")]
    listen: String,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, value_name = "D")]
    dim: u64,
    #[arg(long, value_name = "M")]
    memory: u64,
    /// Accepted pairs; defaults to the memory.
    #[arg(long, value_name = "J")]
    accepted: Option<u64>,
    #[arg(long, value_name = "N", default_value_t = 0)]
    cg_iters: u64,
    #[arg(long, value_enum, default_value = "dslsr1")]
    variant: VariantArg,
}

#[derive(Args)]
struct AmdahlArgs {
    /// Serial fraction in [0, 1].
    #[arg(
        long,
        value_name = "T",
        conflicts_with = "trajectory",
        required_unless_present = "trajectory"
    )]
    serial_fraction: Option<f64>,
    /// Take the serial fraction (and worker count) from a trajectory JSON.
    #[arg(long, value_name = "PATH")]
    trajectory: Option<PathBuf>,
    #[arg(long, value_name = "K")]
    workers: Option<usize>,
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<DistError> for Failure {
    fn from(e: DistError) -> Self {
        match e {
            DistError::Config(_)
            | DistError::Core(
                slsr1_core::Error::UnsupportedDiagnostic(_)
                | slsr1_core::Error::InvalidArgument(_)
                | slsr1_core::Error::Format(_),
            ) => Failure::Usage(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Worker(a) => cmd_worker(a).map(|()| ExitCode::SUCCESS),
        Command::Predict(a) => cmd_predict(a).map(|()| ExitCode::SUCCESS),
        Command::Amdahl(a) => cmd_amdahl(a).map(|()| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn execute(cfg: &RunConfig, out: &Path, prefix: &str) -> Result<(Trajectory, RunReport), Failure> {
    log::info!(
        "running {} on {} worker(s), {:?} transport",
        cfg.variant.name(),
        cfg.workers,
        cfg.transport.backend
    );
    let t = run(cfg)?;
    let artifacts = write_artifacts(&t, out, prefix)?;
    let report = build_report(cfg, &t, artifacts)?;
    Ok((t, report))
}

/// The same experiment under another variant, minus diagnostics it cannot
/// produce.
fn comparison_config(base: &RunConfig, variant: Variant) -> RunConfig {
    let mut cfg = base.clone();
    cfg.variant = variant;
    cfg.optimizer.acceptance = None;
    match variant {
        Variant::Serial => cfg.workers = 1,
        Variant::DsLsr1 => {
            cfg.optimizer.compare_acceptance = false;
            cfg.optimizer.spectrum_every = 0;
        }
        Variant::Naive => {}
    }
    cfg
}

fn cmd_run(a: RunArgs) -> Result<ExitCode, Failure> {
    let mut cfg = a.common.load()?;
    if let Some(b) = &a.bytes_per_float {
        cfg.transport.bytes_per_float = b.parse().expect("restricted to 4 or 8");
    }
    if let Some(n) = a.spectrum_every {
        cfg.optimizer.spectrum_every = n;
    }
    if a.jaccard {
        cfg.optimizer.compare_acceptance = true;
    }
    cfg.validate()?;

    let (t, mut report) = execute(&cfg, &a.out, "")?;
    if let Some(v) = a.variant_compare {
        let other_cfg = comparison_config(&cfg, v.into());
        other_cfg.validate()?;
        let prefix = format!("{}_", other_cfg.variant.name());
        let (other_t, other_report) = execute(&other_cfg, &a.out, &prefix)?;
        compare(&mut report, &t, other_report, &other_t);
    }

    let report_path = a.out.join("report.json");
    let text = serde_json::to_string_pretty(&report).context("serializing report")?;
    fs::write(&report_path, text + "\n").with_context(|| format!("writing {}", report_path.display()))?;

    println!(
        "{} K={} stop={:?} iterations={} f={:e} |g|={:e} floats={} report={}",
        cfg.variant.name(),
        cfg.workers,
        t.stop,
        t.iterations,
        t.final_f,
        t.final_grad_norm,
        report.ledger.total_floats,
        report_path.display()
    );
    if let Some(c) = &report.comparison {
        if let (Some(m), Some(p)) = (c.per_iteration_ratio.first(), c.predicted_ratio.first()) {
            println!(
                "{} / {} floats per iteration: {m:.4} (predicted {p:.4})",
                c.baseline.name(),
                c.other.name()
            );
        }
    }
    if t.stop.is_abort() {
        eprintln!("error: run aborted: {:?}", t.stop);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_worker(a: WorkerArgs) -> Result<(), Failure> {
    let cfg = a.common.load()?;
    let worker = cfg.worker(a.rank)?;
    let listener = TcpListener::bind(&a.listen).with_context(|| format!("binding {}", a.listen))?;
    log::info!(
        "worker {} listening on {}",
        a.rank,
        listener.local_addr().context("local address")?
    );
    let (stream, peer) = listener.accept().context("accepting master connection")?;
    log::info!("worker {} serving {peer}", a.rank);
    serve_worker(stream, worker)?;
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<(), Failure> {
    let variant: Variant = a.variant.into();
    let j = a.accepted.unwrap_or(a.memory);
    if j > a.memory {
        return Err(Failure::Usage(anyhow::anyhow!(
            "accepted pairs {j} exceed memory {}",
            a.memory
        )));
    }
    let p = ledger_predict(a.dim, a.memory, j, a.cg_iters, variant);
    let out = serde_json::json!({
        "variant": variant.name(),
        "dim": a.dim,
        "memory": a.memory,
        "accepted": j,
        "cg_iters": a.cg_iters,
        "prediction": p,
        "gib_at_4": gibibytes(p.total, 4),
        "gib_at_8": gibibytes(p.total, 8),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&out).context("serializing prediction")?
    );
    Ok(())
}

fn cmd_amdahl(a: AmdahlArgs) -> Result<(), Failure> {
    let (t, traj_workers) = match (&a.serial_fraction, &a.trajectory) {
        (Some(t), _) => (*t, None),
        (None, Some(path)) => {
            let traj = read_trajectory_json(path).with_context(|| format!("reading {}", path.display()))?;
            (traj.serial_fraction(), Some(traj.workers))
        }
        (None, None) => unreachable!("clap requires one of them"),
    };
    let k = a
        .workers
        .or(traj_workers)
        .ok_or_else(|| Failure::Usage(anyhow::anyhow!("--workers is required with --serial-fraction")))?;
    let bound = amdahl_bound(t, k).map_err(|e| Failure::Usage(e.into()))?;
    let out = serde_json::json!({ "serial_fraction": t, "workers": k, "bound": bound });
    println!("{}", serde_json::to_string_pretty(&out).context("serializing bound")?);
    Ok(())
}
