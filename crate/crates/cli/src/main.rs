//! `nakao`: command-line front end for the blow-up laboratory.
//!
//! Every command writes its CSV/JSON outputs and one `manifest.json` into the
//! output directory (`--out-dir`, or `NAKAO_OUT_DIR`). `rerun` replays a
//! manifest. Exit codes: 0 ok, 1 runtime or audit failure, 2 usage error.

mod job;
mod manifest;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};

use nakao_core::curves::{Curve, CurvePoint, DampingKind, Exponents, Range};
use nakao_core::damping::DampingSpec;
use nakao_core::exec::Execution;
use nakao_core::iteration::{LadderParams, Part, MAX_RUNGS};
use nakao_core::odi::{OdiConfig, OdiSweep, DEFAULT_THRESHOLD};
use nakao_core::pde::{ModelConfig, PdeSweep};
use nakao_core::verify::{demo_ladder, Suite};

use job::{execute, read_config, Failure, Job};
use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(
    name = "nakao",
    version,
    about = "Blow-up and lifespan laboratory for a weakly coupled damped wave system"
)]
struct Cli {
    /// Output directory for CSV/JSON files and the run manifest.
    #[arg(
        long,
        global = true,
        env = "NAKAO_OUT_DIR",
        default_value = "nakao-out"
    )]
    out_dir: PathBuf,
    /// Worker threads for sweeps and scans (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a critical curve at one point.
    Curves(CurvesArgs),
    /// Evaluate Γ(n,p,q,μ) on a (p, q) grid.
    Scan(ScanArgs),
    /// Integrate the ordinary differential inequality system.
    Odi(OdiArgs),
    /// Build an iteration ladder and its lifespan bound.
    Iterate(IterateArgs),
    /// Solve the radial PDE system and audit it.
    Pde(PdeArgs),
    /// Lifespan sweep over ε.
    Sweep(SweepArgs),
    /// Run an invariant suite.
    Verify(VerifyArgs),
    /// Replay a run manifest.
    Rerun(RerunArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CurveArg {
    W,
    Dw,
    N1,
    N2,
    Mu,
}

impl From<CurveArg> for Curve {
    fn from(c: CurveArg) -> Self {
        match c {
            CurveArg::W => Curve::W,
            CurveArg::Dw => Curve::Dw,
            CurveArg::N1 => Curve::N1,
            CurveArg::N2 => Curve::N2,
            CurveArg::Mu => Curve::Mu,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DampingArg {
    ScaleInvariant,
    Scattering,
}

impl From<DampingArg> for DampingKind {
    fn from(d: DampingArg) -> Self {
        match d {
            DampingArg::ScaleInvariant => DampingKind::ScaleInvariant,
            DampingArg::Scattering => DampingKind::Scattering,
        }
    }
}

#[derive(Args, Debug)]
struct CurvesArgs {
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, allow_negative_numbers = true)]
    p: f64,
    #[arg(long, allow_negative_numbers = true)]
    q: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, value_enum, default_value = "mu")]
    curve: CurveArg,
    /// Damping regime used for the lifespan provenance.
    #[arg(long, value_enum, default_value = "scale-invariant")]
    damping: DampingArg,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, default_value_t = 1.05)]
    p_min: f64,
    #[arg(long, default_value_t = 6.0)]
    p_max: f64,
    #[arg(long, default_value_t = 1.05)]
    q_min: f64,
    #[arg(long, default_value_t = 6.0)]
    q_max: f64,
    /// Nodes per axis.
    #[arg(long, default_value_t = 101)]
    resolution: usize,
}

#[derive(Args, Debug)]
struct OdiArgs {
    /// OdiConfig JSON; the demo system when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 500.0)]
    t_max: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct IterateArgs {
    /// LadderParams JSON; the demo ladder when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Iteration part: 1 seeds F, 2 seeds G.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    part: u8,
    #[arg(long, default_value_t = 40)]
    j_max: usize,
    /// Override the seed amplitude A.
    #[arg(long)]
    amplitude: Option<f64>,
}

#[derive(Args, Debug)]
struct PdeArgs {
    /// ModelConfig JSON; the demo model when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Scale-invariant damping μ/(1+t) with this μ.
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Grid spacing.
    #[arg(long)]
    h: Option<f64>,
    /// Keep full fields every this many steps in snapshots.bin.
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Also run at h/2 and compare the identity residuals.
    #[arg(long)]
    refine: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepKind {
    Odi,
    Pde,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    kind: SweepKind,
    /// OdiSweep or PdeSweep JSON; the demo sweep when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the ε list.
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// One of specialfn, curves, iteration, odi, pde, all.
    #[arg(long)]
    suite: Suite,
}

#[derive(Args, Debug)]
struct RerunArgs {
    #[arg(long)]
    manifest: PathBuf,
}

fn resolve(command: Command) -> Result<(Job, Vec<PathBuf>), Failure> {
    let inputs: Vec<PathBuf>;
    let job = match command {
        Command::Curves(a) => {
            inputs = vec![];
            Job::Curves {
                point: CurvePoint::new(a.n, a.p, a.q, a.mu)?,
                curve: a.curve.into(),
                damping: a.damping.into(),
            }
        }
        Command::Scan(a) => {
            inputs = vec![];
            Job::Scan {
                n: a.n,
                mu: a.mu,
                p: Range {
                    lo: a.p_min,
                    hi: a.p_max,
                },
                q: Range {
                    lo: a.q_min,
                    hi: a.q_max,
                },
                resolution: a.resolution,
            }
        }
        Command::Odi(a) => {
            let config = match &a.config {
                Some(path) => read_config(path)?,
                None => OdiConfig::demo(),
            };
            inputs = a.config.into_iter().collect();
            Job::Odi {
                config,
                t_max: a.t_max,
                threshold: a.threshold,
            }
        }
        Command::Iterate(a) => {
            let mut params: LadderParams = match &a.config {
                Some(path) => read_config(path)?,
                None => demo_ladder(),
            };
            if let Some(amp) = a.amplitude {
                params.amplitude = amp;
            }
            if a.j_max > MAX_RUNGS {
                return Err(Failure::usage(anyhow!(
                    "--j-max {} exceeds the cap {MAX_RUNGS}",
                    a.j_max
                )));
            }
            inputs = a.config.into_iter().collect();
            Job::Iterate {
                params,
                part: if a.part == 1 { Part::One } else { Part::Two },
                j_max: a.j_max,
            }
        }
        Command::Pde(a) => {
            let mut config: ModelConfig = match &a.config {
                Some(path) => read_config(path)?,
                None => ModelConfig::demo(),
            };
            if let Some(n) = a.n {
                config.n = n;
            }
            if a.p.is_some() || a.q.is_some() {
                config.exponents = Exponents::new(
                    a.p.unwrap_or(config.exponents.p()),
                    a.q.unwrap_or(config.exponents.q()),
                )?;
            }
            if let Some(mu) = a.mu {
                config.damping = DampingSpec::scale_invariant(mu)?;
            }
            if let Some(e) = a.epsilon {
                config.epsilon = e;
            }
            if let Some(t) = a.t_max {
                config.t_max = t;
            }
            if let Some(h) = a.h {
                config.grid.h = Some(h);
            }
            if a.snapshot_every.is_some() {
                config.snapshot_every = a.snapshot_every;
            }
            config.validate()?;
            inputs = a.config.into_iter().collect();
            Job::Pde {
                config,
                refine: a.refine,
            }
        }
        Command::Sweep(a) => {
            let job = match a.kind {
                SweepKind::Odi => {
                    let mut sweep: OdiSweep = match &a.config {
                        Some(path) => read_config(path)?,
                        None => OdiSweep::demo(),
                    };
                    if let Some(e) = a.epsilons {
                        sweep.epsilons = e;
                    }
                    Job::SweepOdi { sweep }
                }
                SweepKind::Pde => {
                    let mut sweep: PdeSweep = match &a.config {
                        Some(path) => read_config(path)?,
                        None => PdeSweep::demo(),
                    };
                    if let Some(e) = a.epsilons {
                        sweep.epsilons = e;
                    }
                    Job::SweepPde { sweep }
                }
            };
            inputs = a.config.into_iter().collect();
            job
        }
        Command::Verify(a) => {
            inputs = vec![];
            Job::Verify { suite: a.suite }
        }
        Command::Rerun(a) => {
            let m = RunManifest::read(&a.manifest).map_err(|e| {
                Failure::usage(anyhow!(
                    "cannot load manifest {}: {e}",
                    a.manifest.display()
                ))
            })?;
            inputs = vec![a.manifest];
            m.params
        }
    };
    Ok((job, inputs))
}

fn execution(jobs: Option<usize>) -> Result<Execution, Failure> {
    match jobs {
        Some(0) => Err(Failure::usage(anyhow!("--jobs must be >= 1"))),
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(Failure::runtime)?;
            #[cfg(not(feature = "parallel"))]
            let _ = n;
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::Parallel),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = execution(cli.jobs)?;
    let (job, inputs) = resolve(cli.command)?;
    let dir: &Path = &cli.out_dir;
    let outcome = execute(&job, dir, exec)?;
    let mut manifest = RunManifest::new(job, inputs);
    manifest.calibration = outcome.calibration;
    manifest.outputs = outcome.outputs;
    manifest.outputs.push(dir.join(manifest::MANIFEST_NAME));
    manifest.write(dir)?;
    // a closed pipe (e.g. `| head`) is not a failure of the run
    let _ = writeln!(std::io::stdout().lock(), "{}", outcome.summary);
    match outcome.failure {
        Some(msg) => Err(Failure::runtime(anyhow!(msg))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
