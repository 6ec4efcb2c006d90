//! `hartogs` command line: curves, lemniscates, expansions, radii, the
//! continuation pipeline, singular fibers and capacities.
//!
//! Exit codes: 0 success, 2 parse or precondition error, 3 numerical
//! failure, 4 lemniscate budget exhausted (best candidate still written),
//! 5 hypotheses unmet.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_complex, parse_disk, RunConfig, TolProfile};
use hartogs::Error;

#[derive(Debug, Parser)]
#[command(name = "hartogs", version, about = "Analytic continuation along algebraic curves by Jacobi-Hartogs series")]
struct Cli {
    /// TOML run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default `hartogs-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    tol_profile: Option<TolProfile>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Inputs {
    /// Built-in scenario (see `hartogs continue --list`).
    #[arg(long)]
    scenario: Option<String>,

    /// Curve as an expression in xi, eta, e.g. `eta^2 - xi`.
    #[arg(long)]
    curve: Option<String>,

    /// Curve file: an expression or lines of `i j re im`.
    #[arg(long)]
    curve_file: Option<PathBuf>,

    /// f(z, w) over xi/zeta, eta/w, z/z1, z2, ..., with + - * / ^n and exp.
    #[arg(long)]
    function: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical values, monodromy and irreducibility of a curve
    Curve {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Lemniscate holding the disks K and avoiding the points Sigma
    Lemniscate {
        /// Point to avoid, `re,im` (repeatable).
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        sigma: Vec<[f64; 2]>,
        /// Disk of K, `re,im,radius` (repeatable).
        #[arg(long, value_parser = parse_disk, allow_hyphen_values = true)]
        disk: Vec<[f64; 3]>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Expansion coefficients at one parameter point
    Expand {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        level: Option<f64>,
        /// Parameter coordinate `re,im` (repeat per coordinate).
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: Vec<[f64; 2]>,
    },
    /// Radius of convergence over the parameter grid
    Radius {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        level: Option<f64>,
    },
    /// Full pipeline: atlas, singular fibers, analyticity verdict
    Continue {
        #[command(flatten)]
        inputs: Inputs,
        /// Print the built-in scenarios and exit.
        #[arg(long)]
        list: bool,
    },
    /// Weierstrass fit, capacities and inversion of a fiber table
    Singular {
        #[command(flatten)]
        inputs: Inputs,
        /// Fiber table (`z_index, ..., point_index, re, im, sheet`).
        #[arg(long)]
        fibers: Option<PathBuf>,
    },
    /// Logarithmic capacity of points, disks or a segment
    Capacity {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        point: Vec<[f64; 2]>,
        #[arg(long, value_parser = parse_disk, allow_hyphen_values = true)]
        disk: Vec<[f64; 3]>,
        /// Segment endpoints `a_re,a_im` given twice.
        #[arg(long, value_parser = parse_complex, num_args = 2, allow_hyphen_values = true)]
        segment: Option<Vec<[f64; 2]>>,
    },
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_)
        | Error::Precondition(_)
        | Error::GridTooSmall(_)
        | Error::DegeneratePolynomial(_)
        | Error::Unsupported(_)
        | Error::EmptySet
        | Error::OriginInSet => 2,
        Error::BudgetExhausted { .. } => 4,
        _ => 3,
    }
}

fn apply_inputs(cfg: &mut RunConfig, inputs: &Inputs) {
    if inputs.scenario.is_some() {
        cfg.scenario = inputs.scenario.clone();
    }
    if inputs.curve.is_some() {
        cfg.curve = inputs.curve.clone();
        cfg.curve_file = None;
    }
    if inputs.curve_file.is_some() {
        cfg.curve_file = inputs.curve_file.clone();
    }
    if inputs.function.is_some() {
        cfg.function = inputs.function.clone();
    }
}

fn run(cli: Cli) -> Result<commands::Outcome, Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let profile = cli.tol_profile.or(cfg.tol_profile).unwrap_or(TolProfile::Default);
    cfg.tol_profile = Some(profile);
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("hartogs-out"));
    let name = match &cli.command {
        Command::Curve { .. } => "curve",
        Command::Lemniscate { .. } => "lemniscate",
        Command::Expand { .. } => "expand",
        Command::Radius { .. } => "radius",
        Command::Continue { .. } => "continue",
        Command::Singular { .. } => "singular",
        Command::Capacity { .. } => "capacity",
    };
    if let Command::Continue { list: true, .. } = &cli.command {
        for s in hartogs::corpus::scenarios() {
            println!("{} v{}: {} (expected {})", s.id, s.version, s.summary, s.expected);
        }
        return Ok(commands::Outcome::Done);
    }
    match &cli.command {
        Command::Curve { inputs }
        | Command::Expand { inputs, .. }
        | Command::Radius { inputs, .. }
        | Command::Continue { inputs, .. }
        | Command::Singular { inputs, .. } => apply_inputs(&mut cfg, inputs),
        _ => {}
    }
    match &cli.command {
        Command::Lemniscate { sigma, disk, budget } => {
            if !sigma.is_empty() {
                cfg.lemniscate.sigma = sigma.clone();
            }
            if !disk.is_empty() {
                cfg.lemniscate.disks = disk.clone();
            }
            if let Some(b) = budget {
                cfg.lemniscate.budget = *b;
            }
        }
        Command::Expand { level, z, .. } => {
            if level.is_some() {
                cfg.expand.level = *level;
            }
            if !z.is_empty() {
                cfg.expand.z = Some(z.clone());
            }
        }
        Command::Radius { level, .. } => {
            if level.is_some() {
                cfg.expand.level = *level;
            }
        }
        Command::Singular { fibers: Some(p), .. } => cfg.singular.fibers = Some(p.clone()),
        Command::Capacity { point, disk, segment } => {
            use hartogs::lemniscate::Disk;
            use hartogs::singular::CompactSet;
            use hartogs::C64;
            let c = |p: &[f64; 2]| C64::new(p[0], p[1]);
            if let Some(s) = segment {
                cfg.capacity.set = Some(CompactSet::Segment { a: c(&s[0]), b: c(&s[1]) });
            } else if !disk.is_empty() {
                cfg.capacity.set =
                    Some(CompactSet::Disks { disks: disk.iter().map(|d| Disk::new(C64::new(d[0], d[1]), d[2])).collect() });
            } else if !point.is_empty() {
                cfg.capacity.set = Some(CompactSet::Points { points: point.iter().map(c).collect() });
            }
        }
        _ => {}
    }
    std::fs::create_dir_all(&out)
        .map_err(|e| Error::Precondition(format!("cannot create output directory {}: {e}", out.display())))?;
    let ctx = commands::Context { cfg, out, profile, workers: cli.workers, command: name };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.max(1))
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    pool.install(|| match name {
        "curve" => commands::curve(&ctx),
        "lemniscate" => commands::lemniscate(&ctx),
        "expand" => commands::expand(&ctx),
        "radius" => commands::radius(&ctx),
        "continue" => commands::continue_(&ctx),
        "singular" => commands::singular(&ctx),
        _ => commands::capacity(&ctx),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(commands::Outcome::Done) => ExitCode::SUCCESS,
        Ok(commands::Outcome::HypothesesUnmet) => ExitCode::from(5),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
