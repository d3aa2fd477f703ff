//! oscillib: maximal operators, oscillation-inequality checks and Whitney
//! geometry on uniform grids.
//!
//! Exit codes: 0 success, 1 invariant-violation flags raised during a run,
//! 2 invalid configuration, 3 I/O or file-format failure.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use oscillib::error::Error;

use commands::{cmd_gen, cmd_maximal, cmd_verify, cmd_whitney, parse_rational, WhitneyOptions};
use config::ScenarioConfig;

#[derive(Parser)]
#[command(
    name = "oscillib",
    version,
    about = "Discrete maximal operators and oscillation-inequality checks on uniform grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a test function (MPGF) and optionally its gradient measure (MPGM)
    Gen(RunArgs),
    /// Apply a maximal operator to a grid file
    Maximal(MaximalArgs),
    /// Run a verification scenario, emitting CSV and JSON reports
    Verify(RunArgs),
    /// Dump an exact-rational Whitney decomposition as JSON
    Whitney(WhitneyArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON scenario config; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed for generators and random cube families
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available cores; OSCILLIB_THREADS as fallback)
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Operator variant: noncentred|centred|fractional|domain
    #[arg(long)]
    variant: Option<String>,
    /// Fractional exponent in [0, n]
    #[arg(long)]
    beta: Option<f64>,
    /// Poincaré exponent alpha in [0, 1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Oscillation exponent q >= 1
    #[arg(long)]
    q: Option<f64>,
    /// Generator name: bump|cone|cusp|log-cusp|step|disc|random
    #[arg(long)]
    generator: Option<String>,
    /// Cusp exponent gamma (with --generator cusp)
    #[arg(long)]
    gamma: Option<f64>,
    /// Grid extent in cells per axis
    #[arg(long)]
    extent: Option<usize>,
    /// Grid dimension
    #[arg(long)]
    ndim: Option<usize>,
    /// Cell width (default 1/extent)
    #[arg(long)]
    cell_width: Option<f64>,
    /// Check kind for verify: theorem|fpw|gradient|bmo|holder|fractional
    #[arg(long)]
    check: Option<String>,
    /// Also write the gradient measure (gen)
    #[arg(long)]
    with_gradient_measure: bool,
    /// Output file stem
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args, Clone)]
struct MaximalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Input grid file (.mpgf for functions, .mpgm for measures)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Mask file for the domain variant (MPGF of 0/1 values)
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Largest cube side in cells
    #[arg(long)]
    max_side: Option<usize>,
    /// Check the result against exhaustive enumeration (small grids only)
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Clone)]
struct WhitneyArgs {
    /// Dimension n
    #[arg(long, default_value_t = 2)]
    ndim: usize,
    /// Number of generations
    #[arg(long, default_value_t = 4)]
    depth: u32,
    /// Side of the decomposed cube, as "p" or "p/q"
    #[arg(long, default_value = "1")]
    big_l: String,
    /// Annulus half-gap r0, as "p" or "p/q"
    #[arg(long)]
    r0: Option<String>,
    /// Trace the chain of every cube to the central cube
    #[arg(long)]
    chains: bool,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Format(_) => 3,
        _ => 2,
    }
}

fn resolve_threads(flag: Option<usize>, cfg: Option<usize>) -> usize {
    flag.or(cfg)
        .or_else(|| {
            std::env::var("OSCILLIB_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0)
}

fn parse_generator_flag(
    name: &str,
    gamma: Option<f64>,
) -> Result<oscillib::generators::Generator, Error> {
    use oscillib::generators::Generator;
    Ok(match name {
        "bump" => Generator::Bump { radius: None, center: None },
        "cone" => Generator::Cone { radius: None, center: None },
        "cusp" => Generator::Cusp {
            gamma: gamma.ok_or_else(|| Error::Config("cusp generator needs --gamma".into()))?,
            center: None,
        },
        "log-cusp" => Generator::LogCusp { cap: None, center: None },
        "step" => Generator::Step { axis: None },
        "disc" => Generator::Disc { radius: None, edge: None, center: None },
        "random" => Generator::Random,
        other => {
            return Err(Error::Format(format!(
                "unknown generator {other:?}; expected bump|cone|cusp|log-cusp|step|disc|random"
            )))
        }
    })
}

fn parse_check_flag(name: &str) -> Result<config::CheckKind, Error> {
    use config::CheckKind;
    Ok(match name {
        "theorem" => CheckKind::Theorem,
        "fpw" => CheckKind::Fpw,
        "gradient" => CheckKind::Gradient,
        "bmo" => CheckKind::Bmo,
        "holder" => CheckKind::Holder,
        "fractional" => CheckKind::Fractional,
        other => {
            return Err(Error::Format(format!(
                "unknown check {other:?}; expected theorem|fpw|gradient|bmo|holder|fractional"
            )))
        }
    })
}

fn scenario_from_args(args: &RunArgs) -> Result<ScenarioConfig, Error> {
    let base = match &args.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    let generator = match &args.generator {
        Some(name) => Some(parse_generator_flag(name, args.gamma)?),
        None => None,
    };
    let check = match &args.check {
        Some(name) => Some(parse_check_flag(name)?),
        None => None,
    };
    let overlay = ScenarioConfig {
        check,
        generator,
        ndim: args.ndim,
        extent: args.extent,
        cell_width: args.cell_width,
        seed: args.seed,
        threads: args.threads,
        variant: args.variant.clone(),
        beta: args.beta,
        alpha: args.alpha,
        q: args.q,
        out_dir: args.out.as_ref().map(|p| p.to_string_lossy().into_owned()),
        output: args.output.clone(),
        with_gradient_measure: if args.with_gradient_measure { Some(true) } else { None },
        ..Default::default()
    };
    Ok(base.merged_with(&overlay))
}

fn run() -> Result<i32, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen(args) => {
            let cfg = scenario_from_args(&args)?;
            oscillib::set_thread_count(resolve_threads(args.threads, cfg.threads));
            let written = cmd_gen(&cfg)?;
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Maximal(args) => {
            let mut cfg = scenario_from_args(&args.run)?;
            if let Some(input) = &args.input {
                cfg.input = Some(input.to_string_lossy().into_owned());
            }
            if let Some(mask) = &args.mask {
                cfg.mask = Some(config::MaskSpec::File {
                    path: mask.to_string_lossy().into_owned(),
                });
            }
            if args.max_side.is_some() {
                cfg.max_side = args.max_side;
            }
            oscillib::set_thread_count(resolve_threads(args.run.threads, cfg.threads));
            let (path, oracle_ok) = cmd_maximal(&cfg, args.oracle)?;
            eprintln!("wrote {}", path.display());
            if !oracle_ok {
                eprintln!("oracle mismatch: fast path differs from exhaustive enumeration");
                return Ok(1);
            }
            Ok(0)
        }
        Command::Verify(args) => {
            let cfg = scenario_from_args(&args)?;
            oscillib::set_thread_count(resolve_threads(args.threads, cfg.threads));
            let violations = cmd_verify(&cfg)?;
            if violations > 0 {
                eprintln!("{violations} invariant-violation flags raised");
                Ok(1)
            } else {
                Ok(0)
            }
        }
        Command::Whitney(args) => {
            let r0 = match &args.r0 {
                Some(s) => Some(parse_rational(s)?),
                None => None,
            };
            let opts = WhitneyOptions {
                ndim: args.ndim,
                depth: args.depth,
                big_l: parse_rational(&args.big_l)?,
                r0,
                chains: args.chains,
                out: args.out.unwrap_or_else(|| PathBuf::from("out")),
            };
            let path = cmd_whitney(&opts)?;
            eprintln!("wrote {}", path.display());
            Ok(0)
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code_for(&e));
        }
    }
}
