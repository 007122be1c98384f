use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cloudcache::config::NetworkConfig;
use cloudcache::experiments::{
    evaluate_point, parse_strategy, run_sweep, validation_suite, write_csv, EvalMethod, PolicyKind,
    SweepOutcome, SweepSpec, SweepVariable,
};
use cloudcache::hitprob::Strategy;
use cloudcache::interference::InterferenceLt;
use cloudcache::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cloudcache",
    version,
    about = "Cache placement and hit probability for cloud radio networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Network configuration (TOML). Defaults to the reference parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed of the random streams.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic network hit probability of the optimised placements.
    Analytic {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo network hit probability of the optimised placements.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Optimised caching probabilities for both selection strategies.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one parameter and write the hit curve as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Preset grid of an evaluation figure (2 to 7).
        #[arg(long, conflicts_with_all = ["variable", "values"])]
        figure: Option<u32>,
        /// Swept variable: beta_dB, d, N_c, gamma, M or alpha.
        #[arg(long, requires = "values")]
        variable: Option<String>,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', requires = "variable")]
        values: Vec<f64>,
        /// Comma-separated strategies (closest, best).
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<String>,
        /// Comma-separated methods (exact, approx, mc).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Comma-separated policies (optimized, most-popular).
        #[arg(long, value_delimiter = ',')]
        policies: Vec<String>,
        /// Record per-row wall-clock time (output is then not reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Run the invariant and oracle checks.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<NetworkConfig> {
    match &common.config {
        Some(path) => NetworkConfig::load(path),
        None => Ok(NetworkConfig::reference()),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn parse_list<T>(
    items: &[String],
    default: Vec<T>,
    parse: impl Fn(&str) -> Result<T>,
) -> Result<Vec<T>> {
    if items.is_empty() {
        Ok(default)
    } else {
        items.iter().map(|s| parse(s.trim())).collect()
    }
}

/// The configuration point itself as a one-value sweep over the user distance.
fn single_point(cfg: &NetworkConfig, common: &Common, methods: Vec<EvalMethod>) -> SweepSpec {
    SweepSpec {
        variable: SweepVariable::Distance,
        values: vec![cfg.geom.x_norm],
        strategies: vec![Strategy::Closest, Strategy::Best],
        methods,
        policies: vec![PolicyKind::Optimized],
        trials: common.trials,
        seed: common.seed,
        timings: false,
    }
}

fn finish(outcome: SweepOutcome, out: Option<&Path>) -> Result<ExitCode> {
    write_csv(&outcome.rows, output(out)?)?;
    for e in &outcome.errors {
        eprintln!("error: {e}");
    }
    Ok(if outcome.errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analytic { common } => {
            let cfg = load(&common)?;
            let spec = single_point(&cfg, &common, vec![EvalMethod::Exact, EvalMethod::Approx]);
            finish(evaluate_point(&cfg, &spec, 0), common.out.as_deref())
        }
        Command::Simulate { common } => {
            let cfg = load(&common)?;
            let spec = single_point(&cfg, &common, vec![EvalMethod::MonteCarlo]);
            spec.validate()?;
            finish(evaluate_point(&cfg, &spec, 0), common.out.as_deref())
        }
        Command::Optimize { common } => {
            let cfg = load(&common)?;
            let lt = std::sync::Arc::new(InterferenceLt::new(cfg.params, &cfg.geom)?);
            let pol = cloudcache::experiments::design_policies(&cfg, lt)?;
            let q = cfg.popularity()?;
            let mut w = output(common.out.as_deref())?;
            writeln!(w, "file,popularity,p_closest,p_best,p_most_popular")?;
            for i in 0..cfg.files {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    i + 1,
                    q.probabilities()[i],
                    pol.closest.probabilities()[i],
                    pol.best.probabilities()[i],
                    pol.most_popular.probabilities()[i]
                )?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            common,
            figure,
            variable,
            values,
            strategies,
            methods,
            policies,
            timings,
        } => {
            let cfg = load(&common)?;
            let mut spec = match (figure, variable) {
                (Some(n), _) => SweepSpec::figure(n)?,
                (None, Some(v)) => SweepSpec {
                    variable: v.parse()?,
                    values,
                    ..SweepSpec::figure(2)?
                },
                (None, None) => {
                    return Err(Error::Config(
                        "give --figure or --variable with --values".into(),
                    ))
                }
            };
            spec.strategies = parse_list(&strategies, spec.strategies, parse_strategy)?;
            spec.methods = parse_list(&methods, spec.methods, str::parse)?;
            spec.policies = parse_list(&policies, spec.policies, str::parse)?;
            spec.trials = common.trials;
            spec.seed = common.seed;
            spec.timings = timings;
            finish(run_sweep(&cfg, &spec)?, common.out.as_deref())
        }
        Command::Validate { common } => {
            let cfg = load(&common)?;
            let checks = validation_suite(&cfg, common.trials, common.seed)?;
            let mut w = output(common.out.as_deref())?;
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                writeln!(
                    w,
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )?;
            }
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
