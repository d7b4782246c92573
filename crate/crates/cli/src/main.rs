//! `dnoise`: exact discrete Gaussian/Laplace sampling and privacy accounting.

mod account;
mod parse;

use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dnoise_core::accountant::{compare_fixed_privacy, compare_fixed_utility};
use dnoise_core::numeric::decimal;
use dnoise_core::randcore::{os_source, seeded_source, BitSource};
use dnoise_core::samplers::{
    sample_dgauss, sample_dgauss_scaled, sample_dlaplace, DGaussParams, DLapParams, SampleStats,
    ScaledDGaussParams,
};
use dnoise_core::verify::{self, Suite, VerifyOptions};
use dnoise_core::{Error, Rational};
use rug::float::Round;

const SEED_VAR: &str = "DNOISE_TEST_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "dnoise",
    version,
    about = "Exact discrete Gaussian and Laplace noise with certified privacy accounting"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Dist {
    Dgauss,
    Dlaplace,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    FixedUtility,
    FixedPrivacy,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Draw samples, one per line.
    Sample {
        #[arg(long, value_enum)]
        dist: Dist,
        /// Variance parameter of the discrete Gaussian.
        #[arg(long, value_parser = parse::number, required_if_eq("dist", "dgauss"))]
        sigma2: Option<Rational>,
        /// Scale t/s of the discrete Laplace.
        #[arg(long, value_parser = parse::number, required_if_eq("dist", "dlaplace"))]
        scale: Option<Rational>,
        #[arg(long, value_parser = parse::count)]
        n: u64,
        /// Grid step of a scaled discrete Gaussian on mu + alpha Z.
        #[arg(long, value_parser = parse::number)]
        alpha: Option<Rational>,
        #[arg(long, value_parser = parse::number, allow_hyphen_values = true)]
        mu: Option<Rational>,
        /// Append outer iterations and bits consumed to each line.
        #[arg(long)]
        stats: bool,
    },
    /// Privacy accounting; prints one JSON object.
    Account {
        #[command(subcommand)]
        cmd: account::AccountCmd,
    },
    /// Gaussian versus Laplace comparison tables as CSV.
    Compare {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 100)]
        k: u32,
        #[arg(long, value_parser = parse::number, default_value = "2500")]
        variance: Rational,
        /// a:b:n
        #[arg(long, default_value = "0:4:41")]
        eps_grid: String,
        #[arg(long, value_parser = parse::number, default_value = "1")]
        eps: Rational,
        #[arg(long, value_parser = parse::number, default_value = "1e-6")]
        delta: Rational,
        /// a:b or a:b:step
        #[arg(long, default_value = "1:100")]
        k_grid: String,
        #[arg(long, default_value_t = 128)]
        precision_bits: u32,
    },
    /// Statistical and certified self-checks; exit status 1 on any failure.
    Verify {
        #[arg(long, default_value = "all", value_parser = ["stat", "bounds", "perf", "all"])]
        suite: String,
        #[arg(long, value_parser = parse::count, default_value = "1000000")]
        samples: u64,
        #[arg(long, default_value_t = 1e-3)]
        sig: f64,
        #[arg(long, default_value_t = 128)]
        precision_bits: u32,
    },
}

/// Exit status and message.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Indeterminate(_) | Error::NonConvergence(_) => 3,
            Error::Domain(_) | Error::Parse(_) | Error::Grid(_) => 2,
        };
        Failure(code, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(1, format!("output error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure(1, format!("output error: {e}"))
    }
}

fn seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(v) => {
            let s = v.trim().parse::<u64>().map_err(|_| {
                Failure(
                    2,
                    format!("{SEED_VAR} must be an unsigned integer, got '{v}'"),
                )
            })?;
            eprintln!(
                "warning: {SEED_VAR} is set; randomness is deterministic and unfit for privacy"
            );
            Ok(Some(s))
        }
        Err(_) => Ok(None),
    }
}

fn source() -> Result<Box<dyn BitSource>, Failure> {
    Ok(match seed()? {
        Some(s) => Box::new(seeded_source(s)),
        None => Box::new(os_source()),
    })
}

fn stats_suffix(show: bool, st: &SampleStats) -> String {
    if show {
        format!(",{},{}", st.outer_iterations, st.bits_consumed)
    } else {
        String::new()
    }
}

#[allow(clippy::too_many_arguments)]
fn sample(
    dist: Dist,
    sigma2: Option<&Rational>,
    scale: Option<&Rational>,
    n: u64,
    alpha: Option<&Rational>,
    mu: Option<&Rational>,
    stats: bool,
) -> Result<(), Failure> {
    let usage = |m: &str| Failure(2, m.to_string());
    let mut src = source()?;
    let mut out = BufWriter::new(io::stdout().lock());
    match dist {
        Dist::Dgauss => {
            let sigma2 = sigma2
                .ok_or_else(|| usage("--sigma2 is required for --dist dgauss"))?
                .clone();
            if alpha.is_some() || mu.is_some() {
                let a = alpha.cloned().unwrap_or_else(Rational::one);
                let m = mu.cloned().unwrap_or_else(Rational::zero);
                let params = ScaledDGaussParams::new(a, m, sigma2)?;
                for _ in 0..n {
                    let (x, st) = sample_dgauss_scaled(src.as_mut(), &params);
                    writeln!(out, "{x}{}", stats_suffix(stats, &st))?;
                }
            } else {
                let params = DGaussParams::new(sigma2)?;
                for _ in 0..n {
                    let (x, st) = sample_dgauss(src.as_mut(), &params);
                    writeln!(out, "{x}{}", stats_suffix(stats, &st))?;
                }
            }
        }
        Dist::Dlaplace => {
            if alpha.is_some() || mu.is_some() {
                return Err(usage("--alpha and --mu apply to --dist dgauss only"));
            }
            let scale = scale.ok_or_else(|| usage("--scale is required for --dist dlaplace"))?;
            let params =
                DLapParams::from_scale(scale).map_err(|e| Failure(2, format!("--scale: {e}")))?;
            for _ in 0..n {
                let (x, st) = sample_dlaplace(src.as_mut(), &params);
                writeln!(out, "{x}{}", stats_suffix(stats, &st))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn sig6(x: &rug::Float, round: Round) -> String {
    decimal(x, 6, round)
}

fn compare(cmd: &Cmd) -> Result<(), Failure> {
    let Cmd::Compare {
        mode,
        k,
        variance,
        eps_grid,
        eps,
        delta,
        k_grid,
        precision_bits,
    } = cmd
    else {
        unreachable!("dispatched on Compare")
    };
    let p = *precision_bits;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    match mode {
        Mode::FixedUtility => {
            let eps_grid =
                parse::eps_grid(eps_grid).map_err(|e| Failure(2, format!("--eps-grid: {e}")))?;
            if eps_grid.is_empty() {
                return Err(Failure(2, "--eps-grid is empty".into()));
            }
            let rows = compare_fixed_utility(*k, variance, &eps_grid, p)?;
            w.write_record(["eps", "delta_gauss", "delta_lap"])?;
            for r in rows {
                w.write_record([
                    r.eps.to_f64().to_string(),
                    sig6(r.delta_gauss.hi(), Round::Up),
                    sig6(r.delta_lap.hi(), Round::Up),
                ])?;
            }
        }
        Mode::FixedPrivacy => {
            let k_grid = parse::k_grid(k_grid).map_err(|e| Failure(2, format!("--k-grid: {e}")))?;
            if k_grid.is_empty() {
                return Err(Failure(2, "--k-grid is empty".into()));
            }
            let rows = compare_fixed_privacy(eps, delta, &k_grid, p)?;
            w.write_record(["k", "var_gauss", "var_lap", "ratio"])?;
            for r in rows {
                w.write_record([
                    r.k.to_string(),
                    sig6(&r.var_gauss.mid(), Round::Nearest),
                    sig6(&r.var_lap.mid(), Round::Nearest),
                    sig6(&r.ratio.mid(), Round::Nearest),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn run_verify(suite: &str, samples: u64, sig: f64, prec: u32) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let opts = VerifyOptions {
        samples: samples as usize,
        sig,
        seed: seed()?,
        prec,
    };
    if !(sig > 0.0 && sig < 1.0) {
        return Err(Failure(2, format!("--sig must lie in (0, 1), got {sig}")));
    }
    let outcomes = verify::run(suite, &opts)?;
    let mut out = io::stdout().lock();
    for o in &outcomes {
        writeln!(out, "{o}")?;
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.name.as_str())
        .collect();
    if failed.is_empty() {
        writeln!(out, "PASS all {} checks", outcomes.len())?;
        Ok(())
    } else {
        Err(Failure(
            1,
            format!("{} checks failed: {}", failed.len(), failed.join(", ")),
        ))
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::Sample {
            dist,
            sigma2,
            scale,
            n,
            alpha,
            mu,
            stats,
        } => sample(
            *dist,
            sigma2.as_ref(),
            scale.as_ref(),
            *n,
            alpha.as_ref(),
            mu.as_ref(),
            *stats,
        ),
        Cmd::Account { cmd } => {
            let v = account::run(cmd)?;
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &v).map_err(|e| Failure(1, e.to_string()))?;
            writeln!(out)?;
            Ok(())
        }
        c @ Cmd::Compare { .. } => compare(c),
        Cmd::Verify {
            suite,
            samples,
            sig,
            precision_bits,
        } => run_verify(suite, *samples, *sig, *precision_bits),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
