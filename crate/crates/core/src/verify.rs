//! Self-verification suites: samplers against exact laws, certified bound
//! sandwiches and sampler throughput.

use std::fmt;
use std::time::{Duration, Instant};

use rug::Integer;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dist::{dgauss_pmf, dgauss_tail, dlap_stats, sandwich_checks, sandwich_grid};
use crate::error::{Error, Result};
use crate::numeric::Rational;
use crate::randcore::{os_source, seeded_source, BitSource};
use crate::samplers::{
    sample_bernoulli_exp, sample_dgauss, sample_dgauss_scaled, sample_dlaplace,
    sample_geometric_unit, DGaussParams, DLapParams, SampleStats, ScaledDGaussParams,
};
use crate::stats::{binomial_band, chi_square, quantile, DiscreteLaw};

/// Per-iteration acceptance floor of the discrete Gaussian loop.
pub const DGAUSS_ACCEPT_FLOOR: f64 = 0.29;
/// Mean outer iterations allowed for the discrete Gaussian loop.
pub const DGAUSS_MEAN_ITER_CAP: f64 = 3.5;
/// Mean outer iterations allowed for the discrete Laplace loop.
pub const DLAP_MEAN_ITER_CAP: f64 = 3.2;
/// Required discrete Gaussian throughput, samples per second.
pub const MIN_THROUGHPUT: f64 = 1000.0;

pub const STAT_SIGMA2: [&str; 4] = ["1/4", "1", "10", "1000"];
pub const STAT_SCALES: [&str; 3] = ["1/2", "1", "7/3"];
pub const PERF_SIGMA2: [&str; 3] = ["1", "1000000", "1e100"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Stat,
    Bounds,
    Perf,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stat" => Ok(Suite::Stat),
            "bounds" => Ok(Suite::Bounds),
            "perf" => Ok(Suite::Perf),
            "all" => Ok(Suite::All),
            _ => Err(Error::Parse(format!("unknown suite {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub samples: usize,
    pub sig: f64,
    /// Deterministic bit streams when set; OS randomness otherwise.
    pub seed: Option<u64>,
    pub prec: u32,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            samples: 1_000_000,
            sig: 1e-3,
            seed: None,
            prec: crate::numeric::DEFAULT_PRECISION,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub suite: &'static str,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} {} {}", self.suite, self.name, self.detail)
    }
}

fn outcome(suite: &'static str, name: impl Into<String>, pass: bool, detail: String) -> Outcome {
    Outcome {
        suite,
        name: name.into(),
        pass,
        detail,
    }
}

fn source(seed: Option<u64>, stream: u64) -> Box<dyn BitSource> {
    match seed {
        Some(s) => Box::new(seeded_source(
            s ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        )),
        None => Box::new(os_source()),
    }
}

fn q(s: &str) -> Rational {
    s.parse().expect("constant parameter")
}

fn z_for(sig: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - sig / 2.0)
}

fn to_i64(x: &Integer) -> i64 {
    x.to_i64()
        .unwrap_or(if *x < 0 { i64::MIN } else { i64::MAX })
}

/// Exact law of `N_Z(0, sigma2)` on `|x| <= B`, with both tails lumped.
pub fn dgauss_law(sigma2: &Rational, prec: u32) -> Result<DiscreteLaw> {
    let b = (sigma2.to_f64().sqrt() * 8.5).ceil() as i64 + 2;
    let probs = (-b..=b)
        .map(|x| Ok(dgauss_pmf(&Integer::from(x), &Rational::zero(), sigma2, prec)?.mid_f64()))
        .collect::<Result<Vec<f64>>>()?;
    let tail = dgauss_tail(&Integer::from(b + 1), sigma2, prec)?.mid_f64();
    Ok(DiscreteLaw {
        start: -b,
        probs,
        below: tail,
        above: tail,
    })
}

/// Exact law of `Lap_Z(t/s)` on `|x| <= B`.
pub fn dlap_law(t_over_s: &Rational, prec: u32) -> Result<DiscreteLaw> {
    let st = dlap_stats(t_over_s, prec)?;
    let b = (t_over_s.to_f64() * 35.0).ceil() as i64 + 2;
    let probs = (-b..=b)
        .map(|x| st.pmf(&Integer::from(x)).mid_f64())
        .collect();
    let tail = st.tail(&Integer::from(b + 1)).mid_f64();
    Ok(DiscreteLaw {
        start: -b,
        probs,
        below: tail,
        above: tail,
    })
}

/// `Pr[V = k] = (1 - e^{-1}) e^{-k}`.
pub fn geometric_unit_law() -> DiscreteLaw {
    let len = 40;
    let probs = (0..len)
        .map(|k| (1.0 - (-1f64).exp()) * (-(k as f64)).exp())
        .collect();
    DiscreteLaw {
        start: 0,
        probs,
        below: 0.0,
        above: (-(len as f64)).exp(),
    }
}

fn gof(name: String, samples: &[i64], law: &DiscreteLaw, sig: f64) -> Result<Outcome> {
    let r = chi_square(samples, law, sig)?;
    let detail = format!(
        "chi2={:.3} dof={} critical={:.3} p={:.4} cells={}{}",
        r.statistic,
        r.dof,
        r.critical,
        r.p_value,
        r.cells,
        if r.paired { " paired" } else { "" }
    );
    Ok(outcome("stat", name, r.pass, detail))
}

/// Acceptance frequency and mean outer iterations with floor/cap checks.
fn loop_check(name: String, stats: &[SampleStats], floor: f64, cap: f64, z: f64) -> Outcome {
    let n = stats.len() as f64;
    let iters: u64 = stats.iter().map(|s| s.outer_iterations).sum();
    let acc = n / iters as f64;
    let mean = iters as f64 / n;
    let band = binomial_band(floor, iters as f64, z);
    // iterations are geometric with mean 1/p and variance (1-p)/p^2
    let mean_band = z * ((1.0 - floor) / (floor * floor) / n).sqrt();
    let pass = acc >= floor - band && mean <= cap + mean_band;
    outcome(
        "stat",
        name,
        pass,
        format!("acceptance={acc:.4} floor={floor:.4} mean_iterations={mean:.4} cap={cap}"),
    )
}

fn stat_suite(opts: &VerifyOptions) -> Result<Vec<Outcome>> {
    let n = opts.samples;
    let z = z_for(opts.sig);
    let mut out = Vec::new();
    let mut stream = 0u64;
    let mut next = || {
        stream += 1;
        source(opts.seed, stream)
    };

    for g in ["0", "1/2", "1", "5/2"] {
        let mut src = next();
        let gamma = q(g);
        let mut hits = 0u64;
        for _ in 0..n {
            hits += sample_bernoulli_exp(src.as_mut(), &gamma)? as u64;
        }
        let p = (-gamma.to_f64()).exp();
        let freq = hits as f64 / n as f64;
        let band = binomial_band(p, n as f64, z).max(f64::EPSILON);
        out.push(outcome(
            "stat",
            format!("bernoulli_exp gamma={g}"),
            (freq - p).abs() <= band,
            format!("freq={freq:.6} target={p:.6} band={band:.2e}"),
        ));
    }

    let mut src = next();
    let s: Vec<i64> = (0..n)
        .map(|_| sample_geometric_unit(src.as_mut()) as i64)
        .collect();
    out.push(gof(
        "geometric_unit".into(),
        &s,
        &geometric_unit_law(),
        opts.sig,
    )?);

    for sc in STAT_SCALES {
        let mut src = next();
        let scale = q(sc);
        let params = DLapParams::from_scale(&scale)?;
        let (s, st): (Vec<i64>, Vec<SampleStats>) = (0..n)
            .map(|_| {
                let (x, st) = sample_dlaplace(src.as_mut(), &params);
                (to_i64(&x), st)
            })
            .unzip();
        out.push(gof(
            format!("dlaplace scale={sc}"),
            &s,
            &dlap_law(&scale, opts.prec)?,
            opts.sig,
        )?);
        let floor = (1.0 - (-1f64).exp()) / 2.0;
        out.push(loop_check(
            format!("dlaplace_loop scale={sc}"),
            &st,
            floor,
            DLAP_MEAN_ITER_CAP,
            3.0,
        ));
    }

    for s2 in STAT_SIGMA2 {
        let mut src = next();
        let sigma2 = q(s2);
        let params = DGaussParams::new(sigma2.clone())?;
        let (s, st): (Vec<i64>, Vec<SampleStats>) = (0..n)
            .map(|_| {
                let (x, st) = sample_dgauss(src.as_mut(), &params);
                (to_i64(&x), st)
            })
            .unzip();
        out.push(gof(
            format!("dgauss sigma2={s2}"),
            &s,
            &dgauss_law(&sigma2, opts.prec)?,
            opts.sig,
        )?);
        out.push(loop_check(
            format!("dgauss_loop sigma2={s2}"),
            &st,
            DGAUSS_ACCEPT_FLOOR,
            DGAUSS_MEAN_ITER_CAP,
            3.0,
        ));
    }

    for (alpha, mu, s2) in [("1/2", "0", "1"), ("1", "3", "1"), ("1/3", "2/3", "1/9")] {
        let mut src = next();
        let params = ScaledDGaussParams::new(q(alpha), q(mu), q(s2))?;
        let (a, m) = (q(alpha), q(mu));
        let mut s = Vec::with_capacity(n);
        for _ in 0..n {
            let (x, _) = sample_dgauss_scaled(src.as_mut(), &params);
            let k = (&x - &m) / a.clone();
            if !k.is_integer() {
                return Ok(vec![outcome(
                    "stat",
                    format!("dgauss_scaled alpha={alpha}"),
                    false,
                    format!("{x} off the grid"),
                )]);
            }
            s.push(to_i64(&k.floor()));
        }
        let inner = &q(s2) / &a.square();
        out.push(gof(
            format!("dgauss_scaled alpha={alpha} mu={mu} sigma2={s2}"),
            &s,
            &dgauss_law(&inner, opts.prec)?,
            opts.sig,
        )?);
    }
    Ok(out)
}

fn bounds_suite(opts: &VerifyOptions) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    for s2 in sandwich_grid() {
        let checks = sandwich_checks(&s2, opts.prec)?;
        let failed: Vec<String> = checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        let detail = if failed.is_empty() {
            format!("checks={}", checks.len())
        } else {
            format!("checks={} failed=[{}]", checks.len(), failed.join("; "))
        };
        out.push(outcome(
            "bounds",
            format!("sandwich sigma2={s2}"),
            failed.is_empty(),
            detail,
        ));
    }
    Ok(out)
}

/// Discrete Gaussian throughput over at least `min_samples` draws and `min_time`.
#[derive(Clone, Debug)]
pub struct Throughput {
    pub samples: usize,
    pub per_second: f64,
    pub acceptance: f64,
    pub mean_iterations: f64,
    pub bits: Vec<u64>,
}

pub fn measure_throughput(
    sigma2: &Rational,
    min_samples: usize,
    min_time: Duration,
    seed: Option<u64>,
) -> Result<Throughput> {
    let params = DGaussParams::new(sigma2.clone())?;
    let mut src = source(seed, 0xfeed);
    let mut bits = Vec::with_capacity(min_samples);
    let mut iters = 0u64;
    let start = Instant::now();
    while bits.len() < min_samples || start.elapsed() < min_time {
        let (_, st) = sample_dgauss(src.as_mut(), &params);
        iters += st.outer_iterations;
        bits.push(st.bits_consumed);
    }
    let secs = start.elapsed().as_secs_f64();
    let n = bits.len();
    Ok(Throughput {
        samples: n,
        per_second: n as f64 / secs,
        acceptance: n as f64 / iters as f64,
        mean_iterations: iters as f64 / n as f64,
        bits,
    })
}

fn perf_suite(opts: &VerifyOptions) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    for s2 in PERF_SIGMA2 {
        let sigma2 = if s2 == "1e100" {
            Rational::from_integer(Integer::u_pow_u(10, 100))
        } else {
            q(s2)
        };
        let t = measure_throughput(&sigma2, 2000, Duration::from_millis(500), opts.seed)?;
        let band = binomial_band(
            DGAUSS_ACCEPT_FLOOR,
            t.samples as f64 * t.mean_iterations,
            3.0,
        );
        let pass = t.per_second >= MIN_THROUGHPUT
            && t.mean_iterations <= DGAUSS_MEAN_ITER_CAP
            && t.acceptance >= DGAUSS_ACCEPT_FLOOR - band;
        out.push(outcome(
            "perf",
            format!("throughput sigma2={s2}"),
            pass,
            format!(
                "samples_per_sec={:.0} samples={} acceptance={:.4} mean_iterations={:.4}",
                t.per_second, t.samples, t.acceptance, t.mean_iterations
            ),
        ));
    }
    // bits consumed should have a light upper tail
    let t = measure_throughput(&q("1000000"), 100_000, Duration::ZERO, opts.seed)?;
    let mut bits = t.bits;
    bits.sort_unstable();
    let med = quantile(&bits, 0.5);
    let top = quantile(&bits, 0.9999);
    out.push(outcome(
        "perf",
        "bits_tail sigma2=1000000",
        (top as f64) < 20.0 * med as f64,
        format!(
            "median_bits={med} p9999_bits={top} ratio={:.2}",
            top as f64 / med as f64
        ),
    ));
    Ok(out)
}

/// Runs the requested suites in a fixed order: stat, bounds, perf.
pub fn run(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Stat | Suite::All) {
        out.extend(stat_suite(opts)?);
    }
    if matches!(suite, Suite::Bounds | Suite::All) {
        out.extend(bounds_suite(opts)?);
    }
    if matches!(suite, Suite::Perf | Suite::All) {
        out.extend(perf_suite(opts)?);
    }
    Ok(out)
}
