use std::collections::hash_map::Entry;
use std::collections::HashMap;

use clap::{Args, Subcommand};
use dnoise_core::accountant::{
    adp_from_pld, analytic_adp_upper_bounds, build_pld, cdp_of_dgauss, cdp_of_multivariate,
    cdp_to_adp, continuous_gauss_adp, dlap_pure_dp, eps_for_delta, exact_adp_dgauss,
    gaussian_tail_cdp_bound, kov_optimal_composition, rdp_standard_bound, rdp_to_adp,
    standard_cdp_bound, CdpBound, MultiQuerySpec, PrivacyLossDistribution, QuerySpec, RenyiBound,
};
use dnoise_core::numeric::{decimal, MAX_DOUBLINGS};
use dnoise_core::{CertifiedInterval as CI, Error, Rational, Result};
use rug::float::Round;
use rug::{Float, Integer};
use serde_json::{json, Map, Number, Value};

use crate::parse;

#[derive(Args, Debug)]
pub struct Target {
    /// Privacy parameter eps; reports delta.
    #[arg(long, visible_alias = "eps-prime", value_parser = parse::number, conflicts_with = "delta")]
    eps: Option<Rational>,
    /// Target delta; reports the smallest certified eps.
    #[arg(long, value_parser = parse::number)]
    delta: Option<Rational>,
    /// Working precision in bits; doubled automatically when too coarse.
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u32).range(32..=65536))]
    precision_bits: u32,
}

#[derive(Subcommand, Debug)]
pub enum AccountCmd {
    /// Tight delta of discrete Gaussian noise on one query.
    ExactAdp {
        #[arg(long, value_parser = parse::number)]
        sigma2: Rational,
        #[arg(long, default_value = "1", value_parser = parse::number)]
        delta_sens: Rational,
        #[command(flatten)]
        target: Target,
    },
    /// Concentrated DP parameter of k discrete Gaussian queries.
    Cdp {
        #[arg(long, value_parser = parse::number)]
        sigma2: Rational,
        #[arg(long, default_value = "1", value_parser = parse::number)]
        delta_sens: Rational,
        #[arg(long, default_value_t = 1)]
        k: u64,
        #[command(flatten)]
        target: Target,
    },
    /// Approximate DP implied by rho-zCDP.
    CdpToAdp {
        #[arg(long, value_parser = parse::number)]
        rho: Rational,
        #[command(flatten)]
        target: Target,
    },
    /// Approximate DP implied by (alpha, tau)-RDP.
    RdpToAdp {
        #[arg(long, value_parser = parse::number)]
        alpha: Rational,
        #[arg(long, value_parser = parse::number)]
        tau: Rational,
        #[command(flatten)]
        target: Target,
    },
    /// Privacy loss distribution of multivariate discrete Gaussian noise.
    Pld {
        /// Comma-separated per-coordinate variances.
        #[arg(long, required = true, value_delimiter = ',', value_parser = parse::number)]
        sigma2s: Vec<Rational>,
        /// Comma-separated integer shift between neighbouring inputs.
        #[arg(long, required = true, value_delimiter = ',', value_parser = parse::integer, allow_hyphen_values = true)]
        mu: Vec<Integer>,
        #[arg(long, default_value_t = 1e-12)]
        err_budget: f64,
        #[command(flatten)]
        target: Target,
    },
    /// Pure DP of discrete Laplace noise.
    DlapPure {
        /// Scale t/s.
        #[arg(long, value_parser = parse::number)]
        scale: Rational,
        #[arg(long, default_value = "1", value_parser = parse::number)]
        delta_sens: Rational,
    },
    /// Optimal k-fold composition of (eps0, delta0)-DP.
    Kov {
        #[arg(long, value_parser = parse::number)]
        eps0: Rational,
        #[arg(long, default_value = "0", value_parser = parse::number)]
        delta0: Rational,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        target: Target,
    },
}

/// Numbers that must be read as bounds are rounded outward; the others to nearest.
fn num(x: &Float, round: Round) -> Value {
    let s = decimal(x, 6, round);
    match s.parse::<Number>() {
        Ok(n) => Value::Number(n),
        Err(_) => Value::String(s),
    }
}

fn interval_fields(out: &mut Map<String, Value>, name: &str, ci: &CI) {
    out.insert(format!("{name}_lower"), num(ci.lo(), Round::Down));
    out.insert(format!("{name}_upper"), num(ci.hi(), Round::Up));
    let digits = ci.exact_digits();
    out.insert(
        format!("{name}_interval"),
        json!({ "lo": decimal(ci.lo(), digits, Round::Down), "hi": decimal(ci.hi(), digits, Round::Up) }),
    );
}

fn upper(ci: &CI) -> Value {
    num(ci.hi(), Round::Up)
}

fn settled(ci: &CI, prec: u32) -> bool {
    let w = ci.width();
    w.is_zero()
        || w <= Float::with_val(prec, ci.hi() >> 24)
        || *ci.hi() <= Float::with_val(prec, Float::i_exp(1, -(prec as i32)))
}

/// Evaluates at doubling precision until the interval is tight enough to
/// print; returns the interval and the precision used.
fn certify(prec: u32, mut f: impl FnMut(u32) -> Result<CI>) -> Result<(CI, u32)> {
    let mut p = prec;
    for _ in 0..=MAX_DOUBLINGS {
        let ci = f(p)?;
        if ci.is_finite() && settled(&ci, p) {
            return Ok((ci, p));
        }
        p = p.saturating_mul(2);
    }
    Err(Error::Indeterminate(format!(
        "delta interval still too wide at {} bits",
        p / 2
    )))
}

type DeltaFn<'a> = Box<dyn FnMut(&Rational, u32) -> Result<CI> + 'a>;

/// Shared tail of every delta-reporting command: evaluate at `--eps`, or
/// search for the smallest certified eps at `--delta`.
fn finish(
    method: &str,
    mut inputs: Map<String, Value>,
    target: &Target,
    mut delta_at: DeltaFn<'_>,
) -> Result<Map<String, Value>> {
    let mut out = Map::new();
    out.insert("method".into(), json!(method));
    let prec = target.precision_bits;
    match (&target.eps, &target.delta) {
        (Some(eps), None) => {
            inputs.insert("eps".into(), json!(eps.to_string()));
            let (d, p) = certify(prec, |p| delta_at(eps, p))?;
            out.insert("inputs".into(), Value::Object(inputs));
            interval_fields(&mut out, "delta", &d);
            out.insert("precision_bits".into(), json!(p));
        }
        (None, Some(delta)) => {
            if !delta.is_positive() || *delta >= Rational::one() {
                return Err(Error::Domain(format!(
                    "--delta must lie in (0, 1), got {delta}"
                )));
            }
            inputs.insert("delta".into(), json!(delta.to_string()));
            let eps = eps_for_delta(|e| delta_at(e, prec), delta, prec)?;
            let (d, p) = certify(prec, |p| delta_at(&eps, p))?;
            out.insert("inputs".into(), Value::Object(inputs));
            let e = CI::point_rational(&eps, prec);
            out.insert("eps_upper".into(), num(e.hi(), Round::Up));
            out.insert("eps_upper_exact".into(), json!(eps.to_string()));
            interval_fields(&mut out, "delta", &d);
            out.insert("precision_bits".into(), json!(p));
        }
        _ => {
            return Err(Error::Domain(
                "exactly one of --eps and --delta is required".into(),
            ))
        }
    }
    Ok(out)
}

pub fn run(cmd: &AccountCmd) -> Result<Value> {
    let out = match cmd {
        AccountCmd::ExactAdp {
            sigma2,
            delta_sens,
            target,
        } => {
            let inputs = obj(&[("sigma2", sigma2), ("delta_sens", delta_sens)]);
            let mut out = finish(
                "exact_adp_dgauss",
                inputs,
                target,
                Box::new(|e, p| exact_adp_dgauss(delta_sens, sigma2, e, p)),
            )?;
            if let Some(eps) = &target.eps {
                let p = target.precision_bits;
                let b = analytic_adp_upper_bounds(delta_sens, sigma2, eps, p)?;
                out.insert(
                    "analytic_upper_bounds".into(),
                    json!({
                        "pmf_sum": upper(&b.pmf_sum_bound),
                        "unit_sensitivity": b.unit_sensitivity_bound.as_ref().map(upper),
                        "continuous_sandwich": b.continuous_sandwich_bound.as_ref().map(upper),
                    }),
                );
                let c = continuous_gauss_adp(delta_sens, sigma2, eps, p)?;
                out.insert(
                    "continuous_gaussian_delta".into(),
                    num(&c.mid(), Round::Nearest),
                );
            }
            out
        }
        AccountCmd::Cdp {
            sigma2,
            delta_sens,
            k,
            target,
        } => {
            let bound = cdp_of_dgauss(&QuerySpec::new(delta_sens.clone(), *k)?, sigma2)?;
            let mut inputs = obj(&[("sigma2", sigma2), ("delta_sens", delta_sens)]);
            inputs.insert("k".into(), json!(k));
            let mut out = if target.eps.is_some() || target.delta.is_some() {
                let b = bound.clone();
                finish(
                    "cdp_of_dgauss+cdp_to_adp",
                    inputs,
                    target,
                    Box::new(move |e, p| Ok(cdp_to_adp(&b, e, p)?.delta)),
                )?
            } else {
                let mut m = Map::new();
                m.insert("method".into(), json!("cdp_of_dgauss"));
                m.insert("inputs".into(), Value::Object(inputs));
                m
            };
            out.insert("rho".into(), json!(bound.rho.to_string()));
            out.insert(
                "rho_decimal".into(),
                num(&CI::point_rational(&bound.rho, 128).mid(), Round::Nearest),
            );
            out
        }
        AccountCmd::CdpToAdp { rho, target } => {
            let bound = CdpBound::new(rho.clone())?;
            let inputs = obj(&[("rho", rho)]);
            let b = bound.clone();
            let mut out = finish(
                "cdp_to_adp",
                inputs,
                target,
                Box::new(move |e, p| Ok(cdp_to_adp(&b, e, p)?.delta)),
            )?;
            let eps = match &target.eps {
                Some(e) => e.clone(),
                None => out["eps_upper_exact"]
                    .as_str()
                    .and_then(|s| s.parse().ok())
                    .unwrap_or_else(Rational::zero),
            };
            let p = target.precision_bits;
            let r = cdp_to_adp(&bound, &eps, p)?;
            out.insert("alpha".into(), json!(r.alpha.to_f64()));
            out.insert(
                "alpha_search".into(),
                json!(format!("{:?}", r.search).to_lowercase()),
            );
            if rho.is_positive() && eps >= *rho {
                out.insert(
                    "standard_bound".into(),
                    upper(&standard_cdp_bound(rho, &eps, p)?),
                );
            }
            if rho.is_positive() {
                out.insert(
                    "gaussian_tail_bound".into(),
                    upper(&gaussian_tail_cdp_bound(rho, &eps, p)?),
                );
            }
            out
        }
        AccountCmd::RdpToAdp { alpha, tau, target } => {
            let prec = target.precision_bits;
            let make = |p: u32| RenyiBound::new(alpha.clone(), CI::point_rational(tau, p));
            make(prec)?;
            let inputs = obj(&[("alpha", alpha), ("tau", tau)]);
            let mut out = finish(
                "rdp_to_adp",
                inputs,
                target,
                Box::new(move |e, p| rdp_to_adp(&make(p)?, e, p)),
            )?;
            if let Some(eps) = &target.eps {
                let b = RenyiBound::new(alpha.clone(), CI::point_rational(tau, prec))?;
                out.insert(
                    "standard_bound".into(),
                    upper(&rdp_standard_bound(&b, eps, prec)),
                );
            }
            out
        }
        AccountCmd::Pld {
            sigma2s,
            mu,
            err_budget,
            target,
        } => {
            let spec = MultiQuerySpec::new(sigma2s.clone(), mu.clone())?;
            let mut inputs = Map::new();
            inputs.insert(
                "sigma2s".into(),
                json!(sigma2s.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
            );
            inputs.insert(
                "mu".into(),
                json!(mu.iter().map(|m| m.to_string()).collect::<Vec<_>>()),
            );
            inputs.insert("err_budget".into(), json!(err_budget));
            let prec = target.precision_bits;
            let first = build_pld(&spec, *err_budget, prec)?;
            let mut cache: HashMap<u32, PrivacyLossDistribution> = HashMap::new();
            cache.insert(prec, first.clone());
            let spec2 = spec.clone();
            let budget = *err_budget;
            let mut out = finish(
                "pld_fft",
                inputs,
                target,
                Box::new(move |e, p| {
                    if let Entry::Vacant(v) = cache.entry(p) {
                        v.insert(build_pld(&spec2, budget, p)?);
                    }
                    Ok(adp_from_pld(&cache[&p], e, p))
                }),
            )?;
            out.insert("modulus".into(), json!(first.modulus()));
            out.insert("grid_step".into(), json!(first.grid_step().to_string()));
            out.insert("trunc_upper".into(), upper(first.trunc_upper()));
            out.insert("trunc_lower".into(), upper(first.trunc_lower()));
            out.insert(
                "rho".into(),
                json!(cdp_of_multivariate(&spec).rho.to_string()),
            );
            out
        }
        AccountCmd::DlapPure { scale, delta_sens } => {
            let eps = dlap_pure_dp(delta_sens, scale)?;
            let mut out = Map::new();
            out.insert("method".into(), json!("dlap_pure_dp"));
            out.insert(
                "inputs".into(),
                Value::Object(obj(&[("scale", scale), ("delta_sens", delta_sens)])),
            );
            out.insert("eps".into(), json!(eps.to_string()));
            out.insert(
                "eps_decimal".into(),
                num(&CI::point_rational(&eps, 128).mid(), Round::Nearest),
            );
            interval_fields(&mut out, "delta", &CI::zero(128));
            out
        }
        AccountCmd::Kov {
            eps0,
            delta0,
            k,
            target,
        } => {
            let mut inputs = obj(&[("eps0", eps0), ("delta0", delta0)]);
            inputs.insert("k".into(), json!(k));
            finish(
                "kov_optimal_composition",
                inputs,
                target,
                Box::new(|e, p| {
                    kov_optimal_composition(
                        &CI::point_rational(eps0, p),
                        &CI::point_rational(delta0, p),
                        *k,
                        &CI::point_rational(e, p),
                        p,
                    )
                }),
            )?
        }
    };
    Ok(Value::Object(out))
}

fn obj(pairs: &[(&str, &Rational)]) -> Map<String, Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v.to_string())))
        .collect()
}
