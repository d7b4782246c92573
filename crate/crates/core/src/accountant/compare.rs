use crate::dist::dlap_variance_of_eps;
use crate::error::{Error, Result};
use crate::numeric::{CertifiedInterval as CI, Rational};

use super::{cdp_to_adp, dlap_eps_for_variance, kov_optimal_composition, CdpBound};

const BISECTIONS: usize = 60;
const REL_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 200;

/// `delta` of both mechanisms at one `eps` when each of `k` queries gets
/// noise of the same variance.
#[derive(Clone, Debug)]
pub struct FixedUtilityRow {
    pub eps: Rational,
    pub delta_gauss: CI,
    pub delta_lap: CI,
}

/// Smallest per-query variance of each mechanism meeting a fixed `(eps, delta)`.
#[derive(Clone, Debug)]
pub struct FixedPrivacyRow {
    pub k: u32,
    pub var_gauss: CI,
    pub var_lap: CI,
    pub ratio: CI,
}

fn rho_for(k: u32, sigma2: &Rational) -> Result<CdpBound> {
    CdpBound::new(Rational::from_integer(k) / (sigma2 * &Rational::from_integer(2)))
}

/// `delta` curves at fixed per-query variance: the Gaussian side runs
/// `k`-fold composition through concentrated DP, the Laplace side through
/// optimal composition of pure DP.
pub fn compare_fixed_utility(
    k: u32,
    variance: &Rational,
    eps_grid: &[Rational],
    prec: u32,
) -> Result<Vec<FixedUtilityRow>> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let rho = rho_for(k, variance)?;
    let eps0 = dlap_eps_for_variance(variance, prec)?;
    let zero = CI::zero(prec);
    eps_grid
        .iter()
        .map(|eps| {
            let delta_gauss = cdp_to_adp(&rho, eps, prec)?.delta;
            let delta_lap =
                kov_optimal_composition(&eps0, &zero, k, &CI::point_rational(eps, prec), prec)?;
            Ok(FixedUtilityRow {
                eps: eps.clone(),
                delta_gauss,
                delta_lap,
            })
        })
        .collect()
}

/// Geometric bisection for the boundary of a monotone predicate on `(0, inf)`.
/// `passes` must hold above the boundary when `increasing` and below it otherwise;
/// returns a point where it holds.
fn boundary(
    mut passes: impl FnMut(f64) -> Result<bool>,
    increasing: bool,
    start: f64,
) -> Result<f64> {
    let (mut good, mut bad) = if passes(start)? {
        (start, start)
    } else {
        (f64::NAN, start)
    };
    let step = |x: f64, toward_good: bool| {
        if toward_good == increasing {
            x * 2.0
        } else {
            x / 2.0
        }
    };
    if good.is_nan() {
        let mut x = start;
        for _ in 0..MAX_DOUBLINGS {
            x = step(x, true);
            if passes(x)? {
                good = x;
                break;
            }
            bad = x;
        }
        if good.is_nan() {
            return Err(Error::Domain("no feasible parameter found".into()));
        }
    } else {
        let mut x = start;
        let mut found = false;
        for _ in 0..MAX_DOUBLINGS {
            x = step(x, false);
            if !passes(x)? {
                bad = x;
                found = true;
                break;
            }
            good = x;
        }
        if !found {
            return Ok(good);
        }
    }
    for _ in 0..BISECTIONS {
        if (good - bad).abs() <= REL_TOL * good.abs() {
            break;
        }
        let mid = (good * bad).sqrt();
        if passes(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Smallest `sigma2` (to relative accuracy `1e-10`) for which `k` discrete
/// Gaussian queries are certified `(eps, delta)`-DP via concentrated DP.
pub fn min_gauss_sigma2(k: u32, eps: &Rational, delta: &Rational, prec: u32) -> Result<Rational> {
    if k == 0 || !delta.is_positive() {
        return Err(Error::Domain("need k >= 1 and delta > 0".into()));
    }
    let target = CI::point_rational(delta, prec);
    let s = boundary(
        |s2| {
            let rho = rho_for(k, &Rational::from_f64(s2)?)?;
            Ok(cdp_to_adp(&rho, eps, prec)?.delta.certainly_le(&target))
        },
        true,
        k as f64,
    )?;
    Rational::from_f64(s)
}

/// Largest per-query `eps0` for which `k` discrete Laplace queries are
/// certified `(eps, delta)`-DP under optimal composition.
pub fn max_laplace_eps0(k: u32, eps: &Rational, delta: &Rational, prec: u32) -> Result<Rational> {
    if k == 0 || !delta.is_positive() || !eps.is_positive() {
        return Err(Error::Domain("need k >= 1, eps > 0 and delta > 0".into()));
    }
    let target = CI::point_rational(delta, prec);
    let eps_ci = CI::point_rational(eps, prec);
    let zero = CI::zero(prec);
    let e = boundary(
        |e0| {
            let e0 = CI::point_rational(&Rational::from_f64(e0)?, prec);
            Ok(kov_optimal_composition(&e0, &zero, k, &eps_ci, prec)?.certainly_le(&target))
        },
        false,
        eps.to_f64() / k as f64,
    )?;
    Rational::from_f64(e)
}

/// Minimal per-query variances at fixed `(eps, delta)` for each `k`.
pub fn compare_fixed_privacy(
    eps: &Rational,
    delta: &Rational,
    ks: &[u32],
    prec: u32,
) -> Result<Vec<FixedPrivacyRow>> {
    ks.iter()
        .map(|&k| {
            let var_gauss = CI::point_rational(&min_gauss_sigma2(k, eps, delta, prec)?, prec);
            let e0 = max_laplace_eps0(k, eps, delta, prec)?;
            let var_lap = dlap_variance_of_eps(&CI::point_rational(&e0, prec));
            let ratio = var_lap.div(&var_gauss);
            Ok(FixedPrivacyRow {
                k,
                var_gauss,
                var_lap,
                ratio,
            })
        })
        .collect()
}

/// Smallest `eps` (to relative accuracy `1e-10`) with `delta_at(eps).hi <= delta`,
/// for `delta_at` nonincreasing in `eps`.
pub fn eps_for_delta(
    mut delta_at: impl FnMut(&Rational) -> Result<CI>,
    delta: &Rational,
    prec: u32,
) -> Result<Rational> {
    let target = CI::point_rational(delta, prec);
    if delta_at(&Rational::zero())?.certainly_le(&target) {
        return Ok(Rational::zero());
    }
    let e = boundary(
        |e| Ok(delta_at(&Rational::from_f64(e)?)?.certainly_le(&target)),
        true,
        1.0,
    )?;
    Rational::from_f64(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn fixed_utility_point() {
        let rows = compare_fixed_utility(100, &q("2500"), &[q("1")], 128).unwrap();
        let r = &rows[0];
        assert!((r.delta_gauss.mid_f64() / 8.8253e-8 - 1.0).abs() < 1e-4);
        assert!((r.delta_lap.mid_f64() / 2.05681e-5 - 1.0).abs() < 1e-4);
        assert!(r.delta_gauss.certainly_lt(&r.delta_lap));
    }

    #[test]
    fn fixed_privacy_ratios() {
        let rows = compare_fixed_privacy(&q("1"), &q("1/1000000"), &[1, 100], 128).unwrap();
        assert!(rows[0].ratio.hi_f64() < 1.0);
        assert!(
            (rows[1].ratio.mid_f64() - 1.69).abs() <= 0.05,
            "{}",
            rows[1].ratio
        );
    }

    #[test]
    fn bisection_results_are_tight() {
        let (eps, delta) = (q("1"), q("1/1000000"));
        let s2 = min_gauss_sigma2(10, &eps, &delta, 128).unwrap();
        let ok = |s2: &Rational| {
            let rho = rho_for(10, s2).unwrap();
            cdp_to_adp(&rho, &eps, 128).unwrap().delta.hi_f64() <= 1e-6
        };
        assert!(ok(&s2));
        assert!(!ok(&(&s2 * &q("999/1000"))));
        let e0 = max_laplace_eps0(10, &eps, &delta, 128).unwrap();
        let z = CI::zero(128);
        let d = |e: &Rational| {
            kov_optimal_composition(&CI::point_rational(e, 128), &z, 10, &CI::one(128), 128)
                .unwrap()
                .hi_f64()
        };
        assert!(d(&e0) <= 1e-6 && d(&(&e0 * &q("1001/1000"))) > 1e-6);
    }

    #[test]
    fn eps_for_delta_inverts() {
        let rho = CdpBound::new(q("1/50")).unwrap();
        let e = eps_for_delta(
            |e| Ok(cdp_to_adp(&rho, e, 128)?.delta),
            &q("1/10000000"),
            128,
        )
        .unwrap();
        assert!(e < q("1") && e > q("9/10"));
        let e0 = eps_for_delta(|_| Ok(CI::zero(128)), &q("1/2"), 128).unwrap();
        assert!(e0.is_zero());
    }
}
