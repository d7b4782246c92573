use rug::Integer;

use crate::dist::{dgauss_normalizer, phi_bar, tail_with_normalizer};
use crate::error::{Error, Result};
use crate::numeric::{CertifiedInterval as CI, Rational, MAX_DOUBLINGS};

fn check(delta_sens: &Rational, sigma2: &Rational, eps: &Rational) -> Result<()> {
    if !delta_sens.is_positive() {
        return Err(Error::Domain(format!(
            "sensitivity must be positive, got {delta_sens}"
        )));
    }
    if !sigma2.is_positive() {
        return Err(Error::Domain(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if eps.is_negative() {
        return Err(Error::Domain(format!("eps must be nonnegative, got {eps}")));
    }
    Ok(())
}

/// `eps sigma^2 / Delta -+ Delta/2`.
fn thresholds(delta_sens: &Rational, sigma2: &Rational, eps: &Rational) -> (Rational, Rational) {
    let centre = eps * sigma2 / delta_sens.clone();
    let half = delta_sens / &Rational::from_integer(2);
    (&centre - &half, &centre + &half)
}

/// Re-evaluates until the relative width is below `2^-32` or the doubling
/// budget is spent; the last result is certified either way.
pub(crate) fn refine(prec: u32, mut f: impl FnMut(u32) -> Result<CI>) -> Result<CI> {
    let mut p = prec;
    let mut out = f(p)?;
    for _ in 0..MAX_DOUBLINGS {
        let w = out.width();
        let tight = w.is_zero()
            || w <= rug::Float::with_val(p, out.hi() >> 32)
            || w < rug::Float::with_val(p, rug::Float::i_exp(1, -(prec as i32)));
        if tight {
            break;
        }
        p *= 2;
        out = f(p)?;
    }
    Ok(out)
}

/// Tight `delta` of `N_Z(0, sigma2)` noise on a sensitivity-`Delta` query:
/// `Pr[Y > eps sigma^2/Delta - Delta/2] - e^eps Pr[Y > eps sigma^2/Delta + Delta/2]`.
pub fn exact_adp_dgauss(
    delta_sens: &Rational,
    sigma2: &Rational,
    eps: &Rational,
    prec: u32,
) -> Result<CI> {
    check(delta_sens, sigma2, eps)?;
    let (t1, t2) = thresholds(delta_sens, sigma2, eps);
    // strict inequality: Y > t  <=>  Y >= floor(t) + 1
    let n1 = t1.floor() + 1u32;
    let n2 = t2.floor() + 1u32;
    refine(prec, |p| {
        let s = dgauss_normalizer(sigma2, p)?.value;
        let a = tail_with_normalizer(&n1, sigma2, &s, p)?;
        let b = tail_with_normalizer(&n2, sigma2, &s, p)?;
        let e = CI::point_rational(eps, p).exp();
        Ok(a.sub(&e.mul(&b)).clamp01())
    })
}

/// Closed-form upper bounds on [`exact_adp_dgauss`].
#[derive(Clone, Debug)]
pub struct AnalyticBounds {
    /// `sum_{k=ceil(t1)}^{ceil(t2)} e^{-k^2/2 sigma^2} / sqrt(2 pi sigma^2)`.
    pub pmf_sum_bound: CI,
    /// `e^{-round(eps sigma^2)^2/2 sigma^2} / sqrt(2 pi sigma^2)`, for `Delta = 1` only.
    pub unit_sensitivity_bound: Option<CI>,
    /// `Phibar(floor(t1)/sigma) - (1 - 1/(sqrt(2 pi sigma^2)+1)) e^eps Phibar(ceil(t2)/sigma)`
    /// with `t1, t2 = eps sigma^2/Delta -+ Delta/2`; `None` when
    /// `eps <= Delta^2/2 sigma^2` or a threshold is an integer.
    ///
    /// The second tail starts at `ceil(t2)`, the smallest integer above `t2`.
    /// Starting it at `floor(t2)` is not a valid bound, see the
    /// `floor_in_second_tail_undercuts_delta` test.
    pub continuous_sandwich_bound: Option<CI>,
}

/// Analytic upper bounds on the tight `delta`.
pub fn analytic_adp_upper_bounds(
    delta_sens: &Rational,
    sigma2: &Rational,
    eps: &Rational,
    prec: u32,
) -> Result<AnalyticBounds> {
    check(delta_sens, sigma2, eps)?;
    let p = prec;
    let (t1, t2) = thresholds(delta_sens, sigma2, eps);
    let inv2s = CI::point_rational(sigma2, p).recip().mul_pow2(-1);
    let root = CI::pi(p).mul_rational(sigma2).mul_pow2(1).sqrt();
    let weight = |k: &Integer| {
        inv2s
            .mul_rational(&Rational::from_integer(Integer::from(k * k)))
            .neg()
            .exp()
    };

    let (lo, hi) = (t1.ceil(), t2.ceil());
    let count = Integer::from(&hi - &lo);
    if count > 10_000_000 {
        return Err(Error::Domain(
            "sensitivity too large for the pmf-sum bound".into(),
        ));
    }
    let mut acc = CI::zero(p);
    let mut k = lo;
    while k <= hi {
        acc = acc.add(&weight(&k));
        k += 1u32;
    }
    let pmf_sum_bound = acc.div(&root).clamp01();

    let unit_sensitivity_bound = if *delta_sens == Rational::one() {
        let r = (eps * sigma2).round();
        Some(weight(&r).div(&root).clamp01())
    } else {
        None
    };

    let floor_eps = delta_sens.square() / (sigma2 * &Rational::from_integer(2));
    let applies = *eps > floor_eps && !t1.is_integer() && !t2.is_integer();
    let continuous_sandwich_bound = if applies {
        let sigma = CI::point_rational(sigma2, p).sqrt();
        let at = |m: Integer| phi_bar(&CI::point_integer(&m, p).div(&sigma), p);
        let factor = CI::one(p).sub(&root.add(&CI::one(p)).recip());
        let e = CI::point_rational(eps, p).exp();
        Some(
            at(t1.floor())
                .sub(&factor.mul(&e).mul(&at(t2.ceil())))
                .clamp01(),
        )
    } else {
        None
    };
    Ok(AnalyticBounds {
        pmf_sum_bound,
        unit_sensitivity_bound,
        continuous_sandwich_bound,
    })
}

/// Tight `delta` for continuous Gaussian noise `N(0, sigma2)`:
/// `Phibar(eps sigma/Delta - Delta/2sigma) - e^eps Phibar(eps sigma/Delta + Delta/2sigma)`.
pub fn continuous_gauss_adp(
    delta_sens: &Rational,
    sigma2: &Rational,
    eps: &Rational,
    prec: u32,
) -> Result<CI> {
    check(delta_sens, sigma2, eps)?;
    refine(prec, |p| {
        let sigma = CI::point_rational(sigma2, p).sqrt();
        let a = sigma.mul_rational(&(eps / delta_sens));
        let b = sigma.recip().mul_rational(delta_sens).mul_pow2(-1);
        let e = CI::point_rational(eps, p).exp();
        Ok(phi_bar(&a.sub(&b), p)
            .sub(&e.mul(&phi_bar(&a.add(&b), p)))
            .clamp01())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    /// `sum_x max(0, p0(x) - e^eps p1(x))` with `p1` shifted by `Delta`, in f64.
    fn brute(delta: i64, s2: f64, eps: f64) -> f64 {
        let b = (40.0 * s2.sqrt()) as i64 + 40;
        let w = |x: i64| (-(x as f64).powi(2) / (2.0 * s2)).exp();
        let z: f64 = (-b..=b).map(w).sum();
        (-b..=b)
            .map(|x| ((w(x) - eps.exp() * w(x - delta)) / z).max(0.0))
            .sum()
    }

    #[test]
    fn examples() {
        let p = 128;
        let d = exact_adp_dgauss(&q("1"), &q("1"), &q("20"), p).unwrap();
        assert!(d.hi_f64() < 1e-80 && *d.lo() >= 0);
        let d = exact_adp_dgauss(&q("1"), &q("1"), &q("0"), p).unwrap();
        // only the atom at 0 survives: 1/S
        assert!((d.mid_f64() - brute(1, 1.0, 0.0)).abs() < 1e-15);
        let d = exact_adp_dgauss(&q("1"), &q("4"), &q("1"), p).unwrap();
        assert!((d.mid_f64() - brute(1, 4.0, 1.0)).abs() < 1e-14);
    }

    #[test]
    fn matches_privacy_loss_enumeration() {
        for delta in 1..=3 {
            for s2 in ["1/2", "1", "4", "25"] {
                for eps in ["0", "1/10", "1/2", "1", "2"] {
                    let got =
                        exact_adp_dgauss(&Rational::from_integer(delta), &q(s2), &q(eps), 128)
                            .unwrap();
                    let want = brute(delta, q(s2).to_f64(), q(eps).to_f64());
                    assert!((got.mid_f64() - want).abs() < 1e-13, "{delta} {s2} {eps}");
                }
            }
        }
    }

    #[test]
    fn integer_threshold_uses_strict_inequality() {
        // eps sigma^2 - 1/2 = 1 exactly
        let d = exact_adp_dgauss(&q("1"), &q("3"), &q("1/2"), 128).unwrap();
        assert!((d.mid_f64() - brute(1, 3.0, 0.5)).abs() < 1e-14);
    }

    #[test]
    fn analytic_bounds_dominate() {
        let p = 128;
        let b = analytic_adp_upper_bounds(&q("1"), &q("25"), &q("1"), p).unwrap();
        let exact = exact_adp_dgauss(&q("1"), &q("25"), &q("1"), p).unwrap();
        assert!(exact.certainly_le(&b.pmf_sum_bound));
        assert!(exact.certainly_le(b.unit_sensitivity_bound.as_ref().unwrap()));
        // 25 +- 1/2 are not integers
        assert!(exact.certainly_le(b.continuous_sandwich_bound.as_ref().unwrap()));
        // eps <= Delta^2/2sigma^2
        let b = analytic_adp_upper_bounds(&q("1"), &q("1"), &q("1/2"), p).unwrap();
        assert!(b.continuous_sandwich_bound.is_none());
        let b = analytic_adp_upper_bounds(&q("2"), &q("4"), &q("1"), p).unwrap();
        assert!(b.unit_sensitivity_bound.is_none());
        // integer threshold: 1*4/2 + 1 = 3
        assert!(b.continuous_sandwich_bound.is_none());
        for (d, s2, e) in [
            ("1", "1", "1"),
            ("2", "4", "1/3"),
            ("3", "25", "2"),
            ("1", "1/2", "3"),
        ] {
            let b = analytic_adp_upper_bounds(&q(d), &q(s2), &q(e), p).unwrap();
            let x = exact_adp_dgauss(&q(d), &q(s2), &q(e), p).unwrap();
            assert!(x.certainly_le(&b.pmf_sum_bound), "{d} {s2} {e}");
            if let Some(c) = &b.continuous_sandwich_bound {
                assert!(x.certainly_le(c), "{d} {s2} {e}");
            }
        }
    }

    #[test]
    fn floor_in_second_tail_undercuts_delta() {
        // Delta = 3, sigma^2 = 67/34, eps = 3: t1 = 8/17, t2 = 59/17
        let p = 128;
        let (d, s2, e) = (q("3"), q("67/34"), q("3"));
        let exact = exact_adp_dgauss(&d, &s2, &e, p).unwrap();
        let sigma = CI::point_rational(&s2, p).sqrt();
        let root = CI::pi(p).mul_rational(&s2).mul_pow2(1).sqrt();
        let factor = CI::one(p).sub(&root.add(&CI::one(p)).recip());
        let tail = |m: i64| phi_bar(&CI::from_i64(m, p).div(&sigma), p);
        let with_floor = tail(0).sub(&factor.mul(&CI::point_rational(&e, p).exp()).mul(&tail(3)));
        assert!(with_floor.certainly_lt(&exact));
        let b = analytic_adp_upper_bounds(&d, &s2, &e, p).unwrap();
        assert!(exact.certainly_le(b.continuous_sandwich_bound.as_ref().unwrap()));
    }

    #[test]
    fn continuous_formula() {
        // sigma = 1, Delta = 1, eps = 0: Phibar(-1/2) - Phibar(1/2) = 0.382924922548
        let d = continuous_gauss_adp(&q("1"), &q("1"), &q("0"), 128).unwrap();
        assert!((d.mid_f64() - 0.382924922548026).abs() < 1e-12);
    }

    #[test]
    fn continuous_and_discrete_delta_are_close() {
        let p = 128;
        let rel = |s2: &str, e: &str| {
            let d = exact_adp_dgauss(&q("1"), &q(s2), &q(e), p).unwrap();
            let c = continuous_gauss_adp(&q("1"), &q(s2), &q(e), p).unwrap();
            d.div(&c).sub(&CI::one(p)).mid_f64().abs()
        };
        for s2 in ["100", "400", "2500", "10000"] {
            for e in ["1/2", "1"] {
                assert!(rel(s2, e) <= 0.05, "{s2} {e}");
            }
            // the integer lattice overshoots the continuous tail by roughly eps^2/24
            let r = rel(s2, "2");
            assert!(r > 0.09 && r < 0.12, "{s2}: {r}");
        }
    }
}
