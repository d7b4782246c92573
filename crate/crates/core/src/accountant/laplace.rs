use rug::Integer;

use crate::error::{Error, Result};
use crate::numeric::{CertifiedInterval as CI, Rational};

/// Pure `eps = Delta s / t` of `Lap_Z(t/s)` noise on a sensitivity-`Delta` query.
pub fn dlap_pure_dp(delta_sens: &Rational, t_over_s: &Rational) -> Result<Rational> {
    if !delta_sens.is_positive() || !t_over_s.is_positive() {
        return Err(Error::Domain(
            "sensitivity and scale must be positive".into(),
        ));
    }
    Ok(delta_sens / t_over_s)
}

/// The `eps` with `Var[Lap_Z(1/eps)] = variance`:
/// `eps = ln(1 + (1 + sqrt(2V + 1))/V)`.
pub fn dlap_eps_for_variance(variance: &Rational, prec: u32) -> Result<CI> {
    if !variance.is_positive() {
        return Err(Error::Domain(format!(
            "variance must be positive, got {variance}"
        )));
    }
    let v = CI::point_rational(variance, prec);
    let root = v.mul_pow2(1).add(&CI::one(prec)).sqrt();
    Ok(root.add(&CI::one(prec)).div(&v).ln_1p())
}

/// Smallest `delta'` such that the `k`-fold composition of
/// `(eps0, delta0)`-DP mechanisms is `(eps', delta')`-DP (optimal composition).
///
/// With `L = (1+e^eps0)^{-k} sum_l C(k,l) max(0, e^{l eps0} - e^{eps' + (k-l) eps0})`,
/// `delta' = L + (1 - L)(1 - (1-delta0)^k)`. Terms are formed in the log domain.
pub fn kov_optimal_composition(
    eps0: &CI,
    delta0: &CI,
    k: u32,
    eps_prime: &CI,
    prec: u32,
) -> Result<CI> {
    if *eps0.lo() < 0 {
        return Err(Error::Domain("eps0 must be nonnegative".into()));
    }
    if *delta0.lo() < 0 || *delta0.hi() >= 1 {
        return Err(Error::Domain("delta0 must lie in [0, 1)".into()));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let p = prec;
    let e0 = eps0.with_prec(p);
    let ep = eps_prime.with_prec(p);
    let log_norm = e0.exp().ln_1p().mul_i64(k as i64);
    let mut l_sum = CI::zero(p);
    for l in 0..=k {
        // max(0, 1 - e^{eps' + (k - 2l) eps0}) vanishes once the exponent is nonnegative
        let expo = ep.add(&e0.mul_i64(k as i64 - 2 * l as i64));
        if *expo.lo() >= 0 {
            continue;
        }
        let gap = expo.exp_m1().neg().clamp_min0();
        let binom = CI::point_integer(&Integer::from(Integer::binomial_u(k, l)), p).ln();
        let w = binom.add(&e0.mul_i64(l as i64)).sub(&log_norm).exp();
        l_sum = l_sum.add(&w.mul(&gap));
    }
    let l_sum = l_sum.clamp01();
    let fail = delta0
        .with_prec(p)
        .neg()
        .ln_1p()
        .mul_i64(k as i64)
        .exp_m1()
        .neg();
    Ok(l_sum.add(&CI::one(p).sub(&l_sum).mul(&fail)).clamp01())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn kov_f64(eps0: f64, k: u32, eps_prime: f64) -> f64 {
        // direct evaluation with f64 binomials, fine for k <= 100
        let mut s = 0.0;
        let mut c = 1.0f64;
        for l in 0..=k {
            if l > 0 {
                c = c * (k - l + 1) as f64 / l as f64;
            }
            s += c * ((l as f64 * eps0).exp() - (eps_prime + (k - l) as f64 * eps0).exp()).max(0.0);
        }
        s / (1.0 + eps0.exp()).powi(k as i32)
    }

    #[test]
    fn pure_examples() {
        assert_eq!(dlap_pure_dp(&q("1"), &q("10")).unwrap(), q("1/10"));
        assert_eq!(dlap_pure_dp(&q("2"), &q("4")).unwrap(), q("1/2"));
        let e0 = dlap_eps_for_variance(&q("2500"), 128).unwrap();
        assert!((e0.mid_f64() - 0.0282833).abs() < 1e-6);
        assert!((e0.mid_f64() * 100.0 - 2.83).abs() < 0.01);
        let v = crate::dist::dlap_variance_of_eps(&e0);
        assert!(v.contains_f64(2500.0) || (v.mid_f64() - 2500.0).abs() < 1e-20);
    }

    #[test]
    fn kov_examples() {
        let p = 128;
        let z = CI::zero(p);
        let e = CI::point_rational(&q("3/10"), p);
        assert!(kov_optimal_composition(&e, &z, 1, &e, p)
            .unwrap()
            .contains_f64(0.0));
        let e0 = dlap_eps_for_variance(&q("2500"), p).unwrap();
        let d = kov_optimal_composition(&e0, &z, 100, &CI::one(p), p).unwrap();
        assert!(d.lo_f64() >= 1.85e-5 && d.hi_f64() <= 2.27e-5);
        assert!((d.mid_f64() - kov_f64(e0.mid_f64(), 100, 1.0)).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..30 {
            let ep = CI::point_rational(&Rational::new(i, 10).unwrap(), p);
            let d = kov_optimal_composition(&e0, &z, 100, &ep, p).unwrap();
            assert!(d.hi_f64() <= prev);
            prev = d.hi_f64();
        }
        assert!(prev == 0.0);
    }

    #[test]
    fn delta0_enters_through_the_product() {
        let p = 128;
        let e = CI::point_rational(&q("1/10"), p);
        let d0 = CI::point_rational(&q("1/1000"), p);
        let d = kov_optimal_composition(&e, &d0, 10, &CI::from_i64(5, p), p).unwrap();
        // eps' = 5 > 10 * 0.1 so L = 0 and delta' = 1 - 0.999^10
        assert!((d.mid_f64() - (1.0 - 0.999f64.powi(10))).abs() < 1e-15);
        assert!(kov_optimal_composition(&e, &CI::one(p), 1, &e, p).is_err());
    }
}
