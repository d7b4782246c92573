use rug::Integer;

use crate::dist::{dgauss_normalizer, shifted_theta};
use crate::error::{Error, Result};
use crate::numeric::{CertifiedInterval as CI, Rational};

use super::{CdpBound, MultiQuerySpec, QuerySpec};

fn check(sigma2: &Rational, alpha: &Rational) -> Result<()> {
    if !sigma2.is_positive() {
        return Err(Error::Domain(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if *alpha <= Rational::one() {
        return Err(Error::Domain(format!("alpha must exceed 1, got {alpha}")));
    }
    Ok(())
}

/// The Renyi divergence bound `alpha (mu - nu)^2 / (2 sigma^2)` between
/// `N_Z(mu, sigma2)` and `N_Z(nu, sigma2)`.
pub fn renyi_divergence_dgauss(
    mu: &Integer,
    nu: &Integer,
    sigma2: &Rational,
    alpha: &Rational,
    prec: u32,
) -> Result<CI> {
    check(sigma2, alpha)?;
    let d = Rational::from_integer(Integer::from(mu - nu));
    let v = alpha * &d.square() / (sigma2 * &Rational::from_integer(2));
    Ok(CI::point_rational(&v, prec))
}

/// The exact Renyi divergence, by series:
/// `alpha d^2/(2 sigma^2) + ln(theta(m)/theta(0))/(alpha-1)` with
/// `m = nu + alpha (mu - nu)` and `theta(a) = sum_x e^{-(x-a)^2/2 sigma^2}`.
///
/// Equals the bound exactly when `alpha (mu - nu)` is an integer.
pub fn renyi_divergence_exact(
    mu: &Integer,
    nu: &Integer,
    sigma2: &Rational,
    alpha: &Rational,
    prec: u32,
) -> Result<CI> {
    let bound = renyi_divergence_dgauss(mu, nu, sigma2, alpha, prec)?;
    let d = Rational::from_integer(Integer::from(mu - nu));
    let m = Rational::from_integer(nu.clone()) + alpha * &d;
    if m.is_integer() {
        return Ok(bound);
    }
    let s0 = dgauss_normalizer(sigma2, prec)?.value;
    let sm = shifted_theta(sigma2, &m, prec)?;
    let am1 = alpha - &Rational::one();
    let corr = sm.div(&s0).ln().div(&CI::point_rational(&am1, prec));
    Ok(bound.add(&corr))
}

/// `rho = k Delta^2 / (2 sigma^2)` for `k` composed queries.
pub fn cdp_of_dgauss(q: &QuerySpec, sigma2: &Rational) -> Result<CdpBound> {
    if !sigma2.is_positive() {
        return Err(Error::Domain(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    let k = Rational::from_integer(q.k());
    CdpBound::new(k * q.sensitivity().square() / (sigma2 * &Rational::from_integer(2)))
}

/// `rho = (1/2) sum_j mu_j^2 / sigma_j^2`.
pub fn cdp_of_multivariate(spec: &MultiQuerySpec) -> CdpBound {
    CdpBound {
        rho: spec.weighted_norm2() / Rational::from_integer(2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn int(n: i64) -> Integer {
        Integer::from(n)
    }

    #[test]
    fn renyi_examples() {
        let p = 128;
        let z = renyi_divergence_exact(&int(3), &int(3), &q("1"), &q("2"), p).unwrap();
        assert!(z.contains_f64(0.0));
        let b = renyi_divergence_dgauss(&int(1), &int(0), &q("1"), &q("2"), p).unwrap();
        let e = renyi_divergence_exact(&int(1), &int(0), &q("1"), &q("2"), p).unwrap();
        assert!(b.contains_f64(1.0) && e.contains_f64(1.0));
        let b = renyi_divergence_dgauss(&int(1), &int(0), &q("1"), &q("3/2"), p).unwrap();
        let e = renyi_divergence_exact(&int(1), &int(0), &q("1"), &q("3/2"), p).unwrap();
        assert!(b.contains_f64(0.75) && e.certainly_lt(&b));
        assert!(renyi_divergence_dgauss(&int(1), &int(0), &q("1"), &q("1"), p).is_err());
    }

    #[test]
    fn renyi_matches_brute_force() {
        // direct sum of p_mu^alpha p_nu^{1-alpha}
        for (alpha, s2) in [(1.5f64, 1.0f64), (2.5, 0.5), (1.25, 3.0)] {
            let lw = |x: f64, c: f64| -(x - c).powi(2) / (2.0 * s2);
            let s: f64 = (-30..=30)
                .map(|x| (alpha * lw(x as f64, 1.0) + (1.0 - alpha) * lw(x as f64, 0.0)).exp())
                .sum();
            let z: f64 = (-30..=30).map(|x| lw(x as f64, 0.0).exp()).sum();
            let s = s / z;
            let oracle = s.ln() / (alpha - 1.0);
            let got = renyi_divergence_exact(
                &int(1),
                &int(0),
                &Rational::from_f64(s2).unwrap(),
                &Rational::from_f64(alpha).unwrap(),
                128,
            )
            .unwrap();
            assert!(
                (got.mid_f64() - oracle).abs() < 1e-12,
                "{alpha} {s2} {got} {oracle}"
            );
        }
    }

    #[test]
    fn cdp_examples() {
        let one = QuerySpec::new(q("1"), 1).unwrap();
        assert_eq!(cdp_of_dgauss(&one, &q("25")).unwrap().rho, q("1/50"));
        let hundred = QuerySpec::new(q("1"), 100).unwrap();
        assert_eq!(cdp_of_dgauss(&hundred, &q("2500")).unwrap().rho, q("1/50"));
        let two = QuerySpec::new(q("2"), 1).unwrap();
        assert_eq!(cdp_of_dgauss(&two, &q("8")).unwrap().rho, q("1/4"));
        assert!(QuerySpec::new(q("0"), 1).is_err());
    }

    #[test]
    fn multivariate_examples() {
        let s = MultiQuerySpec::new(vec![q("3"), q("3"), q("3")], vec![int(1), int(0), int(0)])
            .unwrap();
        assert_eq!(cdp_of_multivariate(&s).rho, q("1/6"));
        let s = MultiQuerySpec::new(vec![q("1"), q("4")], vec![int(1), int(1)]).unwrap();
        assert_eq!(cdp_of_multivariate(&s).rho, q("5/8"));
        let t = MultiQuerySpec::new(vec![q("4"), q("1")], vec![int(1), int(1)]).unwrap();
        assert_eq!(cdp_of_multivariate(&s), cdp_of_multivariate(&t));
        assert!(MultiQuerySpec::new(vec![q("1")], vec![]).is_err());
    }
}
