use crate::dist::phi_bar;
use crate::error::{Error, Result};
use crate::numeric::{CertifiedInterval as CI, Rational};

use super::{CdpBound, RenyiBound};

const MAX_BISECTIONS: usize = 200;
const REL_WIDTH: f64 = 1e-12;
const GRID_POINTS: usize = 1000;
const GRID_MAX_LOG10: f64 = 4.0;

/// `delta` for which `(alpha, tau)`-RDP implies `(eps, delta)`-DP:
/// `e^{(alpha-1)(tau-eps)}/(alpha-1) * (1-1/alpha)^alpha`.
pub fn rdp_to_adp(bound: &RenyiBound, eps: &Rational, prec: u32) -> Result<CI> {
    let a = &bound.alpha;
    if *a <= Rational::one() {
        return Err(Error::Domain(format!("alpha must exceed 1, got {a}")));
    }
    let p = prec;
    let am1 = a - &Rational::one();
    let expo = bound
        .tau
        .with_prec(p)
        .sub(&CI::point_rational(eps, p))
        .mul_rational(&am1);
    let ln_am1 = CI::point_rational(&am1, p).ln();
    let ln_ratio = CI::point_rational(&(&am1 / a), p).ln().mul_rational(a);
    Ok(expo.sub(&ln_am1).add(&ln_ratio).exp().clamp01())
}

/// The standard conversion `e^{(alpha-1)(tau-eps)}`.
pub fn rdp_standard_bound(bound: &RenyiBound, eps: &Rational, prec: u32) -> CI {
    let am1 = &bound.alpha - &Rational::one();
    bound
        .tau
        .with_prec(prec)
        .sub(&CI::point_rational(eps, prec))
        .mul_rational(&am1)
        .exp()
}

/// How the Renyi order was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaSearch {
    /// `rho = 0`: the mechanism is perfectly private.
    Trivial,
    /// Bisection on `g'` over the bracket that holds for `eps > rho`.
    Bisection,
    /// Log-spaced grid on `(1, 10^4]`, used when `eps <= rho`.
    Grid,
}

/// Result of a CDP to ADP conversion.
#[derive(Clone, Debug)]
pub struct CdpToAdp {
    pub delta: CI,
    pub alpha: Rational,
    pub search: AlphaSearch,
}

fn g_f64(alpha: f64, rho: f64, eps: f64) -> f64 {
    (alpha - 1.0) * (alpha * rho - eps) + (alpha - 1.0) * (-1.0 / alpha).ln_1p() - alpha.ln()
}

/// `g'(alpha) = (2 alpha - 1) rho - eps + ln(1 - 1/alpha)`.
pub fn g_prime(alpha: f64, rho: f64, eps: f64) -> f64 {
    (2.0 * alpha - 1.0) * rho - eps + (-1.0 / alpha).ln_1p()
}

/// Certified `e^{g(alpha)}` with
/// `g(alpha) = (alpha-1)(alpha rho - eps) + (alpha-1) ln(1-1/alpha) - ln alpha`.
pub fn cdp_to_adp_at(rho: &Rational, eps: &Rational, alpha: &Rational, prec: u32) -> Result<CI> {
    if *alpha <= Rational::one() {
        return Err(Error::Domain(format!("alpha must exceed 1, got {alpha}")));
    }
    let p = prec;
    let am1 = alpha - &Rational::one();
    let poly = &am1 * &(alpha * rho - eps.clone());
    let ln_ratio = CI::point_rational(&(&am1 / alpha), p)
        .ln()
        .mul_rational(&am1);
    let g = CI::point_rational(&poly, p)
        .add(&ln_ratio)
        .sub(&CI::point_rational(alpha, p).ln());
    Ok(g.exp())
}

/// `delta` for which `rho`-zCDP implies `(eps, delta)`-DP, minimised over the
/// Renyi order.
///
/// The optimiser runs in f64; every candidate order is then evaluated with
/// certified arithmetic and the smallest upper endpoint wins, so the result
/// is a sound upper bound whatever the optimiser's accuracy.
pub fn cdp_to_adp(bound: &CdpBound, eps: &Rational, prec: u32) -> Result<CdpToAdp> {
    let rho = &bound.rho;
    if eps.is_negative() {
        return Err(Error::Domain(format!("eps must be nonnegative, got {eps}")));
    }
    if rho.is_zero() {
        return Ok(CdpToAdp {
            delta: CI::zero(prec),
            alpha: Rational::from_integer(2),
            search: AlphaSearch::Trivial,
        });
    }
    let (r, e) = (rho.to_f64(), eps.to_f64());
    let (candidates, search) = if eps > rho {
        let start = (e + r) / (2.0 * r);
        let mut lo = start;
        let mut hi = ((e + r + 1.0) / (2.0 * r)).max(2.0);
        for _ in 0..MAX_BISECTIONS {
            if (hi - lo) / lo < REL_WIDTH {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if g_prime(mid, r, e) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (vec![lo, hi, start], AlphaSearch::Bisection)
    } else {
        let best = (1..=GRID_POINTS)
            .map(|i| 10f64.powf(GRID_MAX_LOG10 * i as f64 / GRID_POINTS as f64))
            .min_by(|a, b| g_f64(*a, r, e).total_cmp(&g_f64(*b, r, e)))
            .unwrap_or(2.0);
        (vec![best], AlphaSearch::Grid)
    };
    let mut best: Option<(CI, Rational)> = None;
    for a in candidates {
        if !(a.is_finite() && a > 1.0) {
            continue;
        }
        let alpha = Rational::from_f64(a)?;
        if alpha <= Rational::one() {
            continue;
        }
        let d = cdp_to_adp_at(rho, eps, &alpha, prec)?;
        let better = best.as_ref().is_none_or(|(b, _)| d.hi() < b.hi());
        if better {
            best = Some((d, alpha));
        }
    }
    let (delta, alpha) = best.ok_or_else(|| Error::Domain("no admissible Renyi order".into()))?;
    Ok(CdpToAdp {
        delta: delta.clamp01(),
        alpha,
        search,
    })
}

/// The standard conversion `e^{-(eps-rho)^2/4rho}`, valid for `eps >= rho > 0`.
pub fn standard_cdp_bound(rho: &Rational, eps: &Rational, prec: u32) -> Result<CI> {
    if !rho.is_positive() || eps < rho {
        return Err(Error::Domain(
            "the standard bound needs eps >= rho > 0".into(),
        ));
    }
    let x = (eps - rho).square() / (rho * &Rational::from_integer(4));
    Ok(CI::point_rational(&x, prec).neg().exp())
}

/// `2 sqrt(pi rho) e^eps Phibar((eps + rho)/sqrt(2 rho))`.
pub fn gaussian_tail_cdp_bound(rho: &Rational, eps: &Rational, prec: u32) -> Result<CI> {
    if !rho.is_positive() {
        return Err(Error::Domain("rho must be positive".into()));
    }
    let p = prec;
    let r = CI::point_rational(rho, p);
    let z = CI::point_rational(&(eps + rho), p).div(&r.mul_pow2(1).sqrt());
    let pre = CI::pi(p)
        .mul(&r)
        .sqrt()
        .mul_pow2(1)
        .mul(&CI::point_rational(eps, p).exp());
    Ok(pre.mul(&phi_bar(&z, p)))
}
