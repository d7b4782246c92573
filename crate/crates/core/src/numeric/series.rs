use rug::float::{Round, Special};
use rug::{Float, Integer};

use super::{CertifiedInterval, Rational};
use crate::error::{Error, Result};

/// Hard cap on the number of terms a series may use.
pub const DEFAULT_MAX_TERMS: u64 = 10_000_000;

/// A series `sum term(i)` over `i` in Z (symmetric) or N.
///
/// `tail_bound(b)` must bound the absolute sum of all terms with `|i| > b`
/// (rounded up) and be nonincreasing in `b`.
pub struct SeriesSpec<'a> {
    pub term: &'a dyn Fn(i64) -> CertifiedInterval,
    pub tail_bound: &'a dyn Fn(u64) -> Float,
    pub symmetric: bool,
    /// Terms are known to be nonnegative, so the omitted tail only raises the sum.
    pub nonnegative: bool,
    pub cutoff_hint: u64,
    pub max_terms: u64,
}

impl<'a> SeriesSpec<'a> {
    pub fn new(
        term: &'a dyn Fn(i64) -> CertifiedInterval,
        tail_bound: &'a dyn Fn(u64) -> Float,
        symmetric: bool,
    ) -> Self {
        SeriesSpec {
            term,
            tail_bound,
            symmetric,
            nonnegative: false,
            cutoff_hint: 16,
            max_terms: DEFAULT_MAX_TERMS,
        }
    }
}

/// Certified enclosure of an infinite series, truncated once the tail bound
/// drops below `target`.
pub fn sum_series(spec: &SeriesSpec<'_>, target: &Float, prec: u32) -> Result<CertifiedInterval> {
    let mut b = spec.cutoff_hint.max(1).min(spec.max_terms);
    let tail = loop {
        let t = (spec.tail_bound)(b);
        if t <= *target {
            break t;
        }
        if b >= spec.max_terms {
            return Err(Error::NonConvergence(spec.max_terms));
        }
        b = (2 * b + 1).min(spec.max_terms);
    };
    let mut acc = CertifiedInterval::zero(prec);
    let start = if spec.symmetric { -(b as i64) } else { 0 };
    for i in start..=(b as i64) {
        acc = acc.add(&(spec.term)(i));
    }
    Ok(if spec.nonnegative {
        acc.widen_up(&tail)
    } else {
        acc.widen(&tail)
    })
}

/// Cutoff `ceil(sigma) * ceil(sqrt(2 ln(3 S_upper / target)))` for Gaussian-type
/// terms `e^{-x^2/2 sigma^2}`, with `S_upper = sqrt(2 pi sigma^2) + 1`.
pub fn gaussian_cutoff(sigma2: f64, target: f64) -> u64 {
    let sigma = sigma2.sqrt();
    let s_upper = (2.0 * std::f64::consts::PI * sigma2).sqrt() + 1.0;
    let l = (2.0 * (3.0 * s_upper / target).ln()).max(1.0).sqrt();
    (sigma.ceil() * l.ceil()) as u64
}

fn inf(prec: u32) -> Float {
    Float::with_val(prec, Special::Infinity)
}

/// Upper bound on `sum_{x >= x0} x^p e^{-c (x-a)^2}` using a geometric
/// majorant of the term ratio; `+inf` when the majorant does not apply.
pub fn gauss_tail_majorant(c_lo: &Float, a: &Rational, p: u32, x0: &Integer, prec: u32) -> Float {
    let d0 = Rational::from_integer(x0.clone()) - a.clone();
    if !d0.is_positive() || (p > 0 && *x0 < 1) || *c_lo <= 0 {
        return inf(prec);
    }
    let c = CertifiedInterval::from_bounds(c_lo.clone(), c_lo.clone()).with_prec(prec);
    let x0i = CertifiedInterval::point_integer(x0, prec);
    let mut lead = c.mul_rational(&d0.square()).neg().exp();
    let mut ratio = c
        .mul_rational(&(Rational::from_integer(2) * d0 + Rational::one()))
        .neg()
        .exp();
    if p > 0 {
        let x1 = CertifiedInterval::point_integer(&(x0.clone() + 1u32), prec);
        let grow = x1.div(&x0i);
        for _ in 0..p {
            lead = lead.mul(&x0i);
            ratio = ratio.mul(&grow);
        }
    }
    let one = CertifiedInterval::one(prec);
    let denom = one.sub(&ratio);
    if *denom.lo() <= 0 {
        return inf(prec);
    }
    lead.div(&denom).hi().clone()
}

fn term(c: &CertifiedInterval, a: &Rational, p: u32, x: &Integer, prec: u32) -> CertifiedInterval {
    let d = Rational::from_integer(x.clone()) - a.clone();
    let mut t = c.mul_rational(&d.square()).neg().exp();
    if p > 0 {
        let xi = CertifiedInterval::point_integer(x, prec);
        for _ in 0..p {
            t = t.mul(&xi);
        }
    }
    t
}

/// Certified `sum_{x >= n0} x^p e^{-c (x-a)^2}` for `c > 0`.
///
/// When `p > 0` the caller must ensure `n0 >= 0`. Truncation error is kept
/// below `2^-(prec+10)` times the largest explicit term.
pub fn gauss_sum_from(
    c: &CertifiedInterval,
    a: &Rational,
    p: u32,
    n0: &Integer,
    prec: u32,
) -> Result<CertifiedInterval> {
    if *c.lo() <= 0 {
        return Err(Error::Domain("gaussian sum needs c > 0".into()));
    }
    if p > 0 && *n0 < 0 {
        return Err(Error::Domain(
            "weighted gaussian sum must start at x >= 0".into(),
        ));
    }
    let center = a.round();
    let mut peak = if center > *n0 { center } else { n0.clone() };
    if p > 0 && peak == 0 {
        peak = Integer::from(1);
    }
    let lead = term(c, a, p, &peak, prec);
    let target = if lead.lo().is_zero() {
        Float::with_val(prec, lead.hi() * 4u32)
    } else {
        Float::with_val(prec, lead.lo() >> (prec as i32 + 10))
    };

    // f64 estimate of the cutoff; the certified tail bound has the final word
    let cf = c.lo_f64();
    let af = a.to_f64();
    let dstar = (peak.to_f64() - af).max(0.0);
    let l = (prec as f64 + 10.0 + 4.0 * p as f64) * std::f64::consts::LN_2 + 8.0;
    let reach = if cf > 0.0 && cf.is_finite() {
        (dstar * dstar + l / cf).sqrt()
    } else {
        1e7
    };
    let need = (af + reach + 2.0 - n0.to_f64()).max(1.0);
    let hint = if need.is_finite() {
        need.min(DEFAULT_MAX_TERMS as f64) as u64
    } else {
        DEFAULT_MAX_TERMS
    };

    let c_lo = c.lo().clone();
    let term_fn = |i: i64| term(c, a, p, &(n0.clone() + i), prec);
    let tail_fn = |b: u64| gauss_tail_majorant(&c_lo, a, p, &(n0.clone() + b + 1u32), prec);
    let spec = SeriesSpec {
        term: &term_fn,
        tail_bound: &tail_fn,
        symmetric: false,
        nonnegative: true,
        cutoff_hint: hint,
        max_terms: DEFAULT_MAX_TERMS,
    };
    sum_series(&spec, &target, prec)
}

/// Certified `sum_{x in Z} e^{-c (x-a)^2}`.
pub fn gauss_sum_z(c: &CertifiedInterval, a: &Rational, prec: u32) -> Result<CertifiedInterval> {
    let r = a.round();
    let right = gauss_sum_from(c, a, 0, &r, prec)?;
    let left = gauss_sum_from(c, &-a, 0, &(Integer::from(1) - &r), prec)?;
    Ok(right.add(&left))
}

/// Round-up helper for callers building tail bounds.
pub fn round_up(prec: u32, x: &Float) -> Float {
    Float::with_val_round(prec, x, Round::Up).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn half_over(s2: &str, prec: u32) -> CertifiedInterval {
        CertifiedInterval::point_rational(&q(s2), prec)
            .recip()
            .mul_pow2(-1)
    }

    #[test]
    fn unit_gaussian_theta() {
        let prec = 128;
        let c = half_over("1", prec);
        let term = |i: i64| c.mul_i64(i * i).neg().exp();
        let c_lo = c.lo().clone();
        let tail = |b: u64| {
            let x0 = Integer::from(b + 1);
            let one = gauss_tail_majorant(&c_lo, &Rational::zero(), 0, &x0, prec);
            Float::with_val(prec, one * 2u32)
        };
        let mut spec = SeriesSpec::new(&term, &tail, true);
        spec.nonnegative = true;
        spec.cutoff_hint = gaussian_cutoff(1.0, 1e-15);
        let target = Float::with_val(prec, 1e-15);
        let s = sum_series(&spec, &target, prec).unwrap();
        // sqrt(2 pi) (1 + 2 e^{-2 pi^2}) ~ 2.50662828976...
        let oracle: f64 = (-12i32..=12)
            .map(|x| (-(x as f64).powi(2) / 2.0).exp())
            .sum();
        assert!((s.mid_f64() - oracle).abs() < 1e-14);
        assert!((s.mid_f64() - 2.506628288).abs() < 1e-8);
        assert!(s.width() < 3e-15);
    }

    #[test]
    fn zero_series() {
        let term = |_: i64| CertifiedInterval::zero(64);
        let tail = |_: u64| Float::new(64);
        let spec = SeriesSpec::new(&term, &tail, true);
        let s = sum_series(&spec, &Float::with_val(64, 1e-10), 64).unwrap();
        assert!(s.lo().is_zero() && s.hi().is_zero());
    }

    #[test]
    fn sigma_ten_theta() {
        let prec = 128;
        let c = half_over("100", prec);
        let s = gauss_sum_z(&c, &Rational::zero(), prec).unwrap();
        let oracle: f64 = (-120i32..=120)
            .map(|x| (-(x as f64).powi(2) / 200.0).exp())
            .sum();
        assert!((s.mid_f64() - oracle).abs() < 1e-11);
        let root = (200.0 * std::f64::consts::PI).sqrt();
        assert!(s.lo_f64() >= root - 1e-9 && s.hi_f64() <= root + 1.0);
        assert!((s.mid_f64() - 25.0662827463).abs() < 1e-9);
    }

    #[test]
    fn non_convergent_series_is_reported() {
        let term = |_: i64| CertifiedInterval::one(64);
        let tail = |_: u64| Float::with_val(64, Special::Infinity);
        let mut spec = SeriesSpec::new(&term, &tail, false);
        spec.max_terms = 1000;
        let err = sum_series(&spec, &Float::with_val(64, 1e-3), 64).unwrap_err();
        assert_eq!(err, Error::NonConvergence(1000));
    }

    #[test]
    fn shifted_and_weighted_sums() {
        let prec = 128;
        let c = half_over("5/2", prec);
        let a = q("7/3");
        let s = gauss_sum_z(&c, &a, prec).unwrap();
        let oracle: f64 = (-60i32..=60)
            .map(|x| (-(x as f64 - 7.0 / 3.0).powi(2) / 5.0).exp())
            .sum();
        assert!((s.mid_f64() - oracle).abs() < 1e-13);
        let w = gauss_sum_from(&c, &Rational::zero(), 2, &Integer::from(1), prec).unwrap();
        let oracle: f64 = (1i32..=60)
            .map(|x| (x as f64).powi(2) * (-(x as f64).powi(2) / 5.0).exp())
            .sum();
        assert!((w.mid_f64() - oracle).abs() < 1e-12);
        // deep tail keeps relative accuracy
        let t = gauss_sum_from(
            &half_over("1", prec),
            &Rational::zero(),
            0,
            &Integer::from(40),
            prec,
        )
        .unwrap();
        let rel = Float::with_val(prec, t.width() / t.lo());
        assert!(*t.lo() > 0 && rel < 1e-30);
    }
}
