use std::cmp::Ordering;
use std::fmt;

use rug::float::{Constant, Round};
use rug::ops::AssignRound;
use rug::{Float, Integer};

use super::Rational;
use crate::error::{Error, Result};

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 128;
/// Number of precision doublings attempted before giving up on a comparison.
pub const MAX_DOUBLINGS: u32 = 4;

fn rnd<T>(prec: u32, v: T, r: Round) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, r).0
}

fn fix_lo(mut f: Float) -> Float {
    if f.is_nan() {
        f = Float::with_val(f.prec(), rug::float::Special::NegInfinity);
    }
    f
}

fn fix_hi(mut f: Float) -> Float {
    if f.is_nan() {
        f = Float::with_val(f.prec(), rug::float::Special::Infinity);
    }
    f
}

/// Closed interval `[lo, hi]` of reals with endpoints rounded outward.
///
/// Every operation returns an interval containing all exact results for
/// arguments drawn from the operand intervals.
#[derive(Clone, PartialEq)]
pub struct CertifiedInterval {
    lo: Float,
    hi: Float,
    prec: u32,
}

impl CertifiedInterval {
    /// Interval from explicit endpoints. Panics if `lo > hi`.
    pub fn from_bounds(lo: Float, hi: Float) -> Self {
        assert!(
            lo.partial_cmp(&hi) != Some(Ordering::Greater),
            "inverted interval [{lo}, {hi}]"
        );
        let prec = lo.prec().max(hi.prec());
        CertifiedInterval {
            lo: fix_lo(lo),
            hi: fix_hi(hi),
            prec,
        }
    }

    pub fn point_rational(r: &Rational, prec: u32) -> Self {
        CertifiedInterval {
            lo: rnd(prec, r.as_rug(), Round::Down),
            hi: rnd(prec, r.as_rug(), Round::Up),
            prec,
        }
    }

    pub fn point_integer(n: &Integer, prec: u32) -> Self {
        CertifiedInterval {
            lo: rnd(prec, n, Round::Down),
            hi: rnd(prec, n, Round::Up),
            prec,
        }
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::point_integer(&Integer::from(n), prec)
    }

    /// Exact value of a finite double (widened only if `prec < 53`).
    pub fn from_f64(x: f64, prec: u32) -> Self {
        CertifiedInterval {
            lo: rnd(prec, x, Round::Down),
            hi: rnd(prec, x, Round::Up),
            prec,
        }
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_i64(0, prec)
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn pi(prec: u32) -> Self {
        CertifiedInterval {
            lo: rnd(prec, Constant::Pi, Round::Down),
            hi: rnd(prec, Constant::Pi, Round::Up),
            prec,
        }
    }

    /// `[0, +inf]`.
    pub fn nonnegative(prec: u32) -> Self {
        CertifiedInterval {
            lo: Float::new(prec),
            hi: Float::with_val(prec, rug::float::Special::Infinity),
            prec,
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn mid_f64(&self) -> f64 {
        let m = rnd(self.prec + 1, &self.lo + &self.hi, Round::Nearest) / 2u32;
        m.to_f64()
    }

    pub fn mid(&self) -> Float {
        rnd(self.prec + 1, &self.lo + &self.hi, Round::Nearest) / 2u32
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> Float {
        rnd(self.prec, &self.hi - &self.lo, Round::Up)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lo <= *r.as_rug() && self.hi >= *r.as_rug()
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && self.hi >= x
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.lo <= other.lo && self.hi >= other.hi
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// True when every point of `self` is below every point of `other`.
    pub fn certainly_lt(&self, other: &Self) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_le(&self, other: &Self) -> bool {
        self.hi <= other.lo
    }

    /// Certified `self < other`, `self >= other`, or `None` when the intervals overlap.
    pub fn compare(&self, other: &Self) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && other.lo == other.hi && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    fn p2(&self, other: &Self) -> u32 {
        self.prec.max(other.prec)
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        CertifiedInterval {
            lo: rnd(prec, &self.lo, Round::Down),
            hi: rnd(prec, &self.hi, Round::Up),
            prec,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let p = self.p2(o);
        Self::raw(
            rnd(p, &self.lo + &o.lo, Round::Down),
            rnd(p, &self.hi + &o.hi, Round::Up),
            p,
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        let p = self.p2(o);
        Self::raw(
            rnd(p, &self.lo - &o.hi, Round::Down),
            rnd(p, &self.hi - &o.lo, Round::Up),
            p,
        )
    }

    pub fn neg(&self) -> Self {
        Self::raw(
            Float::with_val(self.prec, -&self.hi),
            Float::with_val(self.prec, -&self.lo),
            self.prec,
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = self.p2(o);
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let (d, u) = if (a.is_zero() && b.is_infinite()) || (a.is_infinite() && b.is_zero()) {
                (Float::new(p), Float::new(p))
            } else {
                (rnd(p, a * b, Round::Down), rnd(p, a * b, Round::Up))
            };
            lo = Some(match lo {
                Some(l) if l <= d => l,
                _ => d,
            });
            hi = Some(match hi {
                Some(h) if h >= u => h,
                _ => u,
            });
        }
        Self::raw(lo.unwrap(), hi.unwrap(), p)
    }

    pub fn square(&self) -> Self {
        let p = self.prec;
        if self.lo.is_sign_positive() && !self.lo.is_zero() || self.lo.is_zero() {
            Self::raw(
                rnd(p, self.lo.square_ref(), Round::Down),
                rnd(p, self.hi.square_ref(), Round::Up),
                p,
            )
        } else if self.hi <= 0 {
            Self::raw(
                rnd(p, self.hi.square_ref(), Round::Down),
                rnd(p, self.lo.square_ref(), Round::Up),
                p,
            )
        } else {
            let a = rnd(p, self.lo.square_ref(), Round::Up);
            let b = rnd(p, self.hi.square_ref(), Round::Up);
            Self::raw(Float::new(p), if a > b { a } else { b }, p)
        }
    }

    pub fn div(&self, o: &Self) -> Self {
        let p = self.p2(o);
        if o.lo <= 0 && o.hi >= 0 {
            return Self::raw(
                Float::with_val(p, rug::float::Special::NegInfinity),
                Float::with_val(p, rug::float::Special::Infinity),
                p,
            );
        }
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let d = rnd(p, a / b, Round::Down);
            let u = rnd(p, a / b, Round::Up);
            lo = Some(match lo {
                Some(l) if l <= d => l,
                _ => d,
            });
            hi = Some(match hi {
                Some(h) if h >= u => h,
                _ => u,
            });
        }
        Self::raw(lo.unwrap(), hi.unwrap(), p)
    }

    pub fn recip(&self) -> Self {
        Self::one(self.prec).div(self)
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        self.mul(&Self::from_i64(k, self.prec))
    }

    pub fn mul_rational(&self, r: &Rational) -> Self {
        self.mul(&Self::point_rational(r, self.prec))
    }

    pub fn add_rational(&self, r: &Rational) -> Self {
        self.add(&Self::point_rational(r, self.prec))
    }

    /// Multiplication by `2^k`, exact.
    pub fn mul_pow2(&self, k: i32) -> Self {
        Self::raw(
            Float::with_val(self.prec, &self.lo << k),
            Float::with_val(self.prec, &self.hi << k),
            self.prec,
        )
    }

    fn monotone(&self, f: impl Fn(&mut Float, Round) -> Ordering) -> Self {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        f(&mut lo, Round::Down);
        f(&mut hi, Round::Up);
        Self::raw(lo, hi, self.prec)
    }

    pub fn exp(&self) -> Self {
        self.monotone(|x, r| x.exp_round(r))
    }

    /// `e^x - 1`.
    pub fn exp_m1(&self) -> Self {
        self.monotone(|x, r| x.exp_m1_round(r))
    }

    /// Natural log; the part of the argument below zero is discarded.
    pub fn ln(&self) -> Self {
        let c = self.clamp_min0();
        c.monotone(|x, r| x.ln_round(r))
    }

    /// `ln(1 + x)`; the part of the argument below `-1` is discarded.
    pub fn ln_1p(&self) -> Self {
        let m1 = Float::with_val(self.prec, -1);
        let lo = if self.lo < m1 { m1 } else { self.lo.clone() };
        Self::raw(lo, self.hi.clone(), self.prec).monotone(|x, r| x.ln_1p_round(r))
    }

    pub fn sqrt(&self) -> Self {
        self.clamp_min0().monotone(|x, r| x.sqrt_round(r))
    }

    /// `max(x, 0)` pointwise.
    pub fn clamp_min0(&self) -> Self {
        let z = Float::new(self.prec);
        let lo = if self.lo < 0 {
            z.clone()
        } else {
            self.lo.clone()
        };
        let hi = if self.hi < 0 { z } else { self.hi.clone() };
        Self::raw(lo, hi, self.prec)
    }

    /// Intersection with `[0, 1]`.
    pub fn clamp01(&self) -> Self {
        let one = Float::with_val(self.prec, 1);
        let c = self.clamp_min0();
        let lo = if c.lo > one { one.clone() } else { c.lo };
        let hi = if c.hi > one { one } else { c.hi };
        Self::raw(lo, hi, self.prec)
    }

    pub fn max(&self, o: &Self) -> Self {
        let p = self.p2(o);
        let lo = if self.lo >= o.lo { &self.lo } else { &o.lo };
        let hi = if self.hi >= o.hi { &self.hi } else { &o.hi };
        Self::raw(Float::with_val(p, lo), Float::with_val(p, hi), p)
    }

    pub fn min(&self, o: &Self) -> Self {
        let p = self.p2(o);
        let lo = if self.lo <= o.lo { &self.lo } else { &o.lo };
        let hi = if self.hi <= o.hi { &self.hi } else { &o.hi };
        Self::raw(Float::with_val(p, lo), Float::with_val(p, hi), p)
    }

    /// Smallest interval containing both.
    pub fn hull(&self, o: &Self) -> Self {
        let p = self.p2(o);
        let lo = if self.lo <= o.lo { &self.lo } else { &o.lo };
        let hi = if self.hi >= o.hi { &self.hi } else { &o.hi };
        Self::raw(Float::with_val(p, lo), Float::with_val(p, hi), p)
    }

    /// Intersection of two enclosures of the same quantity.
    pub fn intersect(&self, o: &Self) -> Result<Self> {
        let p = self.p2(o);
        let lo = if self.lo >= o.lo { &self.lo } else { &o.lo };
        let hi = if self.hi <= o.hi { &self.hi } else { &o.hi };
        if lo > hi {
            return Err(Error::Indeterminate(format!(
                "disjoint enclosures {self} and {o}"
            )));
        }
        Ok(Self::raw(Float::with_val(p, lo), Float::with_val(p, hi), p))
    }

    /// Adds `[-r, r]`.
    pub fn widen(&self, r: &Float) -> Self {
        Self::raw(
            rnd(self.prec, &self.lo - r, Round::Down),
            rnd(self.prec, &self.hi + r, Round::Up),
            self.prec,
        )
    }

    /// Adds `[0, r]`.
    pub fn widen_up(&self, r: &Float) -> Self {
        Self::raw(
            self.lo.clone(),
            rnd(self.prec, &self.hi + r, Round::Up),
            self.prec,
        )
    }

    /// Enclosures of `cos(2 pi r)` and `sin(2 pi r)` for rational `r`.
    pub fn cos_sin_2pi(r: &Rational, prec: u32) -> (Self, Self) {
        // reduce to [0, 1)
        let fl = Rational::from_integer(r.floor());
        let red = r - &fl;
        let theta = Self::pi(prec + 8).mul_rational(&red).mul_pow2(1);
        let mid = theta.mid();
        let rad = rnd(prec + 8, &theta.hi - &mid, Round::Up);
        let rad2 = rnd(prec + 8, &mid - &theta.lo, Round::Up);
        let rad = if rad > rad2 { rad } else { rad2 };
        let eval = |f: fn(&mut Float, Round) -> Ordering| {
            let mut lo = mid.clone();
            let mut hi = lo.clone();
            f(&mut lo, Round::Down);
            f(&mut hi, Round::Up);
            Self::raw(lo, hi, prec + 8).widen(&rad).with_prec(prec)
        };
        let c = eval(|x, r| x.cos_round(r));
        let s = eval(|x, r| x.sin_round(r));
        let one = Self::one(prec).hull(&Self::from_i64(-1, prec));
        (
            c.intersect(&one).unwrap_or(c),
            s.intersect(&one).unwrap_or(s),
        )
    }

    /// Finite sum in a fixed left-to-right order.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Self>, prec: u32) -> Self {
        items
            .into_iter()
            .fold(Self::zero(prec), |acc, x| acc.add(x))
    }

    fn raw(lo: Float, hi: Float, prec: u32) -> Self {
        CertifiedInterval {
            lo: fix_lo(lo),
            hi: fix_hi(hi),
            prec,
        }
    }

    /// Lower endpoint in decimal, rounded down, with `digits` significant digits.
    pub fn lo_decimal(&self, digits: usize) -> String {
        decimal(&self.lo, digits, Round::Down)
    }

    /// Upper endpoint in decimal, rounded up, with `digits` significant digits.
    pub fn hi_decimal(&self, digits: usize) -> String {
        decimal(&self.hi, digits, Round::Up)
    }

    /// Enough decimal digits to distinguish endpoints at this precision.
    pub fn exact_digits(&self) -> usize {
        (self.prec as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
    }
}

/// Scientific notation with `digits` significant digits and the given rounding.
pub fn decimal(x: &Float, digits: usize, round: Round) -> String {
    if x.is_zero() {
        return "0".into();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() {
            "-inf".into()
        } else {
            "inf".into()
        };
    }
    let s = x.to_string_radix_round(10, Some(digits), round);
    let (sign, body) = match s.strip_prefix('-') {
        Some(b) => ("-", b),
        None => ("", s.as_str()),
    };
    let (mant, exp) = match body.split_once('e') {
        Some((m, e)) => (m, e.parse::<i64>().unwrap_or(0)),
        None => (body, 0),
    };
    let int_len = mant.find('.').unwrap_or(mant.len()) as i64;
    let ds: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let lead = ds.len() - ds.trim_start_matches('0').len();
    let ds = &ds[lead..];
    let e = exp + int_len - 1 - lead as i64;
    let (first, rest) = ds.split_at(1);
    if rest.is_empty() {
        format!("{sign}{first}e{e}")
    } else {
        format!("{sign}{first}.{rest}e{e}")
    }
}

impl fmt::Display for CertifiedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo_decimal(12), self.hi_decimal(12))
    }
}

impl fmt::Debug for CertifiedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CertifiedInterval{self}@{}", self.prec)
    }
}

/// Re-evaluates `f` at doubling precision until it yields a decision.
pub fn with_precision_doubling<T>(
    prec: u32,
    what: &str,
    mut f: impl FnMut(u32) -> Result<Option<T>>,
) -> Result<T> {
    let mut p = prec;
    for _ in 0..=MAX_DOUBLINGS {
        if let Some(v) = f(p)? {
            return Ok(v);
        }
        p *= 2;
    }
    Err(Error::Indeterminate(format!(
        "{what} undecided at {} bits; raise --precision-bits",
        p / 2
    )))
}
