use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use rug::Integer;

use crate::error::{Error, Result};

/// Exact fraction in lowest terms with a positive denominator.
///
/// Text form is `p/q` or `p`, with an optional leading `-` and no whitespace.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(rug::Rational);

impl Rational {
    pub fn new(num: impl Into<Integer>, den: impl Into<Integer>) -> Result<Self> {
        let den = den.into();
        if den == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(Rational(rug::Rational::from((num.into(), den))))
    }

    pub fn from_integer(n: impl Into<Integer>) -> Self {
        Rational(rug::Rational::from(n.into()))
    }

    pub fn zero() -> Self {
        Rational(rug::Rational::new())
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    /// Exact value of a finite double.
    pub fn from_f64(x: f64) -> Result<Self> {
        rug::Rational::from_f64(x)
            .map(Rational)
            .ok_or_else(|| Error::Domain(format!("non-finite value {x}")))
    }

    pub fn numer(&self) -> &Integer {
        self.0.numer()
    }

    pub fn denom(&self) -> &Integer {
        self.0.denom()
    }

    pub fn as_rug(&self) -> &rug::Rational {
        &self.0
    }

    pub fn into_rug(self) -> rug::Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.cmp0() == Ordering::Equal
    }

    pub fn is_positive(&self) -> bool {
        self.0.cmp0() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.0.cmp0() == Ordering::Less
    }

    pub fn is_integer(&self) -> bool {
        *self.0.denom() == 1
    }

    pub fn floor(&self) -> Integer {
        self.0.clone().floor().into_numer_denom().0
    }

    pub fn ceil(&self) -> Integer {
        self.0.clone().ceil().into_numer_denom().0
    }

    /// Nearest integer, ties away from zero.
    pub fn round(&self) -> Integer {
        self.0.clone().round().into_numer_denom().0
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.clone().abs())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain("reciprocal of zero".into()));
        }
        Ok(Rational(self.0.clone().recip()))
    }

    pub fn square(&self) -> Self {
        Rational(self.0.clone().square())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed rational '{s}'"));
        let body = s.strip_prefix('-').unwrap_or(s);
        let (p, q) = match body.split_once('/') {
            Some((p, q)) => (p, Some(q)),
            None => (body, None),
        };
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits(p) || !q.is_none_or(digits) {
            return Err(bad());
        }
        let mut num: Integer = p.parse().map_err(|_| bad())?;
        if s.starts_with('-') {
            num = -num;
        }
        let den: Integer = match q {
            Some(q) => q.parse().map_err(|_| bad())?,
            None => Integer::from(1),
        };
        if den == 0 {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        Rational::new(num, den)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl From<Integer> for Rational {
    fn from(n: Integer) -> Self {
        Self::from_integer(n)
    }
}

impl From<rug::Rational> for Rational {
    fn from(r: rug::Rational) -> Self {
        Rational(r)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational(rug::Rational::from((&self.0).$m(&rhs.0)))
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0.$m(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(rug::Rational::from(-&self.0))
    }
}

/// Least positive integer `t` with `t^2 > sigma2`, i.e. `floor(sqrt(sigma2)) + 1`.
pub fn isqrt_floor_plus_one(sigma2: &Rational) -> Result<Integer> {
    if !sigma2.is_positive() {
        return Err(Error::Domain(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    // floor(sqrt(x)) == floor(sqrt(floor(x))) for x >= 0
    Ok(sigma2.floor().sqrt() + 1u32)
}
