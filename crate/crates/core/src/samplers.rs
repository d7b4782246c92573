//! Exact samplers for Bernoulli(exp(-gamma)), the discrete Laplace and the
//! discrete Gaussian, using only rational arithmetic and a [`BitSource`].

use rug::ops::DivRounding;
use rug::Integer;

use crate::error::{Error, Result};
use crate::numeric::{isqrt_floor_plus_one, Rational};
use crate::randcore::{bernoulli_ratio, uniform_below_unchecked, BitSource};

/// Discrete Laplace with scale `t/s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DLapParams {
    s: Integer,
    t: Integer,
}

impl DLapParams {
    pub fn new(s: impl Into<Integer>, t: impl Into<Integer>) -> Result<Self> {
        let (s, t) = (s.into(), t.into());
        if s < 1 || t < 1 {
            return Err(Error::Domain(format!(
                "laplace scale needs s, t >= 1, got t={t}, s={s}"
            )));
        }
        Ok(DLapParams { s, t })
    }

    /// Scale given as a positive rational `t/s`.
    pub fn from_scale(scale: &Rational) -> Result<Self> {
        if !scale.is_positive() {
            return Err(Error::Domain(format!(
                "laplace scale must be positive, got {scale}"
            )));
        }
        Self::new(scale.denom().clone(), scale.numer().clone())
    }

    pub fn s(&self) -> &Integer {
        &self.s
    }

    pub fn t(&self) -> &Integer {
        &self.t
    }

    pub fn scale(&self) -> Rational {
        Rational::new(self.t.clone(), self.s.clone()).expect("s >= 1")
    }
}

/// Discrete Gaussian `N_Z(0, sigma2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DGaussParams {
    sigma2: Rational,
    t: Integer,
}

impl DGaussParams {
    pub fn new(sigma2: Rational) -> Result<Self> {
        let t = isqrt_floor_plus_one(&sigma2)?;
        Ok(DGaussParams { sigma2, t })
    }

    pub fn sigma2(&self) -> &Rational {
        &self.sigma2
    }
}

/// Discrete Gaussian on `mu + alpha Z` with parameter `sigma2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledDGaussParams {
    alpha: Rational,
    mu: Rational,
    inner: DGaussParams,
}

impl ScaledDGaussParams {
    pub fn new(alpha: Rational, mu: Rational, sigma2: Rational) -> Result<Self> {
        if !alpha.is_positive() {
            return Err(Error::Domain(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(&mu / &alpha).is_integer() {
            return Err(Error::Domain(format!(
                "mu={mu} is not on the grid {alpha}Z"
            )));
        }
        let inner = DGaussParams::new(&sigma2 / &alpha.square())?;
        Ok(ScaledDGaussParams { alpha, mu, inner })
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn mu(&self) -> &Rational {
        &self.mu
    }
}

/// Per-call statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SampleStats {
    /// Iterations of the outermost rejection loop.
    pub outer_iterations: u64,
    pub bits_consumed: u64,
    /// The iteration cap was hit and the sample was replaced by 0.
    pub truncated: bool,
}

/// Options for the rejection loops.
#[derive(Clone, Copy, Debug, Default)]
pub struct SamplerOptions {
    /// Stop after this many outer iterations and return 0 with `truncated`
    /// set. Truncation changes the output law: a capped mechanism outputs 0
    /// with extra probability at most (1-p)^cap, where p is the per-iteration
    /// success probability, and that mass must be added to delta.
    pub max_outer_iterations: Option<u64>,
}

fn bern_exp_le1<S: BitSource + ?Sized>(src: &mut S, num: &Integer, den: &Integer) -> bool {
    // gamma = num/den in [0, 1]; K counts until the first failed Bernoulli(gamma/K)
    let mut k = Integer::from(1);
    loop {
        let d = Integer::from(den * &k);
        if !bernoulli_ratio(src, num, &d) {
            break;
        }
        k += 1u32;
    }
    k.is_odd()
}

fn bern_exp_ratio<S: BitSource + ?Sized>(src: &mut S, num: &Integer, den: &Integer) -> bool {
    if *num <= *den {
        return bern_exp_le1(src, num, den);
    }
    let (whole, rem) = <(Integer, Integer)>::from(num.div_rem_floor_ref(den));
    let one = Integer::from(1);
    let mut i = Integer::new();
    while i < whole {
        if !bern_exp_le1(src, &one, &one) {
            return false;
        }
        i += 1u32;
    }
    bern_exp_le1(src, &rem, den)
}

/// Returns true with probability exactly `exp(-gamma)`.
pub fn sample_bernoulli_exp<S: BitSource + ?Sized>(src: &mut S, gamma: &Rational) -> Result<bool> {
    if gamma.is_negative() {
        return Err(Error::Domain(format!("gamma must be >= 0, got {gamma}")));
    }
    Ok(bern_exp_ratio(src, gamma.numer(), gamma.denom()))
}

/// `V` with `Pr[V = k] = (1 - e^-1) e^-k`.
pub fn sample_geometric_unit<S: BitSource + ?Sized>(src: &mut S) -> u64 {
    let one = Integer::from(1);
    let mut v = 0u64;
    while bern_exp_le1(src, &one, &one) {
        v += 1;
    }
    v
}

/// Discrete Laplace `Lap_Z(t/s)`.
pub fn sample_dlaplace<S: BitSource + ?Sized>(
    src: &mut S,
    params: &DLapParams,
) -> (Integer, SampleStats) {
    sample_dlaplace_with_options(src, params, &SamplerOptions::default())
}

pub fn sample_dlaplace_with_options<S: BitSource + ?Sized>(
    src: &mut S,
    params: &DLapParams,
    opts: &SamplerOptions,
) -> (Integer, SampleStats) {
    let start = src.bits_consumed();
    let mut stats = SampleStats::default();
    let value = loop {
        if opts
            .max_outer_iterations
            .is_some_and(|cap| stats.outer_iterations >= cap)
        {
            stats.truncated = true;
            break Integer::new();
        }
        stats.outer_iterations += 1;
        if let Some(v) = dlaplace_attempt(src, &params.s, &params.t) {
            break v;
        }
    };
    stats.bits_consumed = src.bits_consumed() - start;
    (value, stats)
}

fn dlaplace_attempt<S: BitSource + ?Sized>(
    src: &mut S,
    s: &Integer,
    t: &Integer,
) -> Option<Integer> {
    let u = uniform_below_unchecked(src, t);
    if !bern_exp_le1(src, &u, t) {
        return None;
    }
    let v = sample_geometric_unit(src);
    let x = Integer::from(t * v) + u;
    let y = x.div_floor(s);
    let b = src.next_bit();
    if b && y == 0 {
        return None;
    }
    Some(if b { -y } else { y })
}

/// Discrete Gaussian `N_Z(0, sigma2)`.
pub fn sample_dgauss<S: BitSource + ?Sized>(
    src: &mut S,
    params: &DGaussParams,
) -> (Integer, SampleStats) {
    sample_dgauss_with_options(src, params, &SamplerOptions::default())
}

pub fn sample_dgauss_with_options<S: BitSource + ?Sized>(
    src: &mut S,
    params: &DGaussParams,
    opts: &SamplerOptions,
) -> (Integer, SampleStats) {
    let start = src.bits_consumed();
    let one = Integer::from(1);
    let t = &params.t;
    let t_q = Rational::from_integer(t.clone());
    let shift = &params.sigma2 / &t_q;
    let two_s2 = &params.sigma2 * &Rational::from_integer(2);
    let mut stats = SampleStats::default();
    let value = loop {
        if opts
            .max_outer_iterations
            .is_some_and(|cap| stats.outer_iterations >= cap)
        {
            stats.truncated = true;
            break Integer::new();
        }
        stats.outer_iterations += 1;
        let y = loop {
            if let Some(y) = dlaplace_attempt(src, &one, t) {
                break y;
            }
        };
        // exact exponent (|Y| - sigma2/t)^2 / (2 sigma2)
        let d = Rational::from_integer(y.clone().abs()) - shift.clone();
        let gamma = &d.square() / &two_s2;
        if bern_exp_ratio(src, gamma.numer(), gamma.denom()) {
            break y;
        }
    };
    stats.bits_consumed = src.bits_consumed() - start;
    (value, stats)
}

/// `alpha X + mu` with `X ~ N_Z(0, sigma2/alpha^2)`, supported on `mu + alpha Z`.
pub fn sample_dgauss_scaled<S: BitSource + ?Sized>(
    src: &mut S,
    params: &ScaledDGaussParams,
) -> (Rational, SampleStats) {
    let (x, stats) = sample_dgauss(src, &params.inner);
    (
        &(&Rational::from_integer(x) * &params.alpha) + &params.mu,
        stats,
    )
}
