//! Privacy loss distribution of multivariate discrete Gaussian noise, computed
//! modulo `m` grid steps by an interval FFT over the characteristic function.

use std::collections::HashMap;

use rug::{Float, Integer};

use crate::dist::{c_direct, c_dual, dgauss_normalizer};
use crate::error::{Error, Result};
use crate::numeric::{
    gauss_sum_z, gauss_tail_majorant, sum_series, CertifiedInterval as CI, Rational, SeriesSpec,
};

use super::MultiQuerySpec;

/// Largest FFT length `build_pld` will use.
pub const MAX_MODULUS: usize = 1 << 22;

/// Distribution of the privacy loss `Z` reduced modulo `m * grid_step` onto
/// the window `{(1 - m/2) step, ..., (m/2) step}`.
#[derive(Clone, Debug)]
pub struct PrivacyLossDistribution {
    grid_step: Rational,
    m: usize,
    probs: Vec<CI>,
    trunc_upper: CI,
    trunc_lower: CI,
}

impl PrivacyLossDistribution {
    pub fn grid_step(&self) -> &Rational {
        &self.grid_step
    }

    pub fn modulus(&self) -> usize {
        self.m
    }

    /// `probs()[i]` is `Pr[Z_m = atom(i)]`.
    pub fn probs(&self) -> &[CI] {
        &self.probs
    }

    pub fn atom(&self, i: usize) -> Rational {
        let n = i as i64 + 1 - (self.m / 2) as i64;
        &Rational::from_integer(n) * &self.grid_step
    }

    /// Bound on `Pr[Z > Z_m]`, mass wrapped down from above the window.
    pub fn trunc_upper(&self) -> &CI {
        &self.trunc_upper
    }

    /// Bound on `Pr[Z < Z_m]`, mass wrapped up from below the window.
    pub fn trunc_lower(&self) -> &CI {
        &self.trunc_lower
    }
}

#[derive(Clone)]
struct Cx {
    re: CI,
    im: CI,
}

impl Cx {
    fn add(&self, o: &Cx) -> Cx {
        Cx {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    fn sub(&self, o: &Cx) -> Cx {
        Cx {
            re: self.re.sub(&o.re),
            im: self.im.sub(&o.im),
        }
    }

    fn mul(&self, o: &Cx) -> Cx {
        Cx {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }
}

/// `sum_k x_k e^{-2 pi i k r / m}` for all `r`, radix 2, in place.
fn dft(x: &mut [Cx], prec: u32) {
    let m = x.len();
    debug_assert!(m.is_power_of_two());
    let bits = m.trailing_zeros();
    for i in 0..m {
        let j = if bits == 0 {
            0
        } else {
            i.reverse_bits() >> (usize::BITS - bits)
        };
        if i < j {
            x.swap(i, j);
        }
    }
    let twiddle: Vec<Cx> = (0..m / 2)
        .map(|j| {
            let (c, s) = CI::cos_sin_2pi(&Rational::new(j as i64, m as i64).expect("m > 0"), prec);
            Cx { re: c, im: s.neg() }
        })
        .collect();
    let mut len = 2;
    while len <= m {
        let stride = m / len;
        for start in (0..m).step_by(len) {
            for j in 0..len / 2 {
                let w = &twiddle[j * stride];
                let u = x[start + j].clone();
                let v = x[start + j + len / 2].mul(w);
                x[start + j] = u.add(&v);
                x[start + j + len / 2] = u.sub(&v);
            }
        }
        len *= 2;
    }
}

/// `E[e^{2 pi i x Y}]` for `Y ~ N_Z(0, sigma2)` from the defining sum
/// `sum_y cos(2 pi x y) e^{-y^2/2 sigma^2} / S`.
pub fn dgauss_cf_direct(sigma2: &Rational, x: &Rational, prec: u32) -> Result<CI> {
    let c = c_direct(sigma2, prec);
    let c_lo = c.lo().clone();
    let term = |i: i64| {
        if i == 0 {
            return CI::one(prec);
        }
        let (cs, _) = CI::cos_sin_2pi(&(x * &Rational::from_integer(i)), prec);
        c.mul_i64(i * i).neg().exp().mul(&cs).mul_pow2(1)
    };
    let tail = |b: u64| {
        let t = gauss_tail_majorant(&c_lo, &Rational::zero(), 0, &Integer::from(b + 1), prec);
        Float::with_val(prec, t * 2u32)
    };
    let mut spec = SeriesSpec::new(&term, &tail, false);
    spec.cutoff_hint = crate::numeric::gaussian_cutoff(sigma2.to_f64(), 2f64.powi(-(prec as i32)));
    let target = Float::with_val(prec, Float::i_exp(1, -(prec as i32) - 10));
    let num = sum_series(&spec, &target, prec)?;
    let s = dgauss_normalizer(sigma2, prec)?.value;
    num.div(&s)
        .intersect(&CI::from_i64(-1, prec).hull(&CI::one(prec)))
}

/// The same characteristic function by Poisson summation:
/// `sum_u e^{-2 pi^2 sigma^2 (u - x)^2} / sum_u e^{-2 pi^2 sigma^2 u^2}`.
pub fn dgauss_cf_poisson(sigma2: &Rational, x: &Rational, prec: u32) -> Result<CI> {
    let c = c_dual(sigma2, prec);
    let num = gauss_sum_z(&c, x, prec)?;
    let den = gauss_sum_z(&c, &Rational::zero(), prec)?;
    Ok(num.div(&den).clamp01())
}

fn dgauss_cf(sigma2: &Rational, x: &Rational, prec: u32) -> Result<CI> {
    // the dual series converges faster once 2 pi^2 sigma^2 > 1/(2 sigma^2)
    if sigma2.to_f64() * 2.0 * std::f64::consts::PI > 1.0 {
        dgauss_cf_poisson(sigma2, x, prec)
    } else {
        dgauss_cf_direct(sigma2, x, prec)
    }
}

fn rational_gcd(values: &[Rational]) -> Rational {
    let mut num = Integer::new();
    let mut den = Integer::from(1);
    for v in values {
        num = num.gcd(v.numer());
        den = den.lcm(v.denom());
    }
    Rational::new(num, den).expect("lcm of positive denominators is positive")
}

/// Builds the privacy loss distribution of `Z = sum_j (mu_j^2 + 2 mu_j Y_j)/(2 sigma_j^2)`.
///
/// The grid step is half the gcd of `{1/sigma_j^2 : mu_j != 0}`, which holds
/// every atom of `Z`. The modulus is the next power of two above
/// `(sqrt(8 ln(1/err) R) + R)/step` with `R = sum_j mu_j^2/sigma_j^2`, so the
/// wrapped mass above the window is at most `err`.
pub fn build_pld(
    spec: &MultiQuerySpec,
    err_budget: f64,
    prec: u32,
) -> Result<PrivacyLossDistribution> {
    if !(err_budget > 0.0 && err_budget < 1.0) {
        return Err(Error::Domain(format!(
            "error budget must lie in (0, 1), got {err_budget}"
        )));
    }
    let active: Vec<(Rational, Integer)> = spec
        .sigma2s()
        .iter()
        .zip(spec.mu())
        .filter(|(_, m)| **m != 0)
        .map(|(s, m)| (s.clone(), m.clone()))
        .collect();
    if active.is_empty() {
        // Z = 0 almost surely
        return Ok(PrivacyLossDistribution {
            grid_step: Rational::one(),
            m: 2,
            probs: vec![CI::one(prec), CI::zero(prec)],
            trunc_upper: CI::zero(prec),
            trunc_lower: CI::zero(prec),
        });
    }
    let inv: Vec<Rational> = active
        .iter()
        .map(|(s, _)| s.recip())
        .collect::<Result<_>>()?;
    let gamma = rational_gcd(&inv);
    let step = &gamma / &Rational::from_integer(2);
    let r = spec.weighted_norm2();
    let rf = r.to_f64();
    let need = ((8.0 * (1.0 / err_budget).ln() * rf).sqrt() + rf) / step.to_f64();
    if !need.is_finite() || need > MAX_MODULUS as f64 {
        return Err(Error::Grid(format!(
            "grid step {step} needs a modulus above {MAX_MODULUS}; the privacy loss would have to be bucketed"
        )));
    }
    let mut m = (need.ceil() as usize).max(2).next_power_of_two();
    while Rational::from_integer(m as i64) * step.clone() <= r {
        m *= 2;
    }
    if m > MAX_MODULUS {
        return Err(Error::Grid(format!("modulus {m} exceeds {MAX_MODULUS}")));
    }

    // Z/step = C + sum_j a_j Y_j with C = sum v_j mu_j^2, a_j = 2 v_j mu_j, v_j = (1/sigma_j^2)/gamma
    let mut c_off = Integer::new();
    let mut coeffs = Vec::with_capacity(active.len());
    for ((s2, mu), w) in active.iter().zip(&inv) {
        let v = (w / &gamma).numer().clone();
        c_off += Integer::from(&v * mu) * mu;
        coeffs.push((s2.clone(), Integer::from(&v * mu) * 2u32));
    }

    let mm = Integer::from(m);
    let mut cache: HashMap<Rational, Vec<Option<CI>>> = HashMap::new();
    let mut values = Vec::with_capacity(m);
    for k in 0..m {
        let mut prod = CI::one(prec);
        for (s2, a) in &coeffs {
            let mut rr = Integer::from(a * k as u64)
                .modulo(&mm)
                .to_usize()
                .expect("below m");
            if rr > m / 2 {
                rr = m - rr;
            }
            let slot = cache
                .entry(s2.clone())
                .or_insert_with(|| vec![None; m / 2 + 1]);
            if slot[rr].is_none() {
                slot[rr] = Some(dgauss_cf(s2, &Rational::new(rr as i64, m as i64)?, prec)?);
            }
            prod = prod.mul(slot[rr].as_ref().expect("filled"));
        }
        values.push(Cx {
            re: prod,
            im: CI::zero(prec),
        });
    }
    dft(&mut values, prec);

    let inv_m = CI::from_i64(m as i64, prec).recip();
    let c_mod = c_off.modulo(&mm).to_i64().expect("below m");
    let probs = (0..m)
        .map(|i| {
            let n = i as i64 + 1 - (m / 2) as i64;
            let idx = (n - c_mod).rem_euclid(m as i64) as usize;
            values[idx].re.mul(&inv_m).clamp01()
        })
        .collect();

    let width = Rational::from_integer(m as i64) * step.clone();
    let eight_r = &r * &Rational::from_integer(8);
    let up = (&width - &r).square() / eight_r.clone();
    let down = (&width + &r).square() / eight_r;
    Ok(PrivacyLossDistribution {
        grid_step: step,
        m,
        probs,
        trunc_upper: CI::point_rational(&up, prec).neg().exp(),
        trunc_lower: CI::point_rational(&down, prec).neg().exp(),
    })
}

/// `delta` at `eps` from a privacy loss distribution:
/// `[E_m - trunc_lower, E_m + trunc_upper]` with `E_m = E[max(0, 1 - e^{eps - Z_m})]`.
pub fn adp_from_pld(pld: &PrivacyLossDistribution, eps: &Rational, prec: u32) -> CI {
    let mut e_m = CI::zero(prec);
    for (i, p) in pld.probs.iter().enumerate() {
        let z = pld.atom(i);
        if z <= *eps {
            continue;
        }
        let gain = CI::point_rational(&(eps - &z), prec).exp_m1().neg();
        e_m = e_m.add(&gain.mul(p));
    }
    let lo = e_m.sub(&pld.trunc_lower).lo().clone();
    let hi = e_m.add(&pld.trunc_upper).hi().clone();
    CI::from_bounds(lo, hi).clamp01()
}
