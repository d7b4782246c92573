//! Privacy accounting for discrete Gaussian and discrete Laplace noise.
//!
//! Every real-valued output is a [`CertifiedInterval`]; the upper endpoint is
//! the value that is safe to publish as a privacy guarantee.

mod adp;
mod compare;
mod convert;
mod laplace;
mod pld;
mod renyi;

use rug::Integer;

use crate::error::{Error, Result};
use crate::numeric::{CertifiedInterval, Rational};

pub use adp::{analytic_adp_upper_bounds, continuous_gauss_adp, exact_adp_dgauss, AnalyticBounds};
pub use compare::{
    compare_fixed_privacy, compare_fixed_utility, eps_for_delta, max_laplace_eps0,
    min_gauss_sigma2, FixedPrivacyRow, FixedUtilityRow,
};
pub use convert::{
    cdp_to_adp, cdp_to_adp_at, g_prime, gaussian_tail_cdp_bound, rdp_standard_bound, rdp_to_adp,
    standard_cdp_bound, AlphaSearch, CdpToAdp,
};
pub use laplace::{dlap_eps_for_variance, dlap_pure_dp, kov_optimal_composition};
pub use pld::{
    adp_from_pld, build_pld, dgauss_cf_direct, dgauss_cf_poisson, PrivacyLossDistribution,
    MAX_MODULUS,
};
pub use renyi::{
    cdp_of_dgauss, cdp_of_multivariate, renyi_divergence_dgauss, renyi_divergence_exact,
};

/// Sensitivity and number of composed queries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySpec {
    sensitivity: Rational,
    k: u64,
}

impl QuerySpec {
    pub fn new(sensitivity: Rational, k: u64) -> Result<Self> {
        if !sensitivity.is_positive() {
            return Err(Error::Domain(format!(
                "sensitivity must be positive, got {sensitivity}"
            )));
        }
        if k == 0 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        Ok(QuerySpec { sensitivity, k })
    }

    pub fn sensitivity(&self) -> &Rational {
        &self.sensitivity
    }

    pub fn k(&self) -> u64 {
        self.k
    }
}

/// `(alpha, tau)`-Renyi differential privacy.
#[derive(Clone, Debug)]
pub struct RenyiBound {
    pub alpha: Rational,
    pub tau: CertifiedInterval,
}

impl RenyiBound {
    pub fn new(alpha: Rational, tau: CertifiedInterval) -> Result<Self> {
        if alpha <= Rational::one() {
            return Err(Error::Domain(format!("alpha must exceed 1, got {alpha}")));
        }
        Ok(RenyiBound { alpha, tau })
    }
}

/// `rho`-concentrated differential privacy. `rho` is exact for every
/// mechanism in this crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdpBound {
    pub rho: Rational,
}

impl CdpBound {
    pub fn new(rho: Rational) -> Result<Self> {
        if rho.is_negative() {
            return Err(Error::Domain(format!("rho must be nonnegative, got {rho}")));
        }
        Ok(CdpBound { rho })
    }
}

/// An `(eps, delta)` guarantee.
#[derive(Clone, Debug)]
pub struct AdpPoint {
    pub eps: Rational,
    pub delta: CertifiedInterval,
}

/// Independent discrete Gaussian noise on each coordinate of an integer query,
/// with `mu` the worst-case shift between neighbouring inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiQuerySpec {
    sigma2s: Vec<Rational>,
    mu: Vec<Integer>,
}

impl MultiQuerySpec {
    pub fn new(sigma2s: Vec<Rational>, mu: Vec<Integer>) -> Result<Self> {
        if sigma2s.len() != mu.len() {
            return Err(Error::Domain(format!(
                "sigma2s has {} entries but mu has {}",
                sigma2s.len(),
                mu.len()
            )));
        }
        if sigma2s.is_empty() {
            return Err(Error::Domain("at least one coordinate is required".into()));
        }
        if let Some(s) = sigma2s.iter().find(|s| !s.is_positive()) {
            return Err(Error::Domain(format!("sigma2 must be positive, got {s}")));
        }
        Ok(MultiQuerySpec { sigma2s, mu })
    }

    pub fn sigma2s(&self) -> &[Rational] {
        &self.sigma2s
    }

    pub fn mu(&self) -> &[Integer] {
        &self.mu
    }

    /// `sum_j mu_j^2 / sigma_j^2`.
    pub fn weighted_norm2(&self) -> Rational {
        self.sigma2s
            .iter()
            .zip(&self.mu)
            .fold(Rational::zero(), |acc, (s, m)| {
                acc + Rational::from_integer(Integer::from(m * m)) / s.clone()
            })
    }
}
