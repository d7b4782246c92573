//! Exact rationals, outward-rounded intervals and certified series summation.

mod interval;
mod rational;
mod series;

pub use interval::{
    decimal, with_precision_doubling, CertifiedInterval, DEFAULT_PRECISION, MAX_DOUBLINGS,
};
pub use rational::{isqrt_floor_plus_one, Rational};
pub use series::{
    gauss_sum_from, gauss_sum_z, gauss_tail_majorant, gaussian_cutoff, round_up, sum_series,
    SeriesSpec, DEFAULT_MAX_TERMS,
};
