//! Empirical distributions, goodness-of-fit tests, tail and mixture fits.

pub mod centering;
pub mod ecdf;
pub mod mixture;
pub mod shift;
pub mod tail;

pub use ecdf::{kolmogorov_q, ks_two_sample, EmpiricalDistribution, KsResult, Provenance};
pub use mixture::{mixture_cdf_fit, MixtureCdf, MixtureFit};
pub use shift::{cross_n_stability, shift_test, ShiftReport, StabilityRow};
pub use tail::{tail_fit, ExactTail, TailFit};
