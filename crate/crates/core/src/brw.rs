//! Gaussian branching random walk on `T_k` and its derivative martingale.
//!
//! Edges below level 0 carry i.i.d. standard normal weights and `g_u` is the sum
//! along the geodesic from the level-0 vertex, so `g = 0` there and
//! `Cov(g_u, g_{u'}) = |u ∧ u'|`. With `c* = √(2 ln 2)`,
//!
//! ```text
//! X_k  = Σ_{u ∈ V_k} (c* k + g_u) e^{−c*(c* k + g_u)}
//! X̃_k  = Σ_{u ∈ V_k} e^{−c*(c* k + g_u)}
//! X'_k = X_k evaluated at g'_u = g_u − ḡ_k,  ḡ_k = 2^{−k} Σ_{u ∈ V_k} g_u
//! ```

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mc::{compensated_sum, correlation, CompensatedSum, SampleStats};
use crate::stats::centering::C_STAR;
use crate::variates::standard_normal;

/// Deepest level materialized by [`sample_brw`].
pub const MAX_BRW_DEPTH: u32 = 24;

/// Pairwise sum, stable for `2^k` terms.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrwSample {
    depth: u32,
    /// `g_u`, heap-indexed from the level-0 vertex (slot 0 unused).
    g: Vec<f64>,
    /// `ḡ_j` for `j = 0..=k`.
    pub gbar: Vec<f64>,
    pub x: f64,
    pub x_tilde: f64,
    /// `X'_k` evaluated directly from the recentred field.
    pub x_prime: f64,
}

impl BrwSample {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn g(&self, level: u32, index: u64) -> f64 {
        self.g[(1usize << level) + index as usize]
    }

    pub fn level(&self, j: u32) -> &[f64] {
        let lo = 1usize << j;
        &self.g[lo..2 * lo]
    }

    pub fn gbar_k(&self) -> f64 {
        self.gbar[self.depth as usize]
    }

    /// `(X_k − ḡ_k X̃_k) e^{c* ḡ_k}`.
    pub fn x_prime_from_identity(&self) -> f64 {
        let gb = self.gbar_k();
        (self.x - gb * self.x_tilde) * (C_STAR * gb).exp()
    }
}

/// `(X, X̃)` of a level given its values and depth.
pub fn martingale_sums(level: &[f64], k: u32) -> (f64, f64) {
    let shift = C_STAR * k as f64;
    let mut x = CompensatedSum::default();
    let mut xt = CompensatedSum::default();
    for &g in level {
        let a = shift + g;
        let w = (-C_STAR * a).exp();
        x.add(a * w);
        xt.add(w);
    }
    (x.value(), xt.value())
}

pub fn sample_brw<R: Rng + ?Sized>(k: u32, rng: &mut R) -> Result<BrwSample> {
    if k > MAX_BRW_DEPTH {
        return Err(Error::Resource(format!("BRW depth {k} exceeds {MAX_BRW_DEPTH}")));
    }
    let size = 1usize << (k + 1);
    let mut g = vec![0.0; size];
    for h in 2..size {
        g[h] = g[h / 2] + standard_normal(rng);
    }
    let gbar: Vec<f64> = (0..=k)
        .map(|j| {
            let lo = 1usize << j;
            pairwise_sum(&g[lo..2 * lo]) / lo as f64
        })
        .collect();
    let level = &g[1usize << k..];
    let (x, x_tilde) = martingale_sums(level, k);
    let gb = gbar[k as usize];
    let recentred: Vec<f64> = level.iter().map(|v| v - gb).collect();
    let (x_prime, _) = martingale_sums(&recentred, k);
    Ok(BrwSample { depth: k, g, gbar, x, x_tilde, x_prime })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub k: u32,
    pub outer: u64,
    pub inner: u64,
    /// Mean over outer samples of `mean(X_{k+1} continuations) − X_k`.
    pub mean_deviation: f64,
    pub std_err: f64,
    pub z: f64,
}

/// Nested test of `E[X_{k+1} | F_k] = X_k`.
pub fn martingale_check<R: Rng + ?Sized>(k: u32, outer: u64, inner: u64, rng: &mut R) -> Result<MartingaleReport> {
    if k == 0 || outer < 2 || inner == 0 {
        return Err(Error::Domain("need k >= 1, outer >= 2, inner >= 1".into()));
    }
    let shift = C_STAR * (k + 1) as f64;
    let mut devs = Vec::with_capacity(outer as usize);
    for _ in 0..outer {
        let s = sample_brw(k, rng)?;
        let level = s.level(k);
        let mut acc = CompensatedSum::default();
        for _ in 0..inner {
            let mut x1 = 0.0;
            for &g in level {
                for _ in 0..2 {
                    let a = shift + g + standard_normal(rng);
                    x1 += a * (-C_STAR * a).exp();
                }
            }
            acc.add(x1);
        }
        devs.push(acc.value() / inner as f64 - s.x);
    }
    let st = SampleStats::from_slice(&devs);
    Ok(MartingaleReport { k, outer, inner, mean_deviation: st.mean, std_err: st.std_err(), z: st.mean / st.std_err() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XPrimeStream {
    pub k: u32,
    /// `(X'_k, ḡ_k)` pairs.
    pub samples: Vec<(f64, f64)>,
    /// Sample correlation of `X'_k` and `ḡ_k` (NaN below 3 samples).
    pub correlation: f64,
    /// `4 / √count`, the tolerance used for the independence diagnostic.
    pub correlation_tolerance: f64,
    /// Fraction of `X'_k ≤ 0`.
    pub nonpositive_fraction: f64,
}

pub fn sample_xprime_stream<R: Rng + ?Sized>(k: u32, count: usize, rng: &mut R) -> Result<XPrimeStream> {
    let samples =
        (0..count).map(|_| sample_brw(k, rng).map(|s| (s.x_prime, s.gbar_k()))).collect::<Result<Vec<_>>>()?;
    Ok(summarize_xprime(k, samples))
}

pub fn summarize_xprime(k: u32, samples: Vec<(f64, f64)>) -> XPrimeStream {
    let count = samples.len();
    let (correlation, nonpositive_fraction) = if count >= 3 {
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let gs: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let neg = xs.iter().filter(|&&x| x <= 0.0).count() as f64 / count as f64;
        (correlation(&xs, &gs), neg)
    } else {
        (f64::NAN, f64::NAN)
    };
    XPrimeStream {
        k,
        samples,
        correlation,
        correlation_tolerance: 4.0 / (count.max(1) as f64).sqrt(),
        nonpositive_fraction,
    }
}

/// Mean of `X_k` over a sample of fields; its expectation is 0 for every `k`.
pub fn mean_x<R: Rng + ?Sized>(k: u32, count: usize, rng: &mut R) -> Result<SampleStats> {
    let xs = (0..count).map(|_| sample_brw(k, rng).map(|s| s.x)).collect::<Result<Vec<_>>>()?;
    Ok(SampleStats::from_slice(&xs))
}

/// Sum of `X̃` terms, exposed for diagnostics on a single level.
pub fn x_tilde(level: &[f64], k: u32) -> f64 {
    compensated_sum(level.iter().map(|&g| (-C_STAR * (C_STAR * k as f64 + g)).exp()))
}
