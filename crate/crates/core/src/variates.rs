//! Exact discrete and continuous variates used by the samplers.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

const LN_TWO_THIRDS: f64 = -0.405_465_108_108_164_4;

/// Uniform on `(0, 1]`.
#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Failures before the first success, success probability 1/3.
#[inline]
pub fn geometric_third<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    (open_unit(rng).ln() / LN_TWO_THIRDS).floor() as u64
}

/// Failures before the first success, success probability `p`, by inversion.
pub fn geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    debug_assert!(p > 0.0 && p <= 1.0);
    if p >= 1.0 {
        return 0;
    }
    (open_unit(rng).ln() / (1.0 - p).ln()).floor() as u64
}

/// Failures before the first success, success probability 1/2.
///
/// Trailing zeros of fair random bits are exactly geometric.
#[inline]
pub fn geometric_half<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    let mut acc = 0u64;
    loop {
        let word = rng.next_u64();
        if word != 0 {
            return acc + word.trailing_zeros() as u64;
        }
        acc += 64;
    }
}

/// Binomial(m, 1/2) as the popcount of `m` fair bits.
#[inline]
pub fn binomial_half<R: Rng + ?Sized>(m: u64, rng: &mut R) -> u64 {
    let mut left = m;
    let mut ones = 0u64;
    while left >= 64 {
        ones += rng.next_u64().count_ones() as u64;
        left -= 64;
    }
    if left > 0 {
        let mask = (1u64 << left) - 1;
        ones += (rng.next_u64() & mask).count_ones() as u64;
    }
    ones
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Gamma(shape, scale 1); shape 0 is the point mass at 0.
pub fn gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape <= 0.0 {
        return 0.0;
    }
    match Gamma::new(shape, 1.0) {
        Ok(g) => g.sample(rng),
        Err(_) => 0.0,
    }
}

/// Poisson(mean): inversion below mean 10, transformed rejection (PTRS,
/// Hörmann 1993) above.
pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 10.0 {
        let mut p = (-mean).exp();
        let mut cdf = p;
        let u: f64 = rng.gen();
        let mut k = 0u64;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p == 0.0 && cdf < u {
                // floating-point exhaustion; restart with a fresh uniform
                return poisson(mean, rng);
            }
        }
        return k;
    }
    ptrs(mean, rng)
}

fn ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -mean + k * loglam - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

/// NegativeBinomial(t, 1/2) failures as Poisson(Gamma(t, 1)).
pub fn negative_binomial_half<R: Rng + ?Sized>(t: u64, rng: &mut R) -> u64 {
    if t == 0 {
        return 0;
    }
    poisson(gamma(t as f64, rng), rng)
}
