//! Gumbel mixture `y ↦ E[exp(−α X' e^{−c y})]` driven by derivative-martingale samples.

use rand::Rng;
use serde::Serialize;

use super::EmpiricalDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureCdf {
    pub alpha: f64,
    pub c: f64,
    /// `ln X'_i` of the retained (positive) samples, sorted.
    #[serde(skip)]
    log_x: Vec<f64>,
    pub retained: usize,
    /// Fraction of input samples with `X' ≤ 0`, dropped before fitting.
    pub excluded_fraction: f64,
}

impl MixtureCdf {
    pub fn new(alpha: f64, c: f64, xprime: &[f64]) -> Result<Self> {
        if !(c > 0.0) || !(alpha >= 0.0) {
            return Err(Error::Domain(format!("mixture needs alpha >= 0 and c > 0, got ({alpha}, {c})")));
        }
        let mut log_x: Vec<f64> = xprime.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).collect();
        if log_x.is_empty() {
            return Err(Error::Data("no positive X' samples".into()));
        }
        log_x.sort_by(|a, b| a.total_cmp(b));
        let retained = log_x.len();
        Ok(MixtureCdf { alpha, c, log_x, retained, excluded_fraction: 1.0 - retained as f64 / xprime.len() as f64 })
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        MixtureCdf { alpha, ..self.clone() }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if self.alpha == 0.0 {
            return 1.0;
        }
        let shift = self.alpha.ln() - self.c * y;
        let s: f64 = self.log_x.iter().map(|l| (-(l + shift).exp()).exp()).sum();
        s / self.log_x.len() as f64
    }

    /// One draw: `(ln(α X'_I) + G) / c` with `I` uniform and `G` standard Gumbel.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let i = rng.gen_range(0..self.log_x.len());
        let u: f64 = 1.0 - rng.gen::<f64>();
        let g = -(-u.ln()).ln();
        (self.alpha.ln() + self.log_x[i] + g) / self.c
    }
}

/// `H(t) = mean_i exp(−e^{ln X'_i − t})` tabulated on a uniform grid, so that the
/// mixture CDF is `H(c y − ln α)` for every `α`.
struct GumbelTable {
    t0: f64,
    step: f64,
    values: Vec<f64>,
}

impl GumbelTable {
    const STEP: f64 = 0.005;
    const MAX_ATOMS: usize = 4096;

    fn new(log_x: &[f64]) -> Self {
        // block means of the sorted values keep the cost bounded for large samples
        let block = log_x.len().div_ceil(Self::MAX_ATOMS);
        let atoms: Vec<f64> = log_x.chunks(block).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let weights: Vec<f64> = log_x.chunks(block).map(|c| c.len() as f64 / log_x.len() as f64).collect();
        let t0 = atoms[0] - 6.0;
        let t1 = atoms[atoms.len() - 1] + 25.0;
        let count = ((t1 - t0) / Self::STEP).ceil() as usize + 1;
        let values = (0..count)
            .map(|i| {
                let t = t0 + i as f64 * Self::STEP;
                atoms.iter().zip(&weights).map(|(l, w)| w * (-(l - t).exp()).exp()).sum()
            })
            .collect();
        GumbelTable { t0, step: Self::STEP, values }
    }

    fn eval(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.step;
        if x <= 0.0 {
            return self.values[0];
        }
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return 1.0;
        }
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureFit {
    pub alpha: f64,
    pub ks: f64,
    pub c: f64,
    pub excluded_fraction: f64,
}

/// Chooses `α` minimizing the KS distance between `d` and the mixture with `c` fixed.
pub fn mixture_cdf_fit(d: &EmpiricalDistribution, xprime: &[f64], c: f64) -> Result<MixtureFit> {
    let base = MixtureCdf::new(1.0, c, xprime)?;
    let table = GumbelTable::new(&base.log_x);
    let ks = |la: f64| d.ks_against(|y| table.eval(c * y - la));
    // coarse scan of ln α, then golden-section refinement around the best cell
    let grid: Vec<f64> = (0..=60).map(|i| -9.0 + 0.3 * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&la| ks(la)).collect();
    let best = (0..grid.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty grid");
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (ks(x1), ks(x2));
    for _ in 0..40 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = ks(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = ks(x2);
        }
    }
    let (la, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let (la, f) = if vals[best] < f { (grid[best], vals[best]) } else { (la, f) };
    Ok(MixtureFit { alpha: la.exp(), ks: f, c, excluded_fraction: base.excluded_fraction })
}
