//! Brownian barrier probabilities, the 0-dimensional Bessel process, the
//! Gamma–Poisson chain linking excursion counts to it, and the constant `α_ℓ`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::excursion::{estimate_event, GeodesicEvent, TStarSampler};
use crate::mc::{SampleStats, Z95};
use crate::rng::{run_chunked, run_replicas, stream};
use crate::stats::centering::C_STAR;
use crate::variates::{gamma, poisson, standard_normal};

/// Straight barrier from `(t1, m1)` to `(t2, m2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierLine {
    pub t1: f64,
    pub t2: f64,
    pub m1: f64,
    pub m2: f64,
}

impl BarrierLine {
    pub fn new(t1: f64, t2: f64, m1: f64, m2: f64) -> Result<Self> {
        if !(t2 > t1) {
            return Err(Error::Domain(format!("barrier needs t2 > t1, got [{t1}, {t2}]")));
        }
        Ok(BarrierLine { t1, t2, m1, m2 })
    }

    pub fn at(&self, t: f64) -> f64 {
        self.m1 + (self.m2 - self.m1) * (t - self.t1) / (self.t2 - self.t1)
    }
}

/// Probability that a Brownian bridge from `(t1, x)` to `(t2, w)` stays above the line.
pub fn bridge_barrier_prob(x: f64, w: f64, line: &BarrierLine) -> f64 {
    let a = (x - line.m1).max(0.0);
    let b = (w - line.m2).max(0.0);
    -(-2.0 * a * b / (line.t2 - line.t1)).exp_m1()
}

/// Per-step survival factor `1 − exp(−2 (w0 − φ0)(w1 − φ1) / dt)` for a
/// Brownian path observed at the two ends of a step of length `dt`.
pub fn reflection_factor(w0: f64, w1: f64, phi0: f64, phi1: f64, dt: f64) -> f64 {
    let a = (w0 - phi0).max(0.0);
    let b = (w1 - phi1).max(0.0);
    -(-2.0 * a * b / dt).exp_m1()
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub replicas: u64,
}

impl McEstimate {
    fn from_values(xs: &[f64]) -> Self {
        let s = SampleStats::from_slice(xs);
        McEstimate { estimate: s.mean, std_err: s.std_err(), replicas: xs.len() as u64 }
    }

    /// `|a − b|` in units of the combined standard error.
    pub fn z_against(&self, other: &McEstimate) -> f64 {
        let se = (self.std_err.powi(2) + other.std_err.powi(2)).sqrt();
        if se == 0.0 {
            if self.estimate == other.estimate {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - other.estimate).abs() / se
        }
    }

    pub fn z_against_value(&self, v: f64) -> f64 {
        if self.std_err == 0.0 {
            if self.estimate == v {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - v).abs() / self.std_err
        }
    }
}

/// Bridge barrier probability from simulated bridges on a grid of mesh `dt`,
/// each grid step weighted by its exact crossing correction.
pub fn bridge_barrier_mc<R: Rng + ?Sized>(
    x: f64,
    w: f64,
    line: &BarrierLine,
    dt: f64,
    paths: u64,
    rng: &mut R,
) -> McEstimate {
    let span = line.t2 - line.t1;
    let steps = (span / dt).round().max(1.0) as usize;
    let h = span / steps as f64;
    let values: Vec<f64> = (0..paths)
        .map(|_| {
            let mut b = x;
            let mut weight = 1.0;
            for i in 0..steps {
                let t = line.t1 + i as f64 * h;
                let remaining = line.t2 - t;
                let next = if i + 1 == steps {
                    w
                } else {
                    let mean = b + (w - b) * h / remaining;
                    let var = h * (remaining - h) / remaining;
                    mean + var.sqrt() * standard_normal(rng)
                };
                weight *= reflection_factor(b, next, line.at(t), line.at(t + h), h);
                if weight == 0.0 {
                    break;
                }
                b = next;
            }
            weight
        })
        .collect();
    McEstimate::from_values(&values)
}

/// A bridge start, end and barrier for [`bridge_barrier_prob`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeCase {
    pub x: f64,
    pub w: f64,
    pub line: BarrierLine,
}

/// Five configurations spanning flat, rising, falling and offset barriers,
/// with probabilities between about 0.39 and 0.9.
pub fn bridge_presets() -> Vec<BridgeCase> {
    let case = |x, w, t1, t2, m1, m2| BridgeCase { x, w, line: BarrierLine { t1, t2, m1, m2 } };
    vec![
        case(1.0, 1.5, 0.0, 2.0, 0.0, 0.5),
        case(0.5, 0.5, 0.0, 1.0, 0.0, 0.0),
        case(2.0, 1.0, 0.0, 2.0, 0.5, -0.5),
        case(0.3, 2.0, 1.0, 2.0, 0.0, 1.0),
        case(1.0, 1.2, 0.0, 3.0, -0.5, 0.5),
    ]
}

/// Exact BESQ(0) transition over time `s` from `z`: `Gamma(N, 2s)` with `N ~ Poisson(z / 2s)`.
pub fn besq0_step<R: Rng + ?Sized>(z: f64, s: f64, rng: &mut R) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let n = poisson(z / (2.0 * s), rng);
    if n == 0 {
        0.0
    } else {
        2.0 * s * gamma(n as f64, rng)
    }
}

/// `P(Z_{t+s} > 0 | Z_t = z) = 1 − e^{−z / 2s}`.
pub fn besq0_survival(z: f64, s: f64) -> f64 {
    -(-z / (2.0 * s)).exp_m1()
}

/// 0-dimensional Bessel process from `y0` at integer times `0..=horizon`.
pub fn sample_bessel0<R: Rng + ?Sized>(y0: f64, horizon: u32, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(horizon as usize + 1);
    let mut z = y0.max(0.0).powi(2);
    out.push(z.sqrt());
    for _ in 0..horizon {
        z = besq0_step(z, 1.0, rng);
        out.push(z.sqrt());
    }
    out
}

/// Functionals of a path observed at integer times `1..=horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    One,
    /// `1{Y_H > a}`
    EndAbove(f64),
    /// `exp(−Y_H / scale)`
    ExpEnd(f64),
    /// `1{Y_j > start − slope·j for every integer j ≥ 1}`
    SkeletonAbove {
        start: f64,
        slope: f64,
    },
}

impl TestFunction {
    pub fn eval(&self, skeleton: &[f64]) -> f64 {
        let end = *skeleton.last().unwrap_or(&0.0);
        match *self {
            TestFunction::One => 1.0,
            TestFunction::EndAbove(a) => (end > a) as u8 as f64,
            TestFunction::ExpEnd(scale) => (-end / scale).exp(),
            TestFunction::SkeletonAbove { start, slope } => {
                skeleton.iter().enumerate().all(|(i, &y)| y > start - slope * (i as f64 + 1.0)) as u8 as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirsanovConfig {
    pub x: f64,
    pub horizon: u32,
    pub test: TestFunction,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GirsanovReport {
    pub config: GirsanovConfig,
    /// `E^Y_x[Z; Y_H > 0]` from the exact Bessel skeleton.
    pub bessel: McEstimate,
    /// `E^W_x[Z √(x/W_H) e^{−(3/8)∫W^{−2}}; inf W > 0]`.
    pub brownian: McEstimate,
    pub z: f64,
}

/// Floor for `W` inside `∫ W^{−2}`.
const W_FLOOR: f64 = 1e-6;

fn brownian_weighted<R: Rng + ?Sized>(cfg: &GirsanovConfig, rng: &mut R) -> f64 {
    let per_unit = (1.0 / cfg.dt).round().max(1.0) as usize;
    let h = 1.0 / per_unit as f64;
    let sd = h.sqrt();
    let mut w = cfg.x;
    let mut survive = 1.0;
    let mut integral = 0.0;
    let mut skeleton = Vec::with_capacity(cfg.horizon as usize);
    for _ in 0..cfg.horizon {
        for _ in 0..per_unit {
            let next = w + sd * standard_normal(rng);
            survive *= reflection_factor(w, next, 0.0, 0.0, h);
            if survive == 0.0 {
                return 0.0;
            }
            let (a, b) = (w.max(W_FLOOR), next.max(W_FLOOR));
            integral += 0.5 * h * (a.powi(-2) + b.powi(-2));
            w = next;
        }
        skeleton.push(w);
    }
    survive * cfg.test.eval(&skeleton) * (cfg.x / w).sqrt() * (-0.375 * integral).exp()
}

/// Both sides of the Girsanov identity between the 0-Bessel process and Brownian motion.
///
/// Test functions only look at integer times, so the Bessel side needs no bridge corrections.
pub fn girsanov_check(cfg: &GirsanovConfig, replicas: u64, seed: u64, workers: usize) -> Result<GirsanovReport> {
    if !(cfg.x > 0.0) {
        return Err(Error::Domain(format!("start x = {} must be positive", cfg.x)));
    }
    if cfg.horizon == 0 || replicas < 2 {
        return Err(Error::Domain("need horizon >= 1 and replicas >= 2".into()));
    }
    let pairs = run_replicas(workers, 0..replicas, |r| {
        let mut rng = stream(seed, "girsanov", cfg.horizon as u64, r);
        let path = sample_bessel0(cfg.x, cfg.horizon, &mut rng);
        let y = if path[cfg.horizon as usize] > 0.0 { cfg.test.eval(&path[1..]) } else { 0.0 };
        (y, brownian_weighted(cfg, &mut rng))
    })?;
    let ys: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ws: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let bessel = McEstimate::from_values(&ys);
    let brownian = McEstimate::from_values(&ws);
    Ok(GirsanovReport { config: *cfg, bessel, brownian, z: bessel.z_against(&brownian) })
}

/// Preset configurations for the Girsanov comparison.
pub fn girsanov_presets() -> Vec<GirsanovConfig> {
    let dt = 1e-3;
    vec![
        GirsanovConfig { x: 3.0, horizon: 2, test: TestFunction::One, dt },
        GirsanovConfig { x: 50.0, horizon: 4, test: TestFunction::One, dt },
        GirsanovConfig { x: 4.0, horizon: 3, test: TestFunction::EndAbove(3.0), dt },
        GirsanovConfig { x: 5.0, horizon: 4, test: TestFunction::ExpEnd(4.0), dt },
        GirsanovConfig { x: 6.0, horizon: 6, test: TestFunction::SkeletonAbove { start: 6.0, slope: 0.5 }, dt },
    ]
}

/// State of the alternating Gamma–Poisson chain: the count `η(j)²/2` and the
/// Bessel value `Y_j` that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainState {
    pub level: u32,
    pub count: u64,
    pub y: f64,
}

impl ChainState {
    pub fn start(s: u64) -> Self {
        ChainState { level: 0, count: s, y: (2.0 * s as f64).sqrt() }
    }

    pub fn eta(&self) -> f64 {
        (2.0 * self.count as f64).sqrt()
    }
}

/// `Y²/2 ~ Gamma(count, 1)`, then `count' ~ Poisson(Y²/2)`.
pub fn chain_step<R: Rng + ?Sized>(state: ChainState, rng: &mut R) -> ChainState {
    if state.count == 0 {
        return ChainState { level: state.level + 1, count: 0, y: 0.0 };
    }
    let half_sq = gamma(state.count as f64, rng);
    ChainState { level: state.level + 1, count: poisson(half_sq, rng), y: (2.0 * half_sq).sqrt() }
}

/// `U_s = √(2 L) − √(2s)` with `L ~ Gamma(s, 1)`.
pub fn sample_u<R: Rng + ?Sized>(s: f64, rng: &mut R) -> f64 {
    (2.0 * gamma(s, rng)).sqrt() - (2.0 * s).sqrt()
}

fn ln_poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -lambda + k as f64 * lambda.ln() - ln_gamma(k as f64 + 1.0)
}

/// `g̃(w) = E[g(√(2ξ))]`, `ξ ~ Poisson(w²/2)`, summed over the Poisson mass to 1e-15.
pub fn g_tilde<F: Fn(f64) -> f64>(g: F, w: f64) -> f64 {
    let lambda = w * w / 2.0;
    let width = 12.0 * lambda.sqrt() + 40.0;
    let lo = (lambda - width).max(0.0).floor() as u64;
    let hi = (lambda + width).ceil() as u64;
    let mut acc = 0.0;
    for k in lo..=hi {
        let p = ln_poisson_pmf(k, lambda).exp();
        if p > 0.0 {
            acc += p * g((2.0 * k as f64).sqrt());
        }
    }
    acc
}

/// One row of a `γ̃_ℓ` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaTildeRow {
    pub ell: u32,
    pub y: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: u64,
}

/// Monte Carlo `γ̃_ℓ(y)` on a grid of `y` values.
pub fn gamma_tilde_grid(ell: u32, ys: &[f64], replicas: u64, seed: u64, workers: usize) -> Result<Vec<GammaTildeRow>> {
    ys.iter()
        .enumerate()
        .map(|(i, &y)| {
            let event = GeodesicEvent::gamma_tilde(ell, y)?;
            let est = estimate_event(&event, replicas, seed.wrapping_add(i as u64), workers)?;
            Ok(GammaTildeRow {
                ell,
                y,
                estimate: est.probability.estimate,
                stderr: est.probability.std_err(),
                replicas,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaEstimate {
    pub ell: u32,
    pub alpha: f64,
    pub std_err: f64,
    /// Share of the integral from `y` outside `[√ℓ/(2r_ℓ), 2 r_ℓ √ℓ]`.
    pub outside_fraction: f64,
    /// Relative gap between the full grid and the every-other-point grid.
    pub quadrature_error: f64,
}

/// `α_ℓ = (1/√(πℓ)) ∫₀^∞ y e^{c* y} γ̃_ℓ(y) dy` by the trapezoid rule on a grid.
///
/// Fails with an accuracy error when halving the grid moves the result by more
/// than 10%, or when the integrand is not negligible at the last grid point.
pub fn alpha_ell(ell: u32, rows: &[GammaTildeRow]) -> Result<AlphaEstimate> {
    if rows.len() < 5 {
        return Err(Error::Accuracy("need at least 5 grid points for alpha".into()));
    }
    if rows.windows(2).any(|w| !(w[1].y > w[0].y)) {
        return Err(Error::Domain("grid must be strictly increasing in y".into()));
    }
    let norm = 1.0 / (std::f64::consts::PI * ell as f64).sqrt();
    let f: Vec<f64> = rows.iter().map(|r| norm * r.y * (C_STAR * r.y).exp() * r.estimate).collect();
    let se: Vec<f64> = rows.iter().map(|r| norm * r.y * (C_STAR * r.y).exp() * r.stderr).collect();
    let weights = trapezoid_weights(rows.iter().map(|r| r.y).collect::<Vec<_>>().as_slice());
    let total: f64 = f.iter().zip(&weights).map(|(a, w)| a * w).sum();
    let var: f64 = se.iter().zip(&weights).map(|(s, w)| (s * w).powi(2)).sum();
    if total == 0.0 {
        return Ok(AlphaEstimate {
            ell,
            alpha: 0.0,
            std_err: var.sqrt(),
            outside_fraction: 0.0,
            quadrature_error: 0.0,
        });
    }
    let coarse_y: Vec<f64> = rows.iter().step_by(2).map(|r| r.y).collect();
    let coarse_f: Vec<f64> = f.iter().step_by(2).copied().collect();
    let coarse: f64 = coarse_f.iter().zip(trapezoid_weights(&coarse_y)).map(|(a, w)| a * w).sum();
    let quadrature_error = (coarse - total).abs() / total.abs();
    let peak = f.iter().cloned().fold(0.0, f64::max);
    if quadrature_error > 0.10 || f[f.len() - 1] > 0.01 * peak {
        return Err(Error::Accuracy(format!(
            "alpha_{ell} quadrature not resolved (relative change {quadrature_error:.3}); refine or extend the grid"
        )));
    }
    let r = (ell as f64).ln().sqrt();
    let root = (ell as f64).sqrt();
    let (lo, hi) = (root / (2.0 * r), 2.0 * r * root);
    let outside: f64 = rows
        .iter()
        .zip(f.iter().zip(&weights))
        .filter(|(row, _)| row.y < lo || row.y > hi)
        .map(|(_, (a, w))| a * w)
        .sum();
    Ok(AlphaEstimate { ell, alpha: total, std_err: var.sqrt(), outside_fraction: outside / total, quadrature_error })
}

fn trapezoid_weights(ys: &[f64]) -> Vec<f64> {
    let n = ys.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { ys[i] - ys[i - 1] } else { 0.0 };
            let right = if i + 1 < n { ys[i + 1] - ys[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Weight `w(ξ) = (1/√(πℓ)) 1{√(2ξ) − c*ℓ ∈ I_ℓ} ∫₀^∞ y e^{c* y} P(Poisson((c*ℓ+y)²/2) = ξ) dy`.
fn alpha_weight(ell: u32, xi: u64) -> f64 {
    let centre = C_STAR * ell as f64;
    let r = (ell as f64).ln().sqrt();
    let root = (ell as f64).sqrt();
    let eta = (2.0 * xi as f64).sqrt() - centre;
    if eta < root / r || eta > root * r {
        return 0.0;
    }
    // Poisson mass concentrates near y = √(2ξ) − c*ℓ with width O(1)
    let (a, b) = ((eta - 12.0).max(0.0), eta + 12.0);
    let steps = 2400;
    let h = (b - a) / steps as f64;
    let f = |y: f64| {
        let lambda = (centre + y).powi(2) / 2.0;
        y * (C_STAR * y).exp() * ln_poisson_pmf(xi, lambda).exp()
    };
    let mut acc = f(a) + f(b);
    for i in 1..steps {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0 / (std::f64::consts::PI * ell as f64).sqrt()
}

/// `α_ℓ` as `E[h(t*_ℓ)]` with `h(t) = Σ_{ξ < t} w(ξ)`, from i.i.d. draws of `t*_ℓ`.
///
/// Exchanging the `y`-integral with the Poisson sum turns `α_ℓ` into an
/// expectation over `t*_ℓ` alone, so the standard error is exact.
pub fn alpha_ell_from_tstar(ell: u32, tstar: &[u64]) -> Result<AlphaEstimate> {
    if ell < 2 || tstar.len() < 2 {
        return Err(Error::Domain("need ell >= 2 and at least two t* draws".into()));
    }
    let max_t = *tstar.iter().max().expect("non-empty");
    let mut h = Vec::with_capacity(max_t as usize + 1);
    let mut acc = 0.0;
    for xi in 0..=max_t {
        h.push(acc);
        acc += alpha_weight(ell, xi);
    }
    let values: Vec<f64> = tstar.iter().map(|&t| h[t as usize]).collect();
    let s = SampleStats::from_slice(&values);
    Ok(AlphaEstimate { ell, alpha: s.mean, std_err: s.std_err(), outside_fraction: f64::NAN, quadrature_error: 0.0 })
}

/// `t*_ℓ` draws for [`alpha_ell_from_tstar`].
pub fn tstar_draws(ell: u32, count: u64, seed: u64, workers: usize) -> Result<Vec<u64>> {
    run_chunked(
        workers,
        count,
        500,
        || TStarSampler::new(ell),
        |sampler, r| sampler.sample(&mut stream(seed, "tstar", ell as u64, r)),
    )
}

/// Two-sided 95% half-width of an estimate.
pub fn half_width(e: &AlphaEstimate) -> f64 {
    Z95 * e.std_err
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::Proportion;

    #[test]
    fn bridge_formula_cases() {
        let line = BarrierLine::new(0.0, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(bridge_barrier_prob(-0.5, 1.0, &line), 0.0);
        assert!((bridge_barrier_prob(1.0, 1.0, &line) - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!(BarrierLine::new(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn bridge_formula_monotone() {
        let line = |m1: f64, m2: f64| BarrierLine::new(0.0, 1.5, m1, m2).unwrap();
        let base = bridge_barrier_prob(1.0, 2.0, &line(0.2, 0.3));
        assert!(bridge_barrier_prob(1.0, 2.0, &line(0.4, 0.3)) < base);
        assert!(bridge_barrier_prob(1.0, 2.0, &line(0.2, 0.5)) < base);
        assert!(bridge_barrier_prob(1.3, 2.0, &line(0.2, 0.3)) > base);
        assert!(bridge_barrier_prob(1.0, 2.4, &line(0.2, 0.3)) > base);
    }

    #[test]
    fn bridge_mc_small() {
        let line = BarrierLine::new(0.0, 2.0, 0.0, 0.5).unwrap();
        let mut rng = stream(1, "bridge", 0, 0);
        let est = bridge_barrier_mc(1.0, 1.5, &line, 1e-2, 20_000, &mut rng);
        let exact = bridge_barrier_prob(1.0, 1.5, &line);
        assert!(est.z_against_value(exact) < 4.0, "{est:?} vs {exact}");
    }

    #[test]
    fn besq_absorbing_and_survival() {
        let mut rng = stream(2, "besq", 0, 0);
        assert!(sample_bessel0(0.0, 5, &mut rng).iter().all(|&y| y == 0.0));
        let z = 1.3;
        let n = 200_000u64;
        let alive = (0..n).filter(|_| besq0_step(z, 1.0, &mut rng) > 0.0).count() as u64;
        let p = Proportion::wilson(alive, n);
        assert!((p.estimate - besq0_survival(z, 1.0)).abs() < 4.0 * p.std_err());
        let xs: Vec<f64> = (0..n).map(|_| besq0_step(z, 0.7, &mut rng)).collect();
        assert!(SampleStats::from_slice(&xs).z_score(z) < 4.0);
    }

    #[test]
    fn chain_absorbs_and_is_critical() {
        let mut rng = stream(3, "chain", 0, 0);
        let dead = ChainState { level: 2, count: 0, y: 0.0 };
        assert_eq!(chain_step(dead, &mut rng).count, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| chain_step(ChainState::start(7), &mut rng).count as f64).collect();
        assert!(SampleStats::from_slice(&xs).z_score(7.0) < 4.0);
    }

    #[test]
    fn u_limit_moments() {
        let mut rng = stream(4, "u", 0, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_u(1e6, &mut rng)).collect();
        let s = SampleStats::from_slice(&xs);
        assert!((s.variance / 0.5 - 1.0).abs() < 0.05);
        let e: Vec<f64> = xs.iter().map(|u| (-C_STAR * u).exp()).collect();
        assert!(SampleStats::from_slice(&e).z_score(2f64.sqrt()) < 4.0);
    }

    #[test]
    fn g_tilde_constant_and_monotone() {
        for w in [0.0, 0.5, 3.0, 20.0] {
            assert!((g_tilde(|_| 2.5, w) - 2.5).abs() < 1e-12);
        }
        let g = |x: f64| x.min(4.0);
        let grid: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let vals: Vec<f64> = grid.iter().map(|&w| g_tilde(g, w)).collect();
        assert!(vals.windows(2).all(|p| p[1] >= p[0] - 1e-12));
        // E[2ξ] = w²
        assert!((g_tilde(|x| x * x, 3.0) - 9.0).abs() < 1e-9);
    }

    #[test]
    fn alpha_of_zero_is_zero() {
        let rows: Vec<GammaTildeRow> = (0..9)
            .map(|i| GammaTildeRow { ell: 6, y: i as f64 * 0.5, estimate: 0.0, stderr: 0.0, replicas: 10 })
            .collect();
        assert_eq!(alpha_ell(6, &rows).unwrap().alpha, 0.0);
    }

    #[test]
    fn alpha_grid_rejects_coarse_grids() {
        let rows: Vec<GammaTildeRow> = (0..5)
            .map(|i| GammaTildeRow { ell: 6, y: i as f64 * 2.0, estimate: 0.5, stderr: 0.0, replicas: 10 })
            .collect();
        assert!(matches!(alpha_ell(6, &rows), Err(Error::Accuracy(_))));
    }
}
