//! Barrier events on normalized occupations `η_v(j) = √(2 T^s_{v,j})`.
//!
//! With `n' = n − ℓ` and `φ̄_n(j) = ρ_n (n − j)`, the excess `η̂_v(j) = η_v(j) − φ̄_n(j)`
//! is tested against three barrier families on `j ∈ [0, n']`:
//!
//! * E: `η̂_u(j) > 0` for all `j`, `η̂_u(n') ∈ I_ℓ = √ℓ [1/r_ℓ, r_ℓ]` with `r_ℓ = √(ln ℓ)`,
//!   and some leaf below `u` has count 0;
//! * F: `η̂_u(j) + ψ_ℓ(j) > 0` for all `j`, and some leaf below `u` has count 0;
//! * G: `η̂_u(j) ≤ −ψ_ℓ(j)` for some `u ∈ V_{n'}` and `j ≤ n'`,
//!
//! where `ψ_ℓ(j) = h_ℓ + min(j, n' − j)^δ` and `h_ℓ = ½ ln ℓ`.

use rand::Rng;
use serde::Serialize;

use super::{sample_geodesic, CountTree, TStarSampler};
use crate::error::{Error, Result};
use crate::mc::Proportion;
use crate::rng::{run_chunked, stream};
use crate::stats::centering::{m_n, rho_n, roots_for, C_STAR};
use crate::variates::poisson;

pub const DEFAULT_DELTA: f64 = 0.1;

/// Parameters `(n, ℓ, z, δ)` of the barrier events and their derived curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierParams {
    pub n: u32,
    pub ell: u32,
    pub z: f64,
    pub delta: f64,
}

impl BarrierParams {
    pub fn new(n: u32, ell: u32, z: f64) -> Result<Self> {
        Self::with_delta(n, ell, z, DEFAULT_DELTA)
    }

    pub fn with_delta(n: u32, ell: u32, z: f64, delta: f64) -> Result<Self> {
        if ell < 2 || ell >= n {
            return Err(Error::Domain(format!("need 2 <= ell < n, got ell = {ell}, n = {n}")));
        }
        if !(delta > 0.0 && delta < 1.0 / 6.0) {
            return Err(Error::Config(format!("delta = {delta} outside (0, 1/6)")));
        }
        if !(m_n(n) + z > 0.0) {
            return Err(Error::Domain(format!("z = {z} gives a non-positive start")));
        }
        Ok(BarrierParams { n, ell, z, delta })
    }

    pub fn n_prime(&self) -> u32 {
        self.n - self.ell
    }

    /// Integer number of root excursions, `⌊s_{n,z}⌋`.
    pub fn roots(&self) -> u64 {
        roots_for(self.n, self.z)
    }

    pub fn phi_bar(&self, j: u32) -> f64 {
        rho_n(self.n) * (self.n - j) as f64
    }

    pub fn h_ell(&self) -> f64 {
        0.5 * (self.ell as f64).ln()
    }

    /// `I_ℓ` as a closed interval.
    pub fn window(&self) -> (f64, f64) {
        let r = (self.ell as f64).ln().sqrt();
        let root = (self.ell as f64).sqrt();
        (root / r, root * r)
    }

    /// `ψ_ℓ(j) = h_ℓ + min(j, n' − j)^δ`.
    pub fn psi(&self, j: u32) -> f64 {
        let np = self.n_prime();
        let jk = j.min(np - j) as f64;
        self.h_ell() + jk.powf(self.delta)
    }
}

/// `η̂_v(j)` for `j = 0..=|v|` read off a count tree sampled at `s_{n,z}`.
pub fn eta_hat(tree: &CountTree, v: crate::tree::VertexId) -> Result<Vec<f64>> {
    if v.is_root() || v.level() > tree.depth() as i32 {
        return Err(Error::Domain(format!("{v} is not a vertex of T_{}", tree.depth())));
    }
    let n = tree.depth();
    let rho = rho_n(n);
    let mut out = Vec::with_capacity(v.level() as usize + 1);
    for j in 0..=v.level() {
        let a = crate::tree::ancestor(v, j)?;
        let eta = (2.0 * tree.count(a) as f64).sqrt();
        out.push(eta - rho * (n - j as u32) as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SubtreeCondition {
    None,
    /// Some leaf of the depth-ℓ subtree below `u` has count 0.
    NotCovered,
    Covered,
}

/// Number of root excursions, fixed or Poissonized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StartCount {
    Fixed(u64),
    Poisson(f64),
}

/// A per-vertex event along the geodesic to one vertex `u ∈ V_{horizon}`.
///
/// The event requires `η(j) − centre[j] > lower[j]` for `j = 0..=horizon`,
/// `η(horizon) − centre[horizon] ∈ [window.0, window.1]`, and the subtree
/// condition on the depth-`subtree_depth` tree hanging below `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicEvent {
    pub horizon: u32,
    pub subtree_depth: u32,
    pub centre: Vec<f64>,
    pub lower: Vec<f64>,
    pub window: (f64, f64),
    pub subtree: SubtreeCondition,
    pub start: StartCount,
}

impl GeodesicEvent {
    pub fn unconstrained(horizon: u32, subtree_depth: u32, start: StartCount) -> Self {
        let len = horizon as usize + 1;
        GeodesicEvent {
            horizon,
            subtree_depth,
            centre: vec![0.0; len],
            lower: vec![f64::NEG_INFINITY; len],
            window: (f64::NEG_INFINITY, f64::INFINITY),
            subtree: SubtreeCondition::None,
            start,
        }
    }

    fn barrier(p: &BarrierParams) -> Self {
        let np = p.n_prime();
        let mut event = Self::unconstrained(np, p.ell, StartCount::Fixed(p.roots()));
        event.centre = (0..=np).map(|j| p.phi_bar(j)).collect();
        event.subtree = SubtreeCondition::NotCovered;
        event
    }

    /// `E_{n,ℓ}(u)`.
    pub fn e_event(p: &BarrierParams) -> Self {
        let mut event = Self::barrier(p);
        event.lower = vec![0.0; event.centre.len()];
        event.window = p.window();
        event
    }

    /// `F_{n,ℓ}(u)`.
    pub fn f_event(p: &BarrierParams) -> Self {
        let mut event = Self::barrier(p);
        event.lower = (0..=p.n_prime()).map(|j| -p.psi(j)).collect();
        event
    }

    /// Event inside `γ̃_ℓ(y)`: Poisson((c*ℓ + y)²/2) excursions, `η(0) − c*ℓ ∈ I_ℓ`,
    /// and a depth-ℓ tree left uncovered.
    pub fn gamma_tilde(ell: u32, y: f64) -> Result<Self> {
        if ell < 2 {
            return Err(Error::Domain("gamma_tilde needs ell >= 2".into()));
        }
        let centre = C_STAR * ell as f64;
        let lambda = (centre + y).max(0.0).powi(2) / 2.0;
        let mut event = Self::unconstrained(0, ell, StartCount::Poisson(lambda));
        event.centre = vec![centre];
        let r = (ell as f64).ln().sqrt();
        let root = (ell as f64).sqrt();
        event.window = (root / r, root * r);
        event.subtree = SubtreeCondition::NotCovered;
        Ok(event)
    }

    fn validate(&self) -> Result<()> {
        let len = self.horizon as usize + 1;
        if self.centre.len() != len || self.lower.len() != len {
            return Err(Error::Domain("barrier length does not match the horizon".into()));
        }
        if self.window.0 > self.window.1 {
            return Err(Error::Domain("empty endpoint window".into()));
        }
        Ok(())
    }

    /// Evaluates the event on one independent realization.
    pub fn occurs<R: Rng + ?Sized>(&self, tstar: &mut TStarSampler, rng: &mut R) -> Result<bool> {
        let roots = match self.start {
            StartCount::Fixed(s) => s,
            StartCount::Poisson(lambda) => poisson(lambda, rng),
        };
        let path = sample_geodesic(self.horizon, 0, roots, rng);
        for (j, &t) in path.iter().enumerate() {
            if !((2.0 * t as f64).sqrt() - self.centre[j] > self.lower[j]) {
                return Ok(false);
            }
        }
        let last = self.horizon as usize;
        let end = (2.0 * path[last] as f64).sqrt() - self.centre[last];
        if end < self.window.0 || end > self.window.1 {
            return Ok(false);
        }
        Ok(match self.subtree {
            SubtreeCondition::None => true,
            SubtreeCondition::NotCovered => !tstar.covers_within(path[last], rng)?,
            SubtreeCondition::Covered => tstar.covers_within(path[last], rng)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventEstimate {
    pub probability: Proportion,
    pub replicas: u64,
}

/// Monte Carlo probability of a per-vertex event with a Wilson 95% interval.
pub fn estimate_event(event: &GeodesicEvent, replicas: u64, seed: u64, workers: usize) -> Result<EventEstimate> {
    event.validate()?;
    if replicas == 0 {
        return Err(Error::Domain("need at least one replica".into()));
    }
    let hits = run_chunked(
        workers,
        replicas,
        1000,
        || TStarSampler::new(event.subtree_depth),
        |sampler, r| event.occurs(sampler, &mut stream(seed, "event", event.horizon as u64, r)),
    )?
    .into_iter()
    .filter(|&hit| hit)
    .count() as u64;
    Ok(EventEstimate { probability: Proportion::wilson(hits, replicas), replicas })
}

/// Λ, Γ and the related indicators of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BarrierCounts {
    pub lambda: u64,
    pub gamma: u64,
    /// Some leaf of `T_n` has count 0.
    pub eta_sharp_zero: bool,
    pub g_event: bool,
}

/// Evaluates `Λ_{n,ℓ}`, `Γ_{n,ℓ}`, `{η♯_n = 0}` and `G_{n,ℓ}` on a full count tree.
pub fn count_lambda_gamma(tree: &CountTree, p: &BarrierParams) -> Result<BarrierCounts> {
    if tree.depth() != p.n {
        return Err(Error::Domain(format!("tree depth {} does not match n = {}", tree.depth(), p.n)));
    }
    let np = p.n_prime();
    let (lo, hi) = p.window();
    // flags per vertex: bit 0 = E-barrier held so far, bit 1 = F-barrier held so far
    let mut flags = vec![0u8; 1usize << (np + 1)];
    let mut g_event = false;
    for j in 0..=np {
        let phi = p.phi_bar(j);
        let psi = p.psi(j);
        let first = 1usize << j;
        for (i, &t) in tree.level(j).iter().enumerate() {
            let h = first + i;
            let eta_hat = (2.0 * t as f64).sqrt() - phi;
            let inherited = if j == 0 { 0b11 } else { flags[h / 2] };
            let mut f = 0u8;
            if eta_hat > 0.0 {
                f |= 0b01;
            }
            if eta_hat + psi > 0.0 {
                f |= 0b10;
            } else {
                g_event = true;
            }
            flags[h] = inherited & f;
        }
    }
    let leaves = tree.leaves();
    let width = 1usize << p.ell;
    let (mut lambda, mut gamma) = (0u64, 0u64);
    let first = 1usize << np;
    for (i, block) in leaves.chunks(width).enumerate() {
        if !block.contains(&0) {
            continue;
        }
        let f = flags[first + i];
        if f & 0b10 != 0 {
            gamma += 1;
        }
        if f & 0b01 != 0 {
            let end = (2.0 * tree.level(np)[i] as f64).sqrt() - p.phi_bar(np);
            if end >= lo && end <= hi {
                lambda += 1;
            }
        }
    }
    Ok(BarrierCounts { lambda, gamma, eta_sharp_zero: leaves.contains(&0), g_event })
}
