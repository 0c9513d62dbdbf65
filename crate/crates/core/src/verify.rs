//! Named check suites with machine-readable verdicts.
//!
//! Every suite draws its own samples from per-replica streams, so a report
//! depends only on the configuration and the seed, never on the worker count.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bessel::{
    alpha_ell_from_tstar, besq0_step, besq0_survival, bridge_barrier_mc, bridge_barrier_prob, bridge_presets,
    chain_step, girsanov_check, girsanov_presets, tstar_draws, ChainState,
};
use crate::brw::{martingale_check, sample_brw};
use crate::error::{Error, Result};
use crate::excursion::{
    count_lambda_gamma, offspring_sum_direct, sample_counts, single_excursion_covariance, var_r_single, BarrierCounts,
    BarrierParams, SingleExcursionSampler, TStarSampler,
};
use crate::mc::{chi_square_two_sample, covariance, Proportion, SampleStats, Z95};
use crate::rng::{run_chunked, run_replicas, stream};
use crate::srw::SrwEngine;
use crate::stats::centering::{m_n, C_STAR};
use crate::stats::{cross_n_stability, mixture_cdf_fit, shift_test, tail_fit, EmpiricalDistribution, Provenance};
use crate::tree::{lca, VertexId};

/// Six significant decimals without trailing zeros, scientific below 1e-4.
fn short(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        return format!("{x:e}");
    }
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// One comparison of an observed quantity with its target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
    /// 95% interval for `observed`, when it is a Monte Carlo estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<[f64; 2]>,
    pub rule: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, observed: f64, expected: f64, rule: String, passed: bool) -> Self {
        Check { name: name.into(), observed, expected, std_err: None, ci: None, rule, passed, note: None }
    }

    /// `|observed − expected| ≤ k·se`.
    pub fn sigma(name: impl Into<String>, observed: f64, expected: f64, se: f64, k: f64) -> Self {
        let passed = if se > 0.0 { (observed - expected).abs() <= k * se } else { observed == expected };
        let mut c = Check::new(name, observed, expected, format!("|obs - exp| <= {k} se"), passed);
        c.std_err = Some(se);
        c.ci = Some([observed - Z95 * se, observed + Z95 * se]);
        c
    }

    /// `|observed / expected − 1| ≤ rel`.
    pub fn relative(name: impl Into<String>, observed: f64, expected: f64, rel: f64) -> Self {
        let passed = ((observed / expected) - 1.0).abs() <= rel;
        Check::new(name, observed, expected, format!("relative error <= {}", short(rel)), passed)
    }

    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Check::new(name, observed, bound, format!("obs <= {}", short(bound)), observed <= bound)
    }

    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Check::new(name, observed, bound, format!("obs >= {}", short(bound)), observed >= bound)
    }

    pub fn above(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Check::new(name, observed, bound, format!("obs > {}", short(bound)), observed > bound)
    }

    pub fn between(name: impl Into<String>, observed: f64, lo: f64, hi: f64) -> Self {
        Check::new(
            name,
            observed,
            0.5 * (lo + hi),
            format!("{} <= obs <= {}", short(lo), short(hi)),
            (lo..=hi).contains(&observed),
        )
    }

    pub fn p_value(name: impl Into<String>, p: f64, min: f64) -> Self {
        Check::new(name, p, min, format!("p > {}", short(min)), p > min)
    }

    pub fn with_std_err(mut self, se: f64) -> Self {
        self.std_err = Some(se);
        self.ci = Some([self.observed - Z95 * se, self.observed + Z95 * se]);
        self
    }

    pub fn with_ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci = Some([lo, hi]);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Moments,
    ChainEquivalence,
    CovarianceOracle,
    Bridge,
    Girsanov,
    Martingale,
    LimitLaw,
    Barrier,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Identities,
        Suite::Moments,
        Suite::ChainEquivalence,
        Suite::CovarianceOracle,
        Suite::Bridge,
        Suite::Girsanov,
        Suite::Martingale,
        Suite::LimitLaw,
        Suite::Barrier,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Moments => "moments",
            Suite::ChainEquivalence => "chain-equivalence",
            Suite::CovarianceOracle => "covariance-oracle",
            Suite::Bridge => "bridge",
            Suite::Girsanov => "girsanov",
            Suite::Martingale => "martingale",
            Suite::LimitLaw => "limit-law",
            Suite::Barrier => "barrier",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.iter().copied().find(|x| x.name() == s).ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Diagnostics that do not enter the verdict.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>, notes: Vec<String>) -> Self {
        SuiteReport { suite, passed: checks.iter().all(|c| c.passed), checks, notes }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub max_walk_depth: u32,
    pub walks: u64,
    pub max_k: u32,
    pub fields: u64,
    pub rel_tol: f64,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig { max_walk_depth: 8, walks: 1_000, max_k: 12, fields: 10_000, rel_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsConfig {
    pub j_min: u32,
    pub j_max: u32,
    pub excursions: u64,
    pub sigma: f64,
    pub variance_rel_tol: f64,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        MomentsConfig { j_min: 1, j_max: 12, excursions: 1_000_000, sigma: 4.0, variance_rel_tol: 0.03 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub leaf_depth: u32,
    pub samples: u64,
    pub starts: Vec<u64>,
    pub levels: u32,
    pub min_p: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { leaf_depth: 4, samples: 100_000, starts: vec![1, 5, 20], levels: 4, min_p: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovarianceConfig {
    pub depth: u32,
    pub excursions: u64,
    pub sigma: f64,
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        CovarianceConfig { depth: 3, excursions: 200_000, sigma: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeConfig {
    pub dt: f64,
    pub paths: u64,
    pub besq_samples: u64,
    pub sigma: f64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig { dt: 1e-3, paths: 100_000, besq_samples: 200_000, sigma: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GirsanovSuiteConfig {
    pub replicas: u64,
    pub sigma: f64,
}

impl Default for GirsanovSuiteConfig {
    fn default() -> Self {
        GirsanovSuiteConfig { replicas: 50_000, sigma: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MartingaleConfig {
    pub k: u32,
    pub outer: u64,
    pub inner: u64,
    pub cov_k: u32,
    pub var_ks: Vec<u32>,
    pub fields: u64,
    pub sigma: f64,
}

impl Default for MartingaleConfig {
    fn default() -> Self {
        MartingaleConfig {
            k: 3,
            outer: 10_000,
            inner: 1_000,
            cov_k: 5,
            var_ks: vec![1, 5],
            fields: 100_000,
            sigma: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitLawConfig {
    pub depths: Vec<u32>,
    pub samples: u64,
    pub stability_ks: f64,
    pub tail_n: u32,
    pub tail_window: (f64, f64),
    pub tail_step: f64,
    pub c_band: (f64, f64),
    pub mixture_n: u32,
    pub xprime_k: u32,
    pub xprime_samples: u64,
    pub mixture_ks: f64,
    pub shift_n: u32,
    pub shift_samples: u64,
    pub shift_ks: f64,
    pub alpha_ell: u32,
    pub alpha_draws: u64,
}

impl Default for LimitLawConfig {
    fn default() -> Self {
        LimitLawConfig {
            depths: vec![10, 12, 14],
            samples: 20_000,
            stability_ks: 0.05,
            tail_n: 12,
            tail_window: (1.0, 3.5),
            tail_step: 0.25,
            c_band: (1.0, 1.35),
            mixture_n: 12,
            xprime_k: 16,
            xprime_samples: 5_000,
            mixture_ks: 0.05,
            shift_n: 10,
            shift_samples: 10_000,
            shift_ks: 0.06,
            alpha_ell: 8,
            alpha_draws: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierConfig {
    pub n: u32,
    pub ell: u32,
    pub zs: Vec<f64>,
    pub replicas: u64,
    pub delta: f64,
    pub sigma: f64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig { n: 12, ell: 4, zs: vec![1.0, 2.0, 3.0], replicas: 100_000, delta: 0.1, sigma: 4.0 }
    }
}

/// Sizes and thresholds of every suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    pub workers: usize,
    pub identities: IdentitiesConfig,
    pub moments: MomentsConfig,
    pub chain: ChainConfig,
    pub covariance: CovarianceConfig,
    pub bridge: BridgeConfig,
    pub girsanov: GirsanovSuiteConfig,
    pub martingale: MartingaleConfig,
    pub limit_law: LimitLawConfig,
    pub barrier: BarrierConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 2024,
            workers: crate::rng::default_workers(),
            identities: Default::default(),
            moments: Default::default(),
            chain: Default::default(),
            covariance: Default::default(),
            bridge: Default::default(),
            girsanov: Default::default(),
            martingale: Default::default(),
            limit_law: Default::default(),
            barrier: Default::default(),
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<SuiteReport> {
    match suite {
        Suite::Identities => identities(cfg),
        Suite::Moments => moments(cfg),
        Suite::ChainEquivalence => chain_equivalence(cfg),
        Suite::CovarianceOracle => covariance_oracle(cfg),
        Suite::Bridge => bridge(cfg),
        Suite::Girsanov => girsanov(cfg),
        Suite::Martingale => martingale(cfg),
        Suite::LimitLaw => limit_law(cfg),
        Suite::Barrier => barrier(cfg),
    }
}

pub fn identities(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let c = &cfg.identities;
    if c.max_walk_depth == 0 || c.max_k == 0 {
        return Err(Error::Config("identity depths must be at least 1".into()));
    }
    // (step accounting broken, level-0 count wrong on the walk, level-0 count wrong on the tree)
    let walks = run_chunked(
        cfg.workers,
        c.walks,
        50,
        || Ok(()),
        |_, r| {
            let n = 1 + (r % c.max_walk_depth as u64) as u32;
            let s = 1 + (r / c.max_walk_depth as u64) % 7;
            let mut engine = SrwEngine::with_counts(n, crate::srw::DEFAULT_MEMORY_BUDGET)?;
            let run = engine.run_excursions(s, &mut stream(cfg.seed, "identity-walk", n as u64, r))?;
            let tree = sample_counts(n, s, &mut stream(cfg.seed, "identity-tree", n as u64, r))?;
            Ok([
                run.steps as u128 != 2 * run.counts.total(),
                run.counts.count(VertexId::TOP) != s,
                tree.count(VertexId::TOP) != s,
            ])
        },
    )?;
    let bad = |i: usize| walks.iter().filter(|w| w[i]).count() as f64;
    let fields = run_chunked(
        cfg.workers,
        c.fields,
        100,
        || Ok(()),
        |_, r| {
            let k = 1 + (r % c.max_k as u64) as u32;
            let f = sample_brw(k, &mut stream(cfg.seed, "identity-brw", k as u64, r))?;
            let gb = f.gbar_k();
            // scale of the sum defining X', so cancellation does not inflate the ratio
            let scale: f64 = f
                .level(k)
                .iter()
                .map(|g| {
                    let a = C_STAR * k as f64 + g - gb;
                    a.abs() * (-C_STAR * a).exp()
                })
                .sum();
            Ok((f.x_prime - f.x_prime_from_identity()).abs() / scale)
        },
    )?;
    let worst = fields.iter().cloned().fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("walk steps = 2^{n+1} R_n^s (violations)", bad(0), 0.0)
            .with_note(format!("{} walks, n in 1..={}", c.walks, c.max_walk_depth)),
        Check::at_most("walk T^s_{v,0} = s (violations)", bad(1), 0.0),
        Check::at_most("branching T^s_{v,0} = s (violations)", bad(2), 0.0),
        Check::at_most("X'_k identity, max relative error", worst, c.rel_tol)
            .with_note(format!("{} fields, k in 1..={}", c.fields, c.max_k)),
    ];
    Ok(SuiteReport::new(Suite::Identities, checks, vec![]))
}

/// Running sums for one level of the moments suite.
#[derive(Debug, Clone, Copy, Default)]
struct LevelSums {
    hits: u64,
    t1: u128,
    t2: u128,
    r: [f64; 4],
}

fn merge_levels(acc: &mut [LevelSums], part: &[LevelSums]) {
    for (a, b) in acc.iter_mut().zip(part) {
        a.hits += b.hits;
        a.t1 += b.t1;
        a.t2 += b.t2;
        for i in 0..4 {
            a.r[i] += b.r[i];
        }
    }
}

pub fn moments(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let c = &cfg.moments;
    if c.j_min == 0 || c.j_min > c.j_max || c.excursions < 2 {
        return Err(Error::Config("moments needs 1 <= j_min <= j_max and at least 2 excursions".into()));
    }
    let n = c.j_max;
    let chunk = 10_000u64;
    let parts = run_replicas(cfg.workers, 0..c.excursions.div_ceil(chunk), |ci| -> Result<Vec<LevelSums>> {
        let mut sampler = SingleExcursionSampler::new(n)?;
        let mut sums = vec![LevelSums::default(); n as usize + 1];
        let mut per_level = vec![0u64; n as usize + 1];
        for r in ci * chunk..((ci + 1) * chunk).min(c.excursions) {
            let mut rng = stream(cfg.seed, "moments", n as u64, r);
            sampler.sample(&mut rng);
            let tree = sampler.last();
            per_level.iter_mut().for_each(|x| *x = 0);
            for &h in sampler.touched() {
                per_level[(31 - h.leading_zeros()) as usize] += tree.by_heap(h as usize);
            }
            let mut cumulative = 0u64;
            for j in 0..=n as usize {
                cumulative += per_level[j];
                // T_j on the leftmost geodesic
                let t = tree.by_heap(1 << j);
                let s = &mut sums[j];
                s.hits += (t > 0) as u64;
                s.t1 += t as u128;
                s.t2 += (t as u128) * (t as u128);
                let rj = cumulative as f64 / (j as f64).exp2();
                let mut p = 1.0;
                for i in 0..4 {
                    p *= rj;
                    s.r[i] += p;
                }
            }
        }
        Ok(sums)
    })?;
    let mut sums = vec![LevelSums::default(); n as usize + 1];
    for p in parts {
        merge_levels(&mut sums, &p?);
    }
    let total = c.excursions as f64;
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for j in c.j_min..=c.j_max {
        let s = &sums[j as usize];
        let jf = j as f64;
        let p0 = 1.0 / (jf + 1.0);
        let hit = Proportion::wilson(s.hits, c.excursions);
        checks.push(
            Check::sigma(
                format!("P(T_{j} >= 1) = 1/(j+1), j={j}"),
                hit.estimate,
                p0,
                (p0 * (1.0 - p0) / total).sqrt(),
                c.sigma,
            )
            .with_ci(hit.lower, hit.upper),
        );
        let mean = s.t1 as f64 / total;
        let var = (s.t2 as f64 - (s.t1 as f64).powi(2) / total) / (total - 1.0);
        checks.push(Check::sigma(format!("E T_{j} = 1, j={j}"), mean, 1.0, (var / total).sqrt(), c.sigma));
        checks.push(Check::relative(format!("Var T_{j} = 2j, j={j}"), var, 2.0 * jf, c.variance_rel_tol));
        let m: Vec<f64> = s.r.iter().map(|x| x / total).collect();
        let r_var = m[1] - m[0] * m[0];
        let central4 = m[3] - 4.0 * m[2] * m[0] + 6.0 * m[1] * m[0] * m[0] - 3.0 * m[0].powi(4);
        checks.push(Check::sigma(
            format!("E R_{j}^1 = 2 - 2^-j, j={j}"),
            m[0],
            2.0 - (-jf).exp2(),
            (r_var / total).sqrt(),
            c.sigma,
        ));
        let exact = var_r_single(j);
        let pair_sum = var_r_common_depth(j);
        checks.push(
            Check::sigma(
                format!("Var R_{j}^1 = exact covariance sum, j={j}"),
                r_var,
                exact,
                ((central4 - r_var * r_var).max(0.0) / total).sqrt(),
                c.sigma,
            )
            .with_note(format!(
                "sum with Cov = 2|u^v| gives {pair_sum:.4}; the bound 4 {}",
                if exact <= 4.0 { "holds" } else { "fails" }
            )),
        );
    }
    notes.push(format!("{} single excursions on T_{n}; T_j read on the leftmost geodesic", c.excursions));
    Ok(SuiteReport::new(Suite::Moments, checks, notes))
}

/// `2 Σ_{u,u' ∈ T_n} 4^{-n} |u ∧ u'|`, the value obtained from `Cov = 2|u ∧ u'|`.
pub fn var_r_common_depth(n: u32) -> f64 {
    let n = n as i32;
    let mut total = 0.0;
    for a in 0..=n {
        for b in 0..=n {
            let lo = a.min(b);
            total += 2f64.powi(a.max(b)) * lo as f64;
            for w in 0..lo {
                total += 2f64.powi(w) * 2f64.powi(a - w - 1) * 2f64.powi(b - w - 1) * 2.0 * w as f64;
            }
        }
    }
    2.0 * total / 4f64.powi(n)
}

pub fn chain_equivalence(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let c = &cfg.chain;
    let d = c.leaf_depth;
    let walk = run_chunked(
        cfg.workers,
        c.samples,
        1000,
        || SrwEngine::with_counts(d, crate::srw::DEFAULT_MEMORY_BUDGET),
        |engine, r| {
            Ok(engine.run_excursions(1, &mut stream(cfg.seed, "chain-walk", d as u64, r))?.counts.leaves().to_vec())
        },
    )?;
    let branching = run_chunked(
        cfg.workers,
        c.samples,
        1000,
        || SingleExcursionSampler::new(d),
        |sampler, r| Ok(sampler.sample(&mut stream(cfg.seed, "chain-tree", d as u64, r)).leaves().to_vec()),
    )?;
    let leaf = chi_square_two_sample(&walk, &branching, 5.0);
    let mut checks =
        vec![Check::p_value(format!("joint leaf counts on T_{d}: walk vs branching"), leaf.p_value, c.min_p)
            .with_note(format!("chi-square {:.2} on {} dof", leaf.statistic, leaf.dof))];
    for &t in &c.starts {
        let paths = |kind: &'static str, geodesic: bool| {
            run_chunked(
                cfg.workers,
                c.samples,
                1000,
                || Ok(()),
                move |_, r| {
                    let mut rng = stream(cfg.seed, kind, t, r);
                    let mut out = Vec::with_capacity(c.levels as usize);
                    let mut state = ChainState::start(t);
                    for _ in 0..c.levels {
                        state = if geodesic {
                            // keep the left child of a direct pair sum
                            let a = offspring_sum_direct(state.count, &mut rng).a;
                            ChainState { level: state.level + 1, count: a, y: 0.0 }
                        } else {
                            chain_step(state, &mut rng)
                        };
                        out.push(state.count);
                    }
                    Ok(out)
                },
            )
        };
        let geo = paths("chain-geodesic", true)?;
        let gp = paths("chain-gamma-poisson", false)?;
        for step in [0usize, c.levels as usize - 1] {
            let a: Vec<u64> = geo.iter().map(|p| p[step]).collect();
            let b: Vec<u64> = gp.iter().map(|p| p[step]).collect();
            let r = chi_square_two_sample(&a, &b, 5.0);
            checks.push(
                Check::p_value(
                    format!("geodesic vs Gamma-Poisson chain, t={t}, level {}", step + 1),
                    r.p_value,
                    c.min_p,
                )
                .with_note(format!("chi-square {:.2} on {} dof", r.statistic, r.dof)),
            );
        }
        let whole = chi_square_two_sample(&geo, &gp, 5.0);
        checks.push(
            Check::p_value(format!("geodesic vs Gamma-Poisson chain, t={t}, joint path"), whole.p_value, c.min_p)
                .with_note(format!("chi-square {:.2} on {} dof", whole.statistic, whole.dof)),
        );
    }
    Ok(SuiteReport::new(Suite::ChainEquivalence, checks, vec![]))
}

pub fn covariance_oracle(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let c = &cfg.covariance;
    let d = c.depth;
    let size = (1usize << (d + 1)) - 1;
    let rows = run_chunked(
        cfg.workers,
        c.excursions,
        2000,
        || SrwEngine::with_counts(d, crate::srw::DEFAULT_MEMORY_BUDGET),
        |engine, r| {
            let run = engine.run_excursions(1, &mut stream(cfg.seed, "covariance", d as u64, r))?;
            Ok((1..=size).map(|h| run.counts.by_heap(h) as f64).collect::<Vec<f64>>())
        },
    )?;
    let columns: Vec<Vec<f64>> = (0..size).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    let mut checks = Vec::new();
    let mut common_rejected = 0;
    let mut non_nested = 0;
    for a in 1..=size {
        for b in a..=size {
            let (u, v) = (VertexId::from_heap(a as u64), VertexId::from_heap(b as u64));
            let (cov, se) = covariance(&columns[a - 1], &columns[b - 1]);
            let oracle = single_excursion_covariance(u, v);
            let common_depth = 2.0 * lca(u, v).level() as f64;
            let z_common = if se > 0.0 { (cov - common_depth).abs() / se } else { f64::INFINITY };
            if oracle != common_depth {
                non_nested += 1;
                common_rejected += (z_common > c.sigma) as u32;
            }
            checks.push(
                Check::sigma(format!("Cov(T_{u}, T_{v})"), cov, oracle, se, c.sigma)
                    .with_note(format!("2|u^v| = {common_depth}, {z_common:.1} se away")),
            );
        }
    }
    let notes = vec![format!(
        "{common_rejected} of {non_nested} non-nested pairs reject 2|u^v| at {} se; nested pairs agree with it",
        c.sigma
    )];
    Ok(SuiteReport::new(Suite::CovarianceOracle, checks, notes))
}

pub fn bridge(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let c = &cfg.bridge;
    let presets = bridge_presets();
    let estimates = run_replicas(cfg.workers, 0..presets.len() as u64, |i| {
        let case = presets[i as usize];
        bridge_barrier_mc(case.x, case.w, &case.line, c.dt, c.paths, &mut stream(cfg.seed, "bridge", 0, i))
    })?;
    let mut checks: Vec<Check> = presets
        .iter()
        .zip(&estimates)
        .enumerate()
        .map(|(i, (case, est))| {
            let exact = bridge_barrier_prob(case.x, case.w, &case.line);
            Check::sigma(format!("bridge preset {}", i + 1), est.estimate, exact, est.std_err, c.sigma)
        })
        .collect();
    for (i, &(z, s)) in [(1.3, 1.0), (0.5, 2.0), (4.0, 0.5)].iter().enumerate() {
        let xs = run_chunked(
            cfg.workers,
            c.besq_samples,
            10_000,
            || Ok(()),
            |_, r| Ok(besq0_step(z, s, &mut stream(cfg.seed, "besq", i as u64, r))),
        )?;
        let alive = xs.iter().filter(|&&x| x > 0.0).count() as u64;
        let p = Proportion::wilson(alive, c.besq_samples);
        let p0 = besq0_survival(z, s);
        checks.push(
            Check::sigma(
                format!("BESQ(0) survival z={z} s={s}"),
                p.estimate,
                p0,
                (p0 * (1.0 - p0) / c.besq_samples as f64).sqrt(),
                c.sigma,
            )
            .with_ci(p.lower, p.upper),
        );
        let st = SampleStats::from_slice(&xs);
        checks.push(Check::sigma(format!("BESQ(0) mean z={z} s={s}"), st.mean, z, st.std_err(), c.sigma));
    }
    Ok(SuiteReport::new(Suite::Bridge, checks, vec![]))
}

pub fn girsanov(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let c = &cfg.girsanov;
    let mut checks = Vec::new();
    for (i, preset) in girsanov_presets().iter().enumerate() {
        let r = girsanov_check(preset, c.replicas, cfg.seed.wrapping_add(i as u64), cfg.workers)?;
        checks.push(
            Check::at_most(format!("Girsanov preset {}: |Bessel - Brownian| / se", i + 1), r.z, c.sigma).with_note(
                format!(
                    "Bessel {:.4} ± {:.4}, Brownian {:.4} ± {:.4}",
                    r.bessel.estimate, r.bessel.std_err, r.brownian.estimate, r.brownian.std_err
                ),
            ),
        );
    }
    Ok(SuiteReport::new(Suite::Girsanov, checks, vec![]))
}

pub fn martingale(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let c = &cfg.martingale;
    let mut rng = stream(cfg.seed, "martingale", c.k as u64, 0);
    let m = martingale_check(c.k, c.outer, c.inner, &mut rng)?;
    let mut checks = vec![Check::sigma(
        format!("E[X_{} | F_{}] - X_{} = 0", c.k + 1, c.k, c.k),
        m.mean_deviation,
        0.0,
        m.std_err,
        c.sigma,
    )];
    let mut ks = c.var_ks.clone();
    ks.push(c.cov_k);
    ks.sort_unstable();
    ks.dedup();
    for k in ks {
        let pairs = run_chunked(
            cfg.workers,
            c.fields,
            1000,
            || Ok(()),
            |_, r| {
                let f = sample_brw(k, &mut stream(cfg.seed, "martingale-field", k as u64, r))?;
                Ok((f.g(k, 0), f.gbar_k()))
            },
        )?;
        let target = 1.0 - (-(k as f64)).exp2();
        let gbar: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if c.var_ks.contains(&k) {
            let v = SampleStats::from_slice(&gbar).variance;
            checks.push(Check::sigma(
                format!("Var gbar_{k} = 1 - 2^-k"),
                v,
                target,
                SampleStats::variance_std_err(&gbar),
                c.sigma,
            ));
        }
        if k == c.cov_k {
            let g: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let (cov, se) = covariance(&g, &gbar);
            checks.push(Check::sigma(format!("Cov(g_u, gbar_{k}) = 1 - 2^-k"), cov, target, se, c.sigma));
        }
    }
    Ok(SuiteReport::new(Suite::Martingale, checks, vec![]))
}

/// `√(2 t*_n) − m_n` for replicas `0..count`.
pub fn tstar_sample(n: u32, count: u64, seed: u64, workers: usize) -> Result<EmpiricalDistribution> {
    let m = m_n(n);
    let values = run_chunked(
        workers,
        count,
        500,
        || TStarSampler::new(n),
        |s, r| Ok((2.0 * s.sample(&mut stream(seed, "tstar", n as u64, r))? as f64).sqrt() - m),
    )?;
    EmpiricalDistribution::new(values, Provenance { n: Some(n), kind: "tstar".into(), seeds: Some((seed, seed)) })
}

/// `√(C_n / 2^{n+1}) − m_n` for replicas `0..count`, by direct stepping.
pub fn cover_sample(n: u32, count: u64, seed: u64, workers: usize) -> Result<EmpiricalDistribution> {
    let m = m_n(n);
    let values = run_chunked(
        workers,
        count,
        200,
        || SrwEngine::new(n),
        |e, r| {
            let s = e.run_to_cover(&mut stream(seed, "cover", n as u64, r))?;
            let steps = s.cover_steps.expect("direct stepping records cover steps");
            Ok((steps as f64 / (n as f64 + 1.0).exp2()).sqrt() - m)
        },
    )?;
    EmpiricalDistribution::new(values, Provenance { n: Some(n), kind: "cover".into(), seeds: Some((seed, seed)) })
}

/// `(X'_k, ḡ_k)` for replicas `0..count`.
pub fn xprime_sample(k: u32, count: u64, seed: u64, workers: usize) -> Result<Vec<(f64, f64)>> {
    run_chunked(
        workers,
        count,
        50,
        || Ok(()),
        |_, r| {
            let f = sample_brw(k, &mut stream(seed, "brw_xprime", k as u64, r))?;
            Ok((f.x_prime, f.gbar_k()))
        },
    )
}

pub fn limit_law(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let c = &cfg.limit_law;
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let mut depths = c.depths.clone();
    for n in [c.tail_n, c.mixture_n] {
        if !depths.contains(&n) {
            depths.push(n);
        }
    }
    let samples: Vec<(u32, EmpiricalDistribution)> = depths
        .iter()
        .map(|&n| tstar_sample(n, c.samples, cfg.seed, cfg.workers).map(|d| (n, d)))
        .collect::<Result<_>>()?;
    let by_n = |n: u32| &samples.iter().find(|s| s.0 == n).expect("depth sampled").1;

    let ladder: Vec<EmpiricalDistribution> = c.depths.iter().map(|&n| by_n(n).clone()).collect();
    let rows = cross_n_stability(&ladder)?;
    for r in &rows {
        checks.push(Check::at_most(format!("KS(t*_{}, t*_{})", r.n_from, r.n_to), r.statistic, c.stability_ks));
    }
    // tightness: distances may not grow beyond two KS noise widths
    let noise = 2.0 * (2.0 / c.samples as f64).sqrt();
    for w in rows.windows(2) {
        checks.push(
            Check::at_most(
                format!("KS drift n={}->{} vs n={}->{}", w[1].n_from, w[1].n_to, w[0].n_from, w[0].n_to),
                w[1].statistic,
                w[0].statistic + noise,
            )
            .with_note("non-increasing within noise"),
        );
    }

    let tail = tail_fit(by_n(c.tail_n), c.tail_window.0, c.tail_window.1, c.tail_step)?;
    checks.push(
        Check::between(format!("tail fit c at n={}", c.tail_n), tail.c, c.c_band.0, c.c_band.1)
            .with_std_err(tail.c_stderr)
            .with_note(format!("c* = {C_STAR:.5}, alpha = {:.3} ± {:.3}", tail.alpha, tail.alpha_stderr)),
    );
    let draws = tstar_draws(c.alpha_ell, c.alpha_draws, cfg.seed, cfg.workers)?;
    let alpha = alpha_ell_from_tstar(c.alpha_ell, &draws)?;
    let ratio = tail.alpha / alpha.alpha;
    checks.push(Check::between(format!("tail alpha / alpha_{}", c.alpha_ell), ratio, 0.1, 10.0).with_note(format!(
        "alpha_{} = {:.3} ± {:.3}; order of magnitude only",
        c.alpha_ell, alpha.alpha, alpha.std_err
    )));

    let brw = xprime_sample(c.xprime_k, c.xprime_samples, cfg.seed, cfg.workers)?;
    let xprime: Vec<f64> = brw.iter().map(|p| p.0).collect();
    // X_∞ = X'_∞ e^{−c* ḡ_∞} drives the t* law
    let x_limit: Vec<f64> = brw.iter().map(|p| p.0 * (-C_STAR * p.1).exp()).collect();
    let fit = mixture_cdf_fit(by_n(c.mixture_n), &x_limit, C_STAR)?;
    checks.push(
        Check::at_most(
            format!("mixture KS, t*_{} vs X' e^(-c* gbar), k={}", c.mixture_n, c.xprime_k),
            fit.ks,
            c.mixture_ks,
        )
        .with_note(format!("alpha = {:.3}, excluded X' <= 0: {:.4}", fit.alpha, fit.excluded_fraction)),
    );
    let plain = mixture_cdf_fit(by_n(c.mixture_n), &xprime, C_STAR)?;
    notes.push(format!(
        "t*_{} against the X' mixture without the gbar factor: KS {:.4}, alpha {:.3}",
        c.mixture_n, plain.ks, plain.alpha
    ));

    let cover = cover_sample(c.shift_n, c.shift_samples, cfg.seed, cfg.workers)?;
    let tstar = tstar_sample(c.shift_n, c.shift_samples, cfg.seed, cfg.workers)?;
    let mut rng = stream(cfg.seed, "shift", c.shift_n as u64, 0);
    let shift = shift_test(&cover, &tstar, &mut rng)?;
    checks.push(
        Check::at_most(
            format!("shift KS, cover_{} - N(0,1) vs t*_{}", c.shift_n, c.shift_n),
            shift.statistic,
            c.shift_ks,
        )
        .with_note(format!("p = {:.3e}", shift.p_value)),
    );
    checks.push(
        Check::above("shift negative control KS - shift KS", shift.control_statistic - shift.statistic, 0.0)
            .with_note(format!("control KS {:.4} with N(0, 0.25)", shift.control_statistic)),
    );
    let cover_fit = mixture_cdf_fit(&cover, &xprime, C_STAR)?;
    notes.push(format!(
        "cover_{} against the X' mixture: KS {:.4}, alpha {:.3}",
        c.shift_n, cover_fit.ks, cover_fit.alpha
    ));
    Ok(SuiteReport::new(Suite::LimitLaw, checks, notes))
}

/// Per-`z` summary of the barrier counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierSummary {
    pub z: f64,
    pub roots: u64,
    pub mean_lambda: f64,
    pub mean_lambda_falling: f64,
    pub mean_gamma: f64,
    pub eta_sharp_zero: Proportion,
    pub g_event: Proportion,
    /// `E[1{η♯ = 0} − Λ + Λ(Λ−1)]` with its standard error.
    pub sandwich_gap: f64,
    pub sandwich_se: f64,
    /// Realizations with `Λ ≥ 1` and `η♯ ≠ 0`.
    pub violations: u64,
}

pub fn barrier_counts(p: &BarrierParams, replicas: u64, seed: u64, workers: usize) -> Result<Vec<BarrierCounts>> {
    run_chunked(
        workers,
        replicas,
        500,
        || Ok(()),
        |_, r| {
            let tree = sample_counts(p.n, p.roots(), &mut stream(seed, "event", p.n as u64, r))?;
            count_lambda_gamma(&tree, p)
        },
    )
}

pub fn summarize_barrier(p: &BarrierParams, counts: &[BarrierCounts]) -> BarrierSummary {
    let total = counts.len() as u64;
    let f = total as f64;
    let lam: Vec<f64> = counts.iter().map(|c| c.lambda as f64).collect();
    let gap: Vec<f64> = counts
        .iter()
        .map(|c| c.eta_sharp_zero as u8 as f64 - c.lambda as f64 + (c.lambda * c.lambda.saturating_sub(1)) as f64)
        .collect();
    let gs = SampleStats::from_slice(&gap);
    BarrierSummary {
        z: p.z,
        roots: p.roots(),
        mean_lambda: lam.iter().sum::<f64>() / f,
        mean_lambda_falling: counts.iter().map(|c| (c.lambda * c.lambda.saturating_sub(1)) as f64).sum::<f64>() / f,
        mean_gamma: counts.iter().map(|c| c.gamma as f64).sum::<f64>() / f,
        eta_sharp_zero: Proportion::wilson(counts.iter().filter(|c| c.eta_sharp_zero).count() as u64, total),
        g_event: Proportion::wilson(counts.iter().filter(|c| c.g_event).count() as u64, total),
        sandwich_gap: gs.mean,
        sandwich_se: gs.std_err(),
        violations: counts.iter().filter(|c| c.lambda >= 1 && !c.eta_sharp_zero).count() as u64,
    }
}

/// Shape `(z + h) e^{−c*(z + h)} e^{−(z + h)²/(8n)}` of the a-priori bound on `G`.
pub fn g_bound_shape(n: u32, z: f64, h: f64) -> f64 {
    let x = z + h;
    x * (-C_STAR * x).exp() * (-x * x / (8.0 * n as f64)).exp()
}

pub fn barrier(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let c = &cfg.barrier;
    if c.zs.is_empty() {
        return Err(Error::Config("barrier suite needs at least one z".into()));
    }
    let mut zs = c.zs.clone();
    zs.sort_by(|a, b| a.total_cmp(b));
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let mut summaries = Vec::new();
    for &z in &zs {
        let p = BarrierParams::with_delta(c.n, c.ell, z, c.delta)?;
        let counts = barrier_counts(&p, c.replicas, cfg.seed, cfg.workers)?;
        let s = summarize_barrier(&p, &counts);
        checks.push(Check::at_most(
            format!("Lambda >= 1 implies eta# = 0, z={z} (violations)"),
            s.violations as f64,
            0.0,
        ));
        checks.push(
            Check::at_least(
                format!("P(eta# = 0) - E[L] + E[L(L-1)] + {} se >= 0, z={z}", c.sigma),
                s.sandwich_gap + c.sigma * s.sandwich_se,
                0.0,
            )
            .with_std_err(s.sandwich_se)
            .with_note(format!(
                "P(eta# = 0) = {:.4} [{:.4}, {:.4}], E[L] - E[L(L-1)] = {:.4}",
                s.eta_sharp_zero.estimate,
                s.eta_sharp_zero.lower,
                s.eta_sharp_zero.upper,
                s.mean_lambda - s.mean_lambda_falling
            )),
        );
        summaries.push((p, s));
    }
    // smallest constant of the bound at the first z, carried to the others
    let (p0, s0) = &summaries[0];
    let h = p0.h_ell();
    let c_fit = s0.g_event.upper / g_bound_shape(c.n, p0.z, h);
    let c_grid = summaries.iter().map(|(p, s)| s.g_event.estimate / g_bound_shape(c.n, p.z, h)).fold(0.0, f64::max);
    for (p, s) in &summaries[1..] {
        let bound = c_fit * g_bound_shape(c.n, p.z, h);
        checks.push(
            Check::at_most(format!("P(G) lower 95% bound vs fitted shape, z={}", p.z), s.g_event.lower, bound)
                .with_ci(s.g_event.lower, s.g_event.upper)
                .with_note(format!("P(G) = {:.5}", s.g_event.estimate)),
        );
    }
    notes
        .push(format!("shape constant fitted at z={}: {c_fit:.4}; smallest constant over the grid: {c_grid:.4}", p0.z));
    for (_, s) in &summaries {
        notes.push(format!(
            "z={} s={} E[L]={:.4} E[L(L-1)]={:.4} E[Gamma]={:.4} P(eta#=0)={:.4} P(G)={:.5}",
            s.z,
            s.roots,
            s.mean_lambda,
            s.mean_lambda_falling,
            s.mean_gamma,
            s.eta_sharp_zero.estimate,
            s.g_event.estimate
        ));
    }
    Ok(SuiteReport::new(Suite::Barrier, checks, notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            workers: 2,
            identities: IdentitiesConfig { walks: 40, fields: 40, ..Default::default() },
            moments: MomentsConfig { j_max: 4, excursions: 20_000, variance_rel_tol: 0.2, ..Default::default() },
            chain: ChainConfig { samples: 5_000, starts: vec![3], levels: 2, ..Default::default() },
            covariance: CovarianceConfig { depth: 2, excursions: 20_000, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn common_depth_sum_small_depths() {
        assert!((var_r_common_depth(1) - 1.0).abs() < 1e-12);
        assert!((var_r_common_depth(2) - 2.75).abs() < 1e-12);
    }

    #[test]
    fn small_suites_pass_and_ignore_workers() {
        let cfg = small();
        for suite in [Suite::Identities, Suite::Moments, Suite::ChainEquivalence, Suite::CovarianceOracle] {
            let a = run_suite(suite, &cfg).unwrap();
            assert!(a.passed, "{:#?}", a.failures().collect::<Vec<_>>());
            let b = run_suite(suite, &VerifyConfig { workers: 1, ..cfg.clone() }).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rule_numbers_are_short() {
        assert_eq!(short(0.056500000000000036), "0.0565");
        assert_eq!(short(10.0), "10");
        assert_eq!(short(1e-10), "1e-10");
        assert_eq!(Check::above("x", 0.1, 0.0).rule, "obs > 0");
        assert!(!Check::above("x", 0.0, 0.0).passed);
    }

    #[test]
    fn check_rules() {
        assert!(Check::sigma("a", 1.0, 1.3, 0.1, 4.0).passed);
        assert!(!Check::sigma("a", 1.0, 1.5, 0.1, 4.0).passed);
        assert!(Check::sigma("a", 0.0, 0.0, 0.0, 4.0).passed);
        assert!(!Check::relative("r", 1.04, 1.0, 0.03).passed);
        assert!(Check::between("b", 1.2, 1.0, 1.35).passed);
    }
}
