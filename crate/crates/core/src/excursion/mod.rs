//! Excursion-count field of the walk via its branching representation.
//!
//! During one root excursion, every down-crossing of the edge into an internal
//! vertex is followed by a Geometric(1/3) number of child excursions before the
//! walk steps back up, each going to either child with probability 1/2. Edge
//! counts therefore form a critical Galton–Watson tree with offspring pair
//! generating function `1/(3 − x − y)`, and the counts of `s` excursions are the
//! edge-wise sum of `s` independent such trees.
//!
//! Summing `t` i.i.d. pairs gives generating function `(3 − x − y)^{-t}`, which is
//! also the law of two conditionally independent `Poisson(G)` variables sharing
//! `G ~ Gamma(t, 1)`. [`offspring_sum`] switches to that form for large `t`;
//! [`offspring_sum_direct`] always draws the pairs one by one.

mod events;
mod rtau;
mod tstar;

pub use events::{
    count_lambda_gamma, estimate_event, eta_hat, BarrierCounts, BarrierParams, EventEstimate, GeodesicEvent,
    StartCount, SubtreeCondition, DEFAULT_DELTA,
};
pub use rtau::{r_and_tau, r_of, s_of, Dyadic, RTau};
pub use tstar::{sample_t_star, TStarSampler, DEFAULT_EXCURSION_CAP};

use rand::Rng;

use crate::error::{Error, Result};
use crate::tree::{lca, TreeShape, VertexId};
use crate::variates::{binomial_half, gamma, geometric_third, poisson};

/// Largest depth for which a dense count tree is materialized.
pub const MAX_MATERIALIZED_DEPTH: u32 = 24;

/// Pair sums with parent count above this use the Gamma–Poisson form.
const DIRECT_PAIR_LIMIT: u64 = 3;

/// Counts into the two children generated by one down-crossing of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OffspringPair {
    pub a: u64,
    pub b: u64,
}

impl OffspringPair {
    pub fn total(&self) -> u64 {
        self.a + self.b
    }
}

/// One offspring pair: `a + b ~ Geometric(1/3)`, split by fair coins.
#[inline]
pub fn sample_offspring<R: Rng + ?Sized>(rng: &mut R) -> OffspringPair {
    let m = geometric_third(rng);
    let a = binomial_half(m, rng);
    OffspringPair { a, b: m - a }
}

/// Sum of `t` independent offspring pairs, drawn one by one.
pub fn offspring_sum_direct<R: Rng + ?Sized>(t: u64, rng: &mut R) -> OffspringPair {
    let mut m = 0u64;
    for _ in 0..t {
        m += geometric_third(rng);
    }
    let a = binomial_half(m, rng);
    OffspringPair { a, b: m - a }
}

/// Sum of `t` independent offspring pairs.
#[inline]
pub fn offspring_sum<R: Rng + ?Sized>(t: u64, rng: &mut R) -> OffspringPair {
    if t <= DIRECT_PAIR_LIMIT {
        return offspring_sum_direct(t, rng);
    }
    // a + b ~ Poisson(2G), split by fair coins
    let m = poisson(2.0 * gamma(t as f64, rng), rng);
    let a = binomial_half(m, rng);
    OffspringPair { a, b: m - a }
}

/// Per-edge excursion counts `T^s_{v,|v|}` over `T_n`, heap-indexed by the
/// child endpoint of each edge. Slot 0 (the root) is unused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTree {
    depth: u32,
    counts: Vec<u64>,
}

impl CountTree {
    pub fn zeros(depth: u32) -> Result<Self> {
        if depth > MAX_MATERIALIZED_DEPTH {
            return Err(Error::Resource(format!(
                "count tree of depth {depth} exceeds the materialization limit {MAX_MATERIALIZED_DEPTH}"
            )));
        }
        Ok(CountTree { depth, counts: vec![0; 1usize << (depth + 1)] })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Number of root excursions the tree accounts for.
    pub fn roots(&self) -> u64 {
        self.counts[1]
    }

    pub fn count(&self, v: VertexId) -> u64 {
        if v.is_root() || v.level() > self.depth as i32 {
            return 0;
        }
        self.counts[v.heap() as usize]
    }

    pub fn by_heap(&self, h: usize) -> u64 {
        self.counts[h]
    }

    pub(crate) fn slots_mut(&mut self) -> &mut [u64] {
        &mut self.counts
    }

    pub fn set(&mut self, v: VertexId, value: u64) {
        self.counts[v.heap() as usize] = value;
    }

    /// Counts on the edges into level `j`, by index.
    pub fn level(&self, j: u32) -> &[u64] {
        let lo = 1usize << j;
        &self.counts[lo..2 * lo]
    }

    pub fn leaves(&self) -> &[u64] {
        self.level(self.depth)
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }

    /// Edge-wise sum with overflow checking.
    pub fn add_assign(&mut self, other: &CountTree) -> Result<()> {
        if other.depth != self.depth {
            return Err(Error::Domain("adding count trees of different depth".into()));
        }
        for (x, y) in self.counts.iter_mut().zip(&other.counts) {
            *x = x.checked_add(*y).ok_or_else(|| Error::Overflow("edge count exceeds u64".into()))?;
        }
        Ok(())
    }

    /// Non-zero edges as `(vertex, count)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (VertexId, u64)> + '_ {
        self.counts.iter().enumerate().skip(1).filter(|(_, &c)| c > 0).map(|(h, &c)| (VertexId::from_heap(h as u64), c))
    }

    /// `Σ_{u ∈ T_n} T_u`, the number of down-crossings; the walk takes twice as many steps.
    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    /// Every zero-count edge has only zero-count descendants.
    pub fn zero_closed(&self) -> bool {
        (2..self.counts.len()).all(|h| self.counts[h / 2] > 0 || self.counts[h] == 0)
    }

    pub fn shape(&self) -> TreeShape {
        TreeShape::new(self.depth).expect("depth already validated")
    }
}

fn expand<R: Rng + ?Sized>(tree: &mut CountTree, roots: u64, rng: &mut R) {
    let n = tree.depth;
    let slots = tree.slots_mut();
    slots[1] = roots;
    for j in 0..n {
        let lo = 1usize << j;
        for h in lo..2 * lo {
            let t = slots[h];
            if t == 0 {
                continue;
            }
            let pair = offspring_sum(t, rng);
            slots[2 * h] = pair.a;
            slots[2 * h + 1] = pair.b;
        }
    }
}

/// Counts of the first `s` root excursions on `T_n`, drawn level by level.
pub fn sample_counts<R: Rng + ?Sized>(n: u32, s: u64, rng: &mut R) -> Result<CountTree> {
    if s == 0 {
        return Err(Error::Domain("need at least one excursion".into()));
    }
    let mut tree = CountTree::zeros(n)?;
    expand(&mut tree, s, rng);
    Ok(tree)
}

/// Same law as [`sample_counts`], built as the streamed edge-wise sum of `s`
/// single-excursion trees.
pub fn sum_of_excursions<R: Rng + ?Sized>(n: u32, s: u64, rng: &mut R) -> Result<CountTree> {
    if s == 0 {
        return Err(Error::Domain("need at least one excursion".into()));
    }
    let mut sampler = SingleExcursionSampler::new(n)?;
    let mut total = CountTree::zeros(n)?;
    for _ in 0..s {
        total.add_assign(sampler.sample(rng))?;
    }
    Ok(total)
}

/// Reusable sampler of single-excursion count trees (DFS, zero-pruned).
#[derive(Debug, Clone)]
pub struct SingleExcursionSampler {
    tree: CountTree,
    touched: Vec<u32>,
    stack: Vec<u32>,
}

impl SingleExcursionSampler {
    pub fn new(n: u32) -> Result<Self> {
        Ok(SingleExcursionSampler { tree: CountTree::zeros(n)?, touched: Vec::new(), stack: Vec::new() })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &CountTree {
        let n = self.tree.depth;
        let slots = &mut self.tree.counts;
        for &h in &self.touched {
            slots[h as usize] = 0;
        }
        self.touched.clear();
        slots[1] = 1;
        self.touched.push(1);
        self.stack.push(1);
        let first_leaf = 1u32 << n;
        while let Some(h) = self.stack.pop() {
            if h >= first_leaf {
                continue;
            }
            let t = slots[h as usize];
            let pair = offspring_sum(t, rng);
            for (child, c) in [(2 * h, pair.a), (2 * h + 1, pair.b)] {
                if c > 0 {
                    slots[child as usize] = c;
                    self.touched.push(child);
                    self.stack.push(child);
                }
            }
        }
        &self.tree
    }

    /// The last sample.
    pub fn last(&self) -> &CountTree {
        &self.tree
    }

    /// Heap indices of the nonzero entries of the last sample.
    pub fn touched(&self) -> &[u32] {
        &self.touched
    }
}

/// A single-excursion count tree (`s = 1`).
pub fn sample_single_excursion<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Result<CountTree> {
    let mut sampler = SingleExcursionSampler::new(n)?;
    Ok(sampler.sample(rng).clone())
}

/// `Cov(T^1_u, T^1_v)` for one excursion: `2|u|` when `u` lies on the geodesic
/// to `v` (or the reverse), and `2|u ∧ v| + 1` otherwise.
///
/// Given the count `t` at `w = u ∧ v`, the counts at the two children of `w` have
/// covariance `t`, which adds `E[T_w] = 1` to the nested value `2|w|`.
pub fn single_excursion_covariance(u: VertexId, v: VertexId) -> f64 {
    let w = lca(u, v);
    if w.is_root() {
        return 0.0;
    }
    let nested = w == u || w == v;
    2.0 * w.level() as f64 + if nested { 0.0 } else { 1.0 }
}

/// `Var(R_n^1) = 4^{-n} Σ_{u,v ∈ T_n} Cov(T^1_u, T^1_v)`, summed by levels.
pub fn var_r_single(n: u32) -> f64 {
    let n = n as i32;
    let mut total = 0.0;
    for a in 0..=n {
        for b in 0..=n {
            let lo = a.min(b);
            // nested pairs: one per vertex at the deeper level
            total += 2f64.powi(a.max(b)) * 2.0 * lo as f64;
            for w in 0..lo {
                let pairs = 2f64.powi(w) * 2f64.powi(a - w - 1) * 2f64.powi(b - w - 1) * 2.0;
                total += pairs * (2.0 * w as f64 + 1.0);
            }
        }
    }
    total / 4f64.powi(n)
}

/// Counts along the geodesic to the vertex with the given `index` at level `n`,
/// starting from `roots` excursions. Entry `j` is `T_{v(j)}`.
///
/// Every step draws a full offspring pair sum and keeps the on-path child.
pub fn sample_geodesic<R: Rng + ?Sized>(n: u32, index: u64, roots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut t = roots;
    out.push(t);
    for j in 1..=n {
        if t > 0 {
            let pair = offspring_sum(t, rng);
            let bit = (index >> (n - j)) & 1;
            t = if bit == 0 { pair.a } else { pair.b };
        }
        out.push(t);
    }
    out
}
