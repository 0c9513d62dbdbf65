//! Step-by-step simple random walk on `T_n` started at `ρ`.
//!
//! Positions use heap numbering. `ρ` and the leaves have a single neighbour;
//! every other vertex, including the level-0 vertex, has three. The starting
//! point `ρ` counts as visited at time 0, so `C_n` is the first step at which
//! every leaf (and hence every vertex) has been visited.

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::excursion::CountTree;
use crate::rng::stream;
use crate::stats::centering::m_n;

/// Default memory budget for per-edge count storage, in bytes.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

/// `3^40`, the largest power of three below `2^64`.
const TRITS_PER_WORD: u32 = 40;
const POW3_40: u64 = 12_157_665_459_056_928_801;

/// Exact uniform draws from `{0, 1, 2}`, 40 per accepted 64-bit word.
#[derive(Debug, Clone, Default)]
struct Trits {
    word: u64,
    left: u32,
}

impl Trits {
    #[inline]
    fn next<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> u64 {
        if self.left == 0 {
            loop {
                let x = rng.next_u64();
                if x < POW3_40 {
                    self.word = x;
                    break;
                }
            }
            self.left = TRITS_PER_WORD;
        }
        self.left -= 1;
        let t = self.word % 3;
        self.word /= 3;
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WalkMode {
    FixedExcursions(u64),
    RunToCover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WalkConfig {
    pub n: u32,
    pub seed: u64,
    pub mode: WalkMode,
}

/// One cover-time record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverSample {
    pub n: u32,
    /// Root excursions needed to visit every leaf.
    pub t_star: u64,
    /// Steps until every vertex has been visited (`None` when not simulated step by step).
    pub cover_steps: Option<u64>,
    /// Steps after completing `t_star` excursions.
    pub steps_at_s: Option<u64>,
    #[serde(skip)]
    pub counts: Option<CountTree>,
}

/// Counts and step total of a fixed number of excursions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionRun {
    pub counts: CountTree,
    pub steps: u64,
}

/// Default step cap `2^{n+1} (m_n + 50)²`.
pub fn default_step_cap(n: u32) -> u64 {
    let m = m_n(n) + 50.0;
    ((n as f64 + 1.0).exp2() * m * m).ceil() as u64
}

#[derive(Debug, Clone)]
pub struct SrwEngine {
    n: u32,
    cap: u64,
    first_leaf: u64,
    visited: Vec<u64>,
    counts: Option<CountTree>,
    trits: Trits,
}

impl SrwEngine {
    /// An engine that does not store per-edge counts.
    pub fn new(n: u32) -> Result<Self> {
        if n > 30 {
            return Err(Error::Resource(format!("direct stepping on T_{n} is not supported")));
        }
        Ok(SrwEngine {
            n,
            cap: default_step_cap(n),
            first_leaf: 1 << n,
            visited: vec![0; (1usize << n).div_ceil(64)],
            counts: None,
            trits: Trits::default(),
        })
    }

    /// An engine that records per-edge down-crossings within `budget` bytes.
    pub fn with_counts(n: u32, budget: u64) -> Result<Self> {
        let need = 8u64 << (n + 1);
        if need > budget {
            return Err(Error::Resource(format!("counts for T_{n} need {need} bytes, budget is {budget}")));
        }
        let mut e = Self::new(n)?;
        e.counts = Some(CountTree::zeros(n)?);
        Ok(e)
    }

    pub fn set_step_cap(&mut self, cap: u64) {
        self.cap = cap;
    }

    pub fn depth(&self) -> u32 {
        self.n
    }

    fn reset(&mut self) {
        self.visited.iter_mut().for_each(|w| *w = 0);
        if let Some(c) = self.counts.as_mut() {
            c.clear();
        }
    }

    /// Runs one excursion from `ρ`. Returns its step count and the step (relative
    /// to the excursion start) at which the last unvisited leaf was reached, if any.
    fn excursion<R: RngCore + ?Sized>(
        &mut self,
        unvisited: &mut u64,
        steps_so_far: u64,
        rng: &mut R,
    ) -> Result<(u64, Option<u64>)> {
        let mut h: u64 = 0;
        let mut steps = 0u64;
        let mut covered_at = None;
        loop {
            let next = if h == 0 {
                1
            } else if h >= self.first_leaf {
                let i = (h - self.first_leaf) as usize;
                let bit = 1u64 << (i % 64);
                if self.visited[i / 64] & bit == 0 {
                    self.visited[i / 64] |= bit;
                    *unvisited -= 1;
                    if *unvisited == 0 {
                        covered_at = Some(steps);
                    }
                }
                h / 2
            } else {
                match self.trits.next(rng) {
                    0 => h / 2,
                    1 => 2 * h,
                    _ => 2 * h + 1,
                }
            };
            if next > h {
                if let Some(c) = self.counts.as_mut() {
                    c.slots_mut()[next as usize] += 1;
                }
            }
            steps += 1;
            h = next;
            if h == 0 {
                return Ok((steps, covered_at));
            }
            if steps_so_far + steps > self.cap {
                return Err(Error::CapExceeded(format!("walk on T_{} exceeded {} steps", self.n, self.cap)));
            }
        }
    }

    /// Walks `s` complete excursions; requires count storage.
    pub fn run_excursions<R: Rng + ?Sized>(&mut self, s: u64, rng: &mut R) -> Result<ExcursionRun> {
        if s == 0 {
            return Err(Error::Domain("need at least one excursion".into()));
        }
        if self.counts.is_none() {
            return Err(Error::Domain("engine was built without count storage".into()));
        }
        self.reset();
        let mut unvisited = 1u64 << self.n;
        let mut steps = 0u64;
        for _ in 0..s {
            steps += self.excursion(&mut unvisited, steps, rng)?.0;
        }
        Ok(ExcursionRun { counts: self.counts.clone().expect("checked above"), steps })
    }

    /// Walks until every vertex is visited, then finishes the current excursion.
    pub fn run_to_cover<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<CoverSample> {
        self.reset();
        let mut unvisited = 1u64 << self.n;
        let mut steps = 0u64;
        let mut t = 0u64;
        loop {
            t += 1;
            let (len, covered_at) = self.excursion(&mut unvisited, steps, rng)?;
            if let Some(at) = covered_at {
                return Ok(CoverSample {
                    n: self.n,
                    t_star: t,
                    cover_steps: Some(steps + at),
                    steps_at_s: Some(steps + len),
                    counts: self.counts.clone(),
                });
            }
            steps += len;
        }
    }
}

/// `s` excursions of replica `replica` under `cfg.seed`.
pub fn run_excursions(cfg: &WalkConfig, replica: u64) -> Result<ExcursionRun> {
    let WalkMode::FixedExcursions(s) = cfg.mode else {
        return Err(Error::Domain("run_excursions needs a fixed excursion count".into()));
    };
    let mut engine = SrwEngine::with_counts(cfg.n, DEFAULT_MEMORY_BUDGET)?;
    let mut rng = stream(cfg.seed, "walk", cfg.n as u64, replica);
    engine.run_excursions(s, &mut rng)
}

/// One cover run of replica `replica` under `cfg.seed`.
pub fn run_to_cover(cfg: &WalkConfig, replica: u64) -> Result<CoverSample> {
    let mut engine = SrwEngine::new(cfg.n)?;
    let mut rng = stream(cfg.seed, "cover", cfg.n as u64, replica);
    engine.run_to_cover(&mut rng)
}

/// `(√(C_n / 2^{n+1}) − m_n, √(2 t*) − m_n)`; the first entry is NaN without `C_n`.
pub fn normalized_cover(sample: &CoverSample) -> (f64, f64) {
    let m = m_n(sample.n);
    let c = sample.cover_steps.map(|c| (c as f64 / (sample.n as f64 + 1.0).exp2()).sqrt() - m).unwrap_or(f64::NAN);
    (c, (2.0 * sample.t_star as f64).sqrt() - m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{Proportion, SampleStats};
    use proptest::prelude::*;

    #[test]
    fn trits_are_uniform() {
        let mut rng = stream(1, "trit", 0, 0);
        let mut t = Trits::default();
        let mut c = [0u64; 3];
        for _ in 0..300_000 {
            c[t.next(&mut rng) as usize] += 1;
        }
        for k in c {
            let p = Proportion::wilson(k, 300_000);
            assert!((p.estimate - 1.0 / 3.0).abs() < 4.0 * p.std_err());
        }
    }

    #[test]
    fn depth_zero_walk() {
        let mut e = SrwEngine::with_counts(0, DEFAULT_MEMORY_BUDGET).unwrap();
        let mut rng = stream(2, "w", 0, 0);
        let run = e.run_excursions(5, &mut rng).unwrap();
        assert_eq!(run.steps, 10);
        assert_eq!(run.counts.leaves(), &[5]);
        let c = e.run_to_cover(&mut rng).unwrap();
        assert_eq!((c.t_star, c.cover_steps, c.steps_at_s), (1, Some(1), Some(2)));
    }

    #[test]
    fn step_accounting_and_root_edge() {
        let mut rng = stream(3, "w", 5, 0);
        let mut e = SrwEngine::with_counts(5, DEFAULT_MEMORY_BUDGET).unwrap();
        for s in [1, 4, 13] {
            let run = e.run_excursions(s, &mut rng).unwrap();
            assert_eq!(run.counts.roots(), s);
            assert_eq!(run.steps as u128, 2 * run.counts.total());
            assert!(run.counts.zero_closed());
        }
        let c = e.run_to_cover(&mut rng).unwrap();
        let counts = c.counts.as_ref().unwrap();
        assert_eq!(counts.roots(), c.t_star);
        assert_eq!(c.steps_at_s.unwrap() as u128, 2 * counts.total());
        assert!(c.cover_steps.unwrap() <= c.steps_at_s.unwrap());
        assert!(!counts.leaves().contains(&0));
    }

    #[test]
    fn leaf_hit_probability_per_excursion() {
        let mut rng = stream(4, "w", 3, 0);
        let mut e = SrwEngine::with_counts(3, DEFAULT_MEMORY_BUDGET).unwrap();
        let trials = 100_000u64;
        let hits = (0..trials).filter(|_| e.run_excursions(1, &mut rng).unwrap().counts.leaves()[6] > 0).count() as u64;
        let p = Proportion::wilson(hits, trials);
        assert!((p.estimate - 0.25).abs() < 4.0 * p.std_err());
    }

    #[test]
    fn mean_cover_time_depth_one() {
        // exact value 9 from the four-state first-step system
        let mut rng = stream(5, "w", 1, 0);
        let mut e = SrwEngine::new(1).unwrap();
        let xs: Vec<f64> =
            (0..200_000).map(|_| e.run_to_cover(&mut rng).unwrap().cover_steps.unwrap() as f64).collect();
        assert!(SampleStats::from_slice(&xs).z_score(9.0) < 4.0);
    }

    #[test]
    fn cap_is_an_error() {
        let mut rng = stream(6, "w", 6, 0);
        let mut e = SrwEngine::new(6).unwrap();
        e.set_step_cap(10);
        assert!(matches!(e.run_to_cover(&mut rng), Err(Error::CapExceeded(_))));
        assert!(SrwEngine::with_counts(20, 1 << 20).is_err());
    }

    #[test]
    fn normalization() {
        let n = 10;
        let m = m_n(n);
        let s = CoverSample {
            n,
            t_star: 62,
            cover_steps: Some(((n as f64 + 1.0).exp2() * m * m).round() as u64),
            steps_at_s: None,
            counts: None,
        };
        let (a, b) = normalized_cover(&s);
        assert!(a.abs() < 1e-3);
        assert!((b - 1.317_064_217_003_354_2).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn steps_are_twice_the_down_crossings(n in 0u32..7, s in 1u64..20, seed in 0u64..1000) {
            let mut e = SrwEngine::with_counts(n, DEFAULT_MEMORY_BUDGET).unwrap();
            let run = e.run_excursions(s, &mut stream(seed, "prop", n as u64, 0)).unwrap();
            prop_assert_eq!(run.steps as u128, 2 * run.counts.total());
            prop_assert_eq!(run.counts.by_heap(1), s);
            prop_assert!(run.counts.zero_closed());
        }
    }
}
