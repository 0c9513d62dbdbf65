//! Excursion cover time `t*_n`: single-excursion trees are drawn one at a time
//! until every leaf edge has been crossed at least once.
//!
//! Only uncovered leaves matter, so each excursion's DFS is pruned both at zero
//! counts and at subtrees whose leaves are all covered already. Subtrees of a
//! fixed excursion are independent, so the pruning does not change the law.

use rand::Rng;

use super::offspring_sum;
use crate::error::{Error, Result};

pub const DEFAULT_EXCURSION_CAP: u64 = 10_000_000;

/// Deepest tree for which the uncovered-leaf counters are allocated.
const MAX_TSTAR_DEPTH: u32 = 26;

#[derive(Debug, Clone)]
pub struct TStarSampler {
    depth: u32,
    cap: u64,
    uncovered: Vec<u32>,
    stack: Vec<(u32, u64)>,
}

impl TStarSampler {
    pub fn new(depth: u32) -> Result<Self> {
        Self::with_cap(depth, DEFAULT_EXCURSION_CAP)
    }

    pub fn with_cap(depth: u32, cap: u64) -> Result<Self> {
        if depth > MAX_TSTAR_DEPTH {
            return Err(Error::Resource(format!("t* sampling at depth {depth} exceeds the limit {MAX_TSTAR_DEPTH}")));
        }
        Ok(TStarSampler { depth, cap, uncovered: vec![0; 1usize << (depth + 1)], stack: Vec::new() })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    fn reset(&mut self) {
        let n = self.depth;
        for j in 0..=n {
            let lo = 1usize << j;
            let width = 1u32 << (n - j);
            self.uncovered[lo..2 * lo].iter_mut().for_each(|c| *c = width);
        }
    }

    fn cover_leaf(&mut self, mut h: usize) {
        while h >= 1 {
            self.uncovered[h] -= 1;
            h /= 2;
        }
    }

    /// Runs one excursion; returns the number of leaves newly covered.
    fn excursion<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u32 {
        let first_leaf = 1u32 << self.depth;
        let mut newly = 0;
        self.stack.push((1, 1));
        while let Some((h, t)) = self.stack.pop() {
            if self.uncovered[h as usize] == 0 {
                continue;
            }
            if h >= first_leaf {
                self.cover_leaf(h as usize);
                newly += 1;
                continue;
            }
            let pair = offspring_sum(t, rng);
            if pair.a > 0 {
                self.stack.push((2 * h, pair.a));
            }
            if pair.b > 0 {
                self.stack.push((2 * h + 1, pair.b));
            }
        }
        newly
    }

    /// One draw of `t*_n`.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<u64> {
        self.reset();
        let mut t = 0u64;
        while self.uncovered[1] > 0 {
            if t >= self.cap {
                return Err(Error::CapExceeded(format!("t* at depth {} exceeded {} excursions", self.depth, self.cap)));
            }
            t += 1;
            self.excursion(rng);
        }
        Ok(t)
    }

    /// Whether `t` excursions reach every leaf (`t*_n ≤ t`).
    pub fn covers_within<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> Result<bool> {
        self.reset();
        for _ in 0..t {
            self.excursion(rng);
            if self.uncovered[1] == 0 {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Excursion index at which each leaf is first reached, by leaf index.
    pub fn first_hits<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<u64>> {
        self.reset();
        let first_leaf = 1usize << self.depth;
        let mut hits = vec![0u64; first_leaf];
        let mut t = 0u64;
        while self.uncovered[1] > 0 {
            if t >= self.cap {
                return Err(Error::CapExceeded(format!("excursion cap {} reached", self.cap)));
            }
            t += 1;
            if self.excursion(rng) > 0 {
                for (i, hit) in hits.iter_mut().enumerate() {
                    if *hit == 0 && self.uncovered[first_leaf + i] == 0 {
                        *hit = t;
                    }
                }
            }
        }
        Ok(hits)
    }
}

/// One draw of `t*_n` with the default cap.
pub fn sample_t_star<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Result<u64> {
    TStarSampler::new(n)?.sample(rng)
}
