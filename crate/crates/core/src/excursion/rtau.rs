//! Total occupation `R_n^s`, level averages `S_k^ℓ` and the stopping time `τ_k(s)`.

use rand::Rng;
use serde::Serialize;

use super::{CountTree, SingleExcursionSampler};
use crate::error::{Error, Result};

/// Exact dyadic rational `num / 2^shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dyadic {
    pub num: u128,
    pub shift: u32,
}

impl Dyadic {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / (self.shift as f64).exp2()
    }
}

/// `R_n^s = 2^{-n} Σ_{u ∈ T_n} T^s_u`. The walk takes `2^{n+1} R_n^s` steps.
pub fn r_of(tree: &CountTree) -> Dyadic {
    Dyadic { num: tree.total(), shift: tree.depth() }
}

/// `S_k^s = 2^{-k} Σ_{u ∈ V_k} T^s_u`.
pub fn s_of(tree: &CountTree, k: u32) -> Dyadic {
    Dyadic { num: tree.level(k).iter().map(|&c| c as u128).sum(), shift: k }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RTau {
    pub tau: u64,
    /// `R_n^τ`
    pub r: Dyadic,
    /// `S_k^τ`
    pub s_k: Dyadic,
}

/// Draws excursions until `S_k^ℓ ≥ s_target` and reports `τ_k(s)` with
/// `R_n^τ` and `S_k^τ` at that moment.
pub fn r_and_tau<R: Rng + ?Sized>(n: u32, k: u32, s_target: f64, cap: u64, rng: &mut R) -> Result<RTau> {
    if k > n {
        return Err(Error::Domain(format!("level k = {k} exceeds depth {n}")));
    }
    let mut sampler = SingleExcursionSampler::new(n)?;
    let target = s_target * (k as f64).exp2();
    let (mut total, mut level_k, mut tau) = (0u128, 0u128, 0u64);
    while (level_k as f64) < target {
        if tau >= cap {
            return Err(Error::CapExceeded(format!("τ_{k}({s_target}) exceeded {cap} excursions")));
        }
        let tree = sampler.sample(rng);
        total += tree.total();
        level_k += tree.level(k).iter().map(|&c| c as u128).sum::<u128>();
        tau += 1;
    }
    Ok(RTau { tau, r: Dyadic { num: total, shift: n }, s_k: Dyadic { num: level_k, shift: k } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excursion::sample_counts;
    use crate::rng::stream;

    #[test]
    fn dyadic_values() {
        assert_eq!(Dyadic { num: 15, shift: 3 }.to_f64(), 1.875);
        let mut rng = stream(1, "r", 0, 0);
        let t = sample_counts(0, 5, &mut rng).unwrap();
        assert_eq!(r_of(&t), Dyadic { num: 5, shift: 0 });
        assert_eq!(s_of(&t, 0).to_f64(), 5.0);
    }

    #[test]
    fn tau_reaches_target_and_is_minimal_at_level_zero() {
        let mut rng = stream(2, "r", 6, 0);
        // S_0^ℓ = ℓ exactly
        let out = r_and_tau(6, 0, 17.0, 1000, &mut rng).unwrap();
        assert_eq!(out.tau, 17);
        assert_eq!(out.s_k.to_f64(), 17.0);
        let out = r_and_tau(6, 3, 10.0, 10_000, &mut rng).unwrap();
        assert!(out.s_k.to_f64() >= 10.0);
        assert!(r_and_tau(3, 4, 1.0, 10, &mut rng).is_err());
    }
}
