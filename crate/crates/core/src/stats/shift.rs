//! Comparison of cover-time and excursion-count laws through a Gaussian shift.
//!
//! If `√(C'_n) − m_n ⇒ Y'` and `√(2t*_n) − m_n ⇒ Y' − ḡ` with `ḡ ~ N(0, 1)`
//! independent of `Y'`, then subtracting fresh normals from the cover sample
//! should reproduce the `t*` law.

use rand::Rng;
use serde::Serialize;

use super::{ks_two_sample, EmpiricalDistribution, Provenance};
use crate::error::{Error, Result};
use crate::variates::standard_normal;

/// Standard deviation of the negative-control shift.
pub const CONTROL_SD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftReport {
    pub n: Option<u32>,
    pub statistic: f64,
    pub p_value: f64,
    /// Same comparison after subtracting `N(0, CONTROL_SD²)` instead.
    pub control_statistic: f64,
    pub control_p_value: f64,
    /// The wrong shift fits strictly worse.
    pub control_passed: bool,
}

fn shifted<R: Rng + ?Sized>(
    d: &EmpiricalDistribution,
    sd: f64,
    kind: &str,
    rng: &mut R,
) -> Result<EmpiricalDistribution> {
    let values = d.values().iter().map(|v| v - sd * standard_normal(rng)).collect();
    EmpiricalDistribution::new(values, Provenance { kind: kind.into(), ..d.provenance.clone() })
}

fn same_n(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Result<Option<u32>> {
    match (a.provenance.n, b.provenance.n) {
        (Some(x), Some(y)) if x != y => {
            Err(Error::Domain(format!("shift test needs one depth, got n = {x} and n = {y}")))
        }
        (x, y) => Ok(x.or(y)),
    }
}

pub fn shift_test<R: Rng + ?Sized>(
    cover: &EmpiricalDistribution,
    tstar: &EmpiricalDistribution,
    rng: &mut R,
) -> Result<ShiftReport> {
    let n = same_n(cover, tstar)?;
    let main = ks_two_sample(&shifted(cover, 1.0, "cover-shifted", rng)?, tstar);
    let control = ks_two_sample(&shifted(cover, CONTROL_SD, "cover-control", rng)?, tstar);
    Ok(ShiftReport {
        n,
        statistic: main.statistic,
        p_value: main.p_value,
        control_statistic: control.statistic,
        control_p_value: control.p_value,
        control_passed: control.statistic > main.statistic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityRow {
    pub n_from: u32,
    pub n_to: u32,
    pub statistic: f64,
    pub p_value: f64,
}

/// KS distances between consecutive samples, which must carry distinct depths.
pub fn cross_n_stability(samples: &[EmpiricalDistribution]) -> Result<Vec<StabilityRow>> {
    let depth = |d: &EmpiricalDistribution| {
        d.provenance.n.ok_or_else(|| Error::Data("stability samples need a recorded depth".into()))
    };
    samples
        .windows(2)
        .map(|w| {
            let ks = ks_two_sample(&w[0], &w[1]);
            Ok(StabilityRow {
                n_from: depth(&w[0])?,
                n_to: depth(&w[1])?,
                statistic: ks.statistic,
                p_value: ks.p_value,
            })
        })
        .collect()
}
