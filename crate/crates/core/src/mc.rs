//! Monte Carlo summaries: compensated moments, binomial intervals and
//! categorical two-sample tests.

use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut s = CompensatedSum::default();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Mean, variance and standard error of a sample, computed in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
}

impl SampleStats {
    pub fn from_slice(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return SampleStats { count, mean: f64::NAN, variance: f64::NAN };
        }
        let mean = compensated_sum(xs.iter().copied()) / count as f64;
        let variance = if count > 1 {
            compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (count as f64 - 1.0)
        } else {
            0.0
        };
        SampleStats { count, mean, variance }
    }

    pub fn std_err(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    /// Standard error of the sample variance, from the fourth central moment.
    pub fn variance_std_err(xs: &[f64]) -> f64 {
        let s = Self::from_slice(xs);
        let n = xs.len() as f64;
        let m4 = compensated_sum(xs.iter().map(|x| (x - s.mean).powi(4))) / n;
        ((m4 - s.variance * s.variance).max(0.0) / n).sqrt()
    }

    /// `|mean - target| / stderr`.
    pub fn z_score(&self, target: f64) -> f64 {
        let se = self.std_err();
        if se == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target).abs() / se
        }
    }
}

/// Sample covariance with a delta-method standard error.
pub fn covariance(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = compensated_sum(xs.iter().copied()) / n;
    let my = compensated_sum(ys.iter().copied()) / n;
    let products: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let s = SampleStats::from_slice(&products);
    (s.mean * n / (n - 1.0), s.std_err())
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (c, _) = covariance(xs, ys);
    let vx = SampleStats::from_slice(xs).variance;
    let vy = SampleStats::from_slice(ys).variance;
    c / (vx * vy).sqrt()
}

/// A Monte Carlo probability estimate with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// `true` when no hits were observed; `upper` is then a one-sided bound.
    pub one_sided: bool,
}

impl Proportion {
    pub fn wilson(hits: u64, trials: u64) -> Self {
        assert!(trials > 0, "no trials");
        let n = trials as f64;
        let p = hits as f64 / n;
        if hits == 0 {
            // one-sided 95%: solve the Wilson bound with z = 1.645
            let z = 1.644_853_626_951_472_2;
            let upper = z * z / (n + z * z);
            return Proportion { hits, trials, estimate: 0.0, lower: 0.0, upper, one_sided: true };
        }
        let z = Z95;
        let denom = 1.0 + z * z / n;
        let centre = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        Proportion {
            hits,
            trials,
            estimate: p,
            lower: (centre - half).max(0.0),
            upper: (centre + half).min(1.0),
            one_sided: false,
        }
    }

    pub fn std_err(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

/// Outcome of a chi-square homogeneity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test on categorical samples.
///
/// Categories whose pooled expected count in either sample falls below
/// `min_expected` are merged into one overflow cell (dropped if still too small).
pub fn chi_square_two_sample<K: Eq + Hash + Clone>(a: &[K], b: &[K], min_expected: f64) -> ChiSquareResult {
    let mut table: HashMap<K, (u64, u64)> = HashMap::new();
    for k in a {
        table.entry(k.clone()).or_default().0 += 1;
    }
    for k in b {
        table.entry(k.clone()).or_default().1 += 1;
    }
    chi_square_from_table(table.into_values().collect(), a.len(), b.len(), min_expected)
}

/// Homogeneity test from paired category counts.
pub fn chi_square_from_table(mut cells: Vec<(u64, u64)>, na: usize, nb: usize, min_expected: f64) -> ChiSquareResult {
    let (na, nb) = (na as f64, nb as f64);
    let total = na + nb;
    let small = |c: &(u64, u64)| {
        let pooled = (c.0 + c.1) as f64;
        pooled * na.min(nb) / total < min_expected
    };
    cells.sort_unstable();
    let mut kept: Vec<(u64, u64)> = cells.iter().filter(|c| !small(c)).copied().collect();
    let overflow = cells.iter().filter(|c| small(c)).fold((0u64, 0u64), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    if !small(&overflow) {
        kept.push(overflow);
    }
    let mut stat = CompensatedSum::default();
    for &(x, y) in &kept {
        let pooled = (x + y) as f64;
        let ea = pooled * na / total;
        let eb = pooled * nb / total;
        stat.add((x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb);
    }
    let dof = kept.len().saturating_sub(1);
    let statistic = stat.value();
    let p_value = if dof == 0 {
        1.0
    } else {
        let d = ChiSquared::new(dof as f64).expect("positive dof");
        1.0 - d.cdf(statistic)
    };
    ChiSquareResult { statistic, dof, p_value }
}
