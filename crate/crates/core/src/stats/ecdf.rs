use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a sample came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub n: Option<u32>,
    pub kind: String,
    pub seeds: Option<(u64, u64)>,
}

/// A sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Data("sample contains NaN".into()));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(EmpiricalDistribution { values, provenance })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Provenance::default())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `P̂(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// `P̂(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v < x) as f64 / self.len() as f64
    }

    /// Number of values strictly above `x`.
    pub fn exceedances(&self, x: f64) -> usize {
        self.len() - self.values.partition_point(|&v| v <= x)
    }

    /// Lower empirical quantile; `quantile(0) = min`, `quantile(1) = max`.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let idx = ((q * self.len() as f64).ceil() as usize).max(1) - 1;
        self.values[idx.min(self.len() - 1)]
    }

    /// Distinct values in increasing order.
    pub fn support(&self) -> Vec<f64> {
        let mut out = self.values.clone();
        out.dedup();
        out
    }

    /// Largest gap between this ECDF and a continuous CDF.
    pub fn ks_against<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.len() as f64;
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < self.values.len() {
            let v = self.values[i];
            let mut j = i;
            while j < self.values.len() && self.values[j] == v {
                j += 1;
            }
            let f = cdf(v);
            d = d.max((f - i as f64 / n).abs()).max((f - j as f64 / n).abs());
            i = j;
        }
        d
    }
}

/// Kolmogorov distribution tail `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov statistic with its asymptotic p-value.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> KsResult {
    let (x, y) = (a.values(), b.values());
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] == v {
            i += 1;
        }
        while j < y.len() && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsResult { statistic: d, p_value: kolmogorov_q(lambda) }
}
