//! Fits of right tails of the form `P(X > z) ≈ α z e^{−c z}`.

use rand::Rng;
use serde::Serialize;

use super::EmpiricalDistribution;
use crate::error::{Error, Result};

pub const MIN_EXCEEDANCES: usize = 50;
pub const MIN_GRID_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub alpha: f64,
    pub c: f64,
    pub alpha_stderr: f64,
    pub c_stderr: f64,
    pub grid: Vec<f64>,
    pub exceedances: Vec<usize>,
}

fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return Err(Error::Accuracy("covariance of tail estimates is singular".into()));
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Ok(x)
}

/// Generalized least squares of `log P̂(>z) − log z = log α − c z` on the grid
/// `z_lo, z_lo + step, …, ≤ z_hi`.
///
/// The empirical tail values at different `z` share exceedances, so the fit
/// uses their exact multinomial covariance, `Cov(log P̂_i, log P̂_j) ≈ (1/p_i − 1)/N`
/// for `z_i ≤ z_j`. Every grid point needs at least [`MIN_EXCEEDANCES`].
pub fn tail_fit(d: &EmpiricalDistribution, z_lo: f64, z_hi: f64, step: f64) -> Result<TailFit> {
    if !(step > 0.0) || !(z_hi >= z_lo) || !(z_lo > 0.0) {
        return Err(Error::Domain(format!("bad tail window [{z_lo}, {z_hi}] step {step}")));
    }
    let total = d.len() as f64;
    let mut grid = Vec::new();
    let mut exceed = Vec::new();
    let mut z = z_lo;
    while z <= z_hi + 1e-9 {
        let e = d.exceedances(z);
        if e < MIN_EXCEEDANCES {
            break;
        }
        grid.push(z);
        exceed.push(e);
        z += step;
    }
    if grid.len() < MIN_GRID_POINTS {
        return Err(Error::Accuracy(format!(
            "tail window [{z_lo}, {z_hi}] has {} usable grid points (need {MIN_GRID_POINTS} with >= {MIN_EXCEEDANCES} exceedances each); draw more samples or lower the window",
            grid.len()
        )));
    }
    let p: Vec<f64> = exceed.iter().map(|&e| e as f64 / total).collect();
    let y: Vec<f64> = p.iter().zip(&grid).map(|(p, z)| p.ln() - z.ln()).collect();
    let k = grid.len();
    let cov: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| (1.0 / p[i.min(j)] - 1.0) / total).collect()).collect();
    // columns of the design: 1 and −z
    let w1 = cholesky_solve(&cov, &vec![1.0; k])?;
    let wz = cholesky_solve(&cov, &grid.iter().map(|z| -z).collect::<Vec<_>>())?;
    let a11: f64 = w1.iter().sum();
    let a12: f64 = wz.iter().sum();
    let a22: f64 = wz.iter().zip(&grid).map(|(w, z)| -w * z).sum();
    let b1: f64 = w1.iter().zip(&y).map(|(w, y)| w * y).sum();
    let b2: f64 = wz.iter().zip(&y).map(|(w, y)| w * y).sum();
    let det = a11 * a22 - a12 * a12;
    if det.abs() < 1e-300 {
        return Err(Error::Accuracy("degenerate tail design".into()));
    }
    let log_alpha = (a22 * b1 - a12 * b2) / det;
    let c = (a11 * b2 - a12 * b1) / det;
    let var_la = a22 / det;
    let var_c = a11 / det;
    let alpha = log_alpha.exp();
    Ok(TailFit { alpha, c, alpha_stderr: alpha * var_la.sqrt(), c_stderr: var_c.sqrt(), grid, exceedances: exceed })
}

/// Law with `P(X > z) = α z e^{−c z}` for `z ≥ z0` (`z0 ≥ 1/c`) and the
/// remaining mass uniform on `[z0 − 1, z0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactTail {
    pub alpha: f64,
    pub c: f64,
    pub z0: f64,
}

impl ExactTail {
    pub fn new(alpha: f64, c: f64, z0: f64) -> Result<Self> {
        let t = ExactTail { alpha, c, z0 };
        if !(c > 0.0 && alpha > 0.0 && z0 * c >= 1.0 && t.survival(z0) <= 1.0) {
            return Err(Error::Domain(format!("invalid exact tail ({alpha}, {c}, {z0})")));
        }
        Ok(t)
    }

    pub fn survival(&self, z: f64) -> f64 {
        if z >= self.z0 {
            self.alpha * z * (-self.c * z).exp()
        } else if z < self.z0 - 1.0 {
            1.0
        } else {
            let s0 = self.alpha * self.z0 * (-self.c * self.z0).exp();
            s0 + (1.0 - s0) * (self.z0 - z)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let s0 = self.survival(self.z0);
        if u > s0 {
            return self.z0 - (u - s0) / (1.0 - s0);
        }
        // survival is decreasing on [z0, ∞); bisect S(z) = u
        let (mut lo, mut hi) = (self.z0, self.z0 + 1.0);
        while self.survival(hi) > u {
            hi = lo + 2.0 * (hi - lo);
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid) > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::centering::C_STAR;

    #[test]
    fn recovers_injected_parameters() {
        for (i, &(alpha, c, z0)) in [(1.0, C_STAR, 1.0), (0.5, 1.0, 1.0), (2.0, 1.5, 1.2)].iter().enumerate() {
            let law = ExactTail::new(alpha, c, z0).unwrap();
            let mut rng = stream(31, "tail", 0, i as u64);
            let xs: Vec<f64> = (0..200_000).map(|_| law.sample(&mut rng)).collect();
            let d = EmpiricalDistribution::from_values(xs).unwrap();
            let fit = tail_fit(&d, z0, z0 + 4.0, 0.25).unwrap();
            assert!((fit.c - c).abs() < 2.0 * fit.c_stderr + 1e-9, "c: {fit:?}");
            assert!((fit.alpha - alpha).abs() < 2.0 * fit.alpha_stderr, "alpha: {fit:?}");
        }
    }

    #[test]
    fn empty_window_is_an_error() {
        let d = EmpiricalDistribution::from_values(vec![0.1; 100]).unwrap();
        assert!(matches!(tail_fit(&d, 1.0, 3.0, 0.25), Err(Error::Accuracy(_))));
        assert!(tail_fit(&d, 3.0, 1.0, 0.25).is_err());
    }

    #[test]
    fn exact_tail_survival_is_monotone() {
        let law = ExactTail::new(1.0, C_STAR, 1.0).unwrap();
        let zs: Vec<f64> = (0..100).map(|i| -0.5 + i as f64 * 0.1).collect();
        assert!(zs.windows(2).all(|w| law.survival(w[1]) <= law.survival(w[0])));
        assert!(ExactTail::new(1.0, C_STAR, 0.5).is_err());
    }
}
