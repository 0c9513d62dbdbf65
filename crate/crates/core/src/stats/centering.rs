use serde::Serialize;

use crate::error::{Error, Result};

/// `c* = √(2 ln 2)`.
pub const C_STAR: f64 = 1.177_410_022_515_474_7;

/// Centering constants of depth `n`: `ρ_n = c* − ln n / (c* n)` and `m_n = ρ_n n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Centering {
    pub n: u32,
    pub rho: f64,
    pub m: f64,
    pub c_star: f64,
}

pub fn centering(n: u32) -> Result<Centering> {
    if n == 0 {
        return Err(Error::Domain("centering needs n >= 1".into()));
    }
    let nf = n as f64;
    let rho = C_STAR - nf.ln() / (C_STAR * nf);
    Ok(Centering { n, rho, m: rho * nf, c_star: C_STAR })
}

/// `m_n`, with the convention `m_0 = 0`.
pub fn m_n(n: u32) -> f64 {
    centering(n).map(|c| c.m).unwrap_or(0.0)
}

/// `ρ_n`, with the convention `ρ_0 = c*`.
pub fn rho_n(n: u32) -> f64 {
    centering(n).map(|c| c.rho).unwrap_or(C_STAR)
}

/// Real excursion horizon `s_{n,z} = (m_n + z)² / 2`.
pub fn s_nz(n: u32, z: f64) -> f64 {
    let x = m_n(n) + z;
    x * x / 2.0
}

/// Integer horizon used by the samplers: `⌊s_{n,z}⌋`, at least 1.
pub fn roots_for(n: u32, z: f64) -> u64 {
    (s_nz(n, z).floor() as u64).max(1)
}
