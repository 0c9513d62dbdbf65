//! Sample files, run configuration and the commands behind the `covertree` binary.
//!
//! Samples are CSV rows ([`SampleRow`]) keyed by `(kind, n, seed, replica)`.
//! Every row is drawn from its own stream, so any replica range can be
//! regenerated, resumed or split across workers without changing a byte.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bessel::gamma_tilde_grid;
use crate::brw::sample_brw;
use crate::error::{Error, Result};
use crate::excursion::{count_lambda_gamma, sample_counts, BarrierParams, TStarSampler, DEFAULT_EXCURSION_CAP};
use crate::rng::{run_chunked, stream};
use crate::srw::SrwEngine;
use crate::stats::centering::{m_n, C_STAR};
use crate::stats::{
    cross_n_stability, mixture_cdf_fit, shift_test, tail_fit, EmpiricalDistribution, MixtureCdf, MixtureFit,
    Provenance, ShiftReport, StabilityRow, TailFit,
};
use crate::verify::VerifyConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default directory for sample files.
pub const DATA_DIR_ENV: &str = "COVERTREE_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Cover,
    Tstar,
    BrwXprime,
    Event,
    GammaTilde,
}

impl SampleKind {
    pub const ALL: [SampleKind; 5] =
        [SampleKind::Cover, SampleKind::Tstar, SampleKind::BrwXprime, SampleKind::Event, SampleKind::GammaTilde];

    pub fn name(&self) -> &'static str {
        match self {
            SampleKind::Cover => "cover",
            SampleKind::Tstar => "tstar",
            SampleKind::BrwXprime => "brw_xprime",
            SampleKind::Event => "event",
            SampleKind::GammaTilde => "gamma_tilde",
        }
    }
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SampleKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sample kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    #[default]
    Ok,
    CapExceeded,
    Overflow,
}

/// One line of a sample file. Value columns not produced by a kind stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub schema_version: u32,
    pub kind: SampleKind,
    pub n: u32,
    pub ell: Option<u32>,
    pub z: Option<f64>,
    pub replica: u64,
    pub seed: u64,
    pub status: RowStatus,
    pub t_star: Option<u64>,
    pub cover_steps: Option<u64>,
    pub steps_at_s: Option<u64>,
    pub xprime: Option<f64>,
    pub gbar: Option<f64>,
    pub x: Option<f64>,
    pub lambda: Option<u64>,
    pub gamma: Option<u64>,
    pub eta_sharp_zero: Option<bool>,
    pub g_event: Option<bool>,
    pub y: Option<f64>,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub replicas: Option<u64>,
}

/// Identity of a row within and across files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey {
    pub kind: SampleKind,
    pub n: u32,
    pub seed: u64,
    pub replica: u64,
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, n={}, seed={}, replica={})", self.kind, self.n, self.seed, self.replica)
    }
}

impl SampleRow {
    pub fn new(kind: SampleKind, n: u32, seed: u64, replica: u64) -> Self {
        SampleRow {
            schema_version: SCHEMA_VERSION,
            kind,
            n,
            ell: None,
            z: None,
            replica,
            seed,
            status: RowStatus::Ok,
            t_star: None,
            cover_steps: None,
            steps_at_s: None,
            xprime: None,
            gbar: None,
            x: None,
            lambda: None,
            gamma: None,
            eta_sharp_zero: None,
            g_event: None,
            y: None,
            estimate: None,
            stderr: None,
            replicas: None,
        }
    }

    pub fn key(&self) -> RowKey {
        RowKey { kind: self.kind, n: self.n, seed: self.seed, replica: self.replica }
    }

    /// `√(C_n / 2^{n+1}) − m_n` for cover rows, `√(2 t*) − m_n` for `t*` rows.
    pub fn normalized(&self) -> Option<f64> {
        if self.status != RowStatus::Ok {
            return None;
        }
        let m = m_n(self.n);
        match self.kind {
            SampleKind::Cover => self.cover_steps.map(|c| (c as f64 / (self.n as f64 + 1.0).exp2()).sqrt() - m),
            SampleKind::Tstar => self.t_star.map(|t| (2.0 * t as f64).sqrt() - m),
            _ => None,
        }
    }
}

pub fn read_rows(path: &Path) -> Result<Vec<SampleRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows = reader.deserialize().collect::<std::result::Result<Vec<SampleRow>, _>>()?;
    if let Some(r) = rows.iter().find(|r| r.schema_version != SCHEMA_VERSION) {
        return Err(Error::Data(format!(
            "{}: schema version {} (expected {SCHEMA_VERSION})",
            path.display(),
            r.schema_version
        )));
    }
    Ok(rows)
}

/// Writes rows sorted by key through a temporary file, so readers never see a partial file.
pub fn write_rows(path: &Path, rows: &[SampleRow]) -> Result<()> {
    let mut sorted: Vec<&SampleRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.key());
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        for r in sorted {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Acceptance thresholds for `fit` and `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub stability_ks: f64,
    pub mixture_ks: f64,
    pub shift_ks: f64,
    pub c_band: (f64, f64),
    pub tail_window: (f64, f64),
    pub tail_step: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            stability_ks: 0.05,
            mixture_ks: 0.05,
            shift_ks: 0.06,
            c_band: (1.0, 1.35),
            tail_window: (1.0, 3.5),
            tail_step: 0.25,
        }
    }
}

/// Everything a command needs; loadable from TOML or JSON and overridable by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kind: Option<SampleKind>,
    pub n: Option<u32>,
    pub ell: Option<u32>,
    pub z: Option<f64>,
    /// `y` grid of `gamma_tilde` rows.
    pub ys: Vec<f64>,
    pub replicas: u64,
    /// First replica index, for resuming or splitting a run.
    pub start: u64,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub delta: f64,
    pub excursion_cap: u64,
    pub step_cap: Option<u64>,
    /// Deepest tree walked step by step.
    pub max_walk_depth: u32,
    /// Deepest tree whose full count field is materialized.
    pub max_tree_depth: u32,
    pub thresholds: Thresholds,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: None,
            n: None,
            ell: None,
            z: None,
            ys: (0..=16).map(|i| i as f64 * 0.5).collect(),
            replicas: 1000,
            start: 0,
            seed: 1,
            workers: crate::rng::default_workers(),
            out: None,
            data_dir: None,
            delta: crate::excursion::DEFAULT_DELTA,
            excursion_cap: DEFAULT_EXCURSION_CAP,
            step_cap: None,
            max_walk_depth: 12,
            max_tree_depth: 16,
            thresholds: Thresholds::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads `.toml` or `.json` by extension.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(serde_json::from_str(&text)?),
            Some("toml") => toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
            _ => Err(Error::Config(format!("{}: expected a .toml or .json file", path.display()))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0 / 6.0) {
            return Err(Error::Config(format!("delta = {} outside (0, 1/6)", self.delta)));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    fn need_n(&self) -> Result<u32> {
        self.n.ok_or_else(|| Error::Config("--n is required".into()))
    }

    fn need_ell(&self) -> Result<u32> {
        self.ell.ok_or_else(|| Error::Config("--ell is required".into()))
    }

    fn need_z(&self) -> Result<f64> {
        self.z.ok_or_else(|| Error::Config("--z is required".into()))
    }

    /// `--out`, else `<data dir>/<kind>_n<n>[_l<ell>][_z<z>]_s<seed>.csv`.
    pub fn output_path(&self, kind: SampleKind) -> Result<PathBuf> {
        if let Some(p) = &self.out {
            return Ok(p.clone());
        }
        let dir = self
            .data_dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data"));
        let mut name = format!("{kind}_n{}", self.n.unwrap_or(0));
        if let Some(l) = self.ell {
            name.push_str(&format!("_l{l}"));
        }
        if let Some(z) = self.z {
            name.push_str(&format!("_z{z}"));
        }
        name.push_str(&format!("_s{}.csv", self.seed));
        Ok(dir.join(name))
    }
}

fn capped(row: &mut SampleRow, err: Error) -> Result<()> {
    match err {
        Error::CapExceeded(_) => row.status = RowStatus::CapExceeded,
        Error::Overflow(_) => row.status = RowStatus::Overflow,
        other => return Err(other),
    }
    Ok(())
}

/// Rows of one kind for replicas `start..start + replicas`, in replica order.
pub fn generate_rows(kind: SampleKind, cfg: &RunConfig, replicas: &[u64]) -> Result<Vec<SampleRow>> {
    let seed = cfg.seed;
    match kind {
        SampleKind::Cover => {
            let n = cfg.need_n()?;
            if n > cfg.max_walk_depth {
                return Err(Error::Resource(format!(
                    "direct stepping is limited to n <= {} (got {n})",
                    cfg.max_walk_depth
                )));
            }
            run_chunked(
                cfg.workers,
                replicas.len() as u64,
                100,
                || {
                    let mut e = SrwEngine::new(n)?;
                    if let Some(cap) = cfg.step_cap {
                        e.set_step_cap(cap);
                    }
                    Ok(e)
                },
                |engine, i| {
                    let r = replicas[i as usize];
                    let mut row = SampleRow::new(kind, n, seed, r);
                    match engine.run_to_cover(&mut stream(seed, "cover", n as u64, r)) {
                        Ok(s) => {
                            row.t_star = Some(s.t_star);
                            row.cover_steps = s.cover_steps;
                            row.steps_at_s = s.steps_at_s;
                        }
                        Err(e) => capped(&mut row, e)?,
                    }
                    Ok(row)
                },
            )
        }
        SampleKind::Tstar => {
            let n = cfg.need_n()?;
            run_chunked(
                cfg.workers,
                replicas.len() as u64,
                500,
                || TStarSampler::with_cap(n, cfg.excursion_cap),
                |s, i| {
                    let r = replicas[i as usize];
                    let mut row = SampleRow::new(kind, n, seed, r);
                    match s.sample(&mut stream(seed, "tstar", n as u64, r)) {
                        Ok(t) => row.t_star = Some(t),
                        Err(e) => capped(&mut row, e)?,
                    }
                    Ok(row)
                },
            )
        }
        SampleKind::BrwXprime => {
            let k = cfg.need_n()?;
            run_chunked(
                cfg.workers,
                replicas.len() as u64,
                50,
                || Ok(()),
                |_, i| {
                    let r = replicas[i as usize];
                    let f = sample_brw(k, &mut stream(seed, "brw_xprime", k as u64, r))?;
                    let mut row = SampleRow::new(kind, k, seed, r);
                    row.xprime = Some(f.x_prime);
                    row.gbar = Some(f.gbar_k());
                    row.x = Some(f.x);
                    Ok(row)
                },
            )
        }
        SampleKind::Event => {
            let n = cfg.need_n()?;
            if n > cfg.max_tree_depth {
                return Err(Error::Resource(format!(
                    "full count trees are limited to n <= {} (got {n})",
                    cfg.max_tree_depth
                )));
            }
            let p = BarrierParams::with_delta(n, cfg.need_ell()?, cfg.need_z()?, cfg.delta)?;
            run_chunked(
                cfg.workers,
                replicas.len() as u64,
                500,
                || Ok(()),
                |_, i| {
                    let r = replicas[i as usize];
                    let mut row = SampleRow::new(kind, n, seed, r);
                    row.ell = Some(p.ell);
                    row.z = Some(p.z);
                    let tree = sample_counts(n, p.roots(), &mut stream(seed, "event", n as u64, r))?;
                    match count_lambda_gamma(&tree, &p) {
                        Ok(c) => {
                            row.lambda = Some(c.lambda);
                            row.gamma = Some(c.gamma);
                            row.eta_sharp_zero = Some(c.eta_sharp_zero);
                            row.g_event = Some(c.g_event);
                        }
                        Err(e) => capped(&mut row, e)?,
                    }
                    Ok(row)
                },
            )
        }
        SampleKind::GammaTilde => {
            let ell = cfg.need_ell()?;
            let ys: Vec<f64> = replicas
                .iter()
                .map(|&r| {
                    cfg.ys.get(r as usize).copied().ok_or_else(|| {
                        Error::Config(format!("gamma_tilde replica {r} has no y (grid has {} points)", cfg.ys.len()))
                    })
                })
                .collect::<Result<_>>()?;
            // each y draws from its own seed offset, so rows are independent of the grid subset
            let mut out = Vec::with_capacity(ys.len());
            for (&r, &y) in replicas.iter().zip(&ys) {
                let est = gamma_tilde_grid(ell, &[y], cfg.replicas, seed.wrapping_add(r), cfg.workers)?;
                let mut row = SampleRow::new(kind, ell, seed, r);
                row.ell = Some(ell);
                row.y = Some(y);
                row.estimate = Some(est[0].estimate);
                row.stderr = Some(est[0].stderr);
                row.replicas = Some(est[0].replicas);
                out.push(row);
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub path: PathBuf,
    pub kind: SampleKind,
    pub generated: usize,
    /// Requested replicas already present in the file.
    pub resumed: usize,
    pub capped: usize,
    pub total_rows: usize,
}

fn same_setting(a: &SampleRow, b: &SampleRow) -> bool {
    a.ell == b.ell && a.z.map(f64::to_bits) == b.z.map(f64::to_bits) && a.y.map(f64::to_bits) == b.y.map(f64::to_bits)
}

/// Draws the requested replicas of `kind`, keeping rows already in the output file.
///
/// Rows present with the same key but different `(ell, z, y)` are a conflict.
pub fn simulate(kind: SampleKind, cfg: &RunConfig) -> Result<SimulateSummary> {
    cfg.validate()?;
    let path = cfg.output_path(kind)?;
    let existing = if path.exists() { read_rows(&path)? } else { Vec::new() };
    let index: BTreeMap<RowKey, &SampleRow> = existing.iter().map(|r| (r.key(), r)).collect();
    if index.len() != existing.len() {
        return Err(Error::Conflict(format!("{} contains duplicate keys", path.display())));
    }
    let range: Vec<u64> = match kind {
        SampleKind::GammaTilde => (0..cfg.ys.len() as u64).collect(),
        _ => (cfg.start..cfg.start + cfg.replicas).collect(),
    };
    let n = match kind {
        SampleKind::GammaTilde => cfg.need_ell()?,
        _ => cfg.need_n()?,
    };
    let missing: Vec<u64> = range
        .iter()
        .copied()
        .filter(|&r| !index.contains_key(&RowKey { kind, n, seed: cfg.seed, replica: r }))
        .collect();
    let fresh = generate_rows(kind, cfg, &missing)?;
    // a resumed run must agree with the rows it keeps
    let probe = fresh.first().cloned().unwrap_or_else(|| {
        let mut p = SampleRow::new(kind, n, cfg.seed, 0);
        p.ell = if kind == SampleKind::Event || kind == SampleKind::GammaTilde { cfg.ell } else { None };
        p.z = if kind == SampleKind::Event { cfg.z } else { None };
        p
    });
    for &r in &range {
        if let Some(old) = index.get(&RowKey { kind, n, seed: cfg.seed, replica: r }) {
            let mut want = probe.clone();
            if kind == SampleKind::GammaTilde {
                want.y = cfg.ys.get(r as usize).copied();
            }
            if !same_setting(old, &want) {
                return Err(Error::Conflict(format!(
                    "{} already holds {} with ell={:?} z={:?} y={:?}",
                    path.display(),
                    old.key(),
                    old.ell,
                    old.z,
                    old.y
                )));
            }
        }
    }
    let resumed = range.len() - missing.len();
    let capped = fresh.iter().filter(|r| r.status != RowStatus::Ok).count();
    let generated = fresh.len();
    let mut all = existing;
    all.extend(fresh);
    write_rows(&path, &all)?;
    Ok(SimulateSummary { path, kind, generated, resumed, capped, total_rows: all.len() })
}

/// Concatenates sample files; any key present twice is rejected, so merging a
/// file with itself fails and merging disjoint files is order independent.
pub fn merge(inputs: &[PathBuf], out: &Path) -> Result<usize> {
    let mut seen: BTreeMap<RowKey, PathBuf> = BTreeMap::new();
    let mut rows = Vec::new();
    for p in inputs {
        for r in read_rows(p)? {
            if let Some(first) = seen.insert(r.key(), p.clone()) {
                return Err(Error::Conflict(format!(
                    "duplicate row {} in {} and {}",
                    r.key(),
                    first.display(),
                    p.display()
                )));
            }
            rows.push(r);
        }
    }
    write_rows(out, &rows)?;
    Ok(rows.len())
}

/// Normalized values of a file: cover or `t*` rows of a single depth, or a
/// plain CSV with one `value` column.
pub fn load_distribution(path: &Path) -> Result<EmpiricalDistribution> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() == 1 && &headers[0] == "value" {
        let values = reader
            .records()
            .map(|r| {
                let r = r?;
                r[0].trim().parse::<f64>().map_err(|e| Error::Data(format!("{}: {e}", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        return EmpiricalDistribution::new(values, Provenance { n: None, kind: "value".into(), seeds: None });
    }
    let rows = read_rows(path)?;
    let first = rows.first().ok_or_else(|| Error::Data(format!("{} is empty", path.display())))?;
    let (kind, n) = (first.kind, first.n);
    if rows.iter().any(|r| r.kind != kind || r.n != n) {
        return Err(Error::Data(format!("{} mixes kinds or depths", path.display())));
    }
    if !matches!(kind, SampleKind::Cover | SampleKind::Tstar) {
        return Err(Error::Data(format!("{} holds {kind} rows, not cover or tstar", path.display())));
    }
    let values: Vec<f64> = rows.iter().filter_map(SampleRow::normalized).collect();
    let seeds = rows.iter().map(|r| r.seed).fold((u64::MAX, 0), |(lo, hi), s| (lo.min(s), hi.max(s)));
    EmpiricalDistribution::new(values, Provenance { n: Some(n), kind: kind.to_string(), seeds: Some(seeds) })
}

/// `(X'_k, ḡ_k)` pairs of a `brw_xprime` file.
pub fn load_xprime(path: &Path) -> Result<Vec<(f64, f64)>> {
    let rows = read_rows(path)?;
    if rows.is_empty() || rows.iter().any(|r| r.kind != SampleKind::BrwXprime) {
        return Err(Error::Data(format!("{} must hold brw_xprime rows only", path.display())));
    }
    rows.iter()
        .map(|r| match (r.xprime, r.gbar) {
            (Some(x), Some(g)) => Ok((x, g)),
            _ => Err(Error::Data(format!("row {} lacks xprime or gbar", r.key()))),
        })
        .collect()
}

/// Mixing variable of the mixture: `X'` for cover samples and `X' e^{−c* ḡ}`
/// for `t*` samples, whose law carries the extra Gaussian shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mixing {
    Xprime,
    Shifted,
}

impl FromStr for Mixing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xprime" => Ok(Mixing::Xprime),
            "shifted" => Ok(Mixing::Shifted),
            _ => Err(Error::Config(format!("unknown mixing {s:?} (xprime or shifted)"))),
        }
    }
}

pub fn mixing_values(pairs: &[(f64, f64)], mixing: Mixing) -> Vec<f64> {
    match mixing {
        Mixing::Xprime => pairs.iter().map(|p| p.0).collect(),
        Mixing::Shifted => pairs.iter().map(|p| p.0 * (-C_STAR * p.1).exp()).collect(),
    }
}

fn default_mixing(d: &EmpiricalDistribution) -> Mixing {
    if d.provenance.kind == "tstar" {
        Mixing::Shifted
    } else {
        Mixing::Xprime
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub input: PathBuf,
    pub n: Option<u32>,
    pub samples: usize,
    pub fit: TailFit,
    pub c_band: (f64, f64),
    pub passed: bool,
}

pub fn fit_tail(input: &Path, cfg: &RunConfig) -> Result<TailReport> {
    let d = load_distribution(input)?;
    let t = &cfg.thresholds;
    let fit = tail_fit(&d, t.tail_window.0, t.tail_window.1, t.tail_step)?;
    let passed = (t.c_band.0..=t.c_band.1).contains(&fit.c);
    Ok(TailReport { input: input.to_path_buf(), n: d.provenance.n, samples: d.len(), fit, c_band: t.c_band, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureReport {
    pub input: PathBuf,
    pub xprime: PathBuf,
    pub n: Option<u32>,
    pub samples: usize,
    pub mixing: Mixing,
    pub fit: MixtureFit,
    pub max_ks: f64,
    pub passed: bool,
}

pub fn fit_mixture(input: &Path, xprime: &Path, mixing: Option<Mixing>, cfg: &RunConfig) -> Result<MixtureReport> {
    let d = load_distribution(input)?;
    let pairs = load_xprime(xprime)?;
    let mixing = mixing.unwrap_or_else(|| default_mixing(&d));
    let fit = mixture_cdf_fit(&d, &mixing_values(&pairs, mixing), C_STAR)?;
    let passed = fit.ks <= cfg.thresholds.mixture_ks;
    Ok(MixtureReport {
        input: input.to_path_buf(),
        xprime: xprime.to_path_buf(),
        n: d.provenance.n,
        samples: d.len(),
        mixing,
        fit,
        max_ks: cfg.thresholds.mixture_ks,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub max_ks: f64,
    /// Consecutive distances never grow by more than two KS noise widths.
    pub monotone_or_flat: bool,
    pub passed: bool,
}

pub fn report_stability(inputs: &[PathBuf], cfg: &RunConfig) -> Result<StabilityReport> {
    let mut ds = inputs.iter().map(|p| load_distribution(p)).collect::<Result<Vec<_>>>()?;
    ds.sort_by_key(|d| d.provenance.n);
    let rows = cross_n_stability(&ds)?;
    let smallest = ds.iter().map(|d| d.len()).min().unwrap_or(1) as f64;
    let noise = 2.0 * (2.0 / smallest).sqrt();
    let monotone_or_flat = rows.windows(2).all(|w| w[1].statistic <= w[0].statistic + noise);
    let max_ks = cfg.thresholds.stability_ks;
    let passed = monotone_or_flat && rows.iter().all(|r| r.statistic <= max_ks);
    Ok(StabilityReport { rows, max_ks, monotone_or_flat, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSummary {
    pub report: ShiftReport,
    pub max_ks: f64,
    pub passed: bool,
}

pub fn report_shift(cover: &Path, tstar: &Path, cfg: &RunConfig) -> Result<ShiftSummary> {
    let c = load_distribution(cover)?;
    let t = load_distribution(tstar)?;
    let mut rng = stream(cfg.seed, "shift", c.provenance.n.unwrap_or(0) as u64, 0);
    let report = shift_test(&c, &t, &mut rng)?;
    let passed = report.statistic <= cfg.thresholds.shift_ks && report.control_passed;
    Ok(ShiftSummary { report, max_ks: cfg.thresholds.shift_ks, passed })
}

/// Tidy `(y, ecdf, mixture_cdf)` rows on a uniform grid over the sample range,
/// with `α` fitted as in [`fit_mixture`].
pub fn write_plot(
    input: &Path,
    xprime: &Path,
    mixing: Option<Mixing>,
    points: usize,
    out: &Path,
) -> Result<MixtureFit> {
    let d = load_distribution(input)?;
    let pairs = load_xprime(xprime)?;
    let xs = mixing_values(&pairs, mixing.unwrap_or_else(|| default_mixing(&d)));
    let fit = mixture_cdf_fit(&d, &xs, C_STAR)?;
    let mix = MixtureCdf::new(fit.alpha, C_STAR, &xs)?;
    let (lo, hi) = (d.quantile(0.0) - 1.0, d.quantile(1.0) + 1.0);
    let points = points.max(2);
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["y", "ecdf", "mixture_cdf"])?;
    for i in 0..points {
        let y = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        w.write_record([y.to_string(), d.cdf(y).to_string(), mix.cdf(y).to_string()])?;
    }
    w.flush()?;
    Ok(fit)
}

/// Common frame of every JSON report: the verdict, its headline statistic,
/// the thresholds in force and the seeds of the input rows.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub test: &'a str,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub passed: bool,
    pub config: &'a Thresholds,
    pub seeds: Vec<u64>,
    pub detail: &'a T,
}

/// Distinct seeds of the rows in `paths`; plain `value` files contribute none.
pub fn file_seeds(paths: &[&Path]) -> Vec<u64> {
    let mut seeds: Vec<u64> =
        paths.iter().filter_map(|p| read_rows(p).ok()).flat_map(|rows| rows.into_iter().map(|r| r.seed)).collect();
    seeds.sort_unstable();
    seeds.dedup();
    seeds
}

/// Pretty JSON to `out` or stdout.
pub fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(dir: &Path, file: &str) -> RunConfig {
        RunConfig { out: Some(dir.join(file)), workers: 2, replicas: 50, seed: 7, ..Default::default() }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SampleKind::ALL {
            assert_eq!(k.name().parse::<SampleKind>().unwrap(), k);
        }
    }

    #[test]
    fn delta_is_validated() {
        let bad = RunConfig { delta: 0.2, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let zero = RunConfig { replicas: 0, ..Default::default() };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn depth_zero_cover_rows() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig { n: Some(0), ..cfg(dir.path(), "c.csv") };
        simulate(SampleKind::Cover, &c).unwrap();
        let rows = read_rows(&dir.path().join("c.csv")).unwrap();
        assert_eq!(rows.len(), 50);
        assert!(rows.iter().all(|r| r.t_star == Some(1) && r.cover_steps == Some(1)));
    }

    #[test]
    fn resume_and_conflict() {
        let dir = tempfile::tempdir().unwrap();
        let base = RunConfig { n: Some(8), ell: Some(3), z: Some(1.0), replicas: 20, ..cfg(dir.path(), "e.csv") };
        simulate(SampleKind::Event, &base).unwrap();
        let whole = dir.path().join("whole.csv");
        simulate(SampleKind::Event, &RunConfig { replicas: 40, out: Some(whole.clone()), ..base.clone() }).unwrap();
        let s = simulate(SampleKind::Event, &RunConfig { replicas: 40, ..base.clone() }).unwrap();
        assert_eq!((s.generated, s.resumed), (20, 20));
        assert_eq!(fs::read(&whole).unwrap(), fs::read(dir.path().join("e.csv")).unwrap());
        let clash = RunConfig { z: Some(2.0), ..base };
        assert!(matches!(simulate(SampleKind::Event, &clash), Err(Error::Conflict(_))));
    }

    #[test]
    fn merge_rules() {
        let dir = tempfile::tempdir().unwrap();
        let a = RunConfig { n: Some(5), ..cfg(dir.path(), "a.csv") };
        let b = RunConfig { start: 50, ..a.clone() };
        let b = RunConfig { out: Some(dir.path().join("b.csv")), ..b };
        simulate(SampleKind::Tstar, &a).unwrap();
        simulate(SampleKind::Tstar, &b).unwrap();
        let (pa, pb) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        let (ab, ba) = (dir.path().join("ab.csv"), dir.path().join("ba.csv"));
        assert_eq!(merge(&[pa.clone(), pb.clone()], &ab).unwrap(), 100);
        merge(&[pb, pa.clone()], &ba).unwrap();
        assert_eq!(fs::read(&ab).unwrap(), fs::read(&ba).unwrap());
        assert!(matches!(merge(&[pa.clone(), pa], &dir.path().join("x.csv")), Err(Error::Conflict(_))));
    }

    #[test]
    fn caps_become_status() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig { n: Some(6), excursion_cap: 2, ..cfg(dir.path(), "t.csv") };
        let s = simulate(SampleKind::Tstar, &c).unwrap();
        assert!(s.capped > 0);
        let rows = read_rows(&dir.path().join("t.csv")).unwrap();
        assert!(rows.iter().any(|r| r.status == RowStatus::CapExceeded && r.t_star.is_none()));
    }

    #[test]
    fn depth_limits() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig { n: Some(13), ..cfg(dir.path(), "c.csv") };
        assert!(matches!(simulate(SampleKind::Cover, &c), Err(Error::Resource(_))));
        let e = RunConfig { n: Some(17), ell: Some(4), z: Some(1.0), ..cfg(dir.path(), "e.csv") };
        assert!(matches!(simulate(SampleKind::Event, &e), Err(Error::Resource(_))));
    }

    #[test]
    fn all_negative_xprime_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("d.csv");
        fs::write(&d, "value\n0.1\n0.2\n").unwrap();
        let x = dir.path().join("x.csv");
        let rows: Vec<SampleRow> = (0..3)
            .map(|r| {
                let mut row = SampleRow::new(SampleKind::BrwXprime, 4, 1, r);
                row.xprime = Some(-1.0);
                row.gbar = Some(0.0);
                row
            })
            .collect();
        write_rows(&x, &rows).unwrap();
        let err = fit_mixture(&d, &x, None, &RunConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn config_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("c.toml");
        fs::write(&t, "seed = 9\nn = 10\n[thresholds]\nshift_ks = 0.07\n[verify.moments]\nj_max = 6\n").unwrap();
        let c = RunConfig::from_file(&t).unwrap();
        assert_eq!((c.seed, c.n, c.thresholds.shift_ks, c.verify.moments.j_max), (9, Some(10), 0.07, 6));
        let j = dir.path().join("c.json");
        fs::write(&j, r#"{"delta": 0.05, "replicas": 3}"#).unwrap();
        assert_eq!(RunConfig::from_file(&j).unwrap().replicas, 3);
        fs::write(&t, "bogus = 1\n").unwrap();
        assert!(matches!(RunConfig::from_file(&t), Err(Error::Config(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn files_round_trip_sorted(replicas in prop::collection::btree_set(0u64..10_000, 1..40), t in 1u64..1_000_000) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("r.csv");
            let rows: Vec<SampleRow> = replicas
                .iter()
                .rev()
                .map(|&r| {
                    let mut row = SampleRow::new(SampleKind::Tstar, 9, 3, r);
                    row.t_star = Some(t + r);
                    row
                })
                .collect();
            write_rows(&path, &rows).unwrap();
            let back = read_rows(&path).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            prop_assert!(back.windows(2).all(|w| w[0].key() < w[1].key()));
            prop_assert!(back.iter().all(|r| r.t_star == Some(t + r.replica)));
        }
    }
}
