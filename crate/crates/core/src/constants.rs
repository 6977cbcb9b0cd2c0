//! Pickands and Piterbarg constants: closed forms, direct Monte Carlo
//! estimators of the truncated expectations, and a shareable cache.
//!
//! ```text
//! H_H([0,b])     = E sup_{t in [0,b]} exp(sqrt(2) B_H(t) - t^{2H})
//! H_H            = lim_{b -> inf} H_H([0,b]) / b
//! P_H^nu([0,b])  = E sup_{t in [0,b]} exp(sqrt(2) B_H(t) - (1 + nu) t^{2H})
//! ```

use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::asym::hurst_at;
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::fbm::{GridSpec, PathSampler, SamplerChoice};
use crate::io;
use crate::stats::{mean_and_se, ols};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    Pickands,
    Piterbarg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Simulated,
    ClosedForm,
    Cached,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub kind: ConstantKind,
    pub hurst: f64,
    pub nu: Option<f64>,
    /// Truncation horizon (largest ladder entry for a Pickands fit); `None`
    /// for closed forms.
    pub b: Option<f64>,
    pub b_ladder: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub n_sim: u64,
    pub seed: Option<u64>,
    pub value: f64,
    pub std_error: f64,
    pub provenance: Provenance,
    pub note: Option<String>,
}

impl ConstantEstimate {
    fn closed_form(kind: ConstantKind, hurst: f64, nu: Option<f64>, value: f64) -> Self {
        Self {
            kind,
            hurst,
            nu,
            b: None,
            b_ladder: None,
            eta: None,
            n_sim: 0,
            seed: None,
            value,
            std_error: 0.0,
            provenance: Provenance::ClosedForm,
            note: None,
        }
    }

    fn key(&self) -> RecordKey {
        RecordKey::new(self.kind, self.hurst, self.nu, self.b_ladder.as_deref().or(self.b.as_ref().map(std::slice::from_ref)), self.eta, self.n_sim, self.seed)
    }
}

/// `P^nu_{1/2} = 1 + 1/nu`.
pub fn piterbarg_half(nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(invalid(format!("nu must be positive, got {nu}")));
    }
    Ok(1.0 + 1.0 / nu)
}

/// Closed-form value when one is known: `H_{1/2} = 1`, `P^nu_{1/2} = 1 + 1/nu`.
pub fn closed_form(kind: ConstantKind, hurst: f64, nu: Option<f64>) -> Option<ConstantEstimate> {
    if !hurst_at(hurst, 0.5) {
        return None;
    }
    match kind {
        ConstantKind::Pickands => Some(ConstantEstimate::closed_form(kind, hurst, None, 1.0)),
        ConstantKind::Piterbarg => {
            let nu = nu?;
            piterbarg_half(nu).ok().map(|v| ConstantEstimate::closed_form(kind, hurst, Some(nu), v))
        }
    }
}

/// Per-simulation suprema of `exp(sqrt(2) B_H(t) - c t^{2H})` over `[0, b_j]`
/// for every `b_j` in `horizons`, from one path on `[0, max b_j]` with step
/// `eta`. `H = 1` is allowed (then `B_1(t) = t Z`).
fn ladder_suprema(
    hurst: f64,
    penalty: f64,
    horizons: &[f64],
    eta: f64,
    n_sim: u64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    if !(hurst > 0.0 && hurst <= 1.0) {
        return Err(invalid(format!("Hurst index must lie in (0,1], got {hurst}")));
    }
    if !(eta > 0.0) {
        return Err(invalid(format!("grid step eta must be positive, got {eta}")));
    }
    if n_sim < 1000 {
        return Err(invalid(format!("at least 1000 simulations required, got {n_sim}")));
    }
    let mut checkpoints = Vec::with_capacity(horizons.len());
    for &b in horizons {
        if !(b > 0.0 && eta <= b / 16.0) {
            return Err(invalid(format!("need b > 0 and eta <= b/16, got b={b}, eta={eta}")));
        }
        let steps = b / eta;
        if (steps - steps.round()).abs() > 1e-9 * steps {
            return Err(invalid(format!("b={b} is not a multiple of eta={eta}")));
        }
        checkpoints.push(steps.round() as usize);
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("b ladder must be strictly increasing"));
    }
    let n_max = *checkpoints.last().ok_or_else(|| invalid("empty b ladder"))?;
    let grid = GridSpec::new(n_max, n_max as f64 * eta)?;
    let drift: Vec<f64> = (0..=n_max).map(|k| penalty * grid.t(k).powf(2.0 * hurst)).collect();
    let root2 = std::f64::consts::SQRT_2;

    let suprema = |values: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut best = f64::NEG_INFINITY;
        let mut next = 0;
        for (k, (&x, &d)) in values.iter().zip(&drift).enumerate() {
            best = best.max(root2 * x - d);
            if k == checkpoints[next] {
                out.push(best.exp());
                next += 1;
                if next == checkpoints.len() {
                    break;
                }
            }
        }
        out
    };

    if hurst == 1.0 {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let rows = exec.map_indexed(n_sim as usize, || vec![0.0; n_max + 1], |buf, i| {
            let z: f64 = crate::fbm::rng::stream_rng(seed, i as u64).sample(StandardNormal);
            for (k, v) in buf.iter_mut().enumerate() {
                *v = grid.t(k) * z;
            }
            suprema(buf)
        });
        return Ok(rows);
    }

    let sampler = PathSampler::new(grid, hurst, SamplerChoice::Auto)?;
    let per = sampler.paths_per_draw();
    let draws = sampler.draws_for(n_sim as usize);
    let batches = exec.map_indexed(draws, || sampler.scratch(), |scratch, i| {
        sampler.draw(seed, i as u64, scratch);
        scratch.paths[..per].iter().map(|p| suprema(p)).collect::<Vec<_>>()
    });
    let mut rows: Vec<Vec<f64>> = batches.into_iter().flatten().collect();
    rows.truncate(n_sim as usize);
    Ok(rows)
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

/// Monte Carlo estimate of `H_H([0,b])` on the grid `{0, eta, ..., b}`.
pub fn estimate_pickands_truncated(
    hurst: f64,
    b: f64,
    eta: f64,
    n_sim: u64,
    seed: u64,
    exec: Execution,
) -> Result<ConstantEstimate> {
    let rows = ladder_suprema(hurst, 1.0, &[b], eta, n_sim, seed, exec)?;
    let (value, std_error) = mean_and_se(&column(&rows, 0));
    Ok(ConstantEstimate {
        kind: ConstantKind::Pickands,
        hurst,
        nu: None,
        b: Some(b),
        b_ladder: None,
        eta: Some(eta),
        n_sim,
        seed: Some(seed),
        value,
        std_error,
        provenance: Provenance::Simulated,
        note: Some("truncated expectation over [0,b], not divided by b".into()),
    })
}

const JACKKNIFE_GROUPS: usize = 20;

fn ladder_intercept(rows: &[Vec<f64>], ladder: &[f64]) -> f64 {
    let points: Vec<(f64, f64)> = ladder
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
            (1.0 / b, mean / b)
        })
        .collect();
    ols(&points).0
}

/// `H_H` from an affine fit of `H_H([0,b]) / b` against `1/b` over a ladder
/// of horizons simulated on shared paths. The standard error is a
/// delete-a-group jackknife over 20 groups.
pub fn estimate_pickands(
    hurst: f64,
    b_ladder: &[f64],
    eta: f64,
    n_sim: u64,
    seed: u64,
    exec: Execution,
) -> Result<ConstantEstimate> {
    if b_ladder.len() < 3 {
        return Err(invalid(format!("b ladder needs at least 3 entries, got {}", b_ladder.len())));
    }
    let rows = ladder_suprema(hurst, 1.0, b_ladder, eta, n_sim, seed, exec)?;
    let intercept = ladder_intercept(&rows, b_ladder);

    let group = rows.len() / JACKKNIFE_GROUPS;
    let leave_out: Vec<f64> = (0..JACKKNIFE_GROUPS)
        .map(|g| {
            let kept: Vec<Vec<f64>> = rows
                .iter()
                .enumerate()
                .filter(|(i, _)| i / group != g || i / group >= JACKKNIFE_GROUPS)
                .map(|(_, r)| r.clone())
                .collect();
            ladder_intercept(&kept, b_ladder)
        })
        .collect();
    let g = JACKKNIFE_GROUPS as f64;
    let mean_lo = leave_out.iter().sum::<f64>() / g;
    let jack_se = ((g - 1.0) / g * leave_out.iter().map(|x| (x - mean_lo).powi(2)).sum::<f64>()).sqrt();

    let b_max = *b_ladder.last().unwrap();
    let mut estimate = ConstantEstimate {
        kind: ConstantKind::Pickands,
        hurst,
        nu: None,
        b: Some(b_max),
        b_ladder: Some(b_ladder.to_vec()),
        eta: Some(eta),
        n_sim,
        seed: Some(seed),
        value: intercept,
        std_error: jack_se,
        provenance: Provenance::Simulated,
        note: None,
    };
    if !(intercept > 0.0 && intercept.is_finite() && jack_se.is_finite()) {
        let last = column(&rows, b_ladder.len() - 1);
        let (mean, se) = mean_and_se(&last);
        let first = column(&rows, 0).iter().sum::<f64>() / rows.len() as f64 / b_ladder[0];
        estimate.value = mean / b_max;
        estimate.std_error = (3.0 * se / b_max).max((estimate.value - first).abs());
        estimate.note = Some(format!(
            "degenerate ladder fit (intercept {intercept:e}); using H([0,b])/b at b={b_max} with inflated error"
        ));
    }
    Ok(estimate)
}

/// Monte Carlo estimate of `P_H^nu([0,b])`.
pub fn estimate_piterbarg(
    hurst: f64,
    nu: f64,
    b: f64,
    eta: f64,
    n_sim: u64,
    seed: u64,
    exec: Execution,
) -> Result<ConstantEstimate> {
    if !(nu > 0.0) {
        return Err(invalid(format!("nu must be positive, got {nu}")));
    }
    let rows = ladder_suprema(hurst, 1.0 + nu, &[b], eta, n_sim, seed, exec)?;
    let (value, std_error) = mean_and_se(&column(&rows, 0));
    Ok(ConstantEstimate {
        kind: ConstantKind::Piterbarg,
        hurst,
        nu: Some(nu),
        b: Some(b),
        b_ladder: None,
        eta: Some(eta),
        n_sim,
        seed: Some(seed),
        value,
        std_error,
        provenance: Provenance::Simulated,
        note: None,
    })
}

/// Source of constants for the asymptotic formulas.
pub trait ConstantSource: Sync {
    fn pickands(&self, hurst: f64) -> Result<ConstantEstimate>;
    fn piterbarg(&self, hurst: f64, nu: f64) -> Result<ConstantEstimate>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderPolicy {
    /// Closed forms, then cached estimates; never simulates.
    #[default]
    ClosedFormFirst,
    /// Closed forms, then cached estimates, then a fresh simulation with the
    /// provider's settings.
    SimulateIfMissing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationSettings {
    pub b_ladder: Vec<f64>,
    pub piterbarg_b: f64,
    pub eta: f64,
    pub n_sim: u64,
    pub seed: u64,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self { b_ladder: vec![1.0, 2.0, 4.0], piterbarg_b: 16.0, eta: 1.0 / 256.0, n_sim: 100_000, seed: 0x5eed }
    }
}

/// One simulation request; its parameters form the cache key.
#[derive(Clone, Debug, PartialEq)]
pub enum EstimateRequest {
    Pickands { hurst: f64, b_ladder: Vec<f64>, eta: f64, n_sim: u64, seed: u64 },
    Piterbarg { hurst: f64, nu: f64, b: f64, eta: f64, n_sim: u64, seed: u64 },
}

impl EstimateRequest {
    fn key(&self) -> RecordKey {
        match self {
            EstimateRequest::Pickands { hurst, b_ladder, eta, n_sim, seed } => {
                RecordKey::new(ConstantKind::Pickands, *hurst, None, Some(b_ladder), Some(*eta), *n_sim, Some(*seed))
            }
            EstimateRequest::Piterbarg { hurst, nu, b, eta, n_sim, seed } => RecordKey::new(
                ConstantKind::Piterbarg,
                *hurst,
                Some(*nu),
                Some(std::slice::from_ref(b)),
                Some(*eta),
                *n_sim,
                Some(*seed),
            ),
        }
    }

    pub fn run(&self, exec: Execution) -> Result<ConstantEstimate> {
        match self {
            EstimateRequest::Pickands { hurst, b_ladder, eta, n_sim, seed } => {
                estimate_pickands(*hurst, b_ladder, *eta, *n_sim, *seed, exec)
            }
            EstimateRequest::Piterbarg { hurst, nu, b, eta, n_sim, seed } => {
                estimate_piterbarg(*hurst, *nu, *b, *eta, *n_sim, *seed, exec)
            }
        }
    }
}

fn micro(x: f64) -> i64 {
    (x * 1e6).round() as i64
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct RecordKey {
    kind: ConstantKind,
    hurst: i64,
    nu: Option<i64>,
    b: Vec<u64>,
    eta: Option<u64>,
    n_sim: u64,
    seed: Option<u64>,
}

impl RecordKey {
    fn new(
        kind: ConstantKind,
        hurst: f64,
        nu: Option<f64>,
        b: Option<&[f64]>,
        eta: Option<f64>,
        n_sim: u64,
        seed: Option<u64>,
    ) -> Self {
        Self {
            kind,
            hurst: micro(hurst),
            nu: nu.map(micro),
            b: b.unwrap_or(&[]).iter().map(|x| x.to_bits()).collect(),
            eta: eta.map(f64::to_bits),
            n_sim,
            seed,
        }
    }

    fn same_constant(&self, kind: ConstantKind, hurst: f64, nu: Option<f64>) -> bool {
        self.kind == kind && self.hurst == micro(hurst) && self.nu == nu.map(micro)
    }
}

/// Read-mostly constant store shared across threads. Records live in memory
/// and optionally in a JSON file; writes are serialized.
#[derive(Debug)]
pub struct ConstantsProvider {
    policy: ProviderPolicy,
    settings: EstimationSettings,
    execution: Execution,
    records: RwLock<Vec<ConstantEstimate>>,
    path: Option<PathBuf>,
    write_lock: Mutex<()>,
}

impl Default for ConstantsProvider {
    fn default() -> Self {
        Self::new(ProviderPolicy::default(), EstimationSettings::default())
    }
}

impl ConstantsProvider {
    pub fn new(policy: ProviderPolicy, settings: EstimationSettings) -> Self {
        Self {
            policy,
            settings,
            execution: Execution::default(),
            records: RwLock::new(Vec::new()),
            path: None,
            write_lock: Mutex::new(()),
        }
    }

    /// Provider backed by a cache file; a missing file starts empty.
    pub fn open(path: impl Into<PathBuf>, policy: ProviderPolicy, settings: EstimationSettings) -> Result<Self> {
        let path = path.into();
        let records = match std::fs::read_to_string(&path) {
            Ok(text) if text.trim().is_empty() => Vec::new(),
            Ok(text) => serde_json::from_str(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let mut provider = Self::new(policy, settings);
        provider.records = RwLock::new(records);
        provider.path = Some(path);
        Ok(provider)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn policy(&self) -> ProviderPolicy {
        self.policy
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> Vec<ConstantEstimate> {
        self.records.read().unwrap().clone()
    }

    /// Adds or replaces the record with the same key.
    pub fn insert(&self, estimate: ConstantEstimate) {
        let key = estimate.key();
        let mut records = self.records.write().unwrap();
        match records.iter_mut().find(|r| r.key() == key) {
            Some(slot) => *slot = estimate,
            None => records.push(estimate),
        }
    }

    /// Cached record for `(kind, H, nu)` (rounded to 1e-6); the largest
    /// simulation budget wins when several exist.
    pub fn lookup(&self, kind: ConstantKind, hurst: f64, nu: Option<f64>) -> Option<ConstantEstimate> {
        let records = self.records.read().unwrap();
        let mut best: Option<&ConstantEstimate> = None;
        for r in records.iter().filter(|r| r.key().same_constant(kind, hurst, nu)) {
            if best.is_none_or(|b| r.n_sim > b.n_sim) {
                best = Some(r);
            }
        }
        best.map(|r| ConstantEstimate { provenance: Provenance::Cached, ..r.clone() })
    }

    /// Returns the cached record with exactly this request's key, or runs
    /// the simulation and stores it. Does not touch the file.
    pub fn fetch(&self, request: &EstimateRequest) -> Result<ConstantEstimate> {
        let key = request.key();
        if let Some(r) = self.records.read().unwrap().iter().find(|r| r.key() == key) {
            return Ok(ConstantEstimate { provenance: Provenance::Cached, ..r.clone() });
        }
        let estimate = request.run(self.execution)?;
        self.insert(estimate.clone());
        Ok(estimate)
    }

    /// Writes all records to the cache file (temporary file, then rename).
    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let _guard = self.write_lock.lock().unwrap();
        let text = io::to_json_pretty(&self.records())?;
        io::write_atomic(path, text.as_bytes())
            .map_err(|source| Error::CacheWrite { path: path.display().to_string(), source })
    }

    fn resolve(&self, kind: ConstantKind, hurst: f64, nu: Option<f64>) -> Result<ConstantEstimate> {
        if let Some(c) = closed_form(kind, hurst, nu) {
            return Ok(c);
        }
        if let Some(c) = self.lookup(kind, hurst, nu) {
            return Ok(c);
        }
        match self.policy {
            ProviderPolicy::ClosedFormFirst => Err(Error::ConstantUnavailable(format!(
                "no closed form or cached estimate for {kind:?} constant at H={hurst}{}",
                nu.map(|v| format!(", nu={v}")).unwrap_or_default()
            ))),
            ProviderPolicy::SimulateIfMissing => {
                let s = &self.settings;
                let request = match kind {
                    ConstantKind::Pickands => EstimateRequest::Pickands {
                        hurst,
                        b_ladder: s.b_ladder.clone(),
                        eta: s.eta,
                        n_sim: s.n_sim,
                        seed: s.seed,
                    },
                    ConstantKind::Piterbarg => EstimateRequest::Piterbarg {
                        hurst,
                        nu: nu.ok_or_else(|| invalid("Piterbarg constant needs nu"))?,
                        b: s.piterbarg_b,
                        eta: s.eta,
                        n_sim: s.n_sim,
                        seed: s.seed,
                    },
                };
                self.fetch(&request)
            }
        }
    }
}

impl ConstantSource for ConstantsProvider {
    fn pickands(&self, hurst: f64) -> Result<ConstantEstimate> {
        self.resolve(ConstantKind::Pickands, hurst, None)
    }

    fn piterbarg(&self, hurst: f64, nu: f64) -> Result<ConstantEstimate> {
        self.resolve(ConstantKind::Piterbarg, hurst, Some(nu))
    }
}
