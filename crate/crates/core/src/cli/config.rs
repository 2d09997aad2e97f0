//! Experiment configuration files.
//!
//! One TOML file describes one experiment. Shared keys (`seed`, `out`, the
//! system being simulated) sit at the top level; each subcommand reads its own
//! table (`[tail]`, `[correlate]`, ...). Unknown keys anywhere are rejected and
//! every error names the key path.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::billiard::{BilliardTable, TableConfig};
use crate::gibbs_markov::{GmSystem, Roof};
use crate::stats::{MIN_BUDGET, MIN_ENSEMBLE, MIN_TAIL_SAMPLES};
use crate::suspension::{FiberRoof, TwoSidedModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Tail,
    Correlate,
    Variance,
    Spectrum,
    Defect,
    Chi,
    Tdf,
    Periods,
    Laplace,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Tail => "tail",
            Experiment::Correlate => "correlate",
            Experiment::Variance => "variance",
            Experiment::Spectrum => "spectrum",
            Experiment::Defect => "defect",
            Experiment::Chi => "chi",
            Experiment::Tdf => "tdf",
            Experiment::Periods => "periods",
            Experiment::Laplace => "laplace",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub table: Option<TableConfig>,
    pub system: Option<SystemConfig>,
    pub roof: Option<Roof>,
    pub model: Option<ModelConfig>,
    pub simulate: Option<SimulateParams>,
    pub tail: Option<TailParams>,
    pub correlate: Option<CorrelateParams>,
    pub variance: Option<VarianceParams>,
    pub spectrum: Option<SpectrumParams>,
    pub defect: Option<DefectParams>,
    pub chi: Option<ChiParams>,
    pub tdf: Option<TdfParams>,
    pub periods: Option<PeriodsParams>,
    pub laplace: Option<LaplaceParams>,
}

/// A built-in Gibbs-Markov base map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    pub alpha: Option<f64>,
    /// Chebyshev resolution of the invariant density used for sampling.
    #[serde(default = "default_density_resolution")]
    pub density_resolution: usize,
}

fn default_density_resolution() -> usize {
    32
}

/// Fattened doubling model with a fiber-dependent roof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub roof: FiberRoof,
}

fn default_gamma() -> f64 {
    0.5
}

/// `points` values from `start` to `stop` inclusive, geometric when `log`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let k = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / k;
                if self.log {
                    self.start * (self.stop / self.start).powf(f)
                } else {
                    self.start + (self.stop - self.start) * f
                }
            })
            .collect()
    }

    fn validate(&self, key: &str) -> Result<()> {
        if self.points == 0 {
            return Err(Error::config(format!("{key}.points"), "must be at least 1"));
        }
        if !(self.start.is_finite() && self.stop.is_finite())
            || (self.points > 1 && !(self.stop > self.start))
        {
            return Err(Error::config(key, "need finite start < stop"));
        }
        if self.log && !(self.start > 0.0) {
            return Err(Error::config(
                format!("{key}.start"),
                "log grids need start > 0",
            ));
        }
        Ok(())
    }
}

/// Observables on billiard phase space or on a suspension over a base map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// Horizontal velocity (billiards).
    VelX,
    /// Vertical velocity (billiards).
    VelY,
    /// `cos(2 pi k x)` of the position (billiards).
    PosCos { k: f64 },
    /// `cos(2 pi k y)` of the base point (suspensions).
    BaseCos { k: f64 },
    /// `sin(pi u / roof) - 2/pi` (suspensions).
    Bump,
    /// `min(u, roof - u, cap)` (suspensions).
    Tent { cap: f64 },
}

impl ObservableSpec {
    pub fn for_billiard(&self) -> bool {
        matches!(
            self,
            ObservableSpec::VelX | ObservableSpec::VelY | ObservableSpec::PosCos { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub collisions: u64,
    /// Write every `stride`-th collision.
    #[serde(default = "one")]
    pub stride: u64,
    pub t_cap: Option<f64>,
    /// Also run the invariant checks and write `invariants.csv`.
    #[serde(default)]
    pub invariants: Option<InvariantParams>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantParams {
    pub round_trips: usize,
    pub roof_pairs: usize,
    pub invariance_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSource {
    /// Free flights of the billiard in `[table]`.
    Flight,
    /// Roof values over the invariant density of `[system]`.
    Roof,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    pub source: TailSource,
    pub samples: u64,
    pub grid: GridSpec,
    pub window: [f64; 2],
    pub t_cap: Option<f64>,
    pub inequality: Option<InequalityParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityParams {
    pub eta: f64,
    pub i: Vec<usize>,
    pub n: Vec<usize>,
    pub t: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    /// Independent invariant samples.
    Ensemble,
    /// Time averages along long orbits; needed for unbounded roofs.
    Birkhoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateParams {
    #[serde(default = "ensemble")]
    pub mode: CorrelationMode,
    pub v: ObservableSpec,
    pub w: Option<ObservableSpec>,
    pub grid: GridSpec,
    /// Ensemble size (ensemble mode).
    pub budget: Option<usize>,
    /// Time step, orbit count, origins per orbit and burn-in (Birkhoff mode).
    pub dt: Option<f64>,
    pub orbits: Option<usize>,
    pub origins: Option<usize>,
    #[serde(default)]
    pub burn_in: f64,
    /// Window of the power-law decay fit.
    pub fit_window: Option<[f64; 2]>,
}

fn ensemble() -> CorrelationMode {
    CorrelationMode::Ensemble
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceParams {
    pub v: ObservableSpec,
    pub grid: GridSpec,
    pub ensemble: usize,
    pub window: [f64; 2],
    pub identity: Option<IdentityParams>,
}

/// Correlation run for the variance-correlation identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityParams {
    pub step: f64,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub resolution: usize,
    /// Real part of `s`; the sweep runs over the imaginary part.
    #[serde(default)]
    pub re: f64,
    pub b: GridSpec,
    #[serde(default = "default_h")]
    pub derivative_step: f64,
}

fn default_h() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectParams {
    /// Branch words of the finite subsystem.
    pub words: Vec<usize>,
    pub b: Vec<f64>,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiParams {
    pub samples: usize,
    #[serde(default = "default_chi_tol")]
    pub tol: f64,
    /// Samples used to estimate `sup |chi|` for the conjugacy shift.
    pub sup_samples: usize,
    /// Random flow points for the conjugacy round trip.
    pub round_trips: usize,
    /// Fibers and points per fiber for the fiber variance of the new roof.
    #[serde(default = "default_fibers")]
    pub fibers: [usize; 2],
}

fn default_chi_tol() -> f64 {
    1e-10
}

fn default_fibers() -> [usize; 2] {
    [200, 50]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdfParams {
    pub pairs: usize,
    pub k: usize,
    #[serde(default = "default_tdf_tol")]
    pub tol: f64,
    pub scales: Vec<f64>,
}

fn default_tdf_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodsParams {
    #[serde(default)]
    pub words: Vec<Vec<usize>>,
    pub family: Option<FamilyParams>,
    /// Continued-fraction depth for the ratio of the first three periods.
    pub ratio_depth: Option<usize>,
}

/// Words `base^n tail` for each `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    pub base: Vec<usize>,
    pub tail: Vec<usize>,
    pub n: Vec<usize>,
    /// Fit the periodic correction term of the family.
    #[serde(default)]
    pub fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceParams {
    pub v: ObservableSpec,
    pub w: Option<ObservableSpec>,
    /// `[re, im]` pairs.
    pub s: Vec<[f64; 2]>,
    pub n_max: usize,
    pub budget: usize,
    pub cross_check: Option<CrossCheckParams>,
}

/// Time-domain correlation transformed numerically for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossCheckParams {
    pub step: f64,
    pub horizon: f64,
    pub budget: usize,
}

/// Parse TOML, reporting the full key path of the first offending key.
pub fn parse(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| Error::config("<file>", e.to_string().trim().to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." {
            "<root>".to_string()
        } else {
            path
        };
        Error::config(key, e.into_inner().message().to_string())
    })
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Validate everything `experiment` will read, before any computation.
    pub fn validate(&self, experiment: Experiment) -> Result<()> {
        let missing =
            |key: &str| Error::config(key, format!("required by `{}`", experiment.name()));
        match experiment {
            Experiment::Simulate => {
                self.billiard()?;
                let p = self.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
                positive_u64(p.collisions, "simulate.collisions")?;
                positive_u64(p.stride, "simulate.stride")?;
                t_cap(p.t_cap, "simulate.t_cap")?;
                if let Some(inv) = &p.invariants {
                    positive(inv.round_trips, "simulate.invariants.round_trips")?;
                    positive(inv.roof_pairs, "simulate.invariants.roof_pairs")?;
                    if inv.invariance_samples < 1000 {
                        return Err(Error::config(
                            "simulate.invariants.invariance_samples",
                            "need at least 1000",
                        ));
                    }
                }
            }
            Experiment::Tail => {
                let p = self.tail.as_ref().ok_or_else(|| missing("tail"))?;
                match p.source {
                    TailSource::Flight => {
                        self.billiard()?;
                    }
                    TailSource::Roof => {
                        self.gm()?;
                        self.roof.as_ref().ok_or_else(|| missing("roof"))?;
                    }
                }
                if p.samples < MIN_TAIL_SAMPLES as u64 {
                    return Err(budget_error(
                        "tail.samples",
                        p.samples as usize,
                        MIN_TAIL_SAMPLES,
                    ));
                }
                p.grid.validate("tail.grid")?;
                window(p.window, "tail.window")?;
                t_cap(p.t_cap, "tail.t_cap")?;
                if let Some(q) = &p.inequality {
                    if p.source != TailSource::Roof {
                        return Err(Error::config("tail.inequality", "needs source = \"roof\""));
                    }
                    if !(q.eta > 0.0) {
                        return Err(Error::config("tail.inequality.eta", "must be positive"));
                    }
                    if q.i.is_empty() || q.n.is_empty() || q.t.is_empty() {
                        return Err(Error::config(
                            "tail.inequality",
                            "i, n and t must be nonempty",
                        ));
                    }
                    if q.n.contains(&0) {
                        return Err(Error::config("tail.inequality.n", "n starts at 1"));
                    }
                    if q.samples < 1000 {
                        return Err(budget_error("tail.inequality.samples", q.samples, 1000));
                    }
                }
            }
            Experiment::Correlate => {
                let p = self
                    .correlate
                    .as_ref()
                    .ok_or_else(|| missing("correlate"))?;
                let obs = [Some(p.v), p.w];
                self.flow_backend("correlate", &obs)?;
                p.grid.validate("correlate.grid")?;
                match p.mode {
                    CorrelationMode::Ensemble => {
                        let budget = p.budget.ok_or_else(|| missing("correlate.budget"))?;
                        if budget < MIN_BUDGET {
                            return Err(budget_error("correlate.budget", budget, MIN_BUDGET));
                        }
                        if self.table.is_none() && self.roof_sup().is_none() {
                            return Err(Error::config(
                                "correlate.mode",
                                "ensemble mode needs a bounded roof; use \"birkhoff\"",
                            ));
                        }
                    }
                    CorrelationMode::Birkhoff => {
                        let dt = p.dt.ok_or_else(|| missing("correlate.dt"))?;
                        if !(dt > 0.0) {
                            return Err(Error::config("correlate.dt", "must be positive"));
                        }
                        let orbits = p.orbits.ok_or_else(|| missing("correlate.orbits"))?;
                        let origins = p.origins.ok_or_else(|| missing("correlate.origins"))?;
                        if orbits < 2 {
                            return Err(Error::config("correlate.orbits", "need at least 2"));
                        }
                        if orbits * origins < MIN_BUDGET {
                            return Err(budget_error(
                                "correlate.origins",
                                orbits * origins,
                                MIN_BUDGET,
                            ));
                        }
                        if !(p.burn_in >= 0.0) {
                            return Err(Error::config("correlate.burn_in", "must be nonnegative"));
                        }
                    }
                }
                if let Some(w) = p.fit_window {
                    window(w, "correlate.fit_window")?;
                }
            }
            Experiment::Variance => {
                let p = self.variance.as_ref().ok_or_else(|| missing("variance"))?;
                self.flow_backend("variance", &[Some(p.v)])?;
                if self.table.is_none() && self.roof_sup().is_none() {
                    return Err(Error::config("roof", "variance runs need a bounded roof"));
                }
                p.grid.validate("variance.grid")?;
                if p.ensemble < MIN_ENSEMBLE {
                    return Err(budget_error("variance.ensemble", p.ensemble, MIN_ENSEMBLE));
                }
                window(p.window, "variance.window")?;
                if let Some(id) = &p.identity {
                    if !(id.step > 0.0) {
                        return Err(Error::config("variance.identity.step", "must be positive"));
                    }
                    if id.budget < MIN_BUDGET {
                        return Err(budget_error(
                            "variance.identity.budget",
                            id.budget,
                            MIN_BUDGET,
                        ));
                    }
                }
            }
            Experiment::Spectrum => {
                self.gm()?;
                self.roof.as_ref().ok_or_else(|| missing("roof"))?;
                let p = self.spectrum.as_ref().ok_or_else(|| missing("spectrum"))?;
                if p.resolution < 4 {
                    return Err(Error::config("spectrum.resolution", "need at least 4"));
                }
                p.b.validate("spectrum.b")?;
                if p.b.log {
                    return Err(Error::config("spectrum.b.log", "the b sweep is linear"));
                }
                if !(p.derivative_step > 0.0) {
                    return Err(Error::config(
                        "spectrum.derivative_step",
                        "must be positive",
                    ));
                }
            }
            Experiment::Defect => {
                self.gm()?;
                self.roof.as_ref().ok_or_else(|| missing("roof"))?;
                let p = self.defect.as_ref().ok_or_else(|| missing("defect"))?;
                if p.words.is_empty() {
                    return Err(Error::config("defect.words", "need at least one branch"));
                }
                if p.b.is_empty() || p.b.iter().any(|b| !(b.abs() > 1.0)) {
                    return Err(Error::config("defect.b", "need |b| > 1"));
                }
                if !(p.xi > 0.0) {
                    return Err(Error::config("defect.xi", "must be positive"));
                }
            }
            Experiment::Chi => {
                self.two_sided()?;
                let p = self.chi.as_ref().ok_or_else(|| missing("chi"))?;
                positive(p.samples, "chi.samples")?;
                positive(p.sup_samples, "chi.sup_samples")?;
                positive(p.round_trips, "chi.round_trips")?;
                if !(p.tol > 0.0) {
                    return Err(Error::config("chi.tol", "must be positive"));
                }
                if p.fibers[0] == 0 || p.fibers[1] < 2 {
                    return Err(Error::config(
                        "chi.fibers",
                        "need at least 1 fiber and 2 points per fiber",
                    ));
                }
            }
            Experiment::Tdf => {
                self.two_sided()?;
                let p = self.tdf.as_ref().ok_or_else(|| missing("tdf"))?;
                positive(p.pairs, "tdf.pairs")?;
                positive(p.k, "tdf.k")?;
                if p.scales.len() < 3 || p.scales.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                    return Err(Error::config(
                        "tdf.scales",
                        "need at least 3 relative scales in (0, 1]",
                    ));
                }
            }
            Experiment::Periods => {
                let gm = self.gm()?;
                self.roof.as_ref().ok_or_else(|| missing("roof"))?;
                let p = self.periods.as_ref().ok_or_else(|| missing("periods"))?;
                if p.words.is_empty() && p.family.is_none() {
                    return Err(Error::config("periods", "give words or a family"));
                }
                let limit = gm.branch_count();
                let check = |w: &[usize], key: String| -> Result<()> {
                    if w.is_empty() {
                        return Err(Error::config(key, "empty word"));
                    }
                    if let Some(n) = limit {
                        if w.iter().any(|&j| j >= n) {
                            return Err(Error::config(
                                key,
                                format!("branch index out of range (system has {n})"),
                            ));
                        }
                    }
                    Ok(())
                };
                for (i, w) in p.words.iter().enumerate() {
                    check(w, format!("periods.words[{i}]"))?;
                }
                if let Some(f) = &p.family {
                    check(&f.base, "periods.family.base".into())?;
                    if !f.tail.is_empty() {
                        check(&f.tail, "periods.family.tail".into())?;
                    }
                    if f.n.is_empty() || f.n.contains(&0) {
                        return Err(Error::config(
                            "periods.family.n",
                            "need positive repetition counts",
                        ));
                    }
                    if f.fit && f.n.len() < 6 {
                        return Err(Error::config(
                            "periods.family.n",
                            "the fit needs at least 6 family members",
                        ));
                    }
                }
                if p.ratio_depth.is_some()
                    && p.words.len() + p.family.as_ref().map_or(0, |f| f.n.len()) < 3
                {
                    return Err(Error::config(
                        "periods.ratio_depth",
                        "needs at least three orbits",
                    ));
                }
            }
            Experiment::Laplace => {
                let gm = self.gm()?;
                self.roof.as_ref().ok_or_else(|| missing("roof"))?;
                let p = self.laplace.as_ref().ok_or_else(|| missing("laplace"))?;
                for (key, o) in [("laplace.v", Some(p.v)), ("laplace.w", p.w)] {
                    if o.is_some_and(|o| o.for_billiard()) {
                        return Err(Error::config(key, "billiard observable on a suspension"));
                    }
                }
                if p.s.is_empty() || p.s.iter().any(|s| !(s[0] > 0.0)) {
                    return Err(Error::config("laplace.s", "need Re s > 0"));
                }
                positive(p.n_max, "laplace.n_max")?;
                if p.budget < MIN_BUDGET {
                    return Err(budget_error("laplace.budget", p.budget, MIN_BUDGET));
                }
                if let Some(c) = &p.cross_check {
                    if !(c.step > 0.0 && c.horizon > c.step) {
                        return Err(Error::config(
                            "laplace.cross_check",
                            "need 0 < step < horizon",
                        ));
                    }
                    if c.budget < MIN_BUDGET {
                        return Err(budget_error(
                            "laplace.cross_check.budget",
                            c.budget,
                            MIN_BUDGET,
                        ));
                    }
                    if self.roof_sup().is_none() {
                        return Err(Error::config(
                            "roof",
                            "the cross-check needs a bounded roof",
                        ));
                    }
                }
                drop(gm);
            }
        }
        Ok(())
    }

    pub fn billiard(&self) -> Result<BilliardTable> {
        self.table
            .as_ref()
            .ok_or_else(|| Error::config("table", "missing billiard table"))?
            .build("table")
    }

    pub fn gm(&self) -> Result<GmSystem> {
        let s = self
            .system
            .as_ref()
            .ok_or_else(|| Error::config("system", "missing base system"))?;
        if s.density_resolution < 4 {
            return Err(Error::config(
                "system.density_resolution",
                "need at least 4",
            ));
        }
        GmSystem::builtin(&s.name, s.alpha).map_err(|e| match e {
            Error::BadParams(m) => Error::config("system", m),
            e => e,
        })
    }

    pub fn two_sided(&self) -> Result<(TwoSidedModel, FiberRoof)> {
        let m = self
            .model
            .as_ref()
            .ok_or_else(|| Error::config("model", "missing two-sided model"))?;
        let model =
            TwoSidedModel::new(m.gamma).map_err(|e| Error::config("model.gamma", e.to_string()))?;
        if !(m.roof.inf() > 0.0) {
            return Err(Error::config("model.roof", "roof must be positive"));
        }
        Ok((model, m.roof))
    }

    /// Upper bound of the roof, or `None` when it is unbounded.
    pub fn roof_sup(&self) -> Option<f64> {
        let gm = self.gm().ok()?;
        roof_sup(&gm, self.roof.as_ref()?)
    }

    fn flow_backend(&self, section: &str, obs: &[Option<ObservableSpec>]) -> Result<()> {
        match (&self.table, &self.system) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "system",
                    "give either [table] or [system], not both",
                ))
            }
            (None, None) => {
                return Err(Error::config(
                    "table",
                    format!("`{section}` needs [table] or [system]"),
                ))
            }
            (Some(_), None) => {
                self.billiard()?;
            }
            (None, Some(_)) => {
                let gm = self.gm()?;
                let roof = self
                    .roof
                    .as_ref()
                    .ok_or_else(|| Error::config("roof", "missing roof"))?;
                if !(roof.inf(&gm) > 0.0) {
                    return Err(Error::config("roof", "roof must be positive"));
                }
            }
        }
        let billiard = self.table.is_some();
        for (name, o) in ["v", "w"].iter().zip(obs) {
            if let Some(o) = o {
                if o.for_billiard() != billiard {
                    let want = if billiard { "billiard" } else { "suspension" };
                    return Err(Error::config(
                        format!("{section}.{name}"),
                        format!("not a {want} observable"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Upper bound of `roof` over the domain of `gm`, `None` when unbounded.
pub fn roof_sup(gm: &GmSystem, roof: &Roof) -> Option<f64> {
    let (lo, hi) = gm.domain();
    let m = lo.abs().max(hi.abs());
    match roof {
        Roof::Poly { coeffs } => Some(
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * m.powi(k as i32))
                .sum(),
        ),
        Roof::InducedAffine { c0, c1 } => gm.branch_count().map(|_| c0.abs() + c1.abs() * m),
        Roof::Truncated {
            inner,
            level,
            from_branch,
        } => Some(
            (0..*from_branch)
                .map(|j| inner.branch_range(gm, j).1)
                .fold(*level, f64::max),
        ),
    }
}

fn budget_error(key: &str, budget: usize, min: usize) -> Error {
    Error::config(key, Error::BudgetTooSmall { budget, min }.to_string())
}

fn positive(v: usize, key: &str) -> Result<()> {
    if v == 0 {
        return Err(Error::config(key, "must be positive"));
    }
    Ok(())
}

fn positive_u64(v: u64, key: &str) -> Result<()> {
    if v == 0 {
        return Err(Error::config(key, "must be positive"));
    }
    Ok(())
}

fn t_cap(v: Option<f64>, key: &str) -> Result<()> {
    match v {
        Some(t) if !(t > 0.0) => Err(Error::config(key, "must be positive")),
        _ => Ok(()),
    }
}

fn window(w: [f64; 2], key: &str) -> Result<()> {
    if !(w[0] > 0.0 && w[1] > w[0]) {
        return Err(Error::config(key, "need 0 < lo < hi"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAIL: &str = r#"
seed = 7
[table]
variant = "lorentz-torus"
radius = 0.3
scatterers = [{ center = [0.5, 0.5] }]
[tail]
source = "flight"
samples = 100000
grid = { start = 0.5, stop = 500.0, points = 40, log = true }
window = [5.0, 100.0]
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = parse(TAIL).unwrap();
        cfg.validate(Experiment::Tail).unwrap();
        assert!(
            matches!(cfg.validate(Experiment::Correlate), Err(Error::ConfigInvalid { key, .. }) if key == "correlate")
        );
    }

    #[test]
    fn unknown_key_names_its_path() {
        let text = TAIL.replace("window = [5.0, 100.0]", "window = [5.0, 100.0]\nwindwo = 3");
        match parse(&text) {
            Err(Error::ConfigInvalid { key, message }) => {
                assert_eq!(key, "tail.windwo");
                assert!(message.contains("unknown field"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let nested = TAIL.replace("points = 40", "points = 40, steps = 2");
        assert!(
            matches!(parse(&nested), Err(Error::ConfigInvalid { key, .. }) if key == "tail.grid.steps")
        );
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = parse(TAIL).unwrap();
        assert_eq!(parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn grids() {
        let g = GridSpec {
            start: 1.0,
            stop: 100.0,
            points: 3,
            log: true,
        };
        let v = g.values();
        assert!((v[1] - 10.0).abs() < 1e-12 && v[2] == 100.0);
        let g = GridSpec {
            start: -0.2,
            stop: 0.2,
            points: 5,
            log: false,
        };
        assert_eq!(g.values()[2], 0.0);
    }
}
