//! Statistical checks of the scaling limits.
//!
//! Each recipe simulates replicas at a list of scales, computes scale-free
//! statistics and turns them into named [`Verdict`]s collected in a
//! [`ScalingReport`]. Replica `i` of a recipe draws from the seed stream
//! `master -> recipe name -> <stage> -> i`, so a report is a pure function of
//! the configuration and the master seed.

mod fk;
mod increments;
mod laplace;
mod linear;
mod quadvar;
mod range;
mod small_sets;
mod stable;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::clock::ClockError;
use crate::environment::{EnvironmentError, TrapLaw};
use crate::reference::ReferenceError;
use crate::rng::SeedStream;
use crate::skeleton::{first_return_time, SkeletonError, SkeletonSpec, StepDistribution};
use crate::stats::StatsError;

pub use fk::{FkThresholds, FkTrajectoryConfig};
pub use increments::{IncrementsThresholds, IndependentIncrementsConfig};
pub use laplace::{LaplaceConditionConfig, LaplaceThresholds};
pub use linear::{LinearLimitConfig, LinearThresholds};
pub use quadvar::{QuadraticVariationConfig, QuadraticVariationThresholds};
pub use range::{RangeLlnConfig, RangeMode, RangeThresholds};
pub use small_sets::{SmallSetsConfig, SmallSetsThresholds};
pub use stable::{StableClockConfig, StableThresholds};

/// Largest scale `N` a recipe accepts.
pub const MAX_SCALE: u64 = 1_000_000;
/// Largest replica count `M` a recipe accepts.
pub const MAX_REPLICAS: usize = 10_000;
/// Smallest replica count for a distributional test.
pub const MIN_DISTRIBUTIONAL_REPLICAS: usize = 100;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("invalid recipe configuration: {0}")]
    InvalidConfig(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// The statistic is undefined because the model is deterministic in the
    /// relevant respect; the property holds trivially.
    DegeneratePass,
    /// Reported without a decision.
    NoVerdict,
}

impl Outcome {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::DegeneratePass => "PASS (degenerate)",
            Outcome::NoVerdict => "no verdict",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub outcome: Outcome,
    pub observed: Option<f64>,
    pub threshold: String,
    pub detail: String,
}

impl Verdict {
    pub fn new(
        criterion: impl Into<String>,
        outcome: Outcome,
        observed: Option<f64>,
        threshold: impl Into<String>,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            criterion: criterion.into(),
            outcome,
            observed: observed.filter(|v| v.is_finite()),
            threshold: threshold.into(),
            detail: detail.into(),
        }
    }

    pub fn check(
        criterion: impl Into<String>,
        pass: bool,
        observed: f64,
        threshold: impl Into<String>,
        detail: impl Into<String>,
    ) -> Self {
        Self::new(criterion, Outcome::from_bool(pass), Some(observed), threshold, detail)
    }
}

/// ℓ̂*(n) as estimated from first-return times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub n: u64,
    pub replicas: usize,
    /// r̂_n.
    pub escape: f64,
    pub escape_std_error: f64,
    /// ℓ̂*(n) = 1/r̂_n.
    pub ell_star: f64,
    /// Delta-method standard error of ℓ̂*(n).
    pub ell_star_std_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub n: u64,
    pub replicas: usize,
    pub statistics: BTreeMap<String, f64>,
}

impl ScaleSummary {
    pub fn new(n: u64, replicas: usize) -> Self {
        Self {
            n,
            replicas,
            statistics: BTreeMap::new(),
        }
    }

    /// Records a statistic; non-finite values are dropped so the JSON form
    /// stays round-trippable.
    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        if value.is_finite() {
            self.statistics.insert(name.into(), value);
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.statistics.get(name).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub x: String,
    pub y: String,
    pub points: Vec<[f64; 2]>,
}

/// Per-replica values of one statistic, written to the CSV dumps.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSeries {
    pub n: u64,
    pub statistic: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Linear,
    Stable,
    /// Neither regime's criteria pass.
    Unclassified,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub recipe: String,
    pub master_seed: u64,
    pub config: serde_json::Value,
    pub calibration: Vec<CalibrationRow>,
    pub scales: Vec<ScaleSummary>,
    pub curves: Vec<Curve>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub classification: Option<Classification>,
    pub verdicts: Vec<Verdict>,
    #[serde(skip)]
    pub samples: Vec<SampleSeries>,
    /// Wall-clock seconds; kept out of the JSON form so reports are
    /// byte-reproducible.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl ScalingReport {
    fn new<C: Serialize>(recipe: &str, ctx: &RunContext<'_>, config: &C) -> Self {
        Self {
            recipe: recipe.to_string(),
            master_seed: ctx.master_seed,
            config: serde_json::to_value(config).expect("configs serialize"),
            ..Self::default()
        }
    }

    /// No criterion failed.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.outcome != Outcome::Fail)
    }

    pub fn verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    pub fn scale(&self, n: u64) -> Option<&ScaleSummary> {
        self.scales.iter().find(|s| s.n == n)
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    /// One JSON object without a trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "recipe: {}", self.recipe);
        let _ = writeln!(out, "master seed: {}", self.master_seed);
        if !self.calibration.is_empty() {
            let _ = writeln!(out, "\ncalibration (first-return Monte Carlo):");
            let _ = writeln!(out, "  {:>10}  {:>10}  {:>10}  {:>10}", "n", "r_n", "ell*", "s.e.");
            for row in &self.calibration {
                let _ = writeln!(
                    out,
                    "  {:>10}  {:>10.5}  {:>10.4}  {:>10.4}",
                    row.n, row.escape, row.ell_star, row.ell_star_std_error
                );
            }
        }
        for scale in &self.scales {
            if scale.replicas > 0 {
                let _ = writeln!(out, "\nN = {} (M = {})", scale.n, scale.replicas);
            } else {
                let _ = writeln!(out, "\nN = {}", scale.n);
            }
            for (name, value) in &scale.statistics {
                let _ = writeln!(out, "  {name:<36} {value}");
            }
        }
        for curve in &self.curves {
            let _ = writeln!(out, "\ncurve {} ({} -> {}):", curve.name, curve.x, curve.y);
            for p in &curve.points {
                let _ = writeln!(out, "  {:>10}  {:.6}", p[0], p[1]);
            }
        }
        if let Some(c) = self.classification {
            let label = match c {
                Classification::Linear => "linear regime",
                Classification::Stable => "stable regime",
                Classification::Unclassified => "no classification verdict",
            };
            let _ = writeln!(out, "\nclassification: {label}");
        }
        let _ = writeln!(out, "\nverdicts:");
        for v in &self.verdicts {
            let observed = v.observed.map_or("-".to_string(), |o| format!("{o:.6}"));
            let _ = writeln!(
                out,
                "  [{}] {}: observed {}, threshold {}{}",
                v.outcome.label(),
                v.criterion,
                observed,
                v.threshold,
                if v.detail.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", v.detail)
                }
            );
        }
        let _ = writeln!(
            out,
            "\nstatus: {}",
            if self.passed() { "all criteria pass" } else { "some criteria fail" }
        );
        let _ = writeln!(out, "runtime: {:.2} s", self.runtime_seconds);
        out
    }
}

/// Source of ℓ̂*(n) estimates.
pub trait Calibrator: Sync {
    fn calibrate(
        &self,
        skeleton: &SkeletonSpec,
        ns: &[u64],
        replicas: usize,
    ) -> Result<Vec<CalibrationRow>, VerifyError>;
}

/// Seed stream of the calibration for one skeleton. It depends on the
/// skeleton and the master seed only, so every recipe sharing a seed sees
/// the same ℓ̂* table.
pub fn calibration_stream(master_seed: u64, skeleton: &SkeletonSpec) -> SeedStream {
    let key = serde_json::to_string(skeleton).expect("skeleton specs serialize");
    SeedStream::new(master_seed).derive("calibration").derive(&key)
}

/// Estimates r_n and ℓ*(n) for every `n` in `ns` from one set of first-return
/// times, so the table is exactly monotone in `n`.
pub fn estimate_ell_star(
    nu: &StepDistribution,
    ns: &[u64],
    replicas: usize,
    stream: SeedStream,
) -> Result<Vec<CalibrationRow>, VerifyError> {
    if ns.is_empty() || ns.contains(&0) || replicas == 0 {
        return Err(VerifyError::InvalidConfig(
            "calibration needs n ≥ 1 and at least one replica".into(),
        ));
    }
    if nu.is_degenerate() {
        return Err(SkeletonError::Degenerate.into());
    }
    let horizon = *ns.iter().max().expect("nonempty");
    let returns: Vec<Option<u64>> = (0..replicas)
        .into_par_iter()
        .map(|i| first_return_time(nu, horizon, &mut stream.index(i as u64).rng()))
        .collect();
    ns.iter()
        .map(|&n| {
            let escaped = returns.iter().filter(|t| t.is_none_or(|t| t > n)).count();
            if escaped == 0 {
                return Err(VerifyError::Calibration(format!(
                    "no walk escaped in {n} steps out of {replicas}; increase the replica count"
                )));
            }
            let r = escaped as f64 / replicas as f64;
            let se = (r * (1.0 - r) / replicas as f64).sqrt();
            Ok(CalibrationRow {
                n,
                replicas,
                escape: r,
                escape_std_error: se,
                ell_star: 1.0 / r,
                ell_star_std_error: se / (r * r),
            })
        })
        .collect()
}

/// Monte Carlo calibrator with an in-memory cache.
pub struct MonteCarloCalibrator {
    master_seed: u64,
    cache: Mutex<HashMap<String, Vec<CalibrationRow>>>,
}

impl MonteCarloCalibrator {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl Calibrator for MonteCarloCalibrator {
    fn calibrate(
        &self,
        skeleton: &SkeletonSpec,
        ns: &[u64],
        replicas: usize,
    ) -> Result<Vec<CalibrationRow>, VerifyError> {
        let key = format!(
            "{}|{:?}|{}",
            serde_json::to_string(skeleton).expect("skeleton specs serialize"),
            ns,
            replicas
        );
        if let Some(rows) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(rows.clone());
        }
        let rows = estimate_ell_star(
            &skeleton.build()?,
            ns,
            replicas,
            calibration_stream(self.master_seed, skeleton),
        )?;
        self.cache.lock().expect("cache lock").insert(key, rows.clone());
        Ok(rows)
    }
}

/// Everything a recipe needs besides its configuration.
pub struct RunContext<'a> {
    pub master_seed: u64,
    pub calibrator: &'a dyn Calibrator,
}

impl<'a> RunContext<'a> {
    pub fn new(master_seed: u64, calibrator: &'a dyn Calibrator) -> Self {
        Self {
            master_seed,
            calibrator,
        }
    }

    /// Root of the replica streams of a recipe.
    pub fn stream(&self, recipe: &str) -> SeedStream {
        SeedStream::new(self.master_seed).derive(recipe)
    }
}

/// How the clock normalization `a_N` is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Chosen from the trap law kind.
    #[default]
    Auto,
    /// `a_N = N`.
    Linear,
    /// `a_N = N^{1/α}`.
    Stable,
    /// `a_N = N^{1/α} ℓ̂*(N)^{1 - 1/α}`.
    StableRange,
}

impl Normalization {
    pub fn resolve(self, law: &TrapLaw) -> Normalization {
        if self != Normalization::Auto {
            return self;
        }
        match law {
            TrapLaw::Dirac { .. } | TrapLaw::ExponentialFixedMean { .. } => Normalization::Linear,
            TrapLaw::Pareto { alpha, .. } if *alpha >= 1.0 => Normalization::Linear,
            TrapLaw::Pareto { .. } => Normalization::Stable,
            _ if law.annealed_mean().is_finite() => Normalization::Linear,
            _ => Normalization::StableRange,
        }
    }

    pub fn needs_ell_star(self) -> bool {
        self == Normalization::StableRange
    }

    pub fn a_n(self, n: f64, alpha: f64, ell_star: Option<f64>) -> f64 {
        match self {
            Normalization::Auto | Normalization::Linear => n,
            Normalization::Stable => n.powf(1.0 / alpha),
            Normalization::StableRange => {
                n.powf(1.0 / alpha) * ell_star.expect("calibrated").powf(1.0 - 1.0 / alpha)
            }
        }
    }
}

/// Runs `f` for replicas `0..m` in parallel; results come back in replica
/// order whatever the schedule.
fn replicate<T, F>(stream: SeedStream, m: usize, f: F) -> Result<Vec<T>, VerifyError>
where
    T: Send,
    F: Fn(SeedStream) -> Result<T, VerifyError> + Sync + Send,
{
    (0..m)
        .into_par_iter()
        .map(|i| f(stream.index(i as u64)))
        .collect()
}

fn check_scales(scales: &[u64]) -> Result<(), VerifyError> {
    if scales.is_empty() {
        return Err(VerifyError::InvalidConfig("the scale list is empty".into()));
    }
    if scales[0] == 0 || scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(VerifyError::InvalidConfig(format!(
            "scales must be positive and strictly increasing, got {scales:?}"
        )));
    }
    if *scales.last().expect("nonempty") > MAX_SCALE {
        return Err(VerifyError::InvalidConfig(format!(
            "scales are capped at N = {MAX_SCALE}"
        )));
    }
    Ok(())
}

fn check_replicas(m: usize, min: usize) -> Result<(), VerifyError> {
    if m < min {
        return Err(VerifyError::InvalidConfig(format!(
            "insufficient replicas: need M ≥ {min}, got {m}"
        )));
    }
    if m > MAX_REPLICAS {
        return Err(VerifyError::InvalidConfig(format!(
            "replicas are capped at M = {MAX_REPLICAS}"
        )));
    }
    Ok(())
}

fn check_law(law: &TrapLaw) -> Result<(), VerifyError> {
    law.validate()?;
    Ok(())
}

fn check_times(times: &[f64], what: &str) -> Result<(), VerifyError> {
    if times.is_empty()
        || times.iter().any(|t| !t.is_finite() || *t < 0.0)
        || times.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(VerifyError::InvalidConfig(format!(
            "{what} must be nonnegative and strictly increasing, got {times:?}"
        )));
    }
    Ok(())
}

fn resolve_alpha(alpha: Option<f64>, law: &TrapLaw) -> Result<f64, VerifyError> {
    let alpha = alpha.or_else(|| law.tail_index()).ok_or_else(|| {
        VerifyError::InvalidConfig(format!(
            "the {} law has no tail index; set alpha explicitly",
            law.kind_name()
        ))
    })?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(VerifyError::InvalidConfig(format!("alpha must be positive, got {alpha}")));
    }
    Ok(alpha)
}

/// Calibrates ℓ̂* at `scales` if `needed`, recording the table in the report.
fn calibrate_if(
    needed: bool,
    ctx: &RunContext<'_>,
    skeleton: &SkeletonSpec,
    scales: &[u64],
    replicas: usize,
    report: &mut ScalingReport,
) -> Result<Option<Vec<CalibrationRow>>, VerifyError> {
    if !needed {
        return Ok(None);
    }
    let rows = ctx.calibrator.calibrate(skeleton, scales, replicas)?;
    report.calibration.extend(rows.iter().copied());
    Ok(Some(rows))
}

fn default_calibration_replicas() -> usize {
    10_000
}

/// Any recipe with its configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum RecipeConfig {
    FkTrajectory(FkTrajectoryConfig),
    IndependentIncrements(IndependentIncrementsConfig),
    LaplaceCondition(LaplaceConditionConfig),
    LinearLimit(LinearLimitConfig),
    QuadraticVariation(QuadraticVariationConfig),
    RangeLln(RangeLlnConfig),
    SmallSets(SmallSetsConfig),
    StableClock(StableClockConfig),
}

/// Names accepted by [`RecipeConfig::deserialize_named`], sorted.
pub const RECIPE_NAMES: [&str; 8] = [
    "fk_trajectory",
    "independent_increments",
    "laplace_condition",
    "linear_limit",
    "quadratic_variation",
    "range_lln",
    "small_sets",
    "stable_clock",
];

impl RecipeConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RecipeConfig::FkTrajectory(_) => "fk_trajectory",
            RecipeConfig::IndependentIncrements(_) => "independent_increments",
            RecipeConfig::LaplaceCondition(_) => "laplace_condition",
            RecipeConfig::LinearLimit(_) => "linear_limit",
            RecipeConfig::QuadraticVariation(_) => "quadratic_variation",
            RecipeConfig::RangeLln(_) => "range_lln",
            RecipeConfig::SmallSets(_) => "small_sets",
            RecipeConfig::StableClock(_) => "stable_clock",
        }
    }

    /// Default configuration of the named recipe.
    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "fk_trajectory" => RecipeConfig::FkTrajectory(Default::default()),
            "independent_increments" => RecipeConfig::IndependentIncrements(Default::default()),
            "laplace_condition" => RecipeConfig::LaplaceCondition(Default::default()),
            "linear_limit" => RecipeConfig::LinearLimit(Default::default()),
            "quadratic_variation" => RecipeConfig::QuadraticVariation(Default::default()),
            "range_lln" => RecipeConfig::RangeLln(Default::default()),
            "small_sets" => RecipeConfig::SmallSets(Default::default()),
            "stable_clock" => RecipeConfig::StableClock(Default::default()),
            _ => return None,
        })
    }

    /// Parses the configuration of the named recipe; unknown keys are errors.
    pub fn deserialize_named<'de, D: Deserializer<'de>>(
        name: &str,
        deserializer: D,
    ) -> Result<Self, D::Error> {
        Ok(match name {
            "fk_trajectory" => RecipeConfig::FkTrajectory(Deserialize::deserialize(deserializer)?),
            "independent_increments" => {
                RecipeConfig::IndependentIncrements(Deserialize::deserialize(deserializer)?)
            }
            "laplace_condition" => {
                RecipeConfig::LaplaceCondition(Deserialize::deserialize(deserializer)?)
            }
            "linear_limit" => RecipeConfig::LinearLimit(Deserialize::deserialize(deserializer)?),
            "quadratic_variation" => {
                RecipeConfig::QuadraticVariation(Deserialize::deserialize(deserializer)?)
            }
            "range_lln" => RecipeConfig::RangeLln(Deserialize::deserialize(deserializer)?),
            "small_sets" => RecipeConfig::SmallSets(Deserialize::deserialize(deserializer)?),
            "stable_clock" => RecipeConfig::StableClock(Deserialize::deserialize(deserializer)?),
            other => {
                return Err(serde::de::Error::custom(format!(
                    "unknown recipe `{other}`; expected one of {}",
                    RECIPE_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn skeleton(&self) -> &SkeletonSpec {
        match self {
            RecipeConfig::FkTrajectory(c) => &c.skeleton,
            RecipeConfig::IndependentIncrements(c) => &c.skeleton,
            RecipeConfig::LaplaceCondition(c) => &c.skeleton,
            RecipeConfig::LinearLimit(c) => &c.skeleton,
            RecipeConfig::QuadraticVariation(c) => &c.skeleton,
            RecipeConfig::RangeLln(c) => &c.skeleton,
            RecipeConfig::SmallSets(c) => &c.skeleton,
            RecipeConfig::StableClock(c) => &c.skeleton,
        }
    }

    /// The scales at which ℓ̂* would be calibrated, with the replica count.
    pub fn calibration_plan(&self) -> (Vec<u64>, usize) {
        match self {
            RecipeConfig::FkTrajectory(c) => (vec![c.scale], c.calibration_replicas),
            RecipeConfig::IndependentIncrements(c) => (c.scales.clone(), default_calibration_replicas()),
            RecipeConfig::LaplaceCondition(c) => (c.scales.clone(), c.calibration_replicas),
            RecipeConfig::LinearLimit(c) => (c.scales.clone(), default_calibration_replicas()),
            RecipeConfig::QuadraticVariation(c) => (vec![c.scale], c.calibration_replicas),
            RecipeConfig::RangeLln(c) => (range::calibration_scales(&c.scales), c.calibration_replicas),
            RecipeConfig::SmallSets(c) => (c.scales.clone(), c.calibration_replicas),
            RecipeConfig::StableClock(c) => (c.scales.clone(), c.calibration_replicas),
        }
    }

    pub fn run(&self, ctx: &RunContext<'_>) -> Result<ScalingReport, VerifyError> {
        let start = std::time::Instant::now();
        let mut report = match self {
            RecipeConfig::FkTrajectory(c) => c.run(ctx),
            RecipeConfig::IndependentIncrements(c) => c.run(ctx),
            RecipeConfig::LaplaceCondition(c) => c.run(ctx),
            RecipeConfig::LinearLimit(c) => c.run(ctx),
            RecipeConfig::QuadraticVariation(c) => c.run(ctx),
            RecipeConfig::RangeLln(c) => c.run(ctx),
            RecipeConfig::SmallSets(c) => c.run(ctx),
            RecipeConfig::StableClock(c) => c.run(ctx),
        }?;
        report.runtime_seconds = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

/// Catalog entry for one recipe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecipeInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// Expected single-core runtime at the defaults.
    pub runtime: &'static str,
    /// Every parameter, thresholds included, at its default value.
    pub defaults: serde_json::Value,
}

/// All recipes, sorted by name.
pub fn list_recipes() -> Vec<RecipeInfo> {
    RECIPE_NAMES
        .iter()
        .map(|&name| {
            let config = RecipeConfig::default_for(name).expect("catalog names are known");
            let (summary, runtime) = match name {
                "fk_trajectory" => (
                    "marginals of X_N against the Fractional Kinetics (or Brownian) reference, and the stagnation fingerprint",
                    "about 1 min",
                ),
                "independent_increments" => (
                    "rank correlation of consecutive clock increments",
                    "about 1 min",
                ),
                "laplace_condition" => (
                    "g_N(r, λ) from the trap Laplace transform: λ-scaling and the curve r -> f(r)",
                    "a few seconds",
                ),
                "linear_limit" => (
                    "S(N)/N against the annealed mean waiting time",
                    "under 10 s",
                ),
                "quadratic_variation" => (
                    "trace of the quadratic variation of X_N against σ² S_N^{-1}(t)",
                    "about 30 s",
                ),
                "range_lln" => (
                    "range, local-time profile and origin local-time tail of the skeleton",
                    "about 1 min",
                ),
                "small_sets" => (
                    "sites shared between time windows and the load of frequently visited sites",
                    "about 1 min",
                ),
                "stable_clock" => (
                    "Hill index, self-similarity exponent and stabilized marginals of S(N)",
                    "about 1 min",
                ),
                _ => unreachable!(),
            };
            RecipeInfo {
                name,
                summary,
                runtime,
                defaults: serde_json::to_value(&config).expect("configs serialize"),
            }
        })
        .collect()
}
