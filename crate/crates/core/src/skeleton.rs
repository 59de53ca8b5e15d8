//! The discrete-time skeleton walk `Y` and its path functionals.
//!
//! A [`WalkPath`] carries the trajectory together with its local-time ledger
//! `L(x, n)`. [`range_census`] derives the range-type statistics from the
//! ledger: the range `R(n) = {Y(0), ..., Y(n-1)}`, the level sets `R^k(n)` of
//! the local time, the bands `R^k_β(n)` used in the recurrent case, the
//! window overlap sets `M_N^i`/`O_N^i` and the frequently-visited load
//! `F_{N,K}`.

use std::collections::BTreeMap;

use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{Site, MAX_DIM};

/// Tolerance on the total mass of a step table and on the mean of a centred law.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SkeletonError {
    #[error("dimension {0} is outside the supported range 1..={MAX_DIM}")]
    Dimension(usize),
    #[error("step {offset:?} has {got} coordinates, expected {expected}")]
    StepDimension {
        offset: Vec<i32>,
        got: usize,
        expected: usize,
    },
    #[error("step probabilities must be strictly positive, got {0}")]
    NonPositiveProbability(f64),
    #[error("step probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("step {0:?} listed twice")]
    DuplicateStep(Vec<i32>),
    #[error("step law puts all of its mass on the origin")]
    Degenerate,
    #[error("step law is not centred (mean {0:?})")]
    NotCentred(Vec<f64>),
    #[error("recurrent census requires an ℓ*(n) value")]
    MissingEllStar,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Uniform on the `2d` unit vectors.
    Simple,
    /// Deterministic step `e_1`.
    Drift,
    /// User supplied finite-support table.
    Table,
}

/// Finite-support step law `ν` on Z^d.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    dim: usize,
    kind: StepKind,
    support: Vec<(Site, f64)>,
    cumulative: Vec<f64>,
}

impl StepDistribution {
    pub fn simple(dim: usize) -> Result<Self, SkeletonError> {
        check_dim(dim)?;
        let p = 1.0 / (2 * dim) as f64;
        let support = (0..2 * dim)
            .map(|i| (Site::unit(i / 2, i % 2 == 0), p))
            .collect();
        Ok(Self::from_parts(dim, StepKind::Simple, support))
    }

    pub fn drift(dim: usize) -> Result<Self, SkeletonError> {
        check_dim(dim)?;
        Ok(Self::from_parts(
            dim,
            StepKind::Drift,
            vec![(Site::unit(0, true), 1.0)],
        ))
    }

    pub fn table<I>(dim: usize, entries: I) -> Result<Self, SkeletonError>
    where
        I: IntoIterator<Item = (Vec<i32>, f64)>,
    {
        check_dim(dim)?;
        let mut support: Vec<(Site, f64)> = Vec::new();
        for (offset, p) in entries {
            if offset.len() != dim {
                return Err(SkeletonError::StepDimension {
                    got: offset.len(),
                    expected: dim,
                    offset,
                });
            }
            if !(p > 0.0) || !p.is_finite() {
                return Err(SkeletonError::NonPositiveProbability(p));
            }
            let site = Site::from_coords(&offset).expect("dimension checked");
            if support.iter().any(|(s, _)| *s == site) {
                return Err(SkeletonError::DuplicateStep(offset));
            }
            support.push((site, p));
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(SkeletonError::NotNormalized(total));
        }
        let law = Self::from_parts(dim, StepKind::Table, support);
        if law.is_degenerate() {
            return Err(SkeletonError::Degenerate);
        }
        Ok(law)
    }

    fn from_parts(dim: usize, kind: StepKind, support: Vec<(Site, f64)>) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = support
            .iter()
            .map(|(_, p)| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self {
            dim,
            kind,
            support,
            cumulative,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> StepKind {
        self.kind
    }

    pub fn support(&self) -> &[(Site, f64)] {
        &self.support
    }

    pub fn origin_mass(&self) -> f64 {
        self.support
            .iter()
            .filter(|(s, _)| s.is_origin())
            .map(|(_, p)| p)
            .sum()
    }

    /// `ν = δ_0`.
    pub fn is_degenerate(&self) -> bool {
        self.origin_mass() >= 1.0 - PROBABILITY_TOLERANCE
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                self.support
                    .iter()
                    .map(|(s, p)| p * f64::from(s.coord(i)))
                    .sum()
            })
            .collect()
    }

    pub fn is_centred(&self) -> bool {
        self.mean().iter().all(|m| m.abs() <= PROBABILITY_TOLERANCE)
    }

    /// Covariance matrix of one step, row-major `d × d`.
    pub fn covariance(&self) -> Vec<f64> {
        let mean = self.mean();
        let d = self.dim;
        let mut cov = vec![0.0; d * d];
        for (s, p) in &self.support {
            for i in 0..d {
                for j in 0..d {
                    cov[i * d + j] +=
                        p * (f64::from(s.coord(i)) - mean[i]) * (f64::from(s.coord(j)) - mean[j]);
                }
            }
        }
        cov
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Site {
        match self.kind {
            StepKind::Simple => {
                let i = rng.random_range(0..2 * self.dim);
                Site::unit(i >> 1, i & 1 == 0)
            }
            StepKind::Drift => self.support[0].0,
            StepKind::Table => {
                let u: f64 = rng.random();
                let idx = self.cumulative.partition_point(|&c| c <= u);
                self.support[idx.min(self.support.len() - 1)].0
            }
        }
    }
}

fn check_dim(dim: usize) -> Result<(), SkeletonError> {
    if dim == 0 || dim > MAX_DIM {
        Err(SkeletonError::Dimension(dim))
    } else {
        Ok(())
    }
}

/// Serializable description of a step law, as it appears in experiment
/// configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SkeletonSpec {
    Simple {
        dimension: usize,
    },
    Drift {
        dimension: usize,
    },
    Table {
        dimension: usize,
        steps: Vec<TableStep>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableStep {
    pub offset: Vec<i32>,
    pub probability: f64,
}

impl SkeletonSpec {
    pub fn build(&self) -> Result<StepDistribution, SkeletonError> {
        match self {
            SkeletonSpec::Simple { dimension } => StepDistribution::simple(*dimension),
            SkeletonSpec::Drift { dimension } => StepDistribution::drift(*dimension),
            SkeletonSpec::Table { dimension, steps } => StepDistribution::table(
                *dimension,
                steps.iter().map(|s| (s.offset.clone(), s.probability)),
            ),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            SkeletonSpec::Simple { dimension }
            | SkeletonSpec::Drift { dimension }
            | SkeletonSpec::Table { dimension, .. } => *dimension,
        }
    }
}

impl Default for SkeletonSpec {
    fn default() -> Self {
        SkeletonSpec::Simple { dimension: 2 }
    }
}

/// A realized skeleton trajectory `Y(0..=n)` with its local-time ledger.
#[derive(Clone, Debug)]
pub struct WalkPath {
    dim: usize,
    positions: Vec<Site>,
    local_times: FxHashMap<Site, u32>,
    ordinals: Vec<u32>,
}

impl WalkPath {
    /// The trivial path `Y(0) = 0`.
    pub fn new(dim: usize) -> Self {
        let mut local_times = FxHashMap::default();
        local_times.insert(Site::ORIGIN, 1);
        Self {
            dim,
            positions: vec![Site::ORIGIN],
            local_times,
            ordinals: vec![1],
        }
    }

    pub fn with_capacity(dim: usize, steps: usize) -> Self {
        let mut path = Self::new(dim);
        path.positions.reserve(steps);
        path.ordinals.reserve(steps);
        path
    }

    /// Appends one step `ξ`.
    #[inline]
    pub fn push_step(&mut self, step: Site) -> Site {
        let next = *self.positions.last().expect("path is never empty") + step;
        let count = self.local_times.entry(next).or_insert(0);
        *count += 1;
        self.ordinals.push(*count);
        self.positions.push(next);
        next
    }

    /// Appends `count` steps drawn from `nu`.
    pub fn extend<R: Rng + ?Sized>(&mut self, nu: &StepDistribution, count: usize, rng: &mut R) {
        for _ in 0..count {
            self.push_step(nu.sample(rng));
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn positions(&self) -> &[Site] {
        &self.positions
    }

    pub fn position(&self, k: usize) -> Site {
        self.positions[k]
    }

    /// Increment `ξ_j = Y(j) - Y(j-1)`, `1 ≤ j ≤ n`.
    pub fn increment(&self, j: usize) -> Site {
        self.positions[j] - self.positions[j - 1]
    }

    /// `L(x, n)`.
    pub fn local_time(&self, x: &Site) -> u32 {
        self.local_times.get(x).copied().unwrap_or(0)
    }

    pub fn local_times(&self) -> &FxHashMap<Site, u32> {
        &self.local_times
    }

    /// `L(Y(k), k)`: the ordinal of the visit made at time `k`.
    pub fn visit_ordinal(&self, k: usize) -> u32 {
        self.ordinals[k]
    }

    /// `(Y(k), L(Y(k), k))` for `k = 0..=n`.
    pub fn visit_order(&self) -> impl Iterator<Item = (Site, u32)> + '_ {
        self.positions.iter().copied().zip(self.ordinals.iter().copied())
    }

    /// Number of distinct sites among `Y(0..=n)`.
    pub fn distinct_sites(&self) -> usize {
        self.local_times.len()
    }
}

/// Samples `n` steps of the walk with law `nu` started at the origin.
pub fn sample_walk<R: Rng + ?Sized>(
    nu: &StepDistribution,
    n: usize,
    rng: &mut R,
) -> Result<WalkPath, SkeletonError> {
    if nu.is_degenerate() {
        return Err(SkeletonError::Degenerate);
    }
    let mut path = WalkPath::with_capacity(nu.dim(), n);
    path.extend(nu, n, rng);
    Ok(path)
}

/// First return time to the origin if it happens within `horizon` steps.
pub fn first_return_time<R: Rng + ?Sized>(
    nu: &StepDistribution,
    horizon: u64,
    rng: &mut R,
) -> Option<u64> {
    let mut pos = Site::ORIGIN;
    if nu.kind == StepKind::Simple {
        let faces = 2 * nu.dim;
        for k in 1..=horizon {
            let i = rng.random_range(0..faces);
            pos.bump(i >> 1, if i & 1 == 0 { 1 } else { -1 });
            if pos.is_origin() {
                return Some(k);
            }
        }
        return None;
    }
    for k in 1..=horizon {
        pos = pos + nu.sample(rng);
        if pos.is_origin() {
            return Some(k);
        }
    }
    None
}

/// `L(0, n)`: number of visits to the origin among `Y(0..=n)`.
pub fn origin_local_time<R: Rng + ?Sized>(nu: &StepDistribution, n: u64, rng: &mut R) -> u64 {
    let mut pos = Site::ORIGIN;
    let mut visits = 1;
    match nu.kind {
        StepKind::Simple => {
            let faces = 2 * nu.dim;
            for _ in 0..n {
                let i = rng.random_range(0..faces);
                pos.bump(i >> 1, if i & 1 == 0 { 1 } else { -1 });
                visits += u64::from(pos.is_origin());
            }
        }
        _ => {
            for _ in 0..n {
                pos = pos + nu.sample(rng);
                visits += u64::from(pos.is_origin());
            }
        }
    }
    visits
}

/// Monte Carlo estimate of the escape probability `r_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeEstimate {
    pub steps: u64,
    pub replicas: usize,
    /// `r̂_n`.
    pub escape: f64,
    pub std_error: f64,
}

impl EscapeEstimate {
    /// Builds the estimate from the number of replicas that did not return.
    pub fn from_counts(steps: u64, escaped: usize, replicas: usize) -> Self {
        let escape = escaped as f64 / replicas as f64;
        Self {
            steps,
            replicas,
            escape,
            std_error: (escape * (1.0 - escape) / replicas as f64).sqrt(),
        }
    }

    /// `ℓ̂*(n) = 1 / r̂_n`.
    pub fn ell_star(&self) -> f64 {
        1.0 / self.escape
    }
}

/// Estimates `r_n = P[Y(k) ≠ 0, k = 1..n]` from `replicas` independent walks.
pub fn escape_probability<R: Rng + ?Sized>(
    nu: &StepDistribution,
    n: u64,
    replicas: usize,
    rng: &mut R,
) -> Result<EscapeEstimate, SkeletonError> {
    Ok(escape_profile(nu, &[n], replicas, rng)?[0])
}

/// Estimates `r_n` for several `n` from one set of replicas, so the profile
/// is exactly nonincreasing in `n`.
pub fn escape_profile<R: Rng + ?Sized>(
    nu: &StepDistribution,
    ns: &[u64],
    replicas: usize,
    rng: &mut R,
) -> Result<Vec<EscapeEstimate>, SkeletonError> {
    if ns.is_empty() || ns.contains(&0) || replicas == 0 {
        return Err(SkeletonError::InvalidArgument(
            "escape probability needs n ≥ 1 and at least one replica".into(),
        ));
    }
    if nu.is_degenerate() {
        return Err(SkeletonError::Degenerate);
    }
    let horizon = *ns.iter().max().expect("nonempty");
    let returns: Vec<Option<u64>> = (0..replicas)
        .map(|_| first_return_time(nu, horizon, rng))
        .collect();
    Ok(escape_from_returns(ns, &returns))
}

/// Turns first-return times (capped at `max(ns)`) into escape estimates.
pub fn escape_from_returns(ns: &[u64], returns: &[Option<u64>]) -> Vec<EscapeEstimate> {
    ns.iter()
        .map(|&n| {
            let escaped = returns
                .iter()
                .filter(|t| t.is_none_or(|t| t > n))
                .count();
            EscapeEstimate::from_counts(n, escaped, returns.len())
        })
        .collect()
}

/// `K(ε) = -c log(ε²)`.
pub fn theoretical_frequent_threshold(epsilon: f64, c: f64) -> Result<f64, SkeletonError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) || !(c > 0.0) {
        return Err(SkeletonError::InvalidArgument(format!(
            "K(ε) needs 0 < ε ≤ 1 and c > 0, got ε = {epsilon}, c = {c}"
        )));
    }
    Ok(-c * (epsilon * epsilon).ln())
}

#[derive(Clone, Debug, PartialEq)]
pub enum CensusMode {
    /// Exact level sets `R^k(n)`.
    Transient,
    /// Bands `R^k_β(n)` of width `β ℓ*(n)`.
    Recurrent {
        betas: Vec<f64>,
        ell_star: Option<f64>,
    },
}

/// Time windows `[⌊N t_{i-1}⌋, ⌊N t_i⌋ - 1]`, `i = 1..m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Windows {
    pub scale: f64,
    pub times: Vec<f64>,
}

/// Parameters of `F_{N,K}`: local times are read at `⌊N t⌋ - 1`, the
/// threshold is `K ℓ*(N)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequentSpec {
    pub scale: f64,
    pub t: f64,
    pub k: f64,
    pub ell_star: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusOptions {
    pub mode: CensusMode,
    pub windows: Option<Windows>,
    pub frequent: Option<FrequentSpec>,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            mode: CensusMode::Transient,
            windows: None,
            frequent: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandCount {
    pub beta: f64,
    pub k: u32,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowCount {
    /// 1-based window index.
    pub index: usize,
    /// `|R_N^i|`.
    pub range: usize,
    /// `|O_N^i|`.
    pub once: usize,
    /// `|M_N^i|`.
    pub multiple: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeCensus {
    pub n: usize,
    /// `|R(n)|`.
    pub total_range: usize,
    /// `k -> |R^k(n)|`.
    pub exact_counts: BTreeMap<u32, usize>,
    pub band_counts: Vec<BandCount>,
    pub windows: Vec<WindowCount>,
    /// `F_{N,K}`.
    pub frequent_load: Option<u64>,
}

impl RangeCensus {
    pub fn exact(&self, k: u32) -> usize {
        self.exact_counts.get(&k).copied().unwrap_or(0)
    }

    pub fn band(&self, beta: f64, k: u32) -> usize {
        self.band_counts
            .iter()
            .find(|b| b.beta == beta && b.k == k)
            .map_or(0, |b| b.count)
    }
}

/// Local times `L(x, len - 1)` of the prefix `Y(0..len)`.
fn prefix_local_times(path: &WalkPath, len: usize) -> FxHashMap<Site, u32> {
    if len == path.positions.len() {
        return path.local_times.clone();
    }
    let mut counts = FxHashMap::default();
    for &site in &path.positions[..len] {
        *counts.entry(site).or_insert(0) += 1;
    }
    counts
}

/// `l -> #{x : L(x, len - 1) = l}` over the prefix `Y(0..len)`.
pub fn prefix_local_time_histogram(
    path: &WalkPath,
    len: usize,
) -> Result<BTreeMap<u32, usize>, SkeletonError> {
    if len == 0 || len > path.positions.len() {
        return Err(SkeletonError::InvalidArgument(format!(
            "prefix length {len} outside 1..={}",
            path.positions.len()
        )));
    }
    let mut hist = BTreeMap::new();
    for &l in prefix_local_times(path, len).values() {
        *hist.entry(l).or_insert(0) += 1;
    }
    Ok(hist)
}

/// Computes the range statistics of `path` at horizon `n = path.steps()`,
/// i.e. over the positions `Y(0..n)`.
pub fn range_census(path: &WalkPath, options: &CensusOptions) -> Result<RangeCensus, SkeletonError> {
    let n = path.steps();

    let mut exact_counts = BTreeMap::new();
    let last = path.positions[n];
    let levels = path.local_times.iter().filter_map(|(site, &l)| {
        let l = if *site == last { l - 1 } else { l };
        (l > 0).then_some(l)
    });
    let mut band_counts = Vec::new();
    match &options.mode {
        CensusMode::Transient => {
            for l in levels {
                *exact_counts.entry(l).or_insert(0usize) += 1;
            }
        }
        CensusMode::Recurrent { betas, ell_star } => {
            let ell = ell_star.ok_or(SkeletonError::MissingEllStar)?;
            if !(ell > 0.0) || betas.iter().any(|b| !(*b > 0.0)) {
                return Err(SkeletonError::InvalidArgument(
                    "band census needs β > 0 and ℓ*(n) > 0".into(),
                ));
            }
            let levels: Vec<u32> = levels.collect();
            for &l in &levels {
                *exact_counts.entry(l).or_insert(0usize) += 1;
            }
            for &beta in betas {
                let width = beta * ell;
                let mut per_k: BTreeMap<u32, usize> = BTreeMap::new();
                for &l in &levels {
                    let k = (f64::from(l) / width).ceil().max(1.0) as u32;
                    *per_k.entry(k).or_insert(0) += 1;
                }
                band_counts.extend(per_k.into_iter().map(|(k, count)| BandCount { beta, k, count }));
            }
        }
    }
    let total_range = exact_counts.values().sum();

    let windows = match &options.windows {
        Some(w) => window_overlaps(path, w)?,
        None => Vec::new(),
    };

    let frequent_load = match options.frequent {
        Some(spec) => {
            if !(spec.k > 0.0) || !(spec.ell_star > 0.0) || !(spec.t > 0.0) {
                return Err(SkeletonError::InvalidArgument(
                    "frequent load needs K > 0, t > 0 and ℓ*(N) > 0".into(),
                ));
            }
            let len = (spec.scale * spec.t).floor() as usize;
            if len > n + 1 {
                return Err(SkeletonError::InvalidArgument(format!(
                    "⌊N t⌋ = {len} exceeds the path horizon {n}"
                )));
            }
            let threshold = spec.k * spec.ell_star;
            let load = prefix_local_times(path, len)
                .values()
                .filter(|&&l| f64::from(l) >= threshold)
                .map(|&l| u64::from(l))
                .sum();
            Some(load)
        }
        None => None,
    };

    Ok(RangeCensus {
        n,
        total_range,
        exact_counts,
        band_counts,
        windows,
        frequent_load,
    })
}

fn window_overlaps(path: &WalkPath, windows: &Windows) -> Result<Vec<WindowCount>, SkeletonError> {
    let times = &windows.times;
    if times.len() < 2 || times.windows(2).any(|w| !(w[0] < w[1])) || !(times[0] >= 0.0) {
        return Err(SkeletonError::InvalidArgument(
            "window times must be increasing, nonnegative, and at least two".into(),
        ));
    }
    let bounds: Vec<usize> = times
        .iter()
        .map(|t| (windows.scale * t).floor() as usize)
        .collect();
    let end = *bounds.last().expect("nonempty");
    if end > path.positions.len() {
        return Err(SkeletonError::InvalidArgument(format!(
            "window end {end} exceeds the path horizon {}",
            path.steps()
        )));
    }
    // site -> (last window seen, number of distinct windows)
    let mut seen: FxHashMap<Site, (usize, u32)> = FxHashMap::default();
    let mut members: Vec<Vec<Site>> = vec![Vec::new(); bounds.len() - 1];
    for i in 0..bounds.len() - 1 {
        for &site in &path.positions[bounds[i]..bounds[i + 1]] {
            let entry = seen.entry(site).or_insert((usize::MAX, 0));
            if entry.0 != i {
                entry.0 = i;
                entry.1 += 1;
                members[i].push(site);
            }
        }
    }
    Ok(members
        .iter()
        .enumerate()
        .map(|(i, sites)| {
            let once = sites.iter().filter(|s| seen[*s].1 == 1).count();
            WindowCount {
                index: i + 1,
                range: sites.len(),
                once,
                multiple: sites.len() - once,
            }
        })
        .collect())
}
