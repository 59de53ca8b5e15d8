//! The clock process `S(n)`, its inverse and the RTRW trajectory.
//!
//! `S(n) = Σ_{k<n} τ̃_k` where `τ̃_k` is the `L(Y(k), k)`-th waiting time
//! drawn at `Y(k)`. The continuous-time walk sits at `Y(k)` during
//! `[S(k), S(k+1))`, so `X(t) = Y(S^{-1}(t) - 1)` with the right-continuous
//! inverse `S^{-1}(t) = inf{k : S(k) > t}`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use thiserror::Error;

use crate::environment::{SiteEnvironment, TrapLaw};
use crate::lattice::{Site, MAX_DIM};
use crate::skeleton::{StepDistribution, StepKind, WalkPath};

#[derive(Debug, Error, PartialEq)]
pub enum ClockError {
    #[error("time {t} is beyond the clock horizon S(n) = {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("time must be a nonnegative number, got {0}")]
    InvalidTime(f64),
    #[error("path has {available} steps but ⌊N t⌋ = {needed} are required")]
    InsufficientSteps { needed: usize, available: usize },
    #[error("the walk must have at least one step")]
    EmptyPath,
    #[error("environment has already been used; the clock needs a fresh one")]
    UsedEnvironment,
    #[error("time grid must be nonempty, nonnegative and strictly increasing")]
    InvalidGrid,
    #[error("invalid scaling: {0}")]
    InvalidScaling(String),
    #[error("step budget of {max_steps} exhausted before the clock reached {target}")]
    StepBudget { max_steps: usize, target: f64 },
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// A realized clock `S(0..=n)` with its waiting times `τ̃_0..τ̃_{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockPath {
    s: Vec<f64>,
    tau: Vec<f64>,
}

impl ClockPath {
    /// Builds the clock from successive waiting times.
    pub fn from_waiting_times(tau: Vec<f64>) -> Self {
        let mut acc = CompensatedSum::default();
        let mut s = Vec::with_capacity(tau.len() + 1);
        s.push(0.0);
        for &t in &tau {
            acc.add(t);
            s.push(acc.value());
        }
        Self { s, tau }
    }

    pub fn steps(&self) -> usize {
        self.tau.len()
    }

    /// `S(k)`.
    pub fn s(&self, k: usize) -> f64 {
        self.s[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn waiting_times(&self) -> &[f64] {
        &self.tau
    }

    /// `S(n)`.
    pub fn horizon(&self) -> f64 {
        *self.s.last().expect("S(0) is always present")
    }
}

/// Draws `τ̃_0..τ̃_{n-1}` along `path` from a fresh environment.
///
/// For trap laws whose `π_x` is the same at every site the environment is
/// not consulted: the waiting times are then i.i.d. regardless of the path.
pub fn build_clock<R: Rng + ?Sized>(
    path: &WalkPath,
    env: &mut SiteEnvironment<'_>,
    rng: &mut R,
) -> Result<ClockPath, ClockError> {
    let n = path.steps();
    if n == 0 {
        return Err(ClockError::EmptyPath);
    }
    if !env.is_fresh() {
        return Err(ClockError::UsedEnvironment);
    }
    let tau: Vec<f64> = match env.law().homogeneous_measure() {
        Some(measure) => (0..n).map(|_| measure.sample(rng)).collect(),
        None => (0..n)
            .map(|k| {
                let x = path.position(k);
                let t = env.draw_waiting_time(x, rng);
                debug_assert_eq!(env.draws_at(&x), path.visit_ordinal(k));
                t
            })
            .collect(),
    };
    Ok(ClockPath::from_waiting_times(tau))
}

fn check_time(t: f64) -> Result<(), ClockError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ClockError::InvalidTime(t))
    }
}

/// `S^{-1}(t) = inf{k ≥ 0 : S(k) > t}`.
pub fn inverse_clock(clock: &ClockPath, t: f64) -> Result<usize, ClockError> {
    check_time(t)?;
    if t >= clock.horizon() {
        return Err(ClockError::HorizonExceeded {
            t,
            horizon: clock.horizon(),
        });
    }
    Ok(clock.s.partition_point(|&s| s <= t))
}

/// `X(t)`: the site occupied at time `t`.
pub fn rtrw_position(path: &WalkPath, clock: &ClockPath, t: f64) -> Result<Site, ClockError> {
    let k = inverse_clock(clock, t)?;
    Ok(path.position(k - 1))
}

/// The matrix `𝒜` applied to skeleton increments.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalingMatrix {
    /// `c · I`, stored as `c²` so that `√d · I` has an exact square.
    Isotropic { dim: usize, factor_sq: f64 },
    /// Row-major `d × d`.
    General { dim: usize, entries: Vec<f64> },
}

/// Eigenvalues below this are clamped before inverting the covariance.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

impl ScalingMatrix {
    pub fn identity(dim: usize) -> Self {
        ScalingMatrix::Isotropic { dim, factor_sq: 1.0 }
    }

    /// `√d · I` for simple random walk, `Cov(ξ)^{-1/2}` otherwise.
    pub fn for_law(nu: &StepDistribution) -> Self {
        let d = nu.dim();
        if nu.kind() == StepKind::Simple {
            return ScalingMatrix::Isotropic {
                dim: d,
                factor_sq: d as f64,
            };
        }
        let cov = DMatrix::from_row_slice(d, d, &nu.covariance());
        let eig = SymmetricEigen::new(cov);
        let inv_sqrt = eig
            .eigenvalues
            .map(|l| 1.0 / l.max(EIGENVALUE_FLOOR).sqrt());
        let m = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(m[(i, j)]);
            }
        }
        ScalingMatrix::General { dim: d, entries }
    }

    pub fn dim(&self) -> usize {
        match self {
            ScalingMatrix::Isotropic { dim, .. } | ScalingMatrix::General { dim, .. } => *dim,
        }
    }

    #[inline]
    pub fn apply(&self, x: Site) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        match self {
            ScalingMatrix::Isotropic { dim, factor_sq } => {
                let factor = factor_sq.sqrt();
                for i in 0..*dim {
                    out[i] = factor * f64::from(x.coord(i));
                }
            }
            ScalingMatrix::General { dim, entries } => {
                for i in 0..*dim {
                    out[i] = (0..*dim)
                        .map(|j| entries[i * dim + j] * f64::from(x.coord(j)))
                        .sum();
                }
            }
        }
        out
    }

    /// `|𝒜x|²`.
    #[inline]
    pub fn norm_sq(&self, x: Site) -> f64 {
        match self {
            ScalingMatrix::Isotropic { factor_sq, .. } => factor_sq * x.norm_sq() as f64,
            _ => self.apply(x).iter().map(|v| v * v).sum(),
        }
    }

    /// `σ² = E|𝒜ξ|²`, exact over the finite support of `ν`.
    pub fn sigma2(&self, nu: &StepDistribution) -> f64 {
        nu.support().iter().map(|(s, p)| p * self.norm_sq(*s)).sum()
    }
}

/// `X_N`, `S_N` and `S_N^{-1}` evaluated exactly on a time grid.
#[derive(Clone, Debug)]
pub struct RescaledTrajectory<'a> {
    pub path: &'a WalkPath,
    pub clock: &'a ClockPath,
    pub scale: f64,
    pub a_n: f64,
    pub matrix: ScalingMatrix,
    pub grid: Vec<f64>,
    /// `S_N(t_j) = S(⌊N t_j⌋) / a_N`.
    pub clock_values: Vec<f64>,
    /// `S^{-1}(a_N t_j)` as a step index; `S_N^{-1}(t_j)` is this over `N`.
    pub inverse_steps: Vec<usize>,
    /// `X_N(t_j) = 𝒜 X(a_N t_j) / √N`.
    pub positions: Vec<[f64; MAX_DIM]>,
}

impl RescaledTrajectory<'_> {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `S_N^{-1}(t_j)`.
    pub fn inverse(&self, j: usize) -> f64 {
        self.inverse_steps[j] as f64 / self.scale
    }

    /// `|X_N(t_j)|`.
    pub fn displacement(&self, j: usize) -> f64 {
        self.positions[j].iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn rescale<'a>(
    path: &'a WalkPath,
    clock: &'a ClockPath,
    scale: f64,
    a_n: f64,
    matrix: ScalingMatrix,
    grid: &[f64],
) -> Result<RescaledTrajectory<'a>, ClockError> {
    if !(scale > 0.0) || !(a_n > 0.0) || !scale.is_finite() || !a_n.is_finite() {
        return Err(ClockError::InvalidScaling(format!(
            "N = {scale} and a_N = {a_n} must be positive"
        )));
    }
    if matrix.dim() != path.dim() {
        return Err(ClockError::InvalidScaling(format!(
            "matrix dimension {} does not match walk dimension {}",
            matrix.dim(),
            path.dim()
        )));
    }
    if grid.is_empty() || grid[0] < 0.0 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ClockError::InvalidGrid);
    }
    let t_max = *grid.last().expect("nonempty");
    let needed = (scale * t_max).floor() as usize;
    if needed > clock.steps() {
        return Err(ClockError::InsufficientSteps {
            needed,
            available: clock.steps(),
        });
    }
    let root = scale.sqrt();
    let mut clock_values = Vec::with_capacity(grid.len());
    let mut inverse_steps = Vec::with_capacity(grid.len());
    let mut positions = Vec::with_capacity(grid.len());
    for &t in grid {
        clock_values.push(clock.s((scale * t).floor() as usize) / a_n);
        let k = inverse_clock(clock, a_n * t)?;
        inverse_steps.push(k);
        let mut x = matrix.apply(path.position(k - 1));
        for v in &mut x {
            *v /= root;
        }
        positions.push(x);
    }
    Ok(RescaledTrajectory {
        path,
        clock,
        scale,
        a_n,
        matrix,
        grid: grid.to_vec(),
        clock_values,
        inverse_steps,
        positions,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticVariation {
    /// `trace[X_N, X_N]_t`.
    pub trace: f64,
    /// `S_N^{-1}(t)`.
    pub inverse: f64,
    pub sigma2: f64,
    /// `trace / (σ² S_N^{-1}(t))`.
    pub ratio: f64,
}

/// `(1/N) Σ_{j ≤ S^{-1}(a_N t)} |𝒜 ξ_j|²` and its ratio to `σ² S_N^{-1}(t)`.
pub fn quadratic_variation_trace(
    traj: &RescaledTrajectory<'_>,
    nu: &StepDistribution,
    t: f64,
) -> Result<QuadraticVariation, ClockError> {
    let k = inverse_clock(traj.clock, traj.a_n * t)?;
    if k > traj.path.steps() {
        return Err(ClockError::InsufficientSteps {
            needed: k,
            available: traj.path.steps(),
        });
    }
    let mut acc = CompensatedSum::default();
    for j in 1..=k {
        acc.add(traj.matrix.norm_sq(traj.path.increment(j)));
    }
    let trace = acc.value() / traj.scale;
    let inverse = k as f64 / traj.scale;
    let sigma2 = traj.matrix.sigma2(nu);
    Ok(QuadraticVariation {
        trace,
        inverse,
        sigma2,
        ratio: trace / (sigma2 * inverse),
    })
}

/// Samples walk and clock jointly until `S` exceeds `time_horizon` and at
/// least `min_steps` steps have been taken.
pub fn sample_rtrw_until<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    nu: &StepDistribution,
    env: &mut SiteEnvironment<'_>,
    time_horizon: f64,
    min_steps: usize,
    max_steps: usize,
    walk_rng: &mut R1,
    wait_rng: &mut R2,
) -> Result<(WalkPath, ClockPath), ClockError> {
    check_time(time_horizon)?;
    if !env.is_fresh() {
        return Err(ClockError::UsedEnvironment);
    }
    let homogeneous = env.law().homogeneous_measure();
    let mut path = WalkPath::new(nu.dim());
    let mut tau = Vec::new();
    let mut acc = CompensatedSum::default();
    let mut x = Site::ORIGIN;
    while acc.value() <= time_horizon || tau.len() < min_steps {
        if tau.len() >= max_steps {
            return Err(ClockError::StepBudget {
                max_steps,
                target: time_horizon,
            });
        }
        let t = match homogeneous {
            Some(m) => m.sample(wait_rng),
            None => env.draw_waiting_time(x, wait_rng),
        };
        acc.add(t);
        tau.push(t);
        x = path.push_step(nu.sample(walk_rng));
    }
    Ok((path, ClockPath::from_waiting_times(tau)))
}

/// `X(t_1), ..., X(t_m)` for increasing times, sampled jointly with the
/// clock without storing the path or its local times.
pub fn sample_positions_at<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    nu: &StepDistribution,
    env: &mut SiteEnvironment<'_>,
    times: &[f64],
    max_steps: usize,
    walk_rng: &mut R1,
    wait_rng: &mut R2,
) -> Result<Vec<Site>, ClockError> {
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ClockError::InvalidGrid);
    }
    if !env.is_fresh() {
        return Err(ClockError::UsedEnvironment);
    }
    let homogeneous = env.law().homogeneous_measure();
    let mut out = Vec::with_capacity(times.len());
    let mut acc = CompensatedSum::default();
    let mut x = Site::ORIGIN;
    let mut steps = 0usize;
    while out.len() < times.len() {
        if steps >= max_steps {
            return Err(ClockError::StepBudget {
                max_steps,
                target: times[times.len() - 1],
            });
        }
        let t = match homogeneous {
            Some(m) => m.sample(wait_rng),
            None => env.draw_waiting_time(x, wait_rng),
        };
        acc.add(t);
        // X = x on [S(k), S(k+1))
        let next = acc.value();
        while out.len() < times.len() && times[out.len()] < next {
            out.push(x);
        }
        x = x + nu.sample(walk_rng);
        steps += 1;
    }
    Ok(out)
}

/// `S(n_1), ..., S(n_m)` for nondecreasing `n_i`, without storing the path.
pub fn sample_clock_at<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    nu: &StepDistribution,
    law: &TrapLaw,
    realization_seed: u64,
    indices: &[usize],
    walk_rng: &mut R1,
    wait_rng: &mut R2,
) -> Vec<f64> {
    debug_assert!(indices.windows(2).all(|w| w[0] <= w[1]));
    let mut out = Vec::with_capacity(indices.len());
    let mut acc = CompensatedSum::default();
    let mut k = 0usize;
    match law.homogeneous_measure() {
        Some(m) => {
            for &n in indices {
                while k < n {
                    acc.add(m.sample(wait_rng));
                    k += 1;
                }
                out.push(acc.value());
            }
        }
        None => {
            let mut env = SiteEnvironment::new(law, realization_seed);
            let mut x = Site::ORIGIN;
            for &n in indices {
                while k < n {
                    acc.add(env.draw_waiting_time(x, wait_rng));
                    x = x + nu.sample(walk_rng);
                    k += 1;
                }
                out.push(acc.value());
            }
        }
    }
    out
}
