//! Samplers for the limit objects: the one-sided α-stable subordinator,
//! Brownian motion, and the Fractional Kinetics process `B(V_α^{-1}(t))`.
//!
//! The subordinator is standardized by `E[e^{-λ V_α(t)}] = e^{-t λ^α}`.

use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::MAX_DIM;

#[derive(Debug, Error, PartialEq)]
pub enum ReferenceError {
    #[error("stable index must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("time increment must be positive, got {0}")]
    InvalidIncrement(f64),
    #[error("time grid must be nonempty, start at t ≥ 0 and be strictly increasing")]
    InvalidGrid,
    #[error("dimension {0} is outside 1..={MAX_DIM}")]
    InvalidDimension(usize),
}

/// One-sided α-stable law with `E[e^{-λ V_α(1)}] = e^{-λ^α}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    alpha: f64,
}

impl StableSpec {
    pub fn new(alpha: f64) -> Result<Self, ReferenceError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self { alpha })
        } else {
            Err(ReferenceError::InvalidAlpha(alpha))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `V_α(1)` by Kanter's representation
    /// `sin(αU) / sin(U)^{1/α} · (sin((1-α)U) / E)^{(1-α)/α}`.
    #[inline]
    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        let u = std::f64::consts::PI * rng.sample::<f64, _>(Open01);
        let e: f64 = rng.sample(Exp1);
        let ln_v = (a * u).sin().ln() - (u.sin().ln()) / a
            + (1.0 - a) / a * (((1.0 - a) * u).sin().ln() - e.ln());
        ln_v.exp()
    }

    /// `V_α(dt) = dt^{1/α} V_α(1)` in law.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        dt.powf(1.0 / self.alpha) * self.sample_unit(rng)
    }
}

/// An increment `V_α(dt)` of the standardized subordinator.
pub fn sample_stable_increment<R: Rng + ?Sized>(
    alpha: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64, ReferenceError> {
    let spec = StableSpec::new(alpha)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(ReferenceError::InvalidIncrement(dt));
    }
    Ok(spec.sample(dt, rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceKind {
    Subordinator { alpha: f64 },
    Brownian { dim: usize },
    FractionalKinetics { alpha: f64, dim: usize },
}

/// A reference process sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePath {
    pub kind: ReferenceKind,
    pub grid: Vec<f64>,
    /// One entry per grid point: `[V(t)]` for the subordinator, a point of
    /// R^d otherwise.
    pub values: Vec<Vec<f64>>,
    /// `V_α^{-1}(t_j)` for the Fractional Kinetics kind.
    pub time_change: Option<Vec<f64>>,
}

impl ReferencePath {
    /// Euclidean norm of the value at grid index `j`.
    pub fn norm(&self, j: usize) -> f64 {
        self.values[j].iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Ratio between the requested grid spacing and the internal subordinator
/// grid of the Fractional Kinetics sampler.
pub const FK_REFINEMENT: f64 = 100.0;

fn check_grid(grid: &[f64]) -> Result<(), ReferenceError> {
    if grid.is_empty()
        || !(grid[0] >= 0.0)
        || grid.windows(2).any(|w| !(w[0] < w[1]))
        || !grid[grid.len() - 1].is_finite()
    {
        Err(ReferenceError::InvalidGrid)
    } else {
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<(), ReferenceError> {
    if dim == 0 || dim > MAX_DIM {
        Err(ReferenceError::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

/// Brownian motion at nondecreasing times, started at 0.
fn brownian_at<R: Rng + ?Sized>(dim: usize, times: &[f64], rng: &mut R) -> Vec<Vec<f64>> {
    let mut b = vec![0.0; dim];
    let mut last = 0.0;
    times
        .iter()
        .map(|&t| {
            let sd = (t - last).max(0.0).sqrt();
            if sd > 0.0 {
                for v in &mut b {
                    *v += sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            last = t;
            b.clone()
        })
        .collect()
}

/// First-passage times `inf{s : V(s) > t_j}` of the subordinator simulated
/// on the lattice `hZ`, evaluated at the increasing levels `levels`.
pub fn inverse_subordinator_on_grid<R: Rng + ?Sized>(
    spec: &StableSpec,
    h: f64,
    levels: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    let step_scale = h.powf(1.0 / spec.alpha());
    let mut v = 0.0;
    let mut j = 0u64;
    levels
        .iter()
        .map(|&t| {
            while v <= t {
                v += step_scale * spec.sample_unit(rng);
                j += 1;
            }
            j as f64 * h
        })
        .collect()
}

/// Samples a reference path on `grid`.
///
/// The Fractional Kinetics kind simulates the subordinator on an internal
/// grid [`FK_REFINEMENT`] times finer than the smallest gap of `grid`
/// (counting the gap from 0), inverts it by first passage, and evaluates an
/// independent Brownian motion at the inverse times.
pub fn sample_reference_path<R: Rng + ?Sized>(
    kind: ReferenceKind,
    grid: &[f64],
    rng: &mut R,
) -> Result<ReferencePath, ReferenceError> {
    check_grid(grid)?;
    let (values, time_change) = match kind {
        ReferenceKind::Subordinator { alpha } => {
            let spec = StableSpec::new(alpha)?;
            let mut v = 0.0;
            let mut last = 0.0;
            let values = grid
                .iter()
                .map(|&t| {
                    if t > last {
                        v += spec.sample(t - last, rng);
                    }
                    last = t;
                    vec![v]
                })
                .collect();
            (values, None)
        }
        ReferenceKind::Brownian { dim } => {
            check_dim(dim)?;
            (brownian_at(dim, grid, rng), None)
        }
        ReferenceKind::FractionalKinetics { alpha, dim } => {
            let spec = StableSpec::new(alpha)?;
            check_dim(dim)?;
            let mut gap = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            if grid[0] > 0.0 {
                gap = gap.min(grid[0]);
            }
            if !gap.is_finite() {
                // a single grid point at t = 0
                gap = 1.0;
            }
            let inverse = inverse_subordinator_on_grid(&spec, gap / FK_REFINEMENT, grid, rng);
            (brownian_at(dim, &inverse, rng), Some(inverse))
        }
    };
    Ok(ReferencePath {
        kind,
        grid: grid.to_vec(),
        values,
        time_change,
    })
}
