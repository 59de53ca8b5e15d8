//! Quadratic variation of the rescaled trajectory against the inverse clock.

use serde::{Deserialize, Serialize};

use super::*;
use crate::clock::{quadratic_variation_trace, rescale, sample_rtrw_until, ScalingMatrix};
use crate::environment::SiteEnvironment;
use crate::skeleton::TableStep;
use crate::stats::{mean, std_dev};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraticVariationThresholds {
    pub mean_tolerance: f64,
    pub sd_max: f64,
    /// Pathwise tolerance when `|𝒜ξ|²` is constant on the support of ν.
    pub identity_tolerance: f64,
    /// Simulation budget in units of N.
    pub max_steps_factor: usize,
}

impl Default for QuadraticVariationThresholds {
    fn default() -> Self {
        Self {
            mean_tolerance: 0.02,
            sd_max: 0.05,
            identity_tolerance: 1e-12,
            max_steps_factor: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraticVariationConfig {
    pub skeleton: SkeletonSpec,
    pub trap: TrapLaw,
    pub alpha: Option<f64>,
    pub scale: u64,
    pub replicas: usize,
    pub t: f64,
    pub normalization: Normalization,
    pub calibration_replicas: usize,
    pub thresholds: QuadraticVariationThresholds,
}

/// Centred law on Z² with mass 0.35 on ±e1 and 0.15 on ±e2.
fn unequal_axes() -> SkeletonSpec {
    let step = |offset: Vec<i32>, probability| TableStep {
        offset,
        probability,
    };
    SkeletonSpec::Table {
        dimension: 2,
        steps: vec![
            step(vec![1, 0], 0.35),
            step(vec![-1, 0], 0.35),
            step(vec![0, 1], 0.15),
            step(vec![0, -1], 0.15),
        ],
    }
}

impl Default for QuadraticVariationConfig {
    fn default() -> Self {
        Self {
            skeleton: unequal_axes(),
            trap: TrapLaw::Pareto {
                alpha: 0.5,
                scale: 1.0,
            },
            alpha: None,
            scale: 100_000,
            replicas: 100,
            t: 1.0,
            normalization: Normalization::Auto,
            calibration_replicas: default_calibration_replicas(),
            thresholds: QuadraticVariationThresholds::default(),
        }
    }
}

impl QuadraticVariationConfig {
    pub fn run(&self, ctx: &RunContext<'_>) -> Result<ScalingReport, VerifyError> {
        const NAME: &str = "quadratic_variation";
        check_scales(&[self.scale])?;
        check_replicas(self.replicas, 2)?;
        check_law(&self.trap)?;
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(VerifyError::InvalidConfig(format!("t must be positive, got {}", self.t)));
        }
        let nu = self.skeleton.build()?;
        if nu.is_degenerate() {
            return Err(SkeletonError::Degenerate.into());
        }
        if !nu.is_centred() {
            return Err(VerifyError::Precondition(
                "the skeleton is not centred; the quadratic-variation identity needs a centred step law".into(),
            ));
        }
        let norm = self.normalization.resolve(&self.trap);
        let alpha = if norm == Normalization::Linear {
            1.0
        } else {
            resolve_alpha(self.alpha, &self.trap)?
        };

        let mut report = ScalingReport::new(NAME, ctx, self);
        let ell = calibrate_if(
            norm.needs_ell_star(),
            ctx,
            &self.skeleton,
            &[self.scale],
            self.calibration_replicas,
            &mut report,
        )?
        .map(|rows| rows[0].ell_star);
        let n = self.scale as f64;
        let a_n = norm.a_n(n, alpha, ell);
        let matrix = ScalingMatrix::for_law(&nu);
        let min_steps = (n * self.t).floor() as usize;
        let max_steps = self.thresholds.max_steps_factor.saturating_mul(self.scale as usize).max(min_steps + 1);
        let grid = [self.t];

        let ratios = replicate(ctx.stream(NAME).derive("replicas"), self.replicas, |s| {
            let mut env = SiteEnvironment::new(&self.trap, s.derive("traps").seed());
            let (path, clock) = sample_rtrw_until(
                &nu,
                &mut env,
                a_n * self.t,
                min_steps,
                max_steps,
                &mut s.derive("walk").rng(),
                &mut s.derive("waits").rng(),
            )?;
            let traj = rescale(&path, &clock, n, a_n, matrix.clone(), &grid)?;
            Ok(quadratic_variation_trace(&traj, &nu, self.t)?.ratio)
        })?;

        let (m, sd) = (mean(&ratios), std_dev(&ratios));
        let max_dev = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        let mut summary = ScaleSummary::new(self.scale, self.replicas);
        summary.insert("a_N", a_n);
        summary.insert("sigma^2", matrix.sigma2(&nu));
        summary.insert("mean ratio", m);
        summary.insert("sd ratio", sd);
        summary.insert("max |ratio - 1|", max_dev);
        if let Some(ell) = ell {
            summary.insert("ell*(N)", ell);
        }
        report.scales.push(summary);
        report.samples.push(SampleSeries {
            n: self.scale,
            statistic: "trace/(sigma^2 S_N^-1(t))".into(),
            values: ratios,
        });

        let constant_norm = {
            let sq: Vec<f64> = nu.support().iter().map(|(x, _)| matrix.norm_sq(*x)).collect();
            sq.iter().all(|v| (v - sq[0]).abs() <= 1e-12 * sq[0])
        };
        let th = &self.thresholds;
        if self.scale == 1 {
            report.verdicts.push(Verdict::new(
                "ratio_mean",
                Outcome::NoVerdict,
                Some(m),
                format!("|mean - 1| < {}", th.mean_tolerance),
                "N = 1: single summand",
            ));
        } else {
            report.verdicts.push(Verdict::check(
                "ratio_mean",
                (m - 1.0).abs() < th.mean_tolerance,
                m,
                format!("|mean - 1| < {}", th.mean_tolerance),
                "",
            ));
            report.verdicts.push(Verdict::check(
                "ratio_sd",
                sd < th.sd_max,
                sd,
                format!("< {}", th.sd_max),
                "",
            ));
        }
        if constant_norm {
            report.verdicts.push(Verdict::check(
                "pathwise_identity",
                max_dev <= th.identity_tolerance,
                max_dev,
                format!("max |ratio - 1| ≤ {:e}", th.identity_tolerance),
                "|𝒜ξ|² is constant on the support of ν",
            ));
        }
        Ok(report)
    }
}
