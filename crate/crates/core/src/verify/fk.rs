//! One-dimensional marginals of the rescaled trajectory against the limit
//! process, and the stagnation fingerprint of subdiffusion.

use serde::{Deserialize, Serialize};

use super::*;
use crate::clock::{sample_positions_at, ScalingMatrix};
use crate::environment::SiteEnvironment;
use crate::lattice::Site;
use crate::reference::{sample_reference_path, ReferenceKind};
use crate::stats::{ks_two_sample, median};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FkThresholds {
    pub ks_p_value: f64,
    /// Simulation budget per replica in units of N.
    pub max_steps_factor: usize,
}

impl Default for FkThresholds {
    fn default() -> Self {
        Self {
            ks_p_value: 0.01,
            max_steps_factor: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FkTrajectoryConfig {
    pub skeleton: SkeletonSpec,
    pub trap: TrapLaw,
    pub alpha: Option<f64>,
    pub scale: u64,
    pub replicas: usize,
    pub grid: Vec<f64>,
    pub reference_replicas: usize,
    /// Light-tailed law run on the same walks for the stagnation baseline.
    pub baseline_trap: TrapLaw,
    pub normalization: Normalization,
    pub calibration_replicas: usize,
    pub thresholds: FkThresholds,
}

impl Default for FkTrajectoryConfig {
    fn default() -> Self {
        Self {
            skeleton: SkeletonSpec::Simple { dimension: 2 },
            trap: TrapLaw::Pareto {
                alpha: 0.5,
                scale: 1.0,
            },
            alpha: None,
            scale: 100_000,
            replicas: 2000,
            grid: vec![0.5, 1.0],
            reference_replicas: 10_000,
            baseline_trap: TrapLaw::ExponentialFixedMean { mean: 1.0 },
            normalization: Normalization::Auto,
            calibration_replicas: default_calibration_replicas(),
            thresholds: FkThresholds::default(),
        }
    }
}

fn normalized(xs: &[f64]) -> Result<Vec<f64>, VerifyError> {
    let m = median(xs);
    if !(m > 0.0) {
        return Err(VerifyError::Precondition(
            "median displacement is zero; increase N".into(),
        ));
    }
    Ok(xs.iter().map(|x| x / m).collect())
}

impl FkTrajectoryConfig {
    pub fn run(&self, ctx: &RunContext<'_>) -> Result<ScalingReport, VerifyError> {
        const NAME: &str = "fk_trajectory";
        check_scales(&[self.scale])?;
        check_replicas(self.replicas, MIN_DISTRIBUTIONAL_REPLICAS)?;
        check_replicas(self.reference_replicas, MIN_DISTRIBUTIONAL_REPLICAS)?;
        check_law(&self.trap)?;
        check_law(&self.baseline_trap)?;
        check_times(&self.grid, "grid")?;
        if self.grid[0] <= 0.0 {
            return Err(VerifyError::InvalidConfig("grid times must be positive".into()));
        }
        let nu = self.skeleton.build()?;
        if nu.is_degenerate() || !nu.is_centred() {
            return Err(VerifyError::Precondition(
                "the trajectory limit needs a centred, nondegenerate skeleton".into(),
            ));
        }
        let dim = nu.dim();
        let heavy = !self.trap.annealed_mean().is_finite();
        let norm = self.normalization.resolve(&self.trap);
        let alpha = if heavy {
            let a = resolve_alpha(self.alpha, &self.trap)?;
            if !(a < 1.0) {
                return Err(VerifyError::InvalidConfig(format!(
                    "the Fractional Kinetics limit needs α < 1, got {a}"
                )));
            }
            a
        } else {
            1.0
        };
        let base_norm = Normalization::Auto.resolve(&self.baseline_trap);
        if !self.baseline_trap.annealed_mean().is_finite() {
            return Err(VerifyError::InvalidConfig(
                "the stagnation baseline needs a finite-mean trap law".into(),
            ));
        }

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
        let base_a_n = base_norm.a_n(n, 1.0, None);
        let matrix = ScalingMatrix::for_law(&nu);
        let max_steps = self.thresholds.max_steps_factor.saturating_mul(self.scale as usize);
        let root = ctx.stream(NAME);

        let run = |law: &TrapLaw, a: f64, label: &str| {
            let times: Vec<f64> = self.grid.iter().map(|t| a * t).collect();
            replicate(root.derive("replicas"), self.replicas, |s| {
                let mut env = SiteEnvironment::new(law, s.derive(label).derive("traps").seed());
                Ok(sample_positions_at(
                    &nu,
                    &mut env,
                    &times,
                    max_steps,
                    &mut s.derive("walk").rng(),
                    &mut s.derive(label).derive("waits").rng(),
                )?)
            })
        };
        let positions: Vec<Vec<Site>> = run(&self.trap, a_n, "trap")?;
        let baseline: Vec<Vec<Site>> = run(&self.baseline_trap, base_a_n, "baseline")?;

        let kind = if heavy {
            ReferenceKind::FractionalKinetics { alpha, dim }
        } else {
            ReferenceKind::Brownian { dim }
        };
        let reference = replicate(root.derive("reference"), self.reference_replicas, |s| {
            let path = sample_reference_path(kind, &self.grid, &mut s.rng())?;
            Ok((0..self.grid.len()).map(|j| path.norm(j)).collect::<Vec<f64>>())
        })?;

        let root_n = n.sqrt();
        let mut summary = ScaleSummary::new(self.scale, self.replicas);
        summary.insert("a_N", a_n);
        if let Some(ell) = ell {
            summary.insert("ell*(N)", ell);
        }
        let reference_name = if heavy { "fractional kinetics" } else { "brownian" };
        for (j, &t) in self.grid.iter().enumerate() {
            let sample: Vec<f64> = positions
                .iter()
                .map(|p| matrix.norm_sq(p[j]).sqrt() / root_n)
                .collect();
            let refs: Vec<f64> = reference.iter().map(|r| r[j]).collect();
            let ks = ks_two_sample(&normalized(&sample)?, &normalized(&refs)?)?;
            summary.insert(format!("median |X_N({t})|"), median(&sample));
            summary.insert(format!("ks statistic t={t}"), ks.statistic);
            summary.insert(format!("ks p-value t={t}"), ks.p_value);
            report.verdicts.push(Verdict::check(
                format!("marginal_ks_t={t}"),
                ks.p_value > self.thresholds.ks_p_value,
                ks.p_value,
                format!("p > {}", self.thresholds.ks_p_value),
                format!("median-normalized |X_N(t)| vs {reference_name} reference"),
            ));
            report.samples.push(SampleSeries {
                n: self.scale,
                statistic: format!("|X_N({t})|"),
                values: sample,
            });
        }

        if self.grid.len() >= 2 {
            let m = self.grid.len();
            let stagnant = |ps: &[Vec<Site>]| {
                ps.iter().filter(|p| p[m - 2] == p[m - 1]).count() as f64 / ps.len() as f64
            };
            let (frac, base) = (stagnant(&positions), stagnant(&baseline));
            summary.insert("stagnation fraction", frac);
            summary.insert("stagnation fraction (baseline)", base);
            let threshold = format!("> baseline {base}");
            let detail = format!(
                "X_N({}) = X_N({}); baseline {}",
                self.grid[m - 2],
                self.grid[m - 1],
                self.baseline_trap.kind_name()
            );
            report.verdicts.push(if heavy {
                Verdict::check("stagnation", frac > base, frac, threshold, detail)
            } else {
                Verdict::new("stagnation", Outcome::NoVerdict, Some(frac), threshold, detail)
            });
        }
        report.scales.push(summary);
        Ok(report)
    }
}
