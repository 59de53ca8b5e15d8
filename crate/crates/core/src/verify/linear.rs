//! Law of large numbers for the clock when the annealed mean is finite.

use serde::{Deserialize, Serialize};

use super::*;
use crate::clock::sample_clock_at;
use crate::stats::{mean, std_dev};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearThresholds {
    /// Allowed `|mean(S(N)/N) - E[m_0]|` at the largest N.
    pub mean_tolerance: f64,
}

impl Default for LinearThresholds {
    fn default() -> Self {
        Self { mean_tolerance: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearLimitConfig {
    pub skeleton: SkeletonSpec,
    pub trap: TrapLaw,
    pub scales: Vec<u64>,
    pub replicas: usize,
    pub thresholds: LinearThresholds,
}

impl Default for LinearLimitConfig {
    fn default() -> Self {
        Self {
            skeleton: SkeletonSpec::Simple { dimension: 3 },
            trap: TrapLaw::ExponentialFixedMean { mean: 1.0 },
            scales: vec![1_000, 10_000, 100_000],
            replicas: 100,
            thresholds: LinearThresholds::default(),
        }
    }
}

impl LinearLimitConfig {
    pub fn run(&self, ctx: &RunContext<'_>) -> Result<ScalingReport, VerifyError> {
        const NAME: &str = "linear_limit";
        check_scales(&self.scales)?;
        check_replicas(self.replicas, 2)?;
        check_law(&self.trap)?;
        let nu = self.skeleton.build()?;
        if nu.is_degenerate() {
            return Err(SkeletonError::Degenerate.into());
        }
        let expected = self.trap.annealed_mean();
        if !expected.is_finite() {
            return Err(VerifyError::Precondition(format!(
                "infinite annealed mean for the {} law",
                self.trap.kind_name()
            )));
        }

        let mut report = ScalingReport::new(NAME, ctx, self);
        let indices: Vec<usize> = self.scales.iter().map(|&n| n as usize).collect();
        let root = ctx.stream(NAME).derive("clock");
        let clocks = replicate(root, self.replicas, |s| {
            Ok(sample_clock_at(
                &nu,
                &self.trap,
                s.derive("traps").seed(),
                &indices,
                &mut s.derive("walk").rng(),
                &mut s.derive("waits").rng(),
            ))
        })?;

        let mut sds = Vec::new();
        let mut means = Vec::new();
        for (j, &n) in self.scales.iter().enumerate() {
            let ratios: Vec<f64> = clocks.iter().map(|c| c[j] / n as f64).collect();
            let (m, sd) = (mean(&ratios), std_dev(&ratios));
            let mut summary = ScaleSummary::new(n, self.replicas);
            summary.insert("mean S(N)/N", m);
            summary.insert("sd S(N)/N", sd);
            report.scales.push(summary);
            report.samples.push(SampleSeries {
                n,
                statistic: "S(N)/N".into(),
                values: ratios,
            });
            means.push(m);
            sds.push(sd);
        }

        let last = means.len() - 1;
        let deviation = (means[last] - expected).abs();
        report.verdicts.push(Verdict::check(
            "mean_convergence",
            deviation < self.thresholds.mean_tolerance,
            deviation,
            format!("|mean S(N)/N - {expected}| < {}", self.thresholds.mean_tolerance),
            format!("N = {}", self.scales[last]),
        ));
        let shrink = if sds[0] == 0.0 && sds[last] == 0.0 {
            Verdict::new(
                "fluctuation_shrinkage",
                Outcome::DegeneratePass,
                Some(0.0),
                "sd at largest N < sd at smallest N",
                "S(N)/N is deterministic",
            )
        } else if self.scales.len() < 2 {
            Verdict::new(
                "fluctuation_shrinkage",
                Outcome::NoVerdict,
                Some(sds[last]),
                "sd at largest N < sd at smallest N",
                "needs two scales",
            )
        } else {
            Verdict::check(
                "fluctuation_shrinkage",
                sds[last] < sds[0],
                sds[last],
                format!("< {} (sd at N = {})", sds[0], self.scales[0]),
                "",
            )
        };
        report.verdicts.push(shrink);
        report.classification = Some(if report.passed() {
            Classification::Linear
        } else {
            Classification::Unclassified
        });
        Ok(report)
    }
}
