//! Asymptotic independence of clock increments over disjoint time blocks.

use serde::{Deserialize, Serialize};

use super::*;
use crate::clock::sample_clock_at;
use crate::stats::{pearson, spearman};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncrementsThresholds {
    /// Accept `|rank correlation| < corr_sigmas / √M`.
    pub corr_sigmas: f64,
    pub min_replicas: usize,
}

impl Default for IncrementsThresholds {
    fn default() -> Self {
        Self {
            corr_sigmas: 3.0,
            min_replicas: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndependentIncrementsConfig {
    pub skeleton: SkeletonSpec,
    pub trap: TrapLaw,
    pub scales: Vec<u64>,
    pub replicas: usize,
    /// `t_1 < t_2 < t_3`.
    pub times: Vec<f64>,
    pub thresholds: IncrementsThresholds,
}

impl Default for IndependentIncrementsConfig {
    fn default() -> Self {
        Self {
            skeleton: SkeletonSpec::Simple { dimension: 3 },
            trap: TrapLaw::FrozenPareto { alpha: 0.5, c: 1.0 },
            scales: vec![10_000, 100_000],
            replicas: 2000,
            times: vec![1.0 / 3.0, 2.0 / 3.0, 1.0],
            thresholds: IncrementsThresholds::default(),
        }
    }
}

impl IndependentIncrementsConfig {
    pub fn run(&self, ctx: &RunContext<'_>) -> Result<ScalingReport, VerifyError> {
        const NAME: &str = "independent_increments";
        check_scales(&self.scales)?;
        check_replicas(self.replicas, self.thresholds.min_replicas)?;
        check_law(&self.trap)?;
        check_times(&self.times, "times")?;
        if self.times.len() != 3 {
            return Err(VerifyError::InvalidConfig("exactly three times t_1 < t_2 < t_3".into()));
        }
        let nu = self.skeleton.build()?;
        if nu.is_degenerate() {
            return Err(SkeletonError::Degenerate.into());
        }

        let mut report = ScalingReport::new(NAME, ctx, self);
        let root = ctx.stream(NAME);
        let mut last_corr = None;
        for &n in &self.scales {
            let idx: Vec<usize> = self
                .times
                .iter()
                .map(|t| (n as f64 * t).floor() as usize)
                .collect();
            if idx[0] == idx[1] || idx[1] == idx[2] {
                return Err(VerifyError::InvalidConfig(format!(
                    "N = {n} is too small to separate the times {:?}",
                    self.times
                )));
            }
            let clocks = replicate(root.derive(&format!("N={n}")), self.replicas, |s| {
                Ok(sample_clock_at(
                    &nu,
                    &self.trap,
                    s.derive("traps").seed(),
                    &idx,
                    &mut s.derive("walk").rng(),
                    &mut s.derive("waits").rng(),
                ))
            })?;
            let first: Vec<f64> = clocks.iter().map(|c| c[1] - c[0]).collect();
            let second: Vec<f64> = clocks.iter().map(|c| c[2] - c[1]).collect();
            let rank = spearman(&first, &second);
            let mut summary = ScaleSummary::new(n, self.replicas);
            if let Some(r) = rank {
                summary.insert("rank correlation", r);
            }
            if let Some(r) = pearson(&first, &second) {
                summary.insert("pearson correlation (raw, informational)", r);
            }
            report.scales.push(summary);
            report.samples.push(SampleSeries {
                n,
                statistic: "S(Nt2)-S(Nt1)".into(),
                values: first,
            });
            report.samples.push(SampleSeries {
                n,
                statistic: "S(Nt3)-S(Nt2)".into(),
                values: second,
            });
            last_corr = Some(rank);
        }

        let bound = self.thresholds.corr_sigmas / (self.replicas as f64).sqrt();
        let threshold = format!("|rank correlation| < {bound:.5}");
        report.verdicts.push(match last_corr.flatten() {
            Some(r) => Verdict::check("increment_independence", r.abs() < bound, r, threshold, ""),
            None => Verdict::new(
                "increment_independence",
                Outcome::DegeneratePass,
                None,
                threshold,
                "increments are deterministic; correlation undefined",
            ),
        });
        Ok(report)
    }
}
