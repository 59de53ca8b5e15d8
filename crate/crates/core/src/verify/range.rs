//! Range of the skeleton: law of large numbers, local-time profile and the
//! tail of the local time at the origin.

use serde::{Deserialize, Serialize};

use super::*;
use crate::skeleton::{origin_local_time, range_census, sample_walk, CensusMode, CensusOptions};
use crate::stats::{mean, std_dev};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    /// Decided from the growth of ℓ̂* over the last decade of scales.
    #[default]
    Auto,
    Transient,
    Recurrent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RangeThresholds {
    pub ratio_low: f64,
    pub ratio_high: f64,
    /// Exact-k profile tolerance in combined standard errors.
    pub profile_sigmas: f64,
    /// Absolute tolerance of the band profile.
    pub band_tolerance: f64,
    /// Absolute tolerance of `P[L(0, cn) ≥ βℓ̂*(n)]` against `e^{-β}`.
    pub tail_tolerance: f64,
    /// Relative growth of ℓ̂* over a decade above which `auto` picks the
    /// recurrent mode.
    pub recurrence_growth: f64,
}

impl Default for RangeThresholds {
    fn default() -> Self {
        Self {
            ratio_low: 0.9,
            ratio_high: 1.1,
            profile_sigmas: 3.0,
            band_tolerance: 0.05,
            tail_tolerance: 0.03,
            recurrence_growth: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RangeLlnConfig {
    pub skeleton: SkeletonSpec,
    pub mode: RangeMode,
    /// Walk lengths n.
    pub scales: Vec<u64>,
    pub replicas: usize,
    pub k_max: u32,
    pub betas: Vec<f64>,
    /// Walks for the origin local-time tail; 0 skips the check.
    pub tail_replicas: usize,
    pub tail_c: f64,
    pub calibration_replicas: usize,
    pub thresholds: RangeThresholds,
}

impl Default for RangeLlnConfig {
    fn default() -> Self {
        Self {
            skeleton: SkeletonSpec::Simple { dimension: 3 },
            mode: RangeMode::Auto,
            scales: vec![100_000],
            replicas: 200,
            k_max: 5,
            betas: vec![0.5, 1.0],
            tail_replicas: 10_000,
            tail_c: 1.0,
            calibration_replicas: default_calibration_replicas(),
            thresholds: RangeThresholds::default(),
        }
    }
}

/// The scales plus one decade below the largest, for the recurrence trend.
pub(super) fn calibration_scales(scales: &[u64]) -> Vec<u64> {
    let mut out = scales.to_vec();
    if let Some(&top) = scales.last() {
        if top >= 10 {
            out.push(top / 10);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

impl RangeLlnConfig {
    pub fn run(&self, ctx: &RunContext<'_>) -> Result<ScalingReport, VerifyError> {
        const NAME: &str = "range_lln";
        check_scales(&self.scales)?;
        check_replicas(self.replicas, 2)?;
        if self.tail_replicas > MAX_REPLICAS {
            return Err(VerifyError::InvalidConfig(format!(
                "tail replicas are capped at {MAX_REPLICAS}"
            )));
        }
        if self.k_max == 0 || self.betas.iter().any(|b| !(*b > 0.0)) || !(self.tail_c > 0.0) {
            return Err(VerifyError::InvalidConfig(
                "need k_max ≥ 1, β > 0 and c > 0".into(),
            ));
        }
        let nu = self.skeleton.build()?;
        let th = &self.thresholds;

        let mut report = ScalingReport::new(NAME, ctx, self);
        let cal_scales = calibration_scales(&self.scales);
        let rows = calibrate_if(
            true,
            ctx,
            &self.skeleton,
            &cal_scales,
            self.calibration_replicas,
            &mut report,
        )?
        .expect("calibrated");
        let row = |n: u64| *rows.iter().find(|r| r.n == n).expect("calibrated scale");
        let top = *self.scales.last().expect("nonempty");
        let growth = if top >= 10 {
            row(top).ell_star / row(top / 10).ell_star - 1.0
        } else {
            0.0
        };
        let recurrent = match self.mode {
            RangeMode::Auto => growth > th.recurrence_growth,
            RangeMode::Transient => false,
            RangeMode::Recurrent => true,
        };

        let root = ctx.stream(NAME);
        let mut ratio_means = Vec::new();
        let mut rel_spreads = Vec::new();
        for &n in &self.scales {
            let cal = row(n);
            let ell = cal.ell_star;
            let options = CensusOptions {
                mode: if recurrent {
                    CensusMode::Recurrent {
                        betas: self.betas.clone(),
                        ell_star: Some(ell),
                    }
                } else {
                    CensusMode::Transient
                },
                ..CensusOptions::default()
            };
            let censuses = replicate(root.derive(&format!("N={n}")), self.replicas, |s| {
                let path = sample_walk(&nu, n as usize, &mut s.derive("walk").rng())?;
                Ok(range_census(&path, &options)?)
            })?;
            let ratios: Vec<f64> = censuses
                .iter()
                .map(|c| c.total_range as f64 * ell / n as f64)
                .collect();
            let (m, sd) = (mean(&ratios), std_dev(&ratios));
            let mut summary = ScaleSummary::new(n, self.replicas);
            summary.insert("ell*(n)", ell);
            summary.insert("mean |R(n)| ell*/n", m);
            summary.insert("relative sd |R(n)| ell*/n", sd / m);
            ratio_means.push(m);
            rel_spreads.push(sd / m);

            let mut profile_ok = true;
            let mut worst: f64 = 0.0;
            if recurrent {
                for &beta in &self.betas {
                    for k in 1..=self.k_max {
                        let fractions: Vec<f64> = censuses
                            .iter()
                            .map(|c| c.band(beta, k) as f64 / c.total_range as f64)
                            .collect();
                        let f = mean(&fractions);
                        let kf = f64::from(k);
                        let reference = (-(kf - 1.0) * beta).exp() - (-kf * beta).exp();
                        summary.insert(format!("band fraction beta={beta} k={k}"), f);
                        let err = (f - reference).abs();
                        worst = worst.max(err);
                        profile_ok &= err <= th.band_tolerance;
                    }
                }
            } else {
                let gamma = cal.escape;
                for k in 1..=self.k_max {
                    let fractions: Vec<f64> = censuses
                        .iter()
                        .map(|c| c.exact(k) as f64 / c.total_range as f64)
                        .collect();
                    let f = mean(&fractions);
                    let se_f = std_dev(&fractions) / (fractions.len() as f64).sqrt();
                    let ki = k as i32;
                    let reference = gamma * (1.0 - gamma).powi(ki - 1);
                    let slope = if k == 1 {
                        1.0
                    } else {
                        (1.0 - gamma).powi(ki - 2) * (1.0 - f64::from(k) * gamma)
                    };
                    let se = se_f.hypot(slope * cal.escape_std_error);
                    summary.insert(format!("exact fraction k={k}"), f);
                    summary.insert(format!("exact fraction k={k} reference"), reference);
                    summary.insert(format!("exact fraction k={k} s.e."), se);
                    let dev = (f - reference).abs();
                    if se > 0.0 {
                        worst = worst.max(dev / se);
                    } else if dev > 0.0 {
                        worst = f64::INFINITY;
                    }
                    profile_ok &= dev <= th.profile_sigmas * se;
                }
            }
            if n == top {
                report.verdicts.push(if recurrent {
                    Verdict::check(
                        "band_profile",
                        profile_ok,
                        worst,
                        format!("|fraction - (e^(-(k-1)β) - e^(-kβ))| ≤ {} for k ≤ {}", th.band_tolerance, self.k_max),
                        format!("n = {n}"),
                    )
                } else {
                    Verdict::new(
                        "exact_k_profile",
                        Outcome::from_bool(profile_ok),
                        Some(worst),
                        format!("|fraction - γ̂(1-γ̂)^(k-1)| ≤ {} s.e. for k ≤ {}", th.profile_sigmas, self.k_max),
                        format!("n = {n}; s.e. combines replicas and the calibration of γ̂"),
                    )
                });
            }
            report.samples.push(SampleSeries {
                n,
                statistic: "|R(n)| ell*(n)/n".into(),
                values: ratios,
            });
            report.scales.push(summary);
        }
        report.scales.last_mut().expect("nonempty").insert("ell* growth over a decade", growth);

        let last = ratio_means.len() - 1;
        report.verdicts.push(Verdict::check(
            "range_ratio",
            (th.ratio_low..=th.ratio_high).contains(&ratio_means[last]),
            ratio_means[last],
            format!("[{}, {}]", th.ratio_low, th.ratio_high),
            format!("n = {top}; mode {}", if recurrent { "recurrent" } else { "transient" }),
        ));
        report.verdicts.push(if rel_spreads.iter().all(|s| *s == 0.0) {
            Verdict::new(
                "spread_shrinking",
                Outcome::DegeneratePass,
                Some(0.0),
                "relative sd decreasing in n",
                "the range is deterministic",
            )
        } else if rel_spreads.len() < 2 {
            Verdict::new(
                "spread_shrinking",
                Outcome::NoVerdict,
                Some(rel_spreads[0]),
                "relative sd decreasing in n",
                "needs two scales",
            )
        } else {
            Verdict::check(
                "spread_shrinking",
                rel_spreads.windows(2).all(|w| w[1] < w[0]),
                rel_spreads[last],
                "relative sd decreasing in n",
                "",
            )
        });

        if self.tail_replicas > 0 {
            let ell = row(top).ell_star;
            let horizon = (self.tail_c * top as f64).floor() as u64;
            let local = replicate(root.derive("origin-local-time"), self.tail_replicas, |s| {
                Ok(origin_local_time(&nu, horizon, &mut s.rng()))
            })?;
            let summary = report.scales.last_mut().expect("nonempty");
            for &beta in &self.betas {
                let level = beta * ell;
                let p = local.iter().filter(|&&l| l as f64 >= level).count() as f64 / local.len() as f64;
                let reference = (-beta).exp();
                summary.insert(format!("P[L(0,cn) >= {beta} ell*]"), p);
                let criterion = format!("local_time_tail_beta={beta}");
                let threshold = format!("|p - e^(-{beta})| ≤ {}", th.tail_tolerance);
                report.verdicts.push(if recurrent {
                    Verdict::check(
                        criterion,
                        (p - reference).abs() <= th.tail_tolerance,
                        p,
                        threshold,
                        format!("{} walks, c = {}", self.tail_replicas, self.tail_c),
                    )
                } else {
                    Verdict::new(
                        criterion,
                        Outcome::NoVerdict,
                        Some(p),
                        threshold,
                        "transient skeleton: the local time stays bounded",
                    )
                });
            }
            report.samples.push(SampleSeries {
                n: top,
                statistic: "L(0,cn)".into(),
                values: local.iter().map(|&l| l as f64).collect(),
            });
        }
        Ok(report)
    }
}
