//! Heavy-tailed clock: tail index, self-similarity and stabilized marginals.

use serde::{Deserialize, Serialize};

use super::*;
use crate::clock::sample_clock_at;
use crate::stats::{hill_estimator, ks_two_sample, median, selfsimilarity_exponent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StableThresholds {
    /// Half-width of the accepted window for the Hill estimate around α.
    pub hill_window: f64,
    /// Hill order statistics as a fraction of M.
    pub hill_k_fraction: f64,
    /// Half-width of the accepted window for ρ̂ around 1/α.
    pub rho_window: f64,
    /// KS p-value above which a repetition counts as a pass.
    pub ks_p_value: f64,
    pub ks_repetitions: usize,
    pub ks_min_passes: usize,
}

impl Default for StableThresholds {
    fn default() -> Self {
        Self {
            hill_window: 0.1,
            hill_k_fraction: 0.1,
            rho_window: 0.2,
            ks_p_value: 0.01,
            ks_repetitions: 5,
            ks_min_passes: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StableClockConfig {
    pub skeleton: SkeletonSpec,
    pub trap: TrapLaw,
    /// Target index; defaults to the tail index of the trap law.
    pub alpha: Option<f64>,
    pub scales: Vec<u64>,
    pub replicas: usize,
    pub normalization: Normalization,
    pub calibration_replicas: usize,
    pub thresholds: StableThresholds,
}

impl Default for StableClockConfig {
    fn default() -> Self {
        Self {
            skeleton: SkeletonSpec::Simple { dimension: 2 },
            trap: TrapLaw::Pareto {
                alpha: 0.5,
                scale: 1.0,
            },
            alpha: None,
            scales: vec![1_000, 10_000, 100_000],
            replicas: 2000,
            normalization: Normalization::Auto,
            calibration_replicas: default_calibration_replicas(),
            thresholds: StableThresholds::default(),
        }
    }
}

impl StableClockConfig {
    fn alpha(&self) -> Result<f64, VerifyError> {
        // Light-tailed laws are accepted so that the recipe can report the
        // linear regime; α then only sets the targets.
        match (self.alpha, self.trap.tail_index()) {
            (None, None) => Ok(1.0),
            (a, _) => resolve_alpha(a, &self.trap),
        }
    }

    pub fn run(&self, ctx: &RunContext<'_>) -> Result<ScalingReport, VerifyError> {
        const NAME: &str = "stable_clock";
        check_scales(&self.scales)?;
        check_replicas(self.replicas, MIN_DISTRIBUTIONAL_REPLICAS)?;
        check_law(&self.trap)?;
        let th = &self.thresholds;
        if th.ks_repetitions == 0 || th.ks_min_passes > th.ks_repetitions {
            return Err(VerifyError::InvalidConfig(
                "need 1 ≤ ks_min_passes ≤ ks_repetitions".into(),
            ));
        }
        if !(th.hill_k_fraction > 0.0 && th.hill_k_fraction < 1.0) {
            return Err(VerifyError::InvalidConfig("hill_k_fraction must lie in (0, 1)".into()));
        }
        let alpha = self.alpha()?;
        let nu = self.skeleton.build()?;
        if nu.is_degenerate() {
            return Err(SkeletonError::Degenerate.into());
        }
        let norm = self.normalization.resolve(&self.trap);

        let mut report = ScalingReport::new(NAME, ctx, self);
        let calibration = calibrate_if(
            norm.needs_ell_star(),
            ctx,
            &self.skeleton,
            &self.scales,
            self.calibration_replicas,
            &mut report,
        )?;
        let root = ctx.stream(NAME);
        let sample = |stream: SeedStream, n: u64| {
            replicate(stream, self.replicas, |s| {
                Ok(sample_clock_at(
                    &nu,
                    &self.trap,
                    s.derive("traps").seed(),
                    &[n as usize],
                    &mut s.derive("walk").rng(),
                    &mut s.derive("waits").rng(),
                )[0])
            })
        };

        let mut medians = Vec::new();
        let mut per_scale = Vec::new();
        for (j, &n) in self.scales.iter().enumerate() {
            let values = sample(root.derive(&format!("N={n}")), n)?;
            let ell = calibration.as_ref().map(|rows| rows[j].ell_star);
            let a_n = norm.a_n(n as f64, alpha, ell);
            let med = median(&values);
            let mut summary = ScaleSummary::new(n, self.replicas);
            summary.insert("a_N", a_n);
            summary.insert("median S(N)", med);
            summary.insert("median S_N", med / a_n);
            if let Some(ell) = ell {
                summary.insert("ell*(N)", ell);
            }
            // Remove the slowly varying part of a_N before the log-log fit.
            let detrended = match ell {
                Some(ell) => med / ell.powf(1.0 - 1.0 / alpha),
                None => med,
            };
            medians.push((n as f64, detrended));
            report.samples.push(SampleSeries {
                n,
                statistic: "S(N)".into(),
                values: values.clone(),
            });
            report.scales.push(summary);
            per_scale.push(values);
        }

        // (a) tail index at the largest N.
        let last = per_scale.len() - 1;
        let k = ((th.hill_k_fraction * self.replicas as f64).floor() as usize).max(1);
        let light_tail;
        let hill_verdict = match hill_estimator(&per_scale[last], k) {
            Ok(h) => {
                let s = &mut report.scales[last];
                s.insert("hill alpha", h.alpha);
                s.insert("hill lower", h.lower);
                s.insert("hill upper", h.upper);
                s.insert("hill k", h.k as f64);
                light_tail = h.lower > 1.0;
                Verdict::check(
                    "hill_index",
                    (h.alpha - alpha).abs() <= th.hill_window,
                    h.alpha,
                    format!("[{}, {}]", alpha - th.hill_window, alpha + th.hill_window),
                    if light_tail {
                        format!("k = {k}; light tail, linear regime")
                    } else {
                        format!("k = {k}")
                    },
                )
            }
            Err(StatsError::Degenerate) => {
                light_tail = true;
                Verdict::new(
                    "hill_index",
                    Outcome::Fail,
                    None,
                    format!("[{}, {}]", alpha - th.hill_window, alpha + th.hill_window),
                    "degenerate sample: light tail, linear regime",
                )
            }
            Err(e) => return Err(e.into()),
        };
        report.verdicts.push(hill_verdict);

        // (b) self-similarity exponent.
        let target = 1.0 / alpha;
        let rho_window = format!("[{}, {}]", target - th.rho_window, target + th.rho_window);
        let rho_verdict = match selfsimilarity_exponent(&medians) {
            Ok(rho) => Verdict::check(
                "selfsimilarity_exponent",
                (rho - target).abs() <= th.rho_window,
                rho,
                rho_window,
                "",
            ),
            Err(e) => Verdict::new(
                "selfsimilarity_exponent",
                Outcome::NoVerdict,
                None,
                rho_window,
                e.to_string(),
            ),
        };
        report.verdicts.push(rho_verdict);

        // (c) median-normalized marginals at the two largest scales.
        if self.scales.len() < 2 {
            report.verdicts.push(Verdict::new(
                "stabilized_marginals",
                Outcome::NoVerdict,
                None,
                "",
                "needs two scales",
            ));
        } else {
            let (n1, n2) = (self.scales[last - 1], self.scales[last]);
            let mut p_values = Vec::new();
            for rep in 0..th.ks_repetitions {
                let (a, b) = if rep == 0 {
                    (per_scale[last - 1].clone(), per_scale[last].clone())
                } else {
                    let s = root.derive("ks-repetition").index(rep as u64);
                    (
                        sample(s.derive(&format!("N={n1}")), n1)?,
                        sample(s.derive(&format!("N={n2}")), n2)?,
                    )
                };
                let (ma, mb) = (median(&a), median(&b));
                if !(ma > 0.0 && mb > 0.0) {
                    return Err(VerifyError::Precondition("nonpositive clock median".into()));
                }
                let a: Vec<f64> = a.iter().map(|x| x / ma).collect();
                let b: Vec<f64> = b.iter().map(|x| x / mb).collect();
                p_values.push(ks_two_sample(&a, &b)?.p_value);
            }
            let passes = p_values.iter().filter(|&&p| p > th.ks_p_value).count();
            for (rep, p) in p_values.iter().enumerate() {
                report.scales[last].insert(format!("ks p-value vs N={n1}, repetition {rep}"), *p);
            }
            report.verdicts.push(Verdict::check(
                "stabilized_marginals",
                passes >= th.ks_min_passes,
                passes as f64,
                format!(
                    "p > {} in ≥ {} of {} repetitions",
                    th.ks_p_value, th.ks_min_passes, th.ks_repetitions
                ),
                format!("S(N)/median at N = {n1} vs N = {n2}"),
            ));
        }

        let pass = |name: &str| report.verdict(name).is_some_and(|v| v.outcome == Outcome::Pass);
        report.classification = Some(if pass("hill_index") && pass("selfsimilarity_exponent") {
            Classification::Stable
        } else if light_tail {
            Classification::Linear
        } else {
            Classification::Unclassified
        });
        Ok(report)
    }
}
