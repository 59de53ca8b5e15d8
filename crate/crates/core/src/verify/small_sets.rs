//! Sites shared between time windows, and the load carried by frequently
//! visited sites.

use serde::{Deserialize, Serialize};

use super::*;
use crate::skeleton::{
    prefix_local_time_histogram, range_census, sample_walk, theoretical_frequent_threshold,
    CensusOptions, FrequentSpec, Windows,
};
use crate::stats::median;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallSetsThresholds {
    /// Accept an exceedance frequency up to `exceedance_factor · ε`.
    pub exceedance_factor: f64,
}

impl Default for SmallSetsThresholds {
    fn default() -> Self {
        Self {
            exceedance_factor: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmallSetsConfig {
    pub skeleton: SkeletonSpec,
    pub scales: Vec<u64>,
    pub replicas: usize,
    /// Window boundaries `t_0 < t_1 < ... < t_m`.
    pub times: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Constant in `K = -c log ε²`.
    pub c: f64,
    /// Candidate values of `c` scanned for the smallest one that passes.
    pub c_grid: Vec<f64>,
    /// `F_{N,K}` is read on the first `⌊N t⌋` steps.
    pub frequent_t: f64,
    pub calibration_replicas: usize,
    pub thresholds: SmallSetsThresholds,
}

impl Default for SmallSetsConfig {
    fn default() -> Self {
        Self {
            skeleton: SkeletonSpec::Simple { dimension: 2 },
            scales: vec![1_000, 10_000, 100_000],
            replicas: 200,
            times: vec![0.0, 0.5, 1.0],
            epsilons: vec![0.1, 0.05],
            c: 1.0,
            c_grid: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0],
            frequent_t: 1.0,
            calibration_replicas: default_calibration_replicas(),
            thresholds: SmallSetsThresholds::default(),
        }
    }
}

struct ReplicaResult {
    multiple: Vec<usize>,
    /// Verdict loads, one per ε, from the census.
    loads: Vec<u64>,
    histogram: BTreeMap<u32, usize>,
}

fn load_above(hist: &BTreeMap<u32, usize>, threshold: f64) -> u64 {
    hist.iter()
        .filter(|(l, _)| f64::from(**l) >= threshold)
        .map(|(l, c)| u64::from(*l) * *c as u64)
        .sum()
}

impl SmallSetsConfig {
    pub fn run(&self, ctx: &RunContext<'_>) -> Result<ScalingReport, VerifyError> {
        const NAME: &str = "small_sets";
        check_scales(&self.scales)?;
        check_replicas(self.replicas, 2)?;
        check_times(&self.times, "window times")?;
        if self.times.len() < 2 {
            return Err(VerifyError::InvalidConfig("need at least one window".into()));
        }
        let t_max = *self.times.last().expect("nonempty");
        if !(self.frequent_t > 0.0 && self.frequent_t <= t_max) {
            return Err(VerifyError::InvalidConfig(format!(
                "frequent_t must lie in (0, {t_max}]"
            )));
        }
        let ks: Vec<f64> = self
            .epsilons
            .iter()
            .map(|&e| theoretical_frequent_threshold(e, self.c))
            .collect::<Result<_, _>>()?;
        for &c in &self.c_grid {
            theoretical_frequent_threshold(0.5, c)?;
        }
        let nu = self.skeleton.build()?;
        if nu.is_degenerate() {
            return Err(SkeletonError::Degenerate.into());
        }

        let mut report = ScalingReport::new(NAME, ctx, self);
        let rows = calibrate_if(
            true,
            ctx,
            &self.skeleton,
            &self.scales,
            self.calibration_replicas,
            &mut report,
        )?
        .expect("calibrated");
        let root = ctx.stream(NAME);
        let windows = self.times.len() - 1;
        let mut medians: Vec<Vec<f64>> = vec![Vec::new(); windows];
        let mut last_results = Vec::new();
        for (j, &n) in self.scales.iter().enumerate() {
            let ell = rows[j].ell_star;
            let scale = n as f64;
            let steps = (scale * t_max).floor() as usize;
            let prefix = (scale * self.frequent_t).floor() as usize;
            if prefix == 0 {
                return Err(VerifyError::InvalidConfig(format!("N = {n} is too small")));
            }
            let results = replicate(root.derive(&format!("N={n}")), self.replicas, |s| {
                let path = sample_walk(&nu, steps, &mut s.derive("walk").rng())?;
                let census = range_census(
                    &path,
                    &CensusOptions {
                        windows: Some(Windows {
                            scale,
                            times: self.times.clone(),
                        }),
                        ..CensusOptions::default()
                    },
                )?;
                let mut loads = Vec::new();
                for &k in &ks {
                    let c = range_census(
                        &path,
                        &CensusOptions {
                            frequent: Some(FrequentSpec {
                                scale,
                                t: self.frequent_t,
                                k,
                                ell_star: ell,
                            }),
                            ..CensusOptions::default()
                        },
                    )?;
                    loads.push(c.frequent_load.expect("requested"));
                }
                Ok(ReplicaResult {
                    multiple: census.windows.iter().map(|w| w.multiple).collect(),
                    loads,
                    histogram: prefix_local_time_histogram(&path, prefix)?,
                })
            })?;
            let mut summary = ScaleSummary::new(n, self.replicas);
            summary.insert("ell*(N)", ell);
            for i in 0..windows {
                let values: Vec<f64> = results
                    .iter()
                    .map(|r| r.multiple[i] as f64 * ell / scale)
                    .collect();
                let med = median(&values);
                summary.insert(format!("median |M^{}| ell*/N", i + 1), med);
                medians[i].push(med);
                report.samples.push(SampleSeries {
                    n,
                    statistic: format!("|M^{}| ell*/N", i + 1),
                    values,
                });
            }
            let level = |eps: f64| eps * scale * self.frequent_t;
            for (e, &eps) in self.epsilons.iter().enumerate() {
                let exceed = results
                    .iter()
                    .filter(|r| r.loads[e] as f64 >= level(eps))
                    .count() as f64
                    / self.replicas as f64;
                summary.insert(format!("P[F >= eps N t] eps={eps} c={}", self.c), exceed);
            }
            report.scales.push(summary);
            last_results = results;
        }

        for (i, meds) in medians.iter().enumerate() {
            let criterion = format!("multiple_visits_decay_window={}", i + 1);
            let threshold = "median |M^i| ell*/N strictly decreasing in N";
            report.verdicts.push(if meds.iter().all(|m| *m == 0.0) {
                Verdict::new(criterion, Outcome::DegeneratePass, Some(0.0), threshold, "no site is shared between windows")
            } else if meds.len() < 2 {
                Verdict::new(criterion, Outcome::NoVerdict, Some(meds[0]), threshold, "needs two scales")
            } else {
                Verdict::check(
                    criterion,
                    meds.windows(2).all(|w| w[1] < w[0]),
                    meds[meds.len() - 1],
                    threshold,
                    format!("medians {meds:?}"),
                )
            });
        }

        let top = *self.scales.last().expect("nonempty") as f64;
        let level = |eps: f64| eps * top * self.frequent_t;
        let ell_top = rows[rows.len() - 1].ell_star;
        for (e, &eps) in self.epsilons.iter().enumerate() {
            let exceed = last_results
                .iter()
                .filter(|r| r.loads[e] as f64 >= level(eps))
                .count() as f64
                / self.replicas as f64;
            let bound = self.thresholds.exceedance_factor * eps;
            report.verdicts.push(Verdict::check(
                format!("frequent_load_eps={eps}"),
                exceed <= bound,
                exceed,
                format!("P[F_(N,K) ≥ εNt] ≤ {bound}"),
                format!("K = {:.4}, c = {}", ks[e], self.c),
            ));
        }
        // Smallest c on the grid for which every ε passes.
        let calibrated = self.c_grid.iter().copied().find(|&c| {
            self.epsilons.iter().all(|&eps| {
                let k = theoretical_frequent_threshold(eps, c).expect("validated");
                let exceed = last_results
                    .iter()
                    .filter(|r| load_above(&r.histogram, k * ell_top) as f64 >= level(eps))
                    .count() as f64
                    / self.replicas as f64;
                exceed <= self.thresholds.exceedance_factor * eps
            })
        });
        if let Some(c) = calibrated {
            report.scales.last_mut().expect("nonempty").insert("calibrated c", c);
        }
        Ok(report)
    }
}
