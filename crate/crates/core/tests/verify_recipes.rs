use rtrw_core::environment::TrapLaw;
use rtrw_core::skeleton::SkeletonSpec;
use rtrw_core::verify::*;

fn simple(dimension: usize) -> SkeletonSpec {
    SkeletonSpec::Simple { dimension }
}

fn drift() -> SkeletonSpec {
    SkeletonSpec::Drift { dimension: 2 }
}

fn pareto(alpha: f64, scale: f64) -> TrapLaw {
    TrapLaw::Pareto { alpha, scale }
}

fn run(config: RecipeConfig, seed: u64) -> Result<ScalingReport, VerifyError> {
    let calibrator = MonteCarloCalibrator::new(seed);
    config.run(&RunContext::new(seed, &calibrator))
}

fn outcome(report: &ScalingReport, criterion: &str) -> Outcome {
    report
        .verdict(criterion)
        .unwrap_or_else(|| panic!("no verdict {criterion} in {report:?}"))
        .outcome
}

fn small_stable(trap: TrapLaw, skeleton: SkeletonSpec) -> StableClockConfig {
    StableClockConfig {
        skeleton,
        trap,
        scales: vec![100, 1_000, 10_000],
        replicas: 2000,
        calibration_replicas: 4000,
        thresholds: StableThresholds {
            ks_repetitions: 1,
            ks_min_passes: 1,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn dirac_linear_limit_is_exact() {
    let report = run(
        RecipeConfig::LinearLimit(LinearLimitConfig {
            skeleton: simple(2),
            trap: TrapLaw::Dirac { value: 2.0 },
            scales: vec![10, 100],
            replicas: 5,
            ..Default::default()
        }),
        3,
    )
    .unwrap();
    let mean = report.verdict("mean_convergence").unwrap();
    assert_eq!(mean.outcome, Outcome::Pass);
    assert_eq!(mean.observed, Some(0.0));
    assert_eq!(report.scale(100).unwrap().get("mean S(N)/N"), Some(2.0));
    assert_eq!(outcome(&report, "fluctuation_shrinkage"), Outcome::DegeneratePass);
    assert_eq!(report.classification, Some(Classification::Linear));
}

#[test]
fn infinite_mean_is_rejected_by_the_linear_recipe() {
    let err = run(
        RecipeConfig::LinearLimit(LinearLimitConfig {
            trap: TrapLaw::Bouchaud { alpha: 0.5, c: 1.0 },
            ..Default::default()
        }),
        1,
    )
    .unwrap_err();
    assert!(matches!(err, VerifyError::Precondition(_)), "{err}");
}

#[test]
fn dirac_clock_signals_the_linear_regime() {
    let report = run(
        RecipeConfig::StableClock(small_stable(TrapLaw::Dirac { value: 1.0 }, simple(2))),
        4,
    )
    .unwrap();
    assert_eq!(outcome(&report, "hill_index"), Outcome::Fail);
    assert!(report.verdict("hill_index").unwrap().detail.contains("linear regime"));
    assert_eq!(report.classification, Some(Classification::Linear));
}

#[test]
fn deterministic_increments_are_a_degenerate_pass() {
    let report = run(
        RecipeConfig::IndependentIncrements(IndependentIncrementsConfig {
            trap: TrapLaw::Dirac { value: 1.0 },
            scales: vec![300],
            replicas: 1000,
            ..Default::default()
        }),
        5,
    )
    .unwrap();
    assert_eq!(outcome(&report, "increment_independence"), Outcome::DegeneratePass);
}

#[test]
fn ctrw_increments_are_independent() {
    let report = run(
        RecipeConfig::IndependentIncrements(IndependentIncrementsConfig {
            skeleton: simple(2),
            trap: pareto(0.5, 1.0),
            scales: vec![3_000],
            replicas: 2000,
            ..Default::default()
        }),
        6,
    )
    .unwrap();
    assert_eq!(outcome(&report, "increment_independence"), Outcome::Pass);
}

#[test]
fn drift_range_ratio_is_exactly_one() {
    let report = run(
        RecipeConfig::RangeLln(RangeLlnConfig {
            skeleton: drift(),
            scales: vec![100, 1_000],
            replicas: 10,
            tail_replicas: 100,
            calibration_replicas: 100,
            ..Default::default()
        }),
        7,
    )
    .unwrap();
    let ratio = report.verdict("range_ratio").unwrap();
    assert_eq!(ratio.outcome, Outcome::Pass);
    assert_eq!(ratio.observed, Some(1.0));
    for row in &report.calibration {
        assert_eq!(row.ell_star, 1.0);
    }
}

#[test]
fn drift_small_sets_pass_trivially() {
    let report = run(
        RecipeConfig::SmallSets(SmallSetsConfig {
            skeleton: drift(),
            scales: vec![100, 1_000],
            replicas: 10,
            calibration_replicas: 100,
            ..Default::default()
        }),
        8,
    )
    .unwrap();
    assert_eq!(outcome(&report, "multiple_visits_decay_window=1"), Outcome::DegeneratePass);
    assert_eq!(outcome(&report, "multiple_visits_decay_window=2"), Outcome::DegeneratePass);
    let load = report.verdict("frequent_load_eps=0.1").unwrap();
    assert_eq!(load.outcome, Outcome::Pass);
    assert_eq!(load.observed, Some(0.0));
}

#[test]
fn quadratic_variation_rejects_a_drifting_skeleton() {
    let err = run(
        RecipeConfig::QuadraticVariation(QuadraticVariationConfig {
            skeleton: drift(),
            ..Default::default()
        }),
        1,
    )
    .unwrap_err();
    assert!(matches!(err, VerifyError::Precondition(_)), "{err}");
}

#[test]
fn quadratic_variation_is_pathwise_for_srw() {
    let report = run(
        RecipeConfig::QuadraticVariation(QuadraticVariationConfig {
            skeleton: simple(3),
            trap: TrapLaw::ExponentialFixedMean { mean: 1.0 },
            scale: 2_000,
            replicas: 20,
            ..Default::default()
        }),
        9,
    )
    .unwrap();
    assert_eq!(outcome(&report, "pathwise_identity"), Outcome::Pass);
    assert!(report.samples[0].values.iter().all(|r| (r - 1.0).abs() < 1e-12));
}

#[test]
fn single_summand_quadratic_variation_has_no_verdict() {
    let report = run(
        RecipeConfig::QuadraticVariation(QuadraticVariationConfig {
            trap: TrapLaw::Dirac { value: 1.0 },
            scale: 1,
            replicas: 50,
            ..Default::default()
        }),
        10,
    )
    .unwrap();
    assert_eq!(outcome(&report, "ratio_mean"), Outcome::NoVerdict);
    assert!(report.verdict("ratio_sd").is_none());
}

#[test]
fn unequal_axes_ratio_concentrates() {
    let report = run(
        RecipeConfig::QuadraticVariation(QuadraticVariationConfig {
            trap: TrapLaw::Dirac { value: 1.0 },
            scale: 20_000,
            replicas: 100,
            ..Default::default()
        }),
        11,
    )
    .unwrap();
    assert_eq!(outcome(&report, "ratio_mean"), Outcome::Pass);
    assert_eq!(outcome(&report, "ratio_sd"), Outcome::Pass);
}

#[test]
fn dirac_laplace_condition_is_exact() {
    let report = run(
        RecipeConfig::LaplaceCondition(LaplaceConditionConfig {
            trap: TrapLaw::Dirac { value: 1.0 },
            scales: vec![100, 1_000],
            calibration_replicas: 2000,
            ..Default::default()
        }),
        12,
    )
    .unwrap();
    assert_eq!(outcome(&report, "f_shape"), Outcome::Pass);
    assert_eq!(outcome(&report, "lambda_scaling"), Outcome::Pass);
    let observed = report.verdict("f_shape").unwrap().observed.unwrap();
    assert!(observed <= 1e-12, "{observed}");
}

#[test]
fn laplace_rejects_empty_r_list() {
    let err = run(
        RecipeConfig::LaplaceCondition(LaplaceConditionConfig {
            r_values: vec![],
            ..Default::default()
        }),
        1,
    )
    .unwrap_err();
    assert!(matches!(err, VerifyError::InvalidConfig(_)));
}

#[test]
fn finite_mean_trajectory_uses_the_brownian_reference() {
    let report = run(
        RecipeConfig::FkTrajectory(FkTrajectoryConfig {
            trap: TrapLaw::ExponentialFixedMean { mean: 1.0 },
            scale: 2_000,
            replicas: 1000,
            reference_replicas: 2000,
            ..Default::default()
        }),
        13,
    )
    .unwrap();
    let ks = report.verdict("marginal_ks_t=1").unwrap();
    assert!(ks.detail.contains("brownian"), "{}", ks.detail);
    assert_eq!(ks.outcome, Outcome::Pass);
    assert_eq!(outcome(&report, "stagnation"), Outcome::NoVerdict);
}

#[test]
fn undersized_distributional_tests_are_rejected() {
    let err = run(
        RecipeConfig::StableClock(StableClockConfig {
            replicas: 99,
            ..Default::default()
        }),
        1,
    )
    .unwrap_err();
    assert!(matches!(err, VerifyError::InvalidConfig(_)), "{err}");
    let err = run(
        RecipeConfig::LinearLimit(LinearLimitConfig {
            scales: vec![1_000, 100],
            ..Default::default()
        }),
        1,
    )
    .unwrap_err();
    assert!(matches!(err, VerifyError::InvalidConfig(_)), "{err}");
}

#[test]
fn reports_are_byte_identical_across_reruns_and_pool_sizes() {
    let config = RecipeConfig::StableClock(small_stable(pareto(0.5, 1.0), simple(2)));
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run(config.clone(), 21).unwrap().to_json_line())
    };
    let one = in_pool(1);
    assert_eq!(one, in_pool(1));
    assert_eq!(one, in_pool(4));
    assert_ne!(one, run(config.clone(), 22).unwrap().to_json_line());
}

#[test]
fn verdicts_are_invariant_under_scaling_the_traps() {
    let base = run(RecipeConfig::StableClock(small_stable(pareto(0.5, 1.0), simple(2))), 31).unwrap();
    let scaled = run(RecipeConfig::StableClock(small_stable(pareto(0.5, 3.0), simple(2))), 31).unwrap();
    assert_eq!(base.verdicts.len(), scaled.verdicts.len());
    for (a, b) in base.verdicts.iter().zip(&scaled.verdicts) {
        assert_eq!(a.criterion, b.criterion);
        assert_eq!(a.outcome, b.outcome, "{}", a.criterion);
    }
    let hill = |r: &ScalingReport| r.verdict("hill_index").unwrap().observed.unwrap();
    assert!((hill(&base) - hill(&scaled)).abs() < 1e-9);

    let increments = |scale: f64| {
        run(
            RecipeConfig::IndependentIncrements(IndependentIncrementsConfig {
                skeleton: simple(2),
                trap: TrapLaw::FrozenPareto { alpha: 0.5, c: scale },
                scales: vec![1_000],
                replicas: 1000,
                ..Default::default()
            }),
            32,
        )
        .unwrap()
    };
    // Multiplying τ_x by 3 multiplies c by 3^α.
    let (a, b) = (increments(1.0), increments(3f64.sqrt()));
    let corr = |r: &ScalingReport| r.verdict("increment_independence").unwrap().observed.unwrap();
    assert_eq!(outcome(&a, "increment_independence"), outcome(&b, "increment_independence"));
    assert!((corr(&a) - corr(&b)).abs() < 1e-12);
}

/// Exactly one of the linear verdict and the stable classification holds
/// for every built-in law.
#[test]
fn linear_and_stable_regimes_are_exclusive() {
    let laws = [
        TrapLaw::Dirac { value: 1.0 },
        TrapLaw::ExponentialFixedMean { mean: 2.0 },
        pareto(0.5, 1.0),
        TrapLaw::Bouchaud { alpha: 0.5, c: 1.0 },
        TrapLaw::FrozenPareto { alpha: 0.5, c: 1.0 },
        TrapLaw::Mixture {
            p: 0.3,
            first: Box::new(pareto(0.5, 1.0)),
            second: Box::new(TrapLaw::FrozenPareto { alpha: 0.5, c: 1.0 }),
        },
    ];
    for law in laws {
        let linear = match run(
            RecipeConfig::LinearLimit(LinearLimitConfig {
                skeleton: simple(3),
                trap: law.clone(),
                scales: vec![300, 3_000],
                replicas: 100,
                ..Default::default()
            }),
            41,
        ) {
            Ok(r) => r.passed(),
            Err(VerifyError::Precondition(_)) => false,
            Err(e) => panic!("{e}"),
        };
        let stable = run(RecipeConfig::StableClock(small_stable(law.clone(), simple(3))), 42)
            .unwrap()
            .classification
            == Some(Classification::Stable);
        assert!(linear ^ stable, "{law:?}: linear {linear}, stable {stable}");
    }
}

#[test]
fn catalogue_round_trips_through_the_named_deserializer() {
    for info in list_recipes() {
        let back = RecipeConfig::deserialize_named(info.name, info.defaults.clone()).unwrap();
        assert_eq!(Some(back), RecipeConfig::default_for(info.name));
    }
    assert!(RecipeConfig::default_for("no_such_recipe").is_none());
}
