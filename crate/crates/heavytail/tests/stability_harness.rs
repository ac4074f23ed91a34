//! Integration checks for the neighboring-dataset machinery: pair
//! construction, coupled runs, the measurement harness, bound reports, and
//! plug-in parameter estimation.

use heavytail::{
    coupled_run, empirical_gen_gap, empirical_stability, estimate_p_moment,
    estimate_theory_params, make_neighbor, make_quad_plus_sine, make_robust_regression,
    optimal_truncation_level, theoretical_report, truncation_check, Algorithm, Error,
    HarnessOptions, NoiseFamily, NoiseSpec, OptimizerConfig, RngSpec, Schedule, TailParams,
    TermKind, TheoryParams, Vector,
};

fn quad_family_instance(n: usize, dim: usize) -> heavytail::ProblemInstance {
    let noise =
        NoiseSpec::new(NoiseFamily::SymmetricAlphaStable { alpha: 1.8 }, 1.0, dim).unwrap();
    make_quad_plus_sine(n, dim, 0.5, noise, RngSpec::new(311)).unwrap()
}

fn momentum_schedule() -> Schedule {
    Schedule { t_steps: 16, eta: 0.05, gamma: None, beta: Some(0.5), batch: None }
}

#[test]
fn neighbor_differs_in_exactly_one_row() {
    let problem = quad_family_instance(32, 3);
    let mut rng = RngSpec::new(5).build();
    let pair = make_neighbor(&problem, 5, &mut rng).unwrap();

    assert_eq!(pair.replaced_index, 5);
    assert_eq!(pair.base.n(), pair.perturbed.n());
    assert_eq!(pair.base.dataset().width(), pair.perturbed.dataset().width());
    assert_eq!(pair.base.dataset().tag(), pair.perturbed.dataset().tag());
    let differing: Vec<usize> = (0..32)
        .filter(|i| pair.base.dataset().row(*i) != pair.perturbed.dataset().row(*i))
        .collect();
    assert_eq!(differing, vec![5]);

    assert!(matches!(
        make_neighbor(&problem, 32, &mut rng),
        Err(Error::IndexOutOfRange { index: 32, len: 32 })
    ));
}

#[test]
fn coupled_runs_share_the_index_stream() {
    let problem = quad_family_instance(32, 3);
    let mut rng = RngSpec::new(6).build();
    let pair = make_neighbor(&problem, 11, &mut rng).unwrap();
    let config = OptimizerConfig::new(
        Algorithm::NsgdM,
        momentum_schedule(),
        Vector::zeros(3),
        RngSpec::new(7),
    );
    let coupled = coupled_run(&pair, &config).unwrap();
    assert_eq!(coupled.base.index_log, coupled.perturbed.index_log);
    assert_eq!(coupled.replaced_index, 11);
    assert_eq!(
        coupled.replacement_hit(),
        coupled.base.index_log.contains(&11)
    );
}

#[test]
fn stability_estimate_is_internally_consistent() {
    let problem = quad_family_instance(32, 3);
    let opts = HarnessOptions { reps: 30, probe_count: 8, holdout: 0 };
    let schedule = Schedule { t_steps: 24, eta: 0.05, gamma: None, beta: Some(0.5), batch: None };
    let config = OptimizerConfig::new(Algorithm::NsgdM, schedule, Vector::zeros(3), RngSpec::new(8));
    let est = empirical_stability(problem.family(), 32, &config, &opts).unwrap();
    assert_eq!(est.failed_reps, 0);
    assert_eq!(est.per_rep_max_sq.len(), 30);
    assert!(est.per_rep_max_sq.iter().all(|v| v.is_finite() && *v >= 0.0));
    assert!(est.lower <= est.epsilon_hat && est.epsilon_hat <= est.upper);
    assert!(est.stderr >= 0.0 && est.stderr.is_finite());
    // most runs sample the swapped row before the output is drawn here
    assert!(est.epsilon_hat > 0.0);

    assert!(empirical_stability(
        problem.family(),
        32,
        &config,
        &HarnessOptions { reps: 0, probe_count: 8, holdout: 0 }
    )
    .is_err());
}

#[test]
fn gap_estimate_uses_the_closed_form_when_available() {
    let problem = quad_family_instance(64, 3);
    let opts = HarnessOptions { reps: 20, probe_count: 4, holdout: 0 };
    let config = OptimizerConfig::new(
        Algorithm::NsgdM,
        momentum_schedule(),
        Vector::zeros(3),
        RngSpec::new(9),
    );
    let gap = empirical_gen_gap(problem.family(), 64, &config, &opts).unwrap();
    assert_eq!(gap.failed_reps, 0);
    assert_eq!(gap.per_rep.len(), 20);
    assert!(gap.gap_hat > 0.0);
    assert_eq!(gap.population_mc_stderr, 0.0);
}

#[test]
fn regression_gap_needs_a_holdout() {
    let label_noise = NoiseSpec::new(NoiseFamily::StudentT { nu: 2.5 }, 1.0, 1).unwrap();
    let instance = make_robust_regression(48, 3, label_noise, RngSpec::new(10)).unwrap();
    let config = OptimizerConfig::new(
        Algorithm::NsgdM,
        momentum_schedule(),
        Vector::zeros(3),
        RngSpec::new(11),
    );

    let with_holdout = HarnessOptions { reps: 10, probe_count: 4, holdout: 512 };
    let gap = empirical_gen_gap(instance.family(), 48, &config, &with_holdout).unwrap();
    assert_eq!(gap.failed_reps, 0);
    assert!(gap.population_mc_stderr > 0.0);

    let without = HarnessOptions { reps: 10, probe_count: 4, holdout: 0 };
    assert!(empirical_gen_gap(instance.family(), 48, &config, &without).is_err());
}

#[test]
fn bound_reports_decompose_into_labeled_terms() {
    let theory = TheoryParams::new(1.5, 2.0, 1.0).unwrap();
    let tail = TailParams::new(1.5, 1.2).unwrap();
    for alg in Algorithm::ALL {
        let schedule = heavytail::schedule_for(alg, 512, 1.5, 1.0).unwrap();
        let report = theoretical_report(alg, &schedule, &theory, &tail, 512).unwrap();
        assert_eq!(report.algorithm, alg);
        assert!(!report.terms.is_empty());

        let sum: f64 = report.terms.iter().map(|t| t.value).sum();
        assert!(
            (report.total - sum).abs() <= 1e-12 * report.total.max(1.0),
            "{alg}: total {} vs term sum {sum}",
            report.total
        );
        assert!(report.terms.iter().all(|t| t.value.is_finite() && t.value >= 0.0));
        assert!(report.terms.iter().any(|t| t.kind == TermKind::Stability), "{alg}");
        assert!(report.terms.iter().any(|t| t.kind == TermKind::Moment), "{alg}");
        assert!(report.terms.iter().any(|t| t.kind == TermKind::Optimization), "{alg}");

        let first = report.terms[0].label;
        assert!(report.term(first).is_some());
        assert!(report.term("no such term").is_none());
    }
}

#[test]
fn estimated_parameters_match_known_structure() {
    let dim = 3;
    let noise = NoiseSpec::new(NoiseFamily::Gaussian, 1.0, dim).unwrap();
    let family = heavytail::ProblemFamily::quad_plus_sine(dim, 0.5, noise).unwrap();
    let config = OptimizerConfig::new(
        Algorithm::NsgdM,
        momentum_schedule(),
        Vector::zeros(dim),
        RngSpec::new(12),
    );
    let params = estimate_theory_params(&family, 32, &config, 2.0, 4, 8).unwrap();
    // curvature of this objective is exactly 1 + c for every dataset
    assert_eq!(params.l_smooth, 1.5);
    assert!(params.g_moment > 0.0 && params.g_moment.is_finite());
    assert!(params.delta >= 0.0 && params.delta.is_finite());
}

#[test]
fn truncation_caps_hold_for_heavy_tailed_draws() {
    let spec = NoiseSpec::new(NoiseFamily::ParetoSymmetric { alpha: 1.6 }, 1.0, 2).unwrap();
    let mut rng = RngSpec::new(13).build();
    let samples: Vec<Vector> = (0..20_000).map(|_| spec.sample(&mut rng)).collect();
    let p = 1.4;
    let sigma_hat = estimate_p_moment(&samples, &Vector::zeros(2), p).unwrap();
    let tail = TailParams::new(p, sigma_hat).unwrap();
    let tau_star = optimal_truncation_level(&tail, 500).unwrap();
    for factor in [0.5, 1.0, 2.0] {
        let d = truncation_check(&samples, &tail, factor * tau_star).unwrap();
        assert!(d.centered_second_moment <= d.second_moment_bound * (1.0 + 1e-12));
        assert!(d.residual_first_moment <= d.residual_bound * (1.0 + 1e-12));
        assert!(d.sigma_p_hat > 0.0);
    }
}
