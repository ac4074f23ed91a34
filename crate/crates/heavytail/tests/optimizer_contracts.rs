//! Integration contracts for the optimizer runners: determinism, log
//! shapes, step geometry, checkpointing, and error surfaces.

use heavytail::{
    make_quad_plus_sine, run, run_clipped_sgd, sample_output, Algorithm, Error, NoiseFamily,
    NoiseSpec, OptimizerConfig, ProblemInstance, RngSpec, Schedule, Vector,
};

fn problem(n: usize, dim: usize) -> ProblemInstance {
    let noise =
        NoiseSpec::new(NoiseFamily::SymmetricAlphaStable { alpha: 1.8 }, 1.0, dim).unwrap();
    make_quad_plus_sine(n, dim, 0.5, noise, RngSpec::new(91)).unwrap()
}

fn schedule(alg: Algorithm) -> Schedule {
    Schedule {
        t_steps: 23,
        eta: 0.05,
        gamma: alg.uses_clip().then_some(1.5),
        beta: alg.uses_momentum().then_some(0.7),
        batch: (alg == Algorithm::NsgdB).then_some(3),
    }
}

fn bits_equal(a: &Vector, b: &Vector) -> bool {
    a.dim() == b.dim()
        && a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[test]
fn reruns_are_bitwise_identical() {
    let problem = problem(64, 3);
    for alg in Algorithm::ALL {
        let config =
            OptimizerConfig::new(alg, schedule(alg), Vector::zeros(3), RngSpec::new(7));
        let a = run(&problem, &config).unwrap();
        let b = run(&problem, &config).unwrap();
        assert_eq!(a.index_log, b.index_log, "{alg}");
        assert_eq!(a.output_index, b.output_index, "{alg}");
        assert!(bits_equal(&a.output, &b.output), "{alg}");
        assert_eq!(a.iterates.len(), b.iterates.len(), "{alg}");
        for ((sa, va), (sb, vb)) in a.iterates.iter().zip(&b.iterates) {
            assert_eq!(sa, sb);
            assert!(bits_equal(va, vb), "{alg} step {sa}");
        }
    }
}

#[test]
fn log_lengths_match_the_schedule() {
    let problem = problem(64, 3);
    for alg in Algorithm::ALL {
        let s = schedule(alg);
        let config = OptimizerConfig::new(alg, s, Vector::zeros(3), RngSpec::new(8));
        let traj = run(&problem, &config).unwrap();
        let draws_per_step = if alg == Algorithm::NsgdB { s.batch.unwrap() } else { 1 };
        assert_eq!(traj.index_log.len(), draws_per_step * s.t_steps, "{alg}");
        assert_eq!(traj.step_norms.len(), s.t_steps, "{alg}");
        assert_eq!(traj.grad_norms.len(), s.t_steps, "{alg}");
        assert_eq!(traj.direction_norms.len(), s.t_steps, "{alg}");
        assert!(traj.index_log.iter().all(|i| *i < 64), "{alg}");
    }
}

#[test]
fn normalized_methods_step_exactly_eta() {
    let problem = problem(64, 3);
    for alg in [Algorithm::NsgdB, Algorithm::NsgdM, Algorithm::NsgdCm] {
        let s = schedule(alg);
        let config = OptimizerConfig::new(alg, s, Vector::zeros(3), RngSpec::new(9));
        let traj = run(&problem, &config).unwrap();
        for (t, norm) in traj.step_norms.iter().enumerate() {
            assert!(
                (norm - s.eta).abs() <= 1e-12 * s.eta,
                "{alg} step {t}: |dx| = {norm}, eta = {}",
                s.eta
            );
        }
    }
}

#[test]
fn clipped_sgd_steps_follow_the_clipped_gradient() {
    let problem = problem(64, 3);
    let s = schedule(Algorithm::ClippedSgd);
    let config = OptimizerConfig::new(Algorithm::ClippedSgd, s, Vector::zeros(3), RngSpec::new(10));
    let traj = run(&problem, &config).unwrap();
    let gamma = s.gamma.unwrap();
    let mut clipped_steps = 0;
    for t in 0..s.t_steps {
        let expected = s.eta * traj.grad_norms[t].min(gamma);
        assert!(
            (traj.step_norms[t] - expected).abs() <= 1e-9 * expected.max(1e-300),
            "step {t}: |dx| = {}, eta * min(|g|, gamma) = {expected}",
            traj.step_norms[t]
        );
        assert!(traj.direction_norms[t] <= gamma * (1.0 + 1e-12));
        if traj.grad_norms[t] > gamma {
            clipped_steps += 1;
        }
    }
    // the heavy-tailed noise must actually exercise the clip
    assert!(clipped_steps > 0);
}

#[test]
fn record_every_keeps_first_last_and_multiples() {
    let problem = problem(64, 3);
    let s = schedule(Algorithm::NsgdM);
    let x0 = Vector::new(vec![0.3, -0.1, 0.7]).unwrap();
    let config = OptimizerConfig::new(Algorithm::NsgdM, s, x0.clone(), RngSpec::new(11))
        .with_record_every(5);
    let traj = run(&problem, &config).unwrap();
    let recorded: Vec<usize> = traj.iterates.iter().map(|(t, _)| *t).collect();
    assert_eq!(recorded, vec![0, 5, 10, 15, 20, 22]);
    assert!(bits_equal(traj.iterate_at(0).unwrap(), &x0));
    assert!(traj.iterate_at(1).is_none());
    assert!(traj.iterate_at(21).is_none());
    assert!(traj.iterate_at(22).is_some());
}

#[test]
fn output_is_a_recorded_candidate() {
    let problem = problem(64, 3);
    for alg in Algorithm::ALL {
        let config =
            OptimizerConfig::new(alg, schedule(alg), Vector::zeros(3), RngSpec::new(12));
        let traj = run(&problem, &config).unwrap();
        assert!(traj.output_index < schedule(alg).t_steps, "{alg}");
        let stored = traj.iterate_at(traj.output_index).unwrap();
        assert!(bits_equal(stored, &traj.output), "{alg}");
    }
}

#[test]
fn sample_output_redraws_deterministically() {
    let problem = problem(64, 3);
    let config = OptimizerConfig::new(
        Algorithm::NsgdM,
        schedule(Algorithm::NsgdM),
        Vector::zeros(3),
        RngSpec::new(13),
    );
    let traj = run(&problem, &config).unwrap();
    let a = sample_output(&traj, &mut RngSpec::new(99).build()).unwrap();
    let b = sample_output(&traj, &mut RngSpec::new(99).build()).unwrap();
    assert!(bits_equal(&a, &b));
    assert!(traj.iterates.iter().any(|(_, v)| bits_equal(v, &a)));
}

#[test]
fn config_shape_errors_are_reported() {
    let problem = problem(64, 3);

    let wrong_dim = OptimizerConfig::new(
        Algorithm::NsgdM,
        schedule(Algorithm::NsgdM),
        Vector::zeros(2),
        RngSpec::new(14),
    );
    assert!(matches!(
        run(&problem, &wrong_dim),
        Err(Error::DimensionMismatch { expected: 3, got: 2 })
    ));

    let missing_batch = OptimizerConfig::new(
        Algorithm::NsgdB,
        Schedule { t_steps: 4, eta: 0.1, gamma: None, beta: None, batch: None },
        Vector::zeros(3),
        RngSpec::new(15),
    );
    assert!(matches!(run(&problem, &missing_batch), Err(Error::InvalidArgument(_))));

    let zero_record = OptimizerConfig::new(
        Algorithm::NsgdM,
        schedule(Algorithm::NsgdM),
        Vector::zeros(3),
        RngSpec::new(16),
    )
    .with_record_every(0);
    assert!(matches!(run(&problem, &zero_record), Err(Error::InvalidArgument(_))));

    let bad_beta = OptimizerConfig::new(
        Algorithm::NsgdM,
        Schedule { t_steps: 4, eta: 0.1, gamma: None, beta: Some(1.0), batch: None },
        Vector::zeros(3),
        RngSpec::new(17),
    );
    assert!(matches!(run(&problem, &bad_beta), Err(Error::InvalidArgument(_))));

    // the named entry points refuse configs for a different algorithm
    let momentum_config = OptimizerConfig::new(
        Algorithm::NsgdM,
        schedule(Algorithm::NsgdM),
        Vector::zeros(3),
        RngSpec::new(18),
    );
    assert!(matches!(
        run_clipped_sgd(&problem, &momentum_config),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn divergence_is_detected_by_step() {
    let problem = problem(16, 1);
    let s = Schedule {
        t_steps: 8,
        eta: f64::MAX,
        gamma: Some(2.0),
        beta: None,
        batch: None,
    };
    let config = OptimizerConfig::new(Algorithm::ClippedSgd, s, Vector::zeros(1), RngSpec::new(19));
    match run(&problem, &config) {
        Err(Error::Divergence { step }) => assert!(step < 8),
        other => panic!("expected divergence, got {other:?}"),
    }
}
