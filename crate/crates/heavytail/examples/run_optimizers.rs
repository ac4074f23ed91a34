//! Running the four methods on one problem, and the reductions that tie
//! them together: infinite clip level turns the clipped-momentum method
//! into the momentum method bitwise, and zero momentum with batch one turns
//! the momentum method into the single-sample baseline.

use heavytail::{
    make_quad_plus_sine, run, Algorithm, NoiseFamily, NoiseSpec, OptimizerConfig, RngSpec,
    Schedule, Vector,
};

fn main() {
    let noise = NoiseSpec::new(NoiseFamily::SymmetricAlphaStable { alpha: 1.8 }, 0.5, 6).unwrap();
    let problem = make_quad_plus_sine(512, 6, 0.2, noise, RngSpec::new(5)).unwrap();
    let x0 = Vector::new(vec![2.0; 6]).unwrap();
    let seed = RngSpec::new(99);

    println!("{:<12} {:>10} {:>12} {:>12} {:>8}", "algorithm", "F(x0)", "F(output)", "|grad|", "output t");
    for alg in Algorithm::ALL {
        let schedule = Schedule {
            t_steps: 300,
            eta: 0.02,
            gamma: alg.uses_clip().then_some(2.0),
            beta: alg.uses_momentum().then_some(0.9),
            batch: (alg == Algorithm::NsgdB).then_some(4),
        };
        let config = OptimizerConfig::new(alg, schedule, x0.clone(), seed);
        let traj = run(&problem, &config).unwrap();
        println!(
            "{:<12} {:>10.4} {:>12.4} {:>12.4} {:>8}",
            alg.name(),
            problem.empirical_value(&x0).unwrap(),
            problem.empirical_value(&traj.output).unwrap(),
            problem.empirical_grad(&traj.output).unwrap().norm(),
            traj.output_index,
        );
    }

    // same seed means same index draws, so the reductions are exact
    let base = Schedule { t_steps: 200, eta: 0.05, gamma: None, beta: Some(0.8), batch: None };
    let momentum = run(
        &problem,
        &OptimizerConfig::new(Algorithm::NsgdM, base, x0.clone(), seed),
    )
    .unwrap();
    let clipped_momentum = run(
        &problem,
        &OptimizerConfig::new(
            Algorithm::NsgdCm,
            Schedule { gamma: Some(f64::INFINITY), ..base },
            x0.clone(),
            seed,
        ),
    )
    .unwrap();
    println!(
        "\nclipped momentum with infinite clip == momentum method: {}",
        momentum.output == clipped_momentum.output
    );

    let no_momentum = run(
        &problem,
        &OptimizerConfig::new(
            Algorithm::NsgdM,
            Schedule { beta: Some(0.0), ..base },
            x0.clone(),
            seed,
        ),
    )
    .unwrap();
    let batch_one = run(
        &problem,
        &OptimizerConfig::new(
            Algorithm::NsgdB,
            Schedule { beta: None, batch: Some(1), ..base },
            x0.clone(),
            seed,
        ),
    )
    .unwrap();
    println!(
        "momentum 0 == single-sample baseline:                    {}",
        no_momentum.output == batch_one.output
    );
    println!("(both comparisons are bitwise, not approximate)");
}
