//! Fitting decay exponents to sweep measurements and comparing them with
//! the predicted rates.

use heavytail::{
    fit_rate, predicted_rate_exponent, run, schedule_for, Algorithm, NoiseFamily, NoiseSpec,
    OptimizerConfig, ProblemFamily, ProblemInstance, RngSpec, Vector,
};

fn main() {
    // known ground truth first: points on an exact power law
    let ns = [64.0f64, 256.0, 1024.0, 4096.0];
    let metrics: Vec<f64> = ns.iter().map(|n| 2.5 * n.powf(-0.125)).collect();
    let fit = fit_rate(&ns, &metrics).unwrap();
    println!(
        "exact power law 2.5 n^-0.125: fitted slope {:.4}, r^2 {:.6}",
        fit.slope, fit.r_squared
    );

    // now a real sweep: output gradient norm of the momentum method under
    // schedules sized for p = 2
    let p = 2.0;
    let alg = Algorithm::NsgdM;
    let dim = 4;
    let family = ProblemFamily::quad_plus_sine(
        dim,
        0.0,
        NoiseSpec::new(NoiseFamily::Gaussian, 1.0, dim).unwrap(),
    )
    .unwrap();
    let reps = 60;
    let grid = [256usize, 1024, 4096, 16384];
    // start away from the optimum so there is actual progress to measure
    let x0 = Vector::new(vec![2.0; dim]).unwrap();
    let mut means = Vec::new();
    println!("\n{:>6} {:>4} {:>12}", "n", "T", "mean |grad|");
    for &n in &grid {
        let schedule = schedule_for(alg, n, p, 1.0).unwrap();
        let mut acc = 0.0;
        for r in 0..reps {
            let seed = RngSpec::new(77).child(n as u64).child(r);
            let mut data_rng = seed.child(0).build();
            let dataset = family.make_dataset(n, &mut data_rng).unwrap();
            let problem = ProblemInstance::new(family.clone(), dataset).unwrap();
            let config = OptimizerConfig::new(alg, schedule, x0.clone(), seed.child(1))
                .with_record_every(schedule.t_steps);
            let traj = run(&problem, &config).unwrap();
            acc += problem.population_grad(&traj.output).unwrap().norm();
        }
        let mean = acc / reps as f64;
        println!("{n:>6} {:>4} {mean:>12.5}", schedule.t_steps);
        means.push(mean);
    }
    let nf: Vec<f64> = grid.iter().map(|n| *n as f64).collect();
    let fit = fit_rate(&nf, &means).unwrap();
    let predicted = predicted_rate_exponent(alg, p).unwrap();
    println!(
        "\nfitted slope {:.4} +- {:.4} (r^2 {:.3}); predicted {:.4}",
        fit.slope, fit.slope_stderr, fit.r_squared, predicted
    );
    println!("four grid points give a noisy exponent; the sweep configs in the");
    println!("experiment runner repeat this with replication counts and error bars.");
}
