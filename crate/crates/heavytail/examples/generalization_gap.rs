//! The gap between training and population gradients at the algorithm's
//! output, measured on fresh datasets of growing size and compared with the
//! stability-plus-moment bound.

use heavytail::{
    empirical_gen_gap, generalization_bound, schedule_for, stability_bound, Algorithm,
    HarnessOptions, NoiseFamily, NoiseSpec, OptimizerConfig, ProblemFamily, RngSpec, TailParams,
    TheoryParams, Vector,
};

fn main() {
    let dim = 4;
    let p = 2.0;
    let scale = 0.7;
    let noise = NoiseSpec::new(NoiseFamily::Gaussian, scale, dim).unwrap();
    let family = ProblemFamily::quad_plus_sine(dim, 0.0, noise).unwrap();
    // gradient noise here is exactly the record noise, so its second moment
    // is known in closed form: sqrt(dim) * scale
    let sigma = (dim as f64).sqrt() * scale;
    let tail = TailParams::new(p, sigma).unwrap();
    let theory = TheoryParams::new(1.0, 1.0, 0.0).unwrap();

    let alg = Algorithm::NsgdM;
    let opts = HarnessOptions { reps: 150, probe_count: 1, holdout: 0 };
    println!("{} on the quadratic objective, p = {p}, sigma_p = {sigma:.3}", alg.name());
    println!(
        "{:>6} {:>4} {:>12} {:>12} {:>14} {:>12}",
        "n", "T", "gap", "stderr", "4eps + moment", "moment only"
    );
    for n in [64usize, 256, 1024, 4096] {
        let schedule = schedule_for(alg, n, p, 0.25).unwrap();
        let config = OptimizerConfig::new(
            alg,
            schedule,
            Vector::zeros(dim),
            RngSpec::new(8).child(n as u64),
        );
        let est = empirical_gen_gap(&family, n, &config, &opts).unwrap();
        let eps = stability_bound(alg, &schedule, &theory, n).unwrap();
        let bound = generalization_bound(eps, &tail, n).unwrap();
        let moment_only = generalization_bound(0.0, &tail, n).unwrap();
        println!(
            "{n:>6} {:>4} {:>12.5} {:>12.5} {:>14.5} {:>12.5}",
            schedule.t_steps, est.gap_hat, est.stderr, bound, moment_only
        );
    }
    println!();
    println!("the measured gap decays with n and stays under the bound; at short");
    println!("horizons the moment term dominates, so the bound is nearly flat in the");
    println!("algorithm and tight up to its constant.");
}
