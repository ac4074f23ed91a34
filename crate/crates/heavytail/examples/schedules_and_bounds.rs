//! How the sample-size-indexed schedules scale each knob, and the labeled
//! term breakdown of the population gradient bound they are tuned to
//! balance.

use heavytail::{
    predicted_rate_exponent, schedule_for, theoretical_report, Algorithm, TailParams,
    TheoryParams,
};

fn main() {
    let p = 1.5;
    println!("schedules at tail exponent p = {p}:");
    println!(
        "{:<12} {:>7} {:>6} {:>10} {:>10} {:>10} {:>6}",
        "algorithm", "n", "T", "eta", "clip", "momentum", "batch"
    );
    for alg in Algorithm::ALL {
        for n in [256usize, 4096, 65_536] {
            let s = schedule_for(alg, n, p, 1.0).unwrap();
            println!(
                "{:<12} {:>7} {:>6} {:>10.5} {:>10} {:>10} {:>6}",
                alg.name(),
                n,
                s.t_steps,
                s.eta,
                s.gamma.map_or("-".into(), |g| format!("{g:.3}")),
                s.beta.map_or("-".into(), |b| format!("{b:.5}")),
                s.batch.map_or("-".into(), |b| b.to_string()),
            );
        }
    }
    println!();
    println!("predicted decay exponents of the output gradient norm in n:");
    for alg in Algorithm::ALL {
        println!("  {:<12} n^{:.5}", alg.name(), predicted_rate_exponent(alg, p).unwrap());
    }
    println!("the single-sample, momentum, and clipped-momentum variants share one rate;");
    println!("the clipped baseline trades a slower rate for a shorter horizon.\n");

    let theory = TheoryParams::new(1.0, 2.0, 1.0).unwrap();
    let tail = TailParams::new(p, 1.0).unwrap();
    let n = 4096;
    for alg in [Algorithm::ClippedSgd, Algorithm::NsgdCm] {
        let schedule = schedule_for(alg, n, p, 1.0).unwrap();
        let report = theoretical_report(alg, &schedule, &theory, &tail, n).unwrap();
        println!("bound breakdown for {} at n = {n} (L=1, G=2, delta=1, sigma_p=1):", alg.name());
        for term in &report.terms {
            println!("  {:<18} {:>12.6}", term.label, term.value);
        }
        println!("  {:<18} {:>12.6}\n", "total", report.total);
    }
}
