//! Splitting heavy-tailed noise into a clipped part and a residual: the
//! clipped part has a controlled second moment, the residual a controlled
//! first moment, and the optimal truncation level balances the two.

use heavytail::{
    optimal_truncation_level, truncation_check, NoiseFamily, NoiseSpec, RngSpec, TailParams,
};

fn main() {
    let dim = 3;
    let spec = NoiseSpec::new(NoiseFamily::SymmetricAlphaStable { alpha: 1.6 }, 1.0, dim).unwrap();
    let mut rng = RngSpec::new(17).build();
    let samples: Vec<_> = (0..100_000).map(|_| spec.sample(&mut rng)).collect();

    let tail = TailParams::new(1.5, 1.0).unwrap();
    let n = 1000;
    let tau_star = optimal_truncation_level(&tail, n).unwrap();
    println!("stable noise, tail index 1.6, checked at p = {}; tau* = {tau_star:.2} for n = {n}", tail.p);
    println!();
    println!(
        "{:>10} {:>14} {:>14} {:>14} {:>14}",
        "tau", "E|clip|^2", "cap", "E|resid|", "cap"
    );
    for tau in [tau_star / 16.0, tau_star / 4.0, tau_star, tau_star * 4.0, tau_star * 16.0] {
        let d = truncation_check(&samples, &tail, tau).unwrap();
        println!(
            "{tau:>10.2} {:>14.4} {:>14.4} {:>14.6} {:>14.6}",
            d.centered_second_moment, d.second_moment_bound, d.residual_first_moment, d.residual_bound
        );
    }
    println!();
    println!("raising the level grows the kept part's second moment and shrinks the");
    println!("discarded residual; both stay under their caps at every level, because");
    println!("the caps follow from pointwise inequalities applied to the same draws.");

    let d = truncation_check(&samples, &tail, tau_star).unwrap();
    println!();
    println!("at tau*: measured sigma_p = {:.4}, clipped-mean shift = {:.5}", d.sigma_p_hat, d.clipped_mean_norm);
    println!("the mean shift is the price of clipping a symmetric distribution: small,");
    println!("but nonzero in any finite sample.");
}
