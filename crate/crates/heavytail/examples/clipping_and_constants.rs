//! The clip operator and the closed-form constants: what clipping does to a
//! vector, how the moment constant behaves across tail exponents, and where
//! the optimal truncation level sits.

use heavytail::{
    clip, moment_constant, optimal_truncation_level, truncation_objective, TailParams, Vector,
};

fn main() {
    let u = Vector::new(vec![3.0, 4.0]).unwrap();
    println!("u = [3, 4], |u| = {}", u.norm());
    for threshold in [10.0, 5.0, 2.5, 1.0] {
        let c = clip(&u, threshold).unwrap();
        println!(
            "  clip at {threshold:>4}: [{:.3}, {:.3}], norm {:.3}",
            c[0],
            c[1],
            c.norm()
        );
    }
    println!("short vectors pass through untouched; long ones keep their direction\n");

    // the constant in front of the n^{-(p-1)/p} moment term
    println!("tail p   moment constant");
    for p in [1.01, 1.1, 1.2, 1.5, 1.8, 2.0] {
        println!("  {p:<6} {:.6}", moment_constant(p).unwrap());
    }
    println!("the constant peaks at exactly 3 for p = 1.2 and is exactly 1 at p = 2\n");

    let tail = TailParams::new(1.5, 1.0).unwrap();
    let n = 10_000;
    let tau_star = optimal_truncation_level(&tail, n).unwrap();
    println!("p = {}, sigma_p = {}, n = {n}", tail.p, tail.sigma_p);
    println!("optimal truncation level: {tau_star:.3}");
    println!("objective around it (bias-variance trade-off in the truncation level):");
    for factor in [0.1, 0.5, 1.0, 2.0, 10.0] {
        let tau = tau_star * factor;
        let value = truncation_objective(tau, &tail, n).unwrap();
        let marker = if factor == 1.0 { "  <- minimum" } else { "" };
        println!("  tau = {tau:>10.2}: {value:.6}{marker}");
    }
    let closed = moment_constant(tail.p).unwrap() * tail.sigma_p * (n as f64).powf(-(tail.p - 1.0) / tail.p);
    println!(
        "closed form at the minimum: {closed:.6} (matches the objective at tau* to {:.1e})",
        (truncation_objective(tau_star, &tail, n).unwrap() - closed).abs()
    );
}
