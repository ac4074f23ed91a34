//! Normalized and clipped stochastic gradient methods under heavy-tailed
//! gradient noise, with the machinery to measure how stable and how well
//! they generalize.
//!
//! What lives where:
//!
//! - [`theory`]: closed-form constants, truncation levels, stability and
//!   generalization bounds, and the n-indexed parameter schedules.
//! - [`noise`]: mean-zero samplers with controllable tail weight (Gaussian,
//!   symmetric alpha-stable, symmetrized Pareto, Student t) plus empirical
//!   moment estimation.
//! - [`problems`]: synthetic finite-sum objectives with per-component
//!   gradients, known smoothness, and population gradients.
//! - [`optimizers`]: clipped SGD and three normalized SGD variants, all
//!   driven by replayable index streams and returning full trajectories.
//! - [`stability`]: neighboring datasets, coupled runs, empirical stability
//!   and generalization-gap estimates, truncation diagnostics, and labeled
//!   theoretical bound breakdowns.
//! - [`experiment`]: config-driven sweeps with JSON/CSV/SVG outputs, rate
//!   fitting, and algorithm comparison.
//!
//! Every run is reproducible: randomness is addressed by (seed, stream)
//! pairs ([`rng::RngSpec`]) and each consumer gets its own stream, so
//! results never depend on sibling consumers or thread interleaving.
//!
//! The `examples/` directory is the guided tour; each file exercises one
//! capability end to end (`cargo run --example schedules_and_bounds`, etc.).

pub mod clip;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod noise;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod stability;
pub mod theory;
pub mod vector;

pub use clip::clip;
pub use dataset::{Dataset, FamilyTag};
pub use error::{Error, Result};
pub use experiment::chart::render_chart;
pub use experiment::lemmas::{run_lemma_suite, LemmaCheck};
pub use experiment::ratefit::{fit_rate, RateFit};
pub use experiment::report::{rows_from_csv, rows_to_csv, validate_report, CsvRow};
pub use experiment::{
    build_family, compare_algorithms, load_config, resolve_output_dir, run_experiment,
    write_outcome, ExperimentConfig, ExperimentKind, ExperimentOutcome, NoiseConfig,
    ProblemConfig, WalkConfig,
};
pub use noise::{estimate_p_moment, verify_p_bcm, NoiseFamily, NoiseSpec};
pub use optimizers::{
    run, run_clipped_sgd, run_nsgd_b, run_nsgd_cm, run_nsgd_m, sample_output, OptimizerConfig,
    Trajectory,
};
pub use problems::{
    make_logistic_pair, make_quad_plus_sine, make_robust_regression, ProblemFamily,
    ProblemInstance,
};
pub use rng::RngSpec;
pub use stability::{
    coupled_run, empirical_gen_gap, empirical_stability, estimate_theory_params, make_neighbor,
    theoretical_report, truncation_check, BoundReport, BoundTerm, CoupledRun, GapEstimate,
    HarnessOptions, NeighborPair, StabilityEstimate, TermKind, TruncationDecomposition,
};
pub use theory::{
    generalization_bound, moment_constant, optimal_truncation_level, predicted_rate_exponent,
    schedule_for, stability_bound, truncation_objective, Algorithm, Schedule, TailParams,
    TheoryParams,
};
pub use vector::Vector;
