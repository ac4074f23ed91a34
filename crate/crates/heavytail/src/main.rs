//! Thin command-line front end over the library. The real interface is the
//! library plus its examples; this binary exists for running experiment
//! configs and quick bound lookups from a shell.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use heavytail::experiment::lemmas::Direction;
use heavytail::{
    load_config, render_chart, resolve_output_dir, rows_from_csv, run_experiment,
    run_lemma_suite, schedule_for, stability_bound, theoretical_report, write_outcome, Algorithm,
    Error, ExperimentKind, Result, RngSpec, TailParams, TheoryParams,
};

#[derive(Parser)]
#[command(
    name = "heavytail",
    version,
    about = "Heavy-tailed stochastic optimization: experiments, bounds, and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; writes report.json, table.csv, and
    /// chart.svg into the output directory
    Run {
        /// TOML experiment config
        config: PathBuf,
        /// Output directory (overrides the config and HEAVYTAIL_OUT)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running anything
    Validate {
        /// TOML experiment config
        config: PathBuf,
    },
    /// Print the sample-size-indexed schedule and the bound term breakdown
    Bounds {
        /// Which algorithm to size the schedule for
        #[arg(value_enum)]
        algorithm: Algorithm,
        /// Training set size
        #[arg(long)]
        n: usize,
        /// Noise tail exponent in (1, 2]
        #[arg(long)]
        p: f64,
        /// Multiplier on every scheduled quantity
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Smoothness constant
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        /// Gradient p-th moment bound
        #[arg(long, default_value_t = 1.0)]
        g: f64,
        /// Initial suboptimality
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Noise p-th moment bound
        #[arg(long = "sigma-p", default_value_t = 1.0)]
        sigma_p: f64,
    },
    /// Run the inequality check suite; exits with status 2 if any fail
    Lemmas {
        #[arg(long, default_value_t = 20240901)]
        seed: u64,
    },
    /// Render an SVG chart from a previously written table.csv
    Chart {
        csv: PathBuf,
        /// Output path (defaults to the CSV path with an .svg extension)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Chart title (defaults to the experiment kind in the table)
        #[arg(long)]
        title: Option<String>,
    },
}

fn fmt(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.is_finite() && (0.001..100_000.0).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.4e}")
    }
}

fn cmd_run(config_path: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let (config, bytes) = load_config(config_path)?;
    let outcome = run_experiment(&config, &bytes)?;
    let dir = out.unwrap_or_else(|| resolve_output_dir(&config));
    let paths = write_outcome(&outcome, &dir)?;
    println!("kind: {}", config.kind);
    println!("wrote {}", paths.report.display());
    println!("wrote {}", paths.table.display());
    if let Some(chart) = &paths.chart {
        println!("wrote {}", chart.display());
    }
    let failed_rows = outcome.rows.iter().filter(|r| r.status != "ok").count();
    if failed_rows > 0 {
        println!("{failed_rows} row(s) carry a non-ok status");
    }
    if config.kind == ExperimentKind::LemmaSuite && outcome.failed_checks > 0 {
        println!("{} check(s) failed", outcome.failed_checks);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(config_path: &Path) -> Result<ExitCode> {
    let (config, _) = load_config(config_path)?;
    println!("ok: {} ({})", config_path.display(), config.kind);
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    algorithm: Algorithm,
    n: usize,
    p: f64,
    scale: f64,
    l: f64,
    g: f64,
    delta: f64,
    sigma_p: f64,
) -> Result<ExitCode> {
    let schedule = schedule_for(algorithm, n, p, scale)?;
    let theory = TheoryParams::new(l, g, delta)?;
    let tail = TailParams::new(p, sigma_p)?;
    println!("algorithm: {algorithm}   n: {n}   p: {p}   scale: {scale}");
    print!("schedule: T = {}, eta = {}", schedule.t_steps, fmt(schedule.eta));
    if let Some(gamma) = schedule.gamma {
        print!(", clip = {}", fmt(gamma));
    }
    if let Some(beta) = schedule.beta {
        print!(", momentum = {}", fmt(beta));
    }
    if let Some(batch) = schedule.batch {
        print!(", batch = {batch}");
    }
    println!();
    println!();
    let report = theoretical_report(algorithm, &schedule, &theory, &tail, n)?;
    println!("{:<22} {:<14} value", "term", "kind");
    for term in &report.terms {
        let kind = match term.kind {
            heavytail::TermKind::Optimization => "optimization",
            heavytail::TermKind::Stability => "stability",
            heavytail::TermKind::Moment => "moment",
        };
        println!("{:<22} {:<14} {}", term.label, kind, fmt(term.value));
    }
    println!("{:<22} {:<14} {}", "total", "", fmt(report.total));
    println!();
    let eps = stability_bound(algorithm, &schedule, &theory, n)?;
    println!("stability bound (per swapped sample): {}", fmt(eps));
    Ok(ExitCode::SUCCESS)
}

fn cmd_lemmas(seed: u64) -> Result<ExitCode> {
    let checks = run_lemma_suite(RngSpec::new(seed))?;
    let mut failed = 0usize;
    for c in &checks {
        let relation = match c.direction {
            Direction::AtMost => "<=",
            Direction::AtLeast => ">=",
        };
        let verdict = if c.passed { "pass" } else { "FAIL" };
        println!(
            "{verdict}  {:<28} observed {:<13} {relation} {}",
            c.name,
            fmt(c.observed),
            fmt(c.cap)
        );
        if !c.passed {
            failed += 1;
            println!("      {}", c.detail);
        }
    }
    if failed > 0 {
        println!("{failed} of {} checks failed", checks.len());
        return Ok(ExitCode::from(2));
    }
    println!("all {} checks passed", checks.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_chart(csv: &PathBuf, out: Option<PathBuf>, title: Option<String>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(csv)?;
    let rows = rows_from_csv(&text)?;
    let title = title.unwrap_or_else(|| {
        rows.first().map(|r| r.kind.clone()).unwrap_or_else(|| "metrics".into())
    });
    let svg = render_chart(&rows, &title)?;
    let out = out.unwrap_or_else(|| csv.with_extension("svg"));
    std::fs::write(&out, svg)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Validate { config } => cmd_validate(&config),
        Command::Bounds { algorithm, n, p, scale, l, g, delta, sigma_p } => {
            cmd_bounds(algorithm, n, p, scale, l, g, delta, sigma_p)
        }
        Command::Lemmas { seed } => cmd_lemmas(seed),
        Command::Chart { csv, out, title } => cmd_chart(&csv, out, title),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::InvalidArgument(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
