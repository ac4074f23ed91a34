//! Log-log SVG charts rendered straight from the output table, so a chart
//! can always be regenerated from the CSV alone.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiment::report::CsvRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series<'a> {
    name: &'a str,
    color: &'static str,
    /// (x, metric, lo, hi, theory)
    points: Vec<(f64, f64, f64, f64, Option<f64>)>,
    predicted_slope: Option<f64>,
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    if (1.0..1e7).contains(&v) && (v - v.round()).abs() < 1e-9 * v.max(1.0) {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.0e}")
    }
}

/// Tick positions covering [lo, hi] in log space: decades when the span is
/// wide, octaves otherwise.
fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo);
    let decades = (hi / lo).log10();
    let base: f64 = if decades >= 2.0 { 10.0 } else { 2.0 };
    let first = (lo.ln() / base.ln()).ceil() as i32;
    let last = (hi.ln() / base.ln()).floor() as i32;
    let mut ticks: Vec<f64> = (first..=last).map(|k| base.powi(k)).collect();
    if ticks.len() < 2 {
        ticks = vec![lo, hi];
    }
    ticks
}

/// Renders a log-log chart of metric against n (against the step count for
/// walk rows). Solid lines with markers are measurements, error bars span
/// [metric_lo, metric_hi], long-dash lines are closed-form bounds, and the
/// short-dash gray guide through each series' first point shows its
/// predicted slope.
pub fn render_chart(rows: &[CsvRow], title: &str) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Report("chart needs at least one row".into()));
    }
    let walk = rows[0].kind == "random-walk-demo";
    let x_label = if walk { "steps" } else { "n" };

    let mut series: Vec<Series> = Vec::new();
    for row in rows {
        let x = if walk { row.t_steps as f64 } else { row.n as f64 };
        if !(x > 0.0) || !(row.metric > 0.0) || !row.metric.is_finite() {
            continue;
        }
        let lo = if row.metric_lo > 0.0 { row.metric_lo } else { row.metric };
        let hi = if row.metric_hi > 0.0 { row.metric_hi } else { row.metric };
        let entry = (x, row.metric, lo, hi, row.theory_bound.filter(|b| *b > 0.0));
        match series.iter_mut().find(|s| s.name == row.algorithm) {
            Some(s) => {
                s.points.push(entry);
                s.predicted_slope = s.predicted_slope.or(row.predicted_slope);
            }
            None => series.push(Series {
                name: &row.algorithm,
                color: PALETTE[series.len() % PALETTE.len()],
                points: vec![entry],
                predicted_slope: row.predicted_slope,
            }),
        }
    }
    if series.is_empty() {
        return Err(Error::Report("chart needs positive finite metric values".into()));
    }

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in &series {
        for (x, m, lo, hi, theory) in &s.points {
            x_min = x_min.min(*x);
            x_max = x_max.max(*x);
            y_min = y_min.min(*lo).min(*m);
            y_max = y_max.max(*hi).max(*m);
            if let Some(t) = theory {
                y_min = y_min.min(*t);
                y_max = y_max.max(*t);
            }
        }
    }
    if x_min == x_max {
        x_min *= 0.8;
        x_max /= 0.8;
    }
    y_min *= 0.8;
    y_max *= 1.25;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let to_x = |v: f64| MARGIN_L + plot_w * (v.ln() - x_min.ln()) / (x_max.ln() - x_min.ln());
    let to_y = |v: f64| MARGIN_T + plot_h * (y_max.ln() - v.ln()) / (y_max.ln() - y_min.ln());

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    )
    .expect("writing to String cannot fail");
    let mut put = |s: String| w.push_str(&s);

    put(format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    put(format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        px(MARGIN_L + plot_w / 2.0),
        title
    ));

    for t in log_ticks(x_min, x_max) {
        let x = to_x(t);
        put(format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#ddd\"/>\n",
            px(x),
            px(MARGIN_T),
            px(MARGIN_T + plot_h)
        ));
        put(format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            px(x),
            px(MARGIN_T + plot_h + 18.0),
            tick_label(t)
        ));
    }
    for t in log_ticks(y_min, y_max) {
        let y = to_y(t);
        put(format!(
            "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"#ddd\"/>\n",
            px(MARGIN_L),
            px(MARGIN_L + plot_w),
            px(y)
        ));
        put(format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            px(MARGIN_L - 6.0),
            px(y + 4.0),
            tick_label(t)
        ));
    }
    put(format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        px(MARGIN_L),
        px(MARGIN_T),
        px(plot_w),
        px(plot_h)
    ));
    put(format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        px(MARGIN_L + plot_w / 2.0),
        px(HEIGHT - 12.0),
        x_label
    ));
    put(format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">metric</text>\n",
        px(MARGIN_T + plot_h / 2.0),
        px(MARGIN_T + plot_h / 2.0)
    ));

    let clamp_y = |v: f64| v.clamp(y_min, y_max);
    for s in &series {
        // predicted-slope guide anchored at the first point
        if let (Some(slope), Some((x0, y0, ..))) = (s.predicted_slope, s.points.first()) {
            let ya = clamp_y(y0 * (x_min / x0).powf(slope));
            let yb = clamp_y(y0 * (x_max / x0).powf(slope));
            put(format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"3 3\"/>\n",
                px(to_x(x_min)),
                px(to_y(ya)),
                px(to_x(x_max)),
                px(to_y(yb))
            ));
        }
        if s.points.iter().any(|p| p.4.is_some()) {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter_map(|(x, _, _, _, t)| t.map(|t| format!("{},{}", px(to_x(*x)), px(to_y(clamp_y(t))))))
                .collect();
            put(format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-dasharray=\"8 4\" opacity=\"0.7\"/>\n",
                pts.join(" "),
                s.color
            ));
        }
        for (x, _, lo, hi, _) in &s.points {
            put(format!(
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{3}\"/>\n",
                px(to_x(*x)),
                px(to_y(clamp_y(*lo))),
                px(to_y(clamp_y(*hi))),
                s.color
            ));
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|(x, m, ..)| format!("{},{}", px(to_x(*x)), px(to_y(clamp_y(*m)))))
            .collect();
        put(format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            pts.join(" "),
            s.color
        ));
        for (x, m, ..) in &s.points {
            put(format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n",
                px(to_x(*x)),
                px(to_y(clamp_y(*m))),
                s.color
            ));
        }
    }

    let legend_x = MARGIN_L + plot_w + 12.0;
    for (i, s) in series.iter().enumerate() {
        let y = MARGIN_T + 14.0 + 18.0 * i as f64;
        put(format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            px(legend_x),
            px(y - 4.0),
            px(legend_x + 22.0),
            px(y - 4.0),
            s.color
        ));
        put(format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            px(legend_x + 28.0),
            px(y),
            s.name
        ));
    }
    let guide_y = MARGIN_T + 14.0 + 18.0 * series.len() as f64;
    put(format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"3 3\"/>\n",
        px(legend_x),
        px(guide_y - 4.0),
        px(legend_x + 22.0),
        px(guide_y - 4.0)
    ));
    put(format!(
        "<text x=\"{}\" y=\"{}\">predicted slope</text>\n",
        px(legend_x + 28.0),
        px(guide_y)
    ));

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, n: u64, metric: f64) -> CsvRow {
        CsvRow {
            kind: "rate-comparison".into(),
            algorithm: alg.into(),
            n,
            t_steps: 10,
            eta: 0.1,
            gamma: None,
            beta: None,
            batch: None,
            reps: 20,
            metric,
            metric_stderr: metric * 0.05,
            metric_lo: metric * 0.9,
            metric_hi: metric * 1.1,
            theory_bound: Some(metric * 3.0),
            predicted_slope: Some(-0.25),
            status: "ok".into(),
        }
    }

    #[test]
    fn renders_parseable_svg() {
        let rows = vec![
            row("nsgd-m", 64, 0.5),
            row("nsgd-m", 256, 0.35),
            row("nsgd-m", 1024, 0.25),
            row("clipped-sgd", 64, 0.6),
            row("clipped-sgd", 256, 0.45),
            row("clipped-sgd", 1024, 0.33),
        ];
        let svg = render_chart(&rows, "rate comparison").unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 4, "2 series + 2 bound lines");
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains("predicted slope"));
        assert!(svg.contains("nsgd-m") && svg.contains("clipped-sgd"));
        // deterministic
        assert_eq!(svg, render_chart(&rows, "rate comparison").unwrap());
    }

    #[test]
    fn skips_nonpositive_metrics_and_rejects_all_bad() {
        let mut rows = vec![row("nsgd-m", 64, 0.5), row("nsgd-m", 256, 0.4)];
        rows.push(row("nsgd-m", 1024, 0.0));
        let svg = render_chart(&rows, "t").unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);

        let bad = vec![row("x", 64, 0.0)];
        assert!(render_chart(&bad, "t").is_err());
        assert!(render_chart(&[], "t").is_err());
    }

    #[test]
    fn walk_rows_use_steps_on_x() {
        let mut a = row("nsgd-b", 2, 0.01);
        a.kind = "random-walk-demo".into();
        a.t_steps = 100;
        let mut b = a.clone();
        b.t_steps = 400;
        b.metric = 0.04;
        let svg = render_chart(&[a, b], "walk").unwrap();
        assert!(svg.contains(">steps<"));
    }
}
