//! Result tables and the JSON report wrapper.
//!
//! The CSV is the machine-readable artifact: no timestamps, floats printed
//! in shortest round-trip form, so rerunning a config yields byte-identical
//! bytes. The JSON report wraps the same results with config echo, config
//! hash, and environment; its `metadata.timestamp_unix` field is the only
//! place any timestamp appears.

use std::fmt::Write as _;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "kind,algorithm,n,t_steps,eta,gamma,beta,batch,reps,metric,metric_stderr,metric_lo,metric_hi,theory_bound,predicted_slope,status";

pub const SCHEMA_VERSION: u64 = 1;

/// One row of the output table; one measured cell of a sweep, one lemma
/// check, or one walk checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub kind: String,
    pub algorithm: String,
    pub n: u64,
    pub t_steps: u64,
    pub eta: f64,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub batch: Option<u64>,
    pub reps: u64,
    pub metric: f64,
    pub metric_stderr: f64,
    pub metric_lo: f64,
    pub metric_hi: f64,
    pub theory_bound: Option<f64>,
    pub predicted_slope: Option<f64>,
    pub status: String,
}

/// Shortest representation that parses back to the same f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn field_ok(s: &str) -> bool {
    !s.contains(',') && !s.contains('\n') && !s.contains('"')
}

/// Renders rows to CSV text. Fields never need quoting: names are
/// kebab-case tokens and numbers carry no separators.
pub fn rows_to_csv(rows: &[CsvRow]) -> Result<String> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        if !field_ok(&row.kind) || !field_ok(&row.algorithm) || !field_ok(&row.status) {
            return Err(Error::Report(format!(
                "text fields must not need CSV quoting: {:?}/{:?}/{:?}",
                row.kind, row.algorithm, row.status
            )));
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.kind,
            row.algorithm,
            row.n,
            row.t_steps,
            fmt_f64(row.eta),
            fmt_opt(row.gamma),
            fmt_opt(row.beta),
            row.batch.map(|b| b.to_string()).unwrap_or_default(),
            row.reps,
            fmt_f64(row.metric),
            fmt_f64(row.metric_stderr),
            fmt_f64(row.metric_lo),
            fmt_f64(row.metric_hi),
            fmt_opt(row.theory_bound),
            fmt_opt(row.predicted_slope),
            row.status,
        )
        .expect("writing to String cannot fail");
    }
    Ok(out)
}

/// Parses a table produced by [`rows_to_csv`].
pub fn rows_from_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Report("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Report(format!("unexpected CSV header: {header}")));
    }
    let parse_f = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Report(format!("bad {what} field: {s:?}")))
    };
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 16 {
            return Err(Error::Report(format!(
                "line {}: expected 16 fields, got {}",
                lineno + 2,
                f.len()
            )));
        }
        let opt_f = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() { Ok(None) } else { parse_f(s, what).map(Some) }
        };
        rows.push(CsvRow {
            kind: f[0].to_string(),
            algorithm: f[1].to_string(),
            n: f[2].parse().map_err(|_| Error::Report(format!("bad n field: {:?}", f[2])))?,
            t_steps: f[3]
                .parse()
                .map_err(|_| Error::Report(format!("bad t_steps field: {:?}", f[3])))?,
            eta: parse_f(f[4], "eta")?,
            gamma: opt_f(f[5], "gamma")?,
            beta: opt_f(f[6], "beta")?,
            batch: if f[7].is_empty() {
                None
            } else {
                Some(f[7].parse().map_err(|_| Error::Report(format!("bad batch field: {:?}", f[7])))?)
            },
            reps: f[8].parse().map_err(|_| Error::Report(format!("bad reps field: {:?}", f[8])))?,
            metric: parse_f(f[9], "metric")?,
            metric_stderr: parse_f(f[10], "metric_stderr")?,
            metric_lo: parse_f(f[11], "metric_lo")?,
            metric_hi: parse_f(f[12], "metric_hi")?,
            theory_bound: opt_f(f[13], "theory_bound")?,
            predicted_slope: opt_f(f[14], "predicted_slope")?,
            status: f[15].to_string(),
        });
    }
    Ok(rows)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        write!(hex, "{b:02x}").expect("writing to String cannot fail");
    }
    hex
}

/// Assembles the full report document around computed results.
pub fn build_report(
    config_echo: Value,
    config_hash: &str,
    results: Value,
    caveats: Vec<String>,
    timestamp_unix: u64,
) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "config": config_echo,
        "config_hash": config_hash,
        "environment": {
            "package": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
        },
        "metadata": {
            "timestamp_unix": timestamp_unix,
        },
        "results": results,
        "caveats": caveats,
    })
}

/// Checks a report document against the published shape: schema version,
/// required top-level keys, and the rule that timestamps live only under
/// `metadata`.
pub fn validate_report(report: &Value) -> Result<()> {
    let obj = report
        .as_object()
        .ok_or_else(|| Error::Report("report must be a JSON object".into()))?;
    for key in ["schema_version", "config", "config_hash", "environment", "metadata", "results", "caveats"] {
        if !obj.contains_key(key) {
            return Err(Error::Report(format!("report is missing key {key:?}")));
        }
    }
    if obj["schema_version"].as_u64() != Some(SCHEMA_VERSION) {
        return Err(Error::Report(format!(
            "unsupported schema_version {}",
            obj["schema_version"]
        )));
    }
    let hash = obj["config_hash"]
        .as_str()
        .ok_or_else(|| Error::Report("config_hash must be a string".into()))?;
    if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(Error::Report("config_hash must be 64 hex characters".into()));
    }
    if !obj["metadata"]
        .get("timestamp_unix")
        .map(Value::is_u64)
        .unwrap_or(false)
    {
        return Err(Error::Report("metadata.timestamp_unix must be an unsigned integer".into()));
    }
    if !obj["caveats"].is_array() {
        return Err(Error::Report("caveats must be an array".into()));
    }
    fn no_stray_timestamps(value: &Value, path: &str, inside_metadata: bool) -> Result<()> {
        match value {
            Value::Object(map) => {
                for (k, v) in map {
                    let sub = format!("{path}.{k}");
                    if !inside_metadata && k.contains("timestamp") {
                        return Err(Error::Report(format!(
                            "timestamp outside metadata at {sub}"
                        )));
                    }
                    no_stray_timestamps(v, &sub, inside_metadata || k == "metadata")?;
                }
            }
            Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    no_stray_timestamps(v, &format!("{path}[{i}]"), inside_metadata)?;
                }
            }
            _ => {}
        }
        Ok(())
    }
    no_stray_timestamps(report, "report", false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> CsvRow {
        CsvRow {
            kind: "stability-sweep".into(),
            algorithm: "nsgd-m".into(),
            n: 256,
            t_steps: 32,
            eta: 0.0625,
            gamma: None,
            beta: Some(0.875),
            batch: None,
            reps: 50,
            metric: 0.0123,
            metric_stderr: 0.0004,
            metric_lo: 0.0115,
            metric_hi: 0.0131,
            theory_bound: Some(0.5),
            predicted_slope: Some(-0.3),
            status: "ok".into(),
        }
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![
            sample_row(),
            CsvRow {
                algorithm: "clipped-sgd".into(),
                gamma: Some(1.5e-3),
                beta: None,
                batch: Some(4),
                theory_bound: None,
                predicted_slope: None,
                status: "failed:2".into(),
                ..sample_row()
            },
        ];
        let text = rows_to_csv(&rows).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let back = rows_from_csv(&text).unwrap();
        assert_eq!(rows, back);
        // identical on re-render
        assert_eq!(text, rows_to_csv(&back).unwrap());
    }

    #[test]
    fn csv_floats_round_trip_exactly() {
        let mut row = sample_row();
        row.metric = 0.1 + 0.2; // 0.30000000000000004
        row.eta = 1e-300;
        let back = &rows_from_csv(&rows_to_csv(&[row.clone()]).unwrap()).unwrap()[0];
        assert_eq!(row.metric.to_bits(), back.metric.to_bits());
        assert_eq!(row.eta.to_bits(), back.eta.to_bits());
    }

    #[test]
    fn csv_rejects_quotable_fields() {
        let mut row = sample_row();
        row.status = "bad,field".into();
        assert!(rows_to_csv(&[row]).is_err());
    }

    #[test]
    fn report_validation() {
        let hash = sha256_hex(b"config bytes");
        let report = build_report(
            json!({"kind": "lemma-suite", "seed": 1}),
            &hash,
            json!({"checks": []}),
            vec!["none".into()],
            1_700_000_000,
        );
        validate_report(&report).unwrap();

        let mut missing = report.clone();
        missing.as_object_mut().unwrap().remove("results");
        assert!(validate_report(&missing).is_err());

        let mut stray = report.clone();
        stray["results"] = json!({"timestamp": 5});
        assert!(validate_report(&stray).is_err());

        let mut bad_hash = report;
        bad_hash["config_hash"] = json!("zz");
        assert!(validate_report(&bad_hash).is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
