//! Convergence-study bookkeeping: rows of (order, steps, k, error, rate)
//! plus free-form metadata, with deterministic CSV and JSON writers.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Errors below this are treated as round-off dominated; rate entries are
/// still reported but flagged in the metadata.
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

/// One convergence entry. `rate` is `log2(error_prev / error)` against the
/// previous row of the same order when the step size exactly halves.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub order: usize,
    pub steps: usize,
    pub k: f64,
    pub error: f64,
    pub rate: Option<f64>,
}

/// A table of convergence rows with metadata, written deterministically:
/// metadata as `# key: value` comment lines in key order, then a header
/// line, then rows in insertion order.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ConvergenceReport {
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    /// Appends a series of `(steps, k, error)` for one order, computing the
    /// rate wherever the step size halves between consecutive entries.
    pub fn push_series(&mut self, order: usize, series: &[(usize, f64, f64)]) {
        let mut prev: Option<(f64, f64)> = None;
        for &(steps, k, error) in series {
            let rate = prev.and_then(|(pk, pe)| {
                if (pk / k - 2.0).abs() <= 1e-12 && error > 0.0 && pe > 0.0 {
                    Some((pe / error).log2())
                } else {
                    None
                }
            });
            self.rows.push(ConvergenceRow {
                order,
                steps,
                k,
                error,
                rate,
            });
            prev = Some((k, error));
        }
        if series.iter().any(|&(_, _, e)| e < ROUNDOFF_FLOOR) {
            self.set_meta(
                "roundoff_floor",
                format!("{ROUNDOFF_FLOOR:e} (errors below are round-off dominated)"),
            );
        }
    }

    /// Rows belonging to one order, in insertion order.
    pub fn series(&self, order: usize) -> Vec<&ConvergenceRow> {
        self.rows.iter().filter(|r| r.order == order).collect()
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        for (key, value) in &self.metadata {
            writeln!(out, "# {key}: {value}")?;
        }
        writeln!(out, "order,steps,k,error,rate")?;
        for row in &self.rows {
            let rate = row.rate.map(|r| format!("{r:.2}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{:e},{:e},{}",
                row.order, row.steps, row.k, row.error, rate
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is ascii"))
    }

    pub fn write_json(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_are_computed_for_halved_steps() {
        let mut report = ConvergenceReport::new();
        report.push_series(2, &[(4, 0.25, 1e-2), (8, 0.125, 2.5e-3), (12, 0.125 / 1.5, 1e-3)]);
        assert_eq!(report.rows[0].rate, None);
        let rate = report.rows[1].rate.expect("halved step has a rate");
        assert!((rate - 2.0).abs() < 1e-12);
        assert_eq!(report.rows[2].rate, None, "non-halved step has no rate");
    }

    #[test]
    fn csv_output_is_deterministic_and_ordered() {
        let mut report = ConvergenceReport::new();
        report.set_meta("zeta", 1);
        report.set_meta("alpha", "two");
        report.push_series(1, &[(2, 0.5, 0.25), (4, 0.25, 0.125)]);
        let a = report.to_csv_string().expect("csv");
        let b = report.to_csv_string().expect("csv");
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], "# alpha: two");
        assert_eq!(lines[1], "# zeta: 1");
        assert_eq!(lines[2], "order,steps,k,error,rate");
        assert_eq!(lines[3], "1,2,5e-1,2.5e-1,");
        assert_eq!(lines[4], "1,4,2.5e-1,1.25e-1,1.00");
    }

    #[test]
    fn tiny_errors_set_the_roundoff_flag() {
        let mut report = ConvergenceReport::new();
        report.push_series(5, &[(2, 0.5, 1e-10)]);
        assert!(report.metadata.contains_key("roundoff_floor"));
    }

    #[test]
    fn json_round_trips_the_rows() {
        let mut report = ConvergenceReport::new();
        report.set_meta("n", 64);
        report.push_series(3, &[(2, 0.5, 1e-3), (4, 0.25, 1.25e-4)]);
        let mut buf = Vec::new();
        report.write_json(&mut buf).expect("json");
        let value: serde_json::Value = serde_json::from_slice(&buf).expect("parse");
        assert_eq!(value["metadata"]["n"], "64");
        assert_eq!(value["rows"][1]["rate"], 3.0);
        assert_eq!(value["rows"][0]["rate"], serde_json::Value::Null);
    }
}
