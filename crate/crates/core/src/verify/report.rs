use std::fmt::Write as _;

use serde::Serialize;

use super::plan::Conditioning;
use crate::sim::Statistic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The data cannot decide: too few replicates or survivors, a kernel
    /// accuracy warning, or a signal below its noise floor.
    Indeterminate,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub note: String,
}

/// Cross-replicate statistic of one quantity at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub quantity: String,
    pub t: f64,
    pub conditioning: Conditioning,
    pub mean: f64,
    pub variance: f64,
    pub standard_error: f64,
    pub count: usize,
    /// `NaN` when there is no target.
    pub target: f64,
    pub verdict: Option<Verdict>,
}

impl ReportRow {
    pub fn new(quantity: impl Into<String>, t: f64, conditioning: Conditioning, stat: Statistic, target: f64) -> Self {
        Self {
            quantity: quantity.into(),
            t,
            conditioning,
            mean: stat.mean,
            variance: stat.variance,
            standard_error: stat.standard_error,
            count: stat.count,
            target,
            verdict: None,
        }
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = Some(verdict);
        self
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One term of the predicted expansion of `t^{d/α} W̃_t(f) / Ŵ_∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermRow {
    pub t: f64,
    pub index: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
    pub checks: Vec<Check>,
    pub decomposition: Vec<TermRow>,
    pub notes: Vec<String>,
}

impl EstimatorReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            rows: Vec::new(),
            checks: Vec::new(),
            decomposition: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// No check failed (indeterminate checks do not count as failures).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub(crate) fn push_check(
        &mut self,
        name: impl Into<String>,
        verdict: Verdict,
        measured: f64,
        target: f64,
        tolerance: f64,
        note: impl Into<String>,
    ) {
        self.checks.push(Check {
            name: name.into(),
            verdict,
            measured,
            target,
            tolerance,
            note: note.into(),
        });
    }

    /// Full report as pretty-printed JSON, with the configuration echo.
    pub fn to_json(&self, header: &[(String, String)]) -> String {
        #[derive(Serialize)]
        struct Document<'a> {
            config: serde_json::Map<String, serde_json::Value>,
            report: &'a EstimatorReport,
        }
        let config = header
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        serde_json::to_string_pretty(&Document { config, report: self }).expect("report serializes")
    }

    /// Per-row CSV under `#` header lines.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("quantity,t,conditioning,estimate,target,standard_error,count,verdict\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(&row.quantity),
                row.t,
                row.conditioning,
                row.mean,
                row.target,
                row.standard_error,
                row.count,
                row.verdict.map_or("", Verdict::as_str)
            );
        }
        out
    }

    /// One `name: verdict (measured …, target …, tolerance …)` line per check.
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let mut line = format!(
                    "{} {}: {} (measured {:.6e}, target {:.6e}, tolerance {:.6e})",
                    self.experiment, c.name, c.verdict, c.measured, c.target, c.tolerance
                );
                if !c.note.is_empty() {
                    line.push_str(&format!(" {}", c.note));
                }
                line
            })
            .collect()
    }
}
