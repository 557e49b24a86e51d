//! Command results and their human and JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write;

use dlie_core::exactlin::{fmt_vec, RationalMatrix};
use dlie_core::report::ValidationReport;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub command: String,
    pub subject: String,
    /// Whether the command's check or decision came out positive.
    pub passed: bool,
    pub facts: BTreeMap<String, String>,
    pub reports: Vec<ValidationReport>,
}

impl Outcome {
    pub fn new(command: &str, subject: impl Into<String>) -> Self {
        Self { command: command.into(), subject: subject.into(), passed: true, facts: BTreeMap::new(), reports: Vec::new() }
    }

    pub fn fact(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.facts.insert(key.to_string(), value.to_string());
        self
    }

    /// Adds a report; an invalid report fails the outcome.
    pub fn report(&mut self, r: ValidationReport) -> &mut Self {
        if !r.is_valid() {
            self.passed = false;
        }
        self.reports.push(r);
        self
    }

    /// Whether every attached report is valid, regardless of the decision.
    pub fn reports_valid(&self) -> bool {
        self.reports.iter().all(|r| r.is_valid())
    }
}

pub fn fmt_matrix(m: &RationalMatrix) -> String {
    let rows: Vec<String> = (0..m.rows()).map(|r| fmt_vec(m.row(r))).collect();
    format!("[{}]", rows.join(", "))
}

pub fn render_human(outcomes: &[Outcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let status = if o.passed { "pass" } else { "FAIL" };
        let _ = writeln!(out, "== {} {} [{status}]", o.command, o.subject);
        for (k, v) in &o.facts {
            let _ = writeln!(out, "  {k}: {v}");
        }
        for r in &o.reports {
            for line in r.to_string().lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
    }
    out
}

pub fn render_json(outcomes: &[Outcome]) -> String {
    let mut s = serde_json::to_string_pretty(outcomes).expect("outcomes serialize");
    s.push('\n');
    s
}
