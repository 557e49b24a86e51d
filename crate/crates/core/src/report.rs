//! Validation reports. Validators never fail with an error; every violated
//! identity becomes a [`Violation`] carrying basis indices and both sides of
//! the equation.

use std::fmt;

use serde::Serialize;

use crate::exactlin::{fmt_vec, RationalMatrix, Q};

/// Violations kept per check; further ones are only counted.
const MAX_WITNESSES: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub check: String,
    pub indices: Vec<usize>,
    pub lhs: String,
    pub rhs: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{} at ({}): {} != {}", self.check, idx.join(","), self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub failures: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub subject: String,
    pub checks: Vec<CheckSummary>,
    pub violations: Vec<Violation>,
    /// Informational facts that do not affect validity.
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn new(subject: impl Into<String>) -> Self {
        Self { subject: subject.into(), ..Self::default() }
    }

    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    /// Registers a check so that it shows up in the summary even when it
    /// passes.
    pub fn check(&mut self, name: &str) {
        if !self.checks.iter().any(|c| c.name == name) {
            self.checks.push(CheckSummary { name: name.to_string(), failures: 0 });
        }
    }

    pub fn fail(&mut self, name: &str, indices: &[usize], lhs: String, rhs: String) {
        self.check(name);
        let entry = self.checks.iter_mut().find(|c| c.name == name).expect("registered");
        entry.failures += 1;
        if entry.failures <= MAX_WITNESSES {
            self.violations.push(Violation {
                check: name.to_string(),
                indices: indices.to_vec(),
                lhs,
                rhs,
            });
        }
    }

    pub fn expect_vec(&mut self, name: &str, indices: &[usize], lhs: &[Q], rhs: &[Q]) {
        self.check(name);
        if lhs != rhs {
            self.fail(name, indices, fmt_vec(lhs), fmt_vec(rhs));
        }
    }

    pub fn expect_matrix(
        &mut self,
        name: &str,
        indices: &[usize],
        lhs: &RationalMatrix,
        rhs: &RationalMatrix,
    ) {
        self.check(name);
        if lhs != rhs {
            self.fail(name, indices, format!("{lhs:?}"), format!("{rhs:?}"));
        }
    }

    pub fn expect(&mut self, name: &str, indices: &[usize], ok: bool, lhs: String, rhs: String) {
        self.check(name);
        if !ok {
            self.fail(name, indices, lhs, rhs);
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn failures(&self, name: &str) -> usize {
        self.checks.iter().find(|c| c.name == name).map_or(0, |c| c.failures)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| c.failures > 0).map(|c| c.name.as_str()).collect()
    }

    /// Absorbs another report, prefixing its check names.
    pub fn merge(&mut self, prefix: &str, other: ValidationReport) {
        for c in other.checks {
            let name = format!("{prefix}.{}", c.name);
            self.check(&name);
            if let Some(e) = self.checks.iter_mut().find(|x| x.name == name) {
                e.failures += c.failures;
            }
        }
        for mut v in other.violations {
            v.check = format!("{prefix}.{}", v.check);
            self.violations.push(v);
        }
        for n in other.notes {
            self.notes.push(format!("{prefix}: {n}"));
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.is_valid() { "valid" } else { "INVALID" };
        writeln!(f, "{}: {status}", self.subject)?;
        for c in &self.checks {
            if c.failures == 0 {
                writeln!(f, "  ok   {}", c.name)?;
            } else {
                writeln!(f, "  FAIL {} ({} violations)", c.name, c.failures)?;
            }
        }
        for v in &self.violations {
            writeln!(f, "  witness: {v}")?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}
