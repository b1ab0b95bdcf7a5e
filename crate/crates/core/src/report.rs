//! Machine-readable check reports shared by every checker.

use serde::{Deserialize, Serialize};

/// Outcome of one named check: worst deviation seen, where it occurred, and
/// the first cell that broke tolerance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tol: f64,
    pub cells: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub worst: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_violation: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, tol: f64) -> Self {
        CheckReport {
            name: name.into(),
            passed: true,
            max_deviation: 0.0,
            tol,
            cells: 0,
            worst: None,
            first_violation: None,
            notes: vec![],
        }
    }

    /// Record one tested cell. The location closure only runs when needed.
    pub fn record(&mut self, deviation: f64, location: impl FnOnce() -> String) {
        self.cells += 1;
        let dev = if deviation.is_nan() { f64::INFINITY } else { deviation };
        let violates = dev > self.tol;
        let worse = dev > self.max_deviation || (self.worst.is_none() && violates);
        if violates || worse {
            let loc = location();
            if violates && self.first_violation.is_none() {
                self.first_violation = Some(loc.clone());
            }
            if worse {
                self.max_deviation = dev;
                self.worst = Some(loc);
            }
        }
        if violates {
            self.passed = false;
        }
    }

    /// Record a boolean condition as deviation 0 or infinity.
    pub fn require(&mut self, ok: bool, location: impl FnOnce() -> String) {
        self.record(if ok { 0.0 } else { f64::INFINITY }, location);
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn add_note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Fold another report into this one, prefixing its locations.
    pub fn absorb(&mut self, other: &CheckReport) {
        self.cells += other.cells;
        if !other.passed {
            self.passed = false;
            if self.first_violation.is_none() {
                self.first_violation = other.first_violation.as_ref().map(|l| format!("{}: {}", other.name, l));
            }
        }
        if other.max_deviation > self.max_deviation || (self.worst.is_none() && other.worst.is_some()) {
            self.max_deviation = self.max_deviation.max(other.max_deviation);
            self.worst = other.worst.as_ref().map(|l| format!("{}: {}", other.name, l));
        }
        for n in &other.notes {
            self.notes.push(format!("{}: {}", other.name, n));
        }
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "[{}] {} max_dev={:.3e} cells={}",
            if self.passed { "pass" } else { "FAIL" },
            self.name,
            self.max_deviation,
            self.cells
        );
        if !self.passed {
            if let Some(l) = &self.first_violation {
                s.push_str(&format!(" first_violation={l}"));
            }
        } else if let Some(l) = &self.worst {
            if self.max_deviation > 0.0 {
                s.push_str(&format!(" worst={l}"));
            }
        }
        for n in &self.notes {
            s.push_str(&format!(" ({n})"));
        }
        s
    }
}

/// Combine several reports into one verdict.
pub fn all_passed(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_first_and_worst() {
        let mut r = CheckReport::new("x", 1e-3);
        r.record(1e-4, || "a".into());
        r.record(0.5, || "b".into());
        r.record(0.9, || "c".into());
        assert!(!r.passed);
        assert_eq!(r.first_violation.as_deref(), Some("b"));
        assert_eq!(r.worst.as_deref(), Some("c"));
        assert_eq!(r.cells, 3);
    }

    #[test]
    fn nan_counts_as_failure() {
        let mut r = CheckReport::new("x", 1.0);
        r.record(f64::NAN, || "n".into());
        assert!(!r.passed);
    }
}
