use std::collections::BTreeMap;

use serde::Serialize;

/// Outcome of checking one inequality over many sampled points.
///
/// `worst_slack` is the smallest observed `(rhs - lhs) / |rhs|` (or the plain
/// difference when `rhs == 0`); `worst_point` holds the sample attaining it.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct InequalityReport {
    pub inequality_id: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub worst_point: BTreeMap<String, f64>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// One evaluated instance of `lhs <= rhs`.
#[derive(Clone, Debug)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    /// Numerical uncertainty of `lhs` (quadrature error plus roundoff).
    pub tolerance: f64,
    pub point: Vec<(&'static str, f64)>,
}

impl Check {
    pub fn slack(&self) -> f64 {
        if self.rhs == 0.0 {
            self.rhs - self.lhs
        } else {
            (self.rhs - self.lhs) / self.rhs.abs()
        }
    }

    pub fn violated(&self) -> bool {
        !(self.lhs - self.tolerance <= self.rhs)
    }
}

/// Folds checks in order, so the result is independent of how they were produced.
pub fn summarize(id: &str, checks: impl IntoIterator<Item = Check>) -> InequalityReport {
    let mut samples = 0;
    let mut violations = 0;
    let mut worst: Option<Check> = None;
    for c in checks {
        samples += 1;
        if c.violated() {
            violations += 1;
        }
        let replace = match &worst {
            None => true,
            Some(w) => c.slack() < w.slack() || c.slack().is_nan(),
        };
        if replace {
            worst = Some(c);
        }
    }
    let (worst_slack, worst_point) = match worst {
        Some(w) => (
            w.slack(),
            w.point.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        ),
        None => (f64::INFINITY, BTreeMap::new()),
    };
    InequalityReport {
        inequality_id: id.to_string(),
        samples,
        violations,
        worst_slack,
        worst_point,
    }
}
