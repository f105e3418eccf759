//! Residual bookkeeping and report serialization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::C64;

/// What a report is expected to show; negative controls expect failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
    /// Evaluated and reported, no claim either way.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    /// Per-point normalized residual `max|Δ| / (1 + scale)`.
    pub residuals: Vec<f64>,
    pub scales: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, Value>,
}

impl Report {
    /// True when the verdict matches the expectation.
    pub fn as_expected(&self) -> bool {
        match self.expect {
            Expect::Pass => self.pass,
            Expect::Fail => !self.pass,
            Expect::Info => true,
        }
    }

    pub fn expecting(mut self, e: Expect) -> Self {
        self.expect = e;
        self
    }

    pub fn with_meta(mut self, k: &str, v: impl Into<Value>) -> Self {
        self.meta.insert(k.to_string(), v.into());
        self
    }

    /// A report for a check that could not be evaluated.
    pub fn errored(name: &str, tol: f64, err: &Error) -> Report {
        Report {
            name: name.to_string(),
            residuals: Vec::new(),
            scales: Vec::new(),
            max_residual: f64::INFINITY,
            tolerance: tol,
            pass: false,
            expect: Expect::Pass,
            error: Some(err.to_string()),
            meta: BTreeMap::new(),
        }
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mark = if self.as_expected() { "" } else { "  (unexpected)" };
        let err = self.error.as_deref().map(|e| format!("  [{e}]")).unwrap_or_default();
        format!("{verdict} {:<44} max {:.3e}  tol {:.1e}{mark}{err}", self.name, self.max_residual, self.tolerance)
    }
}

/// Accumulates per-point residuals for one named check.
#[derive(Clone, Debug)]
pub struct Check {
    name: String,
    tol: f64,
    residuals: Vec<f64>,
    scales: Vec<f64>,
    meta: BTreeMap<String, Value>,
    error: Option<String>,
}

impl Check {
    pub fn new(name: &str, tol: f64) -> Self {
        Check { name: name.to_string(), tol, residuals: Vec::new(), scales: Vec::new(), meta: BTreeMap::new(), error: None }
    }

    /// Record one point given the largest raw discrepancy and the scale of
    /// the tensors involved.
    pub fn record(&mut self, diff: f64, scale: f64) {
        let r = if diff.is_nan() { f64::INFINITY } else { diff / (1.0 + scale) };
        self.residuals.push(r);
        self.scales.push(scale);
    }

    /// Record `max|a_i − b_i|` normalized by the largest entry on either side.
    pub fn compare(&mut self, a: &[C64], b: &[C64]) {
        let (d, s) = discrepancy(a, b);
        self.record(d, s);
    }

    /// Record an expression that should vanish, normalized by `scale`.
    pub fn vanishes(&mut self, v: &[C64], scale: f64) {
        let d = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
        self.record(d, scale);
    }

    pub fn fail_with(&mut self, err: &Error) {
        if self.error.is_none() {
            self.error = Some(err.to_string());
        }
        self.residuals.push(f64::INFINITY);
        self.scales.push(0.0);
    }

    /// Record the outcome of a fallible per-point evaluation.
    pub fn absorb(&mut self, r: Result<(f64, f64)>) {
        match r {
            Ok((d, s)) => self.record(d, s),
            Err(e) => self.fail_with(&e),
        }
    }

    pub fn meta(&mut self, k: &str, v: impl Into<Value>) {
        self.meta.insert(k.to_string(), v.into());
    }

    pub fn finish(self) -> Report {
        let max = self.residuals.iter().copied().fold(0.0, f64::max);
        let pass = self.error.is_none() && !self.residuals.is_empty() && max <= self.tol;
        Report {
            name: self.name,
            residuals: self.residuals,
            scales: self.scales,
            max_residual: max,
            tolerance: self.tol,
            pass,
            expect: Expect::Pass,
            error: self.error,
            meta: self.meta,
        }
    }
}

/// `(max|a_i − b_i|, max(|a_i|, |b_i|))`.
pub fn discrepancy(a: &[C64], b: &[C64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len(), "compared arrays differ in length");
    a.iter().zip(b).fold((0.0, 0.0), |(d, s), (x, y)| (f64::max(d, (x - y).norm()), s.max(x.norm()).max(y.norm())))
}

pub fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { atol: 1e-10, rtol: 1e-9 }
    }
}

/// Reports plus everything needed to reproduce them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub tool: String,
    pub version: String,
    pub subject: String,
    pub seed: u64,
    pub points: usize,
    pub tolerances: Tolerances,
    pub branch_convention: String,
    pub params: BTreeMap<String, f64>,
    pub reports: Vec<Report>,
}

pub const BRANCH_CONVENTION: &str = "principal branches: sqrt and ln cut along the negative real axis, arg in (-pi, pi]; -0 imaginary parts read as +0";

impl Bundle {
    pub fn new(subject: &str, seed: u64, points: usize, params: BTreeMap<String, f64>) -> Self {
        Bundle {
            tool: "fmanifold".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subject: subject.into(),
            seed,
            points,
            tolerances: Tolerances::default(),
            branch_convention: BRANCH_CONVENTION.into(),
            params,
            reports: Vec::new(),
        }
    }

    pub fn all_as_expected(&self) -> bool {
        self.reports.iter().all(Report::as_expected)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("# {}\n\nseed {}, {} points, {} {}\n\n", self.subject, self.seed, self.points, self.tool, self.version);
        s.push_str("| check | verdict | expected | max residual | tolerance |\n|---|---|---|---|---|\n");
        for r in &self.reports {
            let v = if r.pass { "pass" } else { "fail" };
            let e = match r.expect {
                Expect::Pass => "pass",
                Expect::Fail => "fail",
                Expect::Info => "info",
            };
            s.push_str(&format!("| {} | {v} | {e} | {:.3e} | {:.1e} |\n", r.name, r.max_residual, r.tolerance));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_tracks_tolerance() {
        let mut c = Check::new("t", 1e-8);
        c.record(1e-9, 0.0);
        c.record(2e-8, 1.0);
        let r = c.finish();
        assert!(r.pass);
        assert_eq!(r.max_residual, 1e-8);
        let mut c = Check::new("t", 1e-8);
        c.record(1e-6, 0.0);
        assert!(!c.finish().pass);
    }

    #[test]
    fn empty_check_fails() {
        assert!(!Check::new("t", 1.0).finish().pass);
    }

    #[test]
    fn errors_fail_and_are_kept() {
        let mut c = Check::new("t", 1.0);
        c.absorb(Err(Error::AllEntriesZero));
        let r = c.finish();
        assert!(!r.pass && r.error.is_some());
        assert!(r.clone().expecting(Expect::Fail).as_expected());
    }
}
