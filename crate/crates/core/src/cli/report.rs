use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::checks::{CheckReport, Verdict};
use crate::diffgeo::Scheme;
use crate::Result;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_WARN: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub seed: u64,
    pub samples: usize,
    pub rays: usize,
    pub scheme: Scheme,
    pub tolerances: std::collections::BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub phi: String,
    pub n: usize,
    /// Sign convention for reported factors.
    pub convention: String,
    pub notes: Vec<String>,
    pub environment: Environment,
    pub checks: Vec<CheckReport>,
    pub overall_pass: bool,
    pub warnings: Vec<String>,
    pub generated_at_unix: u64,
}

impl VerificationReport {
    pub fn overall(&self) -> Verdict {
        if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if !self.warnings.is_empty() || self.checks.iter().any(|c| c.verdict == Verdict::Warn) {
            Verdict::Warn
        } else {
            Verdict::Pass
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.overall() {
            Verdict::Pass => EXIT_PASS,
            Verdict::Warn => EXIT_WARN,
            Verdict::Fail => EXIT_FAIL,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// One line per check, then the overall verdict.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario {} ({}, n = {})", self.scenario, self.phi, self.n);
        for c in &self.checks {
            let mark = match c.verdict {
                Verdict::Pass => "PASS",
                Verdict::Warn => "WARN",
                Verdict::Fail => "FAIL",
            };
            let _ = write!(
                s,
                "  [{mark}] {:<18} max {:.3e}  tol {:.1e}  ({} samples)",
                c.tag, c.residual.max, c.tolerance, c.residual.count
            );
            if let Some(st) = c.details.get("status").and_then(|v| v.as_str()) {
                let _ = write!(s, "  status: {st}");
            }
            if let Some(e) = &c.error {
                let _ = write!(s, "  error: {e}");
            }
            s.push('\n');
            for w in &c.warnings {
                let _ = writeln!(s, "         warning: {w}");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
        let _ = writeln!(s, "overall: {:?}", self.overall());
        s
    }
}
