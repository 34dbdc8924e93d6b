//! Machine-readable verification reports.

use serde::{Deserialize, Serialize};

use crate::sl2::CheckRecord;

/// Fixed facts about the run. Nothing time- or host-dependent goes here so
/// that reports are byte-stable for a fixed input and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub problem: String,
    pub seed: u64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: bool,
    pub total: usize,
    pub failed: Vec<String>,
}

/// A named piece of output that is not a check: an evaluator description,
/// a derived expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub environment: Environment,
    pub summary: Summary,
    pub records: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<Artifact>,
}

impl VerificationReport {
    pub fn new(environment: Environment) -> VerificationReport {
        VerificationReport {
            environment,
            summary: Summary {
                pass: true,
                total: 0,
                failed: Vec::new(),
            },
            records: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn push(&mut self, r: CheckRecord) {
        if !r.pass {
            self.summary.pass = false;
            self.summary.failed.push(r.id.clone());
        }
        self.summary.total += 1;
        self.records.push(r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = CheckRecord>) {
        for r in rs {
            self.push(r);
        }
    }

    pub fn artifact(&mut self, name: impl Into<String>, text: impl Into<String>) {
        self.artifacts.push(Artifact {
            name: name.into(),
            text: text.into(),
        });
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn record(&self, id: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<VerificationReport, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// One line per record and a verdict line.
    pub fn table(&self) -> String {
        let w = self.records.iter().map(|r| r.id.len()).max().unwrap_or(0);
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!(
                "{:<w$}  {:>10.3e}  {:>7.0e}  {:>4}  {}\n",
                r.id,
                r.residual,
                r.tol,
                r.points,
                if r.pass { "ok" } else { "FAIL" },
            ));
        }
        let e = &self.environment;
        out.push_str(&format!(
            "{} {}: {} of {} checks passed (seed {:#x})\n",
            e.command,
            e.problem,
            self.summary.total - self.summary.failed.len(),
            self.summary.total,
            e.seed
        ));
        out
    }
}
