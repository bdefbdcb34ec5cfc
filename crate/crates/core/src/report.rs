//! Machine-readable condition reports.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Outcome of a single check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    /// Passes, but only because the input is degenerate (zero measure, `G ≡ 0`).
    PassWithWarning,
    Fail,
    /// The numerical evidence does not settle the question.
    Inconclusive,
    /// The hypothesis set required by a theorem is not certified.
    Unmet,
    /// Fitted stability index sits at the Gaussian boundary `α = 2`.
    GaussianBoundary,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassWithWarning)
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Pass => "PASS",
            Verdict::PassWithWarning => "PASS_WITH_WARNING",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Unmet => "UNMET",
            Verdict::GaussianBoundary => "GAUSSIAN_BOUNDARY",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub verdict: Verdict,
    /// Named numeric evidence; non-finite values serialize as `null`.
    pub evidence: BTreeMap<String, f64>,
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckItem {
    pub fn new(name: impl Into<String>, verdict: Verdict) -> Self {
        Self {
            name: name.into(),
            verdict,
            evidence: BTreeMap::new(),
            tolerance: None,
            detail: String::new(),
        }
    }

    pub fn evidence(mut self, key: impl Into<String>, value: f64) -> Self {
        self.evidence.insert(key.into(), value);
        self
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// Ordered list of checks with an overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub title: String,
    pub items: Vec<CheckItem>,
    pub overall: bool,
}

impl CheckReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            items: Vec::new(),
            overall: true,
        }
    }

    pub fn push(&mut self, item: CheckItem) {
        self.overall &= item.verdict.is_pass();
        self.items.push(item);
    }

    /// Appends all items of `other`, prefixing their names.
    pub fn merge(&mut self, prefix: &str, other: CheckReport) {
        for mut item in other.items {
            if !prefix.is_empty() {
                item.name = format!("{prefix}.{}", item.name);
            }
            self.push(item);
        }
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn passed(&self) -> bool {
        self.overall
    }

    /// Names of items that did not pass.
    pub fn failures(&self) -> Vec<String> {
        self.items
            .iter()
            .filter(|i| !i.verdict.is_pass())
            .map(|i| i.name.clone())
            .collect()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.title, if self.overall { "PASS" } else { "FAIL" })?;
        for item in &self.items {
            write!(f, "  [{}] {}", item.verdict, item.name)?;
            for (k, v) in &item.evidence {
                write!(f, " {k}={v:.6e}")?;
            }
            if !item.detail.is_empty() {
                write!(f, " ({})", item.detail)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
