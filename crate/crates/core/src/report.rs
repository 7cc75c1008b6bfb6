//! Command reports in text and JSON form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::finding::{sort_findings, Finding, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub findings: Vec<Finding>,
    pub metrics: BTreeMap<String, Value>,
    pub verdicts: BTreeMap<String, Verdict>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            findings: Vec::new(),
            metrics: BTreeMap::new(),
            verdicts: BTreeMap::new(),
        }
    }

    pub fn extend_findings(&mut self, findings: impl IntoIterator<Item = Finding>) {
        self.findings.extend(findings);
        sort_findings(&mut self.findings);
    }

    pub fn metric(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("metric values serialize");
        self.metrics.insert(key.into(), v);
    }

    pub fn verdict(&mut self, key: impl Into<String>, ok: bool) {
        self.verdicts.insert(key.into(), Verdict::of(ok));
    }

    pub fn count(&self, severity: Severity) -> usize {
        self.findings.iter().filter(|f| f.severity == severity).count()
    }

    pub fn has_errors(&self) -> bool {
        self.count(Severity::Error) > 0
    }

    /// 0 when no finding has error severity, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.has_errors())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}: {} error(s), {} warning(s), {} note(s)",
            self.command,
            self.count(Severity::Error),
            self.count(Severity::Warn),
            self.count(Severity::Info)
        );
        for f in &self.findings {
            let at: Vec<String> = f.promises.iter().map(|i| format!("#{i}")).collect();
            let _ = writeln!(out, "  {:<5} {} [{}] {}", f.severity, f.code, at.join(","), f.message);
        }
        if !self.metrics.is_empty() {
            out.push_str("metrics:\n");
            for (k, v) in &self.metrics {
                let _ = writeln!(out, "  {k} = {}", render(v));
            }
        }
        if !self.verdicts.is_empty() {
            out.push_str("verdicts:\n");
            for (k, v) in &self.verdicts {
                let word = match v {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "FAIL",
                };
                let _ = writeln!(out, "  {k}: {word}");
            }
        }
        out
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
