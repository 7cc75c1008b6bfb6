use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warn,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Severity::Info => "info",
            Severity::Warn => "warn",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FindingCode {
    // promise graph structure
    AutonomyViolation,
    SelfPromise,
    ImposedAcceptance,
    EmptyBody,
    MalformedBody,
    UnknownAgent,
    WordOutsideVocabulary,
    InertBinding,
    DanglingAcceptance,
    // conditionals
    NoConditionSource,
    MissingConditionAcceptance,
    MissingConditionSignal,
    // impositions
    AbsorbedImposition,
    UnilateralImposition,
    // composition
    OneShotPromise,
    ConditionOnOneShot,
    BootstrapDeadlock,
    BootstrappedCycle,
    BootstrappedExchange,
    Fragile,
    MissingPromise,
    ExtraPromise,
    IncompleteGraph,
    // language
    TranslationClass,
    // convergence
    NonIdempotentOperator,
    NonConvergentOperator,
    // simulation
    MissedEvents,
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One diagnostic emitted by an analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub severity: Severity,
    /// Promise indices involved, ascending.
    pub promises: Vec<usize>,
    pub message: String,
}

impl Finding {
    pub fn new(
        code: FindingCode,
        severity: Severity,
        promises: impl IntoIterator<Item = usize>,
        message: impl Into<String>,
    ) -> Self {
        let mut promises: Vec<usize> = promises.into_iter().collect();
        promises.sort_unstable();
        promises.dedup();
        Finding {
            code,
            severity,
            promises,
            message: message.into(),
        }
    }

    pub fn info(code: FindingCode, promises: impl IntoIterator<Item = usize>, msg: impl Into<String>) -> Self {
        Self::new(code, Severity::Info, promises, msg)
    }

    pub fn warn(code: FindingCode, promises: impl IntoIterator<Item = usize>, msg: impl Into<String>) -> Self {
        Self::new(code, Severity::Warn, promises, msg)
    }

    pub fn error(code: FindingCode, promises: impl IntoIterator<Item = usize>, msg: impl Into<String>) -> Self {
        Self::new(code, Severity::Error, promises, msg)
    }
}

/// Report ordering: most severe first, then by first promise index.
pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| {
        b.severity
            .cmp(&a.severity)
            .then_with(|| a.promises.first().cmp(&b.promises.first()))
            .then_with(|| a.promises.cmp(&b.promises))
            .then_with(|| a.code.cmp(&b.code))
            .then_with(|| a.message.cmp(&b.message))
    });
}
