//! Trustworthiness potentials and the kinetic sampling law.
//!
//! An observer's potential `V` for a promise is its running estimate that
//! the promise is kept, normalized to `[0, 1]`. The gap between the
//! observer's own calibration `V_R` and that estimate `V_S`, less the risk
//! it is willing to carry, sets how fast it samples:
//! `½ρv² + risk = V_R − V_S`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::promise::AgentId;

/// Potential assigned before any observation.
pub const INITIAL_POTENTIAL: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrustError {
    #[error("rho must be finite and > 0, got {0}")]
    InvalidRho(f64),
    #[error("risk must be finite and >= 0, got {0}")]
    InvalidRisk(f64),
    #[error("smoothing must lie in (0, 1], got {0}")]
    InvalidSmoothing(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Kept,
    Broken,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssessmentRecord {
    pub observer: AgentId,
    pub promise: usize,
    pub outcome: Outcome,
    pub tick: u64,
}

/// Exponential-average weight in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Smoothing(f64);

impl Smoothing {
    pub fn new(lambda: f64) -> Result<Self, TrustError> {
        if lambda > 0.0 && lambda <= 1.0 {
            Ok(Smoothing(lambda))
        } else {
            Err(TrustError::InvalidSmoothing(lambda))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPolicy {
    rho: f64,
    risk: f64,
}

impl RiskPolicy {
    pub fn new(rho: f64, risk: f64) -> Result<Self, TrustError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(TrustError::InvalidRho(rho));
        }
        if !(risk.is_finite() && risk >= 0.0) {
            return Err(TrustError::InvalidRisk(risk));
        }
        Ok(RiskPolicy { rho, risk })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn risk(&self) -> f64 {
        self.risk
    }
}

/// Potentials keyed by (observer, promise index).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrustState {
    potentials: BTreeMap<(AgentId, usize), f64>,
}

impl TrustState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn potential(&self, observer: &AgentId, promise: usize) -> f64 {
        self.potentials
            .get(&(observer.clone(), promise))
            .copied()
            .unwrap_or(INITIAL_POTENTIAL)
    }

    /// Returns the state after folding in one assessment.
    pub fn assess(&self, rec: &AssessmentRecord, lambda: Smoothing) -> TrustState {
        let mut next = self.clone();
        next.record(&rec.observer, rec.promise, rec.outcome, lambda);
        next
    }

    /// In-place update; returns the new potential.
    pub fn record(&mut self, observer: &AgentId, promise: usize, outcome: Outcome, lambda: Smoothing) -> f64 {
        let v = self
            .potentials
            .entry((observer.clone(), promise))
            .or_insert(INITIAL_POTENTIAL);
        let target = match outcome {
            Outcome::Kept => 1.0,
            Outcome::Broken => 0.0,
        };
        *v = (1.0 - lambda.0) * *v + lambda.0 * target;
        *v
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(AgentId, usize), &f64)> {
        self.potentials.iter()
    }
}

/// Monitoring rate `v = sqrt(2·max(0, V_R − V_S − risk)/ρ)`.
pub fn sampling_rate(v_r: f64, v_s: f64, policy: &RiskPolicy) -> f64 {
    let gap = v_r - v_s - policy.risk;
    if gap <= 0.0 {
        0.0
    } else {
        (2.0 * gap / policy.rho).sqrt()
    }
}

/// Work per tick spent sampling at rate `v`: `½ρv²`.
pub fn kinetic_cost(v: f64, policy: &RiskPolicy) -> f64 {
    0.5 * policy.rho * v * v
}
