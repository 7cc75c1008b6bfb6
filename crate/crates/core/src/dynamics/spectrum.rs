use std::collections::HashSet;

use thiserror::Error;

use super::log::{BindingRef, Event, EventLog};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("outcome labels and probabilities differ in length")]
    LengthMismatch,
    #[error("spectrum is empty")]
    Empty,
    #[error("duplicate outcome label `{0}`")]
    DuplicateLabel(String),
    #[error("probability {0} is negative or not finite")]
    BadProbability(f64),
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("binding {0} has no delivered outcomes")]
    NoObservations(BindingRef),
}

/// Distribution over distinct promise outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSpectrum {
    outcomes: Vec<String>,
    p: Vec<f64>,
}

impl OutcomeSpectrum {
    pub fn new(outcomes: Vec<String>, p: Vec<f64>) -> Result<Self, SpectrumError> {
        if outcomes.len() != p.len() {
            return Err(SpectrumError::LengthMismatch);
        }
        if outcomes.is_empty() {
            return Err(SpectrumError::Empty);
        }
        let mut seen = HashSet::with_capacity(outcomes.len());
        if let Some(dup) = outcomes.iter().find(|o| !seen.insert(o.as_str())) {
            return Err(SpectrumError::DuplicateLabel(dup.clone()));
        }
        if let Some(&bad) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(SpectrumError::BadProbability(bad));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SpectrumError::NotNormalized(total));
        }
        Ok(OutcomeSpectrum { outcomes, p })
    }

    pub fn uniform(n: usize) -> Result<Self, SpectrumError> {
        let outcomes = (0..n).map(|i| format!("b{i}")).collect();
        Self::new(outcomes, vec![1.0 / n as f64; n])
    }

    /// Normalizes nonnegative weights.
    pub fn from_counts(outcomes: Vec<String>, counts: &[u64]) -> Result<Self, SpectrumError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(SpectrumError::Empty);
        }
        let p = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(outcomes, p)
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

/// Shannon entropy in bits; zero-probability outcomes contribute nothing.
pub fn spectrum_entropy(s: &OutcomeSpectrum) -> f64 {
    let h: f64 = s
        .p
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum();
    // -0.0 for point masses
    (-h).max(0.0)
}

/// Empirical frequencies of delivered outcomes for one binding, labels in
/// order of first appearance.
pub fn observed_spectrum(log: &EventLog, binding: BindingRef) -> Result<OutcomeSpectrum, SpectrumError> {
    let mut labels: Vec<String> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    for r in log.records().iter().filter(|r| r.binding == binding) {
        let label = match r.event {
            Event::Kept => "kept",
            Event::Broken => "broken",
            _ => continue,
        };
        match labels.iter().position(|l| l == label) {
            Some(i) => counts[i] += 1,
            None => {
                labels.push(label.to_string());
                counts.push(1);
            }
        }
    }
    if labels.is_empty() {
        return Err(SpectrumError::NoObservations(binding));
    }
    OutcomeSpectrum::from_counts(labels, &counts)
}
