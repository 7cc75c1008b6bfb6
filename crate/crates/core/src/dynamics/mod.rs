//! Discrete-time simulation of promise keeping over sampled channels.
//!
//! Each tick, the sender on a channel emits at its bandwidth `B` and the
//! receiver samples at rate `f`, either fixed or derived from its current
//! trust potential. Reception is faithful only above the Nyquist rate
//! `f > 2B`; below it each emission is missed with probability
//! `1 − f/(2B)`. Delivered emissions are assessed as kept or broken and
//! fed back into the receiver's potential.

mod log;
mod spectrum;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use log::{BindingRef, Event, EventLog, EventRecord, LogParseError, HEADER as LOG_HEADER};
pub use spectrum::{observed_spectrum, spectrum_entropy, OutcomeSpectrum, SpectrumError};

use crate::promise::{bind, AgentId, PromiseGraph};
use crate::trust::{kinetic_cost, sampling_rate, Outcome, RiskPolicy, Smoothing, TrustState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("channel {0} does not reference an offer/acceptance pair")]
    NotABinding(BindingRef),
    #[error("channel {0} references an inert binding (empty overlap)")]
    InertChannel(BindingRef),
    #[error("bandwidth must be finite and > 0, got {0}")]
    InvalidBandwidth(f64),
    #[error("sampling rate must be finite and >= 0, got {0}")]
    InvalidRate(f64),
    #[error("keep probability must lie in [0, 1], got {0}")]
    InvalidKeepProbability(f64),
    #[error("horizon must be at least one tick")]
    EmptyHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fidelity {
    Faithful,
    Lossy { p_miss: f64 },
}

impl Fidelity {
    pub fn is_faithful(self) -> bool {
        matches!(self, Fidelity::Faithful)
    }

    pub fn p_miss(self) -> f64 {
        match self {
            Fidelity::Faithful => 0.0,
            Fidelity::Lossy { p_miss } => p_miss,
        }
    }
}

/// Faithful iff `f > 2B`; otherwise misses with probability
/// `1 − f/(2B)`, clamped to `[0, 1]`.
pub fn nyquist_fidelity(bandwidth: f64, rate: f64) -> Fidelity {
    debug_assert!(bandwidth > 0.0 && rate >= 0.0);
    let nyquist = 2.0 * bandwidth;
    if rate > nyquist {
        Fidelity::Faithful
    } else {
        Fidelity::Lossy {
            p_miss: (1.0 - rate / nyquist).clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Delivery iff faithful; keeping follows the keep probability by error
    /// diffusion, so no randomness is involved.
    #[default]
    Deterministic,
    /// Bernoulli delivery and keeping drawn from a seeded generator.
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon: u64,
    pub seed: u64,
    pub mode: Mode,
}

impl SimConfig {
    pub fn new(horizon: u64, seed: u64, mode: Mode) -> Result<Self, DynamicsError> {
        if horizon == 0 {
            return Err(DynamicsError::EmptyHorizon);
        }
        Ok(SimConfig { horizon, seed, mode })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    Fixed(f64),
    /// Recomputed every tick from the receiver's potential.
    TrustDriven,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub binding: BindingRef,
    pub bandwidth: f64,
    pub sampling: Sampling,
    pub keep_prob: f64,
}

impl ChannelSpec {
    pub fn new(binding: BindingRef, bandwidth: f64, sampling: Sampling, keep_prob: f64) -> Result<Self, DynamicsError> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(DynamicsError::InvalidBandwidth(bandwidth));
        }
        if let Sampling::Fixed(f) = sampling {
            if !(f.is_finite() && f >= 0.0) {
                return Err(DynamicsError::InvalidRate(f));
            }
        }
        if !(0.0..=1.0).contains(&keep_prob) {
            return Err(DynamicsError::InvalidKeepProbability(keep_prob));
        }
        Ok(ChannelSpec {
            binding,
            bandwidth,
            sampling,
            keep_prob,
        })
    }
}

/// How one agent observes: risk policy, smoothing of its assessments, and
/// the calibration `V_R` of its own acceptance effort.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverProfile {
    pub policy: RiskPolicy,
    pub smoothing: Smoothing,
    pub calibration: f64,
}

impl Default for ObserverProfile {
    fn default() -> Self {
        ObserverProfile {
            policy: RiskPolicy::new(1.0, 0.0).expect("valid default policy"),
            smoothing: Smoothing::new(0.5).expect("valid default smoothing"),
            calibration: 1.0,
        }
    }
}

pub type Profiles = BTreeMap<AgentId, ObserverProfile>;

/// Per-channel totals collected during a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelSummary {
    pub emitted: u64,
    pub delivered: u64,
    pub missed: u64,
    pub kept: u64,
    pub broken: u64,
    pub sampled: u64,
    pub initial_rate: f64,
    pub final_rate: f64,
    pub final_potential: f64,
    pub kinetic_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub log: EventLog,
    pub trust: TrustState,
    pub channels: Vec<ChannelSummary>,
}

struct ChannelState {
    observer: AgentId,
    profile: ObserverProfile,
    emit_acc: f64,
    sample_acc: f64,
    keep_acc: f64,
}

/// Checks that every channel rides on a non-inert binding.
pub fn validate_channels(graph: &PromiseGraph, channels: &[ChannelSpec]) -> Result<(), DynamicsError> {
    let bindings = bind(graph);
    for ch in channels {
        let b = bindings
            .iter()
            .find(|b| b.offer == ch.binding.offer && b.accept == ch.binding.accept)
            .ok_or(DynamicsError::NotABinding(ch.binding))?;
        if b.is_inert() {
            return Err(DynamicsError::InertChannel(ch.binding));
        }
    }
    Ok(())
}

/// Runs the simulation. The result is a pure function of the arguments,
/// seed included.
pub fn run(
    graph: &PromiseGraph,
    trust: &TrustState,
    profiles: &Profiles,
    channels: &[ChannelSpec],
    cfg: &SimConfig,
) -> Result<RunOutput, DynamicsError> {
    validate_channels(graph, channels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trust = trust.clone();
    let mut log = EventLog::new();
    let mut summaries = vec![ChannelSummary::default(); channels.len()];
    let mut states: Vec<ChannelState> = channels
        .iter()
        .map(|ch| {
            let observer = graph.promises()[ch.binding.accept].promiser.clone();
            let profile = profiles.get(&observer).copied().unwrap_or_default();
            ChannelState {
                observer,
                profile,
                emit_acc: 0.0,
                sample_acc: 0.0,
                keep_acc: 0.0,
            }
        })
        .collect();

    for tick in 0..cfg.horizon {
        for ((ch, st), sum) in channels.iter().zip(&mut states).zip(&mut summaries) {
            let offer = ch.binding.offer;
            let mut potential = trust.potential(&st.observer, offer);
            let rate = match ch.sampling {
                Sampling::Fixed(f) => f,
                Sampling::TrustDriven => sampling_rate(st.profile.calibration, potential, &st.profile.policy),
            };
            if tick == 0 {
                sum.initial_rate = rate;
            }
            sum.final_rate = rate;
            sum.kinetic_cost += kinetic_cost(rate, &st.profile.policy);
            let mut emit = |event, potential| {
                log.push(EventRecord {
                    tick,
                    binding: ch.binding,
                    event,
                    potential,
                    rate,
                })
            };

            st.sample_acc += rate;
            let samples = st.sample_acc.floor();
            st.sample_acc -= samples;
            for _ in 0..samples as u64 {
                emit(Event::Sampled, potential);
            }
            sum.sampled += samples as u64;

            st.emit_acc += ch.bandwidth;
            let emissions = st.emit_acc.floor();
            st.emit_acc -= emissions;
            let fidelity = nyquist_fidelity(ch.bandwidth, rate);
            for _ in 0..emissions as u64 {
                emit(Event::Emitted, potential);
                sum.emitted += 1;
                let delivered = match cfg.mode {
                    Mode::Deterministic => fidelity.is_faithful(),
                    Mode::Stochastic => rng.gen::<f64>() >= fidelity.p_miss(),
                };
                if !delivered {
                    emit(Event::Missed, potential);
                    sum.missed += 1;
                    continue;
                }
                emit(Event::Delivered, potential);
                sum.delivered += 1;
                let kept = match cfg.mode {
                    Mode::Deterministic => {
                        st.keep_acc += ch.keep_prob;
                        if st.keep_acc >= 1.0 {
                            st.keep_acc -= 1.0;
                            true
                        } else {
                            false
                        }
                    }
                    Mode::Stochastic => rng.gen::<f64>() < ch.keep_prob,
                };
                let outcome = if kept { Outcome::Kept } else { Outcome::Broken };
                potential = trust.record(&st.observer, offer, outcome, st.profile.smoothing);
                if kept {
                    sum.kept += 1;
                    emit(Event::Kept, potential);
                } else {
                    sum.broken += 1;
                    emit(Event::Broken, potential);
                }
            }
            sum.final_potential = potential;
        }
    }
    Ok(RunOutput {
        log,
        trust,
        channels: summaries,
    })
}
