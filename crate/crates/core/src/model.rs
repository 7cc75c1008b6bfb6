//! The JSON model document and its resolution into analysable parts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composition::{ChainSpec, ProxyChain};
use crate::convergence::{Operator, StateSpace};
use crate::dynamics::{BindingRef, ChannelSpec, ObserverProfile, Profiles, Sampling};
use crate::finding::{Finding, FindingCode};
use crate::language::{TranslationMatrix, Vocabulary};
use crate::promise::{AgentId, GraphError, Promise, PromiseGraph};
use crate::trust::{RiskPolicy, Smoothing};

pub const CURRENT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported model version {0} (expected {CURRENT_VERSION})")]
    UnsupportedVersion(u64),
    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDecl {
    pub name: AgentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDecl {
    pub from: String,
    pub to: String,
    pub entries: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustDecl {
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default)]
    pub risk: f64,
    #[serde(default = "half")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub v_r: f64,
}

impl Default for TrustDecl {
    fn default() -> Self {
        TrustDecl {
            rho: 1.0,
            risk: 0.0,
            lambda: 0.5,
            v_r: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrustKeyword {
    #[serde(rename = "trust")]
    Trust,
}

/// A fixed sampling rate, or `"trust"` for the kinetic law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SamplingDecl {
    Rate(f64),
    Keyword(TrustKeyword),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDecl {
    pub offer: usize,
    pub accept: usize,
    pub bandwidth: f64,
    pub sampling: SamplingDecl,
    #[serde(default = "one")]
    pub keep_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDecl {
    pub name: String,
    pub states: Vec<String>,
    pub map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDecl {
    pub n_proxies: usize,
    #[serde(default)]
    pub direct_trust: bool,
    #[serde(default)]
    pub minimal_trust: bool,
}

impl ChainDecl {
    pub fn spec(&self) -> ChainSpec {
        ChainSpec {
            n_proxies: self.n_proxies,
            direct_trust: self.direct_trust,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: u64,
    #[serde(default)]
    pub agents: Vec<AgentDecl>,
    #[serde(default)]
    pub vocabularies: Vec<Vocabulary>,
    #[serde(default)]
    pub matrices: Vec<MatrixDecl>,
    #[serde(default)]
    pub promises: Vec<Promise>,
    #[serde(default)]
    pub trust: BTreeMap<AgentId, TrustDecl>,
    #[serde(default)]
    pub channels: Vec<ChannelDecl>,
    #[serde(default)]
    pub operators: Vec<OperatorDecl>,
    #[serde(default)]
    pub chains: Vec<ChainDecl>,
}

impl ModelDocument {
    pub fn empty() -> Self {
        ModelDocument {
            version: CURRENT_VERSION as u64,
            agents: Vec::new(),
            vocabularies: Vec::new(),
            matrices: Vec::new(),
            promises: Vec::new(),
            trust: BTreeMap::new(),
            channels: Vec::new(),
            operators: Vec::new(),
            chains: Vec::new(),
        }
    }

    /// A generated chain together with the pattern it should be audited
    /// against.
    pub fn from_chain(chain: &ProxyChain) -> Self {
        let mut doc = Self::empty();
        doc.agents = chain
            .graph
            .agents()
            .iter()
            .map(|a| AgentDecl {
                name: a.clone(),
                vocabulary: None,
            })
            .collect();
        doc.promises = chain.graph.promises().to_vec();
        doc.chains.push(ChainDecl {
            n_proxies: chain.spec.n_proxies,
            direct_trust: chain.spec.direct_trust,
            minimal_trust: false,
        });
        doc
    }

    pub fn vocabulary(&self, id: &str) -> Option<&Vocabulary> {
        self.vocabularies.iter().find(|v| v.id() == id)
    }

    pub fn has_agent(&self, name: &AgentId) -> bool {
        self.agents.iter().any(|a| &a.name == name)
    }

    /// Checks that every cross-reference resolves and every section is
    /// well formed. Promise-level rule violations are left to `check`.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.version != CURRENT_VERSION as u64 {
            return Err(ModelError::UnsupportedVersion(self.version));
        }
        let unresolved = |what: String| Err(ModelError::UnresolvedReference(what));
        for (i, a) in self.agents.iter().enumerate() {
            if self.agents[..i].iter().any(|b| b.name == a.name) {
                return Err(ModelError::Invalid(format!("agent `{}` declared twice", a.name)));
            }
            if let Some(v) = &a.vocabulary {
                if self.vocabulary(v).is_none() {
                    return unresolved(format!("agent `{}` uses unknown vocabulary `{v}`", a.name));
                }
            }
        }
        for (i, v) in self.vocabularies.iter().enumerate() {
            if self.vocabularies[..i].iter().any(|w| w.id() == v.id()) {
                return Err(ModelError::Invalid(format!("vocabulary `{}` declared twice", v.id())));
            }
        }
        for m in &self.matrices {
            let (Some(from), Some(to)) = (self.vocabulary(&m.from), self.vocabulary(&m.to)) else {
                return unresolved(format!("matrix {} -> {} names an unknown vocabulary", m.from, m.to));
            };
            TranslationMatrix::new(from, to, m.entries.clone())
                .map_err(|e| ModelError::Invalid(format!("matrix {} -> {}: {e}", m.from, m.to)))?;
        }
        for (i, p) in self.promises.iter().enumerate() {
            for id in [&p.promiser, &p.promisee].into_iter().chain(&p.refs) {
                if !self.has_agent(id) {
                    return unresolved(format!("promise #{i} names unknown agent `{id}`"));
                }
            }
        }
        for (name, t) in &self.trust {
            if !self.has_agent(name) {
                return unresolved(format!("trust settings for unknown agent `{name}`"));
            }
            profile(t).map_err(|e| ModelError::Invalid(format!("trust settings for `{name}`: {e}")))?;
        }
        for (i, c) in self.channels.iter().enumerate() {
            for idx in [c.offer, c.accept] {
                if idx >= self.promises.len() {
                    return unresolved(format!("channel #{i} names promise #{idx}, which does not exist"));
                }
            }
            channel(c, BindingRef {
                offer: c.offer,
                accept: c.accept,
            })
            .map_err(|e| ModelError::Invalid(format!("channel #{i}: {e}")))?;
        }
        for (i, o) in self.operators.iter().enumerate() {
            if self.operators[..i].iter().any(|p| p.name == o.name) {
                return Err(ModelError::Invalid(format!("operator `{}` declared twice", o.name)));
            }
            operator(o)?;
        }
        Ok(())
    }
}

fn profile(t: &TrustDecl) -> Result<ObserverProfile, crate::trust::TrustError> {
    Ok(ObserverProfile {
        policy: RiskPolicy::new(t.rho, t.risk)?,
        smoothing: Smoothing::new(t.lambda)?,
        calibration: t.v_r,
    })
}

fn channel(c: &ChannelDecl, binding: BindingRef) -> Result<ChannelSpec, crate::dynamics::DynamicsError> {
    let sampling = match c.sampling {
        SamplingDecl::Rate(f) => Sampling::Fixed(f),
        SamplingDecl::Keyword(TrustKeyword::Trust) => Sampling::TrustDriven,
    };
    ChannelSpec::new(binding, c.bandwidth, sampling, c.keep_prob)
}

fn operator(o: &OperatorDecl) -> Result<Operator, ModelError> {
    let invalid = |e: crate::convergence::ConvergenceError| ModelError::Invalid(format!("operator `{}`: {e}", o.name));
    let space = StateSpace::new(o.states.clone()).map_err(invalid)?;
    Operator::from_map(&o.name, space, &o.map).map_err(invalid)
}

/// Parses and validates a model document.
pub fn parse(text: &str) -> Result<ModelDocument, ModelError> {
    let doc: ModelDocument = match serde_json::from_str(text) {
        Ok(doc) => doc,
        Err(e) => {
            // A document from a future version may not fit this schema at
            // all; report the version rather than the first unknown key.
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(text) {
                if let Some(ver) = v.get("version").and_then(serde_json::Value::as_u64) {
                    if ver != CURRENT_VERSION as u64 {
                        return Err(ModelError::UnsupportedVersion(ver));
                    }
                }
            }
            return Err(ModelError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            });
        }
    };
    doc.validate()?;
    Ok(doc)
}

pub fn load(path: impl AsRef<Path>) -> Result<ModelDocument, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

/// Canonical serialization: fixed key order, two-space indent, trailing
/// newline. `parse(&emit(d))` reproduces `d`.
pub fn emit(doc: &ModelDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("model documents serialize");
    s.push('\n');
    s
}

/// A validated document resolved into analysis inputs. Promises that break
/// a structural rule are left out of `graph` and reported in `rejected`;
/// `doc_index` maps graph indices back to document indices.
#[derive(Debug, Clone)]
pub struct Model {
    pub graph: PromiseGraph,
    pub doc_index: Vec<usize>,
    pub rejected: Vec<Finding>,
    pub profiles: Profiles,
    pub operators: Vec<Operator>,
}

impl Model {
    pub fn resolve(doc: &ModelDocument) -> Result<Model, ModelError> {
        doc.validate()?;
        let mut graph = PromiseGraph::with_agents(doc.agents.iter().map(|a| a.name.clone()))
            .map_err(|e| ModelError::Invalid(e.to_string()))?;
        let mut doc_index = Vec::new();
        let mut rejected = Vec::new();
        for (i, p) in doc.promises.iter().enumerate() {
            match graph.insert(p.clone()) {
                Ok(_) => doc_index.push(i),
                Err(e) => {
                    let code = match e {
                        GraphError::UnknownAgent(_) => FindingCode::UnknownAgent,
                        GraphError::DuplicateAgent(_) => FindingCode::UnknownAgent,
                        GraphError::SelfPromise(_) => FindingCode::SelfPromise,
                        GraphError::AutonomyViolation { .. } => FindingCode::AutonomyViolation,
                        GraphError::ImposedAcceptance => FindingCode::ImposedAcceptance,
                        GraphError::EmptyBody => FindingCode::EmptyBody,
                    };
                    rejected.push(Finding::error(code, [i], format!("`{p}` rejected: {e}")));
                }
            }
        }
        let profiles = doc
            .trust
            .iter()
            .map(|(a, t)| Ok((a.clone(), profile(t).map_err(|e| ModelError::Invalid(e.to_string()))?)))
            .collect::<Result<_, ModelError>>()?;
        let operators = doc.operators.iter().map(operator).collect::<Result<_, _>>()?;
        Ok(Model {
            graph,
            doc_index,
            rejected,
            profiles,
            operators,
        })
    }

    pub fn graph_index(&self, doc_index: usize) -> Option<usize> {
        self.doc_index.iter().position(|&d| d == doc_index)
    }

    /// Rewrites a finding's graph indices as document indices.
    pub fn to_doc(&self, mut f: Finding) -> Finding {
        f.promises = f.promises.iter().map(|&i| self.doc_index[i]).collect();
        f
    }

    /// Channel specs over graph indices. A channel on a rejected promise
    /// does not reference a binding.
    pub fn channels(&self, doc: &ModelDocument) -> Result<Vec<ChannelSpec>, crate::dynamics::DynamicsError> {
        doc.channels
            .iter()
            .map(|c| {
                let doc_ref = BindingRef {
                    offer: c.offer,
                    accept: c.accept,
                };
                match (self.graph_index(c.offer), self.graph_index(c.accept)) {
                    (Some(offer), Some(accept)) => channel(c, BindingRef { offer, accept }),
                    _ => Err(crate::dynamics::DynamicsError::NotABinding(doc_ref)),
                }
            })
            .collect()
    }
}
