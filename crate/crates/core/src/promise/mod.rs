//! Agents, promises and the promise graph.
//!
//! A promise is a declaration by one agent about its own behaviour. The
//! graph rejects anything that would bind a different agent as the actor.

mod analysis;
pub mod expr;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analysis::{
    bind, binding_findings, condition_sources, detect_impositions, resolve_conditionals, Binding,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),
    #[error("duplicate agent `{0}`")]
    DuplicateAgent(AgentId),
    #[error("agent `{0}` promises to itself")]
    SelfPromise(AgentId),
    #[error("`{promiser}` cannot promise behaviour of `{actor}` (word `{word}`)")]
    AutonomyViolation {
        promiser: AgentId,
        actor: String,
        word: String,
    },
    #[error("acceptance promises cannot be impositions")]
    ImposedAcceptance,
    #[error("promise body is empty")]
    EmptyBody,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdError {
    #[error("agent name is empty")]
    Empty,
    #[error("agent name `{0}` contains whitespace or reserved characters")]
    Reserved(String),
}

/// Name of an agent; case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Result<Self, IdError> {
        let name = name.into();
        if name.is_empty() {
            return Err(IdError::Empty);
        }
        if name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | ':' | '&' | '∧'))
        {
            return Err(IdError::Reserved(name));
        }
        Ok(AgentId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for AgentId {
    type Error = IdError;
    fn try_from(s: String) -> Result<Self, IdError> {
        AgentId::new(s)
    }
}

impl From<AgentId> for String {
    fn from(id: AgentId) -> String {
        id.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shorthand for tests and generators with known-good names.
///
/// # Panics
/// If `name` is not a valid agent name.
pub fn agent(name: &str) -> AgentId {
    AgentId::new(name).expect("valid agent name")
}

/// Content of a promise: a set of canonical body words plus optional
/// quantities.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawBody")]
pub struct Body {
    words: BTreeSet<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amount: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBody {
    words: Vec<String>,
    #[serde(default)]
    rate: Option<f64>,
    #[serde(default)]
    amount: Option<f64>,
}

impl TryFrom<RawBody> for Body {
    type Error = expr::ExprError;
    fn try_from(raw: RawBody) -> Result<Self, Self::Error> {
        let mut body = Body::parse(raw.words)?;
        body.rate = raw.rate;
        body.amount = raw.amount;
        Ok(body)
    }
}

impl Body {
    /// Builds a body, canonicalizing every word.
    pub fn parse<I, S>(words: I) -> Result<Self, expr::ExprError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| expr::canonicalize(w.as_ref()))
            .collect::<Result<_, _>>()?;
        Ok(Body {
            words,
            rate: None,
            amount: None,
        })
    }

    /// # Panics
    /// If any word is malformed.
    pub fn of(words: &[&str]) -> Self {
        Body::parse(words).expect("well-formed body words")
    }

    pub fn from_exprs<'a>(exprs: impl IntoIterator<Item = &'a expr::Expr>) -> Self {
        Body {
            words: exprs.into_iter().map(|e| e.to_string()).collect(),
            rate: None,
            amount: None,
        }
    }

    pub fn words(&self) -> &BTreeSet<String> {
        &self.words
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Overlap of two bodies (word intersection).
    pub fn overlap(&self, other: &Body) -> BTreeSet<String> {
        self.words.intersection(&other.words).cloned().collect()
    }

    pub fn covers(&self, other: &Body) -> bool {
        other.words.is_subset(&self.words)
    }

    /// Parsed words. Words are canonical, so parsing cannot fail.
    pub fn parsed(&self) -> impl Iterator<Item = expr::Word> + '_ {
        self.words
            .iter()
            .map(|w| expr::parse_word(w).expect("body words are canonical"))
    }

    /// Total symbol count over all words.
    pub fn size(&self) -> usize {
        self.parsed().map(|w| w.expr.size()).sum()
    }

    /// Canonical strings of every term the body declares itself dependent
    /// on (arguments and trailing conjuncts).
    pub fn carried_terms(&self) -> BTreeSet<String> {
        self.parsed()
            .flat_map(|w| {
                w.expr
                    .dependencies()
                    .into_iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(w)?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "+")]
    Offer,
    #[serde(rename = "-")]
    Accept,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Offer => "+",
            Polarity::Accept => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Promise,
    Imposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Continuity {
    OneShot,
    #[default]
    Continuous,
}

fn is_default<T: Default + PartialEq>(t: &T) -> bool {
    *t == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Promise {
    pub promiser: AgentId,
    pub promisee: AgentId,
    pub polarity: Polarity,
    pub body: Body,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<Body>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "is_default")]
    pub continuity: Continuity,
    /// Third parties the promise refers to (vector and tensor promises).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refs: Vec<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Redundancy group used by fragility analysis when this promise feeds
    /// a conditional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

impl Promise {
    fn with_polarity(promiser: AgentId, promisee: AgentId, polarity: Polarity, body: Body) -> Self {
        Promise {
            promiser,
            promisee,
            polarity,
            body,
            conditions: Vec::new(),
            kind: Kind::Promise,
            continuity: Continuity::Continuous,
            refs: Vec::new(),
            label: None,
            group: None,
        }
    }

    pub fn offer(promiser: AgentId, promisee: AgentId, body: Body) -> Self {
        Self::with_polarity(promiser, promisee, Polarity::Offer, body)
    }

    pub fn accept(promiser: AgentId, promisee: AgentId, body: Body) -> Self {
        Self::with_polarity(promiser, promisee, Polarity::Accept, body)
    }

    pub fn imposition(promiser: AgentId, promisee: AgentId, body: Body) -> Self {
        let mut p = Self::offer(promiser, promisee, body);
        p.kind = Kind::Imposition;
        p
    }

    pub fn given(mut self, condition: Body) -> Self {
        self.conditions.push(condition);
        self
    }

    pub fn one_shot(mut self) -> Self {
        self.continuity = Continuity::OneShot;
        self
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn in_group(mut self, group: impl Into<String>) -> Self {
        self.group = Some(group.into());
        self
    }

    pub fn referring_to(mut self, refs: impl IntoIterator<Item = AgentId>) -> Self {
        self.refs.extend(refs);
        self
    }

    pub fn is_offer(&self) -> bool {
        self.polarity == Polarity::Offer
    }

    pub fn is_conditional(&self) -> bool {
        !self.conditions.is_empty()
    }

    /// Scalar, vector or tensor according to the number of referenced agents.
    pub fn rank(&self) -> usize {
        self.refs.len()
    }
}

impl fmt::Display for Promise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.kind {
            Kind::Promise => "->",
            Kind::Imposition => "-o",
        };
        write!(
            f,
            "{} {} {}{}",
            self.promiser, arrow, self.polarity, self.body
        )?;
        for c in &self.conditions {
            write!(f, "|{c}")?;
        }
        write!(f, " {}", self.promisee)
    }
}

/// Agents and the ordered list of promises between them. A promise's
/// identity is its index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PromiseGraph {
    agents: Vec<AgentId>,
    promises: Vec<Promise>,
}

impl PromiseGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_agents(agents: impl IntoIterator<Item = AgentId>) -> Result<Self, GraphError> {
        let mut g = Self::new();
        for a in agents {
            g.insert_agent(a)?;
        }
        Ok(g)
    }

    pub fn insert_agent(&mut self, agent: AgentId) -> Result<(), GraphError> {
        if self.agents.contains(&agent) {
            return Err(GraphError::DuplicateAgent(agent));
        }
        self.agents.push(agent);
        Ok(())
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn promises(&self) -> &[Promise] {
        &self.promises
    }

    pub fn promise(&self, index: usize) -> Option<&Promise> {
        self.promises.get(index)
    }

    pub fn len(&self) -> usize {
        self.promises.len()
    }

    pub fn is_empty(&self) -> bool {
        self.promises.is_empty()
    }

    pub fn has_agent(&self, id: &AgentId) -> bool {
        self.agents.contains(id)
    }

    /// Returns a new graph with `p` appended; `self` is left untouched.
    pub fn add_promise(&self, p: Promise) -> Result<Self, GraphError> {
        let mut next = self.clone();
        next.insert(p)?;
        Ok(next)
    }

    /// In-place variant of [`add_promise`](Self::add_promise); returns the
    /// new promise's index.
    pub fn insert(&mut self, p: Promise) -> Result<usize, GraphError> {
        self.validate(&p)?;
        self.promises.push(p);
        Ok(self.promises.len() - 1)
    }

    pub fn validate(&self, p: &Promise) -> Result<(), GraphError> {
        for id in [&p.promiser, &p.promisee].into_iter().chain(&p.refs) {
            if !self.has_agent(id) {
                return Err(GraphError::UnknownAgent(id.clone()));
            }
        }
        if p.promiser == p.promisee {
            return Err(GraphError::SelfPromise(p.promiser.clone()));
        }
        if p.body.is_empty() {
            return Err(GraphError::EmptyBody);
        }
        if p.polarity == Polarity::Accept && p.kind == Kind::Imposition {
            return Err(GraphError::ImposedAcceptance);
        }
        // An acceptance may name the behaviour it accepts; only offers are
        // restricted to the promiser's own behaviour.
        for word in p.body.parsed().filter(|_| p.polarity == Polarity::Offer) {
            if let Some(actor) = &word.actor {
                if actor != p.promiser.as_str() {
                    return Err(GraphError::AutonomyViolation {
                        promiser: p.promiser.clone(),
                        actor: actor.clone(),
                        word: word.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Indices of offers (positive polarity).
    pub fn offers(&self) -> impl Iterator<Item = (usize, &Promise)> {
        self.promises.iter().enumerate().filter(|(_, p)| p.is_offer())
    }
}
