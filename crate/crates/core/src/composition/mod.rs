//! Serial and parallel composition of promises: proxy-chain generation,
//! cost growth, and structural audits.
//!
//! A chain with `N` proxies between server `S` and client `C` is written
//! as `3N + 1` binding lines, each an offer with its matching acceptance:
//!
//! * end-to-end: `S ±S(P1(…(PN))) C`
//! * handoff `k`: the upstream agent hands `P(k-1)(…P1(S))` down to `Pk`
//! * assurance `k`: `Pk` promises `Pk(…(PN))` back up the chain
//! * delivery `k`: `Pk ±Pk(…P1(S))∧(P(k+1)(…(PN))) C`, the last proxy
//!   carrying no conjunct
//!
//! With direct trust each proxy also promises `±Pk` straight to the
//! server, and the end-to-end body gains one `∧(Pk)` per proxy.

mod audit;

use std::fmt;

pub use audit::{
    completeness_against_pattern, detect_bootstrap_deadlock, fragility, verify_continuity, Fragility,
    FragilityReport,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::promise::expr::Expr;
use crate::promise::{agent, AgentId, Body, Promise, PromiseGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompositionError {
    #[error("promise #{0} is not a conditional offer")]
    NotAConditional(usize),
    #[error("{0} proxies exceed the limit of {MAX_PROXIES}")]
    TooManyProxies(usize),
    #[error("need at least two chain sizes to fit a growth exponent")]
    TooFewPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub n_proxies: usize,
    #[serde(default)]
    pub direct_trust: bool,
}

impl ChainSpec {
    pub fn new(n_proxies: usize) -> Self {
        ChainSpec {
            n_proxies,
            direct_trust: false,
        }
    }

    pub fn with_direct_trust(mut self) -> Self {
        self.direct_trust = true;
        self
    }

    /// Number of binding lines the generator emits.
    pub fn line_count(&self) -> usize {
        3 * self.n_proxies + 1 + if self.direct_trust { self.n_proxies } else { 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainRole {
    EndToEnd,
    /// Handoff of the service down to proxy `k`.
    Handoff(usize),
    /// Assurance from proxy `k` back up the chain.
    Assurance(usize),
    /// Proxy `k`'s delivery promise to the client.
    Delivery(usize),
    /// Proxy `k`'s direct promise to the server.
    DirectTrust(usize),
}

impl fmt::Display for ChainRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let up = |k: usize| if k == 1 { "S".to_string() } else { format!("P{}", k - 1) };
        match *self {
            ChainRole::EndToEnd => write!(f, "end-to-end S→C"),
            ChainRole::Handoff(k) => write!(f, "downstream handoff {}→P{k}", up(k)),
            ChainRole::Assurance(k) => write!(f, "upstream assurance P{k}→{}", up(k)),
            ChainRole::Delivery(k) => write!(f, "delivery P{k}→C"),
            ChainRole::DirectTrust(k) => write!(f, "direct trust P{k}→S"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainLine {
    pub role: ChainRole,
    pub offer: usize,
    pub accept: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyChain {
    pub spec: ChainSpec,
    pub graph: PromiseGraph,
    pub lines: Vec<ChainLine>,
}

pub const SERVER: &str = "S";
/// Largest chain whose nested bodies stay within the parser's depth limit.
pub const MAX_PROXIES: usize = crate::promise::expr::MAX_DEPTH - 12;
pub const CLIENT: &str = "C";

pub fn proxy_name(k: usize) -> String {
    format!("P{k}")
}

/// `P(k)(P(k-1)(…P1(S)))`; `S` when `k == 0`.
fn upstream(k: usize) -> Expr {
    (1..=k).fold(Expr::sym(SERVER), |inner, i| Expr::apply(proxy_name(i), inner))
}

/// `Pk(P(k+1)(…(PN)))`, or `None` past the last proxy.
fn downstream(k: usize, n: usize) -> Option<Expr> {
    if k == 0 || k > n {
        return None;
    }
    Some(
        (k..n)
            .rev()
            .fold(Expr::sym(proxy_name(n)), |inner, i| Expr::apply(proxy_name(i), inner)),
    )
}

fn upstream_agent(k: usize) -> AgentId {
    if k == 1 {
        agent(SERVER)
    } else {
        agent(&proxy_name(k - 1))
    }
}

/// Generates the fully promised chain for `spec`.
///
/// # Panics
/// If `spec.n_proxies` exceeds [`MAX_PROXIES`].
pub fn gen_proxy_chain(spec: ChainSpec) -> ProxyChain {
    let n = spec.n_proxies;
    assert!(n <= MAX_PROXIES, "at most {MAX_PROXIES} proxies");
    let mut agents = vec![agent(SERVER)];
    agents.extend((1..=n).map(|k| agent(&proxy_name(k))));
    agents.push(agent(CLIENT));
    let mut graph = PromiseGraph::with_agents(agents).expect("distinct chain agents");
    let mut lines = Vec::with_capacity(spec.line_count());

    let mut line = |role: ChainRole, from: AgentId, to: AgentId, body: Expr, conditions: Vec<Expr>| {
        let body = Body::from_exprs([&body]);
        let mut offer = Promise::offer(from.clone(), to.clone(), body.clone()).labelled(role.to_string());
        offer.conditions = conditions.iter().map(|c| Body::from_exprs([c])).collect();
        let accept = Promise::accept(to, from, body).labelled(role.to_string());
        let offer = graph.insert(offer).expect("generated offer is valid");
        let accept = graph.insert(accept).expect("generated acceptance is valid");
        lines.push(ChainLine { role, offer, accept });
    };

    // End-to-end
    let mut e2e_terms = vec![match downstream(1, n) {
        Some(d) => Expr::apply(SERVER, d),
        None => Expr::sym(SERVER),
    }];
    let mut e2e_conditions: Vec<Expr> = downstream(1, n).into_iter().collect();
    if spec.direct_trust {
        for k in 1..=n {
            e2e_terms.push(Expr::sym(proxy_name(k)));
            e2e_conditions.push(Expr::sym(proxy_name(k)));
        }
    }
    line(ChainRole::EndToEnd, agent(SERVER), agent(CLIENT), Expr::and(e2e_terms), e2e_conditions);

    for k in 1..=n {
        let pk = agent(&proxy_name(k));
        let handoff_conditions = if k >= 2 { vec![upstream(k - 2)] } else { vec![] };
        line(ChainRole::Handoff(k), upstream_agent(k), pk.clone(), upstream(k - 1), handoff_conditions);

        let assurance = downstream(k, n).expect("k <= n");
        line(
            ChainRole::Assurance(k),
            pk.clone(),
            upstream_agent(k),
            assurance,
            downstream(k + 1, n).into_iter().collect(),
        );

        let rest = downstream(k + 1, n);
        let mut delivery_conditions = vec![upstream(k - 1)];
        delivery_conditions.extend(rest.clone());
        let delivery = Expr::and(std::iter::once(upstream(k)).chain(rest));
        line(ChainRole::Delivery(k), pk, agent(CLIENT), delivery, delivery_conditions);
    }

    if spec.direct_trust {
        for k in 1..=n {
            line(
                ChainRole::DirectTrust(k),
                agent(&proxy_name(k)),
                agent(SERVER),
                Expr::sym(proxy_name(k)),
                vec![],
            );
        }
    }

    ProxyChain { spec, graph, lines }
}

/// Total body size, in agent symbols, over every offer. Each binding line
/// contributes its offer once; acceptances mirror it and are not counted.
pub fn chain_cost(graph: &PromiseGraph) -> usize {
    graph.offers().map(|(_, p)| p.body.size()).sum()
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn log_log_fit(points: &[(f64, f64)]) -> Result<(f64, f64), CompositionError> {
    if points.len() < 2 {
        return Err(CompositionError::TooFewPoints);
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CompositionError::TooFewPoints);
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Fitted growth exponent of [`chain_cost`] over the given chain sizes.
pub fn cost_growth_exponent(sizes: &[usize], direct_trust: bool) -> Result<f64, CompositionError> {
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| {
            let spec = ChainSpec {
                n_proxies: n,
                direct_trust,
            };
            (n as f64, chain_cost(&gen_proxy_chain(spec).graph) as f64)
        })
        .collect();
    log_log_fit(&points).map(|(slope, _)| slope)
}
