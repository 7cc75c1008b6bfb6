use std::collections::BTreeSet;

use super::{Body, Kind, Polarity, Promise, PromiseGraph};
use crate::finding::{Finding, FindingCode, Severity};

/// A matched offer/acceptance pair. Influence propagates only through
/// `overlap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub offer: usize,
    pub accept: usize,
    pub overlap: BTreeSet<String>,
}

impl Binding {
    pub fn is_inert(&self) -> bool {
        self.overlap.is_empty()
    }
}

fn pairs_with(offer: &Promise, accept: &Promise) -> bool {
    offer.polarity == Polarity::Offer
        && accept.polarity == Polarity::Accept
        && offer.promiser == accept.promisee
        && offer.promisee == accept.promiser
}

/// Every (+, −) pair between the same two agents, in (offer, accept) index
/// order. Pairs with disjoint bodies are kept and report
/// [`Binding::is_inert`].
pub fn bind(graph: &PromiseGraph) -> Vec<Binding> {
    let ps = graph.promises();
    let mut out = Vec::new();
    for (i, offer) in ps.iter().enumerate() {
        if offer.polarity != Polarity::Offer {
            continue;
        }
        for (j, accept) in ps.iter().enumerate() {
            if pairs_with(offer, accept) {
                out.push(Binding {
                    offer: i,
                    accept: j,
                    overlap: offer.body.overlap(&accept.body),
                });
            }
        }
    }
    out
}

/// Offers to `p.promiser` from other agents whose body covers `condition`.
pub fn condition_sources<'g>(
    graph: &'g PromiseGraph,
    p: &'g Promise,
    condition: &'g Body,
) -> impl Iterator<Item = usize> + 'g {
    graph.promises().iter().enumerate().filter_map(move |(k, q)| {
        (q.polarity == Polarity::Offer
            && q.promisee == p.promiser
            && q.promiser != p.promiser
            && q.body.covers(condition))
        .then_some(k)
    })
}

fn accepts(graph: &PromiseGraph, from: &super::AgentId, to: &super::AgentId, c: &Body) -> Option<usize> {
    graph.promises().iter().position(|q| {
        q.polarity == Polarity::Accept && &q.promiser == from && &q.promisee == to && q.body.covers(c)
    })
}

/// Checks that each condition of every conditional offer is sourced,
/// accepted from its source, and signalled to the beneficiary.
///
/// The third leg is also satisfied when the offer's body carries the
/// condition as an argument or trailing conjunct (`E(P)` stands for `+E|P`
/// together with `−P`).
pub fn resolve_conditionals(graph: &PromiseGraph) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (i, p) in graph.offers() {
        if !p.is_conditional() {
            continue;
        }
        let carried = p.body.carried_terms();
        // Conditions on an imposition are informational.
        let severity = if p.kind == Kind::Imposition { Severity::Info } else { Severity::Warn };
        for c in &p.conditions {
            let sources: Vec<usize> = condition_sources(graph, p, c).collect();
            if sources.is_empty() {
                findings.push(Finding::new(
                    FindingCode::NoConditionSource,
                    severity,
                    [i],
                    format!("no agent offers {c} to {} for condition of `{p}`", p.promiser),
                ));
                continue;
            }
            let accepted = sources.iter().any(|&k| {
                let provider = &graph.promises()[k].promiser;
                accepts(graph, &p.promiser, provider, c).is_some()
            });
            if !accepted {
                findings.push(Finding::new(
                    FindingCode::MissingConditionAcceptance,
                    severity,
                    std::iter::once(i).chain(sources.iter().copied()),
                    format!(
                        "{} does not accept {c} from its source (leg 2) for `{p}`",
                        p.promiser
                    ),
                ));
            }
            let signalled = accepts(graph, &p.promiser, &p.promisee, c).is_some()
                || c.words().iter().all(|w| carried.contains(w));
            if !signalled {
                findings.push(Finding::new(
                    FindingCode::MissingConditionSignal,
                    severity,
                    [i],
                    format!(
                        "{} does not signal acceptance of {c} to {} (leg 3) for `{p}`",
                        p.promiser, p.promisee
                    ),
                ));
            }
        }
    }
    findings
}

/// Lists impositions. An imposition is absorbed when its target holds an
/// acceptance towards the imposer that covers the imposed body.
pub fn detect_impositions(graph: &PromiseGraph) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (i, p) in graph.promises().iter().enumerate() {
        if p.kind != Kind::Imposition {
            continue;
        }
        let absorbing = graph
            .promises()
            .iter()
            .position(|q| pairs_with(p, q) && q.body.covers(&p.body));
        findings.push(match absorbing {
            Some(j) => Finding::info(
                FindingCode::AbsorbedImposition,
                [i, j],
                format!("imposition `{p}` is absorbed by accepted policy #{j}"),
            ),
            None => Finding::warn(
                FindingCode::UnilateralImposition,
                [i],
                format!("imposition `{p}` has no matching acceptance"),
            ),
        });
    }
    findings
}

/// Inert bindings, plus acceptances that no offer pairs with.
pub fn binding_findings(graph: &PromiseGraph, bindings: &[Binding]) -> Vec<Finding> {
    let mut findings = Vec::new();
    let live = |pick: fn(&Binding) -> usize, idx: usize| bindings.iter().any(|b| pick(b) == idx && !b.is_inert());
    // Disjoint pairs are only reported when neither side binds to anything.
    for b in bindings
        .iter()
        .filter(|b| b.is_inert() && !live(|b| b.offer, b.offer) && !live(|b| b.accept, b.accept))
    {
        findings.push(Finding::warn(
            FindingCode::InertBinding,
            [b.offer, b.accept],
            format!(
                "offer #{} and acceptance #{} share no words; nothing propagates",
                b.offer, b.accept
            ),
        ));
    }
    for (j, q) in graph.promises().iter().enumerate() {
        if q.polarity != Polarity::Accept {
            continue;
        }
        let covered: BTreeSet<&String> = bindings
            .iter()
            .filter(|b| b.accept == j)
            .flat_map(|b| b.overlap.iter())
            .collect();
        let unmatched: Vec<&String> = q.body.words().iter().filter(|w| !covered.contains(w)).collect();
        if !unmatched.is_empty() {
            findings.push(Finding::info(
                FindingCode::DanglingAcceptance,
                [j],
                format!(
                    "{} accepts {:?} from {} but nothing matching is offered",
                    q.promiser, unmatched, q.promisee
                ),
            ));
        }
    }
    findings
}
