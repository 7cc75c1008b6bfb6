use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::{gen_proxy_chain, ChainSpec, CompositionError};
use crate::finding::{Finding, FindingCode};
use crate::promise::{condition_sources, AgentId, Continuity, Polarity, PromiseGraph};

/// Flags one-shot promises, and with error severity every promise that
/// conditions on one.
pub fn verify_continuity(graph: &PromiseGraph) -> Vec<Finding> {
    let ps = graph.promises();
    let any_one_shot = ps.iter().any(|p| p.continuity == Continuity::OneShot);
    let mut findings = Vec::new();
    for (i, p) in ps.iter().enumerate() {
        if p.continuity == Continuity::OneShot {
            findings.push(Finding::warn(
                FindingCode::OneShotPromise,
                [i],
                format!("`{p}` is one-shot; the chain cannot hold a steady state through it"),
            ));
        }
        if !any_one_shot {
            continue;
        }
        for c in &p.conditions {
            let one_shot: Vec<usize> = condition_sources(graph, p, c)
                .filter(|&k| ps[k].continuity == Continuity::OneShot)
                .collect();
            if !one_shot.is_empty() {
                findings.push(Finding::error(
                    FindingCode::ConditionOnOneShot,
                    std::iter::once(i).chain(one_shot.iter().copied()),
                    format!("condition {c} of `{p}` rests on one-shot promise(s) {one_shot:?}"),
                ));
            }
        }
    }
    findings
}

/// Offers `q` that source some condition of offer `p`, as edges `p → q`.
fn condition_edges(graph: &PromiseGraph) -> Vec<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for (i, p) in graph.offers() {
        for c in &p.conditions {
            for q in condition_sources(graph, p, c) {
                edges.insert((i, q));
            }
        }
    }
    edges.into_iter().collect()
}

/// Offers that can eventually be kept: least fixed point of "every
/// condition has an enabled source", seeded by unconditional offers.
fn enabled_offers(graph: &PromiseGraph) -> BTreeSet<usize> {
    let mut enabled: BTreeSet<usize> = graph
        .offers()
        .filter(|(_, p)| !p.is_conditional())
        .map(|(i, _)| i)
        .collect();
    loop {
        let before = enabled.len();
        for (i, p) in graph.offers() {
            if enabled.contains(&i) {
                continue;
            }
            let ready = p
                .conditions
                .iter()
                .all(|c| condition_sources(graph, p, c).any(|q| enabled.contains(&q)));
            if ready {
                enabled.insert(i);
            }
        }
        if enabled.len() == before {
            return enabled;
        }
    }
}

/// Cycles in the condition-dependency digraph over offers.
///
/// A cycle none of whose offers can ever become enabled is a deadlock
/// (error). A cycle that is entered from outside by an unconditional
/// source is reported as bootstrapped (info). An unconditional offer that
/// serves the condition of a conditional offer flowing straight back to
/// it closes a two-party exchange and is reported as
/// [`FindingCode::BootstrappedExchange`].
pub fn detect_bootstrap_deadlock(graph: &PromiseGraph) -> Vec<Finding> {
    let ps = graph.promises();
    let edges = condition_edges(graph);
    let mut g: DiGraph<usize, ()> = DiGraph::new();
    let nodes: Vec<_> = (0..ps.len()).map(|i| g.add_node(i)).collect();
    for &(p, q) in &edges {
        g.add_edge(nodes[p], nodes[q], ());
    }
    let enabled = enabled_offers(graph);
    let mut findings = Vec::new();
    for scc in tarjan_scc(&g) {
        let mut members: Vec<usize> = scc.iter().map(|&n| g[n]).collect();
        members.sort_unstable();
        let cyclic = members.len() > 1 || edges.contains(&(members[0], members[0]));
        if !cyclic {
            continue;
        }
        let stuck: Vec<usize> = members.iter().copied().filter(|i| !enabled.contains(i)).collect();
        if stuck.is_empty() {
            findings.push(Finding::info(
                FindingCode::BootstrappedCycle,
                members.clone(),
                format!("condition cycle {members:?} is bootstrapped by an unconditional source"),
            ));
        } else {
            findings.push(Finding::error(
                FindingCode::BootstrapDeadlock,
                members.clone(),
                format!(
                    "condition cycle {members:?} has no unconditional offer to start it; \
                     one agent must promise without waiting"
                ),
            ));
        }
    }
    for &(p, q) in &edges {
        let (dep, src) = (&ps[p], &ps[q]);
        if !src.is_conditional() && src.promiser == dep.promisee && src.promisee == dep.promiser {
            findings.push(Finding::info(
                FindingCode::BootstrappedExchange,
                [p, q],
                format!(
                    "{} bootstraps the exchange with {} by promising `{}` unconditionally",
                    src.promiser, dep.promiser, src.body
                ),
            ));
        }
    }
    findings
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fragility {
    Redundant,
    Fragile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragilityReport {
    pub dependent: usize,
    pub classification: Fragility,
    /// Input groups; inputs without a group stand alone.
    pub groups: BTreeMap<String, Vec<usize>>,
    /// Groups with one member plus conditions with no source at all.
    pub single_points: usize,
    pub unsourced: Vec<String>,
    /// Agents every delivery must pass through: the dependent's promiser
    /// and the promisers of conditional inputs further upstream.
    pub intermediaries: Vec<AgentId>,
}

impl FragilityReport {
    pub fn finding(&self) -> Option<Finding> {
        if self.classification == Fragility::Redundant {
            return None;
        }
        let singles: Vec<&str> = self
            .groups
            .iter()
            .filter(|(_, m)| m.len() == 1)
            .map(|(g, _)| g.as_str())
            .collect();
        let names: Vec<&str> = self.intermediaries.iter().map(AgentId::as_str).collect();
        let mut involved = vec![self.dependent];
        involved.extend(self.groups.values().filter(|m| m.len() == 1).flatten());
        Some(Finding::warn(
            FindingCode::Fragile,
            involved,
            format!(
                "promise #{} has {} single point(s) of failure (inputs {singles:?}, unsourced {:?}); \
                 intermediaries {names:?} are the first suspects when delivery fails",
                self.dependent, self.single_points, self.unsourced
            ),
        ))
    }
}

/// Counts independent single-point inputs of a conditional offer.
/// `redundancy` maps input promise indices to a group name; inputs in one
/// group back each other up.
pub fn fragility(
    graph: &PromiseGraph,
    dependent: usize,
    redundancy: &BTreeMap<usize, String>,
) -> Result<FragilityReport, CompositionError> {
    let ps = graph.promises();
    let p = ps
        .get(dependent)
        .filter(|p| p.polarity == Polarity::Offer && p.is_conditional())
        .ok_or(CompositionError::NotAConditional(dependent))?;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut unsourced = Vec::new();
    let mut inputs = BTreeSet::new();
    for c in &p.conditions {
        let sources: Vec<usize> = condition_sources(graph, p, c).collect();
        if sources.is_empty() {
            unsourced.push(c.to_string());
        }
        inputs.extend(sources);
    }
    for &q in &inputs {
        let group = redundancy.get(&q).cloned().unwrap_or_else(|| format!("#{q}"));
        groups.entry(group).or_default().push(q);
    }
    let single_points = groups.values().filter(|m| m.len() == 1).count() + unsourced.len();
    let mut intermediaries = vec![p.promiser.clone()];
    for &q in &inputs {
        if ps[q].is_conditional() && !intermediaries.contains(&ps[q].promiser) {
            intermediaries.push(ps[q].promiser.clone());
        }
    }
    Ok(FragilityReport {
        dependent,
        classification: if single_points > 0 {
            Fragility::Fragile
        } else {
            Fragility::Redundant
        },
        groups,
        single_points,
        unsourced,
        intermediaries,
    })
}

type Key = (AgentId, AgentId, Polarity, BTreeSet<String>);

fn key_of(p: &crate::promise::Promise) -> Key {
    (p.promiser.clone(), p.promisee.clone(), p.polarity, p.body.words().clone())
}

/// Diffs `graph` against the chain `spec` would generate. With
/// `minimal_trust`, also requires every pair of agents to share a binding
/// with nonempty overlap.
pub fn completeness_against_pattern(graph: &PromiseGraph, spec: ChainSpec, minimal_trust: bool) -> Vec<Finding> {
    let pattern = gen_proxy_chain(spec);
    let mut have: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (i, p) in graph.promises().iter().enumerate() {
        have.entry(key_of(p)).or_default().push(i);
    }
    let mut findings = Vec::new();
    for line in &pattern.lines {
        for idx in [line.offer, line.accept] {
            let want = &pattern.graph.promises()[idx];
            let slot = have.get_mut(&key_of(want));
            if slot.as_ref().is_some_and(|s| !s.is_empty()) {
                slot.unwrap().remove(0);
            } else {
                let half = if want.polarity == Polarity::Offer {
                    "offer"
                } else {
                    "acceptance"
                };
                findings.push(Finding::error(
                    FindingCode::MissingPromise,
                    [],
                    format!("missing {half} of the {}: `{want}`", line.role),
                ));
            }
        }
    }
    for (_, left) in have {
        for i in left {
            findings.push(Finding::warn(
                FindingCode::ExtraPromise,
                [i],
                format!("`{}` is not part of the pattern", graph.promises()[i]),
            ));
        }
    }
    if minimal_trust {
        let mut linked: BTreeSet<(AgentId, AgentId)> = BTreeSet::new();
        for b in crate::promise::bind(graph).iter().filter(|b| !b.is_inert()) {
            let p = &graph.promises()[b.offer];
            let (a, z) = (p.promiser.clone(), p.promisee.clone());
            linked.insert(if a < z { (a, z) } else { (z, a) });
        }
        let agents = graph.agents();
        for (i, a) in agents.iter().enumerate() {
            for z in &agents[i + 1..] {
                let pair = if a < z { (a.clone(), z.clone()) } else { (z.clone(), a.clone()) };
                if !linked.contains(&pair) {
                    findings.push(Finding::warn(
                        FindingCode::IncompleteGraph,
                        [],
                        format!("{} and {} share no binding; minimal trust needs a complete graph", pair.0, pair.1),
                    ));
                }
            }
        }
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::ChainRole;
    use crate::finding::Severity;
    use crate::promise::{agent, Body, Promise};

    fn codes(f: &[Finding]) -> Vec<FindingCode> {
        f.iter().map(|f| f.code).collect()
    }

    fn remuneration(server_conditional: bool) -> PromiseGraph {
        let mut g = PromiseGraph::with_agents([agent("S"), agent("R")]).unwrap();
        let mut pi_s = Promise::offer(agent("S"), agent("R"), Body::of(&["b"]));
        if server_conditional {
            pi_s = pi_s.given(Body::of(&["payment"]));
        }
        g.insert(pi_s).unwrap();
        g.insert(Promise::accept(agent("R"), agent("S"), Body::of(&["b"]))).unwrap();
        g.insert(Promise::offer(agent("R"), agent("S"), Body::of(&["payment"])).given(Body::of(&["b"])))
            .unwrap();
        g.insert(Promise::accept(agent("S"), agent("R"), Body::of(&["payment"]))).unwrap();
        g
    }

    #[test]
    fn remuneration_loop_deadlocks() {
        let f = detect_bootstrap_deadlock(&remuneration(true));
        assert_eq!(codes(&f), [FindingCode::BootstrapDeadlock]);
        assert_eq!(f[0].promises, [0, 2]);
        assert_eq!(f[0].severity, Severity::Error);
    }

    #[test]
    fn unconditional_server_bootstraps() {
        let f = detect_bootstrap_deadlock(&remuneration(false));
        assert!(f.iter().all(|f| f.severity == Severity::Info));
        assert_eq!(codes(&f), [FindingCode::BootstrappedExchange]);
    }

    #[test]
    fn external_source_enables_a_cycle() {
        let mut g = remuneration(true);
        g.insert_agent(agent("Bank")).unwrap();
        g.insert(Promise::offer(agent("Bank"), agent("S"), Body::of(&["payment"]))).unwrap();
        let f = detect_bootstrap_deadlock(&g);
        assert_eq!(codes(&f), [FindingCode::BootstrappedCycle]);
    }

    #[test]
    fn chains_are_acyclic_and_continuous() {
        for n in 0..=8 {
            for spec in [ChainSpec::new(n), ChainSpec::new(n).with_direct_trust()] {
                let g = gen_proxy_chain(spec).graph;
                assert!(verify_continuity(&g).is_empty());
                assert!(detect_bootstrap_deadlock(&g).is_empty(), "n={n}");
            }
        }
    }

    #[test]
    fn one_shot_handoff_taints_dependents() {
        let chain = gen_proxy_chain(ChainSpec::new(3));
        let handoff = chain.lines.iter().find(|l| l.role == ChainRole::Handoff(2)).unwrap().offer;
        let mut g = PromiseGraph::with_agents(chain.graph.agents().iter().cloned()).unwrap();
        for (i, p) in chain.graph.promises().iter().enumerate() {
            let p = if i == handoff { p.clone().one_shot() } else { p.clone() };
            g.insert(p).unwrap();
        }
        let f = verify_continuity(&g);
        assert_eq!(f.iter().filter(|f| f.code == FindingCode::OneShotPromise).count(), 1);
        let tainted: Vec<&Finding> = f.iter().filter(|f| f.code == FindingCode::ConditionOnOneShot).collect();
        assert!(!tainted.is_empty());
        assert!(tainted.iter().all(|f| f.promises.contains(&handoff)));
        // P2 conditions its delivery on P1(S), which is what the handoff carries.
        let delivery = chain.lines.iter().find(|l| l.role == ChainRole::Delivery(2)).unwrap().offer;
        assert!(tainted.iter().any(|f| f.promises.contains(&delivery)));
    }

    #[test]
    fn empty_graph_is_vacuous() {
        let g = PromiseGraph::new();
        assert!(verify_continuity(&g).is_empty());
        assert!(detect_bootstrap_deadlock(&g).is_empty());
    }

    fn sensor_graph(n: usize) -> (PromiseGraph, usize, Vec<usize>) {
        let mut g = PromiseGraph::with_agents([agent("Agg"), agent("Out")]).unwrap();
        let mut inputs = Vec::new();
        for k in 0..n {
            let s = agent(&format!("S{k}"));
            g.insert_agent(s.clone()).unwrap();
            inputs.push(g.insert(Promise::offer(s, agent("Agg"), Body::of(&["reading"]))).unwrap());
        }
        let dep = g
            .insert(Promise::offer(agent("Agg"), agent("Out"), Body::of(&["summary"])).given(Body::of(&["reading"])))
            .unwrap();
        (g, dep, inputs)
    }

    #[test]
    fn one_group_is_redundant() {
        let (g, dep, inputs) = sensor_graph(3);
        let groups = inputs.iter().map(|&i| (i, "mirror".to_string())).collect();
        let r = fragility(&g, dep, &groups).unwrap();
        assert_eq!(r.classification, Fragility::Redundant);
        assert_eq!(r.single_points, 0);
        assert!(r.finding().is_none());
    }

    #[test]
    fn distinct_inputs_are_fragile() {
        let (g, dep, _) = sensor_graph(3);
        let r = fragility(&g, dep, &BTreeMap::new()).unwrap();
        assert_eq!(r.classification, Fragility::Fragile);
        assert_eq!(r.single_points, 3);
    }

    #[test]
    fn serial_intermediary_is_named() {
        let mut g = PromiseGraph::with_agents([agent("S"), agent("I"), agent("R")]).unwrap();
        g.insert(Promise::offer(agent("S"), agent("I"), Body::of(&["x"]))).unwrap();
        let dep = g
            .insert(Promise::offer(agent("I"), agent("R"), Body::of(&["x"])).given(Body::of(&["x"])))
            .unwrap();
        let r = fragility(&g, dep, &BTreeMap::new()).unwrap();
        assert_eq!(r.classification, Fragility::Fragile);
        assert_eq!(r.intermediaries, [agent("I")]);
        assert!(r.finding().unwrap().message.contains("\"I\""));
        assert_eq!(fragility(&g, 0, &BTreeMap::new()), Err(CompositionError::NotAConditional(0)));
    }

    #[test]
    fn self_diff_is_clean() {
        for n in 0..=6 {
            let spec = ChainSpec::new(n);
            assert!(completeness_against_pattern(&gen_proxy_chain(spec).graph, spec, false).is_empty());
        }
    }

    #[test]
    fn deleted_assurance_is_named() {
        let spec = ChainSpec::new(3);
        let chain = gen_proxy_chain(spec);
        // mp6: P2 ±P2(P3) P1
        let gone = chain.lines.iter().find(|l| l.role == ChainRole::Assurance(2)).unwrap().offer;
        let mut g = PromiseGraph::with_agents(chain.graph.agents().iter().cloned()).unwrap();
        for (i, p) in chain.graph.promises().iter().enumerate() {
            if i != gone {
                g.insert(p.clone()).unwrap();
            }
        }
        let f = completeness_against_pattern(&g, spec, false);
        assert_eq!(codes(&f), [FindingCode::MissingPromise]);
        assert!(f[0].message.contains("upstream assurance P2→P1"), "{}", f[0].message);
    }

    #[test]
    fn minimal_trust_needs_direct_lines() {
        let spec = ChainSpec::new(2);
        let f = completeness_against_pattern(&gen_proxy_chain(spec).graph, spec, true);
        assert!(codes(&f).contains(&FindingCode::IncompleteGraph));
        let direct = spec.with_direct_trust();
        assert!(completeness_against_pattern(&gen_proxy_chain(direct).graph, direct, true).is_empty());
    }
}
