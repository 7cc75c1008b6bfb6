//! The analyses behind each command-line verb. Each returns a [`Report`];
//! findings refer to promises by their index in the model document.

use std::collections::BTreeMap;

use serde_json::json;
use thiserror::Error;

use crate::composition::{
    chain_cost, completeness_against_pattern, cost_growth_exponent, detect_bootstrap_deadlock, fragility,
    gen_proxy_chain, verify_continuity, ChainSpec, CompositionError, MAX_PROXIES,
};
use crate::convergence::ConvergenceError;
use crate::dynamics::{self, observed_spectrum, spectrum_entropy, DynamicsError, EventLog, Mode, SimConfig};
use crate::finding::{Finding, FindingCode, Severity};
use crate::language::{classify, translate as apply_matrix, unitarity_check, LanguageError, TranslationClass, TranslationMatrix};
use crate::model::{Model, ModelDocument, ModelError};
use crate::promise::{bind, binding_findings, detect_impositions, resolve_conditionals};
use crate::report::Report;
use crate::trust::TrustState;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model declares no channels")]
    NoChannels,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Language(#[from] LanguageError),
    #[error("unknown vocabulary `{0}`")]
    UnknownVocabulary(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error(transparent)]
    Convergence(#[from] ConvergenceError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error("invalid range `{0}`; expected A..B with 1 <= A < B")]
    InvalidRange(String),
}

fn matrix_of(doc: &ModelDocument, from: &str, to: &str) -> Option<TranslationMatrix> {
    doc.matrices.iter().find(|m| m.from == from && m.to == to).map(|m| TranslationMatrix {
        from: m.from.clone(),
        to: m.to.clone(),
        entries: m.entries.clone(),
    })
}

/// Static analysis of a model: bindings, conditionals, impositions,
/// vocabularies, translations, continuity, bootstrap cycles, fragility,
/// chain completeness and operator convergence.
pub fn check(doc: &ModelDocument) -> Result<Report, CommandError> {
    let model = Model::resolve(doc)?;
    let g = &model.graph;
    let mut report = Report::new("check");
    let section = |report: &mut Report, name: &str, findings: Vec<Finding>| {
        let findings: Vec<Finding> = findings.into_iter().map(|f| model.to_doc(f)).collect();
        report.verdict(name, findings.iter().all(|f| f.severity < Severity::Error));
        report.extend_findings(findings);
    };

    report.verdict("structure", model.rejected.is_empty());
    report.extend_findings(model.rejected.iter().cloned());

    let bindings = bind(g);
    report.metric("agents", g.agents().len());
    report.metric("promises", doc.promises.len());
    report.metric("bindings", bindings.len());
    report.metric("inert_bindings", bindings.iter().filter(|b| b.is_inert()).count());
    section(&mut report, "bindings", binding_findings(g, &bindings));
    section(&mut report, "conditionals", resolve_conditionals(g));
    section(&mut report, "impositions", detect_impositions(g));

    let mut vocab_findings = Vec::new();
    for (i, p) in g.promises().iter().enumerate() {
        let Some(vid) = doc.agents.iter().find(|a| a.name == p.promiser).and_then(|a| a.vocabulary.as_ref()) else {
            continue;
        };
        let vocab = doc.vocabulary(vid).expect("validated reference");
        for w in p.body.parsed() {
            for s in w.expr.symbols() {
                if !vocab.contains(s) {
                    vocab_findings.push(Finding::warn(
                        FindingCode::WordOutsideVocabulary,
                        [i],
                        format!("{} uses `{s}`, which is not in its vocabulary `{vid}`", p.promiser),
                    ));
                }
            }
        }
    }
    section(&mut report, "vocabulary", vocab_findings);

    let mut translations = BTreeMap::new();
    let mut translation_findings = Vec::new();
    for m in &doc.matrices {
        let l = matrix_of(doc, &m.from, &m.to).expect("present");
        let c = classify(&l);
        let mut entry = json!({"class": c.class, "rank": c.rank, "rows": c.rows, "cols": c.cols});
        if let Some(back) = matrix_of(doc, &m.to, &m.from) {
            entry["round_trip"] = json!(unitarity_check(&l, &back)?);
        }
        translations.insert(format!("{}->{}", m.from, m.to), entry);
        let msg = format!("translation {} -> {} is {} (rank {} of {}x{})", m.from, m.to, c.class, c.rank, c.rows, c.cols);
        translation_findings.push(match c.class {
            TranslationClass::Lossy => Finding::warn(FindingCode::TranslationClass, [], msg),
            _ => Finding::info(FindingCode::TranslationClass, [], msg),
        });
    }
    if !translations.is_empty() {
        report.metric("translations", translations);
    }
    report.extend_findings(translation_findings);

    section(&mut report, "continuity", verify_continuity(g));
    section(&mut report, "bootstrap", detect_bootstrap_deadlock(g));

    let groups: BTreeMap<usize, String> = g
        .promises()
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.group.clone().map(|grp| (i, grp)))
        .collect();
    let mut fragile = Vec::new();
    let mut single_points = 0;
    for (i, p) in g.offers() {
        if p.is_conditional() {
            let r = fragility(g, i, &groups)?;
            single_points += r.single_points;
            fragile.extend(r.finding());
        }
    }
    report.metric("fragile_promises", fragile.len());
    report.metric("single_points", single_points);
    section(&mut report, "fragility", fragile);

    if !doc.chains.is_empty() {
        let mut findings = Vec::new();
        for c in &doc.chains {
            findings.extend(completeness_against_pattern(g, c.spec(), c.minimal_trust));
        }
        section(&mut report, "completeness", findings);
    }

    if !model.operators.is_empty() {
        let mut findings = Vec::new();
        for op in &model.operators {
            let v = op.is_convergent(op.space().len())?;
            if !op.is_idempotent() {
                findings.push(Finding::info(
                    FindingCode::NonIdempotentOperator,
                    [],
                    format!("operator `{}` is not idempotent", op.name()),
                ));
            }
            if !v.convergent {
                findings.push(Finding::error(
                    FindingCode::NonConvergentOperator,
                    [],
                    format!("operator `{}` has states that never reach a fixed point", op.name()),
                ));
            }
        }
        section(&mut report, "convergence", findings);
    }
    Ok(report)
}

/// Runs every channel of the model and summarizes the result.
pub fn simulate(doc: &ModelDocument, horizon: u64, seed: u64, mode: Mode) -> Result<(Report, EventLog), CommandError> {
    if doc.channels.is_empty() {
        return Err(CommandError::NoChannels);
    }
    let model = Model::resolve(doc)?;
    let channels = model.channels(doc)?;
    let cfg = SimConfig::new(horizon, seed, mode)?;
    let out = dynamics::run(&model.graph, &TrustState::new(), &model.profiles, &channels, &cfg)?;

    let mut report = Report::new("simulate");
    report.metric("horizon", horizon);
    report.metric("seed", seed);
    report.metric(
        "mode",
        match mode {
            Mode::Deterministic => "det",
            Mode::Stochastic => "stoch",
        },
    );
    let mut rows = Vec::new();
    let mut total_cost = 0.0;
    let mut total_missed = 0;
    for ((decl, ch), sum) in doc.channels.iter().zip(&channels).zip(&out.channels) {
        let entropy = observed_spectrum(&out.log, ch.binding).ok().map(|s| spectrum_entropy(&s));
        total_cost += sum.kinetic_cost;
        total_missed += sum.missed;
        rows.push(json!({
            "binding": format!("{}/{}", decl.offer, decl.accept),
            "emitted": sum.emitted,
            "delivered": sum.delivered,
            "missed": sum.missed,
            "kept": sum.kept,
            "broken": sum.broken,
            "initial_v": sum.initial_rate,
            "final_v": sum.final_rate,
            "final_V": sum.final_potential,
            "kinetic_cost": sum.kinetic_cost,
            "entropy_bits": entropy,
        }));
        if sum.missed > 0 {
            report.extend_findings([Finding::warn(
                FindingCode::MissedEvents,
                [decl.offer, decl.accept],
                format!(
                    "channel {}/{} missed {} of {} emissions; sampling at {} against bandwidth {} is below the Nyquist rate",
                    decl.offer, decl.accept, sum.missed, sum.emitted, sum.final_rate, ch.bandwidth
                ),
            )]);
        }
    }
    report.metric("channels", rows);
    report.metric("total_kinetic_cost", total_cost);
    report.metric("total_missed", total_missed);
    report.metric("events", out.log.len());
    report.verdict("no_misses", total_missed == 0);
    // Event-log rows name bindings by graph index; map them back.
    let mut log = EventLog::new();
    for r in out.log.records() {
        let mut r = *r;
        r.binding.offer = model.doc_index[r.binding.offer];
        r.binding.accept = model.doc_index[r.binding.accept];
        log.push(r);
    }
    Ok((report, log))
}

/// Parses `A..B` (inclusive) as a range of chain sizes.
pub fn parse_range(s: &str) -> Result<(usize, usize), CommandError> {
    let bad = || CommandError::InvalidRange(s.to_string());
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a == 0 || a >= b {
        return Err(bad());
    }
    Ok((a, b))
}

/// Generates a chain, audits it, and optionally fits the cost growth over
/// a range of chain sizes.
pub fn proxy(spec: ChainSpec, range: Option<(usize, usize)>) -> Result<(Report, ModelDocument), CommandError> {
    let largest = range.map_or(spec.n_proxies, |(_, b)| b.max(spec.n_proxies));
    if largest > MAX_PROXIES {
        return Err(CompositionError::TooManyProxies(largest).into());
    }
    let chain = gen_proxy_chain(spec);
    let doc = ModelDocument::from_chain(&chain);
    let mut report = Report::new("proxy");
    report.metric("n_proxies", spec.n_proxies);
    report.metric("direct_trust", spec.direct_trust);
    report.metric("binding_lines", chain.lines.len());
    report.metric("promises", chain.graph.len());
    report.metric("cost", chain_cost(&chain.graph));
    report.metric("cost_measure", "total agent symbols over offer bodies, one per binding line");
    report.metric(
        "lines",
        chain
            .lines
            .iter()
            .map(|l| {
                let p = &chain.graph.promises()[l.offer];
                format!("{}: ±{}", l.role, p.body)
            })
            .collect::<Vec<_>>(),
    );
    report.verdict("line_count", chain.lines.len() == spec.line_count());
    let mut findings = verify_continuity(&chain.graph);
    findings.extend(detect_bootstrap_deadlock(&chain.graph));
    findings.extend(completeness_against_pattern(&chain.graph, spec, false));
    report.verdict("continuity", findings.is_empty());
    report.extend_findings(findings);
    if let Some((a, b)) = range {
        let sizes: Vec<usize> = (a..=b).collect();
        let slope = cost_growth_exponent(&sizes, spec.direct_trust)?;
        report.metric("growth_range", format!("{a}..{b}"));
        report.metric("growth_exponent", slope);
    }
    Ok((report, doc))
}

/// Translates a body given as words of vocabulary `from`.
pub fn translate(doc: &ModelDocument, from: &str, to: &str, words: &[String]) -> Result<Report, CommandError> {
    let vf = doc.vocabulary(from).ok_or_else(|| CommandError::UnknownVocabulary(from.into()))?;
    let vt = doc.vocabulary(to).ok_or_else(|| CommandError::UnknownVocabulary(to.into()))?;
    let l = matrix_of(doc, from, to).ok_or_else(|| LanguageError::MissingTranslation {
        from: from.into(),
        to: to.into(),
    })?;
    let v = vf.vector(words)?;
    let out = apply_matrix(&v, &l)?;
    let c = classify(&l);
    let mut report = Report::new("translate");
    report.metric("input", vf.render(&v));
    report.metric("output", vt.render(&out));
    report.metric("class", c.class);
    report.metric("rank", c.rank);
    if let Some(back) = matrix_of(doc, to, from) {
        report.verdict("round_trip", unitarity_check(&l, &back)?);
    }
    Ok(report)
}

/// Idempotence, convergence and fixed points of one operator.
pub fn converge(doc: &ModelDocument, name: &str) -> Result<Report, CommandError> {
    let model = Model::resolve(doc)?;
    let op = model
        .operators
        .iter()
        .find(|o| o.name() == name)
        .ok_or_else(|| CommandError::UnknownOperator(name.into()))?;
    let v = op.is_convergent(op.space().len())?;
    let idempotent = op.is_idempotent();
    let mut report = Report::new("converge");
    report.metric("operator", name);
    report.metric("states", op.space().len());
    report.metric("fixed_points", op.fixed_points());
    let orbits: BTreeMap<&str, Option<usize>> = op
        .space()
        .labels()
        .iter()
        .map(String::as_str)
        .zip(v.orbit_lengths.iter().copied())
        .collect();
    report.metric("orbit_lengths", &orbits);
    report.verdict("idempotent", idempotent);
    report.verdict("convergent", v.convergent);
    if !idempotent {
        report.extend_findings([Finding::info(
            FindingCode::NonIdempotentOperator,
            [],
            format!("operator `{name}` is not idempotent"),
        )]);
    }
    if !v.convergent {
        let stuck: Vec<&str> = orbits.iter().filter(|(_, l)| l.is_none()).map(|(q, _)| *q).collect();
        report.extend_findings([Finding::error(
            FindingCode::NonConvergentOperator,
            [],
            format!("operator `{name}` never settles from states {stuck:?}"),
        )]);
    }
    Ok(report)
}
