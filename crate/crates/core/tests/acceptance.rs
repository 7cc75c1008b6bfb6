//! One line per acceptance criterion. Runs without the libtest harness so
//! the verdict table is always printed; exits nonzero if any line fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use promisekit::commands;
use promisekit::composition::{
    chain_cost, detect_bootstrap_deadlock, gen_proxy_chain, log_log_fit, verify_continuity, ChainSpec,
};
use promisekit::convergence::{Operator, StateSpace};
use promisekit::dynamics::{self, spectrum_entropy, BindingRef, ChannelSpec, Mode, OutcomeSpectrum, Sampling, SimConfig};
use promisekit::finding::FindingCode;
use promisekit::language::{classify, translate, unitarity_check, TranslationClass, TranslationMatrix, Vocabulary};
use promisekit::model::{emit, load, parse};
use promisekit::promise::{agent, Body, Promise, PromiseGraph};
use promisekit::trust::{kinetic_cost, sampling_rate, RiskPolicy, TrustState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn beta() -> Vocabulary {
    Vocabulary::new("beta", ["send", "receive", "seek", "forward", "back"]).unwrap()
}

fn beta_prime() -> Vocabulary {
    Vocabulary::new("beta_prime", ["put", "get", "append"]).unwrap()
}

/// The 3×5 matrix as printed: rows put, get, append over columns send,
/// receive, seek, forward, back.
const PRINTED: [[u64; 5]; 3] = [[1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [1, 0, 1, 1, 0]];

fn printed_forward() -> TranslationMatrix {
    // beta_prime -> beta: one column per source word.
    let entries = (0..5).map(|r| (0..3).map(|c| PRINTED[c][r]).collect()).collect();
    TranslationMatrix::new(&beta_prime(), &beta(), entries).unwrap()
}

fn translation_example() -> Outcome {
    let (b, bp) = (beta(), beta_prime());
    let l = printed_forward();
    let expected = [
        ("put", vec!["send"]),
        ("get", vec!["receive"]),
        ("append", vec!["seek", "forward", "send"]),
    ];
    for (word, target) in expected {
        let got = translate(&bp.unit(word).unwrap(), &l).unwrap();
        let want = b.vector(target.iter()).unwrap();
        ensure(got == want, || format!("{word} -> {}, expected {}", b.render(&got), b.render(&want)))?;
    }
    let as_printed = TranslationMatrix::new(&b, &bp, PRINTED.iter().map(|r| r.to_vec()).collect()).unwrap();
    for m in [&l, &as_printed] {
        let c = classify(m);
        ensure(c.class == TranslationClass::OneWay, || format!("{}x{} classified {}", c.rows, c.cols, c.class))?;
    }
    Ok("PUT→SEND, GET→RECEIVE, APPEND→SEEK+FORWARD+SEND; 3x5 and 5x3 both one-way".into())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn unitarity() -> Outcome {
    let mut pairs = 0;
    for n in 1..=6 {
        let v = Vocabulary::new("v", (0..n).map(|i| format!("w{i}"))).unwrap();
        let u = Vocabulary::new("u", (0..n).map(|i| format!("x{i}"))).unwrap();
        for p in permutations(n) {
            // forth sends word j to word p[j]; back undoes it.
            let mut forth = vec![vec![0u64; n]; n];
            let mut back = vec![vec![0u64; n]; n];
            for (j, &pj) in p.iter().enumerate() {
                forth[pj][j] = 1;
                back[j][pj] = 1;
            }
            let f = TranslationMatrix::new(&v, &u, forth).unwrap();
            let b = TranslationMatrix::new(&u, &v, back).unwrap();
            ensure(unitarity_check(&f, &b).unwrap(), || format!("permutation {p:?} failed its inverse"))?;
            pairs += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let forth = printed_forward();
    for k in 0..100 {
        let entries = (0..3).map(|_| (0..5).map(|_| rng.gen_range(0..3)).collect()).collect();
        let back = TranslationMatrix::new(&beta(), &beta_prime(), entries).unwrap();
        ensure(!unitarity_check(&forth, &back).unwrap(), || format!("candidate {k} inverted the matrix"))?;
    }
    Ok(format!("{pairs} permutation pairs true; 100 random right-candidates false"))
}

fn proxy_chain() -> Outcome {
    // mp1..mp10: direction and body as printed.
    let mp = [
        ("S", "C", "S(P1(P2(P3)))"),
        ("S", "P1", "S"),
        ("P1", "S", "P1(P2(P3))"),
        ("P1", "C", "P1(S)∧(P2(P3))"),
        ("P1", "P2", "P1(S)"),
        ("P2", "P1", "P2(P3)"),
        ("P2", "C", "P2(P1(S))∧(P3)"),
        ("P2", "P3", "P2(P1(S))"),
        ("P3", "P2", "P3"),
        ("P3", "C", "P3(P2(P1(S)))"),
    ];
    let chain = gen_proxy_chain(ChainSpec::new(3));
    ensure(chain.lines.len() == mp.len(), || format!("{} lines", chain.lines.len()))?;
    for (k, (line, (from, to, body))) in chain.lines.iter().zip(mp).enumerate() {
        let offer = &chain.graph.promises()[line.offer];
        let accept = &chain.graph.promises()[line.accept];
        let words: Vec<&str> = offer.body.words().iter().map(String::as_str).collect();
        ensure(
            offer.promiser.as_str() == from && offer.promisee.as_str() == to && words == [body],
            || format!("mp{}: got {offer}", k + 1),
        )?;
        ensure(
            accept.promiser.as_str() == to && accept.promisee.as_str() == from && accept.body.words() == offer.body.words(),
            || format!("mp{}: acceptance {accept}", k + 1),
        )?;
    }
    // Symbol count of the printed bodies, by hand: 4+1+3+4+2+2+4+3+1+4.
    ensure(chain_cost(&chain.graph) == 28, || format!("cost {}", chain_cost(&chain.graph)))?;
    for n in 0..=64 {
        let lines = gen_proxy_chain(ChainSpec::new(n)).lines.len();
        ensure(lines == 3 * n + 1, || format!("N={n}: {lines} lines"))?;
    }
    let points: Vec<(f64, f64)> = [4usize, 8, 16, 32, 64]
        .iter()
        .map(|&n| (n as f64, chain_cost(&gen_proxy_chain(ChainSpec::new(n)).graph) as f64))
        .collect();
    let (slope, _) = log_log_fit(&points).unwrap();
    ensure((slope - 2.0).abs() <= 0.15, || format!("slope {slope:.4}"))?;
    Ok(format!("mp1..mp10 exact; 3N+1 for N<=64; slope {slope:.4}"))
}

fn continuity_and_bootstrap() -> Outcome {
    for n in 0..=64 {
        for spec in [ChainSpec::new(n), ChainSpec::new(n).with_direct_trust()] {
            let g = gen_proxy_chain(spec).graph;
            ensure(verify_continuity(&g).is_empty(), || format!("continuity fails for {spec:?}"))?;
        }
    }
    let loop_graph = |s_cond: bool, f_cond: bool| {
        let mut g = PromiseGraph::with_agents([agent("S"), agent("R")]).unwrap();
        let mut s = Promise::offer(agent("S"), agent("R"), Body::of(&["b"]));
        if s_cond {
            s = s.given(Body::of(&["payment"]));
        }
        let mut f = Promise::offer(agent("R"), agent("S"), Body::of(&["payment"]));
        if f_cond {
            f = f.given(Body::of(&["b"]));
        }
        g.insert(s).unwrap();
        g.insert(Promise::accept(agent("R"), agent("S"), Body::of(&["b"]))).unwrap();
        g.insert(f).unwrap();
        g.insert(Promise::accept(agent("S"), agent("R"), Body::of(&["payment"]))).unwrap();
        g
    };
    let deadlock = |g: &PromiseGraph| detect_bootstrap_deadlock(g).iter().any(|f| f.code == FindingCode::BootstrapDeadlock);
    ensure(deadlock(&loop_graph(true, true)), || "remuneration loop not flagged".into())?;
    ensure(!deadlock(&loop_graph(false, true)), || "unconditional server still flagged".into())?;
    ensure(!deadlock(&loop_graph(true, false)), || "unconditional payer still flagged".into())?;
    Ok("all chains N<=64 continuous; loop flagged, cleared by either unconditional offer".into())
}

fn trust_kinetics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    let mut idle = 0;
    for _ in 0..10_000 {
        let v_r = rng.gen_range(0.0..10.0);
        let v_s = rng.gen_range(0.0..10.0);
        let rho = rng.gen_range(0.01..10.0);
        let risk = rng.gen_range(0.0..5.0);
        let p = RiskPolicy::new(rho, risk).unwrap();
        let v = sampling_rate(v_r, v_s, &p);
        let lhs = kinetic_cost(v, &p) + risk;
        let rhs = f64::max(risk, v_r - v_s);
        let rel = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        ensure(rel <= 1e-9, || format!("identity off by {rel:e} at V_R={v_r} V_S={v_s} rho={rho} risk={risk}"))?;
        if v_r - v_s <= risk {
            idle += 1;
            ensure(v == 0.0, || format!("v={v} below the risk threshold"))?;
        }
    }
    Ok(format!("10^4 points, worst relative error {worst:.2e}; {idle} idle points with v=0"))
}

fn pair() -> PromiseGraph {
    let mut g = PromiseGraph::with_agents([agent("S"), agent("R")]).unwrap();
    g.insert(Promise::offer(agent("S"), agent("R"), Body::of(&["data"]))).unwrap();
    g.insert(Promise::accept(agent("R"), agent("S"), Body::of(&["data"]))).unwrap();
    g
}

fn nyquist() -> Outcome {
    let b = BindingRef { offer: 0, accept: 1 };
    let g = pair();
    let faithful = ChannelSpec::new(b, 1.0, Sampling::Fixed(2.5), 1.0).unwrap();
    let cfg = SimConfig::new(10_000, 1, Mode::Deterministic).unwrap();
    let out = dynamics::run(&g, &TrustState::new(), &Default::default(), &[faithful], &cfg).unwrap();
    let s = &out.channels[0];
    ensure(s.missed == 0 && s.emitted == 10_000, || format!("{} missed of {}", s.missed, s.emitted))?;
    let critical = ChannelSpec::new(b, 1.0, Sampling::Fixed(1.0), 1.0).unwrap();
    let cfg = SimConfig::new(100_000, 2024, Mode::Stochastic).unwrap();
    let out = dynamics::run(&g, &TrustState::new(), &Default::default(), &[critical], &cfg).unwrap();
    let s = &out.channels[0];
    let rate = s.missed as f64 / s.emitted as f64;
    ensure(s.emitted == 100_000, || format!("{} emissions", s.emitted))?;
    ensure((rate - 0.5).abs() <= 0.02, || format!("miss rate {rate:.4}"))?;
    Ok(format!("f>2B: 0 misses in 10^4 ticks; f=B: miss rate {rate:.4} over 10^5 emissions"))
}

fn entropy() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=1024 {
        let h = spectrum_entropy(&OutcomeSpectrum::uniform(n).unwrap());
        let err = (h - (n as f64).log2()).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12, || format!("N={n}: H={h}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2usize, 4, 8] {
        let top = spectrum_entropy(&OutcomeSpectrum::uniform(n).unwrap());
        for _ in 0..1000 {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = w.iter().sum();
            let labels = (0..n).map(|i| format!("o{i}")).collect();
            let s = OutcomeSpectrum::new(labels, w.iter().map(|x| x / total).collect()).unwrap();
            let h = spectrum_entropy(&s);
            ensure(h <= top + 1e-12, || format!("N={n}: random H={h} > uniform {top}"))?;
        }
    }
    Ok(format!("uniform N<=1024 worst error {worst:.1e}; uniform maximal in 3x1000 draws"))
}

/// Walks each orbit for up to |Q| steps.
fn brute_force_orbits(table: &[usize]) -> Vec<Option<usize>> {
    (0..table.len())
        .map(|start| {
            let mut q = start;
            for steps in 0..=table.len() {
                if table[q] == q {
                    return Some(steps);
                }
                q = table[q];
            }
            None
        })
        .collect()
}

fn convergence() -> Outcome {
    let space = StateSpace::numbered(4).unwrap();
    let (mut convergent, mut idempotent) = (0, 0);
    for code in 0..256usize {
        let table: Vec<usize> = (0..4).map(|i| (code >> (2 * i)) & 3).collect();
        let op = Operator::from_table("f", space.clone(), table.clone()).unwrap();
        let verdict = op.is_convergent(4).unwrap();
        let oracle = brute_force_orbits(&table);
        ensure(verdict.orbit_lengths == oracle, || format!("{table:?}: {:?} vs {oracle:?}", verdict.orbit_lengths))?;
        ensure(verdict.convergent == oracle.iter().all(Option::is_some), || format!("{table:?} verdict"))?;
        convergent += usize::from(verdict.convergent);
        if op.is_idempotent() {
            idempotent += 1;
            ensure(
                verdict.convergent && verdict.orbit_lengths.iter().all(|l| l.is_some_and(|l| l <= 1)),
                || format!("idempotent {table:?} not one-step convergent"),
            )?;
        }
    }
    Ok(format!("256 maps agree with orbit walk; {convergent} convergent, {idempotent} idempotent, 0 exceptions"))
}

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn determinism_and_round_trip() -> Outcome {
    let mut count = 0;
    let mut entries: Vec<_> = std::fs::read_dir(models_dir()).map_err(|e| e.to_string())?.flatten().collect();
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let path = e.path();
        if path.extension().is_none_or(|x| x != "json") {
            continue;
        }
        let doc = load(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let text = emit(&doc);
        let back = parse(&text).map_err(|e| e.to_string())?;
        ensure(back == doc && emit(&back) == text, || format!("{} does not round-trip", path.display()))?;
        count += 1;
    }
    ensure(count > 0, || "no bundled models found".into())?;
    let doc = load(models_dir().join("trusted_channel.json")).map_err(|e| e.to_string())?;
    for mode in [Mode::Deterministic, Mode::Stochastic] {
        let (r1, l1) = commands::simulate(&doc, 500, 99, mode).map_err(|e| e.to_string())?;
        let (r2, l2) = commands::simulate(&doc, 500, 99, mode).map_err(|e| e.to_string())?;
        ensure(l1.to_tsv() == l2.to_tsv(), || format!("{mode:?} logs differ"))?;
        ensure(r1.to_json() == r2.to_json(), || format!("{mode:?} reports differ"))?;
    }
    Ok(format!("{count} bundled models round-trip; repeated seeded runs byte-identical"))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("translation example", Duration::from_secs(1), translation_example),
        ("unitarity", Duration::from_secs(5), unitarity),
        ("proxy chain", Duration::from_secs(5), proxy_chain),
        ("continuity and bootstrap", Duration::from_secs(1), continuity_and_bootstrap),
        ("trust kinetics", Duration::from_secs(1), trust_kinetics),
        ("nyquist", Duration::from_secs(10), nyquist),
        ("entropy", Duration::from_secs(2), entropy),
        ("convergence", Duration::from_secs(2), convergence),
        ("determinism and round-trip", Duration::MAX, determinism_and_round_trip),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (status, detail) = match result {
            Ok(d) if took <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over budget {budget:?}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {name:<28} {:>9.3}s  {detail}", took.as_secs_f64());
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
