//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned.
//!
//! Lines go straight to stderr so they show up even when the harness
//! captures test output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

use qualia_core::affect::{implications_of, update_emotion, Attribute, Implication};
use qualia_core::cognition::{BiasedWalker, KnowledgeGraph};
use qualia_core::manager::MemoryOrigin;
use qualia_core::memory::MemoryStores;
use qualia_core::perception::{fuse, Modality, Percept};
use qualia_core::registry::{StateSeq, StepKind, Verb};
use qualia_core::runner::run_scenario;
use qualia_core::scenario::parse_scenario;
use qualia_core::{Emotion, EmotionVector, PersonalityProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact match, zero tolerance.
const FLIGHT: [&[u8]; 10] = [
    &[2, 6],
    &[2, 5],
    &[2, 6],
    &[2, 6, 5],
    &[2, 6],
    &[2, 5, 8, 10],
    &[5, 6],
    &[5, 6, 8, 10],
    &[2, 5, 6],
    &[7, 8, 6, 2, 5],
];
const PHONE: [&[u8]; 10] = [
    &[5, 6],
    &[6, 8, 10, 5],
    &[6, 8, 10],
    &[2, 9],
    &[2, 9, 3],
    &[1, 3, 7, 9],
    &[6, 8],
    &[5, 6, 8],
    &[6],
    &[8],
];

const RANDOM_SCENARIOS: u64 = 150;
const WALK_STEPS: usize = 100_000;
const WALK_TOLERANCE: f64 = 0.01;
const FEAR_BETA: f64 = 10.0;
const BOUNDS_SEQUENCES: u64 = 500;

type Verdict = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios")
}

fn report(id: &str, title: &str, verdict: &Verdict) {
    let (tag, detail) = match verdict {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let _ = writeln!(std::io::stderr(), "{tag} {id} {title}: {detail}");
}

fn fidelity(file: &str, reference: &[&[u8]], must_end_in_joy: bool) -> Verdict {
    let path = scenarios_dir().join(file);
    let status = Command::new(env!("CARGO_BIN_EXE_qualia"))
        .args(["run", path.to_str().unwrap(), "--strict"])
        .output()
        .map_err(|e| e.to_string())?
        .status;
    if status.code() != Some(0) {
        return Err(format!("`qualia run {file} --strict` exited {status}"));
    }
    let sc = parse_scenario(&fs::read_to_string(&path).unwrap()).map_err(|e| e.to_string())?;
    let rep = run_scenario(&sc, 0).map_err(|e| e.to_string())?;
    let got: Vec<Vec<u8>> = rep.stage_states().into_iter().map(|(_, s)| s.ids()).collect();
    let want: Vec<Vec<u8>> = reference.iter().map(|s| s.to_vec()).collect();
    if got != want {
        return Err(format!("sequences differ: got {got:?}"));
    }
    if must_end_in_joy {
        let last = rep.expressions.last().ok_or("no expressions")?;
        let last_step = rep.steps.last().ok_or("empty trace")?;
        if last.emotion != Some(Emotion::Joy) || last_step.step.states.ids() != [8] {
            return Err(format!(
                "run ends with {:?} after {}",
                last.emotion, last_step.step.states
            ));
        }
    }
    Ok(format!(
        "exit 0 under --strict, {}/{} sequences exact (tolerance 0){}",
        got.len(),
        want.len(),
        if must_end_in_joy {
            ", final expression joy at [8]"
        } else {
            ""
        }
    ))
}

fn table() -> Verdict {
    use Implication::{B, D, M};
    // (name, quality, state, instinct, implications)
    let rows: [(&str, bool, bool, bool, &[Implication]); 12] = [
        ("personality", true, false, false, &[D, B, M]),
        ("intelligence", true, false, false, &[D, B]),
        ("creativity", true, false, false, &[D, B]),
        ("knowledge", true, true, false, &[D, B, M]),
        ("memory", true, true, false, &[D, B, M]),
        ("extra-sensory perception", true, true, false, &[D]),
        ("emotions", false, true, false, &[D, B]),
        ("expression", false, true, false, &[B]),
        ("motor control", false, true, false, &[B]),
        ("pain", false, false, true, &[B, M]),
        ("hunger", false, false, true, &[B, M]),
        ("bodily functions", false, false, true, &[B, M]),
    ];
    if Attribute::ALL.len() != rows.len() {
        return Err(format!("{} attributes, expected {}", Attribute::ALL.len(), rows.len()));
    }
    for (name, q, s, i, imp) in rows {
        let a: Attribute = name.parse().map_err(|e| format!("{name}: {e}"))?;
        let p = implications_of(a);
        let mut got = p.implications.clone();
        got.sort();
        let mut want = imp.to_vec();
        want.sort();
        if (p.quality, p.state, p.instinct) != (q, s, i) || got != want {
            return Err(format!("row `{name}` differs: {p:?}"));
        }
    }
    Ok("12/12 rows match on quality/state/instinct flags and D/B/M".into())
}

fn random_script(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::from("scenario \"random\"\n");
    if rng.gen_bool(0.5) {
        s.push_str(&format!("config instinct.hunger.rate={}\n", rng.gen_range(0.05..0.2)));
    }
    let goals = rng.gen_range(1..=3);
    for g in 0..goals {
        s.push_str(&format!(
            "goal g{g} \"goal {g}\" priority {}\n",
            rng.gen_range(0.1..=1.0)
        ));
        let stages = rng.gen_range(1..=4);
        let mut events = String::new();
        for st in 0..stages {
            let verb = Verb::ALL[rng.gen_range(0..Verb::ALL.len())];
            let mut action = verb.as_str().to_string();
            for _ in 0..rng.gen_range(0..3) {
                let m = Verb::ALL[rng.gen_range(0..Verb::ALL.len())];
                if m != verb && !action.split('+').any(|x| x == m.as_str()) {
                    action.push('+');
                    action.push_str(m.as_str());
                }
            }
            s.push_str(&format!("stage g{g}.s{st} {action} \"step {st}\"\n"));
            if rng.gen_bool(0.4) {
                let e = Emotion::ALL[rng.gen_range(0..Emotion::ALL.len())];
                events.push_str(&format!(
                    "event at g{g}.s{st} stimulus {e}={}\n",
                    rng.gen_range(0.0..=1.0)
                ));
            }
            if rng.gen_bool(0.3) {
                let k = ["pain", "hunger", "fatigue"][rng.gen_range(0..3)];
                events.push_str(&format!(
                    "event at g{g}.s{st} instinct {k}={}\n",
                    rng.gen_range(0.5..=1.0)
                ));
            }
            if rng.gen_bool(0.1) {
                let r = if rng.gen_bool(0.5) { "success" } else { "failure" };
                events.push_str(&format!("event at g{g}.s{st} terminal {r}\n"));
            }
        }
        s.push_str(&events);
    }
    s
}

fn terminal_contract() -> Verdict {
    let mut outcomes = 0;
    let mut challenges = 0;
    let mut spikes = 0;
    for seed in 0..RANDOM_SCENARIOS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = random_script(&mut rng);
        let sc = parse_scenario(&text).map_err(|e| format!("scenario {seed}: {e}"))?;
        let rep = run_scenario(&sc, seed).map_err(|e| format!("scenario {seed}: {e}"))?;
        for o in &rep.outcomes {
            outcomes += 1;
            let closing = format!("{} {}", o.goal_id, o.result);
            let expressed = rep
                .expressions
                .iter()
                .filter(|e| e.goal_id == o.goal_id && e.payload.starts_with(&closing))
                .count();
            let writes = rep
                .memory_log
                .iter()
                .filter(|m| m.goal_id == o.goal_id && m.origin == MemoryOrigin::Terminal)
                .count();
            if expressed < 1 || writes != 1 {
                return Err(format!(
                    "scenario {seed} goal {}: {expressed} expression(s), {writes} terminal write(s)",
                    o.goal_id
                ));
            }
        }
        for sg in &sc.goals {
            let id = &sg.goal.id;
            let steps: Vec<_> = rep.trace().filter(|s| &s.goal_id == id).collect();
            challenges += steps.iter().filter(|s| s.kind == StepKind::Challenge).count();
            // a challenge never consumes a stage: executed stages are a prefix of the plan
            let ran: Vec<&str> = steps
                .iter()
                .filter(|s| s.kind == StepKind::Stage)
                .map(|s| s.label.as_str())
                .collect();
            let planned: Vec<&str> = sg.means.steps.iter().map(|m| m.label.as_str()).collect();
            if !planned.starts_with(&ran) {
                return Err(format!("scenario {seed} goal {id}: ran {ran:?} of {planned:?}"));
            }
            // a scripted drive spike over threshold is attended before its stage runs
            for e in sc.events.iter().filter(|e| &e.at.goal == id) {
                let qualia_core::scenario::EventSpec::Instinct(_, level) = e.event else {
                    continue;
                };
                if level < 0.7 {
                    continue;
                }
                let Some(pos) = steps
                    .iter()
                    .position(|s| s.kind == StepKind::Stage && s.label == e.at.label)
                else {
                    continue;
                };
                spikes += 1;
                if pos == 0 || steps[pos - 1].kind != StepKind::Challenge {
                    return Err(format!("scenario {seed}: spike at {} not preempted", e.at));
                }
            }
        }
    }
    Ok(format!(
        "{RANDOM_SCENARIOS} random scenarios, {outcomes} outcomes each with >=1 expression and exactly 1 terminal write; \
         {challenges} challenge cycles, {spikes} scripted spikes all preempt their stage"
    ))
}

struct Dense {
    names: Vec<String>,
    fearful: Vec<bool>,
    w: Vec<Vec<f64>>,
}

fn dense(text: &str) -> Dense {
    let mut names = Vec::new();
    let mut fearful = Vec::new();
    let mut edges = Vec::new();
    for line in text.lines().map(|l| l.split('#').next().unwrap().trim()) {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.first() {
            Some(&"node") => {
                names.push(t[1].to_string());
                fearful.push(t.contains(&"affect=fear"));
            }
            Some(&"edge") => edges.push((t[1], t[2], t[3].parse::<f64>().unwrap())),
            _ => {}
        }
    }
    let at = |n: &str| names.iter().position(|x| x == n).unwrap();
    let mut w = vec![vec![0.0; names.len()]; names.len()];
    for (a, b, x) in edges {
        w[at(a)][at(b)] = x;
        w[at(b)][at(a)] = x;
    }
    Dense { names, fearful, w }
}

fn matrix(d: &Dense, bias: &[f64]) -> Vec<Vec<f64>> {
    d.w.iter()
        .map(|row| {
            let t: f64 = row.iter().zip(bias).map(|(w, b)| w * b).sum();
            row.iter().zip(bias).map(|(w, b)| w * b / t).collect()
        })
        .collect()
}

fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..20_000 {
        let mut next = vec![0.0; n];
        for u in 0..n {
            for v in 0..n {
                next[v] += pi[u] * 0.5 * (p[u][v] + f64::from(u8::from(u == v)));
            }
        }
        pi = next;
    }
    pi
}

fn transitions(g: &KnowledgeGraph, d: &Dense, emotion: EmotionVector, beta: f64, seed: u64) -> Vec<Vec<f64>> {
    let walker = BiasedWalker::new(g, "none", emotion, 0.0, beta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = walker.walk(&d.names[0], WALK_STEPS, &mut rng).unwrap().path;
    let idx: BTreeMap<&str, usize> = d.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut c = vec![vec![0.0; d.names.len()]; d.names.len()];
    for w in path.windows(2) {
        c[idx[w[0].as_str()]][idx[w[1].as_str()]] += 1.0;
    }
    c
}

fn walk_oracle() -> Verdict {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/graphs");
    let mut files: Vec<_> = fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    let mut graphs = 0;
    let mut worst: f64 = 0.0;
    let mut fear_case = None;
    for path in files.iter().filter(|p| p.extension().is_some_and(|x| x == "graph")) {
        let text = fs::read_to_string(path).unwrap();
        let d = dense(&text);
        if d.names.len() > 6 {
            continue;
        }
        graphs += 1;
        let g = KnowledgeGraph::parse(&text).map_err(|e| e.to_string())?;
        let p = matrix(&d, &vec![1.0; d.names.len()]);
        let c = transitions(&g, &d, EmotionVector::zero(), 0.0, 11);
        for u in 0..d.names.len() {
            let visits: f64 = c[u].iter().sum();
            for v in 0..d.names.len() {
                worst = worst.max((c[u][v] / visits - p[u][v]).abs());
            }
        }
        if let Some(f) = d.fearful.iter().position(|&x| x) {
            let plain = stationary(&p);
            let bias: Vec<f64> = d
                .fearful
                .iter()
                .map(|&x| if x { 1.0 + FEAR_BETA } else { 1.0 })
                .collect();
            let exact = stationary(&matrix(&d, &bias));
            let c = transitions(&g, &d, EmotionVector::single(Emotion::Fear, 1.0), FEAR_BETA, 5);
            let visits: Vec<f64> = (0..d.names.len())
                .map(|v| (0..d.names.len()).map(|u| c[u][v]).sum::<f64>() / WALK_STEPS as f64)
                .collect();
            let err = visits
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            fear_case = Some((plain[f], exact[f], visits[f], err));
        }
    }
    if graphs == 0 {
        return Err("no graphs with <= 6 nodes".into());
    }
    if worst > WALK_TOLERANCE {
        return Err(format!(
            "alpha=beta=0 worst transition error {worst:.4} > {WALK_TOLERANCE}"
        ));
    }
    let (plain, exact, seen, err) = fear_case.ok_or("no fear-linked graph in corpus")?;
    if exact <= plain || seen <= plain || err > WALK_TOLERANCE {
        return Err(format!(
            "fear node: unbiased {plain:.4}, exact {exact:.4}, walked {seen:.4}, worst err {err:.4}"
        ));
    }
    Ok(format!(
        "{graphs} graphs, {WALK_STEPS} steps each, worst transition error {worst:.4} <= {WALK_TOLERANCE}; \
         beta={FEAR_BETA} fear node visited {seen:.4} vs exact {exact:.4} (unbiased {plain:.4}), worst stationary error {err:.4}"
    ))
}

fn determinism() -> Verdict {
    for file in ["scenario1.qs", "scenario2.qs"] {
        let sc = parse_scenario(&fs::read_to_string(scenarios_dir().join(file)).unwrap()).map_err(|e| e.to_string())?;
        let a = run_scenario(&sc, 1).map_err(|e| e.to_string())?;
        let b = run_scenario(&sc, 1).map_err(|e| e.to_string())?;
        if a.to_json() != b.to_json() {
            return Err(format!("{file}: equal seeds gave different reports"));
        }
        let mut c = run_scenario(&sc, 2).map_err(|e| e.to_string())?;
        let mut a = a;
        a.thoughts.clear();
        c.thoughts.clear();
        c.seed = a.seed;
        if a.to_json() != c.to_json() {
            return Err(format!("{file}: a different seed changed more than thought paths"));
        }
    }
    Ok("both bundled scenarios byte-identical for equal seeds; seeds 1 vs 2 differ only in thoughts".into())
}

fn bounds() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checks = 0u64;
    for _ in 0..BOUNDS_SEQUENCES {
        let p = PersonalityProfile {
            neuroticism: rng.gen_range(0.0..=1.0),
            ..PersonalityProfile::default()
        };
        let mut e = EmotionVector::zero();
        let mut stores = MemoryStores::new(rng.gen_range(1..10), rng.gen_range(0.0..=1.0));
        for t in 0..50 {
            let mut s = EmotionVector::zero();
            for em in Emotion::ALL {
                s.set(em, rng.gen_range(0.0..=1.0));
            }
            e = update_emotion(&e, &s, &p, rng.gen_range(0.1..3.0), rng.gen_range(0.05..=1.0))
                .map_err(|x| x.to_string())?;
            if !Emotion::ALL.iter().all(|&em| (0.0..=1.0).contains(&e.get(em))) {
                return Err(format!("emotion out of [0,1]: {e:?}"));
            }
            stores.record_experience("event", &e, StateSeq::empty(), t);
            if stores.short_term().len() > stores.capacity() {
                return Err("short-term store over capacity".into());
            }
            checks += 2;
        }

        let modalities = [Modality::Vision, Modality::Audio, Modality::Touch, Modality::Other];
        let mut percepts = Vec::new();
        let mut last: Option<f64> = None;
        for &m in &modalities {
            percepts.push(Percept {
                modality: m,
                label: "x".into(),
                confidence: rng.gen_range(0.0..=1.0),
                tick: 0,
            });
            let fused = fuse(&percepts).map_err(|x| x.to_string())?;
            if fused.confidence > 1.0 || last.is_some_and(|l| fused.confidence < l) {
                return Err(format!(
                    "fusion not monotone or above 1: {last:?} -> {}",
                    fused.confidence
                ));
            }
            last = Some(fused.confidence);
            checks += 1;
        }
        let single = &percepts[..1];
        let once = fuse(single).map_err(|x| x.to_string())?;
        let twice = fuse(&[single[0].clone(), single[0].clone()]).map_err(|x| x.to_string())?;
        if once.confidence != single[0].confidence || twice.confidence != once.confidence {
            return Err("single-percept fusion not idempotent".into());
        }
        checks += 1;
    }
    Ok(format!(
        "{BOUNDS_SEQUENCES} random sequences, {checks} checks: emotions in [0,1], short-term <= capacity, fusion monotone and <= 1, single percept idempotent"
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 7] = [
        ("AC1", "connecting-flight trace fidelity", || {
            fidelity("scenario1.qs", &FLIGHT, false)
        }),
        ("AC2", "lost-phone trace fidelity", || {
            fidelity("scenario2.qs", &PHONE, true)
        }),
        ("AC3", "attribute table fidelity", table),
        ("AC4", "terminal contract and challenge preemption", terminal_contract),
        ("AC5", "walk oracle", walk_oracle),
        ("AC6", "determinism", determinism),
        ("AC7", "bounds and capacity", bounds),
    ];
    let mut failed = Vec::new();
    for (id, title, check) in criteria {
        let verdict = check();
        report(id, title, &verdict);
        if verdict.is_err() {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
