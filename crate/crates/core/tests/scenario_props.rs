//! Property tests over randomly generated scenario scripts and traces.

use proptest::prelude::*;
use qualia_core::registry::{StateSeq, Verb};
use qualia_core::runner::{diff_trace, run_scenario};
use qualia_core::scenario::parse_scenario;
use qualia_core::StageRef;

fn verb_name(i: usize) -> &'static str {
    Verb::ALL[i].as_str()
}

fn action() -> impl Strategy<Value = String> {
    (
        0..Verb::ALL.len(),
        proptest::collection::btree_set(0..Verb::ALL.len(), 0..4),
    )
        .prop_map(|(v, mods)| {
            let mut s = verb_name(v).to_string();
            for m in mods.into_iter().filter(|&m| m != v) {
                s.push('+');
                s.push_str(verb_name(m));
            }
            s
        })
}

fn note() -> impl Strategy<Value = String> {
    "[a-z \"#\\\\]{0,12}".prop_map(|s| s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}

fn event() -> impl Strategy<Value = String> {
    prop_oneof![
        (
            prop::sample::select(vec!["vision", "audio", "touch", "other"]),
            "[a-z][a-z-]{0,6}",
            unit()
        )
            .prop_map(|(m, l, c)| format!("percept {m} {l} conf {c}")),
        proptest::collection::vec(
            (
                prop::sample::select(vec!["fear", "joy", "hope", "anger", "sadness", "surprise"]),
                unit()
            ),
            1..3
        )
        .prop_map(|parts| {
            let parts: Vec<_> = parts.into_iter().map(|(e, v)| format!("{e}={v}")).collect();
            format!("stimulus {}", parts.join(","))
        }),
        (prop::sample::select(vec!["pain", "hunger", "fatigue"]), unit())
            .prop_map(|(k, v)| format!("instinct {k}={v}")),
        prop::sample::select(vec!["terminal success", "terminal failure"]).prop_map(str::to_string),
    ]
}

#[derive(Debug, Clone)]
struct StageSpec {
    action: String,
    channel: Option<&'static str>,
    memorable: Option<bool>,
    note: String,
    events: Vec<String>,
    expect: Option<Vec<i64>>,
}

fn stage() -> impl Strategy<Value = StageSpec> {
    (
        action(),
        proptest::option::of(prop::sample::select(vec!["vision", "audio", "touch"])),
        proptest::option::of(any::<bool>()),
        note(),
        proptest::collection::vec(event(), 0..3),
        proptest::option::of(
            Just((1..=10i64).collect::<Vec<_>>())
                .prop_shuffle()
                .prop_flat_map(|ids| (1..4usize).prop_map(move |n| ids[..n].to_vec())),
        ),
    )
        .prop_map(|(action, channel, memorable, note, events, expect)| StageSpec {
            action,
            channel,
            memorable,
            note,
            events,
            expect,
        })
}

fn script() -> impl Strategy<Value = String> {
    (
        proptest::option::of(2..9i64),
        proptest::collection::vec((unit(), proptest::collection::vec(stage(), 1..4)), 1..4),
        any::<bool>(),
    )
        .prop_map(|(capacity, goals, halt)| {
            let mut s = String::from("scenario \"random # run\"\n");
            if let Some(c) = capacity {
                s.push_str(&format!("config memory.capacity={c}\n"));
            }
            for (gi, (priority, stages)) in goals.iter().enumerate() {
                s.push_str(&format!("goal g{gi} \"goal {gi}\" priority {priority}\n"));
                for (si, st) in stages.iter().enumerate() {
                    s.push_str(&format!("stage g{gi}.s{si} {}", st.action));
                    if let Some(c) = st.channel {
                        s.push_str(&format!(" channel={c}"));
                    }
                    if let Some(m) = st.memorable {
                        s.push_str(&format!(" memorable={m}"));
                    }
                    s.push_str(&format!(" \"{}\"  # trailing comment\n", st.note));
                }
                for (si, st) in stages.iter().enumerate() {
                    for e in &st.events {
                        s.push_str(&format!("event at g{gi}.s{si} {e}\n"));
                    }
                    if let Some(ids) = &st.expect {
                        let ids: Vec<_> = ids.iter().map(i64::to_string).collect();
                        s.push_str(&format!("expect g{gi}.s{si} states {}\n", ids.join(",")));
                    }
                }
            }
            if halt {
                s.push_str("halt\n");
            }
            s
        })
}

fn trace() -> impl Strategy<Value = Vec<(StageRef, StateSeq)>> {
    proptest::collection::vec(
        (
            "[a-c]",
            "[a-d]",
            Just((1..=10i64).collect::<Vec<_>>()).prop_shuffle(),
            1..5usize,
        )
            .prop_map(|(g, l, ids, n)| (StageRef::new(g, l), StateSeq::from_ids(&ids[..n]).unwrap())),
        0..15,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_display_parse_round_trips(text in script()) {
        let first = parse_scenario(&text).unwrap();
        let canonical = first.to_string();
        let second = parse_scenario(&canonical).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(canonical, second.to_string());
    }

    #[test]
    fn runs_are_referentially_transparent(text in script(), seed in any::<u64>()) {
        let sc = parse_scenario(&text).unwrap();
        let a = run_scenario(&sc, seed);
        let b = run_scenario(&sc, seed);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.to_json(), b.to_json()),
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "one run failed, the other did not"),
        }
    }

    #[test]
    fn self_diff_is_empty(t in trace()) {
        prop_assert!(diff_trace(&t, &t).is_empty());
    }

    #[test]
    fn truncation_shows_as_negative_delta(t in trace(), cut in 0usize..15) {
        let cut = cut.min(t.len());
        let d = diff_trace(&t[..t.len() - cut], &t);
        prop_assert!(d.mismatches.is_empty());
        prop_assert_eq!(d.length_delta, -(cut as i64));
    }

    #[test]
    fn swapped_pair_is_one_mismatch(t in trace(), i in 0usize..15) {
        prop_assume!(!t.is_empty());
        let i = i % t.len();
        let mut other = t.clone();
        let ids: Vec<i64> = t[i].1.ids().into_iter().rev().map(i64::from).collect();
        prop_assume!(ids.len() > 1);
        other[i].1 = StateSeq::from_ids(&ids).unwrap();
        let d = diff_trace(&other, &t);
        prop_assert_eq!(d.mismatches.len(), 1);
        prop_assert_eq!(d.mismatches[0].position, i);
    }
}
