//! Exit codes and output of the `qualia` binary.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn qualia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qualia")).args(args).output().unwrap()
}

fn bundled(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn temp_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn strict_run_of_bundled_scenarios_exits_zero() {
    for name in ["scenario1.qs", "scenario2.qs"] {
        let out = qualia(&["run", &bundled(name), "--strict", "--seed", "7"]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(stdout(&out).lines().any(|l| l.starts_with("step 1 ")));
    }
}

#[test]
fn mismatch_exits_one() {
    let f = temp_file("goal g \"x\" priority 1\nstage g.a perceive+decide \"look\"\nexpect g.a states 6,2\n");
    let out = qualia(&["run", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("g.a"));
}

#[test]
fn strict_requires_every_stage_expected() {
    let f = temp_file("goal g \"x\" priority 1\nstage g.a act \"a\"\nstage g.b act \"b\"\nexpect g.a states 5\n");
    let path = f.path().to_str().unwrap();
    assert_eq!(qualia(&["run", path]).status.code(), Some(0));
    assert_eq!(qualia(&["run", path, "--strict"]).status.code(), Some(1));
}

#[test]
fn parse_error_exits_two_with_position() {
    let f = temp_file("goal g \"x\" priority 1.5\n");
    let out = qualia(&["run", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1, column 21"));
    assert_eq!(qualia(&["validate", f.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn validate_reports_counts() {
    let out = qualia(&["validate", &bundled("scenario1.qs")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("5 goal(s), 10 stage(s)"), "{}", stdout(&out));
}

#[test]
fn validate_flags_static_disagreement() {
    let f = temp_file("goal g \"x\" priority 1\nstage g.a act \"a\"\nexpect g.a states 6\n");
    let out = qualia(&["validate", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("g.a: expected [6]"));
}

#[test]
fn trace_file_and_diff() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.trace");
    let b = dir.path().join("b.trace");
    let sc = bundled("scenario2.qs");
    for (path, seed) in [(&a, "1"), (&b, "2")] {
        let out = qualia(&["run", &sc, "--seed", seed, "--trace", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let out = qualia(&["diff", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let text = std::fs::read_to_string(&a).unwrap();
    let swapped = text.replacen("states=[5,6]", "states=[6,5]", 1);
    std::fs::write(&b, swapped).unwrap();
    let out = qualia(&["diff", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("position 1"), "{}", stdout(&out));

    let truncated: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
    std::fs::write(&b, truncated).unwrap();
    let out = qualia(&["diff", b.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("length differs by -2"), "{}", stdout(&out));

    std::fs::write(&b, "step 1 g.a states=[11]\n").unwrap();
    assert_eq!(
        qualia(&["diff", a.to_str().unwrap(), b.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn json_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sc = bundled("scenario1.qs");
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("{i}.json"))).collect();
    for p in &paths {
        qualia(&["run", &sc, "--seed", "5", "--json", p.to_str().unwrap()]);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
}

#[test]
fn config_file_is_applied_and_checked() {
    let sc = bundled("scenario1.qs");
    let good = temp_file("memory.capacity = 3\n");
    let out = qualia(&["run", &sc, "--config", good.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let bad = temp_file("memory.capacity = 0\nemotion.decay = 2\n");
    let out = qualia(&["run", &sc, "--config", bad.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repl_reads_commands_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qualia"))
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"goal g \"x\" priority 1\nstage g.a communicate+emote \"talk\"\nstimulus fear=1\nbogus\nrun\nrecall talk\nquit\nstatus\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("step 1 g.a states=[6,8]"), "{text}");
    assert!(text.contains("error: unknown command `bogus`"), "{text}");
    assert!(text.contains("salience 0.750"), "{text}");
    assert!(!text.contains("tick 1"), "status after quit must not run: {text}");
}
