//! `qualia`: run scenario scripts, validate them, compare traces, or drive
//! the agent interactively.

use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qualia_core::registry::{validate_trace, RawStep, StateSeq};
use qualia_core::repl::Repl;
use qualia_core::runner::{check_expectations, diff_trace, parse_trace, Engine, TraceLine};
use qualia_core::scenario::{parse_scenario, Scenario, StageRef};
use qualia_core::{EngineConfig, KnowledgeGraph};

/// Exit codes.
const OK: u8 = 0;
const MISMATCH: u8 = 1;
const BAD_INPUT: u8 = 2;
const RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "qualia", version, about = "Deterministic affective-agent simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and check its trace against the script's `expect` lines.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the trace lines to this file.
        #[arg(long, value_name = "OUT")]
        trace: Option<PathBuf>,
        /// Write the full run report as JSON to this file.
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
        /// Require the whole stage trace to match the expectations, position
        /// by position, instead of only the stages that carry one.
        #[arg(long)]
        strict: bool,
        /// Engine configuration file (`key = value` lines).
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Knowledge graph file replacing the bundled one.
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
    },
    /// Parse a scenario, plan every goal and check expectations statically.
    Validate { file: PathBuf },
    /// Compare two trace files position by position.
    Diff {
        #[arg(value_name = "TRACE_A")]
        actual: PathBuf,
        #[arg(value_name = "TRACE_B")]
        expected: PathBuf,
    },
    /// Interactive session.
    Repl {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// An error paired with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: BAD_INPUT,
        error: error.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = read(path)?;
    parse_scenario(&text)
        .with_context(|| format!("{}", path.display()))
        .map_err(input)
}

fn engine(config: Option<&Path>, graph: Option<&Path>) -> Result<Engine, Failure> {
    let mut engine = Engine::bundled();
    if let Some(path) = config {
        engine.config = EngineConfig::parse(&read(path)?)
            .with_context(|| format!("{}", path.display()))
            .map_err(input)?;
    }
    if let Some(path) = graph {
        let g = KnowledgeGraph::parse(&read(path)?)
            .with_context(|| format!("{}", path.display()))
            .map_err(input)?;
        engine.graph = Arc::new(g);
    }
    Ok(engine)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(|error| Failure { code: RUNTIME, error })
}

#[allow(clippy::too_many_arguments)]
fn run(
    file: &Path,
    seed: u64,
    trace: Option<&Path>,
    json: Option<&Path>,
    strict: bool,
    config: Option<&Path>,
    graph: Option<&Path>,
) -> Result<u8, Failure> {
    let scenario = load_scenario(file)?;
    let engine = engine(config, graph)?;
    let report = engine.run(&scenario, seed).map_err(|e| match e {
        qualia_core::runner::RunError::Config(c) => input(c),
        other => Failure {
            code: RUNTIME,
            error: other.into(),
        },
    })?;
    print!("{}", report.render());
    if let Some(path) = trace {
        write(path, &report.trace_text())?;
    }
    if let Some(path) = json {
        write(path, &report.to_json())?;
    }
    if scenario.expected.is_empty() {
        if strict {
            eprintln!("no expectations in {}; nothing to check", file.display());
            return Ok(MISMATCH);
        }
        return Ok(OK);
    }
    let diff = check_expectations(&scenario, &report, strict);
    if diff.is_empty() {
        eprintln!("trace matches {} expectation(s)", scenario.expected.len());
        Ok(OK)
    } else {
        eprint!("trace mismatch:\n{}", diff.describe());
        Ok(MISMATCH)
    }
}

fn validate(file: &Path) -> Result<u8, Failure> {
    let scenario = load_scenario(file)?;
    let engine = Engine::bundled();
    scenario
        .apply_config(&engine.config)
        .and_then(|c| c.validate().map(|_| c))
        .with_context(|| format!("{}: config", file.display()))
        .map_err(input)?;
    let mut disagreements = 0;
    for g in &scenario.goals {
        for step in &g.means.steps {
            let at = StageRef::new(&g.goal.id, &step.label);
            let derived = engine
                .registry
                .derive(&step.action)
                .with_context(|| format!("{}: stage {at}", file.display()))
                .map_err(input)?;
            for x in scenario.expected.iter().filter(|x| x.at == at) {
                if x.states != derived {
                    disagreements += 1;
                    println!("{at}: expected [{}] but `{}` gives [{derived}]", x.states, step.action);
                }
            }
        }
    }
    println!(
        "{}: {} goal(s), {} stage(s), {} event(s), {} expectation(s)",
        file.display(),
        scenario.goals.len(),
        scenario.stage_count(),
        scenario.events.len(),
        scenario.expected.len()
    );
    Ok(if disagreements == 0 { OK } else { MISMATCH })
}

fn load_trace(path: &Path) -> Result<Vec<(StageRef, StateSeq)>, Failure> {
    let lines = parse_trace(&read(path)?)
        .with_context(|| format!("{}", path.display()))
        .map_err(input)?;
    let raw: Vec<RawStep> = lines
        .iter()
        .map(|l| RawStep {
            index: l.index,
            states: l.states.clone(),
        })
        .collect();
    let report = validate_trace(&raw);
    if !report.is_clean() {
        return Err(input(anyhow::anyhow!("{}: {:?}", path.display(), report.findings)));
    }
    lines
        .into_iter()
        .map(|l: TraceLine| {
            let seq = l.state_seq().map_err(input)?;
            Ok((l.at, seq))
        })
        .collect()
}

fn diff(actual: &Path, expected: &Path) -> Result<u8, Failure> {
    let a = load_trace(actual)?;
    let b = load_trace(expected)?;
    let d = diff_trace(&a, &b);
    if d.is_empty() {
        println!("traces match ({} steps)", a.len());
        Ok(OK)
    } else {
        print!("{}", d.describe());
        Ok(MISMATCH)
    }
}

fn repl(config: Option<&Path>, seed: u64) -> Result<u8, Failure> {
    let mut session = Repl::new(engine(config, None)?, seed);
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut out = io::stdout().lock();
    let prompt = |out: &mut io::StdoutLock<'_>| {
        if interactive {
            let _ = write!(out, "qualia> ");
            let _ = out.flush();
        }
    };
    prompt(&mut out);
    for line in stdin.lock().lines() {
        let line = line.context("reading input").map_err(input)?;
        match session.handle_line(&line) {
            Ok(reply) => {
                for l in &reply.lines {
                    let _ = writeln!(out, "{l}");
                }
                if reply.quit {
                    break;
                }
            }
            Err(e) => {
                let _ = writeln!(out, "error: {e}");
            }
        }
        prompt(&mut out);
    }
    Ok(OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            file,
            seed,
            trace,
            json,
            strict,
            config,
            graph,
        } => run(
            file,
            *seed,
            trace.as_deref(),
            json.as_deref(),
            *strict,
            config.as_deref(),
            graph.as_deref(),
        ),
        Command::Validate { file } => validate(file),
        Command::Diff { actual, expected } => diff(actual, expected),
        Command::Repl { config, seed } => repl(config.as_deref(), *seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
