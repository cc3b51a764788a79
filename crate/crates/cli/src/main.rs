//! `hopi`: command-line front end for the workbench.
//!
//! Exit codes: 0 ok, 1 parse or validation error, 2 type error or
//! mismatched environments, 3 distinguished or merge undefined, 4 truncated.
//! Malformed command lines exit with 1.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hopi_core::bisim::{bisim_check, explain_witness, BisimError, Verdict};
use hopi_core::lts::{build_lts, Label, TypedNode};
use hopi_core::merge::merge;
use hopi_core::reduction::{first_trace, format_trace, reduce_multi, trace_json};
use hopi_core::syntax::{load_document, Document};
use hopi_core::translate::{
    probe_channels, probe_label, testing_context, translate_config, translated_env, ProbeBudgets, TranslateError,
};
use hopi_core::typing::check_config;
use hopi_core::{Env, Term, Trigger};
use serde_json::json;

const INPUT: u8 = 1;
const TYPE: u8 = 2;
const NEGATIVE: u8 = 3;
const TRUNCATED: u8 = 4;

#[derive(Parser)]
#[command(name = "hopi", version, about = "Higher-order pi-calculus workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse, validate and type-check a file.
    Check { file: PathBuf },
    /// Explore reductions breadth-first, or print one trace.
    Reduce {
        file: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_steps: usize,
        #[arg(long, default_value_t = 10_000)]
        max_states: usize,
        /// Print a single reduction sequence instead of the reachable set.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
    },
    /// Build the typed transition system up to a depth.
    Lts {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 1_000)]
        max_nodes: usize,
        #[arg(long)]
        json: bool,
    },
    /// Bounded weak bisimulation check between two files.
    Bisim {
        p: PathBuf,
        q: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 4)]
        tau_budget: usize,
        #[arg(long)]
        json: bool,
    },
    /// Resolve trigger calls against stored resources.
    Merge { file: PathBuf },
    /// Translate calls and resources into plain processes.
    Translate { file: PathBuf },
    /// Run the testing context for a label against the file.
    Probe {
        file: PathBuf,
        #[arg(long)]
        label: String,
        /// Reduction steps, explored states and tau budget, comma separated.
        #[arg(long, default_value = "8,4000,4", value_parser = parse_budgets)]
        budgets: ProbeBudgets,
    },
    /// Print the testing context for a label.
    Testctx {
        file: PathBuf,
        #[arg(long)]
        label: String,
    },
}

fn parse_budgets(s: &str) -> Result<ProbeBudgets, String> {
    let parts: Vec<usize> =
        s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [max_steps, max_states, tau_budget] => Ok(ProbeBudgets { max_steps, max_states, tau_budget }),
        _ => Err("expected STEPS,STATES,TAU".into()),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Failure {
        Failure { code, message: message.to_string() }
    }
}

/// Standard output plus exit code.
type Outcome = Result<(String, u8), Failure>;

fn load(path: &Path) -> Result<(Env, Document), Failure> {
    let src = std::fs::read_to_string(path).map_err(|e| Failure::new(INPUT, format!("{}: {e}", path.display())))?;
    let doc = load_document(&src).map_err(|e| Failure::new(INPUT, format!("{}: {e}", path.display())))?;
    let env = Env::with_channels(doc.channels.clone(), doc.triggers.clone());
    check_config(&env, &doc.term).map_err(|e| Failure::new(TYPE, format!("{}: type error: {e}", path.display())))?;
    Ok((env, doc))
}

fn parse_label(s: &str, env: &Env) -> Result<Label, Failure> {
    let triggers: BTreeSet<Trigger> = env.triggers.keys().cloned().collect();
    Label::parse(s, &triggers).map_err(|e| Failure::new(INPUT, format!("label `{s}`: {e}")))
}

fn translate_failure(e: TranslateError) -> Failure {
    let code = match e {
        TranslateError::Type(_) | TranslateError::NameClash(_) => TYPE,
        _ => INPUT,
    };
    Failure::new(code, e)
}

fn json_line(v: &serde_json::Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("json values serialize"))
}

fn check(file: &Path) -> Outcome {
    let (_, doc) = load(file)?;
    let mut out = String::new();
    for (a, t) in &doc.channels {
        writeln!(out, "chan {a} : {t}").unwrap();
    }
    for (k, t) in &doc.triggers {
        writeln!(out, "trigger {k} : {t}").unwrap();
    }
    out.push_str("ok\n");
    Ok((out, 0))
}

fn reduce(file: &Path, max_steps: usize, max_states: usize, trace: bool, json: bool) -> Outcome {
    let (_, doc) = load(file)?;
    if trace {
        let steps = first_trace(&doc.term, max_steps);
        let out = if json { json_line(&trace_json(&steps)) } else { format_trace(&steps) };
        return Ok((out, 0));
    }
    let reach = reduce_multi(&doc.term, max_steps, max_states);
    let code = if reach.truncated { TRUNCATED } else { 0 };
    let out = if json {
        let states: Vec<_> = reach.states.iter().map(|(t, d)| json!({"term": t.to_string(), "depth": d})).collect();
        json_line(&json!({"states": states, "truncated": reach.truncated}))
    } else {
        let mut out = String::new();
        for (t, d) in &reach.states {
            writeln!(out, "[{d}] {t}").unwrap();
        }
        let tail = if reach.truncated { ", truncated" } else { "" };
        writeln!(out, "# {} states{tail}", reach.states.len()).unwrap();
        out
    };
    Ok((out, code))
}

fn lts(file: &Path, depth: usize, max_nodes: usize, json: bool) -> Outcome {
    let (env, doc) = load(file)?;
    let g = build_lts(&TypedNode::from_env(&env, &doc.term), depth, max_nodes);
    let code = if g.truncated { TRUNCATED } else { 0 };
    if json {
        return Ok((json_line(&g.to_json()), code));
    }
    let mut out = String::new();
    for (i, n) in g.nodes.iter().enumerate() {
        writeln!(out, "n{i}: {n}").unwrap();
    }
    for (s, l, d) in &g.edges {
        writeln!(out, "n{s} --{l}--> n{d}").unwrap();
    }
    if g.truncated {
        out.push_str("# truncated\n");
    }
    Ok((out, code))
}

fn bisim(p: &Path, q: &Path, depth: usize, tau_budget: usize, json: bool) -> Outcome {
    let (ep, dp) = load(p)?;
    let (eq, dq) = load(q)?;
    let verdict =
        bisim_check(&TypedNode::from_env(&ep, &dp.term), &TypedNode::from_env(&eq, &dq.term), depth, tau_budget)
            .map_err(|e: BisimError| Failure::new(TYPE, e))?;
    let code = match &verdict {
        Verdict::Distinguished(_) => NEGATIVE,
        Verdict::EquivalentToDepth { truncated: true, .. } => TRUNCATED,
        Verdict::EquivalentToDepth { .. } => 0,
    };
    if json {
        return Ok((json_line(&verdict.to_json()), code));
    }
    let out = match &verdict {
        Verdict::EquivalentToDepth { depth, truncated } => {
            let tail = if *truncated { " (truncated)" } else { "" };
            format!("equivalent to depth {depth}{tail}\n")
        }
        Verdict::Distinguished(w) => format!("distinguished\n{}", explain_witness(w)),
    };
    Ok((out, code))
}

fn merge_cmd(file: &Path) -> Outcome {
    let (_, doc) = load(file)?;
    match merge(&doc.term) {
        Ok(t) => Ok((format!("{t}\n"), 0)),
        Err(u) => Ok((format!("{u}\n"), NEGATIVE)),
    }
}

fn translate(file: &Path) -> Outcome {
    let (env, doc) = load(file)?;
    let target = translated_env(&env).map_err(translate_failure)?;
    let term = translate_config(&env, &doc.term).map_err(translate_failure)?;
    let out = Document { channels: target.channels, triggers: Default::default(), term };
    Ok((format!("{out}\n"), 0))
}

fn probe(file: &Path, label: &str, budgets: ProbeBudgets) -> Outcome {
    let (env, doc) = load(file)?;
    let label = parse_label(label, &env)?;
    let r = probe_label(&env, &doc.term, &label, budgets).map_err(translate_failure)?;
    let code = if r.truncated { TRUNCATED } else { 0 };
    Ok((json_line(&r.to_json()), code))
}

fn testctx(file: &Path, label: &str) -> Outcome {
    let (env, doc) = load(file)?;
    let label = parse_label(label, &env)?;
    let (succ, dead) = probe_channels(&env, &doc.term, &label);
    let t: Term = testing_context(&env, &label, &succ, &dead).map_err(translate_failure)?;
    Ok((format!("{t}\n"), 0))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT } else { 0 });
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Check { file } => check(file),
        Cmd::Reduce { file, max_steps, max_states, trace, json } => {
            reduce(file, *max_steps, *max_states, *trace, *json)
        }
        Cmd::Lts { file, depth, max_nodes, json } => lts(file, *depth, *max_nodes, *json),
        Cmd::Bisim { p, q, depth, tau_budget, json } => bisim(p, q, *depth, *tau_budget, *json),
        Cmd::Merge { file } => merge_cmd(file),
        Cmd::Translate { file } => translate(file),
        Cmd::Probe { file, label, budgets } => probe(file, label, *budgets),
        Cmd::Testctx { file, label } => testctx(file, label),
    };
    match outcome {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
