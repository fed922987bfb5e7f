use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use arrayaccel::accelerate::accelerate_analysis;
use arrayaccel::check::{check_problem, Verdict};
use arrayaccel::closed_form::Analysis;
use arrayaccel::oracle::{all_forms, compare_forms, describe, fuzz, GenConfig, OracleReport};
use arrayaccel::problem::{parse_problem, Problem};
use arrayaccel::prover::Prover;
use arrayaccel::sexpr::{print_array, print_expr, print_formula};
use arrayaccel::smt::{Model, SolverProcess, BACKEND_ENV};
use arrayaccel::Var;

const SCHEMA: u32 = 1;

/// Exact closed forms and acceleration for loops over integer arrays.
#[derive(Parser)]
#[command(name = "arrayaccel", version)]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(flatten)]
    backend: BackendOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BackendOpts {
    /// Solver command, e.g. "z3" or "cvc5 --lang=smt2 --incremental". "none" disables it.
    #[arg(long, global = true, env = BACKEND_ENV)]
    backend: Option<String>,

    /// Per-query solver timeout in seconds.
    #[arg(long, global = true, default_value_t = 10.0)]
    timeout: f64,

    /// Write every solver command and response to this file.
    #[arg(long, global = true)]
    smt_log: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the lvalues of a loop.
    Classify { file: PathBuf },
    /// Closed forms of the loop's lvalues.
    ClosedForm {
        file: PathBuf,
        /// Print the λ closed form of this variable only.
        #[arg(long)]
        array: Option<String>,
        /// Print the recurrence system and its solution.
        #[arg(long)]
        show_rec: bool,
        /// Compare against the interpreter for n = 0..K, e.g. n=6.
        #[arg(long, value_name = "n=K")]
        check: Option<String>,
    },
    /// The accelerated transition relation.
    Accelerate { file: PathBuf },
    /// Decide whether the post block is reachable. Exit code 0 unsafe, 1 safe-bounded, 2 unknown.
    Check { file: PathBuf },
    /// Compare closed forms with the interpreter on random states.
    Oracle {
        /// A loop file; omit with --fuzz.
        file: Option<PathBuf>,
        /// Check this many generated loops.
        #[arg(long)]
        fuzz: Option<usize>,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random initial states per loop.
        #[arg(long, default_value_t = 20)]
        states: usize,
    },
}

fn prover(opts: &BackendOpts) -> Result<Prover> {
    let timeout = Duration::from_secs_f64(opts.timeout.max(0.001));
    match opts.backend.as_deref().map(str::trim) {
        Some("none") => Ok(Prover::builtin()),
        Some(cmd) if !cmd.is_empty() => {
            let p = SolverProcess::locate(Some(cmd), timeout, opts.smt_log.clone())
                .with_context(|| format!("cannot start solver '{cmd}'"))?;
            Ok(Prover::with_backend(Box::new(p)))
        }
        _ => Ok(match SolverProcess::locate(None, timeout, opts.smt_log.clone()) {
            Ok(p) => Prover::with_backend(Box::new(p)),
            Err(_) => Prover::builtin(),
        }),
    }
}

fn load(path: &Path) -> Result<Problem> {
    let src = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?
    };
    parse_problem(&src).map_err(|e| anyhow::anyhow!("{}:{e}", path.display()))
}

fn model_json(m: &Model) -> Value {
    let fields: serde_json::Map<String, Value> = m
        .values
        .iter()
        .map(|(v, value)| {
            let j = match value {
                arrayaccel::smt::ModelValue::Int(c) => json!(c),
                other => json!(other.to_string()),
            };
            (v.name.clone(), j)
        })
        .collect();
    Value::Object(fields)
}

fn report_json(r: &OracleReport) -> Value {
    let mut v = serde_json::to_value(r).expect("plain data");
    v["ok"] = json!(r.ok());
    v
}

fn print_report(r: &OracleReport, verbose: bool) {
    match (&r.failure, r.mismatches.len()) {
        (Some(why), _) => println!("{}: no closed forms: {why}", r.loop_id),
        (None, 0) => {
            if verbose {
                println!("{}: ok, {} comparisons, n <= {}, {} states", r.loop_id, r.comparisons, r.n_max, r.states)
            }
        }
        (None, k) => {
            println!("{}: {k} mismatches in {} comparisons", r.loop_id, r.comparisons);
            for m in r.mismatches.iter().take(10) {
                println!("  {m}");
            }
        }
    }
}

fn parse_check(arg: &str) -> Result<usize> {
    let k = arg.strip_prefix("n=").unwrap_or(arg);
    k.parse().with_context(|| format!("expected n=K, got '{arg}'"))
}

fn classify(cli: &Cli, file: &Path) -> Result<u8> {
    let p = load(file)?;
    let a = Analysis::run(&p.the_loop, &mut prover(&cli.backend)?);
    let c = &a.classification;
    if cli.json {
        let lvalues: Vec<Value> = c
            .l_set
            .iter()
            .map(|cl| json!({"lvalue": cl.lvalue.to_string(), "class": cl.class, "justification": cl.justification}))
            .collect();
        let mono: BTreeMap<String, String> =
            c.monotonicity.iter().map(|(v, m)| (v.name.clone(), m.direction.to_string())).collect();
        let out = json!({
            "schema": SCHEMA, "command": "classify", "a_solvable": c.solvable, "reason": c.reason,
            "lvalues": lvalues, "monotonicity": mono,
        });
        println!("{out:#}");
    } else {
        let width = c.l_set.iter().map(|cl| cl.lvalue.to_string().len()).max().unwrap_or(0).max(6);
        println!("{:width$}  {:14}  justification", "lvalue", "class");
        for cl in &c.l_set {
            println!("{:width$}  {:14}  {}", cl.lvalue.to_string(), cl.class.to_string(), cl.justification);
        }
        match &c.reason {
            None => println!("a-solvable"),
            Some(why) => println!("not a-solvable: {why}"),
        }
    }
    Ok(if c.solvable { 0 } else { 1 })
}

fn closed_form(cli: &Cli, file: &Path, array: Option<&str>, show_rec: bool, check: Option<&str>) -> Result<u8> {
    let p = load(file)?;
    let l = &p.the_loop;
    let a = Analysis::run(l, &mut prover(&cli.backend)?);
    let n_check = check.map(parse_check).transpose()?;
    let mut out = json!({"schema": SCHEMA, "command": "closed-form"});
    let mut code = 0;
    if show_rec {
        if let (Some(rec), sol) = (&a.rec, &a.solution) {
            let eqs: Vec<String> =
                rec.equations.iter().map(|(v, e)| format!("(= {v}' {})", print_expr(e))).collect();
            let symbols: Vec<Value> = rec
                .equations
                .iter()
                .map(|(v, _)| json!({"symbol": v.name, "lvalue": rec.symbols.lvalue(v).map(|l| l.to_string())}))
                .collect();
            let theta: Vec<String> = match sol {
                Some(s) => rec.equations.iter().map(|(v, _)| format!("({v} {})", print_expr(&s.expr(v)))).collect(),
                None => Vec::new(),
            };
            if !cli.json {
                println!("; recurrences");
                println!("{rec}");
                println!("; value of each symbol after n iterations");
                theta.iter().for_each(|t| println!("{t}"));
            }
            out["recurrences"] = json!(eqs);
            out["symbols"] = json!(symbols);
            out["solution"] = json!(theta);
        }
    }
    let table = match a.table() {
        Ok(t) => t,
        Err(f) => {
            if cli.json {
                out["error"] = json!({"phase": f.phase.to_string(), "reason": f.reason});
                println!("{out:#}");
            } else {
                println!("{f}");
            }
            return Ok(2);
        }
    };
    if let Some(name) = array {
        let x = l.vars().into_iter().find(|v| v.name == name).with_context(|| format!("no loop variable '{name}'"))?;
        let form = a.var_closed_form(&x).map_err(|e| anyhow::anyhow!("{e}"))?;
        if cli.json {
            out["array"] = json!({"var": name, "closed_form": print_array(&form)});
        } else {
            println!("{}", print_array(&form));
        }
    } else {
        let entries: Vec<Value> =
            table.iter().map(|(l, e)| json!({"lvalue": l.to_string(), "closed_form": print_expr(e)})).collect();
        out["table"] = json!(entries);
        if !cli.json {
            println!("{table}");
        }
    }
    if let Some(k) = n_check {
        let forms = all_forms(&a).map_err(anyhow::Error::msg)?;
        let r = compare_forms(&file.display().to_string(), l, &forms, 20, k, 0);
        if !r.ok() {
            code = 1;
        }
        if cli.json {
            out["check"] = report_json(&r);
        } else {
            print_report(&r, true);
        }
    }
    if cli.json {
        println!("{out:#}");
    }
    Ok(code)
}

fn accelerate(cli: &Cli, file: &Path) -> Result<u8> {
    let p = load(file)?;
    let mut prover = prover(&cli.backend)?;
    let a = Analysis::run(&p.the_loop, &mut prover);
    match accelerate_analysis(&a, &mut prover) {
        Ok(t) => {
            if cli.json {
                let forms: BTreeMap<String, String> =
                    t.closed_forms.iter().map(|(v, f)| (v.name.clone(), print_array(f))).collect();
                let out = json!({
                    "schema": SCHEMA, "command": "accelerate",
                    "transition": t.conjuncts.iter().map(print_formula).collect::<Vec<_>>(),
                    "guard": t.guard.iter().map(print_formula).collect::<Vec<_>>(),
                    "closed_forms": forms,
                });
                println!("{out:#}");
            } else {
                for c in &t.conjuncts {
                    println!("{}", print_formula(c));
                }
            }
            Ok(0)
        }
        Err(f) => {
            if cli.json {
                println!("{:#}", json!({"schema": SCHEMA, "command": "accelerate", "error": {"phase": f.phase.to_string(), "reason": f.reason}}));
            } else {
                println!("{f}");
            }
            Ok(2)
        }
    }
}

fn check(cli: &Cli, file: &Path) -> Result<u8> {
    let p = load(file)?;
    if !p.has_post {
        bail!("{}: check needs a (post ...) block", file.display());
    }
    let r = check_problem(&p, &mut prover(&cli.backend)?);
    if cli.json {
        let mut out = json!({
            "schema": SCHEMA, "command": "check", "verdict": r.verdict.name(),
            "query": r.query.iter().map(print_formula).collect::<Vec<_>>(),
        });
        match &r.verdict {
            Verdict::Unsafe(m) => out["model"] = model_json(m),
            Verdict::Unknown(why) => out["reason"] = json!(why),
            Verdict::SafeBounded => {}
        }
        if let Some(t) = &r.trace {
            out["lemmas"] = json!(t.lemmas.len());
            out["rounds"] = json!(t.rounds);
        }
        println!("{out:#}");
    } else {
        match &r.verdict {
            Verdict::Unsafe(m) => {
                println!("unsafe");
                let shown: Vec<&Var> = m.values.keys().filter(|v| !v.name.contains('\'')).collect();
                for v in shown {
                    println!("  {v} = {}", m.values[v]);
                }
            }
            other => println!("{other}"),
        }
    }
    Ok(r.verdict.exit_code() as u8)
}

fn oracle(cli: &Cli, file: Option<&Path>, k: Option<usize>, n_max: usize, seed: u64, states: usize) -> Result<u8> {
    let reports: Vec<(String, OracleReport)> = match (file, k) {
        (Some(f), None) => {
            let p = load(f)?;
            let a = Analysis::run(&p.the_loop, &mut prover(&cli.backend)?);
            let id = f.display().to_string();
            let r = match all_forms(&a) {
                Ok(forms) => compare_forms(&id, &p.the_loop, &forms, states, n_max, seed),
                Err(why) => OracleReport { loop_id: id, states, n_max, failure: Some(why), ..OracleReport::default() },
            };
            vec![(describe(&p.the_loop), r)]
        }
        (None, Some(k)) => fuzz(k, &GenConfig::default(), states, n_max, seed)
            .into_iter()
            .map(|(l, r)| (describe(&l), r))
            .collect(),
        _ => bail!("give either a loop file or --fuzz K"),
    };
    let bad = reports.iter().filter(|(_, r)| !r.ok()).count();
    if cli.json {
        let all: Vec<Value> = reports
            .iter()
            .map(|(src, r)| {
                let mut v = report_json(r);
                v["loop"] = json!(src);
                v
            })
            .collect();
        println!("{:#}", json!({"schema": SCHEMA, "command": "oracle", "loops": reports.len(), "failed": bad, "reports": all}));
    } else {
        for (src, r) in &reports {
            print_report(r, file.is_some());
            if !r.ok() && k.is_some() {
                println!("{src}");
            }
        }
        if k.is_some() {
            println!("{} loops, {bad} failed", reports.len());
        }
    }
    Ok(if bad == 0 { 0 } else { 1 })
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Classify { file } => classify(cli, file),
        Command::ClosedForm { file, array, show_rec, check } => {
            closed_form(cli, file, array.as_deref(), *show_rec, check.as_deref())
        }
        Command::Accelerate { file } => accelerate(cli, file),
        Command::Check { file } => check(cli, file),
        Command::Oracle { file, fuzz, n_max, seed, states } => {
            oracle(cli, file.as_deref(), *fuzz, *n_max, *seed, *states)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
