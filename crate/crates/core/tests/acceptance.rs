//! Acceptance criteria. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use arrayaccel::accelerate::accelerate;
use arrayaccel::array_form::{cell_params, last_write_cases, not_written};
use arrayaccel::check::{check_problem, Verdict};
use arrayaccel::closed_form::Analysis;
use arrayaccel::corpus;
use arrayaccel::eval::{ArrayValue, Background, Evaluator, State};
use arrayaccel::lambda_solver::{check_model, solve, SolveResult};
use arrayaccel::loops::{build_up, iterate, run_n, Run};
use arrayaccel::oracle::{fuzz, GenConfig};
use arrayaccel::problem::{parse_problem, Problem};
use arrayaccel::prover::Prover;
use arrayaccel::recurrence::{closed_form_of, iteration_var, solve_rec, verify_solution, RecurrenceSystem};
use arrayaccel::subst::{Subst, Substitute, SymbolMap};
use arrayaccel::{ArrayExpr, Expr, Formula, Lvalue, Var};

mod common;
use common::{constant_arrays, index_trajectory, not_written_enumerated, random_start, window};

const SOLVER_TIMEOUT: Duration = Duration::from_secs(20);

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    let e = t.elapsed();
    ensure(e <= limit, || format!("took {e:.2?}, limit {limit:?}"))
}

fn problem(name: &str) -> Problem {
    let path = format!("{}/../cli/problems/{name}.arr", env!("CARGO_MANIFEST_DIR"));
    parse_problem(&std::fs::read_to_string(&path).expect("problem file")).expect("problem parses")
}

fn prover() -> Prover {
    Prover::auto(SOLVER_TIMEOUT)
}

fn n() -> Expr {
    Expr::var(&iteration_var())
}

fn sc(name: &str) -> Expr {
    Expr::scalar(name)
}

fn equivalent(p: &mut Prover, a: Formula, b: Formula) -> Result<(), String> {
    for (x, y) in [(a.clone(), b.clone()), (b, a)] {
        let f = Formula::implies(x.clone(), y.clone());
        ensure(p.valid(&f).is_valid(), || format!("not valid: {f}"))?;
    }
    Ok(())
}

fn swap_closed_form() -> Outcome {
    let t = Instant::now();
    let l = corpus::by_name("swap").unwrap();
    let a = Analysis::run(&l, &mut Prover::builtin());
    let form = a.var_closed_form(&Var::array("a", 1)).map_err(|e| e.to_string())?;
    let ev = Evaluator::new();
    let mut checked = 0;
    for seed in 0..50u64 {
        for i in -3..=3i64 {
            let k = i + 7;
            let arr = ArrayValue::new(1, Background::Hash { seed, range: 1000 });
            let s0 = State::new().with_int("i", i).with_int("k", k).with_array(&Var::array("a", 1), arr);
            for steps in 0..=6usize {
                let Run::Done(after) = run_n(&l, &s0, steps).map_err(|e| e.to_string())? else {
                    return Err(format!("guard failed before {steps} iterations"));
                };
                let at = s0.clone().with_int("n", steps as i64);
                for c in (i - 2)..=(i + steps as i64 + 2) {
                    let want = after.array(&Var::array("a", 1)).unwrap().apply(&[c]).unwrap();
                    let got = ev.expr(&Expr::apply(form.clone(), vec![Expr::int(c)]), &at).map_err(|e| e.to_string())?;
                    ensure(want == got, || format!("seed {seed} i={i} n={steps} c={c}: run {want}, form {got}"))?;
                    checked += 1;
                }
            }
        }
    }
    within(t, Duration::from_secs(5))?;
    Ok(format!("{checked} cells, {:.2?}", t.elapsed()))
}

fn swap_one_step() -> Outcome {
    let l = corpus::by_name("swap").unwrap();
    let a = Var::array("a", 1);
    let s = State::new().with_int("i", 0).with_int("k", 5).with_array(&a, ArrayValue::identity(1));
    let after = arrayaccel::loops::step(&l, &s).map_err(|e| e.to_string())?.ok_or("guard is false")?;
    let up_a = build_up(&l).get(&a).cloned().ok_or("up has no entry for a")?;
    let symbolic = Evaluator::new().array(&up_a, &s).map_err(|e| e.to_string())?;
    for c in -3..=8i64 {
        let want = match c {
            0 => 1,
            1 => 0,
            _ => c,
        };
        let run = after.array(&a).unwrap().apply(&[c]).unwrap();
        let sym = symbolic.apply(&[c]).unwrap();
        ensure(run == want && sym == want, || format!("cell {c}: expected {want}, step {run}, up {sym}"))?;
    }
    Ok("12 cells, interpreter step and up(a) both".into())
}

fn decrement_acceleration() -> Outcome {
    let t = Instant::now();
    let mut p = prover();
    let l = corpus::by_name("decrement").unwrap();
    let tr = accelerate(&l, &mut p).map_err(|e| e.to_string())?;
    let i = sc("i");
    let expected = Formula::and([
        n().gt(Expr::int(0)),
        (i.clone() - n()).ge(Expr::int(0)),
        sc("i'").eq(i - n()),
    ]);
    equivalent(&mut p, tr.formula(), expected)?;
    within(t, Duration::from_secs(1))?;
    Ok(format!("backend {}, {:.2?}", p.backend_name(), t.elapsed()))
}

fn swap_guard() -> Outcome {
    let mut p = prover();
    let l = corpus::by_name("swap").unwrap();
    let tr = accelerate(&l, &mut p).map_err(|e| e.to_string())?;
    let guard = Formula::and(tr.guard.iter().cloned());
    equivalent(&mut p, guard.clone(), (sc("i") + n()).le(sc("k")))?;
    Ok(format!("{guard}, backend {}", p.backend_name()))
}

fn overview_unsafe() -> Outcome {
    let t = Instant::now();
    let mut p = prover();
    ensure(p.has_backend(), || "no SMT backend found".into())?;
    let prob = problem("overview");
    let r = check_problem(&prob, &mut p);
    let Verdict::Unsafe(m) = &r.verdict else { return Err(format!("verdict {}", r.verdict)) };
    within(t, Duration::from_secs(30))?;
    let (j, steps) = (m.int("j").ok_or("no j in model")?, m.int("n").ok_or("no n in model")?);
    ensure(check_model(m, &r.query, &mut p), || format!("check_model rejects {m}"))?;
    // replay the model on the interpreter
    let mut s0 = State::new();
    for v in &prob.the_loop.vars() {
        s0.set(v.clone(), m.get(v).ok_or(format!("model lacks {v}"))?.to_value());
    }
    let ev = Evaluator::new();
    ensure(ev.formula(&prob.pre, &s0.clone().with_int("j", j)).unwrap_or(false), || "pre fails".into())?;
    let Run::Done(after) = run_n(&prob.the_loop, &s0, steps as usize).map_err(|e| e.to_string())? else {
        return Err(format!("the guard fails before {steps} iterations"));
    };
    let exits = !ev.formula(&prob.the_loop.guard_formula(), &after).map_err(|e| e.to_string())?;
    let post = ev.formula(&prob.post, &after.with_int("j", j)).map_err(|e| e.to_string())?;
    ensure(exits && post, || format!("replay: loop exits {exits}, post {post}"))?;
    Ok(format!("j={j} n={steps}, replayed, {:.2?}", t.elapsed()))
}

fn hoare_safe() -> Outcome {
    let t = Instant::now();
    let mut p = prover();
    ensure(p.has_backend(), || "no SMT backend found".into())?;
    let r = check_problem(&problem("swap_triple"), &mut p);
    ensure(matches!(r.verdict, Verdict::SafeBounded), || format!("verdict {}", r.verdict))?;
    within(t, Duration::from_secs(10))?;
    Ok(format!("{:.2?}", t.elapsed()))
}

fn solver_gives_up() -> Outcome {
    let t = Instant::now();
    let mut p = prover();
    let c = Var::scalar("c");
    let lam = |v: i64| ArrayExpr::Lambda(vec![c.clone()], Box::new(Expr::int(v)));
    let r = solve(&[Formula::ArrayEq(lam(0), lam(1))], &mut p);
    ensure(matches!(r, SolveResult::Unknown(_)), || format!("got {r:?}"))?;
    within(t, Duration::from_secs(2))?;
    Ok(format!("{:.2?}", t.elapsed()))
}

fn sums_recurrence() -> Outcome {
    let mut symbols = SymbolMap::new();
    let ri = symbols.symbol(&Lvalue::scalar(Var::scalar("i")));
    let rj = symbols.symbol(&Lvalue::scalar(Var::scalar("j")));
    let r = RecurrenceSystem {
        equations: vec![(ri.clone(), Expr::var(&ri) + 1), (rj.clone(), Expr::var(&rj) + Expr::var(&ri))],
        symbols,
    };
    let sol = solve_rec(&r).map_err(|e| e.to_string())?;
    verify_solution(&r, &sol).map_err(|e| e.to_string())?;
    let theta_j = closed_form_of(&r, &sol, &rj);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let (i, j, k) = (rng.gen_range(-50..=50i64), rng.gen_range(-50..=50i64), rng.gen_range(0..=10i64));
        let s = State::new().with_int("i", i).with_int("j", j).with_int("n", k);
        let got = Evaluator::new().expr(&theta_j, &s).map_err(|e| e.to_string())?;
        // j + n²/2 + n·i − n/2, kept exact by doubling
        let doubled = 2 * j + k * k + 2 * k * i - k;
        let summed = j + (0..k).map(|t| i + t).sum::<i64>();
        ensure(2 * got == doubled && got == summed, || format!("i={i} j={j} n={k}: θ gives {got}, expected {summed}"))?;
    }
    Ok(format!("θ(rec_j) = {theta_j}, 100 points"))
}

fn mixing_rejected() -> Outcome {
    let l = corpus::by_name("mixing").unwrap();
    let a = Analysis::run(&l, &mut prover());
    let reason = a.classification.reason.clone().unwrap_or_default();
    ensure(!a.classification.solvable, || "accepted".into())?;
    ensure(reason.starts_with("mixed inductive/displacing in Lval(r_"), || format!("reason: {reason}"))?;
    Ok(reason)
}

fn fuzz_suite() -> Outcome {
    let t = Instant::now();
    let reports = fuzz(200, &GenConfig::default(), 3, 8, 20_240_601);
    let mut comparisons = 0;
    for (l, r) in &reports {
        comparisons += r.comparisons;
        ensure(r.ok(), || {
            let why = r.failure.clone().or_else(|| r.mismatches.first().map(|m| m.to_string())).unwrap_or_default();
            format!("{}: {why}\n{}", r.loop_id, arrayaccel::oracle::describe(l))
        })?;
    }
    within(t, Duration::from_secs(120))?;
    Ok(format!("200 loops, {comparisons} comparisons, {:.2?}", t.elapsed()))
}

const STATES_PER_LOOP: usize = 4;

fn qe_agrees() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ev = Evaluator::new();
    let mut checked = 0;
    let mut loops = BTreeSet::new();
    for (name, l) in corpus::all() {
        let up = build_up(&l);
        for x in constant_arrays(&l) {
            loops.insert(name);
            for _ in 0..STATES_PER_LOOP {
                let s0 = random_start(&l, &mut rng);
                let (_, log) = iterate(&l, &s0, 6).map_err(|e| e.to_string())?;
                let cells: BTreeSet<Vec<i64>> = log.iter().filter(|w| w.var == x).map(|w| w.cell.clone()).collect();
                let index = index_trajectory(&l, &x, &log);
                for c in window(&cells, x.arity) {
                    let c_exprs: Vec<Expr> = c.iter().map(|v| Expr::int(*v)).collect();
                    for m in 0..=6i64 {
                        for nn in 0..=6i64 {
                            let f = not_written(&l, &up, &x, &Expr::int(m), &Expr::int(nn), &c_exprs)
                                .map_err(|e| e.to_string())?;
                            let got = ev.formula(&f, &s0).map_err(|e| e.to_string())?;
                            let want = not_written_enumerated(&index, m, nn, &c);
                            ensure(got == want, || format!("{name} {x} m={m} n={nn} c={c:?}: formula {got}, enumeration {want}"))?;
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{} loops, {checked} (m, n, c) triples", loops.len()))
}

fn last_write_unique() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ev = Evaluator::new();
    let mut checked = 0;
    let mut loops = BTreeSet::new();
    for (name, l) in corpus::all() {
        let a = Analysis::run(&l, &mut Prover::builtin());
        let Ok(table) = a.table() else { continue };
        for x in constant_arrays(&l) {
            loops.insert(name);
            let params = cell_params(&l, &x);
            let c_exprs: Vec<Expr> = params.iter().map(Expr::var).collect();
            let cases = last_write_cases(&l, &a.up, &x, &c_exprs, table).map_err(|e| e.to_string())?;
            for _ in 0..STATES_PER_LOOP {
                let s0 = random_start(&l, &mut rng);
                let (_, full) = iterate(&l, &s0, 6).map_err(|e| e.to_string())?;
                let cells: BTreeSet<Vec<i64>> = full.iter().filter(|w| w.var == x).map(|w| w.cell.clone()).collect();
                for c in window(&cells, x.arity) {
                    let mut at = Subst::new();
                    for (p, v) in params.iter().zip(&c) {
                        at.insert_scalar(p.clone(), Expr::int(*v));
                    }
                    let mut last: BTreeMap<usize, (usize, usize, i64)> = BTreeMap::new();
                    for w in full.iter().filter(|w| w.var == x && w.cell == c) {
                        last.insert(w.iteration, (w.iteration, w.update, w.value));
                    }
                    for nn in 0..=6usize {
                        let s = s0.clone().with_int(&iteration_var().name, nn as i64);
                        let mut firing = Vec::new();
                        for case in &cases {
                            if ev.formula(&case.guard.subst(&at), &s).map_err(|e| e.to_string())? {
                                let e = ev.expr(&case.instantiation.subst(&at), &s).map_err(|e| e.to_string())?;
                                let v = ev.expr(&case.value.subst(&at), &s).map_err(|e| e.to_string())?;
                                firing.push((e as usize, case.update, v));
                            }
                        }
                        let logged = last.range(..=nn).next_back().map(|(_, w)| *w);
                        ensure(firing.len() <= 1, || format!("{name} {x} n={nn} c={c:?}: {} guards hold", firing.len()))?;
                        ensure(firing.first().copied() == logged, || {
                            format!("{name} {x} n={nn} c={c:?}: cases say {:?}, log says {logged:?}", firing.first())
                        })?;
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{} loops, {checked} (c, n) pairs", loops.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("swap closed form matches the interpreter", swap_closed_form),
        ("one swap step from i=0, k=5, identity array", swap_one_step),
        ("decrement acceleration", decrement_acceleration),
        ("swap acceleration guard is i + n <= k", swap_guard),
        ("overview program is unsafe", overview_unsafe),
        ("swap Hoare triple is safe-bounded", hoare_safe),
        ("solve((λi.0) = (λi.1)) is unknown", solver_gives_up),
        ("counter and accumulator recurrence", sums_recurrence),
        ("mixing loop is rejected", mixing_rejected),
        ("fuzz suite of 200 generated loops", fuzz_suite),
        ("not-written formula agrees with enumeration", qe_agrees),
        ("last-write cases are unique and match the write log", last_write_unique),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2}  {name}  [{detail}]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2}  {name}  [{why}]", k + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
