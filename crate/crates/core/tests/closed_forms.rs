use arrayaccel::closed_form::{Analysis, Phase};
use arrayaccel::corpus;
use arrayaccel::eval::{ArrayValue, Background, Evaluator, State};
use arrayaccel::loops::{iterate, Loop};
use arrayaccel::oracle::oracle_loop;
use arrayaccel::problem::{parse_problem, vars_block, LoopSyntax};
use arrayaccel::prover::Prover;
use arrayaccel::{Expr, Lvalue, Var};

fn analysis(src: &str) -> Analysis {
    Analysis::run(&parse_problem(src).unwrap().the_loop, &mut Prover::builtin())
}

fn entry(a: &Analysis, lv: &str) -> String {
    let t = a.table().unwrap();
    let (_, e) = t.iter().find(|(l, _)| l.to_string() == lv).unwrap_or_else(|| panic!("no entry for {lv} in\n{t}"));
    e.to_string()
}

#[test]
fn swap_table() {
    let a = analysis(corpus::SWAP);
    assert_eq!(entry(&a, "i"), "(+ i n)");
    assert_eq!(entry(&a, "(select a i)"), "(select a i)");
    // up^n(a[i+1]) = a[i+n+1]
    assert_eq!(entry(&a, "(select a (+ i 1))"), "(select a (+ i n 1))");
}

#[test]
fn every_solvable_corpus_loop_matches_the_interpreter() {
    for (name, l) in corpus::all() {
        if name == "mixing" {
            continue;
        }
        let r = oracle_loop(name, &l, &mut Prover::builtin(), 6, 7, 3);
        assert!(r.ok(), "{name}: {:?} {:?}", r.failure, r.mismatches.first());
        assert!(r.comparisons > 0);
    }
}

#[test]
fn corpus_sources_round_trip() {
    for (name, src) in corpus::SOURCES {
        let p = parse_problem(src).unwrap();
        let printed = format!("{}\n{}", vars_block(&p.vars), LoopSyntax(&p.the_loop));
        assert_eq!(parse_problem(&printed).unwrap().the_loop, p.the_loop, "{name}");
    }
}

#[test]
fn stationary_write_lands_after_one_iteration() {
    let l = corpus::by_name("stationary").unwrap();
    let a = Analysis::run(&l, &mut Prover::builtin());
    let form = a.var_closed_form(&Var::array("a", 1)).unwrap();
    let s = State::new().with_int("i", 0).with_int("k", 9).with_array(&Var::array("a", 1), ArrayValue::identity(1));
    let ev = Evaluator::new();
    for (n, cell, want) in [(0, 5, 5), (1, 5, 0), (4, 5, 0), (4, 6, 6), (4, 4, 4)] {
        let at = s.clone().with_int("n", n);
        assert_eq!(ev.expr(&Expr::apply(form.clone(), vec![Expr::int(cell)]), &at).unwrap(), want, "n={n} c={cell}");
    }
}

#[test]
fn two_dimensional_grid() {
    let l = corpus::by_name("grid").unwrap();
    let a = Analysis::run(&l, &mut Prover::builtin());
    let m = Var::array("m", 2);
    let form = a.var_closed_form(&m).unwrap();
    let s0 = State::new()
        .with_int("i", 1)
        .with_int("j", 2)
        .with_int("k", 20)
        .with_array(&m, ArrayValue::new(2, Background::Hash { seed: 3, range: 9 }));
    let (after, _) = iterate(&l, &s0, 4).unwrap();
    let ev = Evaluator::new();
    for x in -1..8 {
        for y in 0..5 {
            let want = after.array(&m).unwrap().apply(&[x, y]).unwrap();
            let got = ev.expr(&Expr::apply(form.clone(), vec![Expr::int(x), Expr::int(y)]), &s0.clone().with_int("n", 4));
            assert_eq!(got.unwrap(), want, "m[{x}][{y}]");
        }
    }
}

fn failure_phase(src: &str) -> (Phase, String) {
    let a = analysis(src);
    let f = a.table().unwrap_err();
    (f.phase, f.reason)
}

#[test]
fn failures_name_their_phase() {
    let (phase, why) = failure_phase(corpus::MIXING);
    assert_eq!(phase, Phase::Classification);
    assert_eq!(why, "mixed inductive/displacing in Lval(r_2)");

    let doubling = "(vars (i 0)) (loop (guard (< i 100)) (update (i (* 2 i))))";
    assert_eq!(failure_phase(doubling).0, Phase::Recurrence);

    // j grows by i² + 1: monotonic, but not by a constant
    let growing = "(vars (i 0) (j 0) (a 1))
        (loop (guard (< i 100)) (update (i (+ i 1)) (j (+ j (+ (* i i) 1))) ((select a j) 0)))";
    let mut p = Prover::auto(std::time::Duration::from_secs(10));
    if !p.has_backend() {
        return;
    }
    let a = Analysis::run(&parse_problem(growing).unwrap().the_loop, &mut p);
    a.table().unwrap();
    let f = a.var_closed_form(&Var::array("a", 1)).unwrap_err();
    assert_eq!(f.phase, Phase::Displacement, "{f}");
}

#[test]
fn unwritten_arrays_are_their_own_closed_form() {
    let a = analysis(corpus::STRIDE);
    let b = Var::array("b", 1);
    assert_eq!(a.var_closed_form(&b).unwrap(), arrayaccel::ArrayExpr::Var(b.clone()));
    let t = a.table().unwrap();
    assert!(t.contains(&Lvalue { var: b, index: vec![Expr::scalar("i")] }));
}

#[test]
fn accumulator_closed_form_is_exact() {
    let l: Loop = corpus::by_name("sums").unwrap();
    let a = Analysis::run(&l, &mut Prover::builtin());
    let j = a.scalar_closed_form(&Var::scalar("j")).unwrap();
    for (i0, j0, n) in [(0, 0, 0), (3, -2, 5), (-4, 7, 9)] {
        let s = State::new().with_int("i", i0).with_int("j", j0).with_int("n", n);
        let direct = j0 + (0..n).map(|t| i0 + t).sum::<i64>();
        assert_eq!(Evaluator::new().expr(&j, &s).unwrap(), direct);
    }
}
