use std::time::Duration;

use arrayaccel::eval::Evaluator;
use arrayaccel::lambda_solver::{
    abstract_lambdas, check_model, collect_idx, eliminate_diseq, propagate_and_reduce, solve, solve_traced, SolveResult,
};
use arrayaccel::prover::Prover;
use arrayaccel::sexpr::{print_expr, print_formula, Decls};
use arrayaccel::{Formula, Var};

fn decls() -> Decls {
    Decls::new()
        .with(&Var::scalar("x"))
        .with(&Var::scalar("y"))
        .with(&Var::scalar("i"))
        .with(&Var::array("a", 1))
        .with(&Var::array("b", 1))
}

fn formulas(src: &[&str]) -> Vec<Formula> {
    src.iter().map(|s| decls().parse_formula(s).unwrap()).collect()
}

fn backend() -> Option<Prover> {
    let p = Prover::auto(Duration::from_secs(10));
    p.has_backend().then_some(p)
}

#[test]
fn propagation_eliminates_definitions() {
    let fs = formulas(&["(= x (+ y 1))", "(= a (lambda (c) (+ c x)))", "(= (select a 3) 10)"]);
    let (rest, log) = propagate_and_reduce(fs);
    let names: Vec<&str> = log.iter().map(|(v, _)| v.name.as_str()).collect();
    assert_eq!(names, ["x", "a", "y"]);
    assert!(rest.is_empty(), "{rest:?}");
    assert_eq!(print_expr(&match &log[2].1 {
        arrayaccel::ArrayExpr::Lambda(_, body) => (**body).clone(),
        other => panic!("{other}"),
    }), "6");
}

#[test]
fn propagation_detects_contradictions() {
    let fs = formulas(&["(= a (lambda (c) 0))", "(= (select a y) 1)"]);
    assert_eq!(propagate_and_reduce(fs).0, vec![Formula::False]);
    assert!(matches!(solve(&formulas(&["(= a (lambda (c) 0))", "(= (select a y) 1)"]), &mut Prover::builtin()), SolveResult::Unsat));
}

#[test]
fn disequalities_become_reads() {
    let out = eliminate_diseq(&formulas(&["(not (= a b))"]));
    let text = print_formula(&out[0]);
    assert!(text.starts_with("(distinct (select a ext!") && text.contains("(select b ext!"), "{text}");
}

#[test]
fn alpha_equivalent_lambdas_share_a_name() {
    let fs = formulas(&["(= b (lambda (c) (+ c 1)))", "(= a (lambda (d) (+ d 1)))", "(= a (lambda (d) d))"]);
    let (abs, map) = abstract_lambdas(&fs);
    assert_eq!(map.len(), 2);
    let [Formula::ArrayEq(_, p), Formula::ArrayEq(_, q), _] = &abs[..] else { panic!("{abs:?}") };
    assert_eq!(p, q);
}

#[test]
fn read_indices_include_nested_reads() {
    let fs = formulas(&["(= (select a (select b i)) x)"]);
    let idx: Vec<String> = collect_idx(&fs).iter().map(|v| print_expr(&v[0])).collect();
    assert!(idx.contains(&"(select b i)".to_string()) && idx.contains(&"i".to_string()), "{idx:?}");
}

#[test]
fn self_referential_equation_needs_a_lemma() {
    let Some(mut p) = backend() else { return };
    let fs = formulas(&["(= a (lambda (c) (ite (= c 0) 7 (select a c))))", "(= (select a 0) 3)"]);
    let (r, trace) = solve_traced(&fs, &mut p);
    assert!(matches!(r, SolveResult::Unsat), "{r}");
    assert_eq!(trace.lemmas.len(), 1);

    // with no read at 0 nothing pins a[0] to 7 and refinement has no lemma to add
    let fs = formulas(&["(= a (lambda (c) (ite (= c 0) 7 (select a c))))", "(= (select a 1) 4)"]);
    assert!(matches!(solve(&fs, &mut p), SolveResult::Unknown(_)));

    let fs = formulas(&["(= a (lambda (c) (ite (= c 0) 7 (select a c))))", "(= (select a 1) 4)", "(>= (select a 0) 0)"]);
    let (r, trace) = solve_traced(&fs, &mut p);
    let SolveResult::Model(m) = r else { panic!("{r} {trace:?}") };
    assert!(check_model(&m, &fs, &mut p));
    let s = m.to_state();
    let ev = Evaluator::new();
    let read = |k: i64| ev.expr(&decls().parse_expr(&format!("(select a {k})")).unwrap(), &s).unwrap();
    assert_eq!((read(0), read(1)), (7, 4));
}

#[test]
fn models_are_completed_for_propagated_variables() {
    let Some(mut p) = backend() else { return };
    let fs = formulas(&["(= x (+ y 2))", "(> y 4)", "(= b (lambda (c) (* c x)))"]);
    let SolveResult::Model(m) = solve(&fs, &mut p) else { panic!() };
    assert_eq!(m.int("x"), Some(m.int("y").unwrap() + 2));
    assert!(check_model(&m, &fs, &mut p));
}

#[test]
fn distinct_constant_lambdas_are_unknown() {
    let mut p = backend().unwrap_or_default();
    let fs = formulas(&["(= (lambda (c) 0) (lambda (c) 1))"]);
    assert!(matches!(solve(&fs, &mut p), SolveResult::Unknown(_)));
}
