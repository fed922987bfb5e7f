use arrayaccel::accelerate::{accelerate, encode_no_iteration, encode_reachability, literals, prime_loop_vars};
use arrayaccel::closed_form::Phase;
use arrayaccel::corpus;
use arrayaccel::problem::parse_problem;
use arrayaccel::prover::Prover;
use arrayaccel::sexpr::{print_formula, Decls};
use arrayaccel::{Formula, Var};

fn lines(fs: &[Formula]) -> Vec<String> {
    fs.iter().map(print_formula).collect()
}

#[test]
fn decrement_transition() {
    let l = corpus::by_name("decrement").unwrap();
    let t = accelerate(&l, &mut Prover::builtin()).unwrap();
    assert_eq!(lines(&t.conjuncts), ["(> n 0)", "(>= i n)", "(= i' (- i n))"]);
}

#[test]
fn swap_transition_has_every_variable() {
    let l = corpus::by_name("swap").unwrap();
    let t = accelerate(&l, &mut Prover::builtin()).unwrap();
    let text = lines(&t.conjuncts).join("\n");
    for needle in ["(<= (+ i n) k)", "(= i' (+ i n))", "(= k' k)", "(= a' (lambda (c)"] {
        assert!(text.contains(needle), "{needle} missing from\n{text}");
    }
    assert_eq!(t.closed_forms.len(), 3);
}

#[test]
fn forward_monotonic_guard_is_kept() {
    let src = "(vars (i 0) (k 0)) (loop (guard (< i k)) (update (i (- i 1))))";
    let l = parse_problem(src).unwrap().the_loop;
    let t = accelerate(&l, &mut Prover::builtin()).unwrap();
    assert_eq!(lines(&t.guard), ["(< i k)"]);
}

#[test]
fn non_monotonic_guard_fails() {
    let src = "(vars (i 0)) (loop (guard (distinct i 5)) (update (i (+ i 1))))";
    let l = parse_problem(src).unwrap().the_loop;
    let f = accelerate(&l, &mut Prover::builtin()).unwrap_err();
    assert_eq!(f.phase, Phase::Guard, "{f}");
}

#[test]
fn reachability_encoding() {
    let l = corpus::by_name("decrement").unwrap();
    let d = Decls::new().with(&Var::scalar("i"));
    let pre = d.parse_formula("(> i 3)").unwrap();
    let post = d.parse_formula("(< i 0)").unwrap();
    let t = accelerate(&l, &mut Prover::builtin()).unwrap();
    let q = encode_reachability(&l, &pre, &t, &post).unwrap();
    assert_eq!(print_formula(&q[0]), "(> i 3)");
    assert_eq!(print_formula(q.last().unwrap()), "(< i' 0)");
    let zero = encode_no_iteration(&l, &pre, &post).unwrap();
    assert_eq!(lines(&zero), ["(> i 3)", "(<= i 0)", "(= i' i)", "(< i' 0)"]);

    let disjunctive = d.parse_formula("(or (< i 0) (> i 9))").unwrap();
    assert!(encode_reachability(&l, &pre, &t, &disjunctive).is_err());
}

#[test]
fn priming_and_literals() {
    let l = corpus::by_name("swap").unwrap();
    let d = Decls::new().with(&Var::scalar("i")).with(&Var::scalar("j")).with(&Var::array("a", 1));
    let f = d.parse_formula("(and (= (select a i) j) (< i 3))").unwrap();
    assert_eq!(print_formula(&prime_loop_vars(&l, &f)), "(and (= (select a' i') j) (< i' 3))");
    assert_eq!(literals(&f).unwrap().len(), 2);
}
