use std::collections::BTreeSet;
use std::time::Duration;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use arrayaccel::array_form::not_written;
use arrayaccel::closed_form::Analysis;
use arrayaccel::eval::{ArrayValue, Evaluator, ProbeWindow, State, Value};
use arrayaccel::lambda_solver::{solve, SolveResult};
use arrayaccel::loops::iterate;
use arrayaccel::oracle::{all_forms, compare_forms, gen_loop, GenConfig};
use arrayaccel::prover::Prover;
use arrayaccel::recurrence::{solve_rec, verify_solution, RecurrenceSystem};
use arrayaccel::sexpr::{print_expr, print_formula, Decls};
use arrayaccel::simplify::simplify_expr;
use arrayaccel::subst::{BetaReduce, Substitute, SymbolMap};
use arrayaccel::{ArrayExpr, BinOp, Expr, Formula, Lvalue, Rel, Var};

mod common;
use common::{constant_arrays, index_trajectory, not_written_enumerated, random_start, window};

fn decls() -> Decls {
    Decls::new().with(&Var::scalar("x")).with(&Var::scalar("y")).with(&Var::array("a", 1))
}

fn a() -> Var {
    Var::array("a", 1)
}

fn term() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-20i64..20).prop_map(Expr::Const),
        Just(Expr::scalar("x")),
        Just(Expr::scalar("y")),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)])
                .prop_map(|(l, r, op)| Expr::Bin(op, Box::new(l), Box::new(r))),
            (inner.clone(), 1i64..5).prop_map(|(l, d)| Expr::Bin(BinOp::Div, Box::new(l), Box::new(Expr::Const(d)))),
            inner.clone().prop_map(|i| Expr::select(&a(), vec![i])),
            (inner.clone(), inner.clone(), inner).prop_map(|(c, t, e)| Expr::Ite(Box::new(c.lt(Expr::Const(0))), Box::new(t), Box::new(e))),
        ]
    })
}

fn rel() -> impl Strategy<Value = Rel> {
    prop_oneof![Just(Rel::Lt), Just(Rel::Le), Just(Rel::Gt), Just(Rel::Ge), Just(Rel::Eq), Just(Rel::Ne)]
}

fn formula() -> impl Strategy<Value = Formula> {
    let atom = prop_oneof![
        (rel(), term(), term()).prop_map(|(r, l, t)| Formula::Rel(r, l, t)),
        (2i64..5, term()).prop_map(|(d, t)| Formula::Divides(d, t)),
    ];
    atom.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
            (inner.clone(), inner).prop_map(|(p, q)| Formula::Implies(Box::new(p), Box::new(q))),
        ]
    })
}

fn state(x: i64, y: i64, seed: u64) -> State {
    State::new()
        .with_int("x", x)
        .with_int("y", y)
        .with_array(&a(), ArrayValue::new(1, arrayaccel::eval::Background::Hash { seed, range: 30 }))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn expressions_round_trip(e in term()) {
        let text = print_expr(&e);
        prop_assert_eq!(decls().parse_expr(&text).unwrap(), e, "{}", text);
    }

    #[test]
    fn formulas_round_trip(f in formula()) {
        let text = print_formula(&f);
        prop_assert_eq!(decls().parse_formula(&text).unwrap(), f, "{}", text);
    }

    #[test]
    fn simplification_preserves_values(e in term(), x in -9i64..9, y in -9i64..9, seed in any::<u64>()) {
        let s = state(x, y, seed);
        let ev = Evaluator::new();
        prop_assert_eq!(ev.expr(&simplify_expr(&e), &s).ok(), ev.expr(&e, &s).ok(), "{}", print_expr(&e));
    }

    #[test]
    fn generated_loops_are_a_solvable(seed in any::<u64>()) {
        let l = gen_loop(seed, &GenConfig::default());
        let c = arrayaccel::classify::check_a_solvable(&l, &mut Prover::builtin());
        prop_assert!(c.solvable, "{:?}", c.reason);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn closed_forms_collapse_at_zero(seed in any::<u64>(), start in any::<u64>()) {
        let l = gen_loop(seed, &GenConfig::default());
        let a = Analysis::run(&l, &mut Prover::builtin());
        let forms = all_forms(&a).unwrap();
        let s0 = random_start(&l, &mut ChaCha8Rng::seed_from_u64(start)).with_int("n", 0);
        let ev = Evaluator::new();
        for (x, form) in &forms {
            for cell in window(&BTreeSet::new(), x.arity) {
                let idx: Vec<Expr> = cell.iter().map(|c| Expr::int(*c)).collect();
                let initial = ev.expr(&Expr::apply(ArrayExpr::Var(x.clone()), idx.clone()), &s0).unwrap();
                let at_zero = ev.expr(&Expr::apply(form.clone(), idx), &s0).unwrap();
                prop_assert_eq!(initial, at_zero, "{} at {:?}", x, cell);
            }
        }
    }

    #[test]
    fn corrupted_forms_are_detected(seed in any::<u64>(), pick in any::<prop::sample::Index>(), delta in prop_oneof![Just(-1i64), Just(1), Just(2)]) {
        let l = gen_loop(seed, &GenConfig::default());
        let a = Analysis::run(&l, &mut Prover::builtin());
        let mut forms = all_forms(&a).unwrap();
        let x = pick.get(&forms.keys().cloned().collect::<Vec<_>>()).clone();
        let params: Vec<Var> = (0..x.arity).map(|k| Var::scalar(format!("p{k}"))).collect();
        let read = Expr::apply(forms[&x].clone(), params.iter().map(Expr::var).collect());
        forms.insert(x.clone(), ArrayExpr::Lambda(params, Box::new(read + delta)));
        let r = compare_forms("corrupted", &l, &forms, 2, 3, seed);
        prop_assert!(!r.mismatches.is_empty(), "corrupting {} went unnoticed", x);
    }

    #[test]
    fn not_written_matches_enumeration(seed in any::<u64>(), start in any::<u64>()) {
        let l = gen_loop(seed, &GenConfig::default());
        let up = arrayaccel::loops::build_up(&l);
        let s0 = random_start(&l, &mut ChaCha8Rng::seed_from_u64(start));
        let (_, log) = iterate(&l, &s0, 5).unwrap();
        let ev = Evaluator::new();
        for x in constant_arrays(&l) {
            let index = index_trajectory(&l, &x, &log);
            let cells: BTreeSet<Vec<i64>> = index.values().cloned().collect();
            for c in window(&cells, x.arity) {
                let ce: Vec<Expr> = c.iter().map(|v| Expr::int(*v)).collect();
                for (m, n) in [(0, 0), (0, 3), (1, 5), (2, 4), (3, 2), (4, 5)] {
                    let f = not_written(&l, &up, &x, &Expr::int(m), &Expr::int(n), &ce).unwrap();
                    prop_assert_eq!(ev.formula(&f, &s0).unwrap(), not_written_enumerated(&index, m, n, &c), "{} m={} n={} c={:?}", x, m, n, c);
                }
            }
        }
    }

    #[test]
    fn additive_recurrences_are_solved(
        coeffs in prop::collection::vec((-3i64..4, -2i64..3, 0usize..3), 1..5),
        init in prop::collection::vec(-6i64..7, 5),
    ) {
        // s_k' = s_k + c_k + e_k · s_{j}^{p} for some earlier j
        let mut symbols = SymbolMap::new();
        let vars: Vec<Var> = (0..coeffs.len()).map(|k| symbols.symbol(&Lvalue::scalar(Var::scalar(format!("s{k}"))))).collect();
        let mut equations = Vec::new();
        for (k, &(c, e, p)) in coeffs.iter().enumerate() {
            let mut q = Expr::int(c);
            if k > 0 {
                let dep = Expr::var(&vars[(k - 1) / 2]);
                let mut pow = Expr::int(e);
                for _ in 0..p {
                    pow = pow * dep.clone();
                }
                q = q + pow;
            }
            equations.push((vars[k].clone(), Expr::var(&vars[k]) + q));
        }
        let r = RecurrenceSystem { symbols, equations };
        let sol = solve_rec(&r).unwrap();
        prop_assert!(verify_solution(&r, &sol).is_ok());
        let mut cur: Vec<i64> = init[..vars.len()].to_vec();
        let ev = Evaluator::new();
        for n in 0..7i64 {
            let mut s = State::new().with_int("n", n);
            for (v, x0) in vars.iter().zip(&init) {
                s = s.with_int(&v.name, *x0);
            }
            for (k, v) in vars.iter().enumerate() {
                prop_assert_eq!(ev.expr(&sol.expr(v), &s).unwrap(), cur[k], "{} at n={}\n{}", v, n, r);
            }
            let before = cur.clone();
            let mut env = State::new();
            for (v, x) in vars.iter().zip(&before) {
                env = env.with_int(&v.name, *x);
            }
            for (k, (_, e)) in r.equations.iter().enumerate() {
                cur[k] = ev.expr(e, &env).unwrap();
            }
        }
    }
}

fn literal() -> impl Strategy<Value = Formula> {
    let reads = prop_oneof![
        Just(Expr::scalar("x")),
        Just(Expr::scalar("y")),
        Just(Expr::select(&a(), vec![Expr::scalar("x")])),
        Just(Expr::select(&a(), vec![Expr::scalar("y")])),
        Just(Expr::select(&Var::array("b", 1), vec![Expr::scalar("y")])),
    ];
    (rel(), reads.clone(), reads, -2i64..3).prop_map(|(r, l, t, c)| Formula::Rel(r, l, t + c))
}

fn holds(fs: &[Formula], s: &State) -> bool {
    let ev = Evaluator::new().with_window(1, ProbeWindow::cube(1, -12, 12));
    fs.iter().all(|f| ev.formula(f, s).unwrap_or(false))
}

/// Every assignment with `x, y ∈ [-2, 2]` and `a` ranging over tables with
/// values in `[-2, 2]` at the cells `x` and `y`.
fn satisfiable_by_enumeration(fs: &[Formula]) -> bool {
    let b_def = ArrayExpr::Lambda(
        vec![Var::scalar("c")],
        Box::new(Expr::ite(Expr::scalar("c").eq(Expr::scalar("x")), Expr::scalar("y"), Expr::select(&a(), vec![Expr::scalar("c")]))),
    );
    let with_b = arrayaccel::subst::Subst::new().with(Var::array("b", 1), b_def);
    let fs: Vec<Formula> = fs.iter().map(|f| f.subst(&with_b).beta_reduce()).collect();
    for x in -2..=2 {
        for y in -2..=2 {
            for vx in -2..=2 {
                for vy in -2..=2 {
                    if x == y && vx != vy {
                        continue;
                    }
                    let arr = ArrayValue::constant(1, 0).with(vec![x], vx).with(vec![y], vy);
                    let s = State::new().with_int("x", x).with_int("y", y).with_value(a(), Value::table(arr));
                    if holds(&fs, &s) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn solver_answers_are_sound(lits in prop::collection::vec(literal(), 1..4)) {
        let mut prover = Prover::auto(Duration::from_secs(10));
        prop_assume!(prover.has_backend());
        let b = Var::array("b", 1);
        let def = Formula::ArrayEq(
            ArrayExpr::Var(b),
            ArrayExpr::Lambda(vec![Var::scalar("c")], Box::new(Expr::ite(
                Expr::scalar("c").eq(Expr::scalar("x")), Expr::scalar("y"), Expr::select(&a(), vec![Expr::scalar("c")]),
            ))),
        );
        let mut fs = vec![def];
        fs.extend(lits);
        match solve(&fs, &mut prover) {
            SolveResult::Model(m) => prop_assert!(holds(&fs, &m.to_state()), "model {} violates the input", m),
            SolveResult::Unsat => prop_assert!(!satisfiable_by_enumeration(&fs), "unsat, but enumeration finds a model"),
            SolveResult::Unknown(_) => {}
        }
    }
}
