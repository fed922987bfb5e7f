//! Satisfiability of literal conjunctions containing λ-terms, by
//! propagation, β-reduction, abstraction of the remaining λs, and lazily
//! instantiated read lemmas over a ground solver.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::eval::{ArrayValue, Evaluator};
use crate::expr::{ArrayExpr, Expr, Formula, FreeVars, LvalSet, Lvalue, Rel, Var};
use crate::prover::{Prover, Validity};
use crate::simplify::normalize;
use crate::smt::{Answer, Model, ModelValue};
use crate::subst::{fresh_var, BetaReduce, Subst, Substitute};

#[derive(Clone, Debug)]
pub enum SolveResult {
    Model(Model),
    Unsat,
    Unknown(String),
}

impl fmt::Display for SolveResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveResult::Model(m) => write!(f, "sat: {m}"),
            SolveResult::Unsat => f.write_str("unsat"),
            SolveResult::Unknown(why) => write!(f, "unknown: {why}"),
        }
    }
}

/// What happened during one call to [`solve_traced`].
#[derive(Clone, Debug, Default)]
pub struct SolveTrace {
    /// Variables eliminated by propagation, in order.
    pub propagated: Vec<Var>,
    pub abstracted: Vec<(Var, ArrayExpr)>,
    pub lemmas: Vec<Formula>,
    pub rounds: usize,
}

fn apply_fresh(p: &ArrayExpr, q: &ArrayExpr) -> (Expr, Expr) {
    let idx: Vec<Expr> = (0..p.arity()).map(|_| Expr::var(&fresh_var("ext", 0))).collect();
    (
        Expr::apply(p.clone(), idx.clone()).beta_reduce(),
        Expr::apply(q.clone(), idx).beta_reduce(),
    )
}

/// `p ≠ q` becomes `p[i*] ≠ q[i*]` for fresh scalars `i*`.
pub fn eliminate_diseq(fs: &[Formula]) -> Vec<Formula> {
    fs.iter()
        .map(|f| match f {
            Formula::Not(g) => match &**g {
                Formula::ArrayEq(p, q) => {
                    let (a, b) = apply_fresh(p, q);
                    a.ne(b)
                }
                _ => f.clone(),
            },
            _ => f.clone(),
        })
        .collect()
}

fn definition(f: &Formula) -> Option<(Var, ArrayExpr)> {
    let pick = |x: &Var, p: ArrayExpr| (!p.free_vars().contains(x)).then(|| (x.clone(), p));
    match f {
        Formula::Rel(Rel::Eq, a, b) => {
            let scalar = |e: &Expr| e.as_scalar_var().cloned();
            let lift = |e: &Expr| ArrayExpr::Lambda(vec![], Box::new(e.clone()));
            scalar(a)
                .and_then(|x| pick(&x, lift(b)))
                .or_else(|| scalar(b).and_then(|x| pick(&x, lift(a))))
        }
        Formula::ArrayEq(p, q) => {
            let var = |p: &ArrayExpr| match p {
                ArrayExpr::Var(x) => Some(x.clone()),
                _ => None,
            };
            var(p).and_then(|x| pick(&x, q.clone())).or_else(|| var(q).and_then(|x| pick(&x, p.clone())))
        }
        _ => None,
    }
}

fn subst_of(x: &Var, p: &ArrayExpr) -> Subst {
    match p {
        ArrayExpr::Lambda(params, body) if x.is_scalar() && params.is_empty() => {
            Subst::new().with_scalar(x.clone(), (**body).clone())
        }
        _ => Subst::new().with(x.clone(), p.clone()),
    }
}

fn tidy(fs: Vec<Formula>) -> Vec<Formula> {
    let mut out = Vec::new();
    for f in fs {
        for g in normalize(&f).conjuncts() {
            if !out.contains(&g) {
                out.push(g);
            }
        }
    }
    if out.contains(&Formula::False) {
        return vec![Formula::False];
    }
    out
}

/// Substitutes definitions `x = p` away and β-reduces until nothing
/// changes. Returns the log of eliminated definitions.
pub fn propagate_and_reduce(fs: Vec<Formula>) -> (Vec<Formula>, Vec<(Var, ArrayExpr)>) {
    let mut fs = tidy(fs.into_iter().map(|f| f.beta_reduce()).collect());
    let mut log = Vec::new();
    while let Some((k, (x, p))) = fs.iter().enumerate().find_map(|(k, f)| definition(f).map(|d| (k, d))) {
        fs.remove(k);
        let s = subst_of(&x, &p);
        fs = tidy(fs.into_iter().map(|f| f.subst(&s).beta_reduce()).collect());
        log.push((x, p));
    }
    (fs, log)
}

fn canonical(p: &ArrayExpr) -> ArrayExpr {
    match p {
        ArrayExpr::Lambda(params, body) => {
            let renamed: Vec<Var> = (0..params.len()).map(|k| Var::scalar(format!("%{k}"))).collect();
            let mut s = Subst::new();
            for (a, b) in params.iter().zip(&renamed) {
                s.insert_scalar(a.clone(), Expr::var(b));
            }
            ArrayExpr::Lambda(renamed, Box::new(body.subst(&s)))
        }
        other => other.clone(),
    }
}

/// Replaces every λ left in an array equality by a fresh array variable;
/// α-equivalent λs share one variable.
pub fn abstract_lambdas(fs: &[Formula]) -> (Vec<Formula>, Vec<(Var, ArrayExpr)>) {
    let mut by_shape: BTreeMap<ArrayExpr, Var> = BTreeMap::new();
    let mut map = Vec::new();
    let mut abstracted = |p: &ArrayExpr| -> ArrayExpr {
        if !p.is_lambda() {
            return p.clone();
        }
        let key = canonical(p);
        let v = by_shape.entry(key).or_insert_with(|| {
            let v = fresh_var("lam", p.arity());
            map.push((v.clone(), p.clone()));
            v
        });
        ArrayExpr::Var(v.clone())
    };
    let out = fs
        .iter()
        .map(|f| match f {
            Formula::ArrayEq(p, q) => Formula::ArrayEq(abstracted(p), abstracted(q)),
            other => other.clone(),
        })
        .collect();
    (out, map)
}

/// Index vectors of array reads outside λs, including reads nested in
/// other indices.
pub fn collect_idx(fs: &[Formula]) -> Vec<Vec<Expr>> {
    let mut work: Vec<Lvalue> = fs.iter().flat_map(LvalSet::lval_set).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while let Some(l) = work.pop() {
        if !seen.insert(l.clone()) {
            continue;
        }
        work.extend(l.index.iter().flat_map(LvalSet::lval_set));
        if !l.var.is_scalar() && !out.contains(&l.index) {
            out.push(l.index);
        }
    }
    out
}

fn default_value(v: &Var) -> ModelValue {
    if v.is_scalar() {
        ModelValue::Int(0)
    } else {
        ModelValue::Table(ArrayValue::constant(v.arity, 0))
    }
}

fn complete(m: &mut Model, vars: impl IntoIterator<Item = Var>) {
    for v in vars {
        if m.get(&v).is_none() {
            let d = default_value(&v);
            m.insert(v, d);
        }
    }
}

/// Replays the propagation log backwards.
fn reconstruct(mut m: Model, log: &[(Var, ArrayExpr)]) -> Model {
    for (x, p) in log.iter().rev() {
        complete(&mut m, p.free_vars());
        let closed = p.subst(&m.to_subst()).beta_reduce();
        let value = match closed {
            ArrayExpr::Lambda(params, body) if params.is_empty() => {
                match Evaluator::new().expr(&body, &m.to_state()) {
                    Ok(v) => ModelValue::Int(v),
                    Err(_) => ModelValue::Int(0),
                }
            }
            other => ModelValue::Function(other),
        };
        m.insert(x.clone(), value);
    }
    m
}

/// Whether `m` satisfies every literal; array equalities are settled as
/// validity queries after substituting the model.
pub fn check_model(m: &Model, fs: &[Formula], prover: &mut Prover) -> bool {
    let state = m.to_state();
    let ev = Evaluator::new();
    let s = m.to_subst();
    fs.iter().all(|f| match f {
        Formula::ArrayEq(p, q) => {
            let (a, b) = apply_fresh(&p.subst(&s), &q.subst(&s));
            matches!(prover.valid(&a.eq(b)), Validity::Valid)
        }
        Formula::Not(g) if matches!(**g, Formula::ArrayEq(..)) => {
            let Formula::ArrayEq(p, q) = &**g else { unreachable!() };
            let (a, b) = apply_fresh(&p.subst(&s), &q.subst(&s));
            let probe: Vec<Var> = a.free_vars().union(&b.free_vars()).cloned().collect();
            matches!(prover.sat(&[a.ne(b)], &probe), Answer::Sat(_))
        }
        other => ev.formula(other, &state).unwrap_or(false),
    })
}

pub fn solve(fs: &[Formula], prover: &mut Prover) -> SolveResult {
    solve_traced(fs, prover).0
}

pub fn solve_traced(fs: &[Formula], prover: &mut Prover) -> (SolveResult, SolveTrace) {
    let mut trace = SolveTrace::default();
    let original_vars: BTreeSet<Var> = fs.iter().flat_map(FreeVars::free_vars).collect();
    let phi = eliminate_diseq(fs);
    let (reduced, log) = propagate_and_reduce(phi.clone());
    trace.propagated = log.iter().map(|(x, _)| x.clone()).collect();
    if reduced == [Formula::False] {
        return (SolveResult::Unsat, trace);
    }
    let (mut abs, map) = abstract_lambdas(&reduced);
    trace.abstracted = map;
    let equalities: Vec<(ArrayExpr, ArrayExpr)> = reduced
        .iter()
        .filter_map(|f| match f {
            Formula::ArrayEq(p, q) => Some((p.clone(), q.clone())),
            _ => None,
        })
        .collect();
    let idx = collect_idx(&reduced);
    let max_rounds = equalities.len() * idx.len() + 1;
    let mut lemma_set: BTreeSet<Formula> = BTreeSet::new();
    loop {
        trace.rounds += 1;
        assert!(trace.rounds <= max_rounds, "refinement exceeded {max_rounds} rounds");
        let vars: Vec<Var> = abs.iter().flat_map(FreeVars::free_vars).collect::<BTreeSet<_>>().into_iter().collect();
        let mut m = match prover.sat(&abs, &vars) {
            Answer::Unsat => return (SolveResult::Unsat, trace),
            Answer::Unknown(why) => return (SolveResult::Unknown(why), trace),
            Answer::Sat(m) => m,
        };
        complete(&mut m, reduced.iter().flat_map(FreeVars::free_vars));
        let full = reconstruct(m.clone(), &log);
        if check_model(&full, &phi, prover) {
            let mut out = Model::new();
            for v in &original_vars {
                out.insert(v.clone(), full.get(v).cloned().unwrap_or_else(|| default_value(v)));
            }
            return (SolveResult::Model(out), trace);
        }
        let state = m.to_state();
        let ev = Evaluator::new();
        let mut added = 0;
        for (p, q) in &equalities {
            for e in idx.iter().filter(|e| e.len() == p.arity()) {
                let (a, b) = (Expr::apply(p.clone(), e.clone()), Expr::apply(q.clone(), e.clone()));
                let agree = matches!((ev.expr(&a, &state), ev.expr(&b, &state)), (Ok(x), Ok(y)) if x == y);
                if agree {
                    continue;
                }
                let lemma = normalize(&a.eq(b).beta_reduce());
                if lemma_set.insert(lemma.clone()) {
                    abs.push(lemma.clone());
                    trace.lemmas.push(lemma);
                    added += 1;
                }
            }
        }
        if added == 0 {
            return (SolveResult::Unknown("candidate model is spurious and no read lemma refines it".into()), trace);
        }
    }
}
