//! Single-path loops `while φ do ℓ ← r`, their update substitution `up`,
//! and a concrete interpreter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::eval::{ArrayFn, ArrayValue, EvalError, Evaluator, State, Value};
use crate::expr::{ArrayExpr, Expr, Formula, FreeVars, Lvalue, Var};
use crate::prover::{Prover, Validity};
use crate::simplify::{normalize_expr, simplify_array};
use crate::subst::{readable_var, BetaReduce, Subst, Substitute};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loop {
    /// Conjunction of (in)equations.
    pub guard: Vec<Formula>,
    pub lhs: Vec<Lvalue>,
    pub rhs: Vec<Expr>,
}

impl Loop {
    pub fn new(guard: Vec<Formula>, updates: Vec<(Lvalue, Expr)>) -> Self {
        let (lhs, rhs) = updates.into_iter().unzip();
        Loop { guard, lhs, rhs }
    }

    pub fn guard_formula(&self) -> Formula {
        Formula::and(self.guard.iter().cloned())
    }

    /// Every variable occurring in the loop.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs = BTreeSet::new();
        for g in &self.guard {
            vs.extend(g.free_vars());
        }
        for l in &self.lhs {
            vs.extend(l.free_vars());
        }
        for r in &self.rhs {
            vs.extend(r.free_vars());
        }
        vs
    }

    pub fn written(&self) -> BTreeSet<Var> {
        self.lhs.iter().map(|l| l.var.clone()).collect()
    }

    /// Positions of the updates writing `x`, in update order.
    pub fn writes_to<'a>(&'a self, x: &'a Var) -> impl Iterator<Item = usize> + 'a {
        self.lhs.iter().enumerate().filter(move |(_, l)| &l.var == x).map(|(k, _)| k)
    }

    pub fn updates(&self) -> impl Iterator<Item = (&Lvalue, &Expr)> {
        self.lhs.iter().zip(&self.rhs)
    }
}

impl fmt::Display for Loop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "while {} do (", self.guard_formula())?;
        for (k, l) in self.lhs.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(") <- (")?;
        for (k, r) in self.rhs.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug)]
pub enum Validation {
    Ok,
    /// Updates at these positions may write the same cell.
    Violation { first: usize, second: usize, witness: Option<State> },
    Inconclusive { first: usize, second: usize, reason: String },
}

/// Checks that no two updated lvalues can denote the same cell.
pub fn validate_loop(l: &Loop, prover: &mut Prover) -> Validation {
    for a in 0..l.lhs.len() {
        for b in a + 1..l.lhs.len() {
            if l.lhs[a].var != l.lhs[b].var {
                continue;
            }
            let distinct = Formula::vec_ne(&l.lhs[a].index, &l.lhs[b].index);
            match prover.valid(&distinct) {
                Validity::Valid => {}
                Validity::Invalid(witness) => return Validation::Violation { first: a, second: b, witness },
                Validity::Unknown(reason) => return Validation::Inconclusive { first: a, second: b, reason },
            }
        }
    }
    Validation::Ok
}

/// The substitution describing one execution of the loop body:
/// `up(x) = λ j. ite(j = r1, rhs1, ite(j = r2, rhs2, ... x[j]))`.
pub fn build_up(l: &Loop) -> Subst {
    let taken: BTreeSet<String> = l.vars().into_iter().map(|v| v.name).collect();
    let mut up = Subst::new();
    for x in l.written() {
        let writes: Vec<usize> = l.writes_to(&x).collect();
        if x.is_scalar() {
            up.insert_scalar(x.clone(), l.rhs[writes[0]].clone());
            continue;
        }
        let mut names = taken.clone();
        let params: Vec<Var> = (0..x.arity)
            .map(|_| {
                let p = readable_var("j", 0, &names);
                names.insert(p.name.clone());
                p
            })
            .collect();
        let cell: Vec<Expr> = params.iter().map(Expr::var).collect();
        let body = writes.iter().rev().fold(Expr::select(&x, cell.clone()), |acc, &k| {
            Expr::ite(Formula::vec_eq(&cell, &l.lhs[k].index), l.rhs[k].clone(), acc)
        });
        up.insert(x, ArrayExpr::lambda(params, body));
    }
    up
}

/// `upⁿ(e)`, β-reduced and simplified after every application.
pub fn up_pow(up: &Subst, e: &Expr, n: usize) -> Expr {
    let mut cur = normalize_expr(e);
    for _ in 0..n {
        cur = normalize_expr(&cur.subst(up));
    }
    cur
}

/// `upⁿ(x)` for an array variable (or any array expression).
pub fn up_pow_array(up: &Subst, p: &ArrayExpr, n: usize) -> ArrayExpr {
    let mut cur = p.clone();
    for _ in 0..n {
        cur = simplify_array(&cur.subst(up).beta_reduce());
    }
    cur
}

/// One cell written during an iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Write {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Position of the update in the loop.
    pub update: usize,
    pub var: Var,
    pub cell: Vec<i64>,
    pub value: i64,
}

fn apply_body(l: &Loop, s: &State, iteration: usize, log: Option<&mut Vec<Write>>) -> Result<State, EvalError> {
    let ev = Evaluator::new();
    let mut computed = Vec::with_capacity(l.lhs.len());
    for (lv, r) in l.updates() {
        let cell = lv.index.iter().map(|e| ev.expr(e, s)).collect::<Result<Vec<_>, _>>()?;
        computed.push((lv.var.clone(), cell, ev.expr(r, s)?));
    }
    let mut next = s.clone();
    let mut tables: BTreeMap<Var, ArrayValue> = BTreeMap::new();
    let mut closures: BTreeMap<Var, Vec<(Vec<i64>, i64)>> = BTreeMap::new();
    for (var, cell, value) in &computed {
        if var.is_scalar() {
            next.set(var.clone(), Value::Int(*value));
        } else {
            match s.array(var) {
                Some(ArrayFn::Table(t)) => {
                    tables.entry(var.clone()).or_insert_with(|| (**t).clone()).set(cell.clone(), *value);
                }
                Some(ArrayFn::Closure { .. }) => closures.entry(var.clone()).or_default().push((cell.clone(), *value)),
                None => return Err(EvalError::Unbound(var.name.clone())),
            }
        }
    }
    if let Some(log) = log {
        for (update, (var, cell, value)) in computed.iter().enumerate() {
            log.push(Write { iteration, update, var: var.clone(), cell: cell.clone(), value: *value });
        }
    }
    for (var, t) in tables {
        next.set(var, Value::table(t));
    }
    for (var, cells) in closures {
        // Overrides on top of a closure: λ j. ite(j = c1, v1, ... old[j]).
        let old = s.array(&var).expect("bound").clone();
        let params: Vec<Var> = (0..var.arity).map(|k| Var::scalar(format!("j{k}"))).collect();
        let cell: Vec<Expr> = params.iter().map(Expr::var).collect();
        let base = Var::new(format!("{}#old", var.name), var.arity);
        let body = cells.iter().rev().fold(Expr::select(&base, cell.clone()), |acc, (c, v)| {
            let at: Vec<Expr> = c.iter().map(|x| Expr::int(*x)).collect();
            Expr::ite(Formula::vec_eq(&cell, &at), Expr::int(*v), acc)
        });
        let env = State::new().with_value(base, Value::Array(old));
        next.set(var, Value::Array(ArrayFn::Closure { params, body: Arc::new(body), env: Arc::new(env) }));
    }
    Ok(next)
}

/// One guarded step; `None` when the guard is false.
pub fn step(l: &Loop, s: &State) -> Result<Option<State>, EvalError> {
    if !Evaluator::new().formula(&l.guard_formula(), s)? {
        return Ok(None);
    }
    apply_body(l, s, 1, None).map(Some)
}

#[derive(Clone, Debug)]
pub enum Run {
    Done(State),
    /// The guard failed before iteration `at + 1`; `state` is the state reached.
    Stuck { at: usize, state: State },
}

impl Run {
    pub fn state(&self) -> &State {
        match self {
            Run::Done(s) | Run::Stuck { state: s, .. } => s,
        }
    }

    pub fn completed(&self) -> Option<&State> {
        match self {
            Run::Done(s) => Some(s),
            Run::Stuck { .. } => None,
        }
    }
}

/// `n` guarded steps.
pub fn run_n(l: &Loop, s: &State, n: usize) -> Result<Run, EvalError> {
    let mut cur = s.clone();
    for k in 0..n {
        match step(l, &cur)? {
            Some(next) => cur = next,
            None => return Ok(Run::Stuck { at: k, state: cur }),
        }
    }
    Ok(Run::Done(cur))
}

/// `n` executions of the body ignoring the guard, i.e. the semantics of
/// `upⁿ`, with a log of every array cell written.
pub fn iterate(l: &Loop, s: &State, n: usize) -> Result<(State, Vec<Write>), EvalError> {
    let mut cur = s.clone();
    let mut log = Vec::new();
    for k in 1..=n {
        cur = apply_body(l, &cur, k, Some(&mut log))?;
    }
    Ok((cur, log))
}
