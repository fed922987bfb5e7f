//! Concrete evaluation of expressions and formulas over states.
//!
//! Arrays are total functions on `Z^k`. A stored array is a background
//! function plus finitely many overridden cells; λs evaluate to closures.
//! Equality between two arrays is decided exactly when both are stored
//! arrays with the same background, and otherwise on a probe window.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::expr::{ArrayExpr, BinOp, Expr, Formula, Var};
use crate::simplify::floor_div;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    Unbound(String),
    #[error("arity mismatch: '{name}' has arity {expected}, used with {got} index(es)")]
    Arity { name: String, expected: usize, got: usize },
    #[error("division by zero")]
    DivByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("equality between arrays needs a probe window")]
    NoWindow,
}

/// The values an array takes outside its overridden cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Background {
    Const(i64),
    /// The sum of the index components (`λj. j` in one dimension).
    Identity,
    /// A fixed pseudo-random function of the index, values in `[-range, range]`.
    Hash { seed: u64, range: i64 },
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Background {
    pub fn at(&self, idx: &[i64]) -> i64 {
        match self {
            Background::Const(c) => *c,
            Background::Identity => idx.iter().fold(0i64, |acc, x| acc.wrapping_add(*x)),
            Background::Hash { seed, range } => {
                let h = idx.iter().fold(splitmix(*seed), |acc, x| splitmix(acc ^ (*x as u64)));
                let span = (2 * range + 1) as u64;
                (h % span) as i64 - range
            }
        }
    }
}

/// A background function with finitely many overridden cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayValue {
    pub arity: usize,
    pub background: Background,
    pub cells: BTreeMap<Vec<i64>, i64>,
}

impl ArrayValue {
    pub fn new(arity: usize, background: Background) -> Self {
        ArrayValue { arity, background, cells: BTreeMap::new() }
    }

    pub fn constant(arity: usize, c: i64) -> Self {
        ArrayValue::new(arity, Background::Const(c))
    }

    pub fn identity(arity: usize) -> Self {
        ArrayValue::new(arity, Background::Identity)
    }

    pub fn get(&self, idx: &[i64]) -> i64 {
        self.cells.get(idx).copied().unwrap_or_else(|| self.background.at(idx))
    }

    pub fn set(&mut self, idx: Vec<i64>, v: i64) {
        if self.background.at(&idx) == v {
            self.cells.remove(&idx);
        } else {
            self.cells.insert(idx, v);
        }
    }

    pub fn with(mut self, idx: Vec<i64>, v: i64) -> Self {
        self.set(idx, v);
        self
    }
}

impl fmt::Display for ArrayValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bg = match &self.background {
            Background::Const(c) => c.to_string(),
            Background::Identity => "identity".to_string(),
            Background::Hash { seed, .. } => format!("hash#{seed}"),
        };
        write!(f, "[default {bg}")?;
        for (idx, v) in &self.cells {
            let idx: Vec<String> = idx.iter().map(i64::to_string).collect();
            write!(f, ", {}↦{v}", idx.join(","))?;
        }
        f.write_str("]")
    }
}

#[derive(Clone)]
pub enum ArrayFn {
    Table(Arc<ArrayValue>),
    Closure { params: Vec<Var>, body: Arc<Expr>, env: Arc<State> },
}

impl fmt::Debug for ArrayFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrayFn::Table(t) => write!(f, "{t}"),
            ArrayFn::Closure { params, body, .. } => {
                write!(f, "closure {}", ArrayExpr::Lambda(params.clone(), Box::new((**body).clone())))
            }
        }
    }
}

impl ArrayFn {
    pub fn arity(&self) -> usize {
        match self {
            ArrayFn::Table(t) => t.arity,
            ArrayFn::Closure { params, .. } => params.len(),
        }
    }

    pub fn apply(&self, idx: &[i64]) -> Result<i64, EvalError> {
        match self {
            ArrayFn::Table(t) => Ok(t.get(idx)),
            ArrayFn::Closure { params, body, env } => {
                let mut local = (**env).clone();
                for (p, v) in params.iter().zip(idx) {
                    local.set(p.clone(), Value::Int(*v));
                }
                Evaluator::new().expr(body, &local)
            }
        }
    }

    /// Tabulates the function on `points`; cells equal to `background` are
    /// left implicit.
    pub fn tabulate(&self, background: Background, points: &[Vec<i64>]) -> Result<ArrayValue, EvalError> {
        let mut out = ArrayValue::new(self.arity(), background);
        for p in points {
            out.set(p.clone(), self.apply(p)?);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    Array(ArrayFn),
}

impl Value {
    pub fn table(a: ArrayValue) -> Value {
        Value::Array(ArrayFn::Table(Arc::new(a)))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Array(_) => None,
        }
    }

    pub fn as_array(&self) -> Option<&ArrayFn> {
        match self {
            Value::Array(a) => Some(a),
            Value::Int(_) => None,
        }
    }
}

/// Finite assignment of variables to values.
#[derive(Clone, Debug, Default)]
pub struct State {
    vars: BTreeMap<Var, Value>,
}

impl State {
    pub fn new() -> Self {
        State::default()
    }

    pub fn set(&mut self, v: Var, value: Value) {
        self.vars.insert(v, value);
    }

    pub fn set_int(&mut self, name: &str, v: i64) {
        self.set(Var::scalar(name), Value::Int(v));
    }

    pub fn set_array(&mut self, v: &Var, a: ArrayValue) {
        debug_assert_eq!(v.arity, a.arity);
        self.set(v.clone(), Value::table(a));
    }

    pub fn with_int(mut self, name: &str, v: i64) -> Self {
        self.set_int(name, v);
        self
    }

    pub fn with_value(mut self, v: Var, value: Value) -> Self {
        self.set(v, value);
        self
    }

    pub fn with_array(mut self, v: &Var, a: ArrayValue) -> Self {
        self.set_array(v, a);
        self
    }

    pub fn get(&self, v: &Var) -> Option<&Value> {
        self.vars.get(v)
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        self.vars.get(&Var::scalar(name)).and_then(Value::as_int)
    }

    pub fn array(&self, v: &Var) -> Option<&ArrayFn> {
        self.vars.get(v).and_then(Value::as_array)
    }

    pub fn remove(&mut self, v: &Var) {
        self.vars.remove(v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Value)> {
        self.vars.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.vars.keys()
    }
}

/// Index points used to compare arrays that are not both stored tables.
#[derive(Clone, Debug, Default)]
pub struct ProbeWindow {
    pub points: Vec<Vec<i64>>,
}

impl ProbeWindow {
    /// All points of `[lo, hi]^arity`.
    pub fn cube(arity: usize, lo: i64, hi: i64) -> Self {
        let mut points = vec![Vec::new()];
        for _ in 0..arity {
            let mut next = Vec::new();
            for p in &points {
                for x in lo..=hi {
                    let mut q = p.clone();
                    q.push(x);
                    next.push(q);
                }
            }
            points = next;
        }
        ProbeWindow { points }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Evaluator {
    windows: BTreeMap<usize, ProbeWindow>,
}

fn arith(op: BinOp, a: i64, b: i64) -> Result<i64, EvalError> {
    match op {
        BinOp::Add => a.checked_add(b).ok_or(EvalError::Overflow),
        BinOp::Sub => a.checked_sub(b).ok_or(EvalError::Overflow),
        BinOp::Mul => a.checked_mul(b).ok_or(EvalError::Overflow),
        BinOp::Div => {
            if b == 0 {
                Err(EvalError::DivByZero)
            } else {
                floor_div(a, b).ok_or(EvalError::Overflow)
            }
        }
    }
}

impl Evaluator {
    pub fn new() -> Self {
        Evaluator::default()
    }

    /// Registers a probe window for array equalities of the window's arity.
    pub fn with_window(mut self, arity: usize, w: ProbeWindow) -> Self {
        self.windows.insert(arity, w);
        self
    }

    pub fn expr(&self, e: &Expr, s: &State) -> Result<i64, EvalError> {
        match e {
            Expr::Const(c) => Ok(*c),
            Expr::Bin(op, a, b) => arith(*op, self.expr(a, s)?, self.expr(b, s)?),
            Expr::App(head, idx) => {
                let vals = idx.iter().map(|x| self.expr(x, s)).collect::<Result<Vec<_>, _>>()?;
                match head.as_ref() {
                    ArrayExpr::Var(v) => match s.get(v) {
                        None => Err(EvalError::Unbound(v.name.clone())),
                        Some(Value::Int(x)) if vals.is_empty() => Ok(*x),
                        Some(Value::Int(_)) => {
                            Err(EvalError::Arity { name: v.name.clone(), expected: 0, got: vals.len() })
                        }
                        Some(Value::Array(f)) => {
                            if f.arity() != vals.len() {
                                return Err(EvalError::Arity {
                                    name: v.name.clone(),
                                    expected: f.arity(),
                                    got: vals.len(),
                                });
                            }
                            f.apply(&vals)
                        }
                    },
                    ArrayExpr::Lambda(params, body) => {
                        if params.len() != vals.len() {
                            return Err(EvalError::Arity {
                                name: "lambda".into(),
                                expected: params.len(),
                                got: vals.len(),
                            });
                        }
                        let mut local = s.clone();
                        for (p, v) in params.iter().zip(vals) {
                            local.set(p.clone(), Value::Int(v));
                        }
                        self.expr(body, &local)
                    }
                }
            }
            Expr::Ite(g, a, b) => {
                if self.formula(g, s)? {
                    self.expr(a, s)
                } else {
                    self.expr(b, s)
                }
            }
        }
    }

    pub fn array(&self, p: &ArrayExpr, s: &State) -> Result<ArrayFn, EvalError> {
        match p {
            ArrayExpr::Var(v) => match s.get(v) {
                Some(Value::Array(f)) => Ok(f.clone()),
                Some(Value::Int(_)) => Err(EvalError::Arity { name: v.name.clone(), expected: 0, got: v.arity }),
                None => Err(EvalError::Unbound(v.name.clone())),
            },
            ArrayExpr::Lambda(params, body) => {
                let mut env = s.clone();
                for q in params {
                    env.remove(q);
                }
                Ok(ArrayFn::Closure { params: params.clone(), body: Arc::new((**body).clone()), env: Arc::new(env) })
            }
        }
    }

    pub fn value(&self, p: &ArrayExpr, s: &State) -> Result<Value, EvalError> {
        if p.arity() == 0 {
            self.expr(&Expr::apply(p.clone(), Vec::new()), s).map(Value::Int)
        } else {
            self.array(p, s).map(Value::Array)
        }
    }

    pub fn arrays_equal(&self, f: &ArrayFn, g: &ArrayFn) -> Result<bool, EvalError> {
        if let (ArrayFn::Table(x), ArrayFn::Table(y)) = (f, g) {
            if x.background == y.background {
                let keys: BTreeSet<&Vec<i64>> = x.cells.keys().chain(y.cells.keys()).collect();
                return Ok(keys.into_iter().all(|k| x.get(k) == y.get(k)));
            }
        }
        let window = self.windows.get(&f.arity()).ok_or(EvalError::NoWindow)?;
        let mut points: BTreeSet<Vec<i64>> = window.points.iter().cloned().collect();
        for t in [f, g] {
            if let ArrayFn::Table(t) = t {
                points.extend(t.cells.keys().cloned());
            }
        }
        for p in &points {
            if f.apply(p)? != g.apply(p)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn formula(&self, f: &Formula, s: &State) -> Result<bool, EvalError> {
        match f {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Rel(r, a, b) => Ok(r.holds(self.expr(a, s)?, self.expr(b, s)?)),
            Formula::Divides(d, e) => {
                let v = self.expr(e, s)?;
                if *d == 0 {
                    return Ok(v == 0);
                }
                Ok(v.checked_rem(*d).is_none_or(|r| r == 0))
            }
            Formula::ArrayEq(p, q) => {
                let (f, g) = (self.array(p, s)?, self.array(q, s)?);
                self.arrays_equal(&f, &g)
            }
            Formula::Not(g) => Ok(!self.formula(g, s)?),
            Formula::And(fs) => {
                for g in fs {
                    if !self.formula(g, s)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(fs) => {
                for g in fs {
                    if self.formula(g, s)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Implies(a, b) => Ok(!self.formula(a, s)? || self.formula(b, s)?),
            Formula::Iff(a, b) => Ok(self.formula(a, s)? == self.formula(b, s)?),
        }
    }
}

pub fn eval_expr(e: &Expr, s: &State) -> Result<i64, EvalError> {
    Evaluator::new().expr(e, s)
}

pub fn eval_formula(f: &Formula, s: &State) -> Result<bool, EvalError> {
    Evaluator::new().formula(f, s)
}

pub fn eval_array(p: &ArrayExpr, s: &State) -> Result<ArrayFn, EvalError> {
    Evaluator::new().array(p, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::Decls;

    fn decls() -> Decls {
        Decls::new().with(&Var::scalar("i")).with(&Var::scalar("k")).with(&Var::array("a", 1))
    }

    fn swap_state() -> State {
        State::new().with_int("i", 0).with_int("k", 5).with_array(&Var::array("a", 1), ArrayValue::identity(1))
    }

    #[test]
    fn swap_update_evaluates_to_transposition() {
        let p = decls()
            .parse_array("(lambda (j) (ite (= j (+ i 1)) (select a i) (ite (= j i) (select a (+ i 1)) (select a j))))")
            .unwrap();
        let f = eval_array(&p, &swap_state()).unwrap();
        assert_eq!(f.apply(&[1]).unwrap(), 0);
        assert_eq!(f.apply(&[0]).unwrap(), 1);
        for j in 2..8 {
            assert_eq!(f.apply(&[j]).unwrap(), j);
        }
        assert_eq!(f.apply(&[-3]).unwrap(), -3);
    }

    #[test]
    fn constants_and_reads() {
        assert_eq!(eval_expr(&Expr::int(7), &State::new()).unwrap(), 7);
        let s = swap_state().with_int("i", 2);
        let e = decls().parse_expr("(+ (select a i) (select a (+ i 1)))").unwrap();
        assert_eq!(eval_expr(&e, &s).unwrap(), 5);
    }

    #[test]
    fn errors_are_reported() {
        let e = Expr::scalar("zz");
        assert_eq!(eval_expr(&e, &State::new()), Err(EvalError::Unbound("zz".into())));
        let d = Expr::int(1).div(Expr::int(0));
        assert_eq!(eval_expr(&d, &State::new()), Err(EvalError::DivByZero));
        let big = Expr::int(i64::MAX) + 1;
        assert_eq!(eval_expr(&big, &State::new()), Err(EvalError::Overflow));
    }

    #[test]
    fn array_equality_of_tables_is_exact() {
        let a = ArrayValue::identity(1).with(vec![3], 9);
        let b = ArrayValue::identity(1).with(vec![3], 9).with(vec![4], 4);
        let ev = Evaluator::new();
        let (fa, fb) = (ArrayFn::Table(Arc::new(a)), ArrayFn::Table(Arc::new(b)));
        assert!(ev.arrays_equal(&fa, &fb).unwrap());
    }

    #[test]
    fn closure_equality_uses_window() {
        let s = swap_state();
        let p = decls().parse_array("(lambda (j) j)").unwrap();
        let f = eval_array(&p, &s).unwrap();
        let g = s.array(&Var::array("a", 1)).unwrap().clone();
        assert_eq!(Evaluator::new().arrays_equal(&f, &g), Err(EvalError::NoWindow));
        let ev = Evaluator::new().with_window(1, ProbeWindow::cube(1, -5, 5));
        assert!(ev.arrays_equal(&f, &g).unwrap());
    }

    #[test]
    fn hash_background_is_deterministic_and_bounded() {
        let b = Background::Hash { seed: 7, range: 20 };
        for x in -50..50 {
            let v = b.at(&[x]);
            assert!((-20..=20).contains(&v));
            assert_eq!(v, b.at(&[x]));
        }
    }
}
