//! The recurrence system induced by inductive lvalues, and a solver for
//! order-1 systems of the shape `rec' = rec + q` by polynomial summation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::One;

use crate::classify::{Classification, LvalueClass};
use crate::expr::{Expr, FreeVars, Var};
use crate::loops::Loop;
use crate::poly::{Coef, Poly};
use crate::simplify::simplify_expr;
use crate::subst::{fresh_var, Substitute, SymbolMap};

/// The iteration counter of closed forms.
pub fn iteration_var() -> Var {
    Var::scalar("n")
}

fn n_atom() -> Expr {
    Expr::var(&iteration_var())
}

#[derive(Clone, Debug)]
pub struct RecurrenceSystem {
    /// `rec_ℓ` for every `ℓ ∈ L`.
    pub symbols: SymbolMap,
    /// `rec'_ℓ = e` for every inductive `ℓ`, in `L` order.
    pub equations: Vec<(Var, Expr)>,
}

impl fmt::Display for RecurrenceSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (v, e)) in self.equations.iter().enumerate() {
            if k > 0 {
                f.write_str("\n")?;
            }
            let l = self.symbols.lvalue(v).map(|l| l.to_string()).unwrap_or_default();
            write!(f, "{v}' = {e}    ; {v} stands for {l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecError {
    #[error("{0} is not in the lvalue closure")]
    OutsideClosure(String),
    #[error("recurrence for {0} reads the displacing lvalue {1}")]
    ReadsDisplacing(String, String),
    #[error("no update writes the successor of inductive {0}")]
    NoSource(String),
}

/// `rec'_{x[r]} = rhs(x[up(r)]) σ_rec` for every inductive `x[r]`.
pub fn build_rec(l: &Loop, c: &Classification) -> Result<RecurrenceSystem, RecError> {
    let mut symbols = SymbolMap::new();
    for lv in c.lvalues() {
        symbols.symbol(lv);
    }
    let forward = symbols.forward();
    let mut equations = Vec::new();
    for cl in &c.l_set {
        if cl.class != LvalueClass::Inductive {
            continue;
        }
        let k = cl.source.ok_or_else(|| RecError::NoSource(cl.lvalue.to_string()))?;
        let rhs = forward.apply(&l.rhs[k]);
        for v in rhs.free_vars() {
            let Some(lv) = symbols.lvalue(&v) else {
                return Err(RecError::OutsideClosure(v.to_string()));
            };
            if c.class_of(lv) == Some(LvalueClass::Displacing) {
                return Err(RecError::ReadsDisplacing(cl.lvalue.to_string(), lv.to_string()));
            }
        }
        let sym = symbols.lookup(&cl.lvalue).expect("allocated").clone();
        equations.push((sym, rhs));
    }
    Ok(RecurrenceSystem { symbols, equations })
}

/// `θ`: closed forms over the rec symbols and `n`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecSolution {
    pub theta: BTreeMap<Var, Poly>,
}

impl RecSolution {
    /// `θ(rec)`, or `rec` itself for symbols without an equation.
    pub fn get(&self, v: &Var) -> Poly {
        self.theta.get(v).cloned().unwrap_or_else(|| Poly::var(v))
    }

    pub fn expr(&self, v: &Var) -> Expr {
        self.get(v).to_expr()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Unsolvable {
    #[error("rec'{0} = {1} is not of the form rec + q")]
    NotAdditive(String, String),
    #[error("cyclic dependency through {0}")]
    Cycle(String),
    #[error("{0} is not polynomial")]
    NotPolynomial(String),
}

/// `Σ_{t=0}^{n-1} t^k` as polynomials in `n`, for `k = 0..=max`.
fn power_sums(max: u32) -> Vec<Poly> {
    let n = Poly::atom(n_atom());
    let mut sums: Vec<Poly> = Vec::new();
    for k in 0..=max {
        // (k+1)·S_k = n^(k+1) − Σ_{j<k} C(k+1, j)·S_j
        let mut acc = n.pow(k + 1);
        let mut binom = Coef::one();
        for (j, s) in sums.iter().enumerate() {
            let j = j as i128;
            if j > 0 {
                binom = binom * Coef::from_integer(k as i128 + 2 - j) / Coef::from_integer(j);
            }
            acc = acc.sub(&s.scale(binom));
        }
        sums.push(acc.scale(Coef::one() / Coef::from_integer(k as i128 + 1)));
    }
    sums
}

/// `Σ_{t=0}^{n-1} q(t)` where `q` is a polynomial in `n` (read as `t`).
pub fn sum_to(q: &Poly) -> Poly {
    let coefs = q.coefficients_in(&n_atom());
    let max = coefs.keys().copied().max().unwrap_or(0);
    let sums = power_sums(max);
    coefs.iter().fold(Poly::zero(), |acc, (k, c)| acc.add(&c.mul(&sums[*k as usize])))
}

pub fn solve_rec(r: &RecurrenceSystem) -> Result<RecSolution, Unsolvable> {
    let eqs: BTreeMap<Var, Poly> = r.equations.iter().map(|(v, e)| (v.clone(), Poly::from_expr(e))).collect();
    for (v, p) in &eqs {
        for a in p.atoms() {
            if a.as_scalar_var().is_none() {
                return Err(Unsolvable::NotPolynomial(format!("{a} in the equation for {v}")));
            }
        }
    }
    let mut sol = RecSolution::default();
    let mut visiting = BTreeSet::new();
    for (v, _) in &r.equations {
        solve_one(v, &eqs, &mut sol, &mut visiting)?;
    }
    Ok(sol)
}

fn solve_one(
    v: &Var,
    eqs: &BTreeMap<Var, Poly>,
    sol: &mut RecSolution,
    visiting: &mut BTreeSet<Var>,
) -> Result<(), Unsolvable> {
    if sol.theta.contains_key(v) {
        return Ok(());
    }
    let Some(p) = eqs.get(v) else { return Ok(()) };
    if !visiting.insert(v.clone()) {
        return Err(Unsolvable::Cycle(v.to_string()));
    }
    let me = Expr::var(v);
    let by_me = p.coefficients_in(&me);
    let q = by_me.get(&0).cloned().unwrap_or_default();
    let additive = by_me.len() == 2 && by_me.get(&1).and_then(Poly::as_constant) == Some(Coef::one());
    let stationary = by_me.len() == 1 && by_me.contains_key(&1) && by_me[&1].as_constant() == Some(Coef::one());
    if !(additive || stationary) {
        visiting.remove(v);
        return Err(Unsolvable::NotAdditive(v.to_string(), p.to_string()));
    }
    // q over dependencies' closed forms, with n read as the iteration t
    for a in q.atoms() {
        let dep = a.as_scalar_var().expect("checked polynomial").clone();
        solve_one(&dep, eqs, sol, visiting)?;
    }
    let q_t = apply_theta(&q, sol);
    visiting.remove(v);
    sol.theta.insert(v.clone(), Poly::var(v).add(&sum_to(&q_t)));
    Ok(())
}

/// `θ(p)`, replacing all symbols simultaneously.
fn apply_theta(p: &Poly, sol: &RecSolution) -> Poly {
    let symbols: Vec<(Expr, Var)> = p.atoms().into_iter().filter_map(|a| a.as_scalar_var().cloned().map(|v| (a, v))).collect();
    let mut out = p.clone();
    let mut holes = Vec::new();
    for (a, v) in &symbols {
        if *v == iteration_var() {
            continue;
        }
        let hole = Expr::var(&fresh_var("hole", 0));
        out = out.substitute(a, &Poly::atom(hole.clone()));
        holes.push((hole, sol.get(v)));
    }
    for (hole, image) in holes {
        out = out.substitute(&hole, &image);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Identity {
    /// `θ(rec)[n/n+1] = θ(e)`
    Step,
    /// `θ(rec)[n/0] = rec`
    Initial,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{identity:?} identity fails for {symbol}: residual {residual}")]
pub struct Counterexample {
    pub symbol: Var,
    pub identity: Identity,
    pub residual: Poly,
}

/// Checks both defining identities of a solution by polynomial
/// normalization; terms that are not polynomial are treated as opaque atoms.
pub fn verify_solution(r: &RecurrenceSystem, sol: &RecSolution) -> Result<(), Counterexample> {
    let n = n_atom();
    for (v, e) in &r.equations {
        let th = sol.get(v);
        let initial = th.substitute(&n, &Poly::zero()).sub(&Poly::var(v));
        if !initial.is_zero() {
            return Err(Counterexample { symbol: v.clone(), identity: Identity::Initial, residual: initial });
        }
        let shifted = th.substitute(&n, &Poly::atom(n.clone()).add(&Poly::int(1)));
        let image = apply_theta(&Poly::from_expr(e), sol);
        let step = shifted.sub(&image);
        if !step.is_zero() {
            return Err(Counterexample { symbol: v.clone(), identity: Identity::Step, residual: step });
        }
    }
    Ok(())
}

/// `θ(rec_ℓ)σ⁻¹` as an expression over program variables and `n`.
pub fn closed_form_of(r: &RecurrenceSystem, sol: &RecSolution, sym: &Var) -> Expr {
    let inverse = r.symbols.inverse();
    let e = sol.expr(sym);
    debug_assert!(e.free_vars().iter().all(|v| *v == iteration_var() || r.symbols.lvalue(v).is_some()));
    simplify_expr(&e.subst(&inverse))
}
