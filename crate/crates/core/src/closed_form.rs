//! Closed forms `ℓ^(n)` for the lvalues of `L`, and per-variable closed
//! forms `x^(n)` built on top of them.

use std::fmt;

use crate::array_form::{closed_form_array, ArrayFormError};
use crate::classify::{check_a_solvable, Classification, LvalueClass};
use crate::expr::{ArrayExpr, Expr, FreeVars, Lvalue, Var};
use crate::loops::{build_up, Loop};
use crate::prover::Prover;
use crate::recurrence::{build_rec, closed_form_of, solve_rec, verify_solution, RecSolution, RecurrenceSystem};
use crate::simplify::{simplify_array, simplify_expr};
use crate::subst::{LvalSubst, Subst};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Phase {
    Classification,
    Recurrence,
    Pick,
    Displacement,
    Guard,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Classification => "classification",
            Phase::Recurrence => "recurrence",
            Phase::Pick => "pick",
            Phase::Displacement => "displacement",
            Phase::Guard => "guard",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{phase} failed: {reason}")]
pub struct Failure {
    pub phase: Phase,
    pub reason: String,
}

impl Failure {
    pub fn new(phase: Phase, reason: impl Into<String>) -> Self {
        Failure { phase, reason: reason.into() }
    }
}

/// `ℓ ↦ ℓ^(n)` in `L` order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClosedFormTable {
    entries: Vec<(Lvalue, Expr)>,
}

impl ClosedFormTable {
    pub fn get(&self, l: &Lvalue) -> Option<&Expr> {
        self.entries.iter().find(|(k, _)| k == l).map(|(_, e)| e)
    }

    pub fn contains(&self, l: &Lvalue) -> bool {
        self.get(l).is_some()
    }

    pub fn insert(&mut self, l: Lvalue, e: Expr) {
        match self.entries.iter_mut().find(|(k, _)| *k == l) {
            Some(slot) => slot.1 = e,
            None => self.entries.push((l, e)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Lvalue, &Expr)> {
        self.entries.iter().map(|(l, e)| (l, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lval_subst(&self) -> LvalSubst {
        let mut s = LvalSubst::new();
        for (l, e) in &self.entries {
            s.insert(l.clone(), e.clone());
        }
        s
    }

    /// `e[ℓ/ℓ^(n)]`, simplified.
    pub fn apply(&self, e: &Expr) -> Expr {
        simplify_expr(&self.lval_subst().apply(e))
    }
}

impl fmt::Display for ClosedFormTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (l, e)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{l} ↦ {e}")?;
        }
        Ok(())
    }
}

pub fn closed_form_trivial(l: &Lvalue) -> Expr {
    l.to_expr()
}

pub fn closed_form_inductive(l: &Lvalue, rec: &RecurrenceSystem, sol: &RecSolution) -> Result<Expr, Failure> {
    let sym = rec
        .symbols
        .lookup(l)
        .filter(|s| sol.theta.contains_key(*s))
        .ok_or_else(|| Failure::new(Phase::Recurrence, format!("no solved recurrence for {l}")))?;
    Ok(closed_form_of(rec, sol, sym))
}

/// `x[r]^(n) = x[r[ℓ/ℓ^(n)]]`.
pub fn closed_form_displacing(l: &Lvalue, table: &ClosedFormTable) -> Result<Expr, Failure> {
    for inner in l.index.iter().flat_map(crate::expr::LvalSet::lval_set) {
        if !table.contains(&inner) {
            return Err(Failure::new(Phase::Pick, format!("{inner} has no closed form yet")));
        }
    }
    let index = l.index.iter().map(|e| table.apply(e)).collect();
    Ok(Expr::select(&l.var, index))
}

/// Everything computed on the way to closed forms.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub the_loop: Loop,
    pub up: Subst,
    pub classification: Classification,
    pub rec: Option<RecurrenceSystem>,
    pub solution: Option<RecSolution>,
    pub table: Result<ClosedFormTable, Failure>,
}

impl Analysis {
    pub fn run(l: &Loop, prover: &mut Prover) -> Analysis {
        let classification = check_a_solvable(l, prover);
        let mut a = Analysis {
            the_loop: l.clone(),
            up: build_up(l),
            classification,
            rec: None,
            solution: None,
            table: Err(Failure::new(Phase::Classification, "")),
        };
        if !a.classification.solvable {
            let why = a.classification.reason.clone().unwrap_or_else(|| "not a-solvable".into());
            a.table = Err(Failure::new(Phase::Classification, why));
            return a;
        }
        let rec = match build_rec(l, &a.classification) {
            Ok(r) => r,
            Err(e) => {
                a.table = Err(Failure::new(Phase::Recurrence, e.to_string()));
                return a;
            }
        };
        let sol = solve_rec(&rec).map_err(|e| Failure::new(Phase::Recurrence, e.to_string()));
        a.table = sol.and_then(|sol| {
            verify_solution(&rec, &sol).map_err(|c| Failure::new(Phase::Recurrence, c.to_string()))?;
            let t = fill_table(&a.classification, &rec, &sol);
            a.solution = Some(sol);
            t
        });
        a.rec = Some(rec);
        a
    }

    pub fn table(&self) -> Result<&ClosedFormTable, Failure> {
        self.table.as_ref().map_err(Clone::clone)
    }

    /// `x^(n)` for a loop variable of positive arity, or `λ.x^(n)` for a
    /// scalar.
    pub fn var_closed_form(&self, x: &Var) -> Result<ArrayExpr, Failure> {
        let table = self.table()?;
        if !self.the_loop.written().contains(x) {
            return Ok(ArrayExpr::Var(x.clone()));
        }
        if x.is_scalar() {
            if let Some(e) = table.get(&Lvalue::scalar(x.clone())) {
                return Ok(ArrayExpr::Lambda(vec![], Box::new(e.clone())));
            }
        }
        closed_form_array(&self.the_loop, &self.up, x, table)
            .map(|p| simplify_array(&p))
            .map_err(|e| match e {
                ArrayFormError::NonConstant(..) => Failure::new(Phase::Displacement, e.to_string()),
                ArrayFormError::MissingForm(_) => Failure::new(Phase::Pick, e.to_string()),
            })
    }

    /// Scalar closed form as an expression.
    pub fn scalar_closed_form(&self, x: &Var) -> Result<Expr, Failure> {
        Ok(match self.var_closed_form(x)? {
            ArrayExpr::Lambda(_, body) => *body,
            ArrayExpr::Var(v) => Expr::var(&v),
        })
    }
}

fn fill_table(c: &Classification, rec: &RecurrenceSystem, sol: &RecSolution) -> Result<ClosedFormTable, Failure> {
    let mut table = ClosedFormTable::default();
    for cl in &c.l_set {
        if cl.class == LvalueClass::Trivial {
            table.insert(cl.lvalue.clone(), closed_form_trivial(&cl.lvalue));
        }
    }
    for cl in &c.l_set {
        if cl.class == LvalueClass::Inductive {
            table.insert(cl.lvalue.clone(), closed_form_inductive(&cl.lvalue, rec, sol)?);
        }
    }
    let mut pending: Vec<&Lvalue> =
        c.l_set.iter().filter(|cl| cl.class == LvalueClass::Displacing).map(|cl| &cl.lvalue).collect();
    while !pending.is_empty() {
        let ready = pending.iter().position(|l| {
            l.index.iter().flat_map(crate::expr::LvalSet::lval_set).all(|inner| table.contains(&inner))
        });
        let Some(k) = ready else {
            let names: Vec<String> = pending.iter().map(|l| l.to_string()).collect();
            return Err(Failure::new(Phase::Pick, format!("no closed form derivable for {}", names.join(", "))));
        };
        let before = pending.len();
        let l = pending.remove(k);
        table.insert(l.clone(), closed_form_displacing(l, &table)?);
        assert!(pending.len() < before);
    }
    for (l, e) in table.iter() {
        debug_assert!(e.free_vars().iter().all(|v| !v.name.contains('!')), "{l} ↦ {e} leaks a symbol");
    }
    Ok(table)
}

/// Closed forms for every lvalue of `L`.
pub fn closed_forms_all(l: &Loop, prover: &mut Prover) -> Result<ClosedFormTable, Failure> {
    Analysis::run(l, prover).table
}
