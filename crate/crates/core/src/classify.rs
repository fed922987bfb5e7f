//! The lvalue closure `L`, monotonicity, lvalue classification and the
//! a-solvability check.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::expr::{Expr, Formula, FreeVars, LvalSet, Lvalue, Var};
use crate::loops::{build_up, validate_loop, Loop, Validation};
use crate::prover::{Prover, Validity};
use crate::subst::{Subst, Substitute};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LvalueClass {
    Trivial,
    Inductive,
    Displacing,
    Unclassifiable,
}

impl fmt::Display for LvalueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LvalueClass::Trivial => "trivial",
            LvalueClass::Inductive => "inductive",
            LvalueClass::Displacing => "displacing",
            LvalueClass::Unclassifiable => "unclassifiable",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    /// No written index of the variable ever changes.
    Both,
    None,
}

impl Monotonicity {
    pub fn is_monotonic(self) -> bool {
        self != Monotonicity::None
    }
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monotonicity::Increasing => "increasing",
            Monotonicity::Decreasing => "decreasing",
            Monotonicity::Both => "increasing and decreasing",
            Monotonicity::None => "not monotonic",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarMonotonicity {
    pub direction: Monotonicity,
    /// Some validity query came back unknown.
    pub inconclusive: bool,
}

/// Which condition of a-solvability a right-hand side satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RhsCondition {
    /// Every lvalue read is trivial or inductive.
    InductiveReads,
    /// Every lvalue read is displacing (trivial ones included).
    DisplacingReads,
}

#[derive(Clone, Debug)]
pub struct ClassifiedLvalue {
    pub lvalue: Lvalue,
    pub class: LvalueClass,
    /// The discharged validity, or why none could be.
    pub justification: String,
    /// For inductive lvalues, the update writing the next cell.
    pub source: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub l_set: Vec<ClassifiedLvalue>,
    pub monotonicity: BTreeMap<Var, VarMonotonicity>,
    pub conditions: Vec<Option<RhsCondition>>,
    pub solvable: bool,
    pub reason: Option<String>,
}

impl Classification {
    pub fn class_of(&self, l: &Lvalue) -> Option<LvalueClass> {
        self.l_set.iter().find(|c| &c.lvalue == l).map(|c| c.class)
    }

    pub fn lvalues(&self) -> impl Iterator<Item = &Lvalue> {
        self.l_set.iter().map(|c| &c.lvalue)
    }
}

/// The least set containing `Lval(r)` for every right-hand side and closed
/// under taking lvalues of indices, in discovery order.
pub fn compute_l(l: &Loop) -> Vec<Lvalue> {
    let mut out: Vec<Lvalue> = Vec::new();
    let mut work: Vec<Lvalue> = l.rhs.iter().flat_map(|r| r.lval_set()).collect();
    work.reverse();
    while let Some(lv) = work.pop() {
        if out.contains(&lv) {
            continue;
        }
        let mut inner: Vec<Lvalue> = lv.index.iter().flat_map(|e| e.lval_set()).collect();
        inner.reverse();
        out.push(lv);
        work.extend(inner);
    }
    out
}

fn up_index(up: &Subst, idx: &[Expr]) -> Vec<Expr> {
    idx.iter().map(|e| crate::simplify::normalize_expr(&e.subst(up))).collect()
}

fn settle(p: &mut Prover, f: &Formula, inconclusive: &mut bool) -> bool {
    match p.valid(f) {
        Validity::Valid => true,
        Validity::Invalid(_) => false,
        Validity::Unknown(_) => {
            *inconclusive = true;
            false
        }
    }
}

/// Whether every written index of `x` moves (weakly) up or down
/// lexicographically in each iteration.
pub fn monotonicity(l: &Loop, up: &Subst, x: &Var, p: &mut Prover) -> VarMonotonicity {
    let mut inconclusive = false;
    let (mut inc, mut dec) = (true, true);
    for k in l.writes_to(x) {
        let r = &l.lhs[k].index;
        let r_up = up_index(up, r);
        inc = inc && settle(p, &Formula::lex_le(r, &r_up), &mut inconclusive);
        dec = dec && settle(p, &Formula::lex_le(&r_up, r), &mut inconclusive);
    }
    let direction = match (inc, dec) {
        (true, true) => Monotonicity::Both,
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (false, false) => Monotonicity::None,
    };
    VarMonotonicity { direction, inconclusive }
}

/// Classifies `x[r]`; trivial is reported before inductive and displacing.
pub fn classify_lvalue(
    l: &Loop,
    up: &Subst,
    lv: &Lvalue,
    mono: Monotonicity,
    p: &mut Prover,
) -> (LvalueClass, String, Option<usize>) {
    let written = l.written();
    if lv.free_vars().is_disjoint(&written) {
        return (LvalueClass::Trivial, "reads no written variable".into(), None);
    }
    let r_up = up_index(up, &lv.index);
    let mut inconclusive = false;
    for k in l.writes_to(&lv.var) {
        let eq = Formula::vec_eq(&r_up, &l.lhs[k].index);
        if settle(p, &eq, &mut inconclusive) {
            let next = Lvalue::new(lv.var.clone(), r_up.clone());
            return (LvalueClass::Inductive, format!("{next} is written as {}", l.lhs[k]), Some(k));
        }
    }
    let directions: &[bool] = match mono {
        Monotonicity::Increasing => &[true],
        Monotonicity::Decreasing => &[false],
        Monotonicity::Both => &[true, false],
        Monotonicity::None => &[],
    };
    for &increasing in directions {
        let mut facts = Vec::new();
        let ok = l.writes_to(&lv.var).all(|k| {
            let w = &l.lhs[k].index;
            let f = if increasing { Formula::lex_lt(w, &r_up) } else { Formula::lex_lt(&r_up, w) };
            facts.push(f.to_string());
            settle(p, &f, &mut inconclusive)
        });
        if ok {
            let why = if facts.is_empty() { "never written".to_string() } else { facts.join(" and ") };
            return (LvalueClass::Displacing, why, None);
        }
    }
    let why = if inconclusive { "validity query inconclusive" } else { "neither inductive nor displacing" };
    (LvalueClass::Unclassifiable, why.into(), None)
}

/// Decides a-solvability and records every intermediate result.
pub fn check_a_solvable(l: &Loop, p: &mut Prover) -> Classification {
    let mut out = Classification {
        l_set: Vec::new(),
        monotonicity: BTreeMap::new(),
        conditions: vec![None; l.rhs.len()],
        solvable: false,
        reason: None,
    };
    match validate_loop(l, p) {
        Validation::Ok => {}
        Validation::Violation { first, second, .. } => {
            out.reason = Some(format!("updated lvalues {} and {} may alias", l.lhs[first], l.lhs[second]));
            return out;
        }
        Validation::Inconclusive { first, second, reason } => {
            out.reason = Some(format!("cannot show {} and {} are distinct: {reason}", l.lhs[first], l.lhs[second]));
            return out;
        }
    }
    let up = build_up(l);
    for x in l.vars() {
        let m = if l.written().contains(&x) {
            monotonicity(l, &up, &x, p)
        } else {
            VarMonotonicity { direction: Monotonicity::Both, inconclusive: false }
        };
        out.monotonicity.insert(x, m);
    }
    for (x, m) in &out.monotonicity {
        if !m.direction.is_monotonic() && out.reason.is_none() {
            let how = if m.inconclusive { " (inconclusive)" } else { "" };
            out.reason = Some(format!("loop is not {x}-monotonic{how}"));
        }
    }
    for lv in compute_l(l) {
        let mono = out.monotonicity.get(&lv.var).map_or(Monotonicity::Both, |m| m.direction);
        let (class, justification, source) = classify_lvalue(l, &up, &lv, mono, p);
        if class == LvalueClass::Unclassifiable && out.reason.is_none() {
            out.reason = Some(format!("{lv} is {justification}"));
        }
        out.l_set.push(ClassifiedLvalue { lvalue: lv, class, justification, source });
    }
    for (k, r) in l.rhs.iter().enumerate() {
        let classes: Vec<LvalueClass> = r.lval_set().iter().filter_map(|lv| out.class_of(lv)).collect();
        let inductive = classes.iter().all(|c| matches!(c, LvalueClass::Trivial | LvalueClass::Inductive));
        let displacing = classes.iter().all(|c| matches!(c, LvalueClass::Trivial | LvalueClass::Displacing));
        out.conditions[k] = if inductive {
            Some(RhsCondition::InductiveReads)
        } else if displacing {
            Some(RhsCondition::DisplacingReads)
        } else {
            None
        };
        if out.conditions[k].is_none() && out.reason.is_none() {
            let mixed = classes.contains(&LvalueClass::Inductive) && classes.contains(&LvalueClass::Displacing);
            out.reason = Some(if mixed {
                format!("mixed inductive/displacing in Lval(r_{})", k + 1)
            } else {
                format!("unclassifiable lvalue in Lval(r_{})", k + 1)
            });
        }
    }
    out.solvable = out.reason.is_none();
    out
}
