//! Quantifier-free λ-closed forms for arrays.
//!
//! A write `x[r] ← rhs` with constant displacement `d = up(r) − r` hits
//! cell `r + d·(m−1)` in iteration `m`. Whether a cell is written in a
//! range of iterations is then a linear question whose quantifier can be
//! eliminated, and the last write to a cell can be located exactly.

use std::collections::BTreeSet;
use std::fmt;

use crate::closed_form::ClosedFormTable;
use crate::expr::{ArrayExpr, Expr, Formula, LvalSet, Lvalue, Var};
use crate::loops::Loop;
use crate::recurrence::iteration_var;
use crate::simplify::{constant_difference, normalize_expr, simplify, simplify_expr};
use crate::subst::{readable_var, Subst, Substitute};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Displacement {
    Constant(Vec<i64>),
    /// Per component, the constant difference when there is one.
    NonConstant(Vec<Option<i64>>),
}

impl Displacement {
    pub fn constant(&self) -> Option<&[i64]> {
        match self {
            Displacement::Constant(d) => Some(d),
            Displacement::NonConstant(_) => None,
        }
    }
}

impl fmt::Display for Displacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match self {
            Displacement::Constant(d) => d.iter().map(i64::to_string).collect(),
            Displacement::NonConstant(d) => {
                d.iter().map(|c| c.map_or_else(|| "?".to_string(), |c| c.to_string())).collect()
            }
        };
        write!(f, "({})", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ArrayFormError {
    #[error("write to {0} has non-constant displacement {1}")]
    NonConstant(String, String),
    #[error("no closed form for {0}")]
    MissingForm(String),
}

/// `up(r) − r` componentwise.
pub fn displacement(up: &Subst, lv: &Lvalue) -> Displacement {
    let d: Vec<Option<i64>> =
        lv.index.iter().map(|r| constant_difference(&normalize_expr(&r.subst(up)), r)).collect();
    if d.iter().all(Option::is_some) {
        Displacement::Constant(d.into_iter().flatten().collect())
    } else {
        Displacement::NonConstant(d)
    }
}

fn constant_displacement(l: &Loop, up: &Subst, k: usize) -> Result<Vec<i64>, ArrayFormError> {
    let lv = &l.lhs[k];
    match displacement(up, lv) {
        Displacement::Constant(d) => Ok(d),
        other => Err(ArrayFormError::NonConstant(lv.to_string(), other.to_string())),
    }
}

/// `(c_p − r_p) ÷ d_p` without a division when `|d_p| = 1`.
fn steps(c: &Expr, r: &Expr, d: i64) -> Expr {
    match d {
        1 => simplify_expr(&(c.clone() - r.clone())),
        -1 => simplify_expr(&(r.clone() - c.clone())),
        _ => simplify_expr(&(c.clone() - r.clone()).div(Expr::int(d))),
    }
}

fn scaled(d: i64, e: Expr) -> Expr {
    Expr::int(d) * e
}

/// `∀m' ∈ [m..n]. r + d·(m'−1) ≠ c` for one write, without the quantifier.
fn not_written_by(r: &[Expr], d: &[i64], m: &Expr, n: &Expr, c: &[Expr]) -> Formula {
    let mut out = Vec::new();
    let Some(p) = d.iter().position(|&di| di != 0) else {
        out.push(n.clone().lt(m.clone()));
        out.push(Formula::vec_ne(c, r));
        return simplify(&Formula::or(out));
    };
    let q = steps(&c[p], &r[p], d[p]);
    for (i, &di) in d.iter().enumerate() {
        let (ci, ri) = (c[i].clone(), r[i].clone());
        if di == 0 {
            out.push(ci.ne(ri));
            continue;
        }
        let first = ri.clone() + scaled(di, m.clone() - 1);
        let last = ri.clone() + scaled(di, n.clone() - 1);
        if di > 0 {
            out.push(ci.clone().lt(first));
            out.push(last.lt(ci.clone()));
        } else {
            out.push(ci.clone().lt(last));
            out.push(first.lt(ci.clone()));
        }
        if di.abs() > 1 {
            out.push(Formula::not(Formula::Divides(di.abs(), ci.clone() - ri.clone())));
        }
        if i != p {
            out.push(ci.ne(ri + scaled(di, q.clone())));
        }
    }
    simplify(&Formula::or(out))
}

/// No write to `x` hits `c` in iterations `m..=n`.
pub fn not_written(l: &Loop, up: &Subst, x: &Var, m: &Expr, n: &Expr, c: &[Expr]) -> Result<Formula, ArrayFormError> {
    let mut parts = Vec::new();
    for k in l.writes_to(x) {
        let d = constant_displacement(l, up, k)?;
        parts.push(not_written_by(&l.lhs[k].index, &d, m, n, c));
    }
    Ok(simplify(&Formula::and(parts)))
}

/// The case of `x^(n)` where update `update` is the last write to `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LastWriteCase {
    pub lvalue: Lvalue,
    pub update: usize,
    /// The iteration of that write.
    pub instantiation: Expr,
    pub guard: Formula,
    pub value: Expr,
}

impl fmt::Display for LastWriteCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: e = {}, if {} then {}", self.lvalue, self.instantiation, self.guard, self.value)
    }
}

/// `rhs^(e−1)`: the right-hand side in the state before iteration `e`.
fn value_at(rhs: &Expr, e: &Expr, table: &ClosedFormTable) -> Result<Expr, ArrayFormError> {
    for lv in rhs.lval_set() {
        if !table.contains(&lv) {
            return Err(ArrayFormError::MissingForm(lv.to_string()));
        }
    }
    let at_n = table.lval_subst().apply(rhs);
    let before = Subst::new().with_scalar(iteration_var(), e.clone() - 1);
    Ok(simplify_expr(&at_n.subst(&before)))
}

pub fn last_write_instantiation(
    l: &Loop,
    up: &Subst,
    update: usize,
    c: &[Expr],
    table: &ClosedFormTable,
) -> Result<LastWriteCase, ArrayFormError> {
    let lv = &l.lhs[update];
    let r = &lv.index;
    let d = constant_displacement(l, up, update)?;
    let n = Expr::var(&iteration_var());
    let (e, mut guard) = match d.iter().position(|&di| di != 0) {
        None => (n.clone(), vec![Formula::vec_eq(c, r), n.clone().ge(Expr::int(1))]),
        Some(p) => {
            let q = steps(&c[p], &r[p], d[p]);
            let mut g = Vec::new();
            if d[p].abs() > 1 {
                g.push(Formula::Divides(d[p].abs(), c[p].clone() - r[p].clone()));
            }
            for (i, &di) in d.iter().enumerate() {
                if i == p {
                    continue;
                }
                g.push(c[i].clone().eq(r[i].clone() + scaled(di, q.clone())));
                if di.abs() > 1 {
                    g.push(Formula::Divides(di.abs(), c[i].clone() - r[i].clone()));
                }
            }
            let e = simplify_expr(&(q + 1));
            g.push(Expr::int(1).le(e.clone()));
            g.push(e.clone().le(n.clone()));
            (e, g)
        }
    };
    guard.push(not_written(l, up, &lv.var, &(e.clone() + 1), &n, c)?);
    let value = value_at(&l.rhs[update], &e, table)?;
    Ok(LastWriteCase { lvalue: lv.clone(), update, instantiation: e, guard: simplify(&Formula::and(guard)), value })
}

/// Parameters `c, c1, ...` for a λ over `x`, avoiding the loop's names.
pub fn cell_params(l: &Loop, x: &Var) -> Vec<Var> {
    let mut taken: BTreeSet<String> = l.vars().into_iter().map(|v| v.name).collect();
    taken.insert(iteration_var().name);
    (0..x.arity)
        .map(|_| {
            let v = readable_var("c", 0, &taken);
            taken.insert(v.name.clone());
            v
        })
        .collect()
}

pub fn last_write_cases(
    l: &Loop,
    up: &Subst,
    x: &Var,
    c: &[Expr],
    table: &ClosedFormTable,
) -> Result<Vec<LastWriteCase>, ArrayFormError> {
    l.writes_to(x).map(|k| last_write_instantiation(l, up, k, c, table)).collect()
}

/// `x^(n) = λc. ite(guard_1, v_1, ite(..., x[c]))`.
pub fn closed_form_array(l: &Loop, up: &Subst, x: &Var, table: &ClosedFormTable) -> Result<ArrayExpr, ArrayFormError> {
    let params = cell_params(l, x);
    let c: Vec<Expr> = params.iter().map(Expr::var).collect();
    let cases = last_write_cases(l, up, x, &c, table)?;
    let body = cases
        .into_iter()
        .rev()
        .fold(Expr::select(x, c.clone()), |acc, case| simplify_expr(&Expr::ite(case.guard, case.value, acc)));
    Ok(ArrayExpr::Lambda(params, Box::new(body)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::Analysis;
    use crate::prover::Prover;
    use crate::sexpr::Decls;

    fn swap() -> Loop {
        let d = Decls::new().with(&Var::scalar("i")).with(&Var::scalar("k")).with(&Var::array("a", 1));
        let up = |l: &str, r: &str| (Lvalue::from_expr(&d.parse_expr(l).unwrap()).unwrap(), d.parse_expr(r).unwrap());
        Loop::new(
            vec![d.parse_formula("(< i k)").unwrap()],
            vec![up("i", "(+ i 1)"), up("(select a (+ i 1))", "(select a i)"), up("(select a i)", "(select a (+ i 1))")],
        )
    }

    #[test]
    fn swap_closed_form_shape() {
        let an = Analysis::run(&swap(), &mut Prover::builtin());
        println!("{}", an.table().unwrap());
        let a = an.var_closed_form(&Var::array("a", 1)).unwrap();
        println!("{a}");
        let c = vec![Expr::scalar("c")];
        let nw = not_written(&an.the_loop, &an.up, &Var::array("a", 1), &Expr::scalar("m"), &Expr::scalar("n"), &c).unwrap();
        println!("{nw}");
    }
}
