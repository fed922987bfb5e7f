//! Equivalence-preserving rewriting of expressions and formulas.
//!
//! Arithmetic is kept in polynomial normal form, relations are normalized to
//! `<=`, `>=`, `=` and `distinct` over a primitive left-hand side, and
//! conjunctions/disjunctions merge bounds on the same linear form.


use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

use crate::expr::{ArrayExpr, BinOp, Expr, Formula, Rel};
use crate::poly::{Coef, Poly};
use crate::subst::BetaReduce;

pub fn simplify_expr(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) => e.clone(),
        Expr::Bin(BinOp::Div, a, b) => simplify_div(simplify_expr(a), simplify_expr(b)),
        Expr::Bin(op, a, b) => {
            let rebuilt = Expr::bin(*op, simplify_expr(a), simplify_expr(b));
            Poly::from_expr(&rebuilt).to_expr()
        }
        Expr::App(head, idx) => {
            Expr::App(Box::new(simplify_array(head)), idx.iter().map(simplify_expr).collect())
        }
        Expr::Ite(g, a, b) => match simplify(g) {
            Formula::True => simplify_expr(a),
            Formula::False => simplify_expr(b),
            g => {
                let (a, b) = (simplify_expr(a), simplify_expr(b));
                if a == b {
                    a
                } else {
                    Expr::ite(g, a, b)
                }
            }
        },
    }
}

pub fn simplify_array(p: &ArrayExpr) -> ArrayExpr {
    match p {
        ArrayExpr::Var(_) => p.clone(),
        ArrayExpr::Lambda(params, body) => {
            ArrayExpr::Lambda(params.clone(), Box::new(simplify_expr(body)))
        }
    }
}

/// β-reduction followed by simplification.
pub fn normalize_expr(e: &Expr) -> Expr {
    simplify_expr(&e.beta_reduce())
}

pub fn normalize(f: &Formula) -> Formula {
    simplify(&f.beta_reduce())
}

pub fn floor_div(a: i64, b: i64) -> Option<i64> {
    if b == 0 {
        return None;
    }
    a.checked_div_euclid(b).map(|q| {
        // Euclidean and floor division differ only for negative divisors
        // with a nonzero remainder.
        if b < 0 && a.rem_euclid(b) != 0 {
            q - 1
        } else {
            q
        }
    })
}

fn simplify_div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (_, Some(0)) => a.div(b),
        (Some(x), Some(y)) => floor_div(x, y).map_or_else(|| Expr::Const(x).div(Expr::Const(y)), Expr::Const),
        (_, Some(1)) => a,
        (_, Some(-1)) => Poly::from_expr(&a).neg().to_expr(),
        (_, Some(d)) => {
            let p = Poly::from_expr(&a);
            let d128 = d as i128;
            if p.terms().all(|(_, c)| c.is_integer() && (c.numer() % d128) == 0) {
                p.scale(Coef::new(1, d128)).to_expr()
            } else {
                a.div(b)
            }
        }
        _ => a.div(b),
    }
}

// ---------------------------------------------------------------------------
// Linear atoms

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Le,
    Ge,
    Eq,
    Ne,
}

/// `q kind k` with `q` primitive (content 1) and positive leading coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
struct LinAtom {
    q: Poly,
    kind: Kind,
    k: i128,
}

enum Normalized {
    Const(bool),
    Atom(LinAtom),
    Opaque,
}

fn floor_ratio(c: Coef) -> i128 {
    c.floor().to_integer()
}

fn ceil_ratio(c: Coef) -> i128 {
    c.ceil().to_integer()
}

fn normalize_rel(rel: Rel, a: &Expr, b: &Expr) -> Normalized {
    let p = Poly::from_expr(a).sub(&Poly::from_expr(b));
    if !p.has_integer_coefficients() {
        return Normalized::Opaque;
    }
    if let Some(c) = p.as_constant() {
        let c = c.to_integer();
        let holds = match rel {
            Rel::Lt => c < 0,
            Rel::Le => c <= 0,
            Rel::Gt => c > 0,
            Rel::Ge => c >= 0,
            Rel::Eq => c == 0,
            Rel::Ne => c != 0,
        };
        return Normalized::Const(holds);
    }
    let g = p.content();
    let sign = p.leading_sign() as i128;
    let q = p.non_constant().scale(Coef::new(sign, g));
    let c = p.constant_term();
    // p rel 0  <=>  sign*g*q rel -c
    let t = -c * Coef::from_integer(sign) / Coef::from_integer(g);
    let rel = if sign < 0 {
        match rel {
            Rel::Lt => Rel::Gt,
            Rel::Le => Rel::Ge,
            Rel::Gt => Rel::Lt,
            Rel::Ge => Rel::Le,
            other => other,
        }
    } else {
        rel
    };
    let atom = match rel {
        Rel::Lt => LinAtom { q, kind: Kind::Le, k: ceil_ratio(t) - 1 },
        Rel::Le => LinAtom { q, kind: Kind::Le, k: floor_ratio(t) },
        Rel::Gt => LinAtom { q, kind: Kind::Ge, k: floor_ratio(t) + 1 },
        Rel::Ge => LinAtom { q, kind: Kind::Ge, k: ceil_ratio(t) },
        Rel::Eq if t.is_integer() => LinAtom { q, kind: Kind::Eq, k: t.to_integer() },
        Rel::Eq => return Normalized::Const(false),
        Rel::Ne if t.is_integer() => LinAtom { q, kind: Kind::Ne, k: t.to_integer() },
        Rel::Ne => return Normalized::Const(true),
    };
    Normalized::Atom(atom)
}

fn negate_atom(a: &LinAtom) -> LinAtom {
    let (kind, k) = match a.kind {
        Kind::Le => (Kind::Ge, a.k + 1),
        Kind::Ge => (Kind::Le, a.k - 1),
        Kind::Eq => (Kind::Ne, a.k),
        Kind::Ne => (Kind::Eq, a.k),
    };
    LinAtom { q: a.q.clone(), kind, k }
}

fn atom_to_formula(a: &LinAtom) -> Formula {
    let mut pos = Poly::zero();
    let mut neg = Poly::constant(Coef::from_integer(a.k));
    for (m, c) in a.q.terms() {
        if c.is_positive() {
            pos.add_term(m.clone(), *c);
        } else {
            neg.add_term(m.clone(), -c);
        }
    }
    let rel = match a.kind {
        Kind::Le => Rel::Le,
        Kind::Ge => Rel::Ge,
        Kind::Eq => Rel::Eq,
        Kind::Ne => Rel::Ne,
    };
    Formula::Rel(rel, pos.to_expr(), neg.to_expr())
}

fn lin_atom_of(f: &Formula) -> Option<LinAtom> {
    match f {
        Formula::Rel(r, a, b) => match normalize_rel(*r, a, b) {
            Normalized::Atom(atom) => Some(atom),
            _ => None,
        },
        _ => None,
    }
}

/// Merges a conjunction of linear atoms; `None` means unsatisfiable.
fn merge_conjunction(atoms: Vec<LinAtom>) -> Option<Vec<LinAtom>> {
    struct Group {
        q: Poly,
        lo: Option<i128>,
        hi: Option<i128>,
        ne: Vec<i128>,
    }
    let mut groups: Vec<Group> = Vec::new();
    for a in atoms {
        let pos = match groups.iter().position(|g| g.q == a.q) {
            Some(p) => p,
            None => {
                groups.push(Group { q: a.q.clone(), lo: None, hi: None, ne: Vec::new() });
                groups.len() - 1
            }
        };
        let g = &mut groups[pos];
        match a.kind {
            Kind::Le => g.hi = Some(g.hi.map_or(a.k, |h| h.min(a.k))),
            Kind::Ge => g.lo = Some(g.lo.map_or(a.k, |l| l.max(a.k))),
            Kind::Eq => {
                g.hi = Some(g.hi.map_or(a.k, |h| h.min(a.k)));
                g.lo = Some(g.lo.map_or(a.k, |l| l.max(a.k)));
            }
            Kind::Ne => {
                if !g.ne.contains(&a.k) {
                    g.ne.push(a.k)
                }
            }
        }
    }
    let mut out = Vec::new();
    for mut g in groups {
        loop {
            let mut changed = false;
            if let Some(l) = g.lo {
                if g.ne.contains(&l) {
                    g.lo = Some(l + 1);
                    changed = true;
                }
            }
            if let Some(h) = g.hi {
                if g.ne.contains(&h) {
                    g.hi = Some(h - 1);
                    changed = true;
                }
            }
            if let (Some(l), Some(h)) = (g.lo, g.hi) {
                if l > h {
                    return None;
                }
            }
            if !changed {
                break;
            }
        }
        let (lo, hi) = (g.lo, g.hi);
        g.ne.retain(|k| lo.is_none_or(|l| *k > l) && hi.is_none_or(|h| *k < h));
        match (lo, hi) {
            (Some(l), Some(h)) if l == h => {
                out.push(LinAtom { q: g.q.clone(), kind: Kind::Eq, k: l });
            }
            _ => {
                if let Some(l) = lo {
                    out.push(LinAtom { q: g.q.clone(), kind: Kind::Ge, k: l });
                }
                if let Some(h) = hi {
                    out.push(LinAtom { q: g.q.clone(), kind: Kind::Le, k: h });
                }
            }
        }
        for k in g.ne {
            out.push(LinAtom { q: g.q.clone(), kind: Kind::Ne, k });
        }
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// Formulas

pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Rel(r, a, b) => {
            let (a, b) = (simplify_expr(a), simplify_expr(b));
            match normalize_rel(*r, &a, &b) {
                Normalized::Const(true) => Formula::True,
                Normalized::Const(false) => Formula::False,
                Normalized::Atom(atom) => atom_to_formula(&atom),
                Normalized::Opaque => Formula::Rel(*r, a, b),
            }
        }
        Formula::Divides(d, e) => simplify_divides(*d, &simplify_expr(e)),
        Formula::ArrayEq(p, q) => {
            let (p, q) = (simplify_array(p), simplify_array(q));
            if p == q {
                Formula::True
            } else {
                Formula::ArrayEq(p, q)
            }
        }
        Formula::Not(g) => negate(&simplify(g)),
        Formula::And(fs) => simplify_and(fs.iter().map(simplify).collect()),
        Formula::Or(fs) => simplify_or(fs.iter().map(simplify).collect()),
        Formula::Implies(a, b) => {
            let a = simplify(a);
            simplify_or(vec![negate(&a), simplify(b)])
        }
        Formula::Iff(a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            match (&a, &b) {
                _ if a == b => Formula::True,
                (Formula::True, _) => b,
                (_, Formula::True) => a,
                (Formula::False, _) => negate(&b),
                (_, Formula::False) => negate(&a),
                _ => Formula::iff(a, b),
            }
        }
    }
}

fn simplify_divides(d: i64, e: &Expr) -> Formula {
    let d = d.unsigned_abs() as i128;
    if d == 0 {
        return simplify(&e.clone().eq(Expr::Const(0)));
    }
    if d == 1 {
        return Formula::True;
    }
    let p = Poly::from_expr(e);
    if !p.has_integer_coefficients() {
        return Formula::Divides(d as i64, e.clone());
    }
    let mut reduced = Poly::zero();
    for (m, c) in p.terms() {
        let r = c.numer().rem_euclid(d);
        reduced.add_term(m.clone(), Coef::from_integer(r));
    }
    if let Some(c) = reduced.as_constant() {
        return if c.to_integer() % d == 0 { Formula::True } else { Formula::False };
    }
    let g = reduced.terms().fold(0i128, |acc, (_, c)| acc.gcd(c.numer()));
    let common = g.gcd(&d);
    let d2 = d / common;
    if d2 == 1 {
        return Formula::True;
    }
    let mut q = Poly::zero();
    for (m, c) in reduced.terms() {
        let r = (c.numer() / common).rem_euclid(d2);
        q.add_term(m.clone(), Coef::from_integer(r));
    }
    if let Some(c) = q.as_constant() {
        return if c.to_integer() % d2 == 0 { Formula::True } else { Formula::False };
    }
    Formula::Divides(d2.to_i64().expect("divisor fits"), q.to_expr())
}

/// Negation pushed through connectives; the input is assumed simplified.
pub fn negate(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Rel(r, a, b) => match lin_atom_of(f) {
            Some(atom) => atom_to_formula(&negate_atom(&atom)),
            None => Formula::Rel(r.negate(), a.clone(), b.clone()),
        },
        Formula::Divides(..) | Formula::ArrayEq(..) => Formula::not(f.clone()),
        Formula::Not(g) => (**g).clone(),
        Formula::And(fs) => simplify_or(fs.iter().map(negate).collect()),
        Formula::Or(fs) => simplify_and(fs.iter().map(negate).collect()),
        Formula::Implies(a, b) => simplify_and(vec![(**a).clone(), negate(b)]),
        Formula::Iff(a, b) => Formula::iff((**a).clone(), negate(b)),
    }
}

fn push_unique(out: &mut Vec<Formula>, f: Formula) {
    if !out.contains(&f) {
        out.push(f);
    }
}

fn simplify_and(children: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    for c in children {
        match c {
            Formula::True => {}
            Formula::False => return Formula::False,
            Formula::And(inner) => inner.into_iter().for_each(|g| push_unique(&mut flat, g)),
            other => push_unique(&mut flat, other),
        }
    }
    let mut atoms = Vec::new();
    let mut rest: Vec<Formula> = Vec::new();
    for f in flat {
        match lin_atom_of(&f) {
            Some(a) => atoms.push(a),
            None => rest.push(f),
        }
    }
    for f in &rest {
        if let Formula::Not(g) = f {
            if rest.contains(g) {
                return Formula::False;
            }
        }
    }
    let Some(merged) = merge_conjunction(atoms) else { return Formula::False };
    let mut out: Vec<Formula> = merged.iter().map(atom_to_formula).collect();
    out.extend(rest);
    match out.len() {
        0 => Formula::True,
        1 => out.pop().expect("one element"),
        _ => Formula::And(out),
    }
}

fn simplify_or(children: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    for c in children {
        match c {
            Formula::False => {}
            Formula::True => return Formula::True,
            Formula::Or(inner) => inner.into_iter().for_each(|g| push_unique(&mut flat, g)),
            other => push_unique(&mut flat, other),
        }
    }
    let mut negated_atoms = Vec::new();
    let mut rest: Vec<Formula> = Vec::new();
    for f in flat {
        match lin_atom_of(&f) {
            Some(a) => negated_atoms.push(negate_atom(&a)),
            None => rest.push(f),
        }
    }
    for f in &rest {
        if let Formula::Not(g) = f {
            if rest.contains(g) {
                return Formula::True;
            }
        }
    }
    let Some(merged) = merge_conjunction(negated_atoms) else { return Formula::True };
    let mut out: Vec<Formula> =
        merged.iter().map(|a| atom_to_formula(&negate_atom(a))).collect();
    out.extend(rest);
    match out.len() {
        0 => Formula::False,
        1 => out.pop().expect("one element"),
        _ => Formula::Or(out),
    }
}

/// Equality of two formulas up to normalization.
pub fn same_atom(a: &Formula, b: &Formula) -> bool {
    match (lin_atom_of(a), lin_atom_of(b)) {
        (Some(x), Some(y)) => x == y,
        _ => simplify(a) == simplify(b),
    }
}

/// The constant difference `a - b` when it simplifies to an integer.
pub fn constant_difference(a: &Expr, b: &Expr) -> Option<i64> {
    let p = Poly::from_expr(&simplify_expr(a)).sub(&Poly::from_expr(&simplify_expr(b)));
    p.as_int()
}
