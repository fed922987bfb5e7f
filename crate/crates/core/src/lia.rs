//! A small, sound refuter for quantifier-free linear integer arithmetic.
//!
//! Formulas are explored disjunct by disjunct; each conjunction of linear
//! constraints is refuted by Fourier–Motzkin elimination with integer
//! tightening. Non-linear monomials, array reads and other terms are opaque
//! variables; literals that cannot be encoded (divisibility, array
//! equalities) are dropped, which only weakens the conjunction. A `true`
//! answer is therefore a proof of unsatisfiability, `false` means "don't
//! know".

use std::collections::BTreeMap;

use num_integer::Integer;

use crate::expr::{Expr, Formula, Rel};
use crate::poly::{Monomial, Poly};
use crate::simplify::{negate, normalize, simplify};

/// Bounds the search so that pathological inputs fail fast.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub branches: usize,
    pub constraints: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { branches: 512, constraints: 600 }
    }
}

/// `true` if `f` is unsatisfiable over the integers.
pub fn refute(f: &Formula) -> bool {
    refute_with(f, Limits::default())
}

pub fn refute_with(f: &Formula, limits: Limits) -> bool {
    let f = lift_ites(&normalize(f), 6);
    let mut search = Search { limits, branches: 0, atoms: Vec::new() };
    search.refute(vec![f], Vec::new()).unwrap_or(false)
}

/// `true` if `f` is valid over the integers.
pub fn prove(f: &Formula) -> bool {
    refute(&negate(&normalize(f)))
}

// ---------------------------------------------------------------------------
// ite lifting

fn find_ite(e: &Expr) -> Option<(Formula, Expr, Expr)> {
    match e {
        Expr::Ite(g, a, b) => Some(((**g).clone(), (**a).clone(), (**b).clone())),
        Expr::Bin(_, a, b) => find_ite(a).or_else(|| find_ite(b)),
        Expr::App(head, idx) if !head.is_lambda() => idx.iter().find_map(find_ite),
        _ => None,
    }
}

fn replace_ite(e: &Expr, target: &(Formula, Expr, Expr), pick_then: bool) -> Expr {
    match e {
        Expr::Ite(g, a, b) if **g == target.0 && **a == target.1 && **b == target.2 => {
            if pick_then { (**a).clone() } else { (**b).clone() }
        }
        Expr::Bin(op, a, b) => Expr::bin(*op, replace_ite(a, target, pick_then), replace_ite(b, target, pick_then)),
        Expr::App(head, idx) if !head.is_lambda() => Expr::App(
            head.clone(),
            idx.iter().map(|x| replace_ite(x, target, pick_then)).collect(),
        ),
        Expr::Ite(g, a, b) => Expr::ite(
            (**g).clone(),
            replace_ite(a, target, pick_then),
            replace_ite(b, target, pick_then),
        ),
        _ => e.clone(),
    }
}

/// Case-splits relations over `ite` terms: `R(ite(g, a, b))` becomes
/// `(g ∧ R(a)) ∨ (¬g ∧ R(b))`, up to `depth` nested splits.
pub fn lift_ites(f: &Formula, depth: usize) -> Formula {
    match f {
        Formula::Rel(r, a, b) if depth > 0 => {
            let Some(t) = find_ite(a).or_else(|| find_ite(b)) else { return f.clone() };
            let branch = |pick: bool| {
                let atom = Formula::Rel(*r, replace_ite(a, &t, pick), replace_ite(b, &t, pick));
                lift_ites(&atom, depth - 1)
            };
            let g = lift_ites(&t.0, depth - 1);
            simplify(&Formula::or([
                Formula::and([g.clone(), branch(true)]),
                Formula::and([Formula::not(g), branch(false)]),
            ]))
        }
        Formula::Not(g) => Formula::not(lift_ites(g, depth)),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| lift_ites(g, depth)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| lift_ites(g, depth)).collect()),
        Formula::Implies(a, b) => Formula::implies(lift_ites(a, depth), lift_ites(b, depth)),
        Formula::Iff(a, b) => Formula::iff(lift_ites(a, depth), lift_ites(b, depth)),
        _ => f.clone(),
    }
}

// ---------------------------------------------------------------------------
// Search over disjunctions

/// `Σ coef·x + constant (<= | =) 0` over integer variables.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Constraint {
    coefs: BTreeMap<usize, i128>,
    constant: i128,
    eq: bool,
}

struct Search {
    limits: Limits,
    branches: usize,
    atoms: Vec<Monomial>,
}

impl Search {
    fn atom_index(&mut self, m: &Monomial) -> usize {
        match self.atoms.iter().position(|a| a == m) {
            Some(k) => k,
            None => {
                self.atoms.push(m.clone());
                self.atoms.len() - 1
            }
        }
    }

    /// `p <= 0` or `p = 0`; `None` if `p` has non-integer coefficients.
    fn constraint(&mut self, p: &Poly, eq: bool) -> Option<Constraint> {
        if !p.has_integer_coefficients() {
            return None;
        }
        let mut coefs = BTreeMap::new();
        let mut constant = 0;
        for (m, c) in p.terms() {
            let c = c.to_integer();
            if m.is_one() {
                constant = c;
            } else {
                let k = self.atom_index(m);
                coefs.insert(k, c);
            }
        }
        Some(Constraint { coefs, constant, eq })
    }

    /// `Some(true)`: every branch refuted; `Some(false)`: some branch
    /// survived; `None`: budget exhausted.
    fn refute(&mut self, mut pending: Vec<Formula>, mut lits: Vec<Constraint>) -> Option<bool> {
        while let Some(f) = pending.pop() {
            match f {
                Formula::True => {}
                Formula::False => return Some(true),
                Formula::And(fs) => pending.extend(fs),
                Formula::Or(fs) => {
                    for g in fs {
                        self.branches += 1;
                        if self.branches > self.limits.branches {
                            return None;
                        }
                        let mut p = pending.clone();
                        p.push(g);
                        if !self.refute(p, lits.clone())? {
                            return Some(false);
                        }
                    }
                    return Some(true);
                }
                Formula::Iff(a, b) => {
                    let (a, b) = (*a, *b);
                    pending.push(Formula::or([
                        Formula::and([a.clone(), b.clone()]),
                        Formula::and([negate(&a), negate(&b)]),
                    ]));
                }
                Formula::Implies(a, b) => pending.push(Formula::or([negate(&a), *b])),
                Formula::Rel(r, a, b) => {
                    let p = Poly::from_expr(&a).sub(&Poly::from_expr(&b));
                    let one = Poly::int(1);
                    let encoded = match r {
                        Rel::Le => self.constraint(&p, false),
                        Rel::Lt => self.constraint(&p.add(&one), false),
                        Rel::Ge => self.constraint(&p.neg(), false),
                        Rel::Gt => self.constraint(&p.neg().add(&one), false),
                        Rel::Eq => self.constraint(&p, true),
                        Rel::Ne => {
                            pending.push(Formula::or([a.clone().lt(b.clone()), a.gt(b)]));
                            continue;
                        }
                    };
                    if let Some(c) = encoded {
                        lits.push(c);
                    }
                }
                // Dropped literals weaken the conjunction; refutation stays sound.
                Formula::Divides(..) | Formula::ArrayEq(..) | Formula::Not(_) => {}
            }
        }
        Some(infeasible(lits, self.limits.constraints))
    }
}

// ---------------------------------------------------------------------------
// Fourier–Motzkin

fn tighten(mut c: Constraint) -> Option<Constraint> {
    c.coefs.retain(|_, v| *v != 0);
    if c.coefs.is_empty() {
        let ok = if c.eq { c.constant == 0 } else { c.constant <= 0 };
        return if ok { Some(c) } else { None };
    }
    let g = c.coefs.values().fold(0i128, |acc, v| acc.gcd(v));
    if g > 1 {
        if c.eq {
            if c.constant % g != 0 {
                return None;
            }
            c.constant /= g;
        } else {
            // Σ (a/g)x <= -c/g  ~>  Σ (a/g)x + ceil(c/g) <= 0
            c.constant = Integer::div_ceil(&c.constant, &g);
        }
        for v in c.coefs.values_mut() {
            *v /= g;
        }
    }
    Some(c)
}

fn infeasible(lits: Vec<Constraint>, cap: usize) -> bool {
    let mut cs = Vec::new();
    for c in lits {
        match tighten(c) {
            None => return true,
            Some(c) if c.coefs.is_empty() => {}
            Some(c) => cs.push(c),
        }
    }
    // Equalities: substitute away a variable, preferring unit coefficients.
    while let Some(pos) = cs.iter().position(|c| c.eq) {
        let e = cs.swap_remove(pos);
        let (&x, &a) = e
            .coefs
            .iter()
            .min_by_key(|(_, v)| v.abs())
            .expect("non-constant equality");
        let mut next = Vec::new();
        for c in cs {
            let Some(&b) = c.coefs.get(&x) else {
                next.push(c);
                continue;
            };
            // a·c - b·e eliminates x; multiply by sign(a) keeps `<=` direction.
            let s = a.signum();
            let mut coefs = BTreeMap::new();
            for (k, v) in &c.coefs {
                *coefs.entry(*k).or_insert(0) += v * a * s;
            }
            for (k, v) in &e.coefs {
                *coefs.entry(*k).or_insert(0) -= v * b * s;
            }
            let combined = Constraint { coefs, constant: c.constant * a * s - e.constant * b * s, eq: c.eq };
            match tighten(combined) {
                None => return true,
                Some(c) if c.coefs.is_empty() => {}
                Some(c) => next.push(c),
            }
        }
        cs = next;
    }
    loop {
        if cs.len() > cap {
            return false;
        }
        let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for c in &cs {
            for (k, v) in &c.coefs {
                let e = counts.entry(*k).or_insert((0, 0));
                if *v > 0 { e.0 += 1 } else { e.1 += 1 }
            }
        }
        let Some((&x, _)) = counts.iter().min_by_key(|(_, (p, n))| p * n) else {
            return false;
        };
        let (pos, rest): (Vec<Constraint>, Vec<Constraint>) =
            cs.into_iter().partition(|c| c.coefs.get(&x).is_some_and(|v| *v > 0));
        let (neg, mut next): (Vec<Constraint>, Vec<Constraint>) =
            rest.into_iter().partition(|c| c.coefs.get(&x).is_some_and(|v| *v < 0));
        for p in &pos {
            for n in &neg {
                let (a, b) = (p.coefs[&x], -n.coefs[&x]);
                let mut coefs = BTreeMap::new();
                for (k, v) in &p.coefs {
                    *coefs.entry(*k).or_insert(0) += v * b;
                }
                for (k, v) in &n.coefs {
                    *coefs.entry(*k).or_insert(0) += v * a;
                }
                let combined = Constraint { coefs, constant: p.constant * b + n.constant * a, eq: false };
                match tighten(combined) {
                    None => return true,
                    Some(c) if c.coefs.is_empty() => {}
                    Some(c) => {
                        if !next.contains(&c) {
                            next.push(c)
                        }
                    }
                }
            }
        }
        if next.is_empty() {
            return false;
        }
        cs = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::Decls;

    fn f(src: &str) -> Formula {
        Decls::permissive().parse_formula(src).unwrap()
    }

    #[test]
    fn refutes_simple_contradictions() {
        assert!(refute(&f("(and (< x y) (< y x))")));
        assert!(refute(&f("(and (<= (+ x y) 3) (>= x 2) (>= y 2))")));
        assert!(!refute(&f("(and (<= (+ x y) 4) (>= x 2) (>= y 2))")));
    }

    #[test]
    fn integer_tightening_matters() {
        // 2x = 1 has no integer solution
        assert!(refute(&f("(= (* 2 x) 1)")));
        // 1 <= 2x <= 1 is refuted only with tightening
        assert!(refute(&f("(and (<= 1 (* 2 x)) (<= (* 2 x) 1))")));
    }

    #[test]
    fn disequalities_split() {
        assert!(refute(&f("(and (distinct x 3) (<= x 3) (>= x 3))")));
        assert!(!refute(&f("(and (distinct x 3) (<= x 4) (>= x 3))")));
    }

    #[test]
    fn proves_lexicographic_progress() {
        assert!(prove(&f("(or (< i (+ i 1)) (and (= i (+ i 1)) (< j j)))")));
        assert!(prove(&f("(=> (and (>= n 1) (< (+ i n -1) k)) (< i k))")));
        assert!(!prove(&f("(=> (< (+ i n -1) k) (< i k))")));
        assert!(!prove(&f("(=> (< i k) (< (+ i 1) k))")));
    }

    #[test]
    fn ites_are_split() {
        assert!(prove(&f("(>= (ite (> x 0) x (- x)) 0)")));
    }
}
