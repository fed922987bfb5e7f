//! Variable substitution, lvalue substitution and β-reduction.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::expr::{ArrayExpr, Expr, Formula, FreeVars, Lvalue, Var};

static FRESH: AtomicU64 = AtomicU64::new(0);

/// A variable that cannot clash with any parsed identifier (`!` is not
/// produced by user-facing names).
pub fn fresh_var(base: &str, arity: usize) -> Var {
    let k = FRESH.fetch_add(1, Ordering::Relaxed);
    let stem = base.split('!').next().unwrap_or(base);
    Var::new(format!("{stem}!{k}"), arity)
}

/// Picks `base`, `base1`, `base2`, ... avoiding every name in `taken`.
pub fn readable_var(base: &str, arity: usize, taken: &BTreeSet<String>) -> Var {
    if !taken.contains(base) {
        return Var::new(base, arity);
    }
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|name| !taken.contains(name))
        .map(|name| Var::new(name, arity))
        .expect("unbounded name supply")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot substitute an array of arity {image} for {var} (arity {expected})")]
pub struct ArityMismatch {
    pub var: String,
    pub expected: usize,
    pub image: usize,
}

/// Simultaneous substitution of array expressions for variables.
///
/// Scalars are mapped to arity-0 λs; applying such a λ to the empty index
/// collapses to its body, so a scalar image behaves like a plain expression.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst {
    map: BTreeMap<Var, ArrayExpr>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn try_insert(&mut self, var: Var, image: ArrayExpr) -> Result<(), ArityMismatch> {
        if var.arity != image.arity() {
            return Err(ArityMismatch {
                var: var.name.clone(),
                expected: var.arity,
                image: image.arity(),
            });
        }
        self.map.insert(var, image);
        Ok(())
    }

    /// Panics on arity mismatch; use [`Subst::try_insert`] for untrusted input.
    pub fn insert(&mut self, var: Var, image: ArrayExpr) {
        self.try_insert(var, image).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn insert_scalar(&mut self, var: Var, image: Expr) {
        self.insert(var, ArrayExpr::Lambda(Vec::new(), Box::new(image)));
    }

    pub fn with(mut self, var: Var, image: ArrayExpr) -> Self {
        self.insert(var, image);
        self
    }

    pub fn with_scalar(mut self, var: Var, image: Expr) -> Self {
        self.insert_scalar(var, image);
        self
    }

    pub fn get(&self, var: &Var) -> Option<&ArrayExpr> {
        self.map.get(var)
    }

    /// The image of `var`, or `var` itself when unmapped.
    pub fn image(&self, var: &Var) -> ArrayExpr {
        self.map.get(var).cloned().unwrap_or_else(|| ArrayExpr::Var(var.clone()))
    }

    /// The image of a scalar as an expression.
    pub fn scalar_image(&self, var: &Var) -> Expr {
        Expr::apply(self.image(var), Vec::new()).collapse_nullary()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &ArrayExpr)> {
        self.map.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }

    fn without(&self, params: &[Var]) -> Subst {
        let mut map = self.map.clone();
        for p in params {
            map.remove(p);
        }
        Subst { map }
    }

    fn image_free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for image in self.map.values() {
            out.extend(image.free_vars());
        }
        out
    }
}

impl Expr {
    /// `(λ. e)[]` → `e`; leaves everything else untouched.
    pub fn collapse_nullary(self) -> Expr {
        match self {
            Expr::App(head, idx) if idx.is_empty() => match *head {
                ArrayExpr::Lambda(params, body) if params.is_empty() => *body,
                other => Expr::App(Box::new(other), idx),
            },
            other => other,
        }
    }
}

pub trait Substitute: Sized {
    fn subst(&self, s: &Subst) -> Self;
}

impl Substitute for Expr {
    fn subst(&self, s: &Subst) -> Expr {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.subst(s), b.subst(s)),
            Expr::App(head, idx) => {
                let idx: Vec<Expr> = idx.iter().map(|e| e.subst(s)).collect();
                Expr::App(Box::new(head.subst(s)), idx).collapse_nullary()
            }
            Expr::Ite(g, a, b) => Expr::ite(g.subst(s), a.subst(s), b.subst(s)),
        }
    }
}

impl Substitute for ArrayExpr {
    fn subst(&self, s: &Subst) -> ArrayExpr {
        match self {
            ArrayExpr::Var(v) => s.image(v),
            ArrayExpr::Lambda(params, body) => {
                let inner = s.without(params);
                if inner.is_empty() {
                    return self.clone();
                }
                let body_free = body.free_vars();
                let relevant: BTreeSet<Var> = inner
                    .map
                    .keys()
                    .filter(|v| body_free.contains(v))
                    .cloned()
                    .collect();
                let mut inner = Subst {
                    map: inner.map.into_iter().filter(|(v, _)| relevant.contains(v)).collect(),
                };
                if inner.is_empty() {
                    return self.clone();
                }
                let clash = inner.image_free_vars();
                let mut new_params = Vec::with_capacity(params.len());
                for p in params {
                    if clash.contains(p) {
                        let q = fresh_var(&p.name, 0);
                        inner.insert_scalar(p.clone(), Expr::var(&q));
                        new_params.push(q);
                    } else {
                        new_params.push(p.clone());
                    }
                }
                ArrayExpr::Lambda(new_params, Box::new(body.subst(&inner)))
            }
        }
    }
}

impl Substitute for Formula {
    fn subst(&self, s: &Subst) -> Formula {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Rel(r, a, b) => Formula::Rel(*r, a.subst(s), b.subst(s)),
            Formula::Divides(d, e) => Formula::Divides(*d, e.subst(s)),
            Formula::ArrayEq(p, q) => Formula::ArrayEq(p.subst(s), q.subst(s)),
            Formula::Not(f) => Formula::not(f.subst(s)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.subst(s)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.subst(s)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.subst(s), b.subst(s)),
            Formula::Iff(a, b) => Formula::iff(a.subst(s), b.subst(s)),
        }
    }
}

impl Substitute for Lvalue {
    /// The lvalue with substituted indices; the head variable is kept.
    fn subst(&self, s: &Subst) -> Lvalue {
        Lvalue::new(self.var.clone(), self.index.iter().map(|e| e.subst(s)).collect())
    }
}

// ---------------------------------------------------------------------------
// β-reduction

pub trait BetaReduce: Sized {
    fn beta_reduce(&self) -> Self;
}

impl BetaReduce for Expr {
    fn beta_reduce(&self) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.beta_reduce(), b.beta_reduce()),
            Expr::App(head, idx) => {
                let idx: Vec<Expr> = idx.iter().map(BetaReduce::beta_reduce).collect();
                match head.as_ref() {
                    ArrayExpr::Var(_) => Expr::App(head.clone(), idx),
                    ArrayExpr::Lambda(params, body) => {
                        let mut s = Subst::new();
                        for (p, e) in params.iter().zip(idx) {
                            s.insert_scalar(p.clone(), e);
                        }
                        body.subst(&s).beta_reduce()
                    }
                }
            }
            Expr::Ite(g, a, b) => Expr::ite(g.beta_reduce(), a.beta_reduce(), b.beta_reduce()),
        }
    }
}

impl BetaReduce for ArrayExpr {
    fn beta_reduce(&self) -> ArrayExpr {
        match self {
            ArrayExpr::Var(_) => self.clone(),
            ArrayExpr::Lambda(params, body) => {
                ArrayExpr::Lambda(params.clone(), Box::new(body.beta_reduce()))
            }
        }
    }
}

impl BetaReduce for Formula {
    fn beta_reduce(&self) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Rel(r, a, b) => Formula::Rel(*r, a.beta_reduce(), b.beta_reduce()),
            Formula::Divides(d, e) => Formula::Divides(*d, e.beta_reduce()),
            Formula::ArrayEq(p, q) => Formula::ArrayEq(p.beta_reduce(), q.beta_reduce()),
            Formula::Not(f) => Formula::not(f.beta_reduce()),
            Formula::And(fs) => Formula::And(fs.iter().map(BetaReduce::beta_reduce).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(BetaReduce::beta_reduce).collect()),
            Formula::Implies(a, b) => Formula::implies(a.beta_reduce(), b.beta_reduce()),
            Formula::Iff(a, b) => Formula::iff(a.beta_reduce(), b.beta_reduce()),
        }
    }
}

/// True if some application has a literal λ as its head.
pub trait HasRedex {
    fn has_redex(&self) -> bool;
}

impl HasRedex for Expr {
    fn has_redex(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Bin(_, a, b) => a.has_redex() || b.has_redex(),
            Expr::App(head, idx) => {
                head.is_lambda() || head.has_redex() || idx.iter().any(HasRedex::has_redex)
            }
            Expr::Ite(g, a, b) => g.has_redex() || a.has_redex() || b.has_redex(),
        }
    }
}

impl HasRedex for ArrayExpr {
    fn has_redex(&self) -> bool {
        match self {
            ArrayExpr::Var(_) => false,
            ArrayExpr::Lambda(_, body) => body.has_redex(),
        }
    }
}

impl HasRedex for Formula {
    fn has_redex(&self) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Rel(_, a, b) => a.has_redex() || b.has_redex(),
            Formula::Divides(_, e) => e.has_redex(),
            Formula::ArrayEq(p, q) => p.has_redex() || q.has_redex(),
            Formula::Not(f) => f.has_redex(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(HasRedex::has_redex),
            Formula::Implies(a, b) | Formula::Iff(a, b) => a.has_redex() || b.has_redex(),
        }
    }
}

// ---------------------------------------------------------------------------
// Lvalue substitution

/// Replaces top-level lvalue occurrences (in the sense of `lval_set`) by
/// expressions. Lvalues below other lvalues, or below λs, are left alone.
#[derive(Clone, Debug, Default)]
pub struct LvalSubst {
    map: BTreeMap<Lvalue, Expr>,
}

impl LvalSubst {
    pub fn new() -> Self {
        LvalSubst::default()
    }

    pub fn insert(&mut self, l: Lvalue, e: Expr) {
        self.map.insert(l, e);
    }

    pub fn get(&self, l: &Lvalue) -> Option<&Expr> {
        self.map.get(l)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Lvalue, &Expr)> {
        self.map.iter()
    }

    pub fn apply(&self, e: &Expr) -> Expr {
        match e {
            Expr::Const(_) => e.clone(),
            Expr::Bin(op, a, b) => Expr::bin(*op, self.apply(a), self.apply(b)),
            Expr::App(..) => match Lvalue::from_expr(e) {
                Some(l) => self.map.get(&l).cloned().unwrap_or_else(|| e.clone()),
                None => e.clone(),
            },
            Expr::Ite(g, a, b) => Expr::ite(self.apply_formula(g), self.apply(a), self.apply(b)),
        }
    }

    pub fn apply_formula(&self, f: &Formula) -> Formula {
        match f {
            Formula::True | Formula::False | Formula::ArrayEq(..) => f.clone(),
            Formula::Rel(r, a, b) => Formula::Rel(*r, self.apply(a), self.apply(b)),
            Formula::Divides(d, e) => Formula::Divides(*d, self.apply(e)),
            Formula::Not(g) => Formula::not(self.apply_formula(g)),
            Formula::And(fs) => Formula::And(fs.iter().map(|g| self.apply_formula(g)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|g| self.apply_formula(g)).collect()),
            Formula::Implies(a, b) => {
                Formula::implies(self.apply_formula(a), self.apply_formula(b))
            }
            Formula::Iff(a, b) => Formula::iff(self.apply_formula(a), self.apply_formula(b)),
        }
    }
}

/// An invertible lvalue-to-symbol map: `σ` replaces lvalues by fresh scalar
/// symbols and `σ⁻¹` maps the symbols back.
#[derive(Clone, Debug, Default)]
pub struct SymbolMap {
    forward: BTreeMap<Lvalue, Var>,
    backward: BTreeMap<Var, Lvalue>,
}

impl SymbolMap {
    pub fn new() -> Self {
        SymbolMap::default()
    }

    /// The symbol for `l`, allocating `rec!k` on first use.
    pub fn symbol(&mut self, l: &Lvalue) -> Var {
        if let Some(v) = self.forward.get(l) {
            return v.clone();
        }
        let v = fresh_var("rec", 0);
        self.forward.insert(l.clone(), v.clone());
        self.backward.insert(v.clone(), l.clone());
        v
    }

    pub fn lookup(&self, l: &Lvalue) -> Option<&Var> {
        self.forward.get(l)
    }

    pub fn lvalue(&self, v: &Var) -> Option<&Lvalue> {
        self.backward.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Lvalue, &Var)> {
        self.forward.iter()
    }

    pub fn forward(&self) -> LvalSubst {
        let mut s = LvalSubst::new();
        for (l, v) in &self.forward {
            s.insert(l.clone(), Expr::var(v));
        }
        s
    }

    pub fn inverse(&self) -> Subst {
        let mut s = Subst::new();
        for (v, l) in &self.backward {
            s.insert_scalar(v.clone(), l.to_expr());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Formula;

    fn i() -> Expr {
        Expr::scalar("i")
    }

    fn a() -> Var {
        Var::array("a", 1)
    }

    fn shift_lambda() -> ArrayExpr {
        let j = Var::scalar("j");
        ArrayExpr::lambda(
            vec![j.clone()],
            Expr::ite(
                Expr::var(&j).eq(i() + 1),
                Expr::select(&a(), vec![i()]),
                Expr::select(&a(), vec![Expr::var(&j)]),
            ),
        )
    }

    #[test]
    fn update_substitution_yields_redex() {
        let s = Subst::new()
            .with(a(), shift_lambda())
            .with_scalar(Var::scalar("i"), i() + 1);
        let got = Expr::select(&a(), vec![i()]).subst(&s);
        assert_eq!(got, Expr::apply(shift_lambda(), vec![i() + 1]));
    }

    #[test]
    fn empty_substitution_is_identity() {
        let e = Expr::select(&a(), vec![i() + 2]);
        assert_eq!(e.subst(&Subst::new()), e);
    }

    #[test]
    fn inverse_symbol_map_restores_lvalues() {
        let mut m = SymbolMap::new();
        let l = Lvalue::scalar(Var::scalar("i"));
        let rec = m.symbol(&l);
        let e = Expr::var(&rec) + Expr::scalar("n");
        assert_eq!(e.subst(&m.inverse()), i() + Expr::scalar("n"));
    }

    #[test]
    fn direct_redex_reduces() {
        let e = Expr::apply(shift_lambda(), vec![i() + 1]).beta_reduce();
        let expected = Expr::ite(
            (i() + 1).eq(i() + 1),
            Expr::select(&a(), vec![i()]),
            Expr::select(&a(), vec![i() + 1]),
        );
        assert_eq!(e, expected);
        assert!(!e.has_redex());
    }

    #[test]
    fn variable_head_is_not_a_redex() {
        let e = Expr::select(&a(), vec![Expr::scalar("c")]);
        assert_eq!(e.beta_reduce(), e);
    }

    #[test]
    fn substitution_under_lambda_avoids_capture() {
        let lam = shift_lambda();
        let s = Subst::new().with_scalar(Var::scalar("i"), Expr::scalar("j"));
        let got = lam.subst(&s);
        let ArrayExpr::Lambda(params, _) = &got else { panic!("lost lambda") };
        assert_ne!(params[0].name, "j");
        assert!(got.free_vars().contains(&Var::scalar("j")));
    }

    #[test]
    fn lvalue_substitution_is_top_level_only() {
        let b = Var::array("b", 1);
        let inner = Lvalue::new(b.clone(), vec![i()]);
        let mut s = LvalSubst::new();
        s.insert(Lvalue::scalar(Var::scalar("i")), Expr::int(9));
        let e = Expr::select(&b, vec![i()]) + i();
        assert_eq!(s.apply(&e), inner.to_expr() + Expr::int(9));
        let f = Formula::ArrayEq(ArrayExpr::Var(b.clone()), ArrayExpr::Var(b));
        assert_eq!(s.apply_formula(&f), f);
    }

    #[test]
    fn scalar_images_collapse() {
        let s = Subst::new().with_scalar(Var::scalar("i"), Expr::int(3));
        assert_eq!(i().subst(&s), Expr::int(3));
        assert_eq!(s.scalar_image(&Var::scalar("k")), Expr::scalar("k"));
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let mut s = Subst::new();
        let err = s.try_insert(a(), ArrayExpr::Var(Var::scalar("i"))).unwrap_err();
        assert_eq!(err.expected, 1);
        assert_eq!(err.image, 0);
    }
}
