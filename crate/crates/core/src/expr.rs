//! Abstract syntax for rvalues, lvalues, (array) expressions and formulas.
//!
//! Scalars are treated as arrays of arity 0: the scalar `i` is the
//! application `i[]` of the variable `i` to the empty index vector. Rvalues
//! are the subset of [`Expr`] without `ite` and without λ-headed
//! applications, see [`Expr::is_rvalue`].

use std::collections::BTreeSet;
use std::fmt;
use std::ops;

/// A program variable together with its arity (0 for scalars).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub arity: usize,
}

impl Var {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Var { name: name.into(), arity }
    }

    pub fn scalar(name: impl Into<String>) -> Self {
        Var::new(name, 0)
    }

    pub fn array(name: impl Into<String>, arity: usize) -> Self {
        Var::new(name, arity)
    }

    pub fn is_scalar(&self) -> bool {
        self.arity == 0
    }

    /// The post-state copy `x'` of this variable.
    pub fn primed(&self) -> Var {
        Var::new(format!("{}'", self.name), self.arity)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Integer division rounding toward negative infinity.
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "div",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(i64),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// `p[e1, ..., ek]`; scalars are `x[]`.
    App(Box<ArrayExpr>, Vec<Expr>),
    Ite(Box<Formula>, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArrayExpr {
    Var(Var),
    /// `λ params. body`; all parameters are distinct scalars.
    Lambda(Vec<Var>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
            Rel::Eq => "=",
            Rel::Ne => "distinct",
        }
    }

    pub fn negate(self) -> Rel {
        match self {
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Ge => Rel::Lt,
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Gt => a > b,
            Rel::Ge => a >= b,
            Rel::Eq => a == b,
            Rel::Ne => a != b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Rel(Rel, Expr, Expr),
    /// `d | e` for a nonzero constant divisor `d`.
    Divides(i64, Expr),
    /// Extensional equality of two array expressions of equal positive arity.
    ArrayEq(ArrayExpr, ArrayExpr),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

/// An lvalue `x[r1, ..., rk]` with rvalue indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lvalue {
    pub var: Var,
    pub index: Vec<Expr>,
}

impl Lvalue {
    pub fn new(var: Var, index: Vec<Expr>) -> Self {
        debug_assert_eq!(var.arity, index.len());
        Lvalue { var, index }
    }

    pub fn scalar(var: Var) -> Self {
        Lvalue::new(var, Vec::new())
    }

    pub fn to_expr(&self) -> Expr {
        Expr::App(Box::new(ArrayExpr::Var(self.var.clone())), self.index.clone())
    }

    /// Recognizes `x[r]` with a variable head.
    pub fn from_expr(e: &Expr) -> Option<Lvalue> {
        match e {
            Expr::App(head, idx) => match head.as_ref() {
                ArrayExpr::Var(v) => Some(Lvalue { var: v.clone(), index: idx.clone() }),
                ArrayExpr::Lambda(..) => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Lvalue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_expr().fmt(f)
    }
}

impl Expr {
    pub fn int(c: i64) -> Expr {
        Expr::Const(c)
    }

    /// The scalar variable `x` as an expression.
    pub fn var(v: &Var) -> Expr {
        debug_assert!(v.is_scalar(), "{v} is not a scalar");
        Expr::App(Box::new(ArrayExpr::Var(v.clone())), Vec::new())
    }

    pub fn scalar(name: &str) -> Expr {
        Expr::var(&Var::scalar(name))
    }

    pub fn select(v: &Var, index: Vec<Expr>) -> Expr {
        debug_assert_eq!(v.arity, index.len());
        Expr::App(Box::new(ArrayExpr::Var(v.clone())), index)
    }

    pub fn apply(p: ArrayExpr, index: Vec<Expr>) -> Expr {
        Expr::App(Box::new(p), index)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn div(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Div, self, rhs)
    }

    pub fn ite(guard: Formula, then: Expr, els: Expr) -> Expr {
        Expr::Ite(Box::new(guard), Box::new(then), Box::new(els))
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// `Some(x)` if this is the plain scalar variable `x`.
    pub fn as_scalar_var(&self) -> Option<&Var> {
        match self {
            Expr::App(head, idx) if idx.is_empty() => match head.as_ref() {
                ArrayExpr::Var(v) if v.is_scalar() => Some(v),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_rvalue(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Bin(_, a, b) => a.is_rvalue() && b.is_rvalue(),
            Expr::App(head, idx) => {
                matches!(head.as_ref(), ArrayExpr::Var(_)) && idx.iter().all(Expr::is_rvalue)
            }
            Expr::Ite(..) => false,
        }
    }

    /// Number of AST nodes; used to bound symbolic unfolding.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) => 1,
            Expr::Bin(_, a, b) => 1 + a.size() + b.size(),
            Expr::App(head, idx) => 1 + head.size() + idx.iter().map(Expr::size).sum::<usize>(),
            Expr::Ite(g, a, b) => 1 + g.size() + a.size() + b.size(),
        }
    }

    pub fn rel(self, rel: Rel, rhs: Expr) -> Formula {
        Formula::Rel(rel, self, rhs)
    }

    pub fn lt(self, rhs: Expr) -> Formula {
        self.rel(Rel::Lt, rhs)
    }

    pub fn le(self, rhs: Expr) -> Formula {
        self.rel(Rel::Le, rhs)
    }

    pub fn gt(self, rhs: Expr) -> Formula {
        self.rel(Rel::Gt, rhs)
    }

    pub fn ge(self, rhs: Expr) -> Formula {
        self.rel(Rel::Ge, rhs)
    }

    pub fn eq(self, rhs: Expr) -> Formula {
        self.rel(Rel::Eq, rhs)
    }

    pub fn ne(self, rhs: Expr) -> Formula {
        self.rel(Rel::Ne, rhs)
    }
}

impl ArrayExpr {
    pub fn arity(&self) -> usize {
        match self {
            ArrayExpr::Var(v) => v.arity,
            ArrayExpr::Lambda(params, _) => params.len(),
        }
    }

    pub fn lambda(params: Vec<Var>, body: Expr) -> ArrayExpr {
        ArrayExpr::Lambda(params, Box::new(body))
    }

    pub fn is_lambda(&self) -> bool {
        matches!(self, ArrayExpr::Lambda(..))
    }

    pub fn size(&self) -> usize {
        match self {
            ArrayExpr::Var(_) => 1,
            ArrayExpr::Lambda(_, body) => 1 + body.size(),
        }
    }
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// `⋀ fs`; a single conjunct is returned as is and the empty one is `true`.
    pub fn and(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut fs: Vec<Formula> = fs.into_iter().collect();
        match fs.len() {
            0 => Formula::True,
            1 => fs.pop().expect("one"),
            _ => Formula::And(fs),
        }
    }

    /// `⋁ fs`; a single disjunct is returned as is and the empty one is `false`.
    pub fn or(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut fs: Vec<Formula> = fs.into_iter().collect();
        match fs.len() {
            0 => Formula::False,
            1 => fs.pop().expect("one"),
            _ => Formula::Or(fs),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False => 1,
            Formula::Rel(_, a, b) => 1 + a.size() + b.size(),
            Formula::Divides(_, e) => 1 + e.size(),
            Formula::ArrayEq(p, q) => 1 + p.size() + q.size(),
            Formula::Not(f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Splits nested conjunctions into their conjuncts; `true` disappears.
    pub fn conjuncts(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        fn go(f: &Formula, out: &mut Vec<Formula>) {
            match f {
                Formula::And(fs) => fs.iter().for_each(|g| go(g, out)),
                Formula::True => {}
                other => out.push(other.clone()),
            }
        }
        go(self, &mut out);
        out
    }

    /// Lexicographic strict comparison `lhs < rhs` of two index vectors.
    pub fn lex_lt(lhs: &[Expr], rhs: &[Expr]) -> Formula {
        debug_assert_eq!(lhs.len(), rhs.len());
        let mut disjuncts = Vec::new();
        for k in 0..lhs.len() {
            let mut conj: Vec<Formula> =
                (0..k).map(|j| lhs[j].clone().eq(rhs[j].clone())).collect();
            conj.push(lhs[k].clone().lt(rhs[k].clone()));
            disjuncts.push(Formula::and(conj));
        }
        Formula::or(disjuncts)
    }

    pub fn lex_le(lhs: &[Expr], rhs: &[Expr]) -> Formula {
        Formula::or([Formula::lex_lt(lhs, rhs), Formula::vec_eq(lhs, rhs)])
    }

    pub fn vec_eq(lhs: &[Expr], rhs: &[Expr]) -> Formula {
        debug_assert_eq!(lhs.len(), rhs.len());
        Formula::and(lhs.iter().zip(rhs).map(|(a, b)| a.clone().eq(b.clone())))
    }

    pub fn vec_ne(lhs: &[Expr], rhs: &[Expr]) -> Formula {
        debug_assert_eq!(lhs.len(), rhs.len());
        Formula::or(lhs.iter().zip(rhs).map(|(a, b)| a.clone().ne(b.clone())))
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Add, self, rhs)
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Sub, self, rhs)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Mul, self, rhs)
    }
}

impl ops::Add<i64> for Expr {
    type Output = Expr;
    fn add(self, rhs: i64) -> Expr {
        self + Expr::Const(rhs)
    }
}

impl ops::Sub<i64> for Expr {
    type Output = Expr;
    fn sub(self, rhs: i64) -> Expr {
        self - Expr::Const(rhs)
    }
}

// ---------------------------------------------------------------------------
// Free variables

pub trait FreeVars {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>);

    fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }
}

impl FreeVars for Expr {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Bin(_, a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Expr::App(head, idx) => {
                head.collect_free(bound, out);
                idx.iter().for_each(|e| e.collect_free(bound, out));
            }
            Expr::Ite(g, a, b) => {
                g.collect_free(bound, out);
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
        }
    }
}

impl FreeVars for ArrayExpr {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            ArrayExpr::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            ArrayExpr::Lambda(params, body) => {
                let depth = bound.len();
                bound.extend(params.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(depth);
            }
        }
    }
}

impl FreeVars for Formula {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Rel(_, a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Divides(_, e) => e.collect_free(bound, out),
            Formula::ArrayEq(p, q) => {
                p.collect_free(bound, out);
                q.collect_free(bound, out);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().for_each(|f| f.collect_free(bound, out))
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
        }
    }
}

impl FreeVars for Lvalue {
    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        self.to_expr().collect_free(bound, out)
    }
}

// ---------------------------------------------------------------------------
// Top-level lvalues

/// Collects the top-level lvalues: lvalues below other lvalues or below a λ
/// are not included.
pub trait LvalSet {
    fn collect_lvals(&self, out: &mut Vec<Lvalue>);

    /// Top-level lvalues in order of first occurrence, without duplicates.
    fn lval_set(&self) -> Vec<Lvalue> {
        let mut out = Vec::new();
        self.collect_lvals(&mut out);
        let mut seen = BTreeSet::new();
        out.retain(|l| seen.insert(l.clone()));
        out
    }
}

impl LvalSet for Expr {
    fn collect_lvals(&self, out: &mut Vec<Lvalue>) {
        match self {
            Expr::Const(_) => {}
            Expr::Bin(_, a, b) => {
                a.collect_lvals(out);
                b.collect_lvals(out);
            }
            Expr::App(..) => {
                if let Some(l) = Lvalue::from_expr(self) {
                    out.push(l);
                }
            }
            Expr::Ite(g, a, b) => {
                g.collect_lvals(out);
                a.collect_lvals(out);
                b.collect_lvals(out);
            }
        }
    }
}

impl LvalSet for Formula {
    fn collect_lvals(&self, out: &mut Vec<Lvalue>) {
        match self {
            Formula::True | Formula::False | Formula::ArrayEq(..) => {}
            Formula::Rel(_, a, b) => {
                a.collect_lvals(out);
                b.collect_lvals(out);
            }
            Formula::Divides(_, e) => e.collect_lvals(out),
            Formula::Not(f) => f.collect_lvals(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_lvals(out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_lvals(out);
                b.collect_lvals(out);
            }
        }
    }
}

impl LvalSet for Lvalue {
    fn collect_lvals(&self, out: &mut Vec<Lvalue>) {
        out.push(self.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i() -> Expr {
        Expr::scalar("i")
    }

    fn a() -> Var {
        Var::array("a", 1)
    }

    #[test]
    fn lval_set_of_sum_is_the_array_cell_only() {
        let e = Expr::select(&a(), vec![i()]) + 7;
        assert_eq!(e.lval_set(), vec![Lvalue::new(a(), vec![i()])]);
    }

    #[test]
    fn lval_set_of_constant_is_empty() {
        assert!(Expr::int(5).lval_set().is_empty());
    }

    #[test]
    fn lval_set_ignores_array_equalities() {
        let p = ArrayExpr::lambda(vec![Var::scalar("j")], Expr::select(&a(), vec![Expr::scalar("j")]));
        let f = Formula::ArrayEq(p, ArrayExpr::Var(a()));
        assert!(f.lval_set().is_empty());
    }

    #[test]
    fn lval_set_of_ite_unions_guard_and_branches() {
        let e = Expr::ite(i().lt(Expr::scalar("k")), Expr::select(&a(), vec![i()]), Expr::int(0));
        let ls = e.lval_set();
        assert_eq!(ls.len(), 3);
    }

    #[test]
    fn lval_set_of_lvalue_is_itself() {
        let l = Lvalue::new(a(), vec![i() + 1]);
        assert_eq!(l.to_expr().lval_set(), vec![l]);
    }

    #[test]
    fn free_vars_respects_lambda_binding() {
        let j = Var::scalar("j");
        let lam = ArrayExpr::lambda(vec![j.clone()], Expr::select(&a(), vec![Expr::var(&j)]) + i());
        let fv = lam.free_vars();
        assert_eq!(fv, BTreeSet::from([a(), Var::scalar("i")]));
        assert!(Expr::int(3).free_vars().is_empty());
        let fv = Expr::select(&a(), vec![i() + 1]).free_vars();
        assert_eq!(fv, BTreeSet::from([a(), Var::scalar("i")]));
    }

    #[test]
    fn rvalues_exclude_ite_and_lambda_heads() {
        assert!((Expr::select(&a(), vec![i()]) + 1).is_rvalue());
        assert!(!Expr::ite(Formula::True, i(), i()).is_rvalue());
        let lam = ArrayExpr::lambda(vec![Var::scalar("j")], Expr::int(0));
        assert!(!Expr::apply(lam, vec![i()]).is_rvalue());
    }
}
