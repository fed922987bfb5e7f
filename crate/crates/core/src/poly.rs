//! Polynomials with rational coefficients over opaque integer-valued atoms.
//!
//! Anything that is not a constant, `+`, `-` or `*` is an atom: variables,
//! array reads, `div` terms and `ite` terms. Atoms are compared
//! structurally, so callers normalize them first.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expr::{BinOp, Expr, Var};

pub type Coef = Ratio<i128>;

/// A product of atoms with positive exponents, sorted by atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Expr, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(e: Expr) -> Self {
        Monomial(vec![(e, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Expr, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, k)| *k).sum()
    }

    pub fn degree_in(&self, atom: &Expr) -> u32 {
        self.0.iter().find(|(a, _)| a == atom).map_or(0, |(_, k)| *k)
    }

    /// This monomial with `atom` removed.
    pub fn without(&self, atom: &Expr) -> Monomial {
        Monomial(self.0.iter().filter(|(a, _)| a != atom).cloned().collect())
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: BTreeMap<Expr, u32> = self.0.iter().cloned().collect();
        for (a, k) in &other.0 {
            *out.entry(a.clone()).or_insert(0) += k;
        }
        Monomial(out.into_iter().collect())
    }

    pub fn to_expr(&self) -> Option<Expr> {
        let mut factors = Vec::new();
        for (a, k) in &self.0 {
            for _ in 0..*k {
                factors.push(a.clone());
            }
        }
        factors.into_iter().reduce(|x, y| x * y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Coef>,
}

fn coef(c: i64) -> Coef {
    Coef::from_integer(c as i128)
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Coef) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(c: i64) -> Self {
        Poly::constant(coef(c))
    }

    pub fn atom(e: Expr) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::atom(e), Coef::one());
        p
    }

    pub fn var(v: &Var) -> Self {
        Poly::atom(Expr::var(v))
    }

    /// Reads `+`, `-`, `*` and constants structurally; everything else is an
    /// atom taken verbatim.
    pub fn from_expr(e: &Expr) -> Poly {
        match e {
            Expr::Const(c) => Poly::int(*c),
            Expr::Bin(BinOp::Add, a, b) => Poly::from_expr(a).add(&Poly::from_expr(b)),
            Expr::Bin(BinOp::Sub, a, b) => Poly::from_expr(a).sub(&Poly::from_expr(b)),
            Expr::Bin(BinOp::Mul, a, b) => Poly::from_expr(a).mul(&Poly::from_expr(b)),
            _ => Poly::atom(e.clone()),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coef)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Coef) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(Coef::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, k: Coef) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::int(1), |acc, _| acc.mul(self))
    }

    /// The constant coefficient.
    pub fn constant_term(&self) -> Coef {
        self.terms.get(&Monomial::one()).copied().unwrap_or_else(Coef::zero)
    }

    pub fn as_constant(&self) -> Option<Coef> {
        match self.terms.len() {
            0 => Some(Coef::zero()),
            1 => self.terms.get(&Monomial::one()).copied(),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        self.as_constant().filter(|c| c.is_integer()).and_then(|c| c.to_integer().to_i64())
    }

    /// The polynomial without its constant coefficient.
    pub fn non_constant(&self) -> Poly {
        Poly {
            terms: self.terms.iter().filter(|(m, _)| !m.is_one()).map(|(m, c)| (m.clone(), *c)).collect(),
        }
    }

    pub fn is_linear(&self) -> bool {
        self.terms.keys().all(|m| m.degree() <= 1)
    }

    pub fn has_integer_coefficients(&self) -> bool {
        self.terms.values().all(Ratio::is_integer)
    }

    pub fn degree_in(&self, atom: &Expr) -> u32 {
        self.terms.keys().map(|m| m.degree_in(atom)).max().unwrap_or(0)
    }

    pub fn mentions(&self, atom: &Expr) -> bool {
        self.degree_in(atom) > 0
    }

    pub fn atoms(&self) -> Vec<Expr> {
        let mut out: Vec<Expr> = Vec::new();
        for m in self.terms.keys() {
            for (a, _) in m.factors() {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
        }
        out
    }

    /// Coefficients of `atom^k` as polynomials in the remaining atoms.
    pub fn coefficients_in(&self, atom: &Expr) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let k = m.degree_in(atom);
            out.entry(k).or_default().add_term(m.without(atom), *c);
        }
        out
    }

    /// Replaces `atom` by the polynomial `by`.
    pub fn substitute(&self, atom: &Expr, by: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (k, rest) in self.coefficients_in(atom) {
            out = out.add(&rest.mul(&by.pow(k)));
        }
        out
    }

    /// Least common multiple of all coefficient denominators.
    pub fn denominator_lcm(&self) -> i128 {
        self.terms.values().fold(1i128, |acc, c| acc.lcm(c.denom()))
    }

    /// Gcd of the numerators of the non-constant coefficients (integer
    /// coefficients assumed); 0 for a constant polynomial.
    pub fn content(&self) -> i128 {
        self.terms
            .iter()
            .filter(|(m, _)| !m.is_one())
            .fold(0i128, |acc, (_, c)| acc.gcd(c.numer()))
    }

    /// Sign of the first non-constant coefficient in monomial order.
    pub fn leading_sign(&self) -> i32 {
        self.terms
            .iter()
            .find(|(m, _)| !m.is_one())
            .map_or(0, |(_, c)| if c.is_positive() { 1 } else { -1 })
    }

    /// Expression with integer arithmetic only.
    ///
    /// Rational coefficients are split into an integral part and a remainder
    /// that is emitted as `(D·frac) div D`; this is exact whenever the
    /// polynomial is integer-valued, which callers must guarantee.
    pub fn to_expr(&self) -> Expr {
        if self.has_integer_coefficients() {
            return integral_to_expr(self);
        }
        let d = self.denominator_lcm();
        let mut whole = Poly::zero();
        let mut frac = Poly::zero();
        for (m, c) in &self.terms {
            let f = c.floor();
            whole.add_term(m.clone(), f);
            frac.add_term(m.clone(), c - f);
        }
        let scaled = frac.scale(Coef::from_integer(d));
        let quotient = integral_to_expr(&scaled).div(Expr::Const(d as i64));
        if whole.is_zero() {
            quotient
        } else {
            integral_to_expr(&whole) + quotient
        }
    }
}

fn to_i64(c: &Coef) -> i64 {
    c.to_integer().to_i64().expect("coefficient exceeds 64 bits")
}

/// Positive terms first, then subtracted negative terms; constant last.
fn integral_to_expr(p: &Poly) -> Expr {
    let mut acc: Option<Expr> = None;
    let mut constant = 0i64;
    let mut negatives = Vec::new();
    for (m, c) in &p.terms {
        if m.is_one() {
            constant = to_i64(c);
            continue;
        }
        let body = m.to_expr().expect("non-constant monomial");
        let k = to_i64(c);
        if k < 0 {
            negatives.push((body, -k));
            continue;
        }
        let term = if k == 1 { body } else { Expr::Const(k) * body };
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    for (body, k) in negatives {
        let term = if k == 1 { body } else { Expr::Const(k) * body };
        acc = Some(match acc {
            None => Expr::Const(0) - term,
            Some(a) => a - term,
        });
    }
    match acc {
        None => Expr::Const(constant),
        Some(a) if constant > 0 => a + constant,
        Some(a) if constant < 0 => match constant.checked_neg() {
            Some(k) => a - k,
            None => a + constant,
        },
        Some(a) => a,
    }
}

impl fmt::Display for Poly {
    /// Human-readable infix form with rational coefficients.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut ordered: Vec<(&Monomial, &Coef)> = self.terms.iter().filter(|(m, _)| !m.is_one()).collect();
        if let Some(c) = self.terms.get_key_value(&Monomial::one()) {
            ordered.push(c);
        }
        for (k, (m, c)) in ordered.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let body: Vec<String> = m
                .factors()
                .iter()
                .map(|(a, e)| {
                    let name = crate::sexpr::print_expr(a);
                    if *e == 1 { name } else { format!("{name}^{e}") }
                })
                .collect();
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                f.write_str(&body.join("·"))?;
            } else {
                write!(f, "{mag}·{}", body.join("·"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n() -> Expr {
        Expr::scalar("n")
    }

    #[test]
    fn linear_terms_collect() {
        let e = (Expr::scalar("i") + 1) + n() - 1;
        let p = Poly::from_expr(&e);
        assert_eq!(p.to_expr(), Expr::scalar("i") + n());
    }

    #[test]
    fn cancellation_yields_constant() {
        let e = Expr::scalar("i") + Expr::scalar("c") - Expr::scalar("i");
        assert_eq!(Poly::from_expr(&e).to_expr(), Expr::scalar("c"));
        let z = Expr::scalar("i") - Expr::scalar("i");
        assert_eq!(Poly::from_expr(&z).as_int(), Some(0));
    }

    #[test]
    fn half_coefficients_emit_exact_division() {
        // n²/2 - n/2 = n(n-1)/2
        let p = Poly::atom(n()).pow(2).scale(Coef::new(1, 2)).sub(&Poly::atom(n()).scale(Coef::new(1, 2)));
        let e = p.to_expr();
        for k in 0..12i64 {
            let want = k * (k - 1) / 2;
            let folded = crate::simplify::simplify_expr(&crate::subst::Substitute::subst(
                &e,
                &crate::subst::Subst::new().with_scalar(Var::scalar("n"), Expr::int(k)),
            ));
            assert_eq!(folded, Expr::int(want), "n = {k}");
        }
    }

    #[test]
    fn substitution_expands_powers() {
        let p = Poly::atom(n()).pow(2);
        let q = p.substitute(&n(), &Poly::atom(n()).add(&Poly::int(1)));
        let want = Poly::atom(n()).pow(2).add(&Poly::atom(n()).scale(coef(2))).add(&Poly::int(1));
        assert_eq!(q, want);
    }
}
