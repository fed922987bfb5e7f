use std::collections::BTreeSet;

use crate::expr::{ArrayExpr, BinOp, Expr, Formula, FreeVars, Rel, Var};
use crate::subst::BetaReduce;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("λ-term {0} cannot be sent to a ground backend")]
    Lambda(String),
    #[error("variable '{0}' used with two arities")]
    Arity(String),
}

/// `|name|`; every symbol is quoted so primes and `!` are safe.
pub fn quote(name: &str) -> String {
    format!("|{name}|")
}

fn sort(arity: usize) -> String {
    (0..arity).fold("Int".to_string(), |acc, _| format!("(Array Int {acc})"))
}

pub fn declare(v: &Var) -> String {
    format!("(declare-fun {} () {})", quote(&v.name), sort(v.arity))
}

fn int(c: i64) -> String {
    if c < 0 {
        format!("(- {})", c.unsigned_abs())
    } else {
        c.to_string()
    }
}

pub fn encode_expr(e: &Expr) -> Result<String, EncodeError> {
    Ok(match e {
        Expr::Const(c) => int(*c),
        Expr::Bin(BinOp::Div, a, b) => {
            let (x, y) = (encode_expr(a)?, encode_expr(b)?);
            // SMT-LIB `div` rounds so the remainder is non-negative; this
            // coincides with floor division for positive divisors only.
            match b.as_const() {
                Some(d) if d > 0 => format!("(div {x} {y})"),
                Some(d) => format!("(div (- {x}) {})", d.unsigned_abs()),
                None => format!("(ite (> {y} 0) (div {x} {y}) (div (- {x}) (- {y})))"),
            }
        }
        Expr::Bin(op, a, b) => format!("({} {} {})", op.symbol(), encode_expr(a)?, encode_expr(b)?),
        Expr::App(head, idx) => match head.as_ref() {
            ArrayExpr::Var(v) => {
                let mut s = quote(&v.name);
                for i in idx {
                    s = format!("(select {s} {})", encode_expr(i)?);
                }
                s
            }
            lam @ ArrayExpr::Lambda(..) => return Err(EncodeError::Lambda(lam.to_string())),
        },
        Expr::Ite(g, a, b) => format!("(ite {} {} {})", encode_formula(g)?, encode_expr(a)?, encode_expr(b)?),
    })
}

fn nary(op: &str, fs: &[Formula], empty: &str) -> Result<String, EncodeError> {
    match fs {
        [] => Ok(empty.to_string()),
        [f] => encode_formula(f),
        _ => {
            let parts = fs.iter().map(encode_formula).collect::<Result<Vec<_>, _>>()?;
            Ok(format!("({op} {})", parts.join(" ")))
        }
    }
}

pub fn encode_formula(f: &Formula) -> Result<String, EncodeError> {
    Ok(match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Rel(Rel::Ne, a, b) => format!("(not (= {} {}))", encode_expr(a)?, encode_expr(b)?),
        Formula::Rel(r, a, b) => format!("({} {} {})", r.symbol(), encode_expr(a)?, encode_expr(b)?),
        Formula::Divides(d, e) => format!("(= (mod {} {}) 0)", encode_expr(e)?, d.unsigned_abs()),
        Formula::ArrayEq(p, q) => match (p, q) {
            (ArrayExpr::Var(a), ArrayExpr::Var(b)) => format!("(= {} {})", quote(&a.name), quote(&b.name)),
            (ArrayExpr::Lambda(..), _) => return Err(EncodeError::Lambda(p.to_string())),
            _ => return Err(EncodeError::Lambda(q.to_string())),
        },
        Formula::Not(g) => format!("(not {})", encode_formula(g)?),
        Formula::And(fs) => nary("and", fs, "true")?,
        Formula::Or(fs) => nary("or", fs, "false")?,
        Formula::Implies(a, b) => format!("(=> {} {})", encode_formula(a)?, encode_formula(b)?),
        Formula::Iff(a, b) => format!("(= {} {})", encode_formula(a)?, encode_formula(b)?),
    })
}

/// Declarations and assertions for a conjunction, after β-reduction.
/// `extra` variables are declared even if they do not occur.
pub fn script(assertions: &[Formula], extra: &[Var]) -> Result<Vec<String>, EncodeError> {
    let reduced: Vec<Formula> = assertions.iter().map(|f| f.clone().beta_reduce()).collect();
    let mut vars: BTreeSet<Var> = extra.iter().cloned().collect();
    for f in &reduced {
        vars.extend(f.free_vars());
    }
    let mut names = BTreeSet::new();
    for v in &vars {
        if !names.insert(v.name.as_str()) {
            return Err(EncodeError::Arity(v.name.clone()));
        }
    }
    let mut out: Vec<String> = vars.iter().map(declare).collect();
    for f in &reduced {
        out.push(format!("(assert {})", encode_formula(f)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::Decls;

    #[test]
    fn encodes_nested_arrays_and_division() {
        let d = Decls::new().with(&Var::array("b", 2)).with(&Var::scalar("x"));
        let e = d.parse_expr("(+ (select b x 1) (div x -2))").unwrap();
        assert_eq!(
            encode_expr(&e).unwrap(),
            "(+ (select (select |b| |x|) 1) (div (- |x|) 2))"
        );
    }

    #[test]
    fn declares_with_nested_sorts() {
        assert_eq!(declare(&Var::array("b", 2)), "(declare-fun |b| () (Array Int (Array Int Int)))");
        assert_eq!(declare(&Var::scalar("i").primed()), "(declare-fun |i'| () Int)");
    }

    #[test]
    fn lambdas_are_rejected() {
        let f = Decls::permissive().parse_formula("(= (lambda (i) 0) (lambda (i) 1))").unwrap();
        assert!(matches!(encode_formula(&f), Err(EncodeError::Lambda(_))));
    }
}
