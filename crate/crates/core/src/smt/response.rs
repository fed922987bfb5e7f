use std::collections::BTreeMap;

use crate::eval::{ArrayValue, Background};
use crate::expr::{ArrayExpr, Expr, Var};
use crate::sexpr::Decls;
use crate::subst::{Subst, Substitute};

use super::{BackendError, ModelValue};

/// Solver output as a plain s-expression; `|quoted|` symbols are unquoted
/// and string literals keep their quotes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

impl Sx {
    pub fn parse_all(src: &str) -> Result<Vec<Sx>, BackendError> {
        let mut stack: Vec<Vec<Sx>> = vec![Vec::new()];
        let mut chars = src.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '(' => stack.push(Vec::new()),
                ')' => {
                    let done = stack.pop().filter(|_| !stack.is_empty());
                    let Some(items) = done else {
                        return Err(BackendError::Protocol(format!("unbalanced output: {src}")));
                    };
                    stack.last_mut().expect("outer level").push(Sx::List(items));
                }
                '|' => {
                    let mut s = String::new();
                    for d in chars.by_ref() {
                        if d == '|' {
                            break;
                        }
                        s.push(d);
                    }
                    stack.last_mut().expect("level").push(Sx::Atom(s));
                }
                '"' => {
                    let mut s = String::from('"');
                    while let Some(d) = chars.next() {
                        s.push(d);
                        if d == '"' {
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                continue;
                            }
                            break;
                        }
                    }
                    stack.last_mut().expect("level").push(Sx::Atom(s));
                }
                c if c.is_whitespace() => {}
                c => {
                    let mut s = String::from(c);
                    while let Some(&d) = chars.peek() {
                        if d.is_whitespace() || d == '(' || d == ')' {
                            break;
                        }
                        s.push(d);
                        chars.next();
                    }
                    stack.last_mut().expect("level").push(Sx::Atom(s));
                }
            }
        }
        if stack.len() != 1 {
            return Err(BackendError::Protocol(format!("unbalanced output: {src}")));
        }
        Ok(stack.pop().expect("top level"))
    }

    pub fn parse(src: &str) -> Result<Sx, BackendError> {
        let mut all = Sx::parse_all(src)?;
        if all.len() != 1 {
            return Err(BackendError::Protocol(format!("expected one response, got: {src}")));
        }
        Ok(all.pop().expect("one"))
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sx::Atom(s) => Some(s),
            Sx::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sx]> {
        match self {
            Sx::List(items) => Some(items),
            Sx::Atom(_) => None,
        }
    }

    fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }

    /// Prints the expression back; `|quotes|` are not restored.
    pub fn render(&self) -> String {
        match self {
            Sx::Atom(s) => s.clone(),
            Sx::List(items) => {
                let parts: Vec<String> = items.iter().map(Sx::render).collect();
                format!("({})", parts.join(" "))
            }
        }
    }
}

fn bad(what: &Sx) -> BackendError {
    BackendError::Protocol(format!("unsupported model value {}", what.render()))
}

fn int_literal(s: &Sx) -> Option<i64> {
    match s {
        Sx::Atom(a) => a.parse().ok(),
        Sx::List(items) => match items.as_slice() {
            [Sx::Atom(m), x] if m == "-" => int_literal(x)?.checked_neg(),
            _ => None,
        },
    }
}

/// `((as const (Array ...)) v)` → `v`.
fn const_array(s: &Sx) -> Option<&Sx> {
    let items = s.as_list()?;
    let [head, v] = items else { return None };
    (head.head() == Some("as") && head.as_list()?.get(1)?.as_atom() == Some("const")).then_some(v)
}

/// Default value plus overridden cells, if the value is a const/store chain.
fn table(s: &Sx, arity: usize) -> Option<(i64, BTreeMap<Vec<i64>, i64>)> {
    if arity == 0 {
        return int_literal(s).map(|v| (v, BTreeMap::new()));
    }
    if let Some(inner) = const_array(s) {
        let (d, cells) = table(inner, arity - 1)?;
        return cells.is_empty().then_some((d, BTreeMap::new()));
    }
    let items = s.as_list()?;
    match items {
        [Sx::Atom(st), base, idx, v] if st == "store" => {
            let (d, mut cells) = table(base, arity)?;
            let i = int_literal(idx)?;
            let (vd, vcells) = table(v, arity - 1)?;
            cells.retain(|k, _| k[0] != i);
            if arity == 1 {
                cells.insert(vec![i], vd);
            } else {
                if vd != d {
                    return None;
                }
                for (k, x) in vcells {
                    let mut key = vec![i];
                    key.extend(k);
                    cells.insert(key, x);
                }
            }
            Some((d, cells))
        }
        _ => None,
    }
}

fn rename_bound(s: &Sx, map: &BTreeMap<String, String>) -> Sx {
    match s {
        Sx::Atom(a) => Sx::Atom(map.get(a).cloned().unwrap_or_else(|| a.clone())),
        Sx::List(items) => Sx::List(items.iter().map(|x| rename_bound(x, map)).collect()),
    }
}

/// The body of a function value applied to `params`.
fn term(s: &Sx, params: &[Var], bound: &BTreeMap<String, Var>) -> Result<Expr, BackendError> {
    if params.is_empty() {
        if let Some(v) = int_literal(s) {
            return Ok(Expr::int(v));
        }
        // Scalar terms: read with our own grammar, binding solver-generated
        // parameter names to plain identifiers first.
        let names: BTreeMap<String, String> =
            bound.keys().enumerate().map(|(k, name)| (name.clone(), format!("bound{k}"))).collect();
        let e = Decls::permissive()
            .parse_expr(&rename_bound(s, &names).render())
            .map_err(|_| bad(s))?;
        let mut sub = Subst::new();
        for (k, name) in bound.keys().enumerate() {
            sub.insert_scalar(Var::scalar(format!("bound{k}")), Expr::var(&bound[name]));
        }
        return Ok(e.subst(&sub));
    }
    if let Some(inner) = const_array(s) {
        return term(inner, &params[1..], bound);
    }
    match s.as_list() {
        Some([Sx::Atom(st), base, idx, v]) if st == "store" => {
            let i = term(idx, &[], bound)?;
            let hit = Expr::var(&params[0]).eq(i);
            Ok(Expr::ite(hit, term(v, &params[1..], bound)?, term(base, params, bound)?))
        }
        Some([Sx::Atom(lam), Sx::List(decls), body]) if lam == "lambda" => {
            let mut inner = bound.clone();
            for (k, d) in decls.iter().enumerate() {
                let name = d.as_list().and_then(|x| x.first()).and_then(Sx::as_atom).ok_or_else(|| bad(s))?;
                let p = params.get(k).ok_or_else(|| bad(s))?;
                inner.insert(name.to_string(), p.clone());
            }
            term(body, &params[decls.len()..], &inner)
        }
        _ => Err(bad(s)),
    }
}

/// Reads the solver's value for a variable of arity `arity`.
pub fn parse_model_value(s: &Sx, arity: usize) -> Result<ModelValue, BackendError> {
    if arity == 0 {
        return int_literal(s).map(ModelValue::Int).ok_or_else(|| bad(s));
    }
    if let Some((d, cells)) = table(s, arity) {
        return Ok(ModelValue::Table(ArrayValue { arity, background: Background::Const(d), cells }));
    }
    let params: Vec<Var> = (0..arity).map(|k| Var::scalar(format!("j{k}"))).collect();
    let body = term(s, &params, &BTreeMap::new())?;
    Ok(ModelValue::Function(ArrayExpr::Lambda(params, Box::new(body))))
}

/// Parses a `get-value` response for the given variables.
pub fn parse_values(src: &str, vars: &[Var]) -> Result<BTreeMap<Var, ModelValue>, BackendError> {
    let resp = Sx::parse(src)?;
    let pairs = resp.as_list().ok_or_else(|| bad(&resp))?;
    let mut out = BTreeMap::new();
    for pair in pairs {
        let Some([Sx::Atom(name), value]) = pair.as_list() else { return Err(bad(pair)) };
        let Some(v) = vars.iter().find(|v| &v.name == name) else { return Err(bad(pair)) };
        out.insert(v.clone(), parse_model_value(value, v.arity)?);
    }
    Ok(out)
}
