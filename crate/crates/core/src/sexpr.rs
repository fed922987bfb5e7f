//! S-expression syntax for expressions, array expressions and formulas.
//!
//! ```text
//! e ::= int | x | (+ e e ...) | (- e) | (- e e ...) | (* e e ...) | (div e e)
//!     | (select p e ...) | (ite f e e)
//! p ::= a | (lambda (j ...) e)
//! f ::= true | false | (< e e) | (<= e e) | (> e e) | (>= e e) | (= e e)
//!     | (distinct e e) | (divides int e) | (= p p) | (distinct p p)
//!     | (not f) | (and f ...) | (or f ...) | (=> f f) | (iff f f)
//! ```
//!
//! Identifiers may contain any character except whitespace, parentheses and
//! `;`, which starts a line comment.

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{ArrayExpr, BinOp, Expr, Formula, Rel, Var};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug)]
pub enum SExp {
    Atom(String, Pos),
    List(Vec<SExp>, Pos),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> Self {
        ParseError { pos, msg: msg.into() }
    }
}

impl SExp {
    pub fn atom(s: impl Into<String>) -> SExp {
        SExp::Atom(s.into(), Pos::default())
    }

    pub fn list(items: Vec<SExp>) -> SExp {
        SExp::List(items, Pos::default())
    }

    pub fn pos(&self) -> Pos {
        match self {
            SExp::Atom(_, p) | SExp::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExp::Atom(s, _) => Some(s),
            SExp::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExp]> {
        match self {
            SExp::List(items, _) => Some(items),
            SExp::Atom(..) => None,
        }
    }

    /// The head symbol of a list, if it is an atom.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|items| items.first()).and_then(SExp::as_atom)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            SExp::Atom(s, _) => out.push_str(s),
            SExp::List(items, _) => {
                out.push('(');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push(' ');
                    }
                    item.render_into(out);
                }
                out.push(')');
            }
        }
    }

    /// Multi-line rendering: lists that do not fit in `width` columns put
    /// each argument on its own line.
    pub fn pretty(&self, width: usize) -> String {
        let mut out = String::new();
        self.pretty_into(&mut out, 0, width);
        out
    }

    fn pretty_into(&self, out: &mut String, indent: usize, width: usize) {
        let flat = self.render();
        if indent + flat.len() <= width {
            out.push_str(&flat);
            return;
        }
        match self {
            SExp::Atom(s, _) => out.push_str(s),
            SExp::List(items, _) => {
                out.push('(');
                let mut rest = items.iter();
                if let Some(first) = rest.next() {
                    first.pretty_into(out, indent + 1, width);
                }
                for item in rest {
                    out.push('\n');
                    out.push_str(&" ".repeat(indent + 2));
                    item.pretty_into(out, indent + 2, width);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for SExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

// ---------------------------------------------------------------------------
// Reading

pub fn parse_sexps(src: &str) -> Result<Vec<SExp>, ParseError> {
    let mut stack: Vec<(Vec<SExp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&ch) = chars.peek() {
        let here = Pos { line, col };
        match ch {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                col += 1;
                stack.push((Vec::new(), here));
            }
            ')' => {
                chars.next();
                col += 1;
                let Some((items, open)) = stack.pop() else {
                    return Err(ParseError::new(here, "unbalanced ')'"));
                };
                let node = SExp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(node),
                    None => top.push(node),
                }
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    col += 1;
                }
                let node = SExp::Atom(word, here);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(node),
                    None => top.push(node),
                }
            }
        }
    }
    if let Some((_, open)) = stack.pop() {
        return Err(ParseError::new(open, "unclosed '('"));
    }
    Ok(top)
}

pub fn parse_one(src: &str) -> Result<SExp, ParseError> {
    let mut all = parse_sexps(src)?;
    match all.len() {
        1 => Ok(all.pop().expect("one element")),
        0 => Err(ParseError::new(Pos { line: 1, col: 1 }, "empty input")),
        _ => Err(ParseError::new(all[1].pos(), "trailing input after expression")),
    }
}

fn parse_int(s: &str) -> Option<i64> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Variable arities in scope for reading.
#[derive(Clone, Debug, Default)]
pub struct Decls {
    arities: BTreeMap<String, usize>,
    /// Undeclared identifiers are read as scalars instead of rejected.
    pub permissive: bool,
}

impl Decls {
    pub fn new() -> Self {
        Decls::default()
    }

    pub fn permissive() -> Self {
        Decls { arities: BTreeMap::new(), permissive: true }
    }

    pub fn declare(&mut self, v: &Var) {
        self.arities.insert(v.name.clone(), v.arity);
    }

    pub fn with(mut self, v: &Var) -> Self {
        self.declare(v);
        self
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.arities.get(name).copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.arities.iter().map(|(n, a)| Var::new(n.clone(), *a))
    }

    pub fn read_expr(&self, s: &SExp) -> Result<Expr, ParseError> {
        Reader { decls: self, bound: Vec::new() }.expr(s)
    }

    pub fn read_array(&self, s: &SExp) -> Result<ArrayExpr, ParseError> {
        Reader { decls: self, bound: Vec::new() }.array(s)
    }

    pub fn read_formula(&self, s: &SExp) -> Result<Formula, ParseError> {
        Reader { decls: self, bound: Vec::new() }.formula(s)
    }

    pub fn parse_expr(&self, src: &str) -> Result<Expr, ParseError> {
        self.read_expr(&parse_one(src)?)
    }

    pub fn parse_array(&self, src: &str) -> Result<ArrayExpr, ParseError> {
        self.read_array(&parse_one(src)?)
    }

    pub fn parse_formula(&self, src: &str) -> Result<Formula, ParseError> {
        self.read_formula(&parse_one(src)?)
    }
}

struct Reader<'a> {
    decls: &'a Decls,
    bound: Vec<String>,
}

impl Reader<'_> {
    fn lookup(&self, name: &str, pos: Pos) -> Result<Var, ParseError> {
        if self.bound.iter().any(|b| b == name) {
            return Ok(Var::scalar(name));
        }
        match self.decls.arity(name) {
            Some(a) => Ok(Var::new(name, a)),
            None if self.decls.permissive => Ok(Var::scalar(name)),
            None => Err(ParseError::new(pos, format!("undeclared variable '{name}'"))),
        }
    }

    fn is_array_term(&self, s: &SExp) -> bool {
        match s {
            SExp::Atom(name, pos) => {
                parse_int(name).is_none() && self.lookup(name, *pos).is_ok_and(|v| v.arity > 0)
            }
            SExp::List(..) => s.head() == Some("lambda"),
        }
    }

    fn args<'s>(&self, s: &'s SExp, op: &str, count: usize) -> Result<&'s [SExp], ParseError> {
        let items = s.as_list().expect("list");
        if items.len() != count + 1 {
            return Err(ParseError::new(
                s.pos(),
                format!("'{op}' expects {count} argument(s), got {}", items.len() - 1),
            ));
        }
        Ok(&items[1..])
    }

    fn expr(&mut self, s: &SExp) -> Result<Expr, ParseError> {
        match s {
            SExp::Atom(word, pos) => {
                if let Some(c) = parse_int(word) {
                    return Ok(Expr::Const(c));
                }
                let v = self.lookup(word, *pos)?;
                if v.arity != 0 {
                    return Err(ParseError::new(
                        *pos,
                        format!("array '{word}' of arity {} used as a scalar", v.arity),
                    ));
                }
                Ok(Expr::var(&v))
            }
            SExp::List(items, pos) => {
                let Some(op) = s.head() else {
                    return Err(ParseError::new(*pos, "expected an operator"));
                };
                let rest = &items[1..];
                match op {
                    "+" | "*" => {
                        if rest.is_empty() {
                            return Err(ParseError::new(*pos, format!("'{op}' needs arguments")));
                        }
                        let bop = if op == "+" { BinOp::Add } else { BinOp::Mul };
                        let mut acc = self.expr(&rest[0])?;
                        for r in &rest[1..] {
                            acc = Expr::bin(bop, acc, self.expr(r)?);
                        }
                        Ok(acc)
                    }
                    "-" => match rest.len() {
                        0 => Err(ParseError::new(*pos, "'-' needs arguments")),
                        1 => Ok(Expr::Const(0) - self.expr(&rest[0])?),
                        _ => {
                            let mut acc = self.expr(&rest[0])?;
                            for r in &rest[1..] {
                                acc = acc - self.expr(r)?;
                            }
                            Ok(acc)
                        }
                    },
                    "div" => {
                        let a = self.args(s, op, 2)?;
                        Ok(self.expr(&a[0])?.div(self.expr(&a[1])?))
                    }
                    "select" => {
                        if rest.is_empty() {
                            return Err(ParseError::new(*pos, "'select' needs an array"));
                        }
                        let head = self.array(&rest[0])?;
                        let idx = rest[1..].iter().map(|r| self.expr(r)).collect::<Result<Vec<_>, _>>()?;
                        if idx.len() != head.arity() {
                            return Err(ParseError::new(
                                *pos,
                                format!("array of arity {} applied to {} index(es)", head.arity(), idx.len()),
                            ));
                        }
                        Ok(Expr::apply(head, idx))
                    }
                    "ite" => {
                        let a = self.args(s, op, 3)?;
                        Ok(Expr::ite(self.formula(&a[0])?, self.expr(&a[1])?, self.expr(&a[2])?))
                    }
                    _ => Err(ParseError::new(*pos, format!("unknown operator '{op}'"))),
                }
            }
        }
    }

    fn array(&mut self, s: &SExp) -> Result<ArrayExpr, ParseError> {
        match s {
            SExp::Atom(word, pos) => {
                if parse_int(word).is_some() {
                    return Err(ParseError::new(*pos, "expected an array, found a number"));
                }
                Ok(ArrayExpr::Var(self.lookup(word, *pos)?))
            }
            SExp::List(_, pos) => {
                if s.head() != Some("lambda") {
                    return Err(ParseError::new(*pos, "expected an array variable or lambda"));
                }
                let a = self.args(s, "lambda", 2)?;
                let Some(param_items) = a[0].as_list() else {
                    return Err(ParseError::new(a[0].pos(), "expected a parameter list"));
                };
                let mut params = Vec::new();
                for p in param_items {
                    let Some(name) = p.as_atom() else {
                        return Err(ParseError::new(p.pos(), "parameter must be an identifier"));
                    };
                    if params.iter().any(|q: &Var| q.name == name) {
                        return Err(ParseError::new(p.pos(), format!("duplicate parameter '{name}'")));
                    }
                    params.push(Var::scalar(name));
                }
                let depth = self.bound.len();
                self.bound.extend(params.iter().map(|p| p.name.clone()));
                let body = self.expr(&a[1]);
                self.bound.truncate(depth);
                Ok(ArrayExpr::Lambda(params, Box::new(body?)))
            }
        }
    }

    fn formula(&mut self, s: &SExp) -> Result<Formula, ParseError> {
        match s {
            SExp::Atom(word, pos) => match word.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                _ => Err(ParseError::new(*pos, format!("expected a formula, found '{word}'"))),
            },
            SExp::List(items, pos) => {
                let Some(op) = s.head() else {
                    return Err(ParseError::new(*pos, "expected a connective or relation"));
                };
                let rest = &items[1..];
                let rel = match op {
                    "<" => Some(Rel::Lt),
                    "<=" => Some(Rel::Le),
                    ">" => Some(Rel::Gt),
                    ">=" => Some(Rel::Ge),
                    "=" => Some(Rel::Eq),
                    "distinct" => Some(Rel::Ne),
                    _ => None,
                };
                if let Some(rel) = rel {
                    let a = self.args(s, op, 2)?;
                    let arrays = self.is_array_term(&a[0]) || self.is_array_term(&a[1]);
                    if arrays && matches!(rel, Rel::Eq | Rel::Ne) {
                        let (p, q) = (self.array(&a[0])?, self.array(&a[1])?);
                        if p.arity() != q.arity() {
                            return Err(ParseError::new(*pos, "array equality between different arities"));
                        }
                        let eq = Formula::ArrayEq(p, q);
                        return Ok(if rel == Rel::Eq { eq } else { Formula::not(eq) });
                    }
                    return Ok(Formula::Rel(rel, self.expr(&a[0])?, self.expr(&a[1])?));
                }
                match op {
                    "divides" => {
                        let a = self.args(s, op, 2)?;
                        let d = a[0].as_atom().and_then(parse_int).filter(|d| *d != 0).ok_or_else(|| {
                            ParseError::new(a[0].pos(), "divisor must be a nonzero integer literal")
                        })?;
                        Ok(Formula::Divides(d, self.expr(&a[1])?))
                    }
                    "not" => {
                        let a = self.args(s, op, 1)?;
                        Ok(Formula::not(self.formula(&a[0])?))
                    }
                    "and" | "or" => {
                        let fs = rest.iter().map(|r| self.formula(r)).collect::<Result<Vec<_>, _>>()?;
                        Ok(if op == "and" { Formula::And(fs) } else { Formula::Or(fs) })
                    }
                    "=>" => {
                        let a = self.args(s, op, 2)?;
                        Ok(Formula::implies(self.formula(&a[0])?, self.formula(&a[1])?))
                    }
                    "iff" => {
                        let a = self.args(s, op, 2)?;
                        Ok(Formula::iff(self.formula(&a[0])?, self.formula(&a[1])?))
                    }
                    _ => Err(ParseError::new(*pos, format!("unknown connective '{op}'"))),
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Printing

fn spine(e: &Expr, op: BinOp, out: &mut Vec<SExp>) {
    match e {
        Expr::Bin(o, a, b) if *o == op => {
            spine(a, op, out);
            out.push(expr_sexp(b));
        }
        _ => out.push(expr_sexp(e)),
    }
}

pub fn expr_sexp(e: &Expr) -> SExp {
    match e {
        Expr::Const(c) => SExp::atom(c.to_string()),
        Expr::Bin(BinOp::Sub, a, b) if **a == Expr::Const(0) => {
            SExp::list(vec![SExp::atom("-"), expr_sexp(b)])
        }
        Expr::Bin(op @ (BinOp::Add | BinOp::Mul), _, _) => {
            let mut items = vec![SExp::atom(op.symbol())];
            spine(e, *op, &mut items);
            SExp::list(items)
        }
        Expr::Bin(op, a, b) => SExp::list(vec![SExp::atom(op.symbol()), expr_sexp(a), expr_sexp(b)]),
        Expr::App(head, idx) => match head.as_ref() {
            ArrayExpr::Var(v) if idx.is_empty() => SExp::atom(v.name.clone()),
            _ => {
                let mut items = vec![SExp::atom("select"), array_sexp(head)];
                items.extend(idx.iter().map(expr_sexp));
                SExp::list(items)
            }
        },
        Expr::Ite(g, a, b) => {
            SExp::list(vec![SExp::atom("ite"), formula_sexp(g), expr_sexp(a), expr_sexp(b)])
        }
    }
}

pub fn array_sexp(p: &ArrayExpr) -> SExp {
    match p {
        ArrayExpr::Var(v) => SExp::atom(v.name.clone()),
        ArrayExpr::Lambda(params, body) => SExp::list(vec![
            SExp::atom("lambda"),
            SExp::list(params.iter().map(|v| SExp::atom(v.name.clone())).collect()),
            expr_sexp(body),
        ]),
    }
}

pub fn formula_sexp(f: &Formula) -> SExp {
    let node = |op: &str, kids: Vec<SExp>| {
        let mut items = vec![SExp::atom(op)];
        items.extend(kids);
        SExp::list(items)
    };
    match f {
        Formula::True => SExp::atom("true"),
        Formula::False => SExp::atom("false"),
        Formula::Rel(r, a, b) => node(r.symbol(), vec![expr_sexp(a), expr_sexp(b)]),
        Formula::Divides(d, e) => node("divides", vec![SExp::atom(d.to_string()), expr_sexp(e)]),
        Formula::ArrayEq(p, q) => node("=", vec![array_sexp(p), array_sexp(q)]),
        Formula::Not(g) => node("not", vec![formula_sexp(g)]),
        Formula::And(fs) => node("and", fs.iter().map(formula_sexp).collect()),
        Formula::Or(fs) => node("or", fs.iter().map(formula_sexp).collect()),
        Formula::Implies(a, b) => node("=>", vec![formula_sexp(a), formula_sexp(b)]),
        Formula::Iff(a, b) => node("iff", vec![formula_sexp(a), formula_sexp(b)]),
    }
}

pub fn print_expr(e: &Expr) -> String {
    expr_sexp(e).render()
}

pub fn print_array(p: &ArrayExpr) -> String {
    array_sexp(p).render()
}

pub fn print_formula(f: &Formula) -> String {
    formula_sexp(f).render()
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

impl fmt::Display for ArrayExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_array(self))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}
