//! Problem files: declarations, an optional precondition, one loop and an
//! optional error condition, all as s-expressions.
//!
//! ```text
//! (vars (i 0) (k 0) (a 1))
//! (init (= i 0) (= k 10000))
//! (loop (guard (< i k))
//!       (update ((select a (+ i 1)) (select a i))
//!               (i (+ i 1))))
//! (post (>= i k) (nondet j 0 k) (= (select a j) (select a 0)))
//! ```
//!
//! `(nondet j lo hi)` declares `j` and constrains it to `[lo, hi]`. In
//! `post`, the loop's variables denote their values after the loop.

use std::fmt;

use crate::expr::{Formula, Lvalue, Var};
use crate::loops::Loop;
use crate::recurrence::iteration_var;
use crate::sexpr::{expr_sexp, formula_sexp, parse_sexps, Decls, ParseError, Pos, SExp};

#[derive(Clone, Debug)]
pub struct Problem {
    pub vars: Vec<Var>,
    pub pre: Formula,
    pub the_loop: Loop,
    pub post: Formula,
    pub has_post: bool,
}

fn err(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(pos, msg)
}

fn items<'a>(s: &'a SExp, what: &str) -> Result<&'a [SExp], ParseError> {
    s.as_list().ok_or_else(|| err(s.pos(), format!("expected a list for {what}")))
}

fn declare(decls: &mut Decls, vars: &mut Vec<Var>, name: &str, arity: usize, pos: Pos) -> Result<(), ParseError> {
    if name == iteration_var().name {
        return Err(err(pos, format!("'{name}' is reserved for the iteration counter")));
    }
    if name.contains('\'') || name.contains('!') {
        return Err(err(pos, format!("'{name}' is not a valid variable name")));
    }
    if decls.arity(name).is_some() {
        return Err(err(pos, format!("'{name}' declared twice")));
    }
    let v = Var::new(name, arity);
    decls.declare(&v);
    vars.push(v);
    Ok(())
}

fn is_literal(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Rel(..) | Formula::Divides(..) | Formula::ArrayEq(..) => true,
        Formula::Not(g) => matches!(**g, Formula::Rel(..) | Formula::Divides(..) | Formula::ArrayEq(..)),
        Formula::And(fs) => fs.iter().all(is_literal),
        _ => false,
    }
}

/// Reads a block of conjuncts, expanding `nondet`.
fn conjunction(body: &[SExp], decls: &mut Decls, vars: &mut Vec<Var>, what: &str) -> Result<Formula, ParseError> {
    let mut out = Vec::new();
    for s in body {
        if s.head() == Some("nondet") {
            let a = items(s, "nondet")?;
            if a.len() != 4 {
                return Err(err(s.pos(), "'nondet' expects a name and two bounds"));
            }
            let name = a[1].as_atom().ok_or_else(|| err(a[1].pos(), "expected a variable name"))?;
            declare(decls, vars, name, 0, a[1].pos())?;
            let j = crate::expr::Expr::var(&Var::scalar(name));
            let lo = decls.read_expr(&a[2])?;
            let hi = decls.read_expr(&a[3])?;
            out.push(lo.le(j.clone()));
            out.push(j.le(hi));
            continue;
        }
        let f = decls.read_formula(s)?;
        if !is_literal(&f) {
            return Err(err(s.pos(), format!("{what} must be a conjunction of literals")));
        }
        out.push(f);
    }
    Ok(Formula::and(out))
}

pub fn parse_problem(src: &str) -> Result<Problem, ParseError> {
    let top = parse_sexps(src)?;
    let mut decls = Decls::new();
    let mut vars = Vec::new();
    let mut pre = None;
    let mut the_loop = None;
    let mut post = None;
    for block in &top {
        let body = items(block, "a block")?;
        let Some(head) = block.head() else {
            return Err(err(block.pos(), "expected a block name"));
        };
        match head {
            "vars" => {
                for d in &body[1..] {
                    let pair = items(d, "a declaration")?;
                    let (Some(name), Some(arity)) =
                        (pair.first().and_then(SExp::as_atom), pair.get(1).and_then(SExp::as_atom))
                    else {
                        return Err(err(d.pos(), "expected (name arity)"));
                    };
                    let arity: usize =
                        arity.parse().map_err(|_| err(pair[1].pos(), format!("bad arity '{arity}'")))?;
                    if pair.len() != 2 {
                        return Err(err(d.pos(), "expected (name arity)"));
                    }
                    declare(&mut decls, &mut vars, name, arity, pair[0].pos())?;
                }
            }
            "init" | "pre" => {
                if pre.is_some() {
                    return Err(err(block.pos(), "duplicate precondition block"));
                }
                pre = Some(conjunction(&body[1..], &mut decls, &mut vars, "the precondition")?);
            }
            "loop" => {
                if the_loop.is_some() {
                    return Err(err(block.pos(), "only one loop is supported"));
                }
                the_loop = Some(read_loop(&body[1..], block.pos(), &decls)?);
            }
            "post" => {
                if post.is_some() {
                    return Err(err(block.pos(), "duplicate post block"));
                }
                post = Some(conjunction(&body[1..], &mut decls, &mut vars, "the post condition")?);
            }
            other => return Err(err(block.pos(), format!("unknown block '{other}'"))),
        }
    }
    let the_loop = the_loop.ok_or_else(|| err(Pos::default(), "missing (loop ...) block"))?;
    Ok(Problem {
        vars,
        pre: pre.unwrap_or(Formula::True),
        the_loop,
        has_post: post.is_some(),
        post: post.unwrap_or(Formula::False),
    })
}

fn read_loop(body: &[SExp], pos: Pos, decls: &Decls) -> Result<Loop, ParseError> {
    let mut guard = Vec::new();
    let mut updates = Vec::new();
    for part in body {
        let xs = items(part, "a loop part")?;
        match part.head() {
            Some("guard") => {
                for g in &xs[1..] {
                    let f = decls.read_formula(g)?;
                    if !is_literal(&f) {
                        return Err(err(g.pos(), "the guard must be a conjunction of literals"));
                    }
                    guard.extend(f.conjuncts());
                }
            }
            Some("update") => {
                for u in &xs[1..] {
                    let pair = items(u, "an update")?;
                    if pair.len() != 2 {
                        return Err(err(u.pos(), "expected (lvalue rhs)"));
                    }
                    let lhs = decls.read_expr(&pair[0])?;
                    let lv = Lvalue::from_expr(&lhs)
                        .filter(|l| l.index.iter().all(crate::expr::Expr::is_rvalue))
                        .ok_or_else(|| err(pair[0].pos(), format!("{lhs} is not an lvalue")))?;
                    let rhs = decls.read_expr(&pair[1])?;
                    if !rhs.is_rvalue() {
                        return Err(err(pair[1].pos(), format!("{rhs} is not an rvalue")));
                    }
                    updates.push((lv, rhs));
                }
            }
            _ => return Err(err(part.pos(), "expected (guard ...) or (update ...)")),
        }
    }
    if updates.is_empty() && guard.is_empty() {
        return Err(err(pos, "empty loop"));
    }
    Ok(Loop::new(guard, updates))
}

/// Prints a loop in the syntax accepted by [`parse_problem`].
pub struct LoopSyntax<'a>(pub &'a Loop);

impl fmt::Display for LoopSyntax<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.0;
        let guard: Vec<SExp> = l.guard.iter().map(formula_sexp).collect();
        let updates: Vec<SExp> =
            l.updates().map(|(lv, r)| SExp::list(vec![expr_sexp(&lv.to_expr()), expr_sexp(r)])).collect();
        let mut g = vec![SExp::atom("guard")];
        g.extend(guard);
        let mut u = vec![SExp::atom("update")];
        u.extend(updates);
        let whole = SExp::list(vec![SExp::atom("loop"), SExp::list(g), SExp::list(u)]);
        write!(f, "{}", whole.pretty(80))
    }
}

/// The `vars` block for a loop's variables.
pub fn vars_block(vars: &[Var]) -> String {
    let ds: Vec<String> = vars.iter().map(|v| format!("({} {})", v.name, v.arity)).collect();
    format!("(vars {})", ds.join(" "))
}
