//! Accelerated transition relations and reachability encodings.

use std::collections::BTreeMap;
use std::fmt;

use crate::closed_form::{Analysis, Failure, Phase};
use crate::expr::{ArrayExpr, Expr, Formula, Var};
use crate::loops::Loop;
use crate::prover::{Prover, Validity};
use crate::recurrence::iteration_var;
use crate::simplify::{negate, normalize, simplify_array};
use crate::subst::{Subst, Substitute};

/// `T(x, x', n)` for one loop.
#[derive(Clone, Debug)]
pub struct AcceleratedTransition {
    /// `n > 0`, the guard conjuncts and `x' = x^(n)` for every loop variable.
    pub conjuncts: Vec<Formula>,
    pub guard: Vec<Formula>,
    pub closed_forms: BTreeMap<Var, ArrayExpr>,
}

impl AcceleratedTransition {
    pub fn formula(&self) -> Formula {
        Formula::and(self.conjuncts.iter().cloned())
    }
}

impl fmt::Display for AcceleratedTransition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.conjuncts.iter().enumerate() {
            if k > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn closed_form_subst(a: &Analysis, at: Expr) -> Result<Subst, Failure> {
    let shift = Subst::new().with_scalar(iteration_var(), at);
    let mut s = Subst::new();
    for x in a.the_loop.written() {
        let p = a.var_closed_form(&x)?.subst(&shift);
        if x.is_scalar() {
            let ArrayExpr::Lambda(_, body) = p else { unreachable!("scalar forms are nullary λs") };
            s.insert_scalar(x, *body);
        } else {
            s.insert(x, p);
        }
    }
    Ok(s)
}

fn split_atoms(guard: &[Formula]) -> Vec<Formula> {
    guard.iter().flat_map(Formula::conjuncts).filter(|g| *g != Formula::True).collect()
}

/// A quantifier-free formula over `x` and `n` equivalent to "the guard
/// holds before each of the first `n` iterations".
pub fn guard_characterize(a: &Analysis, prover: &mut Prover) -> Result<Vec<Formula>, Failure> {
    let before_last = closed_form_subst(a, Expr::var(&iteration_var()) - 1)?;
    let mut out = Vec::new();
    for psi in split_atoms(&a.the_loop.guard) {
        let next = normalize(&psi.subst(&a.up));
        let backwards = prover.valid(&Formula::implies(next.clone(), psi.clone()));
        if backwards.is_valid() {
            out.push(normalize(&psi.subst(&before_last)));
            continue;
        }
        let forwards = prover.valid(&Formula::implies(psi.clone(), next));
        match (forwards, backwards) {
            (Validity::Valid, _) => out.push(psi),
            (Validity::Unknown(why), _) | (_, Validity::Unknown(why)) => {
                return Err(Failure::new(Phase::Guard, format!("cannot decide monotonicity of {psi}: {why}")))
            }
            _ => return Err(Failure::new(Phase::Guard, format!("guard atom {psi} is not monotonic"))),
        }
    }
    Ok(out.into_iter().filter(|g| *g != Formula::True).collect())
}

/// `n > 0 ∧ guard ∧ ⋀ x' = x^(n)`.
pub fn accelerate_analysis(a: &Analysis, prover: &mut Prover) -> Result<AcceleratedTransition, Failure> {
    a.table()?;
    let n = Expr::var(&iteration_var());
    let guard = guard_characterize(a, prover)?;
    let mut conjuncts = vec![n.gt(Expr::int(0))];
    conjuncts.extend(guard.iter().cloned());
    let mut closed_forms = BTreeMap::new();
    for x in a.the_loop.vars() {
        let form = simplify_array(&a.var_closed_form(&x)?);
        let primed = x.primed();
        conjuncts.push(match &form {
            ArrayExpr::Lambda(params, body) if params.is_empty() => Expr::var(&primed).eq((**body).clone()),
            ArrayExpr::Var(v) if x.is_scalar() => Expr::var(&primed).eq(Expr::var(v)),
            _ => Formula::ArrayEq(ArrayExpr::Var(primed), form.clone()),
        });
        closed_forms.insert(x, form);
    }
    Ok(AcceleratedTransition { conjuncts, guard, closed_forms })
}

pub fn accelerate(l: &Loop, prover: &mut Prover) -> Result<AcceleratedTransition, Failure> {
    accelerate_analysis(&Analysis::run(l, prover), prover)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0} is not a literal; only conjunctions of literals are supported")]
pub struct NotConjunctive(pub String);

/// Renames the loop's variables to their primed versions.
pub fn prime_loop_vars(l: &Loop, f: &Formula) -> Formula {
    let mut s = Subst::new();
    for x in l.vars() {
        s.insert(x.clone(), ArrayExpr::Var(x.primed()));
    }
    f.subst(&s)
}

fn is_literal(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Rel(..) | Formula::Divides(..) | Formula::ArrayEq(..) => true,
        Formula::Not(g) => matches!(**g, Formula::Rel(..) | Formula::Divides(..) | Formula::ArrayEq(..)),
        _ => false,
    }
}

/// Flattens a conjunction, rejecting anything that is not a literal.
pub fn literals(f: &Formula) -> Result<Vec<Formula>, NotConjunctive> {
    f.conjuncts()
        .into_iter()
        .map(|g| if is_literal(&g) { Ok(g) } else { Err(NotConjunctive(g.to_string())) })
        .collect()
}

/// `pre ∧ T ∧ post[x/x']` as a list of literals.
pub fn encode_reachability(
    l: &Loop,
    pre: &Formula,
    t: &AcceleratedTransition,
    post: &Formula,
) -> Result<Vec<Formula>, NotConjunctive> {
    let mut out = literals(pre)?;
    out.extend(t.conjuncts.iter().cloned());
    out.extend(literals(&prime_loop_vars(l, post))?);
    Ok(out)
}

/// `pre ∧ post[x/x'] ∧ x' = x`: the loop runs zero times.
pub fn encode_no_iteration(l: &Loop, pre: &Formula, post: &Formula) -> Result<Vec<Formula>, NotConjunctive> {
    let mut out = literals(pre)?;
    out.push(negate(&l.guard_formula()));
    for x in l.vars() {
        out.push(if x.is_scalar() {
            Expr::var(&x.primed()).eq(Expr::var(&x))
        } else {
            Formula::ArrayEq(ArrayExpr::Var(x.primed()), ArrayExpr::Var(x.clone()))
        });
    }
    out.extend(literals(&prime_loop_vars(l, post))?);
    Ok(out)
}
