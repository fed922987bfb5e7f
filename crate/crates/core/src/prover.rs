//! Validity checking: simplification, linear refutation, random
//! falsification, and finally the SMT backend.

use std::collections::BTreeSet;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{ArrayValue, Background, Evaluator, State, Value};
use crate::expr::{Formula, FreeVars, Var};
use crate::lia;
use crate::simplify::{negate, normalize};
use crate::smt::{Answer, Backend, BackendError, Model, NoBackend, Query, SolverProcess};

#[derive(Clone, Debug)]
pub enum Validity {
    Valid,
    /// Not valid; a falsifying state when one is known.
    Invalid(Option<State>),
    Unknown(String),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// Decides validity with cheap procedures first. Without a backend,
/// queries that neither simplification nor linear reasoning settle come
/// back `Unknown` (or `Invalid` when random testing finds a witness).
pub struct Prover {
    backend: Box<dyn Backend>,
    has_backend: bool,
    rng: ChaCha8Rng,
    pub trials: usize,
}

impl Default for Prover {
    fn default() -> Self {
        Prover::builtin()
    }
}

impl Prover {
    /// No external solver.
    pub fn builtin() -> Self {
        Prover { backend: Box::new(NoBackend), has_backend: false, rng: ChaCha8Rng::seed_from_u64(7), trials: 48 }
    }

    pub fn with_backend(backend: Box<dyn Backend>) -> Self {
        Prover { has_backend: true, backend, ..Prover::builtin() }
    }

    /// Uses the solver found by [`SolverProcess::locate`], or none.
    pub fn auto(timeout: Duration) -> Self {
        match SolverProcess::locate(None, timeout, None) {
            Ok(p) => Prover::with_backend(Box::new(p)),
            Err(_) => Prover::builtin(),
        }
    }

    pub fn has_backend(&self) -> bool {
        self.has_backend
    }

    pub fn backend_name(&self) -> String {
        self.backend.name()
    }

    /// Direct access to the ground solver.
    pub fn check(&mut self, q: &Query) -> Result<Answer, BackendError> {
        self.backend.check(q)
    }

    /// Looks for a state falsifying `f` among small random values.
    pub fn falsify(&mut self, f: &Formula) -> Option<State> {
        let vars: BTreeSet<Var> = f.free_vars();
        let ev = Evaluator::new();
        for t in 0..self.trials {
            let range = if t < self.trials / 2 { 3 } else { 12 };
            let mut s = State::new();
            for v in &vars {
                if v.is_scalar() {
                    s.set(v.clone(), Value::Int(self.rng.gen_range(-range..=range)));
                } else {
                    let bg = Background::Hash { seed: self.rng.gen(), range };
                    s.set(v.clone(), Value::table(ArrayValue::new(v.arity, bg)));
                }
            }
            if let Ok(false) = ev.formula(f, &s) {
                return Some(s);
            }
        }
        None
    }

    pub fn valid(&mut self, f: &Formula) -> Validity {
        let g = normalize(f);
        match g {
            Formula::True => return Validity::Valid,
            Formula::False => return Validity::Invalid(None),
            _ => {}
        }
        if lia::prove(&g) {
            return Validity::Valid;
        }
        if let Some(s) = self.falsify(&g) {
            return Validity::Invalid(Some(s));
        }
        if !self.has_backend {
            return Validity::Unknown("not settled without an SMT backend".into());
        }
        let vars: Vec<Var> = g.free_vars().into_iter().collect();
        match self.backend.check(&Query::new(vec![negate(&g)]).with_model(vars)) {
            Ok(Answer::Unsat) => Validity::Valid,
            Ok(Answer::Sat(m)) => Validity::Invalid(Some(m.to_state())),
            Ok(Answer::Unknown(why)) => Validity::Unknown(why),
            Err(e) => Validity::Unknown(e.to_string()),
        }
    }

    pub fn is_valid(&mut self, f: &Formula) -> bool {
        self.valid(f).is_valid()
    }

    /// Satisfiability of a conjunction; `Sat` carries a model of the
    /// requested variables.
    pub fn sat(&mut self, fs: &[Formula], model_vars: &[Var]) -> Answer {
        let g = normalize(&Formula::and(fs.iter().cloned()));
        if g == Formula::False || lia::refute(&g) {
            return Answer::Unsat;
        }
        if g == Formula::True && model_vars.is_empty() {
            return Answer::Sat(Model::new());
        }
        match self.backend.check(&Query::new(vec![g]).with_model(model_vars.iter().cloned())) {
            Ok(a) => a,
            Err(e) => Answer::Unknown(e.to_string()),
        }
    }
}
