//! Reachability checking for problem files: accelerate the loop, encode
//! "pre, then some iterations, then the error condition" and solve.

use std::fmt;

use crate::accelerate::{accelerate_analysis, encode_no_iteration, encode_reachability, AcceleratedTransition};
use crate::closed_form::{Analysis, Failure, Phase};
use crate::expr::Formula;
use crate::lambda_solver::{solve_traced, SolveResult, SolveTrace};
use crate::problem::Problem;
use crate::prover::Prover;
use crate::recurrence::iteration_var;
use crate::smt::{Model, ModelValue};

#[derive(Clone, Debug)]
pub enum Verdict {
    /// An error state is reachable; the model fixes the initial state,
    /// the nondeterministic choices and the iteration count `n`.
    Unsafe(Model),
    /// No error state after zero iterations or after one accelerated step.
    SafeBounded,
    Unknown(String),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Unsafe(_) => "unsafe",
            Verdict::SafeBounded => "safe-bounded",
            Verdict::Unknown(_) => "unknown",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Unsafe(_) => 0,
            Verdict::SafeBounded => 1,
            Verdict::Unknown(_) => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Unsafe(m) => write!(f, "unsafe\n{m}"),
            Verdict::SafeBounded => f.write_str("safe-bounded"),
            Verdict::Unknown(why) => write!(f, "unknown: {why}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub transition: Option<AcceleratedTransition>,
    /// The accelerated reachability query.
    pub query: Vec<Formula>,
    pub trace: Option<SolveTrace>,
}

fn unknown(why: String) -> CheckReport {
    CheckReport { verdict: Verdict::Unknown(why), transition: None, query: Vec::new(), trace: None }
}

pub fn check_problem(p: &Problem, prover: &mut Prover) -> CheckReport {
    let l = &p.the_loop;
    let zero = match encode_no_iteration(l, &p.pre, &p.post) {
        Ok(q) => q,
        Err(e) => return unknown(e.to_string()),
    };
    let zero_result = solve_traced(&zero, prover).0;
    if let SolveResult::Model(mut m) = zero_result {
        m.insert(iteration_var(), ModelValue::Int(0));
        return CheckReport { verdict: Verdict::Unsafe(m), transition: None, query: zero, trace: None };
    }
    let analysis = Analysis::run(l, prover);
    let t = match accelerate_analysis(&analysis, prover) {
        Ok(t) => t,
        Err(Failure { phase, reason }) => return unknown(format!("acceleration failed in phase {phase}: {reason}")),
    };
    let query = match encode_reachability(l, &p.pre, &t, &p.post) {
        Ok(q) => q,
        Err(e) => return unknown(Failure::new(Phase::Guard, e.to_string()).reason),
    };
    let (result, trace) = solve_traced(&query, prover);
    let verdict = match (result, zero_result) {
        (SolveResult::Model(m), _) => Verdict::Unsafe(m),
        (SolveResult::Unsat, SolveResult::Unsat) => Verdict::SafeBounded,
        (SolveResult::Unsat, SolveResult::Unknown(why)) => Verdict::Unknown(format!("zero iterations: {why}")),
        (SolveResult::Unknown(why), _) => Verdict::Unknown(why),
        (SolveResult::Unsat, SolveResult::Model(_)) => unreachable!("handled above"),
    };
    CheckReport { verdict, transition: Some(t), query, trace: Some(trace) }
}
