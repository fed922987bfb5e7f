//! Acceleration of single-path loops over integer arrays.
//!
//! The crate computes closed forms `x^(n)` for every variable of a loop,
//! including quantifier-free λ-closed forms for arrays, assembles the
//! accelerated transition relation, and decides reachability queries over
//! it with a lemmas-on-demand solver for λ-terms layered over an external
//! SMT solver.

pub mod accelerate;
pub mod array_form;
pub mod check;
pub mod classify;
pub mod closed_form;
pub mod corpus;
pub mod eval;
pub mod expr;
pub mod lambda_solver;
pub mod lia;
pub mod loops;
pub mod oracle;
pub mod poly;
pub mod problem;
pub mod prover;
pub mod recurrence;
pub mod sexpr;
pub mod simplify;
pub mod smt;
pub mod subst;

pub use expr::{ArrayExpr, BinOp, Expr, Formula, FreeVars, LvalSet, Lvalue, Rel, Var};
