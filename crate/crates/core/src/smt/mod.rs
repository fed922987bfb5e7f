//! Ground SMT queries over integers and integer-indexed arrays.
//!
//! Formulas are printed as SMT-LIB2 text (arrays of arity `k` become `k`
//! nested one-dimensional arrays) and handed to a [`Backend`]. Models come
//! back as [`Model`]s whose arrays are default-plus-overrides tables when
//! the solver's answer has that shape, and closed λ-terms otherwise.

mod encode;
mod process;
mod response;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use encode::{declare, encode_expr, encode_formula, quote, script, EncodeError};
pub use process::{BackendConfig, SolverProcess, BACKEND_ENV};
pub use response::{parse_model_value, Sx};

use crate::eval::{ArrayFn, ArrayValue, Background, State, Value};
use crate::expr::{ArrayExpr, Expr, Formula, Var};
use crate::sexpr::print_array;
use crate::subst::Subst;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("no SMT backend available: {0}")]
    Unavailable(String),
    #[error("backend timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("cannot encode query: {0}")]
    Encode(#[from] EncodeError),
}

/// A conjunction of ground assertions; `model_vars` lists the variables
/// whose values are requested when the answer is `sat`.
#[derive(Clone, Debug, Default)]
pub struct Query {
    pub assertions: Vec<Formula>,
    pub model_vars: Vec<Var>,
}

impl Query {
    pub fn new(assertions: Vec<Formula>) -> Self {
        Query { assertions, model_vars: Vec::new() }
    }

    pub fn with_model(mut self, vars: impl IntoIterator<Item = Var>) -> Self {
        self.model_vars = vars.into_iter().collect();
        self
    }
}

#[derive(Clone, Debug)]
pub enum Answer {
    Sat(Model),
    Unsat,
    Unknown(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelValue {
    Int(i64),
    Table(ArrayValue),
    /// A closed λ-term for array values that are not a finite table.
    Function(ArrayExpr),
}

impl ModelValue {
    /// The value as an array expression: a table becomes `λ j. ite(j = c1, v1, ...)`.
    pub fn to_array_expr(&self) -> ArrayExpr {
        match self {
            ModelValue::Int(v) => ArrayExpr::Lambda(Vec::new(), Box::new(Expr::int(*v))),
            ModelValue::Function(p) => p.clone(),
            ModelValue::Table(t) => {
                let params: Vec<Var> = (0..t.arity).map(|k| Var::scalar(format!("j{k}"))).collect();
                let default = match t.background {
                    Background::Const(c) => Expr::int(c),
                    Background::Identity => params
                        .iter()
                        .map(Expr::var)
                        .reduce(|a, b| a + b)
                        .unwrap_or(Expr::int(0)),
                    Background::Hash { .. } => panic!("hashed background has no term representation"),
                };
                let body = t.cells.iter().rev().fold(default, |acc, (idx, v)| {
                    let hit = Formula::and(
                        params.iter().zip(idx).map(|(p, c)| Expr::var(p).eq(Expr::int(*c))),
                    );
                    Expr::ite(hit, Expr::int(*v), acc)
                });
                ArrayExpr::Lambda(params, Box::new(body))
            }
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            ModelValue::Int(v) => Value::Int(*v),
            ModelValue::Table(t) => Value::table(t.clone()),
            ModelValue::Function(ArrayExpr::Lambda(params, body)) => Value::Array(ArrayFn::Closure {
                params: params.clone(),
                body: Arc::new((**body).clone()),
                env: Arc::new(State::new()),
            }),
            ModelValue::Function(ArrayExpr::Var(v)) => panic!("model value refers to variable {v}"),
        }
    }
}

impl fmt::Display for ModelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelValue::Int(v) => write!(f, "{v}"),
            ModelValue::Table(t) => write!(f, "{t}"),
            ModelValue::Function(p) => f.write_str(&print_array(p)),
        }
    }
}

/// An assignment of values to variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub values: BTreeMap<Var, ModelValue>,
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn insert(&mut self, v: Var, value: ModelValue) {
        self.values.insert(v, value);
    }

    pub fn get(&self, v: &Var) -> Option<&ModelValue> {
        self.values.get(v)
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        match self.values.get(&Var::scalar(name)) {
            Some(ModelValue::Int(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn to_state(&self) -> State {
        let mut s = State::new();
        for (v, value) in &self.values {
            s.set(v.clone(), value.to_value());
        }
        s
    }

    /// The model as a substitution of closed terms for its variables.
    pub fn to_subst(&self) -> Subst {
        let mut s = Subst::new();
        for (v, value) in &self.values {
            match value {
                ModelValue::Int(c) => s.insert_scalar(v.clone(), Expr::int(*c)),
                other => s.insert(v.clone(), other.to_array_expr()),
            }
        }
        s
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (v, value)) in self.values.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} = {value}")?;
        }
        Ok(())
    }
}

/// A ground solver. One instance serves one thread.
pub trait Backend: Send {
    fn check(&mut self, q: &Query) -> Result<Answer, BackendError>;

    fn name(&self) -> String;
}

/// A backend that knows nothing; every query is `unknown`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoBackend;

impl Backend for NoBackend {
    fn check(&mut self, _q: &Query) -> Result<Answer, BackendError> {
        Ok(Answer::Unknown("no backend configured".into()))
    }

    fn name(&self) -> String {
        "none".into()
    }
}
