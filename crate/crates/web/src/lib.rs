//! Browser bindings. Every entry point takes a loop in problem-file syntax
//! and returns a JSON document; errors come back as `{"error": ...}`.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use arrayaccel::accelerate::accelerate_analysis;
use arrayaccel::array_form::{cell_params, last_write_cases};
use arrayaccel::closed_form::Analysis;
use arrayaccel::eval::{ArrayValue, Background, Evaluator, State};
use arrayaccel::loops::{iterate, Loop};
use arrayaccel::oracle::all_forms;
use arrayaccel::problem::parse_problem;
use arrayaccel::prover::Prover;
use arrayaccel::recurrence::iteration_var;
use arrayaccel::sexpr::{print_array, print_expr, print_formula};
use arrayaccel::subst::{Subst, Substitute};
use arrayaccel::{Expr, Var};

/// Initial values: scalars by name, one-dimensional arrays as cells
/// starting at `origin`; everything else reads `λc. c`.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct Input {
    pub scalars: BTreeMap<String, i64>,
    pub arrays: BTreeMap<String, Vec<i64>>,
    pub origin: i64,
    pub n: usize,
    pub lo: i64,
    pub hi: i64,
}

fn load(src: &str) -> Result<Loop, String> {
    parse_problem(src).map(|p| p.the_loop).map_err(|e| e.to_string())
}

fn initial_state(l: &Loop, input: &Input) -> State {
    let mut s = State::new();
    for v in l.vars() {
        if v.is_scalar() {
            s.set_int(&v.name, input.scalars.get(&v.name).copied().unwrap_or(0));
        } else {
            let mut a = ArrayValue::new(v.arity, Background::Identity);
            if v.arity == 1 {
                for (k, x) in input.arrays.get(&v.name).into_iter().flatten().enumerate() {
                    a.set(vec![input.origin + k as i64], *x);
                }
            }
            s.set_array(&v, a);
        }
    }
    s
}

fn window(input: &Input) -> Result<std::ops::RangeInclusive<i64>, String> {
    if input.hi < input.lo || input.hi - input.lo > 200 {
        return Err("the cell window must hold between 1 and 201 cells".into());
    }
    Ok(input.lo..=input.hi)
}

fn finish(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Classification, closed forms and the accelerated transition.
pub fn analyze_json(src: &str) -> String {
    finish(load(src).map(|l| {
        let mut prover = Prover::builtin();
        let a = Analysis::run(&l, &mut prover);
        let c = &a.classification;
        let lvalues: Vec<Value> = c
            .l_set
            .iter()
            .map(|cl| json!({"lvalue": cl.lvalue.to_string(), "class": cl.class.to_string(), "justification": cl.justification}))
            .collect();
        let mut out = json!({"lvalues": lvalues, "a_solvable": c.solvable, "reason": c.reason});
        match a.table() {
            Ok(t) => {
                out["table"] = json!(t.iter().map(|(l, e)| [l.to_string(), print_expr(e)]).collect::<Vec<_>>());
            }
            Err(f) => out["failure"] = json!(f.to_string()),
        }
        if let Ok(forms) = all_forms(&a) {
            let forms: BTreeMap<String, String> = forms.iter().map(|(v, f)| (v.name.clone(), print_array(f))).collect();
            out["closed_forms"] = json!(forms);
        }
        match accelerate_analysis(&a, &mut prover) {
            Ok(t) => out["transition"] = json!(t.conjuncts.iter().map(print_formula).collect::<Vec<_>>()),
            Err(f) => out["transition_failure"] = json!(f.to_string()),
        }
        out
    }))
}

/// Runs the body `n` times and evaluates the closed forms at `n`, side
/// by side, for the scalars and the cells `lo..=hi` of each 1-dim array.
pub fn simulate_json(src: &str, input: &str) -> String {
    finish((|| {
        let l = load(src)?;
        let input: Input = serde_json::from_str(input).map_err(|e| e.to_string())?;
        let cells = window(&input)?;
        let a = Analysis::run(&l, &mut Prover::builtin());
        let forms = all_forms(&a)?;
        let s0 = initial_state(&l, &input);
        let (after, _) = iterate(&l, &s0, input.n).map_err(|e| e.to_string())?;
        let at_n = s0.clone().with_int(&iteration_var().name, input.n as i64);
        let ev = Evaluator::new();
        let mut rows = Vec::new();
        for (x, form) in &forms {
            if x.is_scalar() {
                let got = ev.expr(&Expr::apply(form.clone(), vec![]), &at_n).map_err(|e| e.to_string())?;
                rows.push(json!({"name": x.name, "before": s0.int(&x.name), "interpreter": after.int(&x.name), "closed_form": got}));
            } else if x.arity == 1 {
                let mut r = Vec::new();
                for c in cells.clone() {
                    let before = s0.array(x).expect("bound").apply(&[c]).map_err(|e| e.to_string())?;
                    let want = after.array(x).expect("bound").apply(&[c]).map_err(|e| e.to_string())?;
                    let got = ev.expr(&Expr::apply(form.clone(), vec![Expr::int(c)]), &at_n).map_err(|e| e.to_string())?;
                    r.push(json!({"cell": c, "before": before, "interpreter": want, "closed_form": got}));
                }
                rows.push(json!({"name": x.name, "cells": r}));
            }
        }
        let agree = rows.iter().all(|r| match r.get("cells") {
            Some(cs) => cs.as_array().expect("list").iter().all(|c| c["interpreter"] == c["closed_form"]),
            None => r["interpreter"] == r["closed_form"],
        });
        Ok(json!({"n": input.n, "rows": rows, "agree": agree}))
    })())
}

/// For every cell of the 1-dim array `var` in `lo..=hi`: which
/// last-write case holds after `n` iterations, and the interpreter's last
/// write to that cell.
pub fn last_writes_json(src: &str, var: &str, input: &str) -> String {
    finish((|| {
        let l = load(src)?;
        let input: Input = serde_json::from_str(input).map_err(|e| e.to_string())?;
        let cells = window(&input)?;
        let x = Var::array(var, 1);
        if !l.written().contains(&x) {
            return Err(format!("'{var}' is not a 1-dim array written by the loop"));
        }
        let a = Analysis::run(&l, &mut Prover::builtin());
        let table = a.table().map_err(|f| f.to_string())?;
        let params = cell_params(&l, &x);
        let c_exprs: Vec<Expr> = params.iter().map(Expr::var).collect();
        let cases = last_write_cases(&l, &a.up, &x, &c_exprs, table).map_err(|e| e.to_string())?;
        let s0 = initial_state(&l, &input);
        let (_, log) = iterate(&l, &s0, input.n).map_err(|e| e.to_string())?;
        let ev = Evaluator::new();
        let mut rows = Vec::new();
        for c in cells {
            let at = Subst::new().with_scalar(params[0].clone(), Expr::int(c));
            let s = s0.clone().with_int(&iteration_var().name, input.n as i64);
            let mut holds = Vec::new();
            for case in &cases {
                let g = ev.formula(&case.guard.subst(&at), &s).map_err(|e| e.to_string())?;
                let e = if g { Some(ev.expr(&case.instantiation.subst(&at), &s).map_err(|e| e.to_string())?) } else { None };
                holds.push(json!({"update": case.update, "holds": g, "iteration": e}));
            }
            let last = log.iter().rev().find(|w| w.var == x && w.cell == [c]);
            rows.push(json!({
                "cell": c,
                "cases": holds,
                "written": last.map(|w| json!({"iteration": w.iteration, "update": w.update, "value": w.value})),
            }));
        }
        let guards: Vec<Value> = cases
            .iter()
            .map(|c| json!({"update": c.update, "lvalue": c.lvalue.to_string(), "guard": print_formula(&c.guard), "iteration": print_expr(&c.instantiation), "value": print_expr(&c.value)}))
            .collect();
        Ok(json!({"param": params[0].name, "cases": guards, "cells": rows}))
    })())
}

#[wasm_bindgen]
pub fn analyze(src: &str) -> String {
    analyze_json(src)
}

#[wasm_bindgen]
pub fn simulate(src: &str, input: &str) -> String {
    simulate_json(src, input)
}

#[wasm_bindgen]
pub fn last_writes(src: &str, var: &str, input: &str) -> String {
    last_writes_json(src, var, input)
}
