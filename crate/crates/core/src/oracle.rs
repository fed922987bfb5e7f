//! A random generator of a-solvable loops and a differential harness
//! comparing closed forms against the interpreter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classify::check_a_solvable;

use crate::closed_form::Analysis;
use crate::eval::{ArrayValue, Background, Evaluator, State, Value};
use crate::expr::{ArrayExpr, Expr, Lvalue, Var};
use crate::loops::{iterate, Loop};
use crate::prover::Prover;
use crate::recurrence::iteration_var;

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub counters: usize,
    pub accumulators: usize,
    pub arrays: usize,
    /// Largest array arity to generate (1 or 2).
    pub max_arity: usize,
    pub max_writes: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { counters: 2, accumulators: 1, arrays: 1, max_arity: 2, max_writes: 3 }
    }
}

impl GenConfig {
    pub fn scalars_only() -> Self {
        GenConfig { arrays: 0, ..GenConfig::default() }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    counters: Vec<(Var, i64)>,
    accumulators: Vec<Var>,
    k: Var,
    b: Var,
}

impl Gen {
    fn small(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    /// A polynomial over counters, constants and the unwritten `k`.
    fn inductive_term(&mut self) -> Expr {
        let mut e = Expr::int(self.small(-3, 3));
        for (c, _) in self.counters.clone() {
            let coef = self.small(-2, 2);
            if coef != 0 {
                e = e + Expr::int(coef) * Expr::var(&c);
            }
        }
        if self.rng.gen_bool(0.3) {
            let (c, _) = self.counters.choose(&mut self.rng).expect("a counter").clone();
            e = e + Expr::var(&c) * Expr::var(&c);
        }
        if self.rng.gen_bool(0.3) {
            e = e + Expr::var(&self.k);
        }
        e
    }
}

fn lex_cmp(a: &[i64], b: &[i64]) -> std::cmp::Ordering {
    a.cmp(b)
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Whether reading at offset `o` is displacing for writes at `ws` moving by `d`.
fn displacing(ws: &[Vec<i64>], d: &[i64], o: &[i64]) -> bool {
    use std::cmp::Ordering::*;
    let next = add(o, d);
    if ws.contains(&next) {
        return false;
    }
    let zero = vec![0; d.len()];
    match lex_cmp(d, &zero) {
        Greater => ws.iter().all(|w| lex_cmp(w, &next) == Less),
        Less => ws.iter().all(|w| lex_cmp(w, &next) == Greater),
        Equal => ws.iter().all(|w| lex_cmp(w, o) == Less) || ws.iter().all(|w| lex_cmp(w, o) == Greater),
    }
}

/// A loop that passes the a-solvability check and whose recurrences are
/// all of the form `rec' = rec + q`.
pub fn gen_loop(seed: u64, cfg: &GenConfig) -> Loop {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["i", "j"];
    let counters: Vec<(Var, i64)> = (0..cfg.counters.clamp(1, 2))
        .map(|c| (Var::scalar(names[c]), *[-2, -1, 1, 2].choose(&mut rng).expect("nonempty")))
        .collect();
    let mut g = Gen {
        rng,
        counters,
        accumulators: (0..cfg.accumulators.min(2)).map(|k| Var::scalar(["s", "t"][k])).collect(),
        k: Var::scalar("k"),
        b: Var::array("b", 1),
    };
    let mut updates: Vec<(Lvalue, Expr)> = Vec::new();
    for (c, step) in g.counters.clone() {
        updates.push((Lvalue::scalar(c.clone()), Expr::var(&c) + step));
    }
    for s in g.accumulators.clone() {
        let q = g.inductive_term();
        updates.push((Lvalue::scalar(s.clone()), Expr::var(&s) + q));
    }
    let mut displacing_reads: Vec<Expr> = Vec::new();
    for a in 0..cfg.arrays.min(2) {
        let arity = if cfg.max_arity >= 2 && g.rng.gen_bool(0.35) { 2 } else { 1 };
        let x = Var::array(["a", "m"][a], arity);
        // base per dimension: a counter, the unwritten k, or nothing
        let mut base = Vec::new();
        let mut d = Vec::new();
        for _ in 0..arity {
            match g.rng.gen_range(0..10) {
                0..=6 => {
                    let (c, step) = g.counters.choose(&mut g.rng).expect("a counter").clone();
                    base.push(Some(Expr::var(&c)));
                    d.push(step);
                }
                7 | 8 => {
                    base.push(Some(Expr::var(&g.k)));
                    d.push(0);
                }
                _ => {
                    base.push(None);
                    d.push(0);
                }
            }
        }
        let at = |o: &[i64]| -> Expr {
            let idx = base
                .iter()
                .zip(o)
                .map(|(b, off)| match b {
                    Some(b) => b.clone() + *off,
                    None => Expr::int(*off),
                })
                .map(|e| crate::simplify::simplify_expr(&e))
                .collect();
            Expr::select(&x, idx)
        };
        let nwrites = g.rng.gen_range(1..=cfg.max_writes.max(1));
        let mut ws: Vec<Vec<i64>> = Vec::new();
        for _ in 0..nwrites * 4 {
            if ws.len() == nwrites {
                break;
            }
            let o: Vec<i64> = (0..arity).map(|_| g.rng.gen_range(-2..=2)).collect();
            if !ws.contains(&o) {
                ws.push(o);
            }
        }
        for w in &ws {
            let lhs = Lvalue::from_expr(&at(w)).expect("select is an lvalue");
            let kind = g.rng.gen_range(0..3);
            let rhs = if kind == 0 {
                at(&sub(w, &d)) + g.inductive_term()
            } else if kind == 1 {
                let mut candidates = Vec::new();
                for dx in -3..=3 {
                    for dy in -3..=3 {
                        let o: Vec<i64> = if arity == 1 { vec![dx] } else { vec![dx, dy] };
                        if (arity == 1 && dy != 0) || candidates.contains(&o) {
                            continue;
                        }
                        if displacing(&ws, &d, &o) {
                            candidates.push(o);
                        }
                    }
                }
                let mut e = Expr::int(g.small(-3, 3));
                let reads = g.rng.gen_range(1..=2);
                for _ in 0..reads {
                    match candidates.choose(&mut g.rng) {
                        Some(o) if g.rng.gen_bool(0.75) => {
                            let coef = *[1, 1, 2, -1].choose(&mut g.rng).expect("nonempty");
                            e = e + Expr::int(coef) * at(o);
                        }
                        _ => {
                            let (c, _) = g.counters.choose(&mut g.rng).expect("a counter").clone();
                            let off = g.small(-2, 2);
                            e = e + Expr::select(&g.b, vec![Expr::var(&c) + off]);
                        }
                    }
                }
                if g.rng.gen_bool(0.3) {
                    e = e + Expr::var(&g.k);
                }
                if let Some(o) = candidates.first() {
                    displacing_reads.push(at(o));
                }
                e
            } else {
                Expr::int(g.small(-5, 5)) + Expr::select(&g.b, vec![Expr::var(&g.k)])
            };
            updates.push((lhs, crate::simplify::simplify_expr(&rhs)));
        }
    }
    if g.rng.gen_bool(0.4) {
        let rhs = match displacing_reads.choose(&mut g.rng) {
            Some(r) if g.rng.gen_bool(0.5) => r.clone() + 1,
            _ => g.inductive_term(),
        };
        updates.push((Lvalue::scalar(Var::scalar("w")), crate::simplify::simplify_expr(&rhs)));
    }
    let (c0, s0) = g.counters[0].clone();
    let guard = if s0 > 0 { Expr::var(&c0).lt(Expr::var(&g.k)) } else { Expr::var(&c0).gt(Expr::var(&g.k)) };
    let l = Loop::new(vec![guard], updates);
    debug_assert!(check_a_solvable(&l, &mut Prover::builtin()).solvable, "generated loop is not a-solvable:\n{}", describe(&l));
    l
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub state: usize,
    pub n: usize,
    pub var: String,
    pub cell: Vec<i64>,
    pub expected: i64,
    pub got: Option<i64>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let got = self.got.map_or_else(|| "error".to_string(), |g| g.to_string());
        write!(f, "state #{} n={} {}{:?}: expected {}, got {got}", self.state, self.n, self.var, self.cell, self.expected)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OracleReport {
    pub loop_id: String,
    pub states: usize,
    pub n_max: usize,
    /// Half-width of the probe window around every written cell.
    pub window: i64,
    pub comparisons: usize,
    pub mismatches: Vec<Mismatch>,
    /// Set when no closed forms could be computed.
    pub failure: Option<String>,
}

impl OracleReport {
    pub fn ok(&self) -> bool {
        self.failure.is_none() && self.mismatches.is_empty()
    }
}

/// Random values for every variable of `vars`; arrays get hashed
/// backgrounds so that distinct cells almost always differ.
pub fn random_state(vars: &BTreeSet<Var>, rng: &mut impl Rng, range: i64) -> State {
    let mut s = State::new();
    for v in vars {
        if v.is_scalar() {
            s.set(v.clone(), Value::Int(rng.gen_range(-range..=range)));
        } else {
            let bg = Background::Hash { seed: rng.gen(), range: 50 };
            s.set(v.clone(), Value::table(ArrayValue::new(v.arity, bg)));
        }
    }
    s
}

fn probe_cells(arity: usize, written: &BTreeSet<Vec<i64>>, window: i64) -> BTreeSet<Vec<i64>> {
    let mut out = BTreeSet::new();
    let mut around = |c: &[i64], r: i64| {
        if arity == 1 {
            for dx in -r..=r {
                out.insert(vec![c[0] + dx]);
            }
        } else {
            for dx in -r..=r {
                for dy in -r..=r {
                    out.insert(vec![c[0] + dx, c[1] + dy]);
                }
            }
        }
    };
    around(&vec![0; arity], if arity == 1 { window * 4 } else { window });
    for c in written {
        around(c, 1);
    }
    out
}

/// Compares `forms` (closed forms over the loop variables and `n`)
/// against the interpreter on random states for `n = 0..=n_max`.
pub fn compare_forms(
    id: &str,
    l: &Loop,
    forms: &BTreeMap<Var, ArrayExpr>,
    states: usize,
    n_max: usize,
    seed: u64,
) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = 3;
    let mut report =
        OracleReport { loop_id: id.to_string(), states, n_max, window, ..OracleReport::default() };
    let ev = Evaluator::new();
    let vars = l.vars();
    for si in 0..states {
        let s0 = random_state(&vars, &mut rng, 6);
        for n in 0..=n_max {
            let (expected, log) = match iterate(l, &s0, n) {
                Ok(r) => r,
                Err(e) => {
                    report.failure = Some(format!("interpreter: {e}"));
                    return report;
                }
            };
            let at_n = s0.clone().with_int(&iteration_var().name, n as i64);
            for (x, form) in forms {
                if x.is_scalar() {
                    let want = expected.int(&x.name).expect("scalar bound");
                    let got = ev.expr(&Expr::apply(form.clone(), vec![]), &at_n).ok();
                    report.comparisons += 1;
                    if got != Some(want) {
                        report.mismatches.push(Mismatch { state: si, n, var: x.name.clone(), cell: vec![], expected: want, got });
                    }
                    continue;
                }
                let written: BTreeSet<Vec<i64>> = log.iter().filter(|w| &w.var == x).map(|w| w.cell.clone()).collect();
                let arr = expected.array(x).expect("array bound").clone();
                for cell in probe_cells(x.arity, &written, window) {
                    let want = arr.apply(&cell).expect("total array");
                    let idx = cell.iter().map(|c| Expr::int(*c)).collect();
                    let got = ev.expr(&Expr::apply(form.clone(), idx), &at_n).ok();
                    report.comparisons += 1;
                    if got != Some(want) {
                        report.mismatches.push(Mismatch { state: si, n, var: x.name.clone(), cell, expected: want, got });
                    }
                }
            }
        }
    }
    report
}

/// Closed forms of every loop variable, or the reason there are none.
pub fn all_forms(a: &Analysis) -> Result<BTreeMap<Var, ArrayExpr>, String> {
    a.the_loop
        .vars()
        .into_iter()
        .map(|x| a.var_closed_form(&x).map(|f| (x, f)).map_err(|e| e.to_string()))
        .collect()
}

pub fn oracle_loop(id: &str, l: &Loop, prover: &mut Prover, states: usize, n_max: usize, seed: u64) -> OracleReport {
    let a = Analysis::run(l, prover);
    match all_forms(&a) {
        Ok(forms) => compare_forms(id, l, &forms, states, n_max, seed),
        Err(why) => OracleReport {
            loop_id: id.to_string(),
            states,
            n_max,
            failure: Some(why),
            ..OracleReport::default()
        },
    }
}

/// Generates `count` loops from `seed` and checks each of them.
pub fn fuzz(count: usize, cfg: &GenConfig, states: usize, n_max: usize, seed: u64) -> Vec<(Loop, OracleReport)> {
    let one = |k: usize| {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
        let l = gen_loop(s, cfg);
        let r = oracle_loop(&format!("gen-{s}"), &l, &mut Prover::builtin(), states, n_max, s);
        (l, r)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(one).collect()
    }
}

/// A generated loop in problem-file syntax.
pub fn describe(l: &Loop) -> String {
    format!("{}", crate::problem::LoopSyntax(l))
}
