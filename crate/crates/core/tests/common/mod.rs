//! Brute-force helpers shared by the acceptance and property tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use arrayaccel::array_form::{displacement, Displacement};
use arrayaccel::eval::{ArrayValue, Background, State};
use arrayaccel::loops::{build_up, Loop, Write};
use arrayaccel::Var;

/// Arrays whose every write has a constant displacement.
pub fn constant_arrays(l: &Loop) -> Vec<Var> {
    let up = build_up(l);
    l.written()
        .into_iter()
        .filter(|x| !x.is_scalar())
        .filter(|x| l.writes_to(x).all(|k| matches!(displacement(&up, &l.lhs[k]), Displacement::Constant(_))))
        .collect()
}

pub fn random_start(l: &Loop, rng: &mut impl Rng) -> State {
    let mut s = State::new();
    for v in l.vars() {
        if v.is_scalar() {
            s.set_int(&v.name, rng.gen_range(-4..=4));
        } else {
            s.set_array(&v, ArrayValue::new(v.arity, Background::Hash { seed: rng.gen(), range: 50 }));
        }
    }
    s
}

/// The bounding box of `cells` and the origin, widened by 2.
pub fn window(cells: &BTreeSet<Vec<i64>>, arity: usize) -> Vec<Vec<i64>> {
    let (mut lo, mut hi) = (vec![0i64; arity], vec![0i64; arity]);
    for c in cells {
        for p in 0..arity {
            lo[p] = lo[p].min(c[p]);
            hi[p] = hi[p].max(c[p]);
        }
    }
    let mut out = vec![vec![]];
    for p in 0..arity {
        out = out
            .into_iter()
            .flat_map(|pre: Vec<i64>| ((lo[p] - 2)..=(hi[p] + 2)).map(move |v| [pre.clone(), vec![v]].concat()))
            .collect();
    }
    out
}

/// `(update, m') ↦ r^(m'-1)` for the writes to `x` in `log`. With a
/// constant displacement the index is linear in `m'`, so `m' = 0` is
/// extrapolated from iterations 1 and 2.
pub fn index_trajectory(l: &Loop, x: &Var, log: &[Write]) -> BTreeMap<(usize, i64), Vec<i64>> {
    let mut index: BTreeMap<(usize, i64), Vec<i64>> =
        log.iter().filter(|w| &w.var == x).map(|w| ((w.update, w.iteration as i64), w.cell.clone())).collect();
    for k in l.writes_to(x) {
        let (one, two) = (&index[&(k, 1)], &index[&(k, 2)]);
        let zero = one.iter().zip(two).map(|(a, b)| 2 * a - b).collect();
        index.insert((k, 0), zero);
    }
    index
}

/// `∀m' ∈ [m..n]. r^(m'-1) ≠ c` by enumeration.
pub fn not_written_enumerated(index: &BTreeMap<(usize, i64), Vec<i64>>, m: i64, n: i64, c: &[i64]) -> bool {
    !index.iter().any(|((_, it), cell)| (m..=n).contains(it) && cell.as_slice() == c)
}
