//! Named loops used by tests, the CLI and the browser demo.

use crate::loops::Loop;
use crate::problem::parse_problem;

pub const SWAP: &str = "
(vars (i 0) (k 0) (a 1))
(loop (guard (< i k))
      (update (i (+ i 1))
              ((select a (+ i 1)) (select a i))
              ((select a i) (select a (+ i 1)))))";

pub const DECREMENT: &str = "
(vars (i 0))
(loop (guard (> i 0)) (update (i (- i 1))))";

pub const SHIFT: &str = "
(vars (i 0) (k 0) (a 1))
(loop (guard (< i k))
      (update ((select a (+ i 1)) (select a i)) (i (+ i 1))))";

pub const SUMS: &str = "
(vars (i 0) (j 0))
(loop (update (i (+ i 1)) (j (+ j i))))";

pub const MIXING: &str = "
(vars (i 0) (k 0) (a 1))
(loop (guard (< i k))
      (update (i (+ i 1))
              ((select a (+ i 1)) (+ (select a i) (select a (+ i 1))))))";

pub const STRIDE: &str = "
(vars (i 0) (j 0) (k 0) (a 1) (b 1))
(loop (guard (< i k))
      (update (i (+ i 1))
              (j (+ j 2))
              ((select a j) (+ (select b i) 1))))";

pub const STATIONARY: &str = "
(vars (i 0) (k 0) (a 1))
(loop (guard (< i k))
      (update (i (+ i 1)) ((select a 5) 0)))";

pub const REVERSE: &str = "
(vars (i 0) (a 1) (b 1))
(loop (guard (> i 0))
      (update (i (- i 1)) ((select a i) (* 2 (select b i)))))";

pub const PREFIX: &str = "
(vars (i 0) (a 1))
(loop (guard (< i 100))
      (update (i (+ i 1)) ((select a (+ i 1)) (+ (select a i) i))))";

pub const GRID: &str = "
(vars (i 0) (j 0) (k 0) (m 2))
(loop (guard (< i k))
      (update (i (+ i 1))
              ((select m i j) (+ (select m (+ i 1) j) j))
              ((select m i (+ j 1)) (* 3 k))))";

pub const DIAGONAL: &str = "
(vars (i 0) (k 0) (m 2))
(loop (guard (< i k))
      (update (i (+ i 1)) ((select m i i) (+ (select m (+ i 1) (+ i 1)) 1))))";

pub const EVENS: &str = "
(vars (i 0) (s 0) (t 0) (a 1))
(loop (guard (< i 40))
      (update (i (+ i 2))
              (s (+ s (* i i)))
              (t (select a (+ i 1)))
              ((select a i) (+ (select a (+ i 3)) 7))))";

/// `(name, source)` for every loop of the corpus.
pub const SOURCES: &[(&str, &str)] = &[
    ("swap", SWAP),
    ("decrement", DECREMENT),
    ("shift", SHIFT),
    ("sums", SUMS),
    ("mixing", MIXING),
    ("stride", STRIDE),
    ("stationary", STATIONARY),
    ("reverse", REVERSE),
    ("prefix", PREFIX),
    ("grid", GRID),
    ("diagonal", DIAGONAL),
    ("evens", EVENS),
];

pub fn load(src: &str) -> Loop {
    parse_problem(src).expect("corpus sources parse").the_loop
}

pub fn by_name(name: &str) -> Option<Loop> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| load(s))
}

pub fn all() -> Vec<(&'static str, Loop)> {
    SOURCES.iter().map(|(n, s)| (*n, load(s))).collect()
}
