//! Independent oracles shared by the integration suites. Nothing here calls
//! into the library's own lifting or counting code.

#![allow(dead_code)]

use std::collections::VecDeque;

use markov_cocycles::lattice::Configuration;

/// `+1` if `b - a ≡ 1`, `-1` if `b - a ≡ -1 (mod r)`; `r = 2` reads as `+1`.
pub fn step(a: u32, b: u32, r: u32) -> Option<i64> {
    let diff = (b + r - a) % r;
    if diff == 1 {
        Some(1)
    } else if diff == r - 1 {
        Some(-1)
    } else {
        None
    }
}

/// Breadth-first lift from cell 0 with `base` as its height; `None` if some
/// edge is invalid or two paths disagree.
pub fn lift(c: &Configuration, base: i64) -> Option<Vec<i64>> {
    let w = &c.window;
    let mut h: Vec<Option<i64>> = vec![None; w.len()];
    h[0] = Some(base);
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in w.neighbors(u) {
            let hv = h[u]? + step(c.cells[u], c.cells[v], c.r)?;
            match h[v] {
                None => {
                    h[v] = Some(hv);
                    queue.push_back(v);
                }
                Some(old) if old != hv => return None,
                Some(_) => {}
            }
        }
    }
    h.into_iter().collect()
}

/// Every edge of the window carries a `±1` step.
pub fn is_xr(c: &Configuration) -> bool {
    c.window.edges().all(|(i, j, _)| step(c.cells[i], c.cells[j], c.r).is_some())
}

/// `Σ_n |x̂_n - ŷ_n|` for lifts sharing cell 0.
pub fn height_distance(x: &Configuration, y: &Configuration) -> i64 {
    let xh = lift(x, x.cells[0] as i64).expect("x lifts");
    let yh = lift(y, x.cells[0] as i64).expect("y lifts");
    xh.iter().zip(&yh).map(|(a, b)| (a - b).abs()).sum()
}

/// `Σ_n (ŷ_n - x̂_n)`.
pub fn height_change(x: &Configuration, y: &Configuration) -> i64 {
    let xh = lift(x, x.cells[0] as i64).expect("x lifts");
    let yh = lift(y, x.cells[0] as i64).expect("y lifts");
    xh.iter().zip(&yh).map(|(a, b)| b - a).sum()
}

/// Crossing count by walking the parity-preserving path from `a` to `b` one
/// step of 2 at a time.
pub fn crossings(i: u32, a: i64, b: i64, r: u32) -> i64 {
    let r = r as i64;
    let hits = |lo: i64, hi: i64| (0..).map(|k| lo + 2 * k).take_while(|&m| m < hi).filter(|m| m.rem_euclid(r) == i as i64).count() as i64;
    if a <= b {
        hits(a, b)
    } else {
        -hits(b, a)
    }
}
