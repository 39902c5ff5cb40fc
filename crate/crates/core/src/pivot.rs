//! Pivot chains: sequences of valid configurations, consecutive ones differing
//! at a single site, joining the two halves of a homoclinic pair.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::{eval, Alphas};
use crate::error::{invalid, Error, Result};
use crate::height::{lift_pair, pivot_path};
use crate::lattice::{make_pair, Configuration, Graph, HomoclinicPair, LatticeVector, LocalRule, Model};
use crate::scalar::Scalar;
use crate::specification::{enumerate_patterns, PatternSet};

/// `steps[0] = x`, `steps.last() = y`; `pivots[k]` is the site changed
/// between `steps[k]` and `steps[k+1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotChain {
    pub steps: Vec<Configuration>,
    pub pivots: Vec<LatticeVector>,
}

impl PivotChain {
    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }
}

/// Pivot chain for `X_r` by induction on `D = Σ|x̂ - ŷ|`: lower the highest
/// site where `x̂ > ŷ`, else raise the lowest site where `x̂ < ŷ`. The chain
/// has exactly `D / 2` moves.
pub fn pivot_chain_xr(pair: &HomoclinicPair) -> Result<PivotChain> {
    let (xh, yh) = lift_pair(pair)?;
    let w = pair.window();
    let moves = pivot_path(w, &xh.values, &yh.values)?;
    let r = pair.r() as i64;
    let mut cur = xh.values.clone();
    let mut config = pair.x.clone();
    let mut steps = vec![config.clone()];
    let mut pivots = Vec::with_capacity(moves.len());
    for (i, delta) in moves {
        cur[i] += delta;
        config.cells[i] = cur[i].rem_euclid(r) as u32;
        steps.push(config.clone());
        pivots.push(w.site(i));
    }
    Ok(PivotChain { steps, pivots })
}

/// Checks that every step is valid for `model`, consecutive steps share the
/// window and differ exactly at the recorded pivot, and the chain is homoclinic.
pub fn verify_chain(chain: &PivotChain, model: &Model) -> Result<()> {
    if chain.steps.len() != chain.pivots.len() + 1 {
        return Err(Error::Chain {
            step: 0,
            reason: format!(
                "{} steps but {} pivots",
                chain.steps.len(),
                chain.pivots.len()
            ),
        });
    }
    for (k, c) in chain.steps.iter().enumerate() {
        let rep = model.validate(c)?;
        if !rep.valid {
            return Err(Error::Chain {
                step: k,
                reason: format!("configuration is invalid: {:?}", rep.violations.first()),
            });
        }
    }
    for (k, pair) in chain.steps.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if a.window != b.window || a.r != b.r {
            return Err(Error::Chain {
                step: k + 1,
                reason: "window or r changes".into(),
            });
        }
        let diff = a.diff_indices(b);
        let expect = a.window.index_of(&chain.pivots[k]);
        if diff.len() != 1 || Some(diff[0]) != expect {
            return Err(Error::Chain {
                step: k + 1,
                reason: format!(
                    "expected a single change at {}, found {} changes",
                    chain.pivots[k],
                    diff.len()
                ),
            });
        }
        if a.window.in_collar(diff[0], 1) {
            return Err(Error::Chain {
                step: k + 1,
                reason: format!("pivot at collar site {}", chain.pivots[k]),
            });
        }
    }
    Ok(())
}

/// `M(x, y)` as the sum of `M` over the chain's single-site pivots.
pub fn eval_via_chain<T: Scalar>(alphas: &Alphas<T>, chain: &PivotChain) -> Result<T> {
    verify_chain(chain, &Model::Xr)?;
    let mut total = T::zero();
    for (k, w) in chain.steps.windows(2).enumerate() {
        let p = make_pair(w[0].clone(), w[1].clone()).map_err(|e| Error::Chain {
            step: k + 1,
            reason: e.to_string(),
        })?;
        total = total + eval(alphas, &p)?;
    }
    Ok(total)
}

/// A pivot chain between proper colourings of a finite graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringChain {
    pub steps: Vec<Vec<u32>>,
    pub pivots: Vec<usize>,
}

/// Pivot chain between proper colourings `x`, `y` with `n` colours, valid when
/// `n ≥ maxdeg + 2`.
///
/// For each colour `i` in turn: first every vertex of `F` currently coloured
/// `i` moves to the smallest colour absent from itself and its neighbours,
/// then every vertex of `F` whose target colour is `i` takes it. The chain has
/// at most `2 n |F|` moves.
pub fn pivot_chain_coloring(graph: &Graph, n: u32, x: &[u32], y: &[u32]) -> Result<ColoringChain> {
    let v = graph.vertex_count();
    if x.len() != v || y.len() != v {
        return Err(invalid("colourings must have one entry per vertex"));
    }
    if (n as usize) < graph.max_degree() + 2 {
        return Err(Error::Precondition(format!(
            "need at least maxdeg + 2 = {} colours, got {n}",
            graph.max_degree() + 2
        )));
    }
    for (name, c) in [("x", x), ("y", y)] {
        if let Some(bad) = graph.coloring_violations(c, n).first() {
            return Err(Error::InvalidConfiguration(format!("{name} is not proper: {bad:?}")));
        }
    }
    let f: Vec<usize> = (0..v).filter(|&u| x[u] != y[u]).collect();
    let mut cur = x.to_vec();
    let mut steps = vec![cur.clone()];
    let mut pivots = Vec::new();
    for i in 0..n {
        for &u in &f {
            if cur[u] != i {
                continue;
            }
            let mut used = vec![false; n as usize];
            used[cur[u] as usize] = true;
            for &w in graph.neighbors(u) {
                used[cur[w] as usize] = true;
            }
            let j = (0..n).find(|&j| !used[j as usize]).expect("n >= maxdeg + 2");
            cur[u] = j;
            steps.push(cur.clone());
            pivots.push(u);
        }
        for &u in &f {
            if y[u] == i && cur[u] != i {
                cur[u] = i;
                steps.push(cur.clone());
                pivots.push(u);
            }
        }
    }
    debug_assert_eq!(cur, y);
    Ok(ColoringChain { steps, pivots })
}

/// Connected components of the single-site-move graph on the fillings of a region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub patterns: usize,
    /// Pattern indices per component, each sorted, components ordered by first member.
    pub components: Vec<Vec<usize>>,
    pub connected: bool,
    /// `false` when produced by a random walk that cannot certify connectivity.
    pub verified: bool,
    #[serde(skip)]
    pub set: Option<PatternSet>,
}

/// Exhaustively enumerates fillings of `region` (boundary from `frame`) and
/// groups them into components joined by single-site changes.
pub fn pivot_connectivity(
    rule: &dyn LocalRule,
    frame: &Configuration,
    region: &[LatticeVector],
) -> Result<ConnectivityReport> {
    let set = enumerate_patterns(rule, frame, region)?;
    let index: HashMap<&Vec<u32>, usize> =
        set.patterns.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let q = rule.alphabet_size();
    let mut comp = vec![usize::MAX; set.len()];
    let mut components = Vec::new();
    for start in 0..set.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            let mut p = set.patterns[s].clone();
            for k in 0..p.len() {
                let orig = p[k];
                for v in 0..q {
                    if v == orig {
                        continue;
                    }
                    p[k] = v;
                    if let Some(&t) = index.get(&p) {
                        if comp[t] == usize::MAX {
                            comp[t] = id;
                            members.push(t);
                            queue.push_back(t);
                        }
                    }
                }
                p[k] = orig;
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    Ok(ConnectivityReport {
        patterns: set.len(),
        connected: components.len() <= 1,
        components,
        verified: true,
        set: Some(set),
    })
}

/// Random-walk probe for regions too large to enumerate: explores single-site
/// moves from the frame's filling and reports what it reached. The result is
/// never `verified`.
pub fn pivot_walk(
    rule: &dyn LocalRule,
    frame: &Configuration,
    region: &[LatticeVector],
    steps: usize,
    seed: u64,
) -> Result<ConnectivityReport> {
    let w = &frame.window;
    let idx: Vec<usize> = region
        .iter()
        .map(|s| w.index_of(s).ok_or_else(|| invalid(format!("site {s} outside the frame"))))
        .collect::<Result<_>>()?;
    let ok_at = |cells: &[u32], i: usize| {
        (0..w.d()).all(|a| {
            w.neighbor(i, a, 1)
                .is_none_or(|j| rule.edge_allowed(a, cells[i], cells[j]))
                && w.neighbor(i, a, -1)
                    .is_none_or(|j| rule.edge_allowed(a, cells[j], cells[i]))
        })
    };
    if !idx.iter().all(|&i| ok_at(&frame.cells, i)) {
        return Err(Error::InvalidConfiguration("the frame's filling is not valid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = frame.cells.clone();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    seen.insert(idx.iter().map(|&i| cur[i]).collect());
    let q = rule.alphabet_size();
    for _ in 0..steps {
        if idx.is_empty() {
            break;
        }
        let i = idx[rng.gen_range(0..idx.len())];
        let old = cur[i];
        cur[i] = rng.gen_range(0..q);
        if ok_at(&cur, i) {
            seen.insert(idx.iter().map(|&i| cur[i]).collect());
        } else {
            cur[i] = old;
        }
    }
    Ok(ConnectivityReport {
        patterns: seen.len(),
        components: vec![(0..seen.len()).collect()],
        connected: true,
        verified: false,
        set: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::pivot_pair;
    use crate::lattice::Window;

    #[test]
    fn single_pivot_chain() {
        let w = Window::centered(&[5, 5]).unwrap();
        let p = pivot_pair(&w, 5, &LatticeVector::zero(2), 3).unwrap();
        let c = pivot_chain_xr(&p).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.steps.last().unwrap(), &p.y);
        verify_chain(&c, &Model::Xr).unwrap();
    }

    #[test]
    fn verify_rejects_double_change() {
        let w = Window::centered(&[5, 5]).unwrap();
        let p = pivot_pair(&w, 5, &LatticeVector::zero(2), 3).unwrap();
        let mut c = pivot_chain_xr(&p).unwrap();
        c.pivots[0] = LatticeVector::from([1, 1]);
        assert!(matches!(verify_chain(&c, &Model::Xr), Err(Error::Chain { step: 1, .. })));
    }

    #[test]
    fn triangle_recolouring() {
        let g = Graph::from_edges(3, &[[0, 1], [1, 2], [0, 2]]).unwrap();
        let c = pivot_chain_coloring(&g, 4, &[0, 1, 2], &[1, 2, 0]).unwrap();
        assert_eq!(c.steps.last().unwrap(), &vec![1, 2, 0]);
        for s in &c.steps {
            assert!(g.coloring_violations(s, 4).is_empty());
        }
        assert!(c.pivots.len() <= 2 * 4 * 3);
    }

    #[test]
    fn too_few_colours_is_a_precondition_error() {
        let g = Graph::from_edges(3, &[[0, 1], [1, 2], [0, 2]]).unwrap();
        assert!(matches!(
            pivot_chain_coloring(&g, 3, &[0, 1, 2], &[1, 2, 0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn x3_small_region_is_connected() {
        let frame = Configuration::from_fn(Window::centered(&[4, 4]).unwrap(), 3, |s| s.l1().rem_euclid(2));
        let region: Vec<LatticeVector> = frame.window.interior(1).unwrap().sites().collect();
        let model = Model::Xr;
        let rep = pivot_connectivity(&model.rule(3).unwrap(), &frame, &region).unwrap();
        assert!(rep.connected && rep.verified);
        assert!(rep.patterns > 1);
    }
}
