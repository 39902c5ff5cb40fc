//! Nearest-neighbour interactions, their Gibbs cocycles, and the synthesis of
//! interactions realising a given basis cocycle.
//!
//! A nearest-neighbour interaction assigns a potential to single sites
//! (`φ([a]_0)`) and to ordered edges (`φ([a, b]_j)`, value `a` at `n` and `b`
//! at `n + e_j`). Its Gibbs cocycle is
//! `M_φ(x, y) = Σ_W φ(y|_W) - φ(x|_W)` over all sites and edges `W`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cocycle::{check_basis_r, Alphas};
use crate::error::{invalid, Error, Result};
use crate::lattice::{Configuration, HomoclinicPair, LatticeVector, Window};
use crate::scalar::Scalar;

/// Potentials looked up by position; shift-invariant interactions ignore it.
pub trait Interaction<T: Scalar> {
    fn r(&self) -> u32;
    fn d(&self) -> usize;
    fn site_potential(&self, n: &LatticeVector, a: u32) -> T;
    /// `φ` of the edge from `n` to `n + e_axis` carrying `(a, b)`.
    fn edge_potential(&self, n: &LatticeVector, axis: usize, a: u32, b: u32) -> T;
}

/// A shift-invariant nearest-neighbour interaction; unset entries are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct NNInteraction<T> {
    pub r: u32,
    pub d: usize,
    site: Vec<T>,
    /// `edge[axis][a * r + b]`.
    edge: Vec<Vec<T>>,
}

impl<T: Scalar> NNInteraction<T> {
    pub fn zero(r: u32, d: usize) -> Self {
        NNInteraction {
            r,
            d,
            site: vec![T::zero(); r as usize],
            edge: vec![vec![T::zero(); (r * r) as usize]; d],
        }
    }

    pub fn site(&self, a: u32) -> T {
        self.site[a as usize].clone()
    }

    pub fn edge(&self, axis: usize, a: u32, b: u32) -> T {
        self.edge[axis][(a * self.r + b) as usize].clone()
    }

    pub fn set_site(&mut self, a: u32, v: T) {
        self.site[a as usize] = v;
    }

    pub fn set_edge(&mut self, axis: usize, a: u32, b: u32, v: T) {
        let r = self.r;
        self.edge[axis][(a * r + b) as usize] = v;
    }
}

impl<T: Scalar> Interaction<T> for NNInteraction<T> {
    fn r(&self) -> u32 {
        self.r
    }
    fn d(&self) -> usize {
        self.d
    }
    fn site_potential(&self, _n: &LatticeVector, a: u32) -> T {
        self.site(a)
    }
    fn edge_potential(&self, _n: &LatticeVector, axis: usize, a: u32, b: u32) -> T {
        self.edge(axis, a, b)
    }
}

/// A position-dependent nearest-neighbour interaction supported on a window;
/// unset entries are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteInteraction<T> {
    pub r: u32,
    pub d: usize,
    pub window: Window,
    site: BTreeMap<(LatticeVector, u32), T>,
    edge: BTreeMap<(LatticeVector, usize, u32, u32), T>,
}

impl<T: Scalar> SiteInteraction<T> {
    pub fn zero(r: u32, window: Window) -> Self {
        SiteInteraction {
            r,
            d: window.d(),
            window,
            site: BTreeMap::new(),
            edge: BTreeMap::new(),
        }
    }

    pub fn set_site(&mut self, n: LatticeVector, a: u32, v: T) {
        self.site.insert((n, a), v);
    }

    pub fn set_edge(&mut self, n: LatticeVector, axis: usize, a: u32, b: u32, v: T) {
        self.edge.insert((n, axis, a, b), v);
    }

    pub fn edge_entries(&self) -> impl Iterator<Item = (&(LatticeVector, usize, u32, u32), &T)> {
        self.edge.iter()
    }

    pub fn site_entries(&self) -> impl Iterator<Item = (&(LatticeVector, u32), &T)> {
        self.site.iter()
    }
}

impl<T: Scalar> Interaction<T> for SiteInteraction<T> {
    fn r(&self) -> u32 {
        self.r
    }
    fn d(&self) -> usize {
        self.d
    }
    fn site_potential(&self, n: &LatticeVector, a: u32) -> T {
        self.site.get(&(n.clone(), a)).cloned().unwrap_or_else(T::zero)
    }
    fn edge_potential(&self, n: &LatticeVector, axis: usize, a: u32, b: u32) -> T {
        self.edge
            .get(&(n.clone(), axis, a, b))
            .cloned()
            .unwrap_or_else(T::zero)
    }
}

/// `M_φ(x, y)`, summed over the sites of `F` and the edges meeting `F`.
pub fn gibbs_eval<T: Scalar, I: Interaction<T> + ?Sized>(phi: &I, pair: &HomoclinicPair) -> Result<T> {
    let w = pair.window();
    if phi.r() != pair.r() || phi.d() != w.d() {
        return Err(invalid("interaction and pair disagree on r or d"));
    }
    let (x, y) = (&pair.x.cells, &pair.y.cells);
    let mut total = T::zero();
    let mut in_f = vec![false; w.len()];
    for &i in pair.diff_indices() {
        in_f[i] = true;
    }
    for &i in pair.diff_indices() {
        let n = w.site(i);
        total = total + phi.site_potential(&n, y[i]) - phi.site_potential(&n, x[i]);
    }
    for (i, j, axis) in w.edges() {
        if !(in_f[i] || in_f[j]) {
            continue;
        }
        let n = w.site(i);
        total = total + phi.edge_potential(&n, axis, y[i], y[j])
            - phi.edge_potential(&n, axis, x[i], x[j]);
    }
    Ok(total)
}

/// A shift-invariant interaction whose Gibbs cocycle is `Σ α_i M_i`, for
/// `Σα = 0`: `φ([i, i+1]_1) = -Σ_{k=i}^{r-1} α_k`, every other entry 0.
pub fn synth_invariant<T: Scalar>(alphas: &Alphas<T>, d: usize) -> Result<NNInteraction<T>> {
    alphas.validate()?;
    let sum = alphas.sum();
    if !sum.is_negligible() {
        return Err(Error::NotGibbs(sum.to_string()));
    }
    let r = alphas.r;
    let mut phi = NNInteraction::zero(r, d);
    let mut tail = T::zero();
    for i in (0..r).rev() {
        tail = tail + alphas.coeffs[i as usize].clone();
        phi.set_edge(0, i, (i + 1) % r, -tail.clone());
    }
    Ok(phi)
}

/// A position-dependent interaction on `window` realising `Σ α_i M_i` on
/// every single-site pivot inside the window, for any `α` (Gibbs or not).
pub fn synth_nonstationary<T: Scalar>(alphas: &Alphas<T>, window: &Window) -> Result<SiteInteraction<T>> {
    alphas.validate()?;
    synth_nonstationary_with(alphas.r, window, |_, i| -alphas.coeffs[i as usize].clone())
}

/// The recursion behind [`synth_nonstationary`] for an arbitrary Markov
/// cocycle, given through `lowering(n, i)`: its value on the pivot at `n`
/// taking the value `i + 2` down to `i` (all neighbours `i + 1`).
///
/// Only first-axis edge potentials are non-zero:
/// * `φ_{n,1}(i, i+1) = lowering(n, i) + φ_{n-e_1,1}(i+1, i+2)` for `n_1 > 0`, else 0;
/// * `φ_{n,1}(i+1, i) = lowering(n+e_1, i) + φ_{n+e_1,1}(i+2, i+1)` for `n_1 < 0`, else 0.
pub fn synth_nonstationary_with<T: Scalar>(
    r: u32,
    window: &Window,
    lowering: impl Fn(&LatticeVector, u32) -> T,
) -> Result<SiteInteraction<T>> {
    check_basis_r(r)?;
    let mut phi = SiteInteraction::zero(r, window.clone());
    let e1 = LatticeVector::unit(window.d(), 0, 1);
    for n in window.sites() {
        let n1 = n.0[0];
        for i in 0..r {
            if n1 > 0 {
                // Unroll towards n_1 = 0: site n - t e_1 contributes with residue i + t.
                let mut acc = T::zero();
                let mut m = n.clone();
                for t in 0..n1 {
                    acc = acc + lowering(&m, (i + t as u32) % r);
                    m = m.sub(&e1);
                }
                phi.set_edge(n.clone(), 0, i, (i + 1) % r, acc);
            } else if n1 < 0 {
                let mut acc = T::zero();
                let mut m = n.add(&e1);
                for t in 0..(-n1) {
                    acc = acc + lowering(&m, (i + t as u32) % r);
                    m = m.add(&e1);
                }
                phi.set_edge(n.clone(), 0, (i + 1) % r, i, acc);
            }
        }
    }
    Ok(phi)
}

/// A symmetric interaction with the same cocycle on `X_r`, with no site part:
/// `φ̃([i, i+1]_j) = φ̃([i+1, i]_j) = (1/2d)[Σ_j (φ([i+1, i]_j) + φ([i, i+1]_j)) + φ([i]_0) + φ([i+1]_0)]`.
///
/// Each site potential is spread evenly over the `2d` edges at that site.
pub fn symmetrize<T: Scalar>(phi: &NNInteraction<T>) -> Result<NNInteraction<T>> {
    let r = phi.r;
    if r <= 2 {
        return Err(Error::UnsupportedModel(format!("symmetrize needs r >= 3, got {r}")));
    }
    let two_d = T::from_i64(2 * phi.d as i64);
    let mut out = NNInteraction::zero(r, phi.d);
    for i in 0..r {
        let up = (i + 1) % r;
        let mut acc = phi.site(i) + phi.site(up);
        for j in 0..phi.d {
            acc = acc + phi.edge(j, up, i) + phi.edge(j, i, up);
        }
        let v = acc / two_d.clone();
        for j in 0..phi.d {
            out.set_edge(j, i, up, v.clone());
            out.set_edge(j, up, i, v.clone());
        }
    }
    Ok(out)
}

/// `f_φ(x) = φ([x_0]_0) + ½ Σ_j (φ([x_{-e_j}, x_0]_j) + φ([x_0, x_{e_j}]_j))`,
/// read from a pattern containing the origin and its neighbours.
pub fn f_phi<T: Scalar>(phi: &NNInteraction<T>, pattern: &Configuration) -> Result<T> {
    let d = phi.d;
    let origin = LatticeVector::zero(d);
    let get = |s: &LatticeVector| {
        pattern
            .get(s)
            .ok_or_else(|| invalid(format!("pattern must contain {s}")))
    };
    let x0 = get(&origin)?;
    let half = T::one() / T::from_i64(2);
    let mut total = phi.site(x0);
    for j in 0..d {
        let before = get(&LatticeVector::unit(d, j, -1))?;
        let after = get(&LatticeVector::unit(d, j, 1))?;
        total = total + half.clone() * (phi.edge(j, before, x0) + phi.edge(j, x0, after));
    }
    Ok(total)
}

/// The JSON shape shared by both interaction kinds. Keys are `"a"` / `"j:a,b"`
/// for shift-invariant entries and `"n1,n2:a"` / `"n1,n2:j:a,b"` for
/// position-indexed ones; axes `j` are 1-based.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct InteractionJson {
    pub r: u32,
    pub d: usize,
    #[serde(default)]
    pub site: BTreeMap<String, f64>,
    #[serde(default)]
    pub edge: BTreeMap<String, f64>,
}

/// Either interaction kind, as parsed from JSON.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyInteraction {
    Invariant(NNInteraction<f64>),
    Positional(SiteInteraction<f64>),
}

fn parse_pair(s: &str) -> Result<(u32, u32)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| invalid(format!("bad value pair {s:?}")))?;
    let p = |t: &str| t.trim().parse::<u32>().map_err(|e| invalid(format!("bad value {t:?}: {e}")));
    Ok((p(a)?, p(b)?))
}

fn parse_axis(s: &str, d: usize) -> Result<usize> {
    let j: usize = s
        .trim()
        .parse()
        .map_err(|e| invalid(format!("bad axis {s:?}: {e}")))?;
    if j == 0 || j > d {
        return Err(invalid(format!("axis {j} outside 1..={d}")));
    }
    Ok(j - 1)
}

impl InteractionJson {
    fn positional(&self) -> bool {
        self.site.keys().any(|k| k.contains(':')) || self.edge.keys().any(|k| k.matches(':').count() == 2)
    }

    pub fn parse(&self) -> Result<AnyInteraction> {
        let check = |a: u32| {
            if a >= self.r {
                Err(invalid(format!("value {a} outside Z_{}", self.r)))
            } else {
                Ok(a)
            }
        };
        if !self.positional() {
            let mut phi = NNInteraction::zero(self.r, self.d);
            for (k, v) in &self.site {
                let a = k.trim().parse().map_err(|e| invalid(format!("bad site key {k:?}: {e}")))?;
                phi.set_site(check(a)?, *v);
            }
            for (k, v) in &self.edge {
                let (j, ab) = k
                    .split_once(':')
                    .ok_or_else(|| invalid(format!("bad edge key {k:?}")))?;
                let (a, b) = parse_pair(ab)?;
                phi.set_edge(parse_axis(j, self.d)?, check(a)?, check(b)?, *v);
            }
            return Ok(AnyInteraction::Invariant(phi));
        }
        let mut entries_site = Vec::new();
        let mut entries_edge = Vec::new();
        for (k, v) in &self.site {
            let (n, a) = k
                .split_once(':')
                .ok_or_else(|| invalid(format!("site key {k:?} needs a position")))?;
            let a = a.trim().parse().map_err(|e| invalid(format!("bad site key {k:?}: {e}")))?;
            entries_site.push((n.parse::<LatticeVector>()?, check(a)?, *v));
        }
        for (k, v) in &self.edge {
            let parts: Vec<&str> = k.split(':').collect();
            let [n, j, ab] = parts.as_slice() else {
                return Err(invalid(format!("edge key {k:?} needs the form n1,n2:j:a,b")));
            };
            let (a, b) = parse_pair(ab)?;
            entries_edge.push((n.parse::<LatticeVector>()?, parse_axis(j, self.d)?, check(a)?, check(b)?, *v));
        }
        let all: Vec<&LatticeVector> = entries_site
            .iter()
            .map(|e| &e.0)
            .chain(entries_edge.iter().map(|e| &e.0))
            .collect();
        if all.iter().any(|n| n.d() != self.d) {
            return Err(invalid("position keys must have d coordinates"));
        }
        let lo: Vec<i64> = (0..self.d).map(|a| all.iter().map(|n| n.0[a]).min().unwrap_or(0)).collect();
        let hi: Vec<i64> = (0..self.d).map(|a| all.iter().map(|n| n.0[a]).max().unwrap_or(0)).collect();
        let window = Window::new(
            LatticeVector(lo.clone()),
            (0..self.d).map(|a| (hi[a] - lo[a] + 1) as usize).collect(),
        )?;
        let mut phi = SiteInteraction::zero(self.r, window);
        for (n, a, v) in entries_site {
            phi.set_site(n, a, v);
        }
        for (n, j, a, b, v) in entries_edge {
            phi.set_edge(n, j, a, b, v);
        }
        Ok(AnyInteraction::Positional(phi))
    }
}

fn coords(n: &LatticeVector) -> String {
    n.0.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

impl From<&NNInteraction<f64>> for InteractionJson {
    fn from(phi: &NNInteraction<f64>) -> Self {
        let mut out = InteractionJson {
            r: phi.r,
            d: phi.d,
            ..Default::default()
        };
        for a in 0..phi.r {
            if phi.site(a) != 0.0 {
                out.site.insert(a.to_string(), phi.site(a));
            }
            for j in 0..phi.d {
                for b in 0..phi.r {
                    if phi.edge(j, a, b) != 0.0 {
                        out.edge.insert(format!("{}:{a},{b}", j + 1), phi.edge(j, a, b));
                    }
                }
            }
        }
        out
    }
}

impl From<&SiteInteraction<f64>> for InteractionJson {
    fn from(phi: &SiteInteraction<f64>) -> Self {
        let mut out = InteractionJson {
            r: phi.r,
            d: phi.d,
            ..Default::default()
        };
        for ((n, a), v) in phi.site_entries() {
            if *v != 0.0 {
                out.site.insert(format!("{}:{a}", coords(n)), *v);
            }
        }
        for ((n, j, a, b), v) in phi.edge_entries() {
            if *v != 0.0 {
                out.edge.insert(format!("{}:{}:{a},{b}", coords(n), j + 1), *v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{eval, pivot_pair};
    use num_rational::Rational64;

    fn q(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn synth_invariant_example() {
        let a = Alphas::new(vec![q(1), q(-1), q(0)]).unwrap();
        let phi = synth_invariant(&a, 2).unwrap();
        assert_eq!(phi.edge(0, 0, 1), q(0));
        assert_eq!(phi.edge(0, 1, 2), q(1));
        assert_eq!(phi.edge(0, 2, 0), q(0));
    }

    #[test]
    fn synth_invariant_rejects_non_gibbs() {
        let a = Alphas::new(vec![q(1), q(1), q(1)]).unwrap();
        assert!(matches!(synth_invariant(&a, 2), Err(Error::NotGibbs(_))));
    }

    #[test]
    fn synth_invariant_reproduces_pivots() {
        let a = Alphas::new(vec![q(2), q(-3), q(5), q(-4), q(0)]).unwrap();
        let phi = synth_invariant(&a, 2).unwrap();
        let w = Window::centered(&[5, 5]).unwrap();
        for i in 0..5 {
            let p = pivot_pair(&w, 5, &LatticeVector::zero(2), i).unwrap();
            assert_eq!(gibbs_eval(&phi, &p).unwrap(), eval(&a, &p).unwrap());
            assert_eq!(gibbs_eval(&phi, &p.reversed()).unwrap(), eval(&a, &p.reversed()).unwrap());
        }
    }

    #[test]
    fn nonstationary_matches_on_every_window_pivot() {
        let a = Alphas::new(vec![q(1), q(1), q(1)]).unwrap();
        let w = Window::cube(5, 2);
        let phi = synth_nonstationary(&a, &w).unwrap();
        for n in w.interior(1).unwrap().sites() {
            for i in 0..3 {
                let p = pivot_pair(&w, 3, &n, i).unwrap();
                assert_eq!(gibbs_eval(&phi, &p).unwrap(), eval(&a, &p).unwrap(), "pivot at {n}, residue {i}");
            }
        }
    }

    #[test]
    fn symmetrize_edge_constant_example() {
        let mut phi = NNInteraction::<f64>::zero(3, 2);
        for i in 0..3 {
            phi.set_edge(0, i, (i + 1) % 3, 1.0);
        }
        let s = symmetrize(&phi).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((s.edge(j, i, (i + 1) % 3) - 0.25).abs() < 1e-12);
                assert!((s.edge(j, (i + 1) % 3, i) - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f_phi_of_constant_edges() {
        let mut phi = NNInteraction::<f64>::zero(5, 2);
        for j in 0..2 {
            for i in 0..5 {
                phi.set_edge(j, i, (i + 1) % 5, 0.7);
                phi.set_edge(j, (i + 1) % 5, i, 0.7);
            }
        }
        let pat = Configuration::from_fn(Window::centered(&[3, 3]).unwrap(), 5, |s| s.l1());
        assert!((f_phi(&phi, &pat).unwrap() - 2.0 * 0.7).abs() < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let j: InteractionJson = serde_json::from_str(
            r#"{"r":3,"d":2,"site":{"1":0.5},"edge":{"1:0,1":2.0,"2:2,1":-1.0}}"#,
        )
        .unwrap();
        let AnyInteraction::Invariant(phi) = j.parse().unwrap() else { panic!() };
        assert_eq!(phi.site(1), 0.5);
        assert_eq!(phi.edge(0, 0, 1), 2.0);
        assert_eq!(phi.edge(1, 2, 1), -1.0);
        let back = InteractionJson::from(&phi);
        assert_eq!(back.edge.len(), 2);
        let j: InteractionJson =
            serde_json::from_str(r#"{"r":3,"d":2,"edge":{"1,-2:1:0,1":2.5}}"#).unwrap();
        let AnyInteraction::Positional(phi) = j.parse().unwrap() else { panic!() };
        assert_eq!(phi.edge_potential(&LatticeVector::from([1, -2]), 0, 0, 1), 2.5);
    }
}
