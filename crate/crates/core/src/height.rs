//! Height functions: integer lifts of `X_r` configurations and the surgery
//! on them (maximal extensions, flattening, patching).
//!
//! A height function on a window satisfies `|x̂_n - x̂_m| = 1` across every
//! edge. For `r ∉ {1, 2, 4}` each valid configuration has a lift, unique once
//! the value at one base site is chosen; for `r = 4` a lift exists exactly when
//! every plaquette condition holds.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{
    bracket, l1_sphere, plaquette_violations, Configuration, HomoclinicPair, LatticeVector,
    SiteMap, Violation, Window,
};

/// Integer heights on a window, together with the residue alphabet they reduce to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightFunction {
    pub window: Window,
    pub r: u32,
    pub values: Vec<i64>,
    pub base: LatticeVector,
    pub base_value: i64,
}

#[derive(Serialize, Deserialize)]
struct HeightJson {
    r: u32,
    dims: Vec<usize>,
    offset: Vec<i64>,
    cells: Vec<u32>,
    base: LatticeVector,
    base_value: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<i64>>,
}

impl Serialize for HeightFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HeightJson {
            r: self.r,
            dims: self.window.dims().to_vec(),
            offset: self.window.offset().0.clone(),
            cells: self.residues().cells,
            base: self.base.clone(),
            base_value: self.base_value,
            values: Some(self.values.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HeightFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = HeightJson::deserialize(d)?;
        let window = Window::new(LatticeVector(j.offset), j.dims).map_err(D::Error::custom)?;
        let config =
            Configuration::new(window.clone(), j.r, j.cells).map_err(D::Error::custom)?;
        match j.values {
            Some(values) => {
                let hf = HeightFunction::from_values(window, j.r, values)
                    .map_err(D::Error::custom)?;
                if hf.residues() != config {
                    return Err(D::Error::custom("heights do not reduce to the given cells"));
                }
                Ok(hf)
            }
            None => lift(&config, &j.base, j.base_value).map_err(D::Error::custom),
        }
    }
}

impl HeightFunction {
    /// Wraps raw heights, checking `|Δ| = 1` across every window edge.
    pub fn from_values(window: Window, r: u32, values: Vec<i64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(invalid("height vector length must match the window"));
        }
        if let Some((i, j, _)) = window
            .edges()
            .find(|&(i, j, _)| (values[i] - values[j]).abs() != 1)
        {
            return Err(Error::InvalidConfiguration(format!(
                "heights {} at {} and {} at {} are not adjacent integers",
                values[i],
                window.site(i),
                values[j],
                window.site(j)
            )));
        }
        let base = window.site(0);
        let base_value = values[0];
        Ok(HeightFunction {
            window,
            r,
            values,
            base,
            base_value,
        })
    }

    pub fn get(&self, site: &LatticeVector) -> Option<i64> {
        self.window.index_of(site).map(|i| self.values[i])
    }

    /// The configuration `x̂ mod r`.
    pub fn residues(&self) -> Configuration {
        Configuration {
            window: self.window.clone(),
            r: self.r,
            cells: self
                .values
                .iter()
                .map(|v| v.rem_euclid(self.r as i64) as u32)
                .collect(),
        }
    }

    pub fn with_values(&self, values: Vec<i64>) -> HeightFunction {
        let base_value = values[self.window.index_of(&self.base).unwrap_or(0)];
        HeightFunction {
            window: self.window.clone(),
            r: self.r,
            values,
            base: self.base.clone(),
            base_value,
        }
    }
}

/// Max, min and range of a height function over a site set, with the
/// lexicographically smallest sites attaining the extremes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeReport {
    pub max: i64,
    pub min: i64,
    pub range: i64,
    pub argmax: LatticeVector,
    pub argmin: LatticeVector,
}

pub fn range_over(hf: &HeightFunction, sites: &[LatticeVector]) -> Result<RangeReport> {
    let mut best: Option<RangeReport> = None;
    let mut sorted: Vec<&LatticeVector> = sites.iter().collect();
    sorted.sort();
    for s in sorted {
        let v = hf
            .get(s)
            .ok_or_else(|| invalid(format!("site {s} is outside the window")))?;
        match &mut best {
            None => {
                best = Some(RangeReport {
                    max: v,
                    min: v,
                    range: 0,
                    argmax: s.clone(),
                    argmin: s.clone(),
                })
            }
            Some(b) => {
                if v > b.max {
                    b.max = v;
                    b.argmax = s.clone();
                }
                if v < b.min {
                    b.min = v;
                    b.argmin = s.clone();
                }
                b.range = b.max - b.min;
            }
        }
    }
    best.ok_or_else(|| invalid("range over an empty site set"))
}

/// Why a breadth-first lift failed.
enum LiftFailure {
    Undefined(usize, usize),
    Inconsistent,
}

/// Breadth-first lift over an abstract graph: `h[v] = h[u] + [x_v - x_u]`.
/// Unreachable nodes stay `None`.
fn lift_graph(
    n: usize,
    neighbors: impl Fn(usize) -> Vec<usize>,
    value: impl Fn(usize) -> u32,
    r: u32,
    base: usize,
    base_value: i64,
) -> std::result::Result<Vec<Option<i64>>, LiftFailure> {
    let mut h: Vec<Option<i64>> = vec![None; n];
    h[base] = Some(base_value);
    let mut queue = VecDeque::from([base]);
    while let Some(u) = queue.pop_front() {
        let hu = h[u].expect("queued nodes are assigned");
        for v in neighbors(u) {
            let step = bracket(value(v), value(u), r).ok_or(LiftFailure::Undefined(u, v))?;
            match h[v] {
                None => {
                    h[v] = Some(hu + step);
                    queue.push_back(v);
                }
                Some(hv) if hv != hu + step => return Err(LiftFailure::Inconsistent),
                Some(_) => {}
            }
        }
    }
    Ok(h)
}

fn check_liftable_r(r: u32) -> Result<()> {
    if r <= 2 {
        return Err(Error::UnsupportedModel(format!(
            "height lifts need r >= 3 (r = {r} has no well-defined bracket)"
        )));
    }
    Ok(())
}

fn lift_failure(config: &Configuration, f: LiftFailure) -> Error {
    let w = &config.window;
    match f {
        LiftFailure::Undefined(u, v) => Error::InvalidConfiguration(format!(
            "values {} at {} and {} at {} do not differ by ±1 mod {}",
            config.cells[u],
            w.site(u),
            config.cells[v],
            w.site(v),
            config.r
        )),
        LiftFailure::Inconsistent => {
            match plaquette_violations(config, None).into_iter().next() {
                Some(Violation::Plaquette {
                    corner,
                    axes,
                    lhs,
                    rhs,
                }) => Error::PathDependence {
                    corner,
                    axes,
                    lhs,
                    rhs,
                },
                _ => Error::InvalidConfiguration("height lift is path dependent".into()),
            }
        }
    }
}

/// Lifts `config` to heights with `x̂(base) = base_value`.
///
/// `base_value` must reduce to the cell value at `base`.
pub fn lift(config: &Configuration, base: &LatticeVector, base_value: i64) -> Result<HeightFunction> {
    check_liftable_r(config.r)?;
    let w = &config.window;
    let b = w
        .index_of(base)
        .ok_or_else(|| invalid(format!("base {base} is outside the window")))?;
    if base_value.rem_euclid(config.r as i64) != config.cells[b] as i64 {
        return Err(invalid(format!(
            "base value {base_value} does not reduce to the cell value {} mod {}",
            config.cells[b], config.r
        )));
    }
    let h = lift_graph(
        w.len(),
        |u| w.neighbors(u).collect(),
        |u| config.cells[u],
        config.r,
        b,
        base_value,
    )
    .map_err(|f| lift_failure(config, f))?;
    Ok(HeightFunction {
        window: w.clone(),
        r: config.r,
        values: h.into_iter().map(|v| v.expect("windows are connected")).collect(),
        base: base.clone(),
        base_value,
    })
}

/// `grad(from, to)`: the sum of brackets `[x_{p_{k+1}} - x_{p_k}]` along any
/// in-window path from `from` to `to`.
pub fn grad(config: &Configuration, from: &LatticeVector, to: &LatticeVector) -> Result<i64> {
    let start = config
        .get(from)
        .ok_or_else(|| invalid(format!("site {from} is outside the window")))?;
    let hf = lift(config, from, start as i64)?;
    let end = hf
        .get(to)
        .ok_or_else(|| invalid(format!("site {to} is outside the window")))?;
    Ok(end - start as i64)
}

/// Lifts both halves of a pair from the first window site with a shared base
/// value, so the lifts agree on the whole collar.
pub fn lift_pair(pair: &HomoclinicPair) -> Result<(HeightFunction, HeightFunction)> {
    let w = pair.window();
    let base = w.site(0);
    let v = pair.x.cells[0] as i64;
    Ok((lift(&pair.x, &base, v)?, lift(&pair.y, &base, v)?))
}

/// Lifts a pattern on an explicit site set, breadth-first from `sites[base]`.
/// Fails if the induced graph is disconnected or the lift is path dependent.
pub fn lift_sites(
    r: u32,
    sites: &[LatticeVector],
    values: &[u32],
    base: usize,
    base_value: i64,
) -> Result<Vec<i64>> {
    check_liftable_r(r)?;
    let index: BTreeMap<&LatticeVector, usize> =
        sites.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let h = lift_graph(
        sites.len(),
        |u| {
            sites[u]
                .neighbors()
                .iter()
                .filter_map(|n| index.get(n).copied())
                .collect()
        },
        |u| values[u],
        r,
        base,
        base_value,
    )
    .map_err(|f| match f {
        LiftFailure::Undefined(u, v) => Error::InvalidConfiguration(format!(
            "values at {} and {} do not differ by ±1 mod {r}",
            sites[u], sites[v]
        )),
        LiftFailure::Inconsistent => {
            Error::InvalidConfiguration("height lift is path dependent on the region".into())
        }
    })?;
    h.into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| Error::NoPath {
                from: sites[base].clone(),
                to: sites[i].clone(),
            })
        })
        .collect()
}

/// The pointwise maximal height extension to `F` of heights given on `∂F`:
/// `ŷ_n = min_{k ∈ ∂F} (x̂_k + ‖n - k‖₁)`. Returns heights on `F ∪ ∂F`.
pub fn max_height(boundary: &SiteMap<i64>, region: &[LatticeVector]) -> Result<SiteMap<i64>> {
    let f: BTreeSet<&LatticeVector> = region.iter().collect();
    if let Some(s) = boundary.keys().find(|s| f.contains(s)) {
        return Err(invalid(format!("boundary data given at {s}, which lies inside F")));
    }
    let bd = crate::lattice::boundary(region);
    let mut known: Vec<(&LatticeVector, i64)> = Vec::with_capacity(bd.len());
    for s in &bd {
        let v = boundary
            .get(s)
            .ok_or_else(|| invalid(format!("no boundary height at {s}")))?;
        known.push((s, *v));
    }
    for (a, (sa, ha)) in known.iter().enumerate() {
        for (sb, hb) in &known[a + 1..] {
            let dist = sa.l1_dist(sb);
            if (ha - hb).abs() > dist || (ha - hb - dist).rem_euclid(2) != 0 {
                return Err(Error::Infeasible(format!(
                    "heights {ha} at {sa} and {hb} at {sb} are incompatible at distance {dist}"
                )));
            }
        }
    }
    let mut out: SiteMap<i64> = known.iter().map(|(s, v)| ((*s).clone(), *v)).collect();
    for n in region {
        let v = known
            .iter()
            .map(|(k, hk)| hk + n.l1_dist(k))
            .min()
            .ok_or_else(|| Error::Infeasible("F has an empty boundary".into()))?;
        out.insert(n.clone(), v);
    }
    for (s, v) in &out {
        for nb in s.neighbors() {
            if let Some(w) = out.get(&nb) {
                if (v - w).abs() != 1 {
                    return Err(Error::Infeasible(format!(
                        "the extension is not a height function across {s}-{nb}"
                    )));
                }
            }
        }
    }
    Ok(out)
}

/// One single-site move of a height function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightStep {
    pub site: LatticeVector,
    pub delta: i64,
}

fn region_indices(w: &Window, region: &[LatticeVector]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut f = Vec::with_capacity(region.len());
    for s in region {
        f.push(
            w.index_of(s)
                .ok_or_else(|| invalid(format!("site {s} of F is outside the window")))?,
        );
    }
    f.sort_unstable();
    f.dedup();
    let mut bd = Vec::new();
    for s in crate::lattice::boundary(region) {
        bd.push(
            w.index_of(&s)
                .ok_or_else(|| invalid(format!("boundary site {s} of F is outside the window")))?,
        );
    }
    bd.sort_unstable();
    Ok((f, bd))
}

/// Flattens a steep height function inside `F` with `∂F` fixed.
///
/// Requires `Range_{∂F} > 2`; afterwards `Range_F = Range_{∂F} - 2`.
pub fn steep_to_flat(hf: &HeightFunction, region: &[LatticeVector]) -> Result<HeightFunction> {
    steep_to_flat_traced(hf, region).map(|(h, _)| h)
}

/// [`steep_to_flat`] together with the single-site moves it made.
///
/// Each move shifts a site of `F` that is extremal over `F ∪ ∂F` by `∓2`,
/// preferring the lexicographically smallest site and lowering maxima before
/// raising minima. Every move strictly decreases
/// `κ = Σ_{n∈F} max(x̂_n - T + 1, B - x̂_n + 1, 0)` where `T`, `B` are the max
/// and min over `∂F`.
pub fn steep_to_flat_traced(
    hf: &HeightFunction,
    region: &[LatticeVector],
) -> Result<(HeightFunction, Vec<HeightStep>)> {
    if region.is_empty() {
        return Err(invalid("F must be non-empty"));
    }
    let w = &hf.window;
    let (f, bd) = region_indices(w, region)?;
    let top = bd.iter().map(|&i| hf.values[i]).max().expect("non-empty boundary");
    let bottom = bd.iter().map(|&i| hf.values[i]).min().expect("non-empty boundary");
    if top - bottom <= 2 {
        return Err(Error::Precondition(format!(
            "steep_to_flat needs Range over the boundary > 2, measured {}",
            top - bottom
        )));
    }
    let mut vals = hf.values.clone();
    let mut steps = Vec::new();
    loop {
        let hi = f
            .iter()
            .chain(&bd)
            .map(|&i| vals[i])
            .max()
            .expect("non-empty");
        let lo = f
            .iter()
            .chain(&bd)
            .map(|&i| vals[i])
            .min()
            .expect("non-empty");
        let (site, delta) = if let Some(&i) = f.iter().find(|&&i| vals[i] == hi) {
            (i, -2)
        } else if let Some(&i) = f.iter().find(|&&i| vals[i] == lo) {
            (i, 2)
        } else {
            break;
        };
        vals[site] += delta;
        steps.push(HeightStep {
            site: w.site(site),
            delta,
        });
    }
    Ok((hf.with_values(vals), steps))
}

/// Moves `from` onto `to` one site at a time: while some site is too high,
/// lower the highest such site (lexicographically smallest on ties) by 2,
/// otherwise raise the lowest too-low site by 2. Every intermediate stage is
/// a height function and the number of moves is `Σ|from - to| / 2`.
pub fn pivot_path(window: &Window, from: &[i64], to: &[i64]) -> Result<Vec<(usize, i64)>> {
    for vals in [from, to] {
        if vals.len() != window.len() {
            return Err(invalid("height vector length must match the window"));
        }
        if window.edges().any(|(i, j, _)| (vals[i] - vals[j]).abs() != 1) {
            return Err(Error::InvalidConfiguration("not a height function".into()));
        }
    }
    if let Some(i) = (0..from.len()).find(|&i| (from[i] - to[i]).rem_euclid(2) != 0) {
        return Err(invalid(format!(
            "heights differ by an odd amount at {}",
            window.site(i)
        )));
    }
    let mut cur = from.to_vec();
    let mut steps = Vec::new();
    loop {
        let above = (0..cur.len())
            .filter(|&i| cur[i] > to[i])
            .max_by(|&a, &b| cur[a].cmp(&cur[b]).then(b.cmp(&a)));
        let (site, delta) = match above {
            Some(i) => (i, -2),
            None => match (0..cur.len())
                .filter(|&i| cur[i] < to[i])
                .min_by(|&a, &b| cur[a].cmp(&cur[b]).then(a.cmp(&b)))
            {
                Some(i) => (i, 2),
                None => break,
            },
        };
        debug_assert!(window
            .neighbors(site)
            .all(|j| cur[j] == cur[site] + delta / 2));
        cur[site] += delta;
        steps.push((site, delta));
    }
    Ok(steps)
}

fn ring_range(hf: &HeightFunction, radius: usize) -> Result<RangeReport> {
    range_over(hf, &l1_sphere(radius, hf.window.d()))
}

/// Flat extension around `D_N`: with `2M = Range_{∂D_N}`, returns a height
/// function equal to `hf` on `D_{N+1}` whose range on `∂D_{N+k}` is `2M - 2k`
/// for `k = 0..=M`; beyond `D_{N+1+M}` it continues as a flat two-valued chessboard.
pub fn flat_extension(hf: &HeightFunction, n: usize) -> Result<HeightFunction> {
    flat_extension_traced(hf, n).map(|(h, _)| h)
}

/// [`flat_extension`] plus the single-site `±2` moves turning `hf` into the result.
///
/// The target clamps `x̂` between the cones `B - (N+1) + ‖v‖₁` and
/// `T + (N+1) - ‖v‖₁` (the extremes of `x̂` on `∂D_N`), which pins `∂D_N`
/// and everything inside while shrinking the range by 2 per ring.
pub fn flat_extension_traced(
    hf: &HeightFunction,
    n: usize,
) -> Result<(HeightFunction, Vec<HeightStep>)> {
    let d = hf.window.d();
    if !hf.window.contains_window(&Window::cube(n + 1, d)) {
        return Err(invalid(format!("window must contain D_{}", n + 1)));
    }
    let rr = ring_range(hf, n + 1)?;
    let m = (rr.range / 2) as usize;
    let outer = n + 1 + m;
    if !hf.window.contains_window(&Window::cube(outer, d)) {
        return Err(invalid(format!(
            "Range on the boundary of D_{n} is {}, so the window must contain D_{outer}",
            rr.range
        )));
    }
    let (top, bottom) = (rr.max, rr.min);
    let flat = top - m as i64;
    let w = &hf.window;
    let target: Vec<i64> = (0..w.len())
        .map(|i| {
            let norm = w.site(i).l1();
            if norm > outer as i64 {
                flat + (norm - outer as i64).rem_euclid(2)
            } else {
                let upper = top + (n as i64 + 1) - norm;
                let lower = bottom - (n as i64 + 1) + norm;
                hf.values[i].min(upper).max(lower)
            }
        })
        .collect();
    let steps = pivot_path(w, &hf.values, &target)?
        .into_iter()
        .map(|(i, delta)| HeightStep {
            site: w.site(i),
            delta,
        })
        .collect();
    Ok((hf.with_values(target), steps))
}

/// Which copy of `x` a patch installs on `D_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchCase {
    /// `z = x` on `D_N`.
    Direct,
    /// `z_n = x_{n+e_1}` on `D_N`; needed when `r` is even and `x - y` is odd.
    Shifted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchOutput {
    pub z: Configuration,
    pub case: PatchCase,
    /// Multiple of `r` added to the lift of `x` before gluing.
    pub shift: i64,
}

/// Glues `x` (on `D_N`) into `y` (outside `D_{2N+2r+k+1}`), provided `ŷ` has
/// range at most `2k` on `∂D_{2N+2r+k+1}`.
///
/// The lift of `x` is moved by a multiple of `r` to sit near the centre of
/// `ŷ` on that ring, and the annulus in between is filled with the maximal
/// height extension. The lift of the result agrees with `ŷ` exactly outside
/// the ring's interior.
pub fn patch(x: &Configuration, y: &Configuration, n: usize, k: usize) -> Result<PatchOutput> {
    let r = y.r;
    if r <= 2 || r == 4 {
        return Err(Error::UnsupportedModel(format!(
            "patching needs r outside {{1, 2, 4}}, got {r}"
        )));
    }
    if x.r != r {
        return Err(invalid("x and y must share r"));
    }
    let d = y.window.d();
    if x.window.d() != d {
        return Err(invalid("x and y must share the dimension"));
    }
    let radius = 2 * n + 2 * r as usize + k + 1;
    if !y.window.contains_window(&Window::cube(radius + 1, d)) {
        return Err(invalid(format!("y's window must contain D_{}", radius + 1)));
    }
    if !x.window.contains_window(&Window::cube(n + 1, d)) {
        return Err(invalid(format!("x's window must contain D_{}", n + 1)));
    }
    let base = y.window.site(0);
    let yh = lift(y, &base, y.cells[0] as i64)?;
    let ring = l1_sphere(radius + 1, d);
    let rr = range_over(&yh, &ring)?;
    if rr.range > 2 * k as i64 {
        return Err(Error::Precondition(format!(
            "Range of y's lift on the boundary of D_{radius} is {}, more than 2k = {}",
            rr.range,
            2 * k
        )));
    }
    let origin = LatticeVector::zero(d);
    let xh = lift(x, &origin, x.get(&origin).expect("origin in window") as i64)?;
    let x0 = x.get(&origin).expect("origin in window") as i64;
    let y0 = y.get(&origin).expect("origin in window") as i64;
    let case = if r % 2 == 1 || (x0 - y0).rem_euclid(2) == 0 {
        PatchCase::Direct
    } else {
        PatchCase::Shifted
    };
    let e1 = LatticeVector::unit(d, 0, 1);
    let inner = crate::lattice::l1_ball(n, d);
    let w_lift: Vec<i64> = inner
        .iter()
        .map(|s| match case {
            PatchCase::Direct => xh.get(s).expect("D_N in x's window"),
            PatchCase::Shifted => xh.get(&s.add(&e1)).expect("D_{N+1} in x's window"),
        })
        .collect();
    let w_hi = *w_lift.iter().max().expect("D_N non-empty");
    let w_lo = *w_lift.iter().min().expect("D_N non-empty");
    // Work in doubled units so the two centres are integers.
    let gap2 = (rr.max + rr.min) - (w_hi + w_lo);
    let y_origin_parity = yh.get(&origin).expect("origin in window");
    let w_origin = w_lift[inner.iter().position(|s| s == &origin).expect("origin in D_N")];
    let t0 = gap2.div_euclid(2 * r as i64);
    let shift = (t0 - 2..=t0 + 3)
        .map(|t| t * r as i64)
        .filter(|s| (w_origin + s - y_origin_parity).rem_euclid(2) == 0)
        .min_by_key(|s| (2 * s - gap2).abs())
        .ok_or_else(|| Error::Precondition("no parity-compatible shift".into()))?;

    let annulus: Vec<LatticeVector> = crate::lattice::l1_ball(radius, d)
        .into_iter()
        .filter(|s| s.l1() > n as i64)
        .collect();
    let inner_lift: BTreeMap<&LatticeVector, i64> =
        inner.iter().zip(&w_lift).map(|(s, v)| (s, v + shift)).collect();
    let mut bdata = SiteMap::new();
    for s in crate::lattice::boundary(&annulus) {
        let v = match inner_lift.get(&s) {
            Some(v) => *v,
            None => yh.get(&s).expect("outer ring in y's window"),
        };
        bdata.insert(s, v);
    }
    let filled = max_height(&bdata, &annulus)?;
    let mut values = yh.values.clone();
    for (s, v) in inner_lift.iter().map(|(s, v)| (*s, *v)).chain(
        filled.iter().map(|(s, v)| (s, *v)),
    ) {
        values[y.window.index_of(s).expect("inside y's window")] = v;
    }
    let zh = HeightFunction::from_values(y.window.clone(), r, values)?;
    Ok(PatchOutput {
        z: zh.residues(),
        case,
        shift,
    })
}

/// Fixture generator: a valid `X_r` configuration obtained from the flat
/// chessboard lift by `moves` random local-extremum flips.
pub fn random_configuration<R: Rng>(window: &Window, r: u32, moves: usize, rng: &mut R) -> Configuration {
    let mut h: Vec<i64> = window.sites().map(|s| s.l1().rem_euclid(2)).collect();
    random_flips(window, &mut h, moves, rng, |_| true);
    Configuration::from_fn(window.clone(), r, |s| h[window.index_of(s).expect("in window")])
}

/// Fixture generator: a partner of `x` agreeing with it on the width-1
/// collar, produced by `moves` random flips on interior sites.
pub fn random_partner<R: Rng>(x: &Configuration, moves: usize, rng: &mut R) -> Result<Configuration> {
    let w = &x.window;
    let base = w.site(0);
    let mut h = lift(x, &base, x.cells[0] as i64)?.values;
    random_flips(w, &mut h, moves, rng, |i| !w.in_collar(i, 1));
    Ok(Configuration::from_fn(w.clone(), x.r, |s| h[w.index_of(s).expect("in window")]))
}

fn random_flips<R: Rng>(
    w: &Window,
    h: &mut [i64],
    moves: usize,
    rng: &mut R,
    allowed: impl Fn(usize) -> bool,
) {
    let candidates: Vec<usize> = (0..w.len()).filter(|&i| allowed(i)).collect();
    if candidates.is_empty() {
        return;
    }
    let mut done = 0;
    let mut tries = 0;
    while done < moves && tries < 50 * moves + 100 {
        tries += 1;
        let i = candidates[rng.gen_range(0..candidates.len())];
        let mut nb = w.neighbors(i).map(|j| h[j] - h[i]);
        let first = nb.next();
        let Some(step) = first else { continue };
        if nb.all(|s| s == step) {
            h[i] += 2 * step;
            done += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_pair, Model};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn l1_config(dims: &[usize], r: u32) -> Configuration {
        Configuration::from_fn(Window::centered(dims).unwrap(), r, |s| s.l1())
    }

    #[test]
    fn lift_of_diagonal_pattern() {
        let c = Configuration::from_fn(Window::centered(&[5, 5]).unwrap(), 5, |s| s.0[0] + s.0[1]);
        let hf = lift(&c, &LatticeVector::zero(2), 0).unwrap();
        for s in c.window.sites() {
            assert_eq!(hf.get(&s), Some(s.0[0] + s.0[1]));
        }
        assert_eq!(grad(&c, &LatticeVector::zero(2), &LatticeVector::from([2, 1])).unwrap(), 3);
    }

    #[test]
    fn lift_rejects_bad_base_value_and_r2() {
        let c = l1_config(&[3, 3], 3);
        assert!(lift(&c, &LatticeVector::zero(2), 1).is_err());
        let c2 = l1_config(&[3, 3], 2);
        assert!(matches!(
            lift(&c2, &LatticeVector::zero(2), 0),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn x4_counterexample_is_path_dependent() {
        let mut z = Configuration::from_fn(Window::centered(&[3, 3]).unwrap(), 4, |s| s.0[0] + s.0[1]);
        z.set(&LatticeVector::zero(2), 2).unwrap();
        assert!(matches!(
            lift(&z, &LatticeVector::from([-1, -1]), 2),
            Err(Error::PathDependence { .. })
        ));
    }

    #[test]
    fn lift_pair_single_site_raise() {
        let x = l1_config(&[5, 5], 3);
        let mut y = x.clone();
        y.set(&LatticeVector::zero(2), 2).unwrap();
        let pair = make_pair(x, y).unwrap();
        let (xh, yh) = lift_pair(&pair).unwrap();
        let o = LatticeVector::zero(2);
        // Brute force: ŷ_0 must sit one away from each neighbour height and reduce to 2.
        let nb = xh.get(&LatticeVector::from([1, 0])).unwrap();
        let candidates: Vec<i64> = [nb - 1, nb + 1]
            .into_iter()
            .filter(|v| v.rem_euclid(3) == 2)
            .collect();
        assert_eq!(candidates, vec![yh.get(&o).unwrap()]);
        assert_eq!(yh.get(&o).unwrap() - xh.get(&o).unwrap(), 2);
        for i in 0..xh.values.len() {
            if xh.window.site(i) != o {
                assert_eq!(xh.values[i], yh.values[i]);
            }
        }
    }

    #[test]
    fn max_height_single_site() {
        let mut b = SiteMap::new();
        for s in LatticeVector::zero(2).neighbors() {
            b.insert(s, 1);
        }
        let out = max_height(&b, &[LatticeVector::zero(2)]).unwrap();
        assert_eq!(out[&LatticeVector::zero(2)], 2);
    }

    #[test]
    fn max_height_detects_infeasible_boundary() {
        let mut b = SiteMap::new();
        let nb = LatticeVector::zero(2).neighbors();
        b.insert(nb[0].clone(), 0);
        b.insert(nb[1].clone(), 4);
        b.insert(nb[2].clone(), 0);
        b.insert(nb[3].clone(), 0);
        assert!(matches!(
            max_height(&b, &[LatticeVector::zero(2)]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn steep_to_flat_on_a_cone() {
        // x̂_n = n_1 + n_2 on 7x7: a tilted plane, range 8 on ∂D_2-ish box boundary.
        let w = Window::centered(&[7, 7]).unwrap();
        let c = Configuration::from_fn(w.clone(), 5, |s| s.0[0] + s.0[1]);
        let hf = lift(&c, &LatticeVector::zero(2), 0).unwrap();
        let f: Vec<LatticeVector> = w.interior(1).unwrap().sites().collect();
        let bd = crate::lattice::boundary(&f);
        let before = range_over(&hf, &bd).unwrap().range;
        let (out, steps) = steep_to_flat_traced(&hf, &f).unwrap();
        assert_eq!(range_over(&out, &f).unwrap().range, before - 2);
        assert_eq!(range_over(&out, &bd).unwrap().range, before);
        let mut cur = hf.clone();
        for st in &steps {
            let i = w.index_of(&st.site).unwrap();
            cur.values[i] += st.delta;
            assert!(HeightFunction::from_values(w.clone(), 5, cur.values.clone()).is_ok());
        }
        assert_eq!(cur.values, out.values);
    }

    #[test]
    fn steep_to_flat_needs_range_above_two() {
        let w = Window::centered(&[5, 5]).unwrap();
        let c = Configuration::from_fn(w.clone(), 3, |s| s.l1());
        let hf = lift(&c, &LatticeVector::zero(2), 0).unwrap();
        assert!(matches!(
            steep_to_flat(&hf, &[LatticeVector::zero(2)]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn flat_extension_shrinks_ring_ranges() {
        // Range 2 on ∂D_1 (M = 1): heights n_1 + n_2 near the origin.
        let w = Window::centered(&[9, 9]).unwrap();
        let c = Configuration::from_fn(w.clone(), 3, |s| s.0[0] + s.0[1]);
        let hf = lift(&c, &LatticeVector::zero(2), 0).unwrap();
        let n = 0;
        let (out, steps) = flat_extension_traced(&hf, n).unwrap();
        assert_eq!(ring_range(&hf, 1).unwrap().range, 2);
        assert_eq!(ring_range(&out, 1).unwrap().range, 2);
        assert_eq!(ring_range(&out, 2).unwrap().range, 0);
        for s in crate::lattice::l1_ball(n + 1, 2) {
            assert_eq!(out.get(&s), hf.get(&s));
        }
        let mut cur = hf.values.clone();
        for st in steps {
            cur[w.index_of(&st.site).unwrap()] += st.delta;
            assert!(HeightFunction::from_values(w.clone(), 3, cur.clone()).is_ok());
        }
        assert_eq!(cur, out.values);
        assert!(Model::Xr.validate(&out.residues()).unwrap().valid);
    }

    #[test]
    fn patch_glues_random_x_into_flat_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, k, r) = (2usize, 1usize, 3u32);
        let radius = 2 * n + 2 * r as usize + k + 1;
        let yw = Window::cube(radius + 2, 2);
        let y = Configuration::from_fn(yw.clone(), r, |s| s.l1().rem_euclid(2));
        let x = random_configuration(&Window::cube(n + 2, 2), r, 200, &mut rng);
        let out = patch(&x, &y, n, k).unwrap();
        assert_eq!(out.case, PatchCase::Direct);
        assert!(Model::Xr.validate(&out.z).unwrap().valid);
        for s in crate::lattice::l1_ball(n, 2) {
            assert_eq!(out.z.get(&s), x.get(&s));
        }
        for s in yw.sites().filter(|s| s.l1() > radius as i64) {
            assert_eq!(out.z.get(&s), y.get(&s));
        }
    }

    #[test]
    fn patch_rejects_steep_y() {
        let (n, k, r) = (1usize, 1usize, 3u32);
        let radius = 2 * n + 2 * r as usize + k + 1;
        let y = Configuration::from_fn(Window::cube(radius + 1, 2), r, |s| s.0[0] + s.0[1]);
        let x = l1_config(&[5, 5], 3);
        assert!(matches!(patch(&x, &y, n, k), Err(Error::Precondition(_))));
    }

    #[test]
    fn random_partner_is_homoclinic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = Window::centered(&[7, 7]).unwrap();
        let x = random_configuration(&w, 5, 100, &mut rng);
        let y = random_partner(&x, 30, &mut rng).unwrap();
        assert!(Model::Xr.validate(&x).unwrap().valid);
        assert!(Model::Xr.validate(&y).unwrap().valid);
        make_pair(x, y).unwrap();
    }
}
