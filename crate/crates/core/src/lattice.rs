//! Sites, box windows, configurations and the local rules they are judged by.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of `Z^d`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(pub Vec<i64>);

impl LatticeVector {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticeVector(coords)
    }

    pub fn zero(d: usize) -> Self {
        LatticeVector(vec![0; d])
    }

    /// `sign * e_axis` in dimension `d`.
    pub fn unit(d: usize, axis: usize, sign: i64) -> Self {
        let mut v = vec![0; d];
        v[axis] = sign;
        LatticeVector(v)
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn linf(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn l1_dist(&self, other: &LatticeVector) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// The `2d` nearest neighbours, ordered `+e_0, -e_0, +e_1, -e_1, …`.
    pub fn neighbors(&self) -> Vec<LatticeVector> {
        let mut out = Vec::with_capacity(2 * self.d());
        for axis in 0..self.d() {
            for sign in [1, -1] {
                let mut v = self.0.clone();
                v[axis] += sign;
                out.push(LatticeVector(v));
            }
        }
        out
    }
}

impl fmt::Debug for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for LatticeVector {
    type Err = Error;

    /// Parses `"1,-2"` or `"(1,-2)"`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = t
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("bad lattice vector {s:?}: {e}")))?;
        if coords.is_empty() {
            return Err(invalid("empty lattice vector"));
        }
        Ok(LatticeVector(coords))
    }
}

impl<const N: usize> From<[i64; N]> for LatticeVector {
    fn from(a: [i64; N]) -> Self {
        LatticeVector(a.to_vec())
    }
}

/// An axis-aligned box `offset + [0, dims_0) × … × [0, dims_{d-1})`.
///
/// Cells are stored row-major: the last coordinate varies fastest, so
/// index order is lexicographic order of sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    offset: LatticeVector,
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Window {
    pub fn new(offset: LatticeVector, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.len() != offset.d() {
            return Err(invalid("window offset and dims must have the same positive length"));
        }
        if dims.contains(&0) {
            return Err(invalid("window dims must be positive"));
        }
        let mut strides = vec![1; dims.len()];
        for a in (0..dims.len() - 1).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        Ok(Window {
            offset,
            dims,
            strides,
        })
    }

    /// A box of the given dims placed so the origin sits at its centre
    /// (offset `-(dims-1)/2` on every axis).
    pub fn centered(dims: &[usize]) -> Result<Self> {
        let offset = dims.iter().map(|&n| -((n as i64 - 1) / 2)).collect();
        Window::new(LatticeVector(offset), dims.to_vec())
    }

    /// The cube `[-radius, radius]^d`, the smallest box containing `D_radius`.
    pub fn cube(radius: usize, d: usize) -> Self {
        let side = 2 * radius + 1;
        Window::new(LatticeVector(vec![-(radius as i64); d]), vec![side; d])
            .expect("cube has positive dims")
    }

    pub fn offset(&self) -> &LatticeVector {
        &self.offset
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: &LatticeVector) -> bool {
        self.index_of(site).is_some()
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        other.d() == self.d()
            && (0..self.d()).all(|a| {
                other.offset.0[a] >= self.offset.0[a]
                    && other.offset.0[a] + other.dims[a] as i64
                        <= self.offset.0[a] + self.dims[a] as i64
            })
    }

    pub fn index_of(&self, site: &LatticeVector) -> Option<usize> {
        if site.d() != self.d() {
            return None;
        }
        let mut idx = 0;
        for a in 0..self.d() {
            let rel = site.0[a] - self.offset.0[a];
            if rel < 0 || rel >= self.dims[a] as i64 {
                return None;
            }
            idx += rel as usize * self.strides[a];
        }
        Some(idx)
    }

    /// Relative coordinate of `idx` along `axis`.
    pub fn coord(&self, idx: usize, axis: usize) -> usize {
        (idx / self.strides[axis]) % self.dims[axis]
    }

    pub fn site(&self, idx: usize) -> LatticeVector {
        LatticeVector(
            (0..self.d())
                .map(|a| self.offset.0[a] + self.coord(idx, a) as i64)
                .collect(),
        )
    }

    /// Index of `idx + sign * e_axis`, if it lies in the window.
    pub fn neighbor(&self, idx: usize, axis: usize, sign: i64) -> Option<usize> {
        let c = self.coord(idx, axis);
        if sign > 0 {
            (c + 1 < self.dims[axis]).then(|| idx + self.strides[axis])
        } else {
            (c > 0).then(|| idx - self.strides[axis])
        }
    }

    /// In-window neighbours of `idx`.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.d()).flat_map(move |a| {
            [1, -1]
                .into_iter()
                .filter_map(move |s| self.neighbor(idx, a, s))
        })
    }

    /// Distance from `idx` to the nearest face of the box, in cells.
    pub fn depth(&self, idx: usize) -> usize {
        (0..self.d())
            .map(|a| {
                let c = self.coord(idx, a);
                c.min(self.dims[a] - 1 - c)
            })
            .min()
            .unwrap_or(0)
    }

    pub fn in_collar(&self, idx: usize, width: usize) -> bool {
        self.depth(idx) < width
    }

    /// The box with `width` cells stripped from every face.
    pub fn interior(&self, width: usize) -> Option<Window> {
        if self.dims.iter().any(|&n| n <= 2 * width) {
            return None;
        }
        let offset = self.offset.0.iter().map(|o| o + width as i64).collect();
        let dims = self.dims.iter().map(|n| n - 2 * width).collect();
        Window::new(LatticeVector(offset), dims).ok()
    }

    pub fn translate(&self, by: &LatticeVector) -> Window {
        Window::new(self.offset.add(by), self.dims.clone()).expect("same dims")
    }

    pub fn sites(&self) -> impl Iterator<Item = LatticeVector> + '_ {
        (0..self.len()).map(|i| self.site(i))
    }

    /// Every in-window edge as `(low, high, axis)` with `high = low + e_axis`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.len()).flat_map(move |i| {
            (0..self.d()).filter_map(move |a| self.neighbor(i, a, 1).map(|j| (i, j, a)))
        })
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        write!(f, "{}@{}", dims.join("x"), self.offset)
    }
}

/// Parses `"9x9"` (centred on the origin) or `"9x9@-4,-4"` (explicit offset).
impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (dims_part, offset_part) = match s.split_once('@') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let dims = dims_part
            .split('x')
            .map(|n| n.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("bad window {s:?}: {e}")))?;
        match offset_part {
            Some(o) => Window::new(o.parse()?, dims),
            None => Window::centered(&dims),
        }
    }
}

/// Sites of the `ℓ¹` ball `D_n = {v : ‖v‖₁ ≤ n}` in lexicographic order.
pub fn l1_ball(n: usize, d: usize) -> Vec<LatticeVector> {
    Window::cube(n, d)
        .sites()
        .filter(|v| v.l1() <= n as i64)
        .collect()
}

/// Sites with `‖v‖₁ = n`; this is `∂D_{n-1}` for `n ≥ 1`.
pub fn l1_sphere(n: usize, d: usize) -> Vec<LatticeVector> {
    Window::cube(n, d)
        .sites()
        .filter(|v| v.l1() == n as i64)
        .collect()
}

/// The `ℓ^∞` ball `B_r = [-r, r]^d` as a window.
pub fn linf_ball(radius: usize, d: usize) -> Window {
    Window::cube(radius, d)
}

/// Outer boundary `∂F`: sites outside `F` adjacent to some site of `F`, sorted.
pub fn boundary(sites: &[LatticeVector]) -> Vec<LatticeVector> {
    let set: BTreeSet<&LatticeVector> = sites.iter().collect();
    let mut out = BTreeSet::new();
    for s in sites {
        for n in s.neighbors() {
            if !set.contains(&n) {
                out.insert(n);
            }
        }
    }
    out.into_iter().collect()
}

/// `[a - b]` in `Z_r`: `+1` when `a - b ≡ 1`, `-1` when `a - b ≡ -1`, otherwise
/// undefined. For `r = 2` both cases coincide and `+1` is returned.
pub fn bracket(a: u32, b: u32, r: u32) -> Option<i64> {
    let diff = (a as i64 - b as i64).rem_euclid(r as i64);
    if diff == 1 % r as i64 {
        Some(1)
    } else if diff == r as i64 - 1 {
        Some(-1)
    } else {
        None
    }
}

/// A pattern on a box window with values in `{0, …, r-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationJson", into = "ConfigurationJson")]
pub struct Configuration {
    pub window: Window,
    pub r: u32,
    pub cells: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct ConfigurationJson {
    r: u32,
    dims: Vec<usize>,
    offset: Vec<i64>,
    cells: Vec<u32>,
}

impl TryFrom<ConfigurationJson> for Configuration {
    type Error = Error;

    fn try_from(j: ConfigurationJson) -> Result<Self> {
        let window = Window::new(LatticeVector(j.offset), j.dims)?;
        Configuration::new(window, j.r, j.cells)
    }
}

impl From<Configuration> for ConfigurationJson {
    fn from(c: Configuration) -> Self {
        ConfigurationJson {
            r: c.r,
            dims: c.window.dims().to_vec(),
            offset: c.window.offset().0.clone(),
            cells: c.cells,
        }
    }
}

impl Configuration {
    pub fn new(window: Window, r: u32, cells: Vec<u32>) -> Result<Self> {
        if r == 0 {
            return Err(invalid("alphabet size r must be positive"));
        }
        if cells.len() != window.len() {
            return Err(invalid(format!(
                "window has {} cells but {} values were given",
                window.len(),
                cells.len()
            )));
        }
        if let Some(v) = cells.iter().find(|&&v| v >= r) {
            return Err(invalid(format!("cell value {v} is outside Z_{r}")));
        }
        Ok(Configuration { window, r, cells })
    }

    /// Builds a configuration by evaluating `f` at every site; values are reduced mod `r`.
    pub fn from_fn(window: Window, r: u32, mut f: impl FnMut(&LatticeVector) -> i64) -> Self {
        let cells = window
            .sites()
            .map(|s| f(&s).rem_euclid(r as i64) as u32)
            .collect();
        Configuration { window, r, cells }
    }

    /// Two-dimensional convenience constructor: `rows[i][j]` is the value at
    /// `offset + (i, j)`.
    pub fn from_rows(offset: LatticeVector, r: u32, rows: &[Vec<u32>]) -> Result<Self> {
        let h = rows.len();
        let w = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != w) {
            return Err(invalid("ragged rows"));
        }
        let window = Window::new(offset, vec![h, w])?;
        Configuration::new(window, r, rows.concat())
    }

    pub fn get(&self, site: &LatticeVector) -> Option<u32> {
        self.window.index_of(site).map(|i| self.cells[i])
    }

    pub fn set(&mut self, site: &LatticeVector, value: u32) -> Result<()> {
        let i = self
            .window
            .index_of(site)
            .ok_or_else(|| invalid(format!("site {site} is outside the window")))?;
        if value >= self.r {
            return Err(invalid(format!("value {value} is outside Z_{}", self.r)));
        }
        self.cells[i] = value;
        Ok(())
    }

    /// The shift `(σ_v x)_n = x_{n+v}`, carried on the translated window.
    pub fn shift(&self, v: &LatticeVector) -> Configuration {
        Configuration {
            window: self.window.translate(&LatticeVector(v.0.iter().map(|c| -c).collect())),
            r: self.r,
            cells: self.cells.clone(),
        }
    }

    /// Indices at which two configurations on the same window differ.
    pub fn diff_indices(&self, other: &Configuration) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i] != other.cells[i])
            .collect()
    }
}

/// One failed local constraint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Values `values[0]` at `sites[0]` and `values[1]` at `sites[1] = sites[0] + e_axis`.
    Edge {
        sites: [LatticeVector; 2],
        axis: usize,
        values: [u32; 2],
    },
    /// The two bracket sums around the plaquette spanned by `e_axes[0], e_axes[1]` at `corner`.
    Plaquette {
        corner: LatticeVector,
        axes: [usize; 2],
        lhs: i64,
        rhs: i64,
    },
    /// Adjacent graph vertices sharing a colour, or a colour out of range.
    Coloring { vertices: Vec<usize>, colors: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidityReport {
            valid: violations.is_empty(),
            violations,
        }
    }
}

/// A finite simple graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: usize,
    edges: Vec<[usize; 2]>,
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut edges = Vec::new();
        for (u, nb) in self.adjacency.iter().enumerate() {
            for &v in nb {
                if u < v {
                    edges.push([u, v]);
                }
            }
        }
        GraphJson {
            vertices: self.adjacency.len(),
            edges,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = GraphJson::deserialize(d)?;
        Graph::from_edges(j.vertices, &j.edges).map_err(serde::de::Error::custom)
    }
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[[usize; 2]]) -> Result<Self> {
        let mut adjacency = vec![BTreeSet::new(); n];
        for &[u, v] in edges {
            if u >= n || v >= n || u == v {
                return Err(invalid(format!("bad edge {u}-{v} for a graph on {n} vertices")));
            }
            adjacency[u].insert(v);
            adjacency[v].insert(u);
        }
        Ok(Graph {
            adjacency: adjacency.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// The nearest-neighbour graph of a window, vertex `i` being cell `i`.
    pub fn lattice(window: &Window) -> Self {
        let edges: Vec<[usize; 2]> = window.edges().map(|(a, b, _)| [a, b]).collect();
        Graph::from_edges(window.len(), &edges).expect("window edges are simple")
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).max().unwrap_or(0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Monochromatic edges and out-of-range colours.
    pub fn coloring_violations(&self, colors: &[u32], n_colors: u32) -> Vec<Violation> {
        let mut out = Vec::new();
        for (v, &c) in colors.iter().enumerate() {
            if c >= n_colors {
                out.push(Violation::Coloring {
                    vertices: vec![v],
                    colors: vec![c],
                });
            }
        }
        for (u, v) in self.edges() {
            if colors[u] == colors[v] {
                out.push(Violation::Coloring {
                    vertices: vec![u, v],
                    colors: vec![colors[u], colors[v]],
                });
            }
        }
        out
    }
}

/// A nearest-neighbour shift of finite type given by allowed pairs per axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSft {
    pub alphabet: Vec<String>,
    /// `allowed[axis]` holds pairs `(value at n, value at n + e_axis)`.
    pub allowed: Vec<BTreeSet<(u32, u32)>>,
}

impl EdgeSft {
    /// Parses `{"alphabet": [...], "allowed": {"1": [[a, b], ...], ...}}` with
    /// 1-based axis keys; pair entries may be alphabet indices or symbols.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let alphabet: Vec<String> = v
            .get("alphabet")
            .and_then(|a| a.as_array())
            .ok_or_else(|| invalid("sft json needs an \"alphabet\" array"))?
            .iter()
            .map(|s| match s {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect();
        let allowed_json = v
            .get("allowed")
            .and_then(|a| a.as_object())
            .ok_or_else(|| invalid("sft json needs an \"allowed\" object"))?;
        let symbol = |e: &serde_json::Value| -> Result<u32> {
            if let Some(i) = e.as_u64() {
                if (i as usize) < alphabet.len() {
                    return Ok(i as u32);
                }
            }
            if let Some(s) = e.as_str() {
                if let Some(i) = alphabet.iter().position(|a| a == s) {
                    return Ok(i as u32);
                }
            }
            Err(invalid(format!("unknown sft symbol {e}")))
        };
        let mut allowed: Vec<BTreeSet<(u32, u32)>> = Vec::new();
        for (key, pairs) in allowed_json {
            let axis: usize = key
                .parse::<usize>()
                .ok()
                .filter(|&a| a >= 1)
                .ok_or_else(|| invalid(format!("bad axis key {key:?}")))?
                - 1;
            if allowed.len() <= axis {
                allowed.resize(axis + 1, BTreeSet::new());
            }
            for p in pairs
                .as_array()
                .ok_or_else(|| invalid("allowed pairs must be arrays"))?
            {
                let pair = p
                    .as_array()
                    .filter(|p| p.len() == 2)
                    .ok_or_else(|| invalid("each allowed pair must have two entries"))?;
                allowed[axis].insert((symbol(&pair[0])?, symbol(&pair[1])?));
            }
        }
        Ok(EdgeSft { alphabet, allowed })
    }

    pub fn allows(&self, axis: usize, low: u32, high: u32) -> bool {
        self.allowed
            .get(axis)
            .is_some_and(|set| set.contains(&(low, high)))
    }
}

/// The models a configuration can be validated against.
#[derive(Clone, Debug)]
pub enum Model {
    /// `X_r` with `r = config.r`; adjacent values differ by `±1 mod r`.
    Xr,
    /// `X_4`: the edge rule plus the plaquette bracket condition.
    X4,
    /// Proper colourings of the window's lattice graph with `config.r` colours.
    Coloring,
    /// Proper colourings of an arbitrary graph whose vertex `i` is cell `i`.
    GraphColoring(Graph),
    /// A nearest-neighbour edge shift.
    Sft(EdgeSft),
}

impl Model {
    pub fn parse(name: &str) -> Result<Model> {
        match name {
            "xr" => Ok(Model::Xr),
            "x4" => Ok(Model::X4),
            "coloring" => Ok(Model::Coloring),
            other => Err(Error::UnsupportedModel(format!(
                "{other:?} (expected xr, x4, coloring or sft)"
            ))),
        }
    }

    fn check_r(&self, r: u32) -> Result<()> {
        match self {
            Model::Xr if r == 1 || r == 4 => Err(Error::UnsupportedModel(format!(
                "X_r needs r outside {{1, 4}}, got r = {r}; use the x4 model for r = 4"
            ))),
            Model::X4 if r != 4 => Err(Error::UnsupportedModel(format!(
                "the x4 model needs r = 4, got r = {r}"
            ))),
            Model::Sft(s) if s.alphabet.len() != r as usize => Err(invalid(format!(
                "sft alphabet has {} symbols but the configuration has r = {r}",
                s.alphabet.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Binds the model to an alphabet size, producing a rule usable by enumeration.
    pub fn rule(&self, r: u32) -> Result<ModelRule<'_>> {
        self.check_r(r)?;
        if let Model::GraphColoring(_) = self {
            return Err(Error::UnsupportedModel(
                "graph colourings have no lattice edge rule".into(),
            ));
        }
        Ok(ModelRule { model: self, r })
    }

    /// Validates every in-window constraint; cells outside the window are not judged.
    pub fn validate(&self, config: &Configuration) -> Result<ValidityReport> {
        self.check_r(config.r)?;
        if let Model::GraphColoring(g) = self {
            if g.vertex_count() != config.cells.len() {
                return Err(invalid("graph size must equal the number of cells"));
            }
            return Ok(ValidityReport::from_violations(
                g.coloring_violations(&config.cells, config.r),
            ));
        }
        let rule = ModelRule {
            model: self,
            r: config.r,
        };
        let w = &config.window;
        let mut violations = Vec::new();
        for (i, j, axis) in w.edges() {
            let (a, b) = (config.cells[i], config.cells[j]);
            if !rule.edge_allowed(axis, a, b) {
                violations.push(Violation::Edge {
                    sites: [w.site(i), w.site(j)],
                    axis,
                    values: [a, b],
                });
            }
        }
        if let Model::X4 = self {
            violations.extend(plaquette_violations(config, None));
        }
        Ok(ValidityReport::from_violations(violations))
    }

    /// Whether `symbol` may sit next to every symbol (itself included) in every direction.
    pub fn is_safe_symbol(&self, r: u32, d: usize, symbol: u32) -> Result<bool> {
        let rule = self.rule(r)?;
        if symbol >= r {
            return Err(invalid(format!("symbol {symbol} is outside Z_{r}")));
        }
        Ok((0..d).all(|axis| {
            (0..r).all(|b| rule.edge_allowed(axis, symbol, b) && rule.edge_allowed(axis, b, symbol))
        }))
    }
}

/// X_4 plaquette check: for each unit square `p, p+e_i, p+e_j, p+e_i+e_j`,
/// `[x_p - x_{p+e_i}] + [x_{p+e_i} - x_{p+e_i+e_j}] = [x_p - x_{p+e_j}] + [x_{p+e_j} - x_{p+e_i+e_j}]`.
/// Plaquettes with an unknown corner (per `known`) or an undefined bracket are skipped.
pub fn plaquette_violations(config: &Configuration, known: Option<&[bool]>) -> Vec<Violation> {
    let w = &config.window;
    let r = config.r;
    let ok = |i: usize| known.is_none_or(|k| k[i]);
    let mut out = Vec::new();
    for p in 0..w.len() {
        for i in 0..w.d() {
            for j in i + 1..w.d() {
                let (Some(pi), Some(pj)) = (w.neighbor(p, i, 1), w.neighbor(p, j, 1)) else {
                    continue;
                };
                let Some(pij) = w.neighbor(pi, j, 1) else {
                    continue;
                };
                if !(ok(p) && ok(pi) && ok(pj) && ok(pij)) {
                    continue;
                }
                let c = &config.cells;
                let sums = (|| {
                    let lhs = bracket(c[p], c[pi], r)? + bracket(c[pi], c[pij], r)?;
                    let rhs = bracket(c[p], c[pj], r)? + bracket(c[pj], c[pij], r)?;
                    Some((lhs, rhs))
                })();
                if let Some((lhs, rhs)) = sums {
                    if lhs != rhs {
                        out.push(Violation::Plaquette {
                            corner: w.site(p),
                            axes: [i, j],
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
    }
    out
}

/// A nearest-neighbour constraint system on a box, as consumed by enumeration.
pub trait LocalRule {
    fn alphabet_size(&self) -> u32;
    /// Whether `low` at `n` and `high` at `n + e_axis` may be adjacent.
    fn edge_allowed(&self, axis: usize, low: u32, high: u32) -> bool;
    /// Constraints beyond single edges, checked once every cell marked in
    /// `known` is assigned.
    fn accepts(&self, _config: &Configuration, _known: &[bool]) -> bool {
        true
    }
}

/// A [`Model`] together with its alphabet size.
#[derive(Clone, Copy, Debug)]
pub struct ModelRule<'a> {
    model: &'a Model,
    r: u32,
}

impl LocalRule for ModelRule<'_> {
    fn alphabet_size(&self) -> u32 {
        self.r
    }

    fn edge_allowed(&self, axis: usize, low: u32, high: u32) -> bool {
        match self.model {
            Model::Xr | Model::X4 => bracket(low, high, self.r).is_some() && self.r != 1,
            Model::Coloring => low != high,
            Model::GraphColoring(_) => true,
            Model::Sft(s) => s.allows(axis, low, high),
        }
    }

    fn accepts(&self, config: &Configuration, known: &[bool]) -> bool {
        match self.model {
            Model::X4 => plaquette_violations(config, Some(known)).is_empty(),
            _ => true,
        }
    }
}

/// Two configurations on one window that agree on its width-1 collar, so they
/// differ only on a finite set inside the interior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomoclinicPair {
    pub x: Configuration,
    pub y: Configuration,
    diff: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    x: Configuration,
    y: Configuration,
}

impl Serialize for HomoclinicPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PairJson {
            x: self.x.clone(),
            y: self.y.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HomoclinicPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PairJson::deserialize(d)?;
        make_pair(j.x, j.y).map_err(serde::de::Error::custom)
    }
}

impl HomoclinicPair {
    pub fn window(&self) -> &Window {
        &self.x.window
    }

    pub fn r(&self) -> u32 {
        self.x.r
    }

    /// Cell indices of the difference set `F`.
    pub fn diff_indices(&self) -> &[usize] {
        &self.diff
    }

    pub fn diff_sites(&self) -> Vec<LatticeVector> {
        self.diff.iter().map(|&i| self.x.window.site(i)).collect()
    }

    pub fn reversed(&self) -> HomoclinicPair {
        HomoclinicPair {
            x: self.y.clone(),
            y: self.x.clone(),
            diff: self.diff.clone(),
        }
    }
}

/// Pairs two configurations, checking they share window and alphabet and
/// agree on the collar.
pub fn make_pair(x: Configuration, y: Configuration) -> Result<HomoclinicPair> {
    if x.window != y.window {
        return Err(invalid("configurations of a pair must share a window"));
    }
    if x.r != y.r {
        return Err(invalid("configurations of a pair must share r"));
    }
    let diff = x.diff_indices(&y);
    if let Some(&i) = diff.iter().find(|&&i| x.window.in_collar(i, 1)) {
        return Err(Error::NotHomoclinic(x.window.site(i)));
    }
    Ok(HomoclinicPair { x, y, diff })
}

/// Sparse integer data on an explicit site set, used for boundary heights.
pub type SiteMap<T> = BTreeMap<LatticeVector, T>;

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(r: u32, rows: &[&[u32]]) -> Configuration {
        let rows: Vec<Vec<u32>> = rows.iter().map(|r| r.to_vec()).collect();
        Configuration::from_rows(LatticeVector::zero(2), r, &rows).unwrap()
    }

    #[test]
    fn window_indexing_roundtrips() {
        let w = Window::new(LatticeVector::from([-1, 2]), vec![3, 4]).unwrap();
        for i in 0..w.len() {
            assert_eq!(w.index_of(&w.site(i)), Some(i));
        }
        assert_eq!(w.site(0), LatticeVector::from([-1, 2]));
        assert_eq!(w.site(1), LatticeVector::from([-1, 3]));
        assert!(!w.contains(&LatticeVector::from([2, 2])));
    }

    #[test]
    fn centered_window_parses() {
        let w: Window = "9x9".parse().unwrap();
        assert_eq!(w.offset(), &LatticeVector::from([-4, -4]));
        let w: Window = "2x3@1,-1".parse().unwrap();
        assert_eq!(w.dims(), &[2, 3]);
        assert_eq!(w.offset(), &LatticeVector::from([1, -1]));
    }

    #[test]
    fn diagonal_three_by_three_is_valid_x3() {
        let c = rows(3, &[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1]]);
        let rep = Model::Xr.validate(&c).unwrap();
        assert!(rep.valid, "{rep:?}");
    }

    #[test]
    fn equal_top_row_is_an_edge_violation() {
        let c = rows(3, &[&[0, 0], &[1, 2]]);
        let rep = Model::Xr.validate(&c).unwrap();
        assert_eq!(
            rep.violations,
            vec![Violation::Edge {
                sites: [LatticeVector::from([0, 0]), LatticeVector::from([0, 1])],
                axis: 1,
                values: [0, 0],
            }]
        );
    }

    #[test]
    fn r_one_and_four_are_rejected_for_xr() {
        let c = rows(4, &[&[0, 1]]);
        assert!(matches!(Model::Xr.validate(&c), Err(Error::UnsupportedModel(_))));
        assert!(Model::X4.validate(&c).unwrap().valid);
    }

    #[test]
    fn chessboard_is_the_only_shape_of_x2() {
        let c = Configuration::from_fn(Window::centered(&[4, 4]).unwrap(), 2, |s| s.l1());
        assert!(Model::Xr.validate(&c).unwrap().valid);
    }

    #[test]
    fn boundary_of_a_site_is_its_neighbours() {
        let b = boundary(&[LatticeVector::zero(2)]);
        assert_eq!(b.len(), 4);
        assert!(boundary(&[]).is_empty());
    }

    #[test]
    fn l1_ball_sizes() {
        assert_eq!(l1_ball(0, 2).len(), 1);
        assert_eq!(l1_ball(2, 2).len(), 13);
        assert_eq!(l1_sphere(3, 2).len(), 12);
        assert_eq!(l1_ball(1, 3).len(), 7);
    }

    #[test]
    fn brackets() {
        assert_eq!(bracket(1, 0, 5), Some(1));
        assert_eq!(bracket(0, 1, 5), Some(-1));
        assert_eq!(bracket(0, 4, 5), Some(1));
        assert_eq!(bracket(0, 2, 5), None);
        assert_eq!(bracket(3, 0, 4), Some(-1));
    }

    #[test]
    fn xr_has_no_safe_symbol_but_the_full_shift_does() {
        for r in [3, 5, 6] {
            for s in 0..r {
                assert!(!Model::Xr.is_safe_symbol(r, 2, s).unwrap());
            }
        }
        let full = EdgeSft::from_json(&serde_json::json!({
            "alphabet": ["a", "b"],
            "allowed": {"1": [[0,0],[0,1],[1,0],[1,1]], "2": [["a","a"],["a","b"],["b","a"],["b","b"]]}
        }))
        .unwrap();
        assert!(Model::Sft(full).is_safe_symbol(2, 2, 0).unwrap());
    }

    #[test]
    fn pair_rejects_collar_differences() {
        let w = Window::centered(&[3, 3]).unwrap();
        let x = Configuration::from_fn(w.clone(), 3, |s| s.l1());
        let mut y = x.clone();
        y.set(&LatticeVector::from([-1, 0]), 2).unwrap();
        assert!(matches!(make_pair(x.clone(), y), Err(Error::NotHomoclinic(_))));
        let mut y = x.clone();
        y.set(&LatticeVector::zero(2), 2).unwrap();
        let p = make_pair(x, y).unwrap();
        assert_eq!(p.diff_sites(), vec![LatticeVector::zero(2)]);
    }

    #[test]
    fn configuration_json_roundtrip() {
        let c = rows(3, &[&[0, 1], &[1, 2]]);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"r":3,"dims":[2,2],"offset":[0,0],"cells":[0,1,1,2]}"#);
        let back: Configuration = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
