//! Square-island tilings.
//!
//! Planar coordinates are `(row, col)` with rows increasing southward, so
//! north is `(-1, 0)` and east is `(0, 1)`. An arrow tile records the
//! direction the arrow enters with and the direction it leaves with; straight
//! arrows have both equal and corner arrows turn clockwise. An `n`-island is a
//! `(2n+1) × (2n+1)` block of concentric clockwise arrow rings, border tiles on
//! the outermost ring and a seed in the centre.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{Configuration, LatticeVector, LocalRule, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    pub fn offset(self) -> [i64; 2] {
        match self {
            Dir::N => [-1, 0],
            Dir::E => [0, 1],
            Dir::S => [1, 0],
            Dir::W => [0, -1],
        }
    }

    /// The direction on the right of an arrow travelling `self`.
    pub fn cw(self) -> Dir {
        match self {
            Dir::N => Dir::E,
            Dir::E => Dir::S,
            Dir::S => Dir::W,
            Dir::W => Dir::N,
        }
    }

    pub fn ccw(self) -> Dir {
        self.cw().cw().cw()
    }

    pub fn opposite(self) -> Dir {
        self.cw().cw()
    }
}

/// The eight arrows; corners are named entry-then-exit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arrow {
    N,
    E,
    S,
    W,
    NE,
    ES,
    SW,
    WN,
}

impl Arrow {
    pub const ALL: [Arrow; 8] = [
        Arrow::N,
        Arrow::E,
        Arrow::S,
        Arrow::W,
        Arrow::NE,
        Arrow::ES,
        Arrow::SW,
        Arrow::WN,
    ];

    pub fn entry(self) -> Dir {
        match self {
            Arrow::N | Arrow::NE => Dir::N,
            Arrow::E | Arrow::ES => Dir::E,
            Arrow::S | Arrow::SW => Dir::S,
            Arrow::W | Arrow::WN => Dir::W,
        }
    }

    pub fn exit(self) -> Dir {
        match self {
            Arrow::N | Arrow::WN => Dir::N,
            Arrow::E | Arrow::NE => Dir::E,
            Arrow::S | Arrow::ES => Dir::S,
            Arrow::W | Arrow::SW => Dir::W,
        }
    }

    pub fn is_corner(self) -> bool {
        self.entry() != self.exit()
    }

    fn name(self) -> &'static str {
        match self {
            Arrow::N => "N",
            Arrow::E => "E",
            Arrow::S => "S",
            Arrow::W => "W",
            Arrow::NE => "NE",
            Arrow::ES => "ES",
            Arrow::SW => "SW",
            Arrow::WN => "WN",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Blank,
    Seed,
    Interior(Arrow),
    Border(Arrow),
}

impl Shape {
    pub const COUNT: u32 = 18;

    /// 0 blank, 1 seed, 2..=9 interior arrows, 10..=17 border arrows, arrows
    /// in [`Arrow::ALL`] order.
    pub fn index(self) -> u32 {
        let pos = |a: Arrow| Arrow::ALL.iter().position(|&b| b == a).unwrap() as u32;
        match self {
            Shape::Blank => 0,
            Shape::Seed => 1,
            Shape::Interior(a) => 2 + pos(a),
            Shape::Border(a) => 10 + pos(a),
        }
    }

    pub fn from_index(k: u32) -> Option<Shape> {
        Some(match k {
            0 => Shape::Blank,
            1 => Shape::Seed,
            2..=9 => Shape::Interior(Arrow::ALL[k as usize - 2]),
            10..=17 => Shape::Border(Arrow::ALL[k as usize - 10]),
            _ => return None,
        })
    }

    pub fn is_square(self) -> bool {
        self != Shape::Blank
    }

    /// The arrow and whether it is a border arrow.
    pub fn arrow(self) -> Option<(Arrow, bool)> {
        match self {
            Shape::Interior(a) => Some((a, false)),
            Shape::Border(a) => Some((a, true)),
            _ => None,
        }
    }

    fn code(self) -> String {
        match self {
            Shape::Blank => ".".into(),
            Shape::Seed => "0".into(),
            Shape::Interior(a) => format!("i{}", a.name()),
            Shape::Border(a) => format!("b{}", a.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tile {
    pub shape: Shape,
    /// 1 or 2 on square tiles of the typed alphabet.
    pub island_type: Option<u8>,
}

impl Tile {
    pub const BLANK: Tile = Tile {
        shape: Shape::Blank,
        island_type: None,
    };

    pub fn untyped(shape: Shape) -> Tile {
        Tile {
            shape,
            island_type: None,
        }
    }

    pub fn typed(shape: Shape, t: u8) -> Tile {
        Tile {
            shape,
            island_type: shape.is_square().then_some(t),
        }
    }

    pub fn is_blank(self) -> bool {
        self.shape == Shape::Blank
    }

    pub fn is_square(self) -> bool {
        self.shape.is_square()
    }

    pub fn is_interior(self) -> bool {
        matches!(self.shape, Shape::Interior(_))
    }
}

impl fmt::Display for Tile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.shape.code())?;
        if let Some(t) = self.island_type {
            write!(f, "@{t}")?;
        }
        Ok(())
    }
}

impl FromStr for Tile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Tile> {
        let (body, ty) = match s.split_once('@') {
            Some((b, "1")) => (b, Some(1)),
            Some((b, "2")) => (b, Some(2)),
            Some(_) => return Err(invalid(format!("bad island type in tile {s:?}"))),
            None => (s, None),
        };
        let shape = match body {
            "." => Shape::Blank,
            "0" => Shape::Seed,
            _ => {
                let (kind, name) = body.split_at(body.len().min(1));
                let arrow = Arrow::ALL
                    .into_iter()
                    .find(|a| a.name() == name)
                    .ok_or_else(|| invalid(format!("unknown tile {s:?}")))?;
                match kind {
                    "i" => Shape::Interior(arrow),
                    "b" => Shape::Border(arrow),
                    _ => return Err(invalid(format!("unknown tile {s:?}"))),
                }
            }
        };
        if shape == Shape::Blank && ty.is_some() {
            return Err(invalid("the blank tile carries no type"));
        }
        Ok(Tile {
            shape,
            island_type: ty,
        })
    }
}

/// `X18` is the untyped alphabet. `Y26` gives every square tile a type, which
/// makes 1 + 2·17 = 35 symbols; the tag is kept for file compatibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alphabet {
    #[serde(rename = "x18")]
    X18,
    #[serde(rename = "y26")]
    Y26,
}

impl Alphabet {
    pub fn size(self) -> u32 {
        match self {
            Alphabet::X18 => Shape::COUNT,
            Alphabet::Y26 => 2 * Shape::COUNT - 1,
        }
    }

    pub fn typed(self) -> bool {
        self == Alphabet::Y26
    }

    pub fn encode(self, t: Tile) -> u32 {
        let k = t.shape.index();
        match (self, t.island_type) {
            (Alphabet::Y26, Some(2)) => k + Shape::COUNT - 1,
            _ => k,
        }
    }

    pub fn decode(self, v: u32) -> Option<Tile> {
        match self {
            Alphabet::X18 => Shape::from_index(v).map(Tile::untyped),
            Alphabet::Y26 => match v {
                0 => Some(Tile::BLANK),
                1..=17 => Some(Tile::typed(Shape::from_index(v)?, 1)),
                18..=34 => Some(Tile::typed(Shape::from_index(v - 17)?, 2)),
                _ => None,
            },
        }
    }

    fn admits(self, t: Tile) -> bool {
        match (self, t.island_type) {
            (Alphabet::X18, None) => true,
            (Alphabet::X18, Some(_)) => false,
            (Alphabet::Y26, None) => t.is_blank(),
            (Alphabet::Y26, Some(ty)) => t.is_square() && (ty == 1 || ty == 2),
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alphabet::X18 => "x18",
            Alphabet::Y26 => "y26",
        })
    }
}

/// A tiling of a planar window.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TileConfigJson", into = "TileConfigJson")]
pub struct TileConfig {
    pub alphabet: Alphabet,
    pub window: Window,
    pub cells: Vec<Tile>,
}

#[derive(Serialize, Deserialize)]
struct TileConfigJson {
    alphabet: Alphabet,
    dims: Vec<usize>,
    offset: Vec<i64>,
    cells: Vec<String>,
}

impl TryFrom<TileConfigJson> for TileConfig {
    type Error = Error;

    fn try_from(j: TileConfigJson) -> Result<Self> {
        let window = Window::new(LatticeVector(j.offset), j.dims)?;
        let cells = j.cells.iter().map(|c| c.parse()).collect::<Result<_>>()?;
        TileConfig::new(j.alphabet, window, cells)
    }
}

impl From<TileConfig> for TileConfigJson {
    fn from(c: TileConfig) -> Self {
        TileConfigJson {
            alphabet: c.alphabet,
            dims: c.window.dims().to_vec(),
            offset: c.window.offset().0.clone(),
            cells: c.cells.iter().map(|t| t.to_string()).collect(),
        }
    }
}

impl TileConfig {
    pub fn new(alphabet: Alphabet, window: Window, cells: Vec<Tile>) -> Result<Self> {
        if window.d() != 2 {
            return Err(invalid("tilings live on planar windows"));
        }
        if cells.len() != window.len() {
            return Err(invalid(format!(
                "window has {} cells but {} tiles were given",
                window.len(),
                cells.len()
            )));
        }
        if let Some(t) = cells.iter().find(|t| !alphabet.admits(**t)) {
            return Err(invalid(format!("tile {t} is not in alphabet {alphabet}")));
        }
        Ok(TileConfig {
            alphabet,
            window,
            cells,
        })
    }

    pub fn blank(alphabet: Alphabet, window: Window) -> Result<Self> {
        let n = window.len();
        TileConfig::new(alphabet, window, vec![Tile::BLANK; n])
    }

    /// Rows of whitespace-separated tile codes placed at `offset`.
    pub fn from_rows(alphabet: Alphabet, offset: LatticeVector, rows: &[&str]) -> Result<Self> {
        let parsed: Vec<Vec<Tile>> = rows
            .iter()
            .map(|r| r.split_whitespace().map(str::parse).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let w = parsed.first().map_or(0, Vec::len);
        if parsed.iter().any(|r| r.len() != w) {
            return Err(invalid("ragged rows"));
        }
        let window = Window::new(offset, vec![parsed.len(), w])?;
        TileConfig::new(alphabet, window, parsed.concat())
    }

    pub fn get(&self, site: &LatticeVector) -> Option<Tile> {
        self.window.index_of(site).map(|i| self.cells[i])
    }

    pub fn set(&mut self, site: &LatticeVector, tile: Tile) -> Result<()> {
        if !self.alphabet.admits(tile) {
            return Err(invalid(format!("tile {tile} is not in alphabet {}", self.alphabet)));
        }
        let i = self
            .window
            .index_of(site)
            .ok_or_else(|| invalid(format!("site {site} is outside the window")))?;
        self.cells[i] = tile;
        Ok(())
    }

    /// The untyped tiling obtained by dropping island types.
    pub fn forget_types(&self) -> TileConfig {
        TileConfig {
            alphabet: Alphabet::X18,
            window: self.window.clone(),
            cells: self.cells.iter().map(|t| Tile::untyped(t.shape)).collect(),
        }
    }

    /// Symbol indices as a [`Configuration`] over `alphabet.size()` letters.
    pub fn to_configuration(&self) -> Configuration {
        Configuration {
            window: self.window.clone(),
            r: self.alphabet.size(),
            cells: self.cells.iter().map(|&t| self.alphabet.encode(t)).collect(),
        }
    }

    pub fn from_configuration(alphabet: Alphabet, c: &Configuration) -> Result<Self> {
        let cells = c
            .cells
            .iter()
            .map(|&v| {
                alphabet
                    .decode(v)
                    .ok_or_else(|| invalid(format!("symbol {v} is not in alphabet {alphabet}")))
            })
            .collect::<Result<_>>()?;
        TileConfig::new(alphabet, c.window.clone(), cells)
    }

    /// Paints the canonical `n`-island centred at `center`, every tile of type
    /// `ty` (ignored for the untyped alphabet). Sites outside the window are skipped.
    pub fn place_island(&mut self, center: &LatticeVector, n: usize, ty: u8) -> Result<()> {
        for (site, shape) in island_tiles(center, n) {
            if !self.window.contains(&site) {
                continue;
            }
            let tile = if self.alphabet.typed() {
                Tile::typed(shape, ty)
            } else {
                Tile::untyped(shape)
            };
            self.set(&site, tile)?;
        }
        Ok(())
    }

    /// One row per line, codes left-aligned in equal-width columns.
    pub fn render(&self) -> String {
        let codes: Vec<String> = self.cells.iter().map(|t| t.to_string()).collect();
        let width = codes.iter().map(String::len).max().unwrap_or(1);
        let cols = self.window.dims()[1];
        let mut out = String::new();
        for row in codes.chunks(cols.max(1)) {
            let line: Vec<String> = row.iter().map(|c| format!("{c:<width$}")).collect();
            out.push_str(line.join(" ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// The shape at local position `(i, j)`, `0 ≤ i, j ≤ 2n`, of an `n`-island.
pub fn island_shape(n: usize, i: usize, j: usize) -> Shape {
    let m = 2 * n;
    let k = i.min(j).min(m - i).min(m - j);
    if k == n {
        return Shape::Seed;
    }
    let arrow = if i == k {
        if j == k {
            Arrow::NE
        } else if j == m - k {
            Arrow::ES
        } else {
            Arrow::E
        }
    } else if i == m - k {
        if j == m - k {
            Arrow::SW
        } else if j == k {
            Arrow::WN
        } else {
            Arrow::W
        }
    } else if j == k {
        Arrow::N
    } else {
        Arrow::S
    };
    if k == 0 {
        Shape::Border(arrow)
    } else {
        Shape::Interior(arrow)
    }
}

/// Sites and shapes of the `n`-island centred at `center`, row-major.
pub fn island_tiles(center: &LatticeVector, n: usize) -> Vec<(LatticeVector, Shape)> {
    let (r0, c0) = (center.0[0] - n as i64, center.0[1] - n as i64);
    let side = 2 * n + 1;
    let mut out = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            out.push((
                LatticeVector(vec![r0 + i as i64, c0 + j as i64]),
                island_shape(n, i, j),
            ));
        }
    }
    out
}

const CONSTRAINT_TEXT: [&str; 6] = [
    "every arrow head meets a matching tail of the same class and vice versa",
    "adjacent arrows never point in opposite directions",
    "corner tiles are never adjacent",
    "the seed sits only beside straight arrows",
    "interior tiles touch no blank; border tiles have interior on the right and blank on the left",
    "adjacent square tiles share a type",
];

/// What `a` demands of its neighbour `b` in direction `d`.
fn one_sided(a: Tile, b: Tile, d: Dir, out: &mut BTreeSet<u8>) {
    if a.shape == Shape::Seed && !b.shape.arrow().is_some_and(|(x, _)| !x.is_corner()) {
        out.insert(4);
    }
    let Some((arr, border)) = a.shape.arrow() else {
        return;
    };
    let other = b.shape.arrow();
    if arr.exit() == d && !other.is_some_and(|(x, bb)| bb == border && x.entry() == d) {
        out.insert(1);
    }
    if arr.entry().opposite() == d
        && !other.is_some_and(|(x, bb)| bb == border && x.exit() == arr.entry())
    {
        out.insert(1);
    }
    if let Some((x, _)) = other {
        let opposed = [arr.entry(), arr.exit()]
            .iter()
            .any(|p| [x.entry(), x.exit()].contains(&p.opposite()));
        if opposed {
            out.insert(2);
        }
        if arr.is_corner() && x.is_corner() {
            out.insert(3);
        }
    }
    if !border {
        if b.is_blank() {
            out.insert(5);
        }
    } else if !arr.is_corner() {
        if d == arr.exit().cw() && !b.is_interior() {
            out.insert(5);
        }
        if d == arr.exit().ccw() && !b.is_blank() {
            out.insert(5);
        }
    } else if (d == arr.entry().ccw() || d == arr.exit().ccw()) && !b.is_blank() {
        out.insert(5);
    }
}

/// Constraint numbers violated by `a` and `b = a + d`, in increasing order.
pub fn edge_constraints(a: Tile, b: Tile, d: Dir) -> Vec<u8> {
    let mut out = BTreeSet::new();
    one_sided(a, b, d, &mut out);
    one_sided(b, a, d.opposite(), &mut out);
    if a.is_square() && b.is_square() && a.island_type != b.island_type {
        out.insert(6);
    }
    out.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileViolation {
    pub constraint: u8,
    pub sites: [LatticeVector; 2],
    pub tiles: [String; 2],
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileReport {
    pub valid: bool,
    pub violations: Vec<TileViolation>,
}

impl TileReport {
    pub fn constraints(&self) -> BTreeSet<u8> {
        self.violations.iter().map(|v| v.constraint).collect()
    }
}

/// Checks every adjacency inside the window; adjacencies across the window
/// edge are not judged.
pub fn validate_tiles(config: &TileConfig) -> TileReport {
    let w = &config.window;
    let mut violations = Vec::new();
    for (lo, hi, axis) in w.edges() {
        let d = if axis == 0 { Dir::S } else { Dir::E };
        let (a, b) = (config.cells[lo], config.cells[hi]);
        for c in edge_constraints(a, b, d) {
            violations.push(TileViolation {
                constraint: c,
                sites: [w.site(lo), w.site(hi)],
                tiles: [a.to_string(), b.to_string()],
                message: CONSTRAINT_TEXT[c as usize - 1].to_string(),
            });
        }
    }
    TileReport {
        valid: violations.is_empty(),
        violations,
    }
}

/// The tiling constraints as a nearest-neighbour rule on symbol indices.
#[derive(Clone, Copy, Debug)]
pub struct TileRule {
    pub alphabet: Alphabet,
}

impl LocalRule for TileRule {
    fn alphabet_size(&self) -> u32 {
        self.alphabet.size()
    }

    fn edge_allowed(&self, axis: usize, low: u32, high: u32) -> bool {
        let (Some(a), Some(b)) = (self.alphabet.decode(low), self.alphabet.decode(high)) else {
            return false;
        };
        let d = if axis == 0 { Dir::S } else { Dir::E };
        edge_constraints(a, b, d).is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Island {
    /// Corners of the bounding box of the component.
    pub min: LatticeVector,
    pub max: LatticeVector,
    pub tiles: usize,
    /// `false` when the component touches the window edge.
    pub complete: bool,
    pub n: Option<usize>,
    pub center: Option<LatticeVector>,
    pub island_type: Option<u8>,
}

impl Island {
    pub fn contains(&self, s: &LatticeVector) -> bool {
        (0..2).all(|a| self.min.0[a] <= s.0[a] && s.0[a] <= self.max.0[a])
    }
}

/// 4-connected components of square tiles, each as sorted window indices.
fn components(config: &TileConfig) -> Vec<Vec<usize>> {
    let w = &config.window;
    let mut seen = vec![false; w.len()];
    let mut out = Vec::new();
    for start in 0..w.len() {
        if seen[start] || !config.cells[start].is_square() {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in w.neighbors(i) {
                if !seen[j] && config.cells[j].is_square() {
                    seen[j] = true;
                    comp.push(j);
                    queue.push_back(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn classify(config: &TileConfig, comp: &[usize]) -> Island {
    let w = &config.window;
    let sites: Vec<LatticeVector> = comp.iter().map(|&i| w.site(i)).collect();
    let lo: Vec<i64> = (0..2).map(|a| sites.iter().map(|s| s.0[a]).min().unwrap()).collect();
    let hi: Vec<i64> = (0..2).map(|a| sites.iter().map(|s| s.0[a]).max().unwrap()).collect();
    let mut island = Island {
        min: LatticeVector(lo.clone()),
        max: LatticeVector(hi.clone()),
        tiles: comp.len(),
        complete: false,
        n: None,
        center: None,
        island_type: config.cells[comp[0]].island_type,
    };
    if comp.iter().any(|&i| w.depth(i) == 0) {
        return island;
    }
    let side = (hi[0] - lo[0] + 1) as usize;
    if side != (hi[1] - lo[1] + 1) as usize || side.is_multiple_of(2) || side < 5 || comp.len() != side * side {
        return island;
    }
    let n = side / 2;
    let center = LatticeVector(vec![lo[0] + n as i64, lo[1] + n as i64]);
    let ty = island.island_type;
    let matches = island_tiles(&center, n).iter().all(|(s, shape)| {
        config
            .get(s)
            .is_some_and(|t| t.shape == *shape && t.island_type == ty)
    });
    if matches {
        island.complete = true;
        island.n = Some(n);
        island.center = Some(center);
    }
    island
}

/// Islands of a valid tiling. Components touching the window edge are
/// returned with `complete = false`.
pub fn find_islands(config: &TileConfig) -> Result<Vec<Island>> {
    let report = validate_tiles(config);
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidConfiguration(format!(
            "{} violation(s), first: constraint {} at {} / {}; run tiles-validate for the full list",
            report.violations.len(),
            v.constraint,
            v.sites[0],
            v.sites[1]
        )));
    }
    let mut out = Vec::new();
    for comp in components(config) {
        let island = classify(config, &comp);
        if !island.complete && comp.iter().all(|&i| config.window.depth(i) > 0) {
            return Err(Error::InvalidConfiguration(format!(
                "closed component at {}..{} is not a square-island",
                island.min, island.max
            )));
        }
        out.push(island);
    }
    Ok(out)
}

/// Island counts for one size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeCount {
    /// Type-1 islands.
    pub m: usize,
    /// Type-2 islands.
    pub n: usize,
    pub untyped: usize,
}

/// Counts of complete islands meeting `region` (every island when `None`), by size.
pub fn census(islands: &[Island], region: Option<&[LatticeVector]>) -> BTreeMap<usize, SizeCount> {
    let mut out: BTreeMap<usize, SizeCount> = BTreeMap::new();
    for isl in islands.iter().filter(|i| i.complete) {
        if let Some(reg) = region {
            if !reg.iter().any(|s| isl.contains(s)) {
                continue;
            }
        }
        let e = out.entry(isl.n.unwrap()).or_default();
        match isl.island_type {
            Some(1) => e.m += 1,
            Some(_) => e.n += 1,
            None => e.untyped += 1,
        }
    }
    out
}

/// Per-size probabilities `p_i` of type 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeWeights {
    #[serde(default, with = "size_keys")]
    pub p: BTreeMap<usize, f64>,
    #[serde(default = "half")]
    pub default: f64,
}

fn half() -> f64 {
    0.5
}

mod size_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<usize, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, f64>, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("island size {k:?} is not an integer")))
            })
            .collect()
    }
}

impl Default for TypeWeights {
    fn default() -> Self {
        TypeWeights {
            p: BTreeMap::new(),
            default: 0.5,
        }
    }
}

impl TypeWeights {
    pub fn uniform(p: f64) -> Self {
        TypeWeights {
            p: BTreeMap::new(),
            default: p,
        }
    }

    pub fn get(&self, n: usize) -> f64 {
        self.p.get(&n).copied().unwrap_or(self.default)
    }

    fn check_closed(&self) -> Result<()> {
        let bad = self
            .p
            .values()
            .chain([&self.default])
            .find(|v| !(0.0..=1.0).contains(*v));
        match bad {
            Some(v) => Err(invalid(format!("probability {v} is outside [0, 1]"))),
            None => Ok(()),
        }
    }
}

/// Types each complete island independently: an `n`-island is type 1 with
/// probability `p_n`. Islands are drawn in order of their centres.
pub fn assign_types(x: &TileConfig, weights: &TypeWeights, seed: u64) -> Result<TileConfig> {
    weights.check_closed()?;
    if x.alphabet.typed() {
        return Err(invalid("assign_types expects an untyped tiling"));
    }
    let islands = find_islands(x)?;
    if let Some(i) = islands.iter().find(|i| !i.complete) {
        return Err(Error::Precondition(format!(
            "island at {}..{} is cut by the window edge, so its size is unknown",
            i.min, i.max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = TileConfig {
        alphabet: Alphabet::Y26,
        window: x.window.clone(),
        cells: x.cells.clone(),
    };
    let mut order: Vec<&Island> = islands.iter().collect();
    order.sort_by(|a, b| a.center.cmp(&b.center));
    for isl in order {
        let n = isl.n.unwrap();
        let ty = if rng.gen::<f64>() < weights.get(n) { 1 } else { 2 };
        y.place_island(isl.center.as_ref().unwrap(), n, ty)?;
    }
    Ok(y)
}

/// `Σ_i Δm^i log p_i + Δn^i log(1 - p_i)`, counting islands of each tiling
/// that meet the set where the two differ.
pub fn mp_eval(y: &TileConfig, y2: &TileConfig, weights: &TypeWeights) -> Result<f64> {
    if !y.alphabet.typed() || !y2.alphabet.typed() {
        return Err(invalid("the cocycle is defined on typed tilings"));
    }
    if y.window != y2.window {
        return Err(invalid("tilings live on different windows"));
    }
    let w = &y.window;
    let diff: Vec<usize> = (0..w.len()).filter(|&i| y.cells[i] != y2.cells[i]).collect();
    if let Some(&i) = diff.iter().find(|&&i| w.in_collar(i, 1)) {
        return Err(Error::NotHomoclinic(w.site(i)));
    }
    if diff.is_empty() {
        return Ok(0.0);
    }
    let f: Vec<LatticeVector> = diff.iter().map(|&i| w.site(i)).collect();
    let mut counts = Vec::with_capacity(2);
    for (name, t) in [("first", y), ("second", y2)] {
        let islands = find_islands(t)?;
        if let Some(i) = islands
            .iter()
            .find(|i| !i.complete && f.iter().any(|s| i.contains(s)))
        {
            return Err(Error::Precondition(format!(
                "an island of the {name} tiling at {}..{} meets the difference set but is cut by the window edge",
                i.min, i.max
            )));
        }
        counts.push(census(&islands, Some(&f)));
    }
    let sizes: BTreeSet<usize> = counts.iter().flat_map(|c| c.keys().copied()).collect();
    let mut total = 0.0;
    for n in sizes {
        let a = counts[0].get(&n).copied().unwrap_or_default();
        let b = counts[1].get(&n).copied().unwrap_or_default();
        let dm = b.m as i64 - a.m as i64;
        let dn = b.n as i64 - a.n as i64;
        if dm == 0 && dn == 0 {
            continue;
        }
        let p = weights.get(n);
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("p_{n} = {p} must lie strictly between 0 and 1")));
        }
        if dm != 0 {
            total += dm as f64 * p.ln();
        }
        if dn != 0 {
            total += dn as f64 * (1.0 - p).ln();
        }
    }
    Ok(total)
}

#[derive(Clone, Copy)]
struct Boxed {
    lo: [i64; 2],
    hi: [i64; 2],
}

impl Boxed {
    fn of(center: &LatticeVector, n: usize) -> Boxed {
        let n = n as i64;
        Boxed {
            lo: [center.0[0] - n, center.0[1] - n],
            hi: [center.0[0] + n, center.0[1] + n],
        }
    }

    fn of_window(w: &Window) -> Boxed {
        let o = &w.offset().0;
        let d = w.dims();
        Boxed {
            lo: [o[0], o[1]],
            hi: [o[0] + d[0] as i64 - 1, o[1] + d[1] as i64 - 1],
        }
    }

    fn grow(self, k: i64) -> Boxed {
        Boxed {
            lo: [self.lo[0] - k, self.lo[1] - k],
            hi: [self.hi[0] + k, self.hi[1] + k],
        }
    }

    fn meets(self, o: Boxed) -> bool {
        (0..2).all(|a| self.lo[a] <= o.hi[a] && o.lo[a] <= self.hi[a])
    }

    fn within(self, o: Boxed) -> bool {
        (0..2).all(|a| o.lo[a] <= self.lo[a] && self.hi[a] <= o.hi[a])
    }
}

/// Random islands of size 2 or 3 in a blank sea, separated by blanks and kept
/// off the window edge, until roughly `density` of the cells are square tiles.
///
/// With `partial`, its tiles are copied first and every island it cuts off at
/// its own edge is completed inside the box four times its size (and inside
/// `window`). New islands stay clear of `partial`'s window.
pub fn generate(
    window: &Window,
    density: f64,
    seed: u64,
    partial: Option<&TileConfig>,
) -> Result<TileConfig> {
    if window.d() != 2 {
        return Err(invalid("tilings live on planar windows"));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(invalid(format!("density {density} is outside [0, 1]")));
    }
    let alphabet = partial.map_or(Alphabet::X18, |p| p.alphabet);
    let mut out = TileConfig::blank(alphabet, window.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed: Vec<Boxed> = Vec::new();
    let outer = Boxed::of_window(window);
    let mut keep_out = None;

    if let Some(p) = partial {
        if !window.contains_window(&p.window) {
            return Err(invalid("the partial tiling must lie inside the window"));
        }
        let report = validate_tiles(p);
        if !report.valid {
            return Err(Error::InvalidConfiguration(format!(
                "partial tiling violates constraint {}",
                report.violations[0].constraint
            )));
        }
        for (i, s) in p.window.sites().enumerate() {
            out.set(&s, p.cells[i])?;
        }
        let pbox = Boxed::of_window(&p.window);
        keep_out = Some(pbox.grow(1));
        let mut fragments = Vec::new();
        for comp in components(p) {
            let isl = classify(p, &comp);
            if isl.complete {
                placed.push(Boxed::of(isl.center.as_ref().unwrap(), isl.n.unwrap()));
            } else if comp.iter().all(|&i| p.window.depth(i) > 0) {
                return Err(Error::InvalidConfiguration(format!(
                    "closed component at {}..{} is not a square-island",
                    isl.min, isl.max
                )));
            } else {
                fragments.push(isl);
            }
        }
        let dims = p.window.dims();
        let grown = pbox.grow(3 * dims[0].max(dims[1]) as i64 / 2 + 1);
        let limit = Boxed {
            lo: [grown.lo[0].max(outer.lo[0]), grown.lo[1].max(outer.lo[1])],
            hi: [grown.hi[0].min(outer.hi[0]), grown.hi[1].min(outer.hi[1])],
        };
        for frag in fragments {
            let (center, n) = complete_fragment(p, &frag, limit, &placed).ok_or_else(|| {
                Error::Completion(format!(
                    "no square-island inside the enlarged box extends the fragment at {}..{}",
                    frag.min, frag.max
                ))
            })?;
            out.place_island(&center, n, frag.island_type.unwrap_or(1))?;
            placed.push(Boxed::of(&center, n));
        }
    }

    let target = density * window.len() as f64;
    let mut covered = out.cells.iter().filter(|t| t.is_square()).count() as f64;
    let inner = outer.grow(-1);
    let mut failures = 0;
    while covered < target && failures < 500 {
        let n: usize = rng.gen_range(2..=3);
        let span = inner.grow(-(n as i64));
        if span.lo[0] > span.hi[0] || span.lo[1] > span.hi[1] {
            failures += 1;
            continue;
        }
        let center = LatticeVector(vec![
            rng.gen_range(span.lo[0]..=span.hi[0]),
            rng.gen_range(span.lo[1]..=span.hi[1]),
        ]);
        let b = Boxed::of(&center, n);
        let clash = placed.iter().any(|o| b.grow(1).meets(*o))
            || keep_out.is_some_and(|k: Boxed| b.meets(k));
        if clash {
            failures += 1;
            continue;
        }
        let ty = if rng.gen::<bool>() { 1 } else { 2 };
        out.place_island(&center, n, ty)?;
        placed.push(b);
        covered += ((2 * n + 1) * (2 * n + 1)) as f64;
        failures = 0;
    }
    debug_assert!(validate_tiles(&out).valid);
    Ok(out)
}

/// Smallest island (then least centre) inside `limit` agreeing with `p` on its
/// whole footprint and blank collar, and clear of `placed`.
fn complete_fragment(
    p: &TileConfig,
    frag: &Island,
    limit: Boxed,
    placed: &[Boxed],
) -> Option<(LatticeVector, usize)> {
    let ty = frag.island_type;
    let max_n = ((limit.hi[0] - limit.lo[0]).min(limit.hi[1] - limit.lo[1]) / 2).max(0) as usize;
    for n in 2..=max_n {
        let ni = n as i64;
        let rows = (frag.max.0[0] - ni).max(limit.lo[0] + ni)..=(frag.min.0[0] + ni).min(limit.hi[0] - ni);
        for cr in rows {
            let cols =
                (frag.max.0[1] - ni).max(limit.lo[1] + ni)..=(frag.min.0[1] + ni).min(limit.hi[1] - ni);
            for cc in cols {
                let center = LatticeVector(vec![cr, cc]);
                let b = Boxed::of(&center, n);
                if !b.within(limit) || placed.iter().any(|o| b.grow(1).meets(*o)) {
                    continue;
                }
                let footprint: HashSet<LatticeVector> =
                    island_tiles(&center, n).into_iter().map(|(s, _)| s).collect();
                let tiles = island_tiles(&center, n);
                let inside_ok = tiles.iter().all(|(s, shape)| match p.get(s) {
                    Some(t) => t.shape == *shape && t.island_type == ty,
                    None => true,
                });
                let collar_ok = (b.lo[0] - 1..=b.hi[0] + 1).all(|r| {
                    (b.lo[1] - 1..=b.hi[1] + 1).all(|c| {
                        let s = LatticeVector(vec![r, c]);
                        footprint.contains(&s) || p.get(&s).is_none_or(|t| t.is_blank())
                    })
                });
                if inside_ok && collar_ok {
                    return Some((center, n));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sea(side: usize, alphabet: Alphabet) -> TileConfig {
        TileConfig::blank(alphabet, Window::centered(&[side, side]).unwrap()).unwrap()
    }

    #[test]
    fn tile_codes_roundtrip() {
        for k in 0..Alphabet::Y26.size() {
            let t = Alphabet::Y26.decode(k).unwrap();
            assert_eq!(Alphabet::Y26.encode(t), k);
            assert_eq!(t.to_string().parse::<Tile>().unwrap(), t);
        }
        assert_eq!("bES@2".parse::<Tile>().unwrap(), Tile::typed(Shape::Border(Arrow::ES), 2));
        assert!(".@1".parse::<Tile>().is_err());
        assert!("iX".parse::<Tile>().is_err());
    }

    #[test]
    fn canonical_islands_validate() {
        for n in 2..=4 {
            let mut t = sea(2 * n + 3, Alphabet::X18);
            t.place_island(&LatticeVector::zero(2), n, 1).unwrap();
            let rep = validate_tiles(&t);
            assert!(rep.valid, "n = {n}: {:?}", rep.violations.first());
            let isl = find_islands(&t).unwrap();
            assert_eq!(isl.len(), 1);
            assert_eq!(isl[0].n, Some(n));
            assert!(isl[0].complete);
        }
    }

    #[test]
    fn three_by_three_island_breaks_constraint_five() {
        let mut t = sea(5, Alphabet::X18);
        t.place_island(&LatticeVector::zero(2), 1, 1).unwrap();
        assert!(validate_tiles(&t).constraints().contains(&5));
    }

    #[test]
    fn adjacent_islands_break_constraint_five() {
        let w = Window::new(LatticeVector::from([0, 0]), vec![7, 12]).unwrap();
        let mut t = TileConfig::blank(Alphabet::X18, w).unwrap();
        t.place_island(&LatticeVector::from([3, 3]), 2, 1).unwrap();
        t.place_island(&LatticeVector::from([3, 8]), 2, 1).unwrap();
        assert!(validate_tiles(&t).constraints().contains(&5));
    }

    #[test]
    fn mixed_types_break_constraint_six() {
        let mut t = sea(7, Alphabet::Y26);
        t.place_island(&LatticeVector::zero(2), 2, 1).unwrap();
        t.set(&LatticeVector::from([0, 0]), Tile::typed(Shape::Seed, 2)).unwrap();
        assert_eq!(validate_tiles(&t).constraints(), BTreeSet::from([6]));
    }

    #[test]
    fn clipped_island_is_incomplete() {
        let mut t = sea(7, Alphabet::X18);
        t.place_island(&LatticeVector::from([-2, -2]), 2, 1).unwrap();
        let isl = find_islands(&t).unwrap();
        assert_eq!(isl.len(), 1);
        assert!(!isl[0].complete);
        assert!(census(&isl, None).is_empty());
    }

    #[test]
    fn census_counts_types() {
        let w = Window::new(LatticeVector::from([0, 0]), vec![7, 14]).unwrap();
        let mut t = TileConfig::blank(Alphabet::Y26, w).unwrap();
        t.place_island(&LatticeVector::from([3, 3]), 2, 1).unwrap();
        t.place_island(&LatticeVector::from([3, 10]), 2, 2).unwrap();
        let c = census(&find_islands(&t).unwrap(), None);
        assert_eq!(c[&2], SizeCount { m: 1, n: 1, untyped: 0 });
        let left = [LatticeVector::from([3, 3])];
        assert_eq!(census(&find_islands(&t).unwrap(), Some(&left))[&2].m, 1);
        assert_eq!(census(&find_islands(&t).unwrap(), Some(&left))[&2].n, 0);
    }

    #[test]
    fn retyping_changes_mp_by_log_ratio() {
        let mut y = sea(9, Alphabet::Y26);
        y.place_island(&LatticeVector::zero(2), 2, 1).unwrap();
        let mut y2 = y.clone();
        y2.place_island(&LatticeVector::zero(2), 2, 2).unwrap();
        let w = TypeWeights {
            p: BTreeMap::from([(2, 0.3)]),
            default: 0.5,
        };
        let v = mp_eval(&y, &y2, &w).unwrap();
        assert!((v - (0.7f64 / 0.3).ln()).abs() < 1e-12);
        assert_eq!(mp_eval(&y2, &y, &w).unwrap(), -v);
        assert_eq!(mp_eval(&y, &y, &w).unwrap(), 0.0);
    }

    #[test]
    fn assign_types_is_seeded() {
        let x = generate(&Window::centered(&[20, 20]).unwrap(), 0.5, 3, None).unwrap();
        let w = TypeWeights::uniform(0.5);
        let a = assign_types(&x, &w, 11).unwrap();
        assert_eq!(a, assign_types(&x, &w, 11).unwrap());
        assert_eq!(a.forget_types(), x);
        let ones = assign_types(&x, &TypeWeights::uniform(1.0), 0).unwrap();
        assert!(find_islands(&ones).unwrap().iter().all(|i| i.island_type == Some(1)));
    }

    #[test]
    fn generated_tilings_are_valid() {
        let w = Window::centered(&[24, 24]).unwrap();
        assert!(generate(&w, 0.0, 1, None).unwrap().cells.iter().all(|t| t.is_blank()));
        for seed in 0..5 {
            let g = generate(&w, 0.4, seed, None).unwrap();
            assert!(validate_tiles(&g).valid);
            assert!(g.cells.iter().any(|t| t.is_square()));
            assert_eq!(g, generate(&w, 0.4, seed, None).unwrap());
        }
    }

    #[test]
    fn partial_islands_are_completed() {
        let full_w = Window::new(LatticeVector::from([0, 0]), vec![8, 8]).unwrap();
        let mut full = TileConfig::blank(Alphabet::X18, full_w).unwrap();
        full.place_island(&LatticeVector::from([2, 4]), 2, 1).unwrap();
        let pw = Window::new(LatticeVector::from([2, 0]), vec![6, 8]).unwrap();
        let cells = pw.sites().map(|s| full.get(&s).unwrap()).collect();
        let partial = TileConfig::new(Alphabet::X18, pw, cells).unwrap();
        let out_w = Window::new(LatticeVector::from([-4, -4]), vec![16, 16]).unwrap();
        let g = generate(&out_w, 0.0, 0, Some(&partial)).unwrap();
        assert!(validate_tiles(&g).valid);
        let isl = find_islands(&g).unwrap();
        assert_eq!(isl.len(), 1);
        assert_eq!(isl[0].center, Some(LatticeVector::from([2, 4])));
    }

    #[test]
    fn typed_island_fillings_are_disconnected() {
        let frame = sea(7, Alphabet::Y26).to_configuration();
        let region: Vec<LatticeVector> = frame.window.interior(1).unwrap().sites().collect();
        let rule = TileRule { alphabet: Alphabet::Y26 };
        let rep = crate::pivot::pivot_connectivity(&rule, &frame, &region).unwrap();
        assert_eq!(rep.patterns, 3);
        assert_eq!(rep.components.len(), 3);
    }

    #[test]
    fn json_roundtrip() {
        let mut t = sea(7, Alphabet::Y26);
        t.place_island(&LatticeVector::zero(2), 2, 2).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"alphabet\":\"y26\""));
        assert_eq!(serde_json::from_str::<TileConfig>(&s).unwrap(), t);
        let w: TypeWeights = serde_json::from_str(r#"{"p":{"2":0.3}}"#).unwrap();
        assert_eq!(w.get(2), 0.3);
        assert_eq!(w.get(3), 0.5);
    }
}
