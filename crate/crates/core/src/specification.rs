//! Finite-volume objects: pattern enumeration, specification tables built from
//! a cocycle, their consistency axioms, and a heat-bath sampler.
//!
//! Throughout, a *frame* is a configuration on a window containing `F ∪ ∂F`;
//! only its values on `∂F` are read. Cells of the frame outside `F ∪ ∂F` are
//! never judged.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::{basis_eval_sites, check_basis_r, Alphas};
use crate::error::{invalid, Error, Result};
use crate::lattice::{bracket, boundary, Configuration, LatticeVector, LocalRule, Model, Window};

/// Environment variable overriding the enumeration pattern budget.
pub const BUDGET_ENV: &str = "MCOCYCLE_ENUM_CAP";

const DEFAULT_MAX_PATTERNS: usize = 1_000_000;
const DEFAULT_MAX_NODES: usize = 200_000_000;

/// Limits on exhaustive enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_patterns: usize,
    pub max_nodes: usize,
}

impl Budget {
    /// The default budget, with the pattern cap taken from `MCOCYCLE_ENUM_CAP` if set.
    pub fn from_env() -> Self {
        let max_patterns = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_PATTERNS);
        Budget {
            max_patterns,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

/// Every filling of `F` compatible with the boundary pattern on `∂F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSet {
    pub r: u32,
    /// `F`, sorted.
    pub region: Vec<LatticeVector>,
    /// `∂F`, sorted, with its values.
    pub boundary: Vec<LatticeVector>,
    pub boundary_values: Vec<u32>,
    /// One entry per filling, aligned with `region`.
    pub patterns: Vec<Vec<u32>>,
}

impl PatternSet {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// A frame on the bounding box of `F ∪ ∂F` carrying the boundary values
    /// and, if given, a filling of `F`; other cells are 0.
    pub fn frame(&self, filling: Option<&[u32]>) -> Result<Configuration> {
        let all: Vec<&LatticeVector> = self.region.iter().chain(&self.boundary).collect();
        let first = all
            .first()
            .ok_or_else(|| invalid("a pattern set with empty F and ∂F has no frame"))?;
        let d = first.d();
        let lo: Vec<i64> = (0..d).map(|a| all.iter().map(|s| s.0[a]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..d).map(|a| all.iter().map(|s| s.0[a]).max().unwrap()).collect();
        let dims = (0..d).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
        let window = Window::new(LatticeVector(lo), dims)?;
        let mut frame = Configuration::new(window.clone(), self.r, vec![0; window.len()])?;
        for (s, v) in self.boundary.iter().zip(&self.boundary_values) {
            frame.set(s, *v)?;
        }
        if let Some(f) = filling {
            for (s, v) in self.region.iter().zip(f) {
                frame.set(s, *v)?;
            }
        }
        Ok(frame)
    }
}

/// Enumerates fillings of `region` that are valid for `rule` together with
/// the frame's values on `∂region`. `F = ∅` yields the single empty pattern.
pub fn enumerate_patterns(
    rule: &dyn LocalRule,
    frame: &Configuration,
    region: &[LatticeVector],
) -> Result<PatternSet> {
    enumerate_with(rule, frame, region, Budget::from_env(), None)
}

/// [`enumerate_patterns`] with an explicit budget; `stop_after` ends the search
/// early (without error) once that many patterns are found.
pub fn enumerate_with(
    rule: &dyn LocalRule,
    frame: &Configuration,
    region: &[LatticeVector],
    budget: Budget,
    stop_after: Option<usize>,
) -> Result<PatternSet> {
    let q = rule.alphabet_size();
    if q != frame.r {
        return Err(invalid(format!(
            "rule alphabet has {q} symbols but the frame has r = {}",
            frame.r
        )));
    }
    if q > 64 {
        return Err(invalid("enumeration supports alphabets of at most 64 symbols"));
    }
    let w = &frame.window;
    let mut region: Vec<LatticeVector> = region.to_vec();
    region.sort();
    region.dedup();
    let bd = boundary(&region);
    let mut f_idx = Vec::with_capacity(region.len());
    for s in &region {
        f_idx.push(
            w.index_of(s)
                .ok_or_else(|| invalid(format!("site {s} of F is outside the frame")))?,
        );
    }
    let mut bd_idx = Vec::with_capacity(bd.len());
    for s in &bd {
        bd_idx.push(
            w.index_of(s)
                .ok_or_else(|| invalid(format!("boundary site {s} is outside the frame")))?,
        );
    }
    let boundary_values: Vec<u32> = bd_idx.iter().map(|&i| frame.cells[i]).collect();
    let mut out = PatternSet {
        r: q,
        region: region.clone(),
        boundary: bd.clone(),
        boundary_values,
        patterns: Vec::new(),
    };

    let mut search = Search::new(rule, frame, &f_idx, &bd_idx, budget, stop_after);
    if region.is_empty() {
        if rule.accepts(frame, &search.known) {
            out.patterns.push(Vec::new());
        }
        return Ok(out);
    }
    search.run()?;
    out.patterns = search.found;
    Ok(out)
}

struct Search<'a> {
    rule: &'a dyn LocalRule,
    work: Configuration,
    known: Vec<bool>,
    f_idx: Vec<usize>,
    pos_of: HashMap<usize, usize>,
    /// `up[axis][a]`: symbols allowed at `n + e_axis` next to `a` at `n`.
    up: Vec<Vec<u64>>,
    /// `down[axis][b]`: symbols allowed at `n` next to `b` at `n + e_axis`.
    down: Vec<Vec<u64>>,
    domains: Vec<u64>,
    budget: Budget,
    stop_after: Option<usize>,
    nodes: usize,
    found: Vec<Vec<u32>>,
}

impl<'a> Search<'a> {
    fn new(
        rule: &'a dyn LocalRule,
        frame: &Configuration,
        f_idx: &[usize],
        bd_idx: &[usize],
        budget: Budget,
        stop_after: Option<usize>,
    ) -> Self {
        let q = rule.alphabet_size();
        let d = frame.window.d();
        let mut up = vec![vec![0u64; q as usize]; d];
        let mut down = vec![vec![0u64; q as usize]; d];
        for axis in 0..d {
            for a in 0..q {
                for b in 0..q {
                    if rule.edge_allowed(axis, a, b) {
                        up[axis][a as usize] |= 1 << b;
                        down[axis][b as usize] |= 1 << a;
                    }
                }
            }
        }
        let mut known = vec![false; frame.cells.len()];
        for &i in bd_idx {
            known[i] = true;
        }
        let pos_of = f_idx.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        Search {
            rule,
            work: frame.clone(),
            known,
            f_idx: f_idx.to_vec(),
            pos_of,
            up,
            down,
            domains: Vec::new(),
            budget,
            stop_after,
            nodes: 0,
            found: Vec::new(),
        }
    }

    fn full_mask(&self) -> u64 {
        let q = self.rule.alphabet_size();
        if q == 64 {
            u64::MAX
        } else {
            (1u64 << q) - 1
        }
    }

    fn run(&mut self) -> Result<()> {
        let w = self.work.window.clone();
        let full = self.full_mask();
        self.domains = vec![full; self.f_idx.len()];
        for p in 0..self.f_idx.len() {
            let i = self.f_idx[p];
            for axis in 0..w.d() {
                if let Some(j) = w.neighbor(i, axis, 1) {
                    if self.known[j] {
                        self.domains[p] &= self.down[axis][self.work.cells[j] as usize];
                    }
                }
                if let Some(j) = w.neighbor(i, axis, -1) {
                    if self.known[j] {
                        self.domains[p] &= self.up[axis][self.work.cells[j] as usize];
                    }
                }
            }
        }
        if self.domains.contains(&0) {
            return Ok(());
        }
        self.descend(0)
    }

    fn done(&self) -> bool {
        self.stop_after.is_some_and(|n| self.found.len() >= n)
    }

    fn descend(&mut self, p: usize) -> Result<()> {
        if self.done() {
            return Ok(());
        }
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Err(Error::Budget {
                what: "search nodes",
                limit: self.budget.max_nodes,
                count: self.found.len(),
            });
        }
        if p == self.f_idx.len() {
            if self.rule.accepts(&self.work, &self.known) {
                if self.found.len() >= self.budget.max_patterns {
                    return Err(Error::Budget {
                        what: "patterns",
                        limit: self.budget.max_patterns,
                        count: self.found.len(),
                    });
                }
                self.found
                    .push(self.f_idx.iter().map(|&i| self.work.cells[i]).collect());
            }
            return Ok(());
        }
        let i = self.f_idx[p];
        let w = self.work.window.clone();
        let mut dom = self.domains[p];
        while dom != 0 {
            let v = dom.trailing_zeros();
            dom &= dom - 1;
            self.work.cells[i] = v;
            self.known[i] = true;
            let mut saved: Vec<(usize, u64)> = Vec::new();
            let mut dead = false;
            for axis in 0..w.d() {
                for sign in [1i64, -1] {
                    let Some(j) = w.neighbor(i, axis, sign) else { continue };
                    let Some(&q) = self.pos_of.get(&j) else { continue };
                    if q <= p {
                        continue;
                    }
                    let mask = if sign > 0 {
                        self.up[axis][v as usize]
                    } else {
                        self.down[axis][v as usize]
                    };
                    saved.push((q, self.domains[q]));
                    self.domains[q] &= mask;
                    if self.domains[q] == 0 {
                        dead = true;
                    }
                }
            }
            if !dead {
                self.descend(p + 1)?;
            }
            for (q, m) in saved.into_iter().rev() {
                self.domains[q] = m;
            }
            self.known[i] = false;
            if self.done() {
                break;
            }
        }
        Ok(())
    }
}

/// `Θ_{F,a}`: probabilities over the fillings of `F` proportional to
/// `exp(M(a ∨ z, a ∨ y))` for a fixed reference filling `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecTable {
    pub set: PatternSet,
    /// `M(a ∨ z, a ∨ y)` with `z` the first listed pattern.
    pub log_weights: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl SpecTable {
    pub fn probability_of(&self, filling: &[u32]) -> Option<f64> {
        self.set
            .patterns
            .iter()
            .position(|p| p.as_slice() == filling)
            .map(|i| self.probabilities[i])
    }
}

/// Builds the specification table of `M = Σ α_i M_i` on `region` with the
/// boundary read from `frame`.
pub fn theta_table(alphas: &Alphas<f64>, frame: &Configuration, region: &[LatticeVector]) -> Result<SpecTable> {
    alphas.validate()?;
    if frame.r != alphas.r {
        return Err(invalid("frame and alphas use different r"));
    }
    let model = Model::Xr;
    let rule = model.rule(frame.r)?;
    let set = enumerate_patterns(&rule, frame, region)?;
    table_from_set(alphas, set)
}

fn table_from_set(alphas: &Alphas<f64>, set: PatternSet) -> Result<SpecTable> {
    if set.is_empty() {
        return Err(Error::InvalidConfiguration(
            "the boundary pattern has no valid filling".into(),
        ));
    }
    if set.region.is_empty() || set.boundary.is_empty() {
        return Ok(SpecTable {
            log_weights: vec![0.0; set.len()],
            probabilities: vec![1.0 / set.len() as f64; set.len()],
            set,
        });
    }
    let mut sites: Vec<LatticeVector> = set.boundary.clone();
    sites.extend(set.region.iter().cloned());
    let nb = set.boundary.len();
    let fixed: Vec<bool> = (0..sites.len()).map(|i| i < nb).collect();
    let fill = |p: &[u32]| -> Vec<u32> {
        set.boundary_values.iter().chain(p).copied().collect()
    };
    let reference = fill(&set.patterns[0]);
    let mut log_weights = Vec::with_capacity(set.len());
    for p in &set.patterns {
        let rep = basis_eval_sites(set.r, &sites, &reference, &fill(p), &fixed, 0)?;
        log_weights.push(alphas.apply(&rep.basis));
    }
    let top = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_weights.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = raw.iter().sum();
    Ok(SpecTable {
        probabilities: raw.iter().map(|v| v / z).collect(),
        log_weights,
        set,
    })
}

/// An outer table on `H` together with inner tables on subsets `F ⊂ H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecFamily {
    pub outer: SpecTable,
    pub inner: Vec<SpecTable>,
}

/// Builds the outer table on `outer_region` and, for each inner region and
/// each boundary arising from an outer filling, the inner table.
pub fn nested_family(
    alphas: &Alphas<f64>,
    frame: &Configuration,
    outer_region: &[LatticeVector],
    inner_regions: &[Vec<LatticeVector>],
) -> Result<SpecFamily> {
    let outer = theta_table(alphas, frame, outer_region)?;
    let mut inner = Vec::new();
    for f in inner_regions {
        let mut seen = BTreeSet::new();
        for p in &outer.set.patterns {
            let mut full = frame.clone();
            for (s, v) in outer.set.region.iter().zip(p) {
                full.set(s, *v)?;
            }
            let key: Vec<u32> = boundary(f)
                .iter()
                .map(|s| full.get(s).ok_or_else(|| invalid(format!("{s} outside the frame"))))
                .collect::<Result<_>>()?;
            if seen.insert(key) {
                inner.push(theta_table(alphas, &full, f)?);
            }
        }
    }
    Ok(SpecFamily { outer, inner })
}

/// Which of the three specification axioms hold for a family of tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub support: bool,
    pub markov: bool,
    pub consistency: bool,
    pub failures: Vec<String>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.support && self.markov && self.consistency
    }
}

const AXIOM_TOL: f64 = 1e-9;

/// Checks support (every valid filling listed, all with positive mass), the
/// single-site Markov property of each table, and consistency of each inner
/// table with the outer one:
/// `Θ_{F,x}(z) = Θ_{H,y}([z ∨ x]) / Θ_{H,y}([x])` on `(F ∪ ∂F) ∩ H` and `∂F ∩ H`.
pub fn check_axioms(family: &SpecFamily) -> Result<AxiomReport> {
    let mut rep = AxiomReport {
        support: true,
        markov: true,
        consistency: true,
        failures: Vec::new(),
    };
    for (name, t) in std::iter::once(("outer".to_string(), &family.outer)).chain(
        family
            .inner
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("inner[{i}]"), t)),
    ) {
        check_support(&name, t, &mut rep)?;
        check_markov(&name, t, &mut rep);
    }
    for (i, t) in family.inner.iter().enumerate() {
        check_consistency(&format!("inner[{i}]"), &family.outer, t, &mut rep)?;
    }
    Ok(rep)
}

fn check_support(name: &str, t: &SpecTable, rep: &mut AxiomReport) -> Result<()> {
    if t.probabilities.len() != t.set.len() {
        rep.support = false;
        rep.failures
            .push(format!("{name}: {} probabilities for {} patterns", t.probabilities.len(), t.set.len()));
        return Ok(());
    }
    for (p, pr) in t.set.patterns.iter().zip(&t.probabilities) {
        if pr.is_nan() || *pr <= 0.0 {
            rep.support = false;
            rep.failures
                .push(format!("{name}: extendable pattern {p:?} has probability {pr}"));
        }
    }
    if t.set.region.is_empty() {
        return Ok(());
    }
    let frame = t.set.frame(None)?;
    let model = Model::Xr;
    let rule = model.rule(t.set.r)?;
    let fresh = enumerate_patterns(&rule, &frame, &t.set.region)?;
    let listed: BTreeSet<&Vec<u32>> = t.set.patterns.iter().collect();
    let valid: BTreeSet<&Vec<u32>> = fresh.patterns.iter().collect();
    if listed != valid {
        rep.support = false;
        rep.failures.push(format!(
            "{name}: table lists {} patterns but {} fillings are valid",
            listed.len(),
            valid.len()
        ));
    }
    let total: f64 = t.probabilities.iter().sum();
    if (total - 1.0).abs() > AXIOM_TOL {
        rep.support = false;
        rep.failures.push(format!("{name}: probabilities sum to {total}"));
    }
    Ok(())
}

fn check_markov(name: &str, t: &SpecTable, rep: &mut AxiomReport) {
    let region = &t.set.region;
    let pos: BTreeMap<&LatticeVector, usize> =
        region.iter().enumerate().map(|(i, s)| (s, i)).collect();
    for (v, site) in region.iter().enumerate() {
        let nbrs: Vec<usize> = site
            .neighbors()
            .iter()
            .filter_map(|n| pos.get(n).copied())
            .collect();
        let mut rest_mass: HashMap<Vec<u32>, f64> = HashMap::new();
        for (p, pr) in t.set.patterns.iter().zip(&t.probabilities) {
            let mut key = p.clone();
            key[v] = u32::MAX;
            *rest_mass.entry(key).or_default() += pr;
        }
        let mut local: HashMap<Vec<u32>, f64> = HashMap::new();
        for (p, pr) in t.set.patterns.iter().zip(&t.probabilities) {
            let mut key = p.clone();
            key[v] = u32::MAX;
            let mass = rest_mass[&key];
            if mass <= 0.0 {
                continue;
            }
            let cond = pr / mass;
            let mut lkey = vec![p[v]];
            lkey.extend(nbrs.iter().map(|&j| p[j]));
            match local.get(&lkey) {
                Some(prev) if (prev - cond).abs() > AXIOM_TOL => {
                    rep.markov = false;
                    rep.failures.push(format!(
                        "{name}: conditional law at {site} depends on more than its neighbours"
                    ));
                    return;
                }
                Some(_) => {}
                None => {
                    local.insert(lkey, cond);
                }
            }
        }
    }
}

fn check_consistency(name: &str, outer: &SpecTable, inner: &SpecTable, rep: &mut AxiomReport) -> Result<()> {
    let h: BTreeMap<&LatticeVector, usize> =
        outer.set.region.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let outer_bd: BTreeMap<&LatticeVector, u32> = outer
        .set
        .boundary
        .iter()
        .zip(&outer.set.boundary_values)
        .map(|(s, v)| (s, *v))
        .collect();
    let mut f_pos = Vec::new();
    for s in &inner.set.region {
        match h.get(s) {
            Some(&i) => f_pos.push(i),
            None => {
                rep.consistency = false;
                rep.failures.push(format!("{name}: site {s} of F is not in H"));
                return Ok(());
            }
        }
    }
    // Boundary of F split into the part inside H and the part on ∂H.
    let mut bd_in_h = Vec::new();
    for (s, v) in inner.set.boundary.iter().zip(&inner.set.boundary_values) {
        if let Some(&i) = h.get(s) {
            bd_in_h.push((i, *v));
        } else if outer_bd.get(s) != Some(v) {
            return Ok(());
        }
    }
    let matching: Vec<usize> = (0..outer.set.len())
        .filter(|&k| bd_in_h.iter().all(|&(i, v)| outer.set.patterns[k][i] == v))
        .collect();
    let denom: f64 = matching.iter().map(|&k| outer.probabilities[k]).sum();
    if denom <= 0.0 {
        return Ok(());
    }
    let mut marg: HashMap<Vec<u32>, f64> = HashMap::new();
    for &k in &matching {
        let key: Vec<u32> = f_pos.iter().map(|&i| outer.set.patterns[k][i]).collect();
        *marg.entry(key).or_default() += outer.probabilities[k] / denom;
    }
    for (z, pr) in inner.set.patterns.iter().zip(&inner.probabilities) {
        let expect = marg.remove(z).unwrap_or(0.0);
        if (expect - pr).abs() > AXIOM_TOL {
            rep.consistency = false;
            rep.failures.push(format!(
                "{name}: Θ_F({z:?}) = {pr} but the outer table gives {expect}"
            ));
        }
    }
    for (z, pr) in marg {
        if pr > AXIOM_TOL {
            rep.consistency = false;
            rep.failures
                .push(format!("{name}: outer table gives mass {pr} to unlisted filling {z:?}"));
        }
    }
    Ok(())
}

/// Sequential-sweep heat-bath dynamics for `Θ` of `M = Σ α_i M_i` on a box
/// region with the frame's values fixed on its boundary.
#[derive(Clone, Debug)]
pub struct HeatBath {
    alphas: Alphas<f64>,
    frame: Configuration,
    region: Vec<LatticeVector>,
    free: Vec<usize>,
}

/// Distribution of the sweep kernel's stationary law over all fillings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub set: PatternSet,
    pub probabilities: Vec<f64>,
    pub iterations: usize,
}

impl HeatBath {
    pub fn new(alphas: &Alphas<f64>, frame: &Configuration, region: &Window) -> Result<Self> {
        alphas.validate()?;
        check_basis_r(frame.r)?;
        if frame.r != alphas.r {
            return Err(invalid("frame and alphas use different r"));
        }
        let region_sites: Vec<LatticeVector> = region.sites().collect();
        let mut free = Vec::with_capacity(region_sites.len());
        for s in &region_sites {
            free.push(
                frame
                    .window
                    .index_of(s)
                    .ok_or_else(|| invalid(format!("region site {s} is outside the frame")))?,
            );
        }
        for s in boundary(&region_sites) {
            if !frame.window.contains(&s) {
                return Err(invalid(format!("boundary site {s} is outside the frame")));
            }
        }
        Ok(HeatBath {
            alphas: alphas.clone(),
            frame: frame.clone(),
            region: region_sites,
            free,
        })
    }

    /// The single-site law at cell `idx` given the rest of `state`.
    ///
    /// When all neighbours share a residue `c` the site may be `c - 1` or
    /// `c + 1`, and raising from the former to the latter has cocycle value
    /// `α_{c-1}`; otherwise the site is forced.
    pub fn conditional(&self, state: &[u32], idx: usize) -> Vec<(u32, f64)> {
        let w = &self.frame.window;
        let r = self.frame.r;
        let nb: Vec<u32> = w.neighbors(idx).map(|j| state[j]).collect();
        let options: Vec<u32> = (0..r)
            .filter(|&v| nb.iter().all(|&b| bracket(v, b, r).is_some()))
            .collect();
        match options.as_slice() {
            [] => Vec::new(),
            [v] => vec![(*v, 1.0)],
            _ => {
                let c = nb[0];
                let low = (c + r - 1) % r;
                let high = (c + 1) % r;
                let a = self.alphas.at(low as i64);
                let p_high = 1.0 / (1.0 + (-a).exp());
                vec![(low, 1.0 - p_high), (high, p_high)]
            }
        }
    }

    fn initial_state(&self) -> Result<Vec<u32>> {
        let model = Model::Xr;
        let rule = model.rule(self.frame.r)?;
        let w = &self.frame.window;
        let in_play: BTreeSet<usize> = self
            .free
            .iter()
            .copied()
            .chain(boundary(&self.region).iter().filter_map(|s| w.index_of(s)))
            .collect();
        let frame_ok = w.edges().all(|(i, j, axis)| {
            !(in_play.contains(&i) && in_play.contains(&j))
                || rule.edge_allowed(axis, self.frame.cells[i], self.frame.cells[j])
        });
        if frame_ok {
            return Ok(self.frame.cells.clone());
        }
        let set = enumerate_with(&rule, &self.frame, &self.region, Budget::from_env(), Some(1))?;
        let first = set.patterns.first().ok_or_else(|| {
            Error::InvalidConfiguration("the boundary pattern has no valid filling".into())
        })?;
        let mut state = self.frame.cells.clone();
        for (k, &i) in self.free.iter().enumerate() {
            state[i] = first[k];
        }
        Ok(state)
    }

    fn sweep(&self, state: &mut [u32], rng: &mut ChaCha8Rng) {
        for &i in &self.free {
            let law = self.conditional(state, i);
            state[i] = match law.as_slice() {
                [(v, _)] => *v,
                [(a, pa), (b, _)] => {
                    if rng.gen::<f64>() < *pa {
                        *a
                    } else {
                        *b
                    }
                }
                _ => state[i],
            };
        }
    }

    /// The state after `sweeps` sweeps from a deterministic start.
    pub fn sample(&self, sweeps: usize, seed: u64) -> Result<Configuration> {
        Ok(self.sample_path(sweeps, seed, 0, sweeps.max(1))?.pop().unwrap_or_else(|| self.frame.clone()))
    }

    /// States recorded every `thin` sweeps after `burn_in` sweeps, for `sweeps` sweeps in total.
    pub fn sample_path(&self, sweeps: usize, seed: u64, burn_in: usize, thin: usize) -> Result<Vec<Configuration>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = self.initial_state()?;
        let thin = thin.max(1);
        let mut out = Vec::new();
        for t in 1..=sweeps {
            self.sweep(&mut state, &mut rng);
            if t > burn_in && (t - burn_in).is_multiple_of(thin) {
                out.push(Configuration {
                    window: self.frame.window.clone(),
                    r: self.frame.r,
                    cells: state.clone(),
                });
            }
        }
        Ok(out)
    }

    /// Exact stationary law of one full sweep, by power iteration over all
    /// fillings until successive iterates differ by less than `1e-14` in ℓ¹.
    pub fn stationary(&self) -> Result<StationaryDistribution> {
        let model = Model::Xr;
        let rule = model.rule(self.frame.r)?;
        let set = enumerate_patterns(&rule, &self.frame, &self.region)?;
        if set.is_empty() {
            return Err(Error::InvalidConfiguration(
                "the boundary pattern has no valid filling".into(),
            ));
        }
        let index: HashMap<&Vec<u32>, usize> =
            set.patterns.iter().enumerate().map(|(i, p)| (p, i)).collect();
        // Per free site, the transition lists of every state.
        let mut kernels: Vec<Vec<Vec<(usize, f64)>>> = Vec::with_capacity(self.free.len());
        let mut state = self.frame.cells.clone();
        for (k, &cell) in self.free.iter().enumerate() {
            let mut rows = Vec::with_capacity(set.len());
            for p in &set.patterns {
                for (kk, &i) in self.free.iter().enumerate() {
                    state[i] = p[kk];
                }
                let mut row = Vec::new();
                for (v, pr) in self.conditional(&state, cell) {
                    let mut q = p.clone();
                    q[k] = v;
                    let j = *index
                        .get(&q)
                        .ok_or_else(|| Error::InvalidConfiguration("kernel left the pattern set".into()))?;
                    row.push((j, pr));
                }
                rows.push(row);
            }
            kernels.push(rows);
        }
        let n = set.len();
        let mut pi = vec![1.0 / n as f64; n];
        let mut iterations = 0;
        loop {
            let mut cur = pi.clone();
            for rows in &kernels {
                let mut next = vec![0.0; n];
                for (s, row) in rows.iter().enumerate() {
                    for &(t, pr) in row {
                        next[t] += cur[s] * pr;
                    }
                }
                cur = next;
            }
            iterations += 1;
            let delta: f64 = cur.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = cur;
            if delta < 1e-14 || iterations >= 200_000 {
                break;
            }
        }
        Ok(StationaryDistribution {
            set,
            probabilities: pi,
            iterations,
        })
    }
}

/// Output of [`heat_bath`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HeatBathOutput {
    Sample(Configuration),
    Exact(StationaryDistribution),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatBathMode {
    Sample,
    Exact,
}

pub fn heat_bath(
    alphas: &Alphas<f64>,
    frame: &Configuration,
    region: &Window,
    sweeps: usize,
    seed: u64,
    mode: HeatBathMode,
) -> Result<HeatBathOutput> {
    let hb = HeatBath::new(alphas, frame, region)?;
    match mode {
        HeatBathMode::Sample => hb.sample(sweeps, seed).map(HeatBathOutput::Sample),
        HeatBathMode::Exact => hb.stationary().map(HeatBathOutput::Exact),
    }
}

/// Mean bracket `[x_{n+e_j} - x_n]` per axis, with batch-means standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: Vec<f64>,
    pub std_error: Vec<f64>,
    pub samples: usize,
}

/// Averages `[x_{n+e_j} - x_n]` over sites `n` off the window's outer layer
/// (over every site when the window is too thin to have such sites).
///
/// Summing over every edge of a window would telescope to a function of the
/// outer layer alone, which a fixed-boundary sampler never changes.
pub fn slope_estimate(samples: &[Configuration]) -> Result<SlopeEstimate> {
    let first = samples.first().ok_or_else(|| invalid("no samples"))?;
    let d = first.window.d();
    let mut per_sample: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
    for c in samples {
        if c.window.d() != d {
            return Err(invalid("samples must share the dimension"));
        }
        let mut sums = vec![0.0; d];
        let mut counts = vec![0usize; d];
        let thin = c.window.interior(1).is_none();
        for (i, j, axis) in c.window.edges() {
            if !thin && c.window.depth(i) == 0 {
                continue;
            }
            let b = bracket(c.cells[j], c.cells[i], c.r).ok_or_else(|| {
                Error::InvalidConfiguration(format!(
                    "bracket undefined between {} and {}",
                    c.window.site(i),
                    c.window.site(j)
                ))
            })?;
            sums[axis] += b as f64;
            counts[axis] += 1;
        }
        per_sample.push(
            (0..d)
                .map(|a| if counts[a] > 0 { sums[a] / counts[a] as f64 } else { 0.0 })
                .collect(),
        );
    }
    let n = per_sample.len();
    let slope: Vec<f64> = (0..d)
        .map(|a| per_sample.iter().map(|v| v[a]).sum::<f64>() / n as f64)
        .collect();
    let batches = n.min(20);
    let std_error = (0..d)
        .map(|a| {
            if batches < 2 {
                return 0.0;
            }
            let size = n / batches;
            let means: Vec<f64> = (0..batches)
                .map(|b| per_sample[b * size..(b + 1) * size].iter().map(|v| v[a]).sum::<f64>() / size as f64)
                .collect();
            let m = means.iter().sum::<f64>() / batches as f64;
            let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
            (var / batches as f64).sqrt()
        })
        .collect();
    Ok(SlopeEstimate {
        slope,
        std_error,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chessboard(dims: &[usize], r: u32) -> Configuration {
        Configuration::from_fn(Window::centered(dims).unwrap(), r, |s| s.l1().rem_euclid(2))
    }

    #[test]
    fn empty_region_has_one_pattern() {
        let frame = chessboard(&[3, 3], 3);
        let model = Model::Xr;
        let set = enumerate_patterns(&model.rule(3).unwrap(), &frame, &[]).unwrap();
        assert_eq!(set.patterns, vec![Vec::<u32>::new()]);
    }

    #[test]
    fn single_site_x3_with_zero_boundary() {
        let frame = Configuration::from_fn(Window::centered(&[3, 3]).unwrap(), 3, |_| 0);
        let model = Model::Xr;
        let set = enumerate_patterns(&model.rule(3).unwrap(), &frame, &[LatticeVector::zero(2)]).unwrap();
        assert_eq!(set.patterns, vec![vec![1], vec![2]]);
    }

    #[test]
    fn budget_is_enforced() {
        let frame = chessboard(&[6, 6], 3);
        let model = Model::Xr;
        let region: Vec<LatticeVector> = frame.window.interior(1).unwrap().sites().collect();
        let budget = Budget {
            max_patterns: 3,
            max_nodes: 1_000_000,
        };
        assert!(matches!(
            enumerate_with(&model.rule(3).unwrap(), &frame, &region, budget, None),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn single_site_theta_matches_closed_form() {
        let frame = Configuration::from_fn(Window::centered(&[3, 3]).unwrap(), 3, |_| 0);
        for a2 in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let alphas = Alphas::new(vec![0.3, -0.7, a2]).unwrap();
            let t = theta_table(&alphas, &frame, &[LatticeVector::zero(2)]).unwrap();
            let p1 = t.probability_of(&[1]).unwrap();
            let expect = f64::exp(a2) / (1.0 + f64::exp(a2));
            assert!((p1 - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_agrees_with_single_site_table() {
        let alphas = Alphas::new(vec![0.4, -1.1, 0.9, 0.2, -0.5]).unwrap();
        for c in 0..5u32 {
            let frame = Configuration::from_fn(Window::centered(&[3, 3]).unwrap(), 5, |_| c as i64);
            let t = theta_table(&alphas, &frame, &[LatticeVector::zero(2)]).unwrap();
            let hb = HeatBath::new(&alphas, &frame, &Window::centered(&[1, 1]).unwrap()).unwrap();
            for (v, p) in hb.conditional(&frame.cells, 4) {
                assert!((t.probability_of(&[v]).unwrap() - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn slope_of_frozen_chessboard() {
        let c = chessboard(&[5, 5], 2);
        let s = slope_estimate(&[c]).unwrap();
        assert_eq!(s.slope, vec![1.0, 1.0]);
        let tilted = Configuration::from_fn(Window::centered(&[7, 7]).unwrap(), 3, |s| s.0[0] + s.0[1]);
        assert_eq!(slope_estimate(&[tilted]).unwrap().slope, vec![1.0, 1.0]);
    }

    #[test]
    fn slope_of_symmetric_pyramid_is_small() {
        let c = Configuration::from_fn(Window::centered(&[11, 11]).unwrap(), 3, |s| s.l1());
        for v in slope_estimate(&[c]).unwrap().slope {
            assert!(v.abs() <= 1.0 / 9.0 + 1e-12);
        }
    }
}
