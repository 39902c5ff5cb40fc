//! The `mcocycle` command line. Every subcommand reads JSON files (`-` for
//! stdin) and writes one JSON document to stdout.
//!
//! Exit codes: 0 on success, 1 on a domain error (stdout then carries
//! `{"error": kind, "message": ...}`) or a failed validation, 2 on a usage error.

use std::fs;
use std::io::Read;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cocycle::{basis_eval, crossing_count, decompose, eval, Alphas};
use crate::error::{invalid, Error, Result};
use crate::height::{
    flat_extension_traced, lift, lift_pair, max_height, patch, steep_to_flat_traced, HeightFunction,
};
use crate::interaction::{
    f_phi, gibbs_eval, symmetrize, synth_invariant, synth_nonstationary, AnyInteraction, InteractionJson,
};
use crate::lattice::{boundary, Configuration, EdgeSft, Graph, HomoclinicPair, LatticeVector, LocalRule, Model, SiteMap, Window};
use crate::pivot::{eval_via_chain, pivot_chain_coloring, pivot_chain_xr, pivot_connectivity, pivot_walk, PivotChain};
use crate::specification::{
    check_axioms, enumerate_with, heat_bath, nested_family, slope_estimate, theta_table, Budget, HeatBath,
    HeatBathMode,
};
use crate::squareisland::{
    assign_types, census, find_islands, generate, mp_eval, validate_tiles, Alphabet, TileConfig, TileRule,
    TypeWeights,
};

#[derive(Parser, Debug)]
#[command(name = "mcocycle", version, about = "Markov cocycles on residue lattice models and square-island tilings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelName {
    Xr,
    X4,
    Coloring,
    Graph,
    Sft,
    Tiles,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    /// Graph JSON for `--model graph`.
    #[arg(long)]
    graph: Option<String>,
    /// Edge-shift JSON for `--model sft`.
    #[arg(long)]
    sft: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a configuration against a model's local rules.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        config: String,
    },
    /// Outer vertex boundary of a set of sites.
    Boundary {
        /// Box region such as `3x3@-1,-1`.
        #[arg(long, conflicts_with = "sites")]
        region: Option<String>,
        /// Semicolon-separated sites such as `0,0;1,0`.
        #[arg(long)]
        sites: Option<String>,
    },
    /// Height difference between two sites of an X_r configuration.
    Grad {
        #[arg(long)]
        config: String,
        #[arg(long, allow_hyphen_values = true)]
        from: LatticeVector,
        #[arg(long, allow_hyphen_values = true)]
        to: LatticeVector,
    },
    /// Lift an X_r configuration to a height function.
    Lift {
        #[arg(long)]
        config: String,
        #[arg(long, allow_hyphen_values = true)]
        base: Option<LatticeVector>,
        #[arg(long, allow_hyphen_values = true)]
        base_value: Option<i64>,
    },
    /// Lift both halves of a homoclinic pair with a common base.
    LiftPair {
        #[arg(long)]
        pair: String,
    },
    /// Maximal height extension into a region from the heights on its boundary.
    MaxHeight {
        #[arg(long)]
        heights: String,
        #[arg(long)]
        region: Window,
    },
    /// Flatten a steep height function inside a region, boundary fixed.
    Flatten {
        #[arg(long)]
        heights: String,
        #[arg(long)]
        region: Window,
        /// Also report the single-site moves.
        #[arg(long)]
        trace: bool,
    },
    /// Flat extension of a height function around D_N.
    FlatExtend {
        #[arg(long)]
        heights: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trace: bool,
    },
    /// Glue x on D_N into y far outside.
    Patch {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// Signed crossing count N_i(a, b).
    CrossingCount {
        #[arg(long)]
        i: u32,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true)]
        b: i64,
        #[arg(long)]
        r: u32,
    },
    /// Basis values of a pair, and M(x, y) when coefficients are given.
    CocycleEval {
        #[arg(long)]
        pair: String,
        #[arg(long)]
        alphas: Option<String>,
    },
    /// Split coefficients into a Gibbs part and a multiple of the height change.
    Decompose {
        #[arg(long)]
        alphas: String,
    },
    /// Pivot chain between the halves of an X_r pair.
    PivotChain {
        #[arg(long)]
        pair: String,
    },
    /// Pivot chain between two proper colourings of a graph.
    PivotChainColoring {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        colors: u32,
        /// JSON array of colours.
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Sum a cocycle over the pivots of a chain.
    EvalViaChain {
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        chain: String,
    },
    /// Components of the single-site move graph on the fillings of a region.
    PivotConnectivity {
        #[command(flatten)]
        model: ModelArgs,
        /// Frame configuration (a tiling for `--model tiles`).
        #[arg(long)]
        boundary: String,
        #[arg(long)]
        region: Window,
        /// Explore by random walk for this many steps instead of enumerating.
        #[arg(long, requires = "seed")]
        walk: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Telescoped Gibbs cocycle of an interaction on a pair.
    GibbsEval {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        pair: String,
    },
    /// Shift-invariant interaction for zero-sum coefficients.
    SynthInvariant {
        #[arg(long)]
        alphas: String,
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
    /// Position-dependent interaction on a window for any coefficients.
    SynthNonstationary {
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        window: Window,
    },
    /// Symmetrized form of a shift-invariant interaction.
    Symmetrize {
        #[arg(long)]
        phi: String,
    },
    /// Local energy f_phi of a pattern on the origin and its neighbours.
    FPhi {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        pattern: String,
    },
    /// All valid fillings of a region given the boundary.
    Enumerate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        boundary: String,
        #[arg(long)]
        region: Window,
        /// Stop after this many patterns.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Conditional probability table of a region.
    Theta {
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        boundary: String,
        #[arg(long)]
        region: Window,
    },
    /// Support, Markov and consistency checks on nested tables.
    CheckAxioms {
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        boundary: String,
        #[arg(long)]
        outer: Window,
        /// Inner regions; repeat the flag for several.
        #[arg(long, required = true)]
        inner: Vec<Window>,
    },
    /// Heat-bath sampler, or its exact stationary law on a small region.
    HeatBath {
        #[arg(long)]
        alphas: String,
        /// Region to resample.
        #[arg(long)]
        window: Window,
        #[arg(long)]
        boundary: String,
        #[arg(long, default_value_t = 1000)]
        sweeps: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Mode::Sample)]
        mode: Mode,
    },
    /// Mean slope from stored samples or from a fresh heat-bath run.
    Slope {
        /// JSON array of configurations.
        #[arg(long, conflicts_with_all = ["alphas", "window", "boundary"])]
        samples: Option<String>,
        #[arg(long)]
        alphas: Option<String>,
        #[arg(long)]
        window: Option<Window>,
        #[arg(long)]
        boundary: Option<String>,
        #[arg(long, default_value_t = 1000)]
        sweeps: usize,
        #[arg(long, default_value_t = 100)]
        burn_in: usize,
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a tiling against the square-island constraints.
    TilesValidate {
        #[arg(long)]
        tiles: String,
    },
    /// Islands of a tiling and their counts by size and type.
    TilesIslands {
        #[arg(long)]
        tiles: String,
        /// Count only islands meeting this box.
        #[arg(long)]
        region: Option<Window>,
    },
    /// Randomly type the islands of an untyped tiling.
    TilesAssign {
        #[arg(long)]
        tiles: String,
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        ascii: bool,
    },
    /// Type-assignment cocycle of two typed tilings.
    TilesCocycle {
        #[arg(long)]
        y: String,
        #[arg(long)]
        y2: String,
        #[arg(long)]
        weights: Option<String>,
    },
    /// Random valid tiling, optionally completing a partial one.
    TilesGenerate {
        #[arg(long)]
        window: Window,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        partial: Option<String>,
        #[arg(long)]
        ascii: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Sample,
    Exact,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Output {
    Json(Value),
    /// JSON with exit status 1, for validations that found violations.
    Failed(Value),
    Text(String),
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(Output::Json(v)) => Outcome { code: 0, stdout: pretty(&v), stderr: String::new() },
        Ok(Output::Failed(v)) => Outcome { code: 1, stdout: pretty(&v), stderr: String::new() },
        Ok(Output::Text(t)) => Outcome { code: 0, stdout: t, stderr: String::new() },
        Err(Usage(msg)) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {msg}\n") },
        Err(Domain(e)) => Outcome {
            code: 1,
            stdout: pretty(&json!({"error": e.kind(), "message": e.to_string()})),
            stderr: String::new(),
        },
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

enum Failure {
    Usage(String),
    Domain(Error),
}
use Failure::{Domain, Usage};

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Domain(e)
    }
}

type Cmd = std::result::Result<Output, Failure>;

fn read_text(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}

fn read_json<T: DeserializeOwned>(path: &str) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn ok<T: Serialize>(v: &T) -> Cmd {
    Ok(Output::Json(to_json(v)?))
}

fn need_seed(seed: Option<u64>, what: &str) -> std::result::Result<u64, Failure> {
    seed.ok_or_else(|| Usage(format!("{what} is randomized and requires --seed")))
}

fn load_model(m: &ModelArgs) -> std::result::Result<Model, Failure> {
    Ok(match m.model {
        ModelName::Xr => Model::Xr,
        ModelName::X4 => Model::X4,
        ModelName::Coloring => Model::Coloring,
        ModelName::Graph => {
            let p = m.graph.as_deref().ok_or_else(|| Usage("--model graph needs --graph".into()))?;
            Model::GraphColoring(read_json::<Graph>(p)?)
        }
        ModelName::Sft => {
            let p = m.sft.as_deref().ok_or_else(|| Usage("--model sft needs --sft".into()))?;
            Model::Sft(EdgeSft::from_json(&read_json::<Value>(p)?)?)
        }
        ModelName::Tiles => {
            return Err(Usage("use tiles-validate for tilings".into()));
        }
    })
}

type Frame = (Configuration, Box<dyn LocalRule>, Option<Alphabet>);

/// A frame and its rule, reading tilings for `--model tiles`.
fn load_frame(m: &ModelArgs, path: &str) -> std::result::Result<Frame, Failure> {
    if let ModelName::Tiles = m.model {
        let t: TileConfig = read_json(path)?;
        return Ok((t.to_configuration(), Box::new(TileRule { alphabet: t.alphabet }), Some(t.alphabet)));
    }
    let model = load_model(m)?;
    let frame: Configuration = read_json(path)?;
    // `ModelRule` borrows the model, so the owned rule below rebuilds it per call.
    struct Owned(Model, u32);
    impl LocalRule for Owned {
        fn alphabet_size(&self) -> u32 {
            self.1
        }
        fn edge_allowed(&self, axis: usize, low: u32, high: u32) -> bool {
            self.0.rule(self.1).is_ok_and(|r| r.edge_allowed(axis, low, high))
        }
        fn accepts(&self, config: &Configuration, known: &[bool]) -> bool {
            self.0.rule(self.1).is_ok_and(|r| r.accepts(config, known))
        }
    }
    model.rule(frame.r)?;
    let r = frame.r;
    Ok((frame, Box::new(Owned(model, r)), None))
}

fn region_sites(w: &Window) -> Vec<LatticeVector> {
    w.sites().collect()
}

fn decode_patterns(alphabet: Option<Alphabet>, patterns: &[Vec<u32>]) -> Option<Vec<Vec<String>>> {
    let a = alphabet?;
    Some(
        patterns
            .iter()
            .map(|p| p.iter().map(|&v| a.decode(v).map_or("?".into(), |t| t.to_string())).collect())
            .collect(),
    )
}

fn load_interaction(path: &str) -> Result<AnyInteraction> {
    read_json::<InteractionJson>(path)?.parse()
}

fn dispatch(cmd: Command) -> Cmd {
    match cmd {
        Command::Validate { model, config } => {
            let model = load_model(&model)?;
            let c: Configuration = read_json(&config)?;
            let rep = model.validate(&c)?;
            let v = to_json(&rep)?;
            Ok(if rep.valid { Output::Json(v) } else { Output::Failed(v) })
        }
        Command::Boundary { region, sites } => {
            let sites: Vec<LatticeVector> = match (region, sites) {
                (Some(r), _) => region_sites(&r.parse()?),
                (None, Some(s)) => s
                    .split(';')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| t.trim().parse())
                    .collect::<Result<_>>()?,
                (None, None) => return Err(Usage("boundary needs --region or --sites".into())),
            };
            ok(&boundary(&sites))
        }
        Command::Grad { config, from, to } => {
            let c: Configuration = read_json(&config)?;
            ok(&json!({ "grad": crate::height::grad(&c, &from, &to)? }))
        }
        Command::Lift { config, base, base_value } => {
            let c: Configuration = read_json(&config)?;
            let base = base.unwrap_or_else(|| c.window.site(0));
            let value = match base_value {
                Some(v) => v,
                None => c.get(&base).ok_or_else(|| invalid(format!("base {base} is outside the window")))? as i64,
            };
            ok(&lift(&c, &base, value)?)
        }
        Command::LiftPair { pair } => {
            let p: HomoclinicPair = read_json(&pair)?;
            let (x, y) = lift_pair(&p)?;
            ok(&json!({ "x": to_json(&x)?, "y": to_json(&y)? }))
        }
        Command::MaxHeight { heights, region } => {
            let hf: HeightFunction = read_json(&heights)?;
            let f = region_sites(&region);
            let mut bd: SiteMap<i64> = SiteMap::new();
            for s in boundary(&f) {
                let v = hf
                    .get(&s)
                    .ok_or_else(|| invalid(format!("boundary site {s} is outside the height window")))?;
                bd.insert(s, v);
            }
            let ext = max_height(&bd, &f)?;
            let mut values = hf.values.clone();
            for (s, v) in &ext {
                if let Some(i) = hf.window.index_of(s) {
                    values[i] = *v;
                }
            }
            ok(&hf.with_values(values))
        }
        Command::Flatten { heights, region, trace } => {
            let hf: HeightFunction = read_json(&heights)?;
            let (out, steps) = steep_to_flat_traced(&hf, &region_sites(&region))?;
            if trace {
                ok(&json!({ "heights": to_json(&out)?, "steps": to_json(&steps)? }))
            } else {
                ok(&out)
            }
        }
        Command::FlatExtend { heights, n, trace } => {
            let hf: HeightFunction = read_json(&heights)?;
            let (out, steps) = flat_extension_traced(&hf, n)?;
            if trace {
                ok(&json!({ "heights": to_json(&out)?, "steps": to_json(&steps)? }))
            } else {
                ok(&out)
            }
        }
        Command::Patch { x, y, n, k } => {
            let x: Configuration = read_json(&x)?;
            let y: Configuration = read_json(&y)?;
            ok(&patch(&x, &y, n, k)?)
        }
        Command::CrossingCount { i, a, b, r } => {
            if r == 0 || i >= r {
                return Err(Domain(invalid("need 0 <= i < r")));
            }
            ok(&json!({ "count": crossing_count(i, a, b, r) }))
        }
        Command::CocycleEval { pair, alphas } => {
            let p: HomoclinicPair = read_json(&pair)?;
            let rep = basis_eval(&p)?;
            let mut v = to_json(&rep)?;
            if let Some(a) = alphas {
                let a: Alphas<f64> = read_json(&a)?;
                v["value"] = json!(eval(&a, &p)?);
            }
            Ok(Output::Json(v))
        }
        Command::Decompose { alphas } => {
            let a: Alphas<f64> = read_json(&alphas)?;
            ok(&decompose(&a)?)
        }
        Command::PivotChain { pair } => {
            let p: HomoclinicPair = read_json(&pair)?;
            ok(&pivot_chain_xr(&p)?)
        }
        Command::PivotChainColoring { graph, colors, x, y } => {
            let g: Graph = read_json(&graph)?;
            let x: Vec<u32> = read_json(&x)?;
            let y: Vec<u32> = read_json(&y)?;
            ok(&pivot_chain_coloring(&g, colors, &x, &y)?)
        }
        Command::EvalViaChain { alphas, chain } => {
            let a: Alphas<f64> = read_json(&alphas)?;
            let c: PivotChain = read_json(&chain)?;
            ok(&json!({ "value": eval_via_chain(&a, &c)?, "pivots": c.len() }))
        }
        Command::PivotConnectivity { model, boundary, region, walk, seed } => {
            let (frame, rule, alphabet) = load_frame(&model, &boundary)?;
            let f = region_sites(&region);
            let rep = match walk {
                Some(steps) => pivot_walk(rule.as_ref(), &frame, &f, steps, need_seed(seed, "a random walk")?)?,
                None => pivot_connectivity(rule.as_ref(), &frame, &f)?,
            };
            let mut v = to_json(&rep)?;
            if let Some(set) = &rep.set {
                v["region"] = to_json(&set.region)?;
                v["fillings"] = match decode_patterns(alphabet, &set.patterns) {
                    Some(codes) => to_json(&codes)?,
                    None => to_json(&set.patterns)?,
                };
            }
            Ok(Output::Json(v))
        }
        Command::GibbsEval { phi, pair } => {
            let p: HomoclinicPair = read_json(&pair)?;
            let value = match load_interaction(&phi)? {
                AnyInteraction::Invariant(i) => gibbs_eval(&i, &p)?,
                AnyInteraction::Positional(i) => gibbs_eval(&i, &p)?,
            };
            ok(&json!({ "value": value }))
        }
        Command::SynthInvariant { alphas, d } => {
            let a: Alphas<f64> = read_json(&alphas)?;
            ok(&InteractionJson::from(&synth_invariant(&a, d)?))
        }
        Command::SynthNonstationary { alphas, window } => {
            let a: Alphas<f64> = read_json(&alphas)?;
            ok(&InteractionJson::from(&synth_nonstationary(&a, &window)?))
        }
        Command::Symmetrize { phi } => match load_interaction(&phi)? {
            AnyInteraction::Invariant(i) => ok(&InteractionJson::from(&symmetrize(&i)?)),
            AnyInteraction::Positional(_) => Err(Domain(invalid("symmetrize takes a shift-invariant interaction"))),
        },
        Command::FPhi { phi, pattern } => {
            let c: Configuration = read_json(&pattern)?;
            match load_interaction(&phi)? {
                AnyInteraction::Invariant(i) => ok(&json!({ "value": f_phi(&i, &c)? })),
                AnyInteraction::Positional(_) => Err(Domain(invalid("f-phi takes a shift-invariant interaction"))),
            }
        }
        Command::Enumerate { model, boundary, region, limit } => {
            let (frame, rule, alphabet) = load_frame(&model, &boundary)?;
            let set = enumerate_with(rule.as_ref(), &frame, &region_sites(&region), Budget::from_env(), limit)?;
            let mut v = to_json(&set)?;
            if let Some(codes) = decode_patterns(alphabet, &set.patterns) {
                v["patterns"] = to_json(&codes)?;
            }
            v["count"] = json!(set.len());
            Ok(Output::Json(v))
        }
        Command::Theta { alphas, boundary, region } => {
            let a: Alphas<f64> = read_json(&alphas)?;
            let frame: Configuration = read_json(&boundary)?;
            ok(&theta_table(&a, &frame, &region_sites(&region))?)
        }
        Command::CheckAxioms { alphas, boundary, outer, inner } => {
            let a: Alphas<f64> = read_json(&alphas)?;
            let frame: Configuration = read_json(&boundary)?;
            let inner: Vec<Vec<LatticeVector>> = inner.iter().map(region_sites).collect();
            let fam = nested_family(&a, &frame, &region_sites(&outer), &inner)?;
            let rep = check_axioms(&fam)?;
            let v = to_json(&rep)?;
            Ok(if rep.all_pass() { Output::Json(v) } else { Output::Failed(v) })
        }
        Command::HeatBath { alphas, window, boundary, sweeps, seed, mode } => {
            let a: Alphas<f64> = read_json(&alphas)?;
            let frame: Configuration = read_json(&boundary)?;
            let (mode, seed) = match mode {
                Mode::Sample => (HeatBathMode::Sample, need_seed(seed, "heat-bath sampling")?),
                Mode::Exact => (HeatBathMode::Exact, seed.unwrap_or(0)),
            };
            ok(&heat_bath(&a, &frame, &window, sweeps, seed, mode)?)
        }
        Command::Slope { samples, alphas, window, boundary, sweeps, burn_in, thin, seed } => {
            let configs: Vec<Configuration> = match samples {
                Some(p) => read_json(&p)?,
                None => {
                    let (Some(a), Some(w), Some(b)) = (alphas, window, boundary) else {
                        return Err(Usage("slope needs --samples or all of --alphas, --window, --boundary".into()));
                    };
                    let seed = need_seed(seed, "slope sampling")?;
                    let a: Alphas<f64> = read_json(&a)?;
                    let frame: Configuration = read_json(&b)?;
                    HeatBath::new(&a, &frame, &w)?.sample_path(sweeps, seed, burn_in, thin)?
                }
            };
            ok(&slope_estimate(&configs)?)
        }
        Command::TilesValidate { tiles } => {
            let t: TileConfig = read_json(&tiles)?;
            let rep = validate_tiles(&t);
            let v = to_json(&rep)?;
            Ok(if rep.valid { Output::Json(v) } else { Output::Failed(v) })
        }
        Command::TilesIslands { tiles, region } => {
            let t: TileConfig = read_json(&tiles)?;
            let islands = find_islands(&t)?;
            let reg = region.as_ref().map(region_sites);
            let counts = census(&islands, reg.as_deref());
            let counts: serde_json::Map<String, Value> = counts
                .into_iter()
                .map(|(k, c)| Ok((k.to_string(), to_json(&c)?)))
                .collect::<Result<_>>()?;
            ok(&json!({ "islands": to_json(&islands)?, "counts": counts }))
        }
        Command::TilesAssign { tiles, weights, seed, ascii } => {
            let t: TileConfig = read_json(&tiles)?;
            let w: TypeWeights = weights.map(|p| read_json(&p)).transpose()?.unwrap_or_default();
            tiles_out(&assign_types(&t, &w, seed)?, ascii)
        }
        Command::TilesCocycle { y, y2, weights } => {
            let y: TileConfig = read_json(&y)?;
            let y2: TileConfig = read_json(&y2)?;
            let w: TypeWeights = weights.map(|p| read_json(&p)).transpose()?.unwrap_or_default();
            ok(&json!({ "value": mp_eval(&y, &y2, &w)? }))
        }
        Command::TilesGenerate { window, density, seed, partial, ascii } => {
            let partial: Option<TileConfig> = partial.map(|p| read_json(&p)).transpose()?;
            tiles_out(&generate(&window, density, seed, partial.as_ref())?, ascii)
        }
    }
}

fn tiles_out(t: &TileConfig, ascii: bool) -> Cmd {
    if ascii {
        Ok(Output::Text(t.render()))
    } else {
        ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> Outcome {
        run(std::iter::once("mcocycle").chain(args.iter().copied()))
    }

    #[test]
    fn crossing_count_command() {
        let o = call(&["crossing-count", "--i", "0", "--a", "0", "--b", "6", "--r", "3"]);
        assert_eq!(o.code, 0);
        let v: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(v["count"], 1);
    }

    #[test]
    fn negative_arguments_parse() {
        let o = call(&["crossing-count", "--i", "0", "--a", "6", "--b", "-2", "--r", "3"]);
        assert_eq!(o.code, 0, "{}", o.stderr);
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(call(&["frobnicate"]).code, 2);
        assert_eq!(call(&["crossing-count", "--i", "0"]).code, 2);
    }

    #[test]
    fn generation_requires_seed() {
        assert_eq!(call(&["tiles-generate", "--window", "9x9"]).code, 2);
    }

    #[test]
    fn missing_file_is_domain_error() {
        let o = call(&["decompose", "--alphas", "/nonexistent/a.json"]);
        assert_eq!(o.code, 1);
        let v: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(v["error"], "io");
    }

    #[test]
    fn help_lists_every_subcommand() {
        let o = call(&["--help"]);
        assert_eq!(o.code, 0);
        for name in ["validate", "lift-pair", "pivot-connectivity", "check-axioms", "tiles-generate"] {
            assert!(o.stdout.contains(name), "{name} missing from help");
        }
    }
}
