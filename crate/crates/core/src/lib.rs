//! Markov cocycles on residue lattice models.
//!
//! The central object is `X_r`: configurations `x: Z^d -> Z_r` whose adjacent
//! sites differ by `±1 (mod r)`. Such configurations lift to integer height
//! functions, and homoclinic pairs of them (pairs that agree outside a finite
//! set) carry additive observables called Markov cocycles. For `r ∉ {1, 4}` the
//! shift-invariant Markov cocycles form an `r`-dimensional space spanned by the
//! crossing-count cocycles `M_0, …, M_{r-1}`, and only the codimension-one slice
//! `Σα = 0` comes from shift-invariant nearest-neighbour interactions.
//!
//! Modules:
//!
//! * [`lattice`]: sites, windows, configurations and local rules.
//! * [`height`]: lifts, the maximal height extension, flattening and patching.
//! * [`cocycle`]: crossing counts, the basis cocycles and the Gibbs decomposition.
//! * [`pivot`]: pivot chains for `X_r` and for proper colourings.
//! * [`interaction`]: nearest-neighbour interactions and their Gibbs cocycles.
//! * [`specification`]: pattern enumeration, specification tables, heat-bath.
//! * [`squareisland`]: the square-island tiling example and its cocycles.
//! * [`cli`]: the `mcocycle` command-line front end.
//!
//! Each capability has a runnable walkthrough under `examples/`:
//!
//! ```text
//! cargo run --example validate_models
//! cargo run --example height_functions
//! cargo run --example patching
//! cargo run --example cocycle_basis
//! cargo run --example pivot_chains
//! cargo run --example gibbs_synthesis
//! cargo run --example specification_tables
//! cargo run --example heat_bath_slope
//! cargo run --example square_islands
//! ```

pub mod cli;
pub mod cocycle;
mod error;
pub mod height;
pub mod interaction;
pub mod lattice;
pub mod pivot;
mod scalar;
pub mod specification;
pub mod squareisland;

pub use error::{Error, Result};
pub use scalar::Scalar;
