//! Pivot chains for X_r pairs and for graph colourings, and connectivity of
//! small pattern sets.

use markov_cocycles::cocycle::{eval, Alphas};
use markov_cocycles::height::{random_configuration, random_partner};
use markov_cocycles::lattice::{make_pair, Configuration, Graph, Model, Window};
use markov_cocycles::pivot::{eval_via_chain, pivot_chain_coloring, pivot_chain_xr, pivot_connectivity, verify_chain};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> markov_cocycles::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_configuration(&Window::centered(&[9, 9])?, 3, 150, &mut rng);
    let y = random_partner(&x, 40, &mut rng)?;
    let pair = make_pair(x, y)?;
    let chain = pivot_chain_xr(&pair)?;
    verify_chain(&chain, &Model::Xr)?;
    let alphas = Alphas::new(vec![0.5, -1.25, 2.0])?;
    println!(
        "{} pivots; M along the chain {:.6}, directly {:.6}",
        chain.len(),
        eval_via_chain(&alphas, &chain)?,
        eval(&alphas, &pair)?
    );

    // Recolouring a 5-cycle with 4 colours.
    let g = Graph::from_edges(5, &[[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]])?;
    let c = pivot_chain_coloring(&g, 4, &[0, 1, 0, 1, 2], &[1, 2, 3, 2, 3])?;
    for (step, colours) in c.steps.iter().enumerate() {
        println!("step {step}: {colours:?}");
    }

    // Every filling of a 2x2 hole in an X_3 frame is reachable from every other.
    let frame = Configuration::from_fn(Window::centered(&[4, 4])?, 3, |s| s.l1());
    let hole: Vec<_> = frame.window.interior(1).unwrap().sites().collect();
    let rep = pivot_connectivity(&Model::Xr.rule(3)?, &frame, &hole)?;
    println!("{} fillings in {} component(s)", rep.patterns, rep.components.len());
    Ok(())
}
