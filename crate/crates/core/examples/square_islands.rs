//! Square-island tilings: constraints, islands, random types and their cocycle.

use std::collections::BTreeMap;

use markov_cocycles::lattice::{LatticeVector, Window};
use markov_cocycles::pivot::pivot_connectivity;
use markov_cocycles::squareisland::{
    assign_types, census, find_islands, generate, mp_eval, validate_tiles, Alphabet, TileConfig, TileRule,
    TypeWeights,
};

fn main() -> markov_cocycles::Result<()> {
    let mut t = TileConfig::blank(Alphabet::X18, Window::centered(&[7, 7])?)?;
    t.place_island(&LatticeVector::zero(2), 2, 1)?;
    print!("{}", t.render());
    println!("valid: {}", validate_tiles(&t).valid);

    let mut small = TileConfig::blank(Alphabet::X18, Window::centered(&[5, 5])?)?;
    small.place_island(&LatticeVector::zero(2), 1, 1)?;
    println!("3x3 island breaks constraints {:?}", validate_tiles(&small).constraints());

    let x = generate(&Window::centered(&[24, 24])?, 0.35, 7, None)?;
    print!("{}", x.render());
    let islands = find_islands(&x)?;
    println!("{} islands, counts {:?}", islands.len(), census(&islands, None));

    let weights = TypeWeights {
        p: BTreeMap::from([(2, 0.3)]),
        default: 0.5,
    };
    let y = assign_types(&x, &weights, 1)?;
    let first = find_islands(&y)?.into_iter().find(|i| i.n == Some(2));
    if let Some(isl) = first {
        let mut y2 = y.clone();
        let flipped = 3 - isl.island_type.unwrap();
        y2.place_island(isl.center.as_ref().unwrap(), 2, flipped)?;
        println!("retyping one 2-island: M_p = {:.6}", mp_eval(&y, &y2, &weights)?);
    }

    // The typed tiling lacks the pivot property: the two island types cannot
    // be joined by single-tile changes.
    let frame = TileConfig::blank(Alphabet::Y26, Window::centered(&[7, 7])?)?.to_configuration();
    let hole: Vec<_> = frame.window.interior(1).unwrap().sites().collect();
    let rep = pivot_connectivity(&TileRule { alphabet: Alphabet::Y26 }, &frame, &hole)?;
    println!("{} fillings of the 5x5 hole, {} components", rep.patterns, rep.components.len());
    Ok(())
}
