//! Height lifts, the maximal extension of boundary heights, and flattening.

use markov_cocycles::height::{grad, lift, max_height, range_over, steep_to_flat_traced};
use markov_cocycles::lattice::{boundary, Configuration, LatticeVector, SiteMap, Window};

fn main() -> markov_cocycles::Result<()> {
    let w = Window::centered(&[7, 7])?;
    // A tilted plane: height n1 + n2 mod 5, lifted back to integers.
    let tilted = Configuration::from_fn(w.clone(), 5, |s| s.0[0] + s.0[1]);
    let hf = lift(&tilted, &LatticeVector::zero(2), 0)?;
    println!("grad from (-3,-3) to (3,3): {}", grad(&tilted, &LatticeVector::from([-3, -3]), &LatticeVector::from([3, 3]))?);
    println!("height at (2,3): {:?}", hf.get(&LatticeVector::from([2, 3])));

    // Maximal extension into a 3x3 box from the tilted boundary.
    let f: Vec<LatticeVector> = Window::centered(&[3, 3])?.sites().collect();
    let bd: SiteMap<i64> = boundary(&f).into_iter().map(|s| {
        let v = hf.get(&s).unwrap();
        (s, v)
    }).collect();
    let ext = max_height(&bd, &f)?;
    println!("max extension at the origin: {}", ext[&LatticeVector::zero(2)]);

    // A tilted plane with a peak: the boundary range exceeds 2 and the peak
    // pokes above it.
    let peaked = Configuration::from_fn(w.clone(), 5, |s| (s.0[0] + s.0[1]).max(6 - s.l1()));
    let hf = lift(&peaked, &LatticeVector::zero(2), 6)?;
    let region: Vec<LatticeVector> = Window::centered(&[5, 5])?.sites().collect();
    let before = range_over(&hf, &boundary(&region))?;
    let (flat, steps) = steep_to_flat_traced(&hf, &region)?;
    let after = range_over(&flat, &region)?;
    println!(
        "boundary range {}; interior range after flattening {} ({} moves)",
        before.range,
        after.range,
        steps.len()
    );
    Ok(())
}
