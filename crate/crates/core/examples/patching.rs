//! Flat extensions and gluing one configuration into another.

use markov_cocycles::height::{flat_extension_traced, lift, patch, random_configuration, range_over};
use markov_cocycles::lattice::{l1_sphere, Configuration, LatticeVector, Model, Window};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> markov_cocycles::Result<()> {
    let r = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // A tilted plane has range 4 on the sphere of radius 2; the flat extension
    // around D_1 shrinks that by 2 per ring and is flat from radius 4 on.
    let w = Window::centered(&[15, 15])?;
    let x = Configuration::from_fn(w.clone(), r, |s| s.0[0] + s.0[1]);
    let hf = lift(&x, &LatticeVector::zero(2), 0)?;
    let (ext, steps) = flat_extension_traced(&hf, 1)?;
    for k in 2..=6 {
        println!("range on sphere {k}: {}", range_over(&ext, &l1_sphere(k, 2))?.range);
    }
    println!("flat extension used {} single-site moves", steps.len());

    // Glue a random x on D_2 into a random y.
    let (n, k) = (2, 2);
    let big = Window::cube(2 * n + 2 * r as usize + k + 3, 2);
    let x = random_configuration(&big, r, 400, &mut rng);
    let y = random_configuration(&big, r, 40, &mut rng);
    match patch(&x, &y, n, k) {
        Ok(out) => println!(
            "patched ({:?}, shift {}), valid: {}",
            out.case,
            out.shift,
            Model::Xr.validate(&out.z)?.valid
        ),
        Err(e) => println!("patch refused: {e}"),
    }
    Ok(())
}
