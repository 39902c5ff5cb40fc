//! Interactions realizing Markov cocycles: shift-invariant ones for zero-sum
//! coefficients, position-dependent ones otherwise.

use markov_cocycles::cocycle::{eval, pivot_pair, Alphas};
use markov_cocycles::interaction::{f_phi, gibbs_eval, symmetrize, synth_invariant, synth_nonstationary, InteractionJson};
use markov_cocycles::lattice::{Configuration, LatticeVector, Window};
use markov_cocycles::Error;

fn main() -> markov_cocycles::Result<()> {
    let gibbs = Alphas::new(vec![1.0, -1.0, 0.0])?;
    let phi = synth_invariant(&gibbs, 2)?;
    println!("interaction: {}", serde_json::to_string(&InteractionJson::from(&phi))?);

    let w = Window::centered(&[5, 5])?;
    for i in 0..3 {
        let p = pivot_pair(&w, 3, &LatticeVector::zero(2), i)?;
        println!("level {i}: gibbs {:+.3}, cocycle {:+.3}", gibbs_eval(&phi, &p)?, eval(&gibbs, &p)?);
    }

    let sym = symmetrize(&phi)?;
    let star = Configuration::from_fn(Window::centered(&[3, 3])?, 3, |s| s.l1());
    println!("f_phi on the flat star: {:.3}", f_phi(&sym, &star)?);

    // Coefficients with nonzero sum have no shift-invariant interaction ...
    let tilted = Alphas::new(vec![1.0, 1.0, 1.0])?;
    if let Err(Error::NotGibbs(sum)) = synth_invariant(&tilted, 2) {
        println!("sum {sum}: no shift-invariant interaction");
    }
    // ... but a position-dependent one on a window still reproduces them.
    let big = Window::centered(&[9, 9])?;
    let psi = synth_nonstationary(&tilted, &big)?;
    let p = pivot_pair(&big, 3, &LatticeVector::from([2, -1]), 1)?;
    println!("off-centre pivot: gibbs {:.3}, cocycle {:.3}", gibbs_eval(&psi, &p)?, eval(&tilted, &p)?);
    Ok(())
}
