//! Conditional probability tables and the specification axioms.

use markov_cocycles::cocycle::Alphas;
use markov_cocycles::lattice::{Configuration, LatticeVector, Model, Window};
use markov_cocycles::specification::{check_axioms, enumerate_patterns, nested_family, theta_table};

fn main() -> markov_cocycles::Result<()> {
    let frame = Configuration::new(Window::centered(&[3, 3])?, 3, vec![0; 9])?;
    let centre = vec![LatticeVector::zero(2)];
    let set = enumerate_patterns(&Model::Xr.rule(3)?, &frame, &centre)?;
    println!("centre fillings with an all-0 boundary: {:?}", set.patterns);

    for a2 in [-2.0, 0.0, 2.0] {
        let alphas = Alphas::new(vec![0.0, 0.0, a2])?;
        let t = theta_table(&alphas, &frame, &centre)?;
        let p1 = t.probability_of(&[1]).unwrap();
        println!("alpha_2 = {a2:+}: P(centre = 1) = {p1:.6}, closed form {:.6}", a2.exp() / (1.0 + a2.exp()));
    }

    let outer_frame = Configuration::from_fn(Window::centered(&[5, 5])?, 3, |s| s.l1());
    let outer: Vec<LatticeVector> = Window::centered(&[3, 3])?.sites().collect();
    let alphas = Alphas::new(vec![0.3, -0.7, 1.1])?;
    let fam = nested_family(&alphas, &outer_frame, &outer, &[centre])?;
    let rep = check_axioms(&fam)?;
    println!(
        "{} outer fillings, {} inner tables; support {} markov {} consistency {}",
        fam.outer.set.len(),
        fam.inner.len(),
        rep.support,
        rep.markov,
        rep.consistency
    );
    Ok(())
}
