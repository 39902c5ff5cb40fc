//! The crossing-count basis and the split into Gibbs part and height change.

use markov_cocycles::cocycle::{basis_eval, decompose, eval, pivot_pair, Alphas};
use markov_cocycles::height::{random_configuration, random_partner};
use markov_cocycles::lattice::{make_pair, LatticeVector, Window};
use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> markov_cocycles::Result<()> {
    let w = Window::centered(&[7, 7])?;
    let r = 5;
    for i in 0..r {
        let p = pivot_pair(&w, r, &LatticeVector::zero(2), i)?;
        println!("pivot at level {i}: M = {:?}", basis_eval(&p)?.basis);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_configuration(&Window::centered(&[9, 9])?, r, 200, &mut rng);
    let y = random_partner(&x, 60, &mut rng)?;
    let pair = make_pair(x, y)?;
    let rep = basis_eval(&pair)?;
    println!("random pair: M = {:?}, M_hat = {} = 2 * {}", rep.basis, rep.hat, rep.basis.iter().sum::<i64>());

    let alphas = Alphas::new((1..=r as i64).map(|k| Rational64::new(k, 3)).collect())?;
    let d = decompose(&alphas)?;
    println!("c = {}, beta = {:?}, gibbs: {}", d.c, d.beta.iter().map(|b| b.to_string()).collect::<Vec<_>>(), d.is_gibbs);
    println!("M(x, y) = {}", eval(&alphas, &pair)?);
    Ok(())
}
