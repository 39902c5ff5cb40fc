//! Heat-bath sampling, its exact stationary law on a tiny region, and slopes.

use markov_cocycles::cocycle::Alphas;
use markov_cocycles::lattice::{Configuration, LatticeVector, Window};
use markov_cocycles::specification::{slope_estimate, theta_table, HeatBath};

fn main() -> markov_cocycles::Result<()> {
    let alphas = Alphas::new(vec![0.4, -0.2, 0.9])?;

    // Exact stationary law of the single-site chain against the table.
    let frame = Configuration::from_fn(Window::centered(&[3, 3])?, 3, |s| s.l1());
    let centre = Window::centered(&[1, 1])?;
    let exact = HeatBath::new(&alphas, &frame, &centre)?.stationary()?;
    let table = theta_table(&alphas, &frame, &[LatticeVector::zero(2)])?;
    for (p, q) in exact.probabilities.iter().zip(&table.probabilities) {
        println!("stationary {p:.12}  table {q:.12}");
    }

    // Uniform specification on an 11x11 box with a flat boundary.
    let uniform = Alphas::new(vec![0.0; 3])?;
    let big = Configuration::from_fn(Window::centered(&[11, 11])?, 3, |s| s.l1());
    let inner = big.window.interior(1).unwrap();
    let hb = HeatBath::new(&uniform, &big, &inner)?;
    let samples = hb.sample_path(2000, 42, 200, 5)?;
    let s = slope_estimate(&samples)?;
    println!("flat boundary slope {:?} +- {:?} from {} samples", s.slope, s.std_error, s.samples);

    let chessboard = Configuration::from_fn(Window::centered(&[11, 11])?, 2, |s| s.l1());
    println!("frozen chessboard slope {:?}", slope_estimate(&[chessboard])?.slope);
    Ok(())
}
