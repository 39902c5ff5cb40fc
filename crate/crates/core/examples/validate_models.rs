//! Validating configurations against the residue, X_4, colouring and
//! edge-shift models.

use markov_cocycles::lattice::{Configuration, EdgeSft, LatticeVector, Model, Window};

fn main() -> markov_cocycles::Result<()> {
    let w = Window::centered(&[5, 5])?;

    // The flat chessboard of heights 0/1 is valid in every X_r.
    let flat = Configuration::from_fn(w.clone(), 3, |s| s.l1());
    println!("flat X_3 chessboard valid: {}", Model::Xr.validate(&flat)?.valid);

    let mut broken = flat.clone();
    broken.set(&LatticeVector::zero(2), 1)?;
    let rep = Model::Xr.validate(&broken)?;
    println!("after copying the neighbours' value to the origin: {} violations", rep.violations.len());

    // r = 4 needs the plaquette rule; this residue pattern passes every edge
    // test but has no consistent height lift.
    let z = Configuration::from_fn(Window::centered(&[3, 3])?, 4, |s| {
        if s.0 == [0, 0] {
            2
        } else {
            s.0[0] + s.0[1]
        }
    });
    match Model::Xr.validate(&z) {
        Err(e) => println!("xr on r = 4: {e}"),
        Ok(_) => unreachable!(),
    }
    for v in Model::X4.validate(&z)?.violations {
        println!("x4 violation: {}", serde_json::to_string(&v)?);
    }

    // Proper 3-colourings of the grid.
    let coloring = Configuration::from_fn(w.clone(), 3, |s| s.0[0] + 2 * s.0[1]);
    println!("3-colouring proper: {}", Model::Coloring.validate(&coloring)?.valid);

    // The hard-square shift as an explicit edge shift; 0 is a safe symbol.
    let sft = EdgeSft::from_json(&serde_json::json!({
        "alphabet": ["0", "1"],
        "allowed": {"1": [[0, 0], [0, 1], [1, 0]], "2": [[0, 0], [0, 1], [1, 0]]},
    }))?;
    let model = Model::Sft(sft);
    println!("0 is safe: {}, 1 is safe: {}", model.is_safe_symbol(2, 2, 0)?, model.is_safe_symbol(2, 2, 1)?);
    Ok(())
}
