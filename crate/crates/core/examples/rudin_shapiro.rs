//! Rudin-Shapiro pairs, their energy identity, and flat polynomials placed on
//! a block of Rademacher coordinates.

use walsh_helson::rudin_shapiro::{build_flat, build_pair, flatness_bound, substitute, BlockSpec};

fn main() -> walsh_helson::Result<()> {
    println!("level  identity  U(P)   U(P)/2^(l/2)");
    for level in 0..=12 {
        let pair = build_pair(level)?;
        let u = pair.p_u_norm();
        println!(
            "{level:5}  {:8}  {u:5}  {:.4}  (bound {:.4})",
            pair.energy_identity_holds(),
            u as f64 / 2f64.powf(level as f64 / 2.0),
            flatness_bound(level) / 2f64.powf(level as f64 / 2.0)
        );
    }

    let flat = build_flat(2)?;
    println!(
        "phi_2 = r_3 P_2, signs {:?}, spectrum from {}",
        flat.signs(),
        flat.spectrum_start()
    );
    let placed = substitute(&flat, &BlockSpec::new(vec![2, 4, 5])?)?;
    println!("on coordinates (2, 4, 5): {:?}", placed.terms());
    Ok(())
}
