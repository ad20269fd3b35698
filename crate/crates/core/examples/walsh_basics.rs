//! Walsh functions in Paley order, the fast transform and partial sums.

use walsh_helson::walsh::{fwht, product_index, walsh_eval, Atom, AtomTable, WalshIndex};

fn main() -> walsh_helson::Result<()> {
    // w_5 = r_1 r_3 on the atom (r_1, r_2, r_3) = (-1, +1, -1).
    let atom = Atom::from_signs(&[-1, 1, -1])?;
    println!(
        "w_5{:?} = {}",
        [-1, 1, -1],
        walsh_eval(WalshIndex(5), atom)?
    );
    println!(
        "w_3 * w_5 = w_{}",
        product_index(WalshIndex(3), WalshIndex(5)).value()
    );

    // A density on 8 atoms and its Walsh coefficients.
    let density = AtomTable::new(vec![2.0, 0.0, 1.0, 1.0, 0.5, 1.5, 1.0, 1.0])?;
    let series = fwht(&density);
    println!("coefficients: {:?}", series.coeffs());
    println!(
        "round trip error: {:e}",
        series.values().max_abs_diff(&density)?
    );

    for p in [1, 2, 3, 4, 8] {
        println!("S_{p} = {:?}", series.partial_sum(p)?.values());
    }
    let norms = series.norms();
    println!(
        "l2 {:.4}  U {:.4}  A {:.4}  PM {:.4}  sup {:.4}",
        norms.l2, norms.u, norms.a, norms.pm, norms.sup
    );
    Ok(())
}
