//! The martingale M_k of dyadic partial sums, the maximal function N_k^*,
//! and the checks built on them.

use walsh_helson::martingale::{
    check_p3, check_positivity_equivalence, decompose, sweep_shifted_bound,
};
use walsh_helson::walsh::WalshSeries;

fn main() -> walsh_helson::Result<()> {
    let good = WalshSeries::new(vec![1.0, 0.5, 0.25, 0.1])?;
    let d = decompose(&good);
    for k in 0..d.depth() {
        println!(
            "k = {k}: M_k = {:?}, N_k = {:?}, N_k* = {:?}",
            d.m(k).values(),
            d.n(k).values(),
            d.nstar(k).values()
        );
    }
    let eq = check_positivity_equivalence(&good)?;
    println!(
        "all prefixes >= 0: {}, N_k* <= M_k: {}",
        eq.all_prefixes_nonneg, eq.maximal_inequality_holds
    );
    let sweep = sweep_shifted_bound(&good)?;
    println!(
        "shifted bound over {} triples, worst excess {:.4}",
        sweep.triples, sweep.worst_excess
    );
    println!("M_k >= 0 for all k: {}", check_p3(&good));

    let bad = WalshSeries::new(vec![1.0, -1.5, 0.0, 0.0])?;
    let eq = check_positivity_equivalence(&bad)?;
    println!("\n(1, -1.5, 0, 0): {:?}", eq.witnesses);
    Ok(())
}
