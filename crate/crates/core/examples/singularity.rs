//! Hellinger affinities and mass concentration of a Riesz product, and the
//! orthogonality of its factors under the product measure.

use walsh_helson::martingale::{
    peyriere_from_tables, singularity_report, strong_orthogonality_sweep, verify_peyriere,
};
use walsh_helson::riesz::RieszProductState;
use walsh_helson::walsh::AtomTable;

fn main() -> walsh_helson::Result<()> {
    let mut state = RieszProductState::default();
    for level in [0, 0, 1, 2, 1] {
        state.add_factor(level)?;
    }
    let report = singularity_report(&state)?;
    println!("k  H_k       product   conc50  conc90  conc99");
    for r in &report.rows {
        println!(
            "{}  {:.6}  {:.6}  {:.4}  {:.4}  {:.4}",
            r.k,
            r.hellinger,
            r.hellinger_factorized,
            r.concentration[0],
            r.concentration[1],
            r.concentration[2]
        );
    }

    let p = verify_peyriere(&state)?;
    println!(
        "disjoint blocks: |E Y_k| {:.1e}, |E Y_k Y_j| {:.1e}, E Y_k^2 <= {:.4}",
        p.mean_residual, p.cross_residual, p.second_moment
    );
    let (worst, count) = strong_orthogonality_sweep(&state)?;
    println!("{count} admissible products, largest |E prod X^alpha| {worst:.1e}");

    // Two factors sharing r_2 are no longer orthogonal under the product.
    let a = 0.1;
    let table = |f: &dyn Fn(f64, f64, f64) -> f64| {
        let sign = |t: u64, j: u32| if t >> j & 1 == 0 { 1.0 } else { -1.0 };
        AtomTable::new(
            (0..8)
                .map(|t| f(sign(t, 0), sign(t, 1), sign(t, 2)))
                .collect(),
        )
    };
    let x1 = table(&|r1, r2, _| a * (r2 + r1 * r2))?;
    let x2 = table(&|_, r2, r3| a * (r3 + r2 * r3))?;
    let overlap = peyriere_from_tables(&[x1, x2])?;
    println!(
        "shared coordinate: |E Y_1 Y_2| = {:.4}",
        overlap.cross_residual
    );
    Ok(())
}
