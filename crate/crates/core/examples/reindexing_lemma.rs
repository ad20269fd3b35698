//! Multiplying by w_m permutes coefficients by xor, and the first 2^k
//! coefficients land on one consecutive segment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use walsh_helson::walsh::{lemma_segment, verify_lemma, WalshIndex, WalshSeries};

fn main() -> walsh_helson::Result<()> {
    for (m, k) in [(5, 0), (5, 1), (5, 2), (5, 3), (6, 2), (13, 3)] {
        let (lo, hi) = lemma_segment(WalshIndex(m), k);
        let image: Vec<u64> = (0..1u64 << k).map(|n| n ^ m).collect();
        println!("m = {m:2}, k = {k}: n xor m for n < 2^k = {image:?} -> [{lo}, {hi})");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let series = WalshSeries::new((0..64).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let mut worst = 0.0f64;
    for m in 0..64 {
        for k in 0..=6 {
            worst = worst.max(verify_lemma(&series, WalshIndex(m), k)?.max_residual);
        }
    }
    println!("depth 6, all m < 64 and k <= 6: largest residual {worst:e}");
    Ok(())
}
