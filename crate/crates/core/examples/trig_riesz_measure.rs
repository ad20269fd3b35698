//! The trigonometric Riesz product with Rudin-Shapiro cosine polynomials,
//! certified on an oversampled grid.

use walsh_helson::psi::PsiSpec;
use walsh_helson::trig::{build_trig_flat, build_trig_measure, certify_trig_measure, TrigConfig};

fn main() -> walsh_helson::Result<()> {
    for length in [1, 4, 8, 64, 512] {
        let flat = build_trig_flat(length)?;
        println!(
            "phi_{length}: grid prefix sup / sqrt(l) = {:.4} (bound {:.4})",
            flat.prefix_sup / (length as f64).sqrt(),
            flat.bound() / (length as f64).sqrt()
        );
    }

    let psi = PsiSpec::parse("preset:logpow,p=1")?;
    let config = TrigConfig::default();
    let measure = build_trig_measure(&psi, &config)?;
    for s in &measure.stages {
        println!(
            "stage {}: l = {}, a = {:.5}, a*A {:.4} <= inf/4 {:.4}",
            s.stage, s.length, s.amplitude, s.sup_gap_lhs, s.sup_gap_rhs
        );
    }
    let cert = certify_trig_measure(&measure, &psi, config.oversample)?;
    println!(
        "grid of {} points: min partial sum {:.6} (Bernstein slack {:.4}), Parseval residual {:.1e}",
        cert.grid.points, cert.grid.min, cert.grid.bernstein_slack, cert.parseval_residual
    );
    println!(
        "psi-sum {:.3e} <= {:.3e}; orthogonality exact: {}",
        cert.psi_exact_total, cert.psi_bound_total, cert.orthogonality_exact
    );
    Ok(())
}
