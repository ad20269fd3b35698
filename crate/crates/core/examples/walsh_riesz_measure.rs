//! Builds a three-stage Walsh Riesz product for psi(x) = x^2 / (1 + ln 1/x),
//! certifies every partial sum and writes the spectrum.

use walsh_helson::io::write_spectrum_csv;
use walsh_helson::psi::PsiSpec;
use walsh_helson::riesz::{
    build_walsh_measure, norm_table, psi_sum_report, verify_all_partial_sums, BuildConfig,
    VerifyOptions,
};

fn main() -> walsh_helson::Result<()> {
    let psi = PsiSpec::parse("preset:logpow,p=1")?;
    let build = build_walsh_measure(&psi, &BuildConfig::default())?;
    let state = &build.state;

    for (adm, stage) in build.admissions.iter().zip(&state.stages()[1..]) {
        println!(
            "stage {}: level {}, a*A {:.4} <= inf/4 {:.4}, stage bound {:.2e} <= {:.3}, inf {:.4} ({:?})",
            adm.stage,
            adm.level,
            adm.sup_gap_lhs,
            adm.sup_gap_rhs,
            adm.stage_bound,
            adm.budget_term,
            stage.inf,
            stage.inf_method
        );
    }
    for row in norm_table(state) {
        println!(
            "X_{}: l2 {:.6}  U {:.6}  A {:.6}  PM {:.6}",
            row.stage,
            row.l2,
            row.u.unwrap_or(f64::NAN),
            row.a,
            row.pm
        );
    }

    let cert = verify_all_partial_sums(state, &VerifyOptions::default());
    println!(
        "{} atoms x {} partial sums: min {:.6}, stagewise margin {:.6}",
        cert.atoms_checked,
        cert.distinct_partial_sums,
        cert.min_partial_sum,
        cert.stagewise_min_margin
    );
    let report = psi_sum_report(state, &psi);
    for s in &report.stages {
        println!(
            "stage {} psi-sum {:.3e} <= {:.3e}",
            s.stage, s.exact, s.bound
        );
    }

    let path = std::env::temp_dir().join("walsh_riesz_measure.csv");
    write_spectrum_csv(&path, state.spectrum())?;
    println!(
        "wrote {} coefficients to {}",
        state.spectrum().len(),
        path.display()
    );
    Ok(())
}
