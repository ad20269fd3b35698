//! Finite-scale singularity diagnostics for Riesz products: Hellinger
//! affinities, mass concentration, and the orthogonality identities of the
//! factors under the product measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riesz::RieszProductState;
use crate::walsh::{AtomTable, MAX_DENSE_DEPTH};

/// Mass fractions reported by the concentration table.
pub const CONCENTRATION_LEVELS: [f64; 3] = [0.5, 0.9, 0.99];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityRow {
    pub k: usize,
    pub used: u32,
    /// `E sqrt(Pi_k)` from the dense values of `Pi_k`.
    pub hellinger: f64,
    /// `prod_{i <= k} E sqrt(1 + X_i)` over each factor's own block.
    pub hellinger_factorized: f64,
    pub mean: f64,
    pub l1: f64,
    /// Haar measure of the smallest atom set carrying each fraction in
    /// [`CONCENTRATION_LEVELS`] of the mass.
    pub concentration: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub rows: Vec<SingularityRow>,
}

impl SingularityReport {
    pub fn hellinger(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.hellinger).collect()
    }

    pub fn max_factorization_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.hellinger - r.hellinger_factorized).abs())
            .fold(0.0, f64::max)
    }

    pub fn hellinger_strictly_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].hellinger < w[0].hellinger)
    }

    /// Concentration at `CONCENTRATION_LEVELS[level]` never increases with `k`.
    pub fn concentration_nonincreasing(&self, level: usize) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].concentration[level] <= w[0].concentration[level])
    }
}

/// Haar measure of the smallest set of atoms holding `fraction` of the total
/// mass, splitting the last atom proportionally.
pub fn mass_concentration(density: &[f64], fraction: f64) -> f64 {
    let mut masses: Vec<f64> = density.iter().map(|d| d.max(0.0)).collect();
    masses.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = masses.iter().sum();
    let target = fraction * total;
    let mut acc = 0.0;
    for (i, &m) in masses.iter().enumerate() {
        if acc + m >= target {
            let part = if m > 0.0 { (target - acc) / m } else { 0.0 };
            return (i as f64 + part) / masses.len() as f64;
        }
        acc += m;
    }
    1.0
}

fn check_dense(state: &RieszProductState) -> Result<()> {
    let used = state.used_coordinates();
    if used > state.exhaustive_cap() || used > MAX_DENSE_DEPTH {
        return Err(Error::CapExceeded {
            used,
            cap: state.exhaustive_cap().min(MAX_DENSE_DEPTH),
        });
    }
    Ok(())
}

/// Hellinger affinities, L1 norms and mass concentration of every stage.
pub fn singularity_report(state: &RieszProductState) -> Result<SingularityReport> {
    check_dense(state)?;
    let mut rows = Vec::with_capacity(state.stage_count() + 1);
    let mut factorized = 1.0;
    for k in 0..=state.stage_count() {
        if k > 0 {
            let local = state.factors()[k - 1].local_values();
            factorized *=
                local.iter().map(|x| (1.0 + x).max(0.0).sqrt()).sum::<f64>() / local.len() as f64;
        }
        let values = state.stage_series(k)?.values();
        let v = values.values();
        let len = v.len() as f64;
        let hellinger = v.iter().map(|x| x.max(0.0).sqrt()).sum::<f64>() / len;
        let mut concentration = [0.0; 3];
        for (slot, &fraction) in concentration.iter_mut().zip(&CONCENTRATION_LEVELS) {
            *slot = mass_concentration(v, fraction);
        }
        rows.push(SingularityRow {
            k,
            used: state.stages()[k].used,
            hellinger,
            hellinger_factorized: factorized,
            mean: values.mean(),
            l1: v.iter().map(|x| x.abs()).sum::<f64>() / len,
            concentration,
        });
    }
    Ok(SingularityReport { rows })
}

/// Residuals of the orthogonality identities for `Y_k = X_k / sigma_k - sigma_k`
/// under `mu = prod (1 + X_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeyriereReport {
    pub sigmas: Vec<f64>,
    /// `max_k |E_mu Y_k|`.
    pub mean_residual: f64,
    /// `max_{k != k'} |E_mu Y_k Y_k'|` and the pair attaining it.
    pub cross_residual: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// `max_k E_mu Y_k^2`.
    pub second_moment: f64,
}

impl PeyriereReport {
    pub fn holds(&self) -> bool {
        self.mean_residual <= 1e-10
            && self.cross_residual <= 1e-10
            && self.second_moment <= 4.0 + 1e-10
    }
}

/// Evaluates the identities for factors given as tables on a common depth.
pub fn peyriere_from_tables(factors: &[AtomTable]) -> Result<PeyriereReport> {
    let Some(first) = factors.first() else {
        return Err(Error::Precondition("at least one factor is needed".into()));
    };
    let depth = first.depth();
    if let Some(bad) = factors.iter().find(|f| f.depth() != depth) {
        return Err(Error::DepthMismatch {
            left: depth,
            right: bad.depth(),
        });
    }
    let atoms = 1usize << depth;
    let weights: Vec<f64> = (0..atoms)
        .map(|t| factors.iter().map(|f| 1.0 + f.values()[t]).product::<f64>() / atoms as f64)
        .collect();
    let sigmas: Vec<f64> = factors
        .iter()
        .map(|f| (f.values().iter().map(|x| x * x).sum::<f64>() / atoms as f64).sqrt())
        .collect();
    if let Some(k) = sigmas.iter().position(|&s| s == 0.0) {
        return Err(Error::Precondition(format!("factor {} vanishes", k + 1)));
    }
    let y: Vec<Vec<f64>> = factors
        .iter()
        .zip(&sigmas)
        .map(|(f, &s)| f.values().iter().map(|x| x / s - s).collect())
        .collect();
    let expect = |g: &dyn Fn(usize) -> f64| (0..atoms).map(|t| weights[t] * g(t)).sum::<f64>();
    let mut report = PeyriereReport {
        sigmas: sigmas.clone(),
        mean_residual: 0.0,
        cross_residual: 0.0,
        worst_pair: None,
        second_moment: 0.0,
    };
    for k in 0..y.len() {
        report.mean_residual = report.mean_residual.max(expect(&|t| y[k][t]).abs());
        report.second_moment = report.second_moment.max(expect(&|t| y[k][t] * y[k][t]));
        for j in k + 1..y.len() {
            let cross = expect(&|t| y[k][t] * y[j][t]).abs();
            if cross > report.cross_residual || report.worst_pair.is_none() {
                report.cross_residual = report.cross_residual.max(cross);
                report.worst_pair = Some((k + 1, j + 1));
            }
        }
    }
    Ok(report)
}

fn factor_tables(state: &RieszProductState) -> Result<Vec<AtomTable>> {
    check_dense(state)?;
    state
        .factors()
        .iter()
        .map(|f| f.table(state.used_coordinates()))
        .collect()
}

/// Orthogonality identities of the built factors under the built measure.
pub fn verify_peyriere(state: &RieszProductState) -> Result<PeyriereReport> {
    if state.stage_count() < 2 {
        return Err(Error::Precondition(
            "at least two factors are needed".into(),
        ));
    }
    peyriere_from_tables(&factor_tables(state)?)
}

fn check_admissible(alpha: &[u8], factors: usize) -> Result<()> {
    if alpha.len() > factors {
        return Err(Error::InadmissibleMultiIndex(format!(
            "{} exponents for {factors} factors",
            alpha.len()
        )));
    }
    if let Some(e) = alpha.iter().find(|&&e| e > 2) {
        return Err(Error::InadmissibleMultiIndex(format!(
            "exponent {e} is not 0, 1 or 2"
        )));
    }
    if !alpha.contains(&1) {
        return Err(Error::InadmissibleMultiIndex("no exponent equals 1".into()));
    }
    if alpha.iter().filter(|&&e| e == 2).count() > 2 {
        return Err(Error::InadmissibleMultiIndex(
            "more than two exponents equal 2".into(),
        ));
    }
    Ok(())
}

/// `|E prod X_k^{alpha_k}|` under Haar measure, for an admissible multi-index.
pub fn verify_strong_orthogonality(factors: &[AtomTable], alpha: &[u8]) -> Result<f64> {
    check_admissible(alpha, factors.len())?;
    let Some(first) = factors.first() else {
        return Err(Error::Precondition("no factors".into()));
    };
    let atoms = first.values().len();
    let sum: f64 = (0..atoms)
        .map(|t| {
            alpha
                .iter()
                .zip(factors)
                .map(|(&e, f)| f.values()[t].powi(e as i32))
                .product::<f64>()
        })
        .sum();
    Ok((sum / atoms as f64).abs())
}

/// Largest residual over every admissible multi-index for the built factors,
/// with the number of multi-indices checked.
pub fn strong_orthogonality_sweep(state: &RieszProductState) -> Result<(f64, usize)> {
    let tables = factor_tables(state)?;
    let k = tables.len();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for code in 0..3usize.pow(k as u32) {
        let alpha: Vec<u8> = (0..k)
            .map(|i| (code / 3usize.pow(i as u32) % 3) as u8)
            .collect();
        if check_admissible(&alpha, k).is_err() {
            continue;
        }
        worst = worst.max(verify_strong_orthogonality(&tables, &alpha)?);
        checked += 1;
    }
    Ok((worst, checked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riesz::standard_amplitude;

    fn rademacher_table(depth: u32, f: impl Fn(&[f64]) -> f64) -> AtomTable {
        let values = (0..1u64 << depth)
            .map(|t| {
                let r: Vec<f64> = (0..depth)
                    .map(|j| if t >> j & 1 == 0 { 1.0 } else { -1.0 })
                    .collect();
                f(&r)
            })
            .collect();
        AtomTable::new(values).unwrap()
    }

    #[test]
    fn empty_product_is_uniform() {
        let report = singularity_report(&RieszProductState::default()).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].hellinger, 1.0);
        assert_eq!(report.rows[0].concentration, CONCENTRATION_LEVELS);
    }

    #[test]
    fn one_factor_hellinger_bound() {
        let mut state = RieszProductState::default();
        state.add_factor(2).unwrap();
        let report = singularity_report(&state).unwrap();
        let x = state.factors()[0].local_values();
        let sigma_sq = state.factors()[0].variance();
        // sqrt(1 + x) <= 1 + x/2 - x^2/8 + x_+^3/16
        let cubic: f64 = x.iter().map(|v| v.max(0.0).powi(3)).sum::<f64>() / x.len() as f64;
        let h1 = report.rows[1].hellinger;
        assert!(h1 < 1.0);
        assert!(h1 <= 1.0 - sigma_sq / 8.0 + cubic / 16.0 + 1e-15);
        assert!((report.rows[1].mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hellinger_factorizes() {
        let mut state = RieszProductState::default();
        for level in [0, 1, 2, 1] {
            state.add_factor(level).unwrap();
        }
        let report = singularity_report(&state).unwrap();
        assert!(report.max_factorization_gap() < 1e-9);
        assert!(report.hellinger_strictly_decreasing());
    }

    #[test]
    fn concentration_of_point_masses() {
        assert_eq!(mass_concentration(&[4.0, 0.0, 0.0, 0.0], 0.5), 0.125);
        assert!((mass_concentration(&[1.0; 8], 0.9) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn disjoint_factors_are_orthogonal() {
        let mut state = RieszProductState::default();
        for level in [0, 1, 1] {
            state.add_factor(level).unwrap();
        }
        let report = verify_peyriere(&state).unwrap();
        assert!(report.holds(), "{report:?}");
        let sigma = 1.0 / (2.0 * crate::rudin_shapiro::FLATNESS_CONSTANT);
        assert!(report.sigmas.iter().all(|s| (s - sigma).abs() < 1e-12));
    }

    #[test]
    fn shared_coordinate_breaks_orthogonality() {
        let a = standard_amplitude(1);
        let x1 = rademacher_table(3, |r| a * (r[1] + r[0] * r[1]));
        let x2 = rademacher_table(3, |r| a * (r[2] + r[1] * r[2]));
        let report = peyriere_from_tables(&[x1, x2]).unwrap();
        assert!(report.cross_residual > 1e-3, "{report:?}");
        assert!(!report.holds());
    }

    #[test]
    fn strong_orthogonality_examples() {
        let x1 = rademacher_table(3, |r| 0.2 * r[0]);
        let x2 = rademacher_table(3, |r| 0.1 * (r[1] + r[1] * r[2]));
        let tables = [x1, x2];
        assert!(verify_strong_orthogonality(&tables, &[1]).unwrap() < 1e-15);
        assert!(verify_strong_orthogonality(&tables, &[1, 2]).unwrap() < 1e-15);
        assert!(matches!(
            verify_strong_orthogonality(&tables, &[2, 2]),
            Err(Error::InadmissibleMultiIndex(_))
        ));
        assert!(verify_strong_orthogonality(&tables, &[3, 1]).is_err());
        assert!(verify_strong_orthogonality(&tables, &[1, 1, 1]).is_err());
    }

    #[test]
    fn sweep_covers_every_admissible_index() {
        let mut state = RieszProductState::default();
        for level in [0, 1, 0] {
            state.add_factor(level).unwrap();
        }
        let (worst, checked) = strong_orthogonality_sweep(&state).unwrap();
        // 3^3 minus the 2^3 indices without a 1 (all have at most three 2s,
        // and (2,2,2) is among those without a 1).
        assert_eq!(checked, 27 - 8);
        assert!(worst < 1e-12);
    }
}
