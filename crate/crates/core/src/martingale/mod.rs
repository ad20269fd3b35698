//! Dyadic martingale view of a Walsh series.
//!
//! `M_k` is the `2^k`-th partial sum, a function of `r_1 .. r_k`, and
//! `M_{k+1} = M_k + r_{k+1} N_k` where `N_k = sum_{m < 2^k} c_{2^k + m} w_m`.
//! Partial sums of order between `2^k` and `2^{k+1}` are `M_k + r_{k+1}` times
//! a prefix of `N_k`, which is what ties positivity of all prefix sums to the
//! maximal function `N_k^*`.

pub mod singularity;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walsh::{
    first_negative_prefix, inverse_fwht, scan_prefixes, walsh_sign, AtomTable, WalshIndex,
    WalshSeries, LINEAR_TOL,
};

pub use singularity::{
    peyriere_from_tables, singularity_report, strong_orthogonality_sweep, verify_peyriere,
    verify_strong_orthogonality, PeyriereReport, SingularityReport, SingularityRow,
    CONCENTRATION_LEVELS,
};

/// Absolute tolerance for pointwise comparisons on a series.
pub fn tolerance(series: &WalshSeries) -> f64 {
    let a: f64 = series.coeffs().iter().map(|c| c.abs()).sum();
    LINEAR_TOL * a.max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleDecomposition {
    depth: u32,
    c0: f64,
    m: Vec<AtomTable>,
    n: Vec<AtomTable>,
    nstar: Vec<AtomTable>,
}

fn dense(values: Vec<f64>) -> AtomTable {
    AtomTable::new(values).expect("power-of-two length by construction")
}

/// Values of `sum_{m < 2^k} d_m w_m` on the `2^k` atoms of depth `k`.
fn synthesize(coeffs: &[f64]) -> AtomTable {
    inverse_fwht(&WalshSeries::new(coeffs.to_vec()).expect("power-of-two length"))
}

/// `max_{1 <= q <= 2^k} |sum_{m < q} d_m w_m(t)|` on every atom of depth `k`.
fn maximal_prefix(coeffs: &[f64]) -> AtomTable {
    let atoms = coeffs.len() as u64;
    dense(
        (0..atoms)
            .into_par_iter()
            .map(|t| {
                let mut s = 0.0;
                let mut sup = 0.0f64;
                for (m, &d) in coeffs.iter().enumerate() {
                    s += if walsh_sign(m as u64, t) > 0 { d } else { -d };
                    sup = sup.max(s.abs());
                }
                sup
            })
            .collect(),
    )
}

/// Splits a series into `M_0 .. M_K`, `N_0 .. N_{K-1}` and the maximal
/// functions `N_k^*`, each tabulated on the atoms of its own depth.
pub fn decompose(series: &WalshSeries) -> MartingaleDecomposition {
    let depth = series.depth();
    let c = series.coeffs();
    let m = (0..=depth).map(|k| synthesize(&c[..1 << k])).collect();
    let n = (0..depth).map(|k| synthesize(&c[1 << k..2 << k])).collect();
    let nstar = (0..depth)
        .map(|k| maximal_prefix(&c[1 << k..2 << k]))
        .collect();
    MartingaleDecomposition {
        depth,
        c0: c[0],
        m,
        n,
        nstar,
    }
}

impl MartingaleDecomposition {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `M_k` on `2^k` atoms.
    pub fn m(&self, k: u32) -> &AtomTable {
        &self.m[k as usize]
    }

    /// `N_k` on `2^k` atoms.
    pub fn n(&self, k: u32) -> &AtomTable {
        &self.n[k as usize]
    }

    /// `N_k^*` on `2^k` atoms.
    pub fn nstar(&self, k: u32) -> &AtomTable {
        &self.nstar[k as usize]
    }

    /// Largest deviation from `M_{k+1} = M_k + r_{k+1} N_k` and from
    /// `E M_k = c_0`.
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let mut recombination = 0.0f64;
        for k in 0..self.depth as usize {
            let half = 1usize << k;
            let (mk, nk, next) = (
                self.m[k].values(),
                self.n[k].values(),
                self.m[k + 1].values(),
            );
            for (t, &v) in next.iter().enumerate() {
                let base = t & (half - 1);
                let r = if t & half == 0 { 1.0 } else { -1.0 };
                recombination = recombination.max((v - (mk[base] + r * nk[base])).abs());
            }
        }
        let mean = self
            .m
            .iter()
            .map(|mk| (mk.mean() - self.c0).abs())
            .fold(0.0, f64::max);
        (recombination, mean)
    }

    /// Checks the two invariants against `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let (recombination, mean) = self.invariant_residuals();
        if recombination > tol || mean > tol {
            return Err(Error::Invariant(format!(
                "martingale recombination residual {recombination:e}, mean drift {mean:e}"
            )));
        }
        Ok(())
    }
}

/// Where `N_k^* <= M_k` fails.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MaximalWitness {
    pub k: u32,
    pub atom: u64,
    pub nstar: f64,
    pub m: f64,
}

/// Where a prefix sum goes negative.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PrefixWitness {
    pub order: u64,
    pub atom: u64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Witnesses {
    pub prefix: Option<PrefixWitness>,
    pub maximal: Option<MaximalWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PositivityEquivalence {
    pub all_prefixes_nonneg: bool,
    #[serde(rename = "inequality2Holds")]
    pub maximal_inequality_holds: bool,
    pub min_prefix: f64,
    pub tolerance: f64,
    pub witnesses: Witnesses,
}

fn maximal_violation(d: &MartingaleDecomposition, tol: f64) -> Option<MaximalWitness> {
    if d.depth == 0 {
        // No N_k to compare; the only prefix sum is M_0 = c_0.
        return (d.c0 < -tol).then_some(MaximalWitness {
            k: 0,
            atom: 0,
            nstar: 0.0,
            m: d.c0,
        });
    }
    (0..d.depth).find_map(|k| {
        let (nstar, m) = (d.nstar(k).values(), d.m(k).values());
        (0..nstar.len())
            .find(|&t| nstar[t] > m[t] + tol)
            .map(|t| MaximalWitness {
                k,
                atom: t as u64,
                nstar: nstar[t],
                m: m[t],
            })
    })
}

/// Decides positivity of every prefix sum twice, by an exhaustive scan and
/// by `N_k^* <= M_k` for all `k < K`, and fails if the answers differ.
pub fn check_positivity_equivalence(series: &WalshSeries) -> Result<PositivityEquivalence> {
    let tol = tolerance(series);
    let terms = series.terms();
    let scan = scan_prefixes(series.depth(), &terms);
    let all_prefixes_nonneg = scan.min_value >= -tol;
    let prefix =
        if all_prefixes_nonneg {
            None
        } else {
            first_negative_prefix(series.depth(), &terms)
                .map(|(order, atom, value)| PrefixWitness { order, atom, value })
        };
    let decomposition = decompose(series);
    let maximal = maximal_violation(&decomposition, tol);
    let maximal_inequality_holds = maximal.is_none();
    if all_prefixes_nonneg != maximal_inequality_holds {
        return Err(Error::Invariant(format!(
            "prefix scan says {all_prefixes_nonneg} but the maximal inequality says {maximal_inequality_holds} (min prefix {:e})",
            scan.min_value
        )));
    }
    Ok(PositivityEquivalence {
        all_prefixes_nonneg,
        maximal_inequality_holds,
        min_prefix: scan.min_value,
        tolerance: tol,
        witnesses: Witnesses { prefix, maximal },
    })
}

fn require_nonnegative_prefixes(series: &WalshSeries) -> Result<()> {
    let scan = scan_prefixes(series.depth(), &series.terms());
    if scan.min_value < -tolerance(series) {
        return Err(Error::Precondition(format!(
            "prefix sum of order {} is {} at atom {}",
            scan.min_order, scan.min_value, scan.min_atom
        )));
    }
    Ok(())
}

/// Checks `|(w_m N_kj)` prefix of order `2^k`| `<= 2 M_kj` on every atom,
/// computing the prefix from the reindexed coefficients directly.
pub fn check_shifted_bound(series: &WalshSeries, kj: u32, m: WalshIndex, k: u32) -> Result<bool> {
    if kj >= series.depth() {
        return Err(Error::Precondition(format!(
            "level {kj} has no N-block in a series of depth {}",
            series.depth()
        )));
    }
    if m.0 >= 1 << kj {
        return Err(Error::Precondition(format!(
            "multiplier {} is not below 2^{kj}",
            m.0
        )));
    }
    require_nonnegative_prefixes(series)?;
    let c = series.coeffs();
    let n = WalshSeries::new(c[1 << kj..2 << kj].to_vec())?;
    let shifted = n.multiply_by_walsh(m)?;
    let prefix = shifted.partial_sum(1 << k.min(kj))?;
    let bound = synthesize(&c[..1 << kj]);
    let tol = tolerance(series);
    Ok(prefix
        .values()
        .iter()
        .zip(bound.values())
        .all(|(p, mk)| p.abs() <= 2.0 * mk + tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ShiftedBoundSweep {
    /// Number of `(kj, m, k)` triples covered.
    pub triples: u64,
    /// Largest `|prefix| - 2 M_kj` seen.
    pub worst_excess: f64,
    /// `(kj, m, k, atom)` of the worst excess.
    pub worst: Option<(u32, u64, u32, u64)>,
    pub tolerance: f64,
}

impl ShiftedBoundSweep {
    pub fn holds(&self) -> bool {
        self.worst_excess <= self.tolerance
    }
}

/// All triples `kj < K`, `m < 2^kj`, `k <= kj` at once. Orders `2^k` with
/// `k > kj` take the whole of `w_m N_kj` and coincide with `k = kj`.
///
/// For fixed `k` the prefix depends on `m` only through the segment
/// `[m & !(2^k - 1), +2^k)` of partial sums of `N_kj`, so each atom needs one
/// pass over those partial sums.
pub fn sweep_shifted_bound(series: &WalshSeries) -> Result<ShiftedBoundSweep> {
    require_nonnegative_prefixes(series)?;
    let c = series.coeffs();
    let tol = tolerance(series);
    let mut sweep = ShiftedBoundSweep {
        triples: 0,
        worst_excess: f64::NEG_INFINITY,
        worst: None,
        tolerance: tol,
    };
    for kj in 0..series.depth() {
        let width = 1usize << kj;
        let n = &c[width..2 * width];
        let bound = synthesize(&c[..width]);
        let best = (0..width as u64)
            .into_par_iter()
            .map(|t| {
                let mut partial = Vec::with_capacity(width + 1);
                partial.push(0.0);
                let mut s = 0.0;
                for (q, &d) in n.iter().enumerate() {
                    s += if walsh_sign(q as u64, t) > 0 { d } else { -d };
                    partial.push(s);
                }
                let limit = 2.0 * bound.values()[t as usize];
                let mut best = (f64::NEG_INFINITY, 0u64, 0u32);
                for k in 0..=kj {
                    let step = 1usize << k;
                    for a in (0..width).step_by(step) {
                        let excess = (partial[a + step] - partial[a]).abs() - limit;
                        if excess > best.0 {
                            best = (excess, a as u64, k);
                        }
                    }
                }
                (best, t)
            })
            .reduce(
                || ((f64::NEG_INFINITY, 0, 0), 0),
                |x, y| if y.0 .0 > x.0 .0 { y } else { x },
            );
        let ((excess, segment, k), atom) = best;
        if excess > sweep.worst_excess {
            sweep.worst_excess = excess;
            // The segment start is itself a multiplier reaching that segment.
            sweep.worst = Some((kj, segment, k, atom));
        }
        sweep.triples += (kj as u64 + 1) << kj;
    }
    Ok(sweep)
}

/// `M_k >= 0` on every atom for every `k <= K`.
pub fn check_p3(series: &WalshSeries) -> bool {
    let tol = tolerance(series);
    let c = series.coeffs();
    (0..=series.depth()).all(|k| synthesize(&c[..1 << k]).min() >= -tol)
}

/// One row of the dyadic-block coefficient envelope.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnvelopeRow {
    pub block: u32,
    pub start: u64,
    pub end: u64,
    pub max_abs: f64,
}

/// `max_{2^k <= n < 2^{k+1}} |c_n|` for `k < depth`, from sparse terms.
pub fn dyadic_envelope(depth: u32, terms: &[(u64, f64)]) -> Vec<EnvelopeRow> {
    let mut rows: Vec<EnvelopeRow> = (0..depth)
        .map(|k| EnvelopeRow {
            block: k,
            start: 1 << k,
            end: 2 << k,
            max_abs: 0.0,
        })
        .collect();
    for &(n, c) in terms {
        if n == 0 {
            continue;
        }
        let k = 63 - n.leading_zeros();
        if let Some(row) = rows.get_mut(k as usize) {
            row.max_abs = row.max_abs.max(c.abs());
        }
    }
    rows
}
