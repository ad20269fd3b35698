//! Trigonometric Riesz products `prod (1 + a_k phi_{l_k}(l_k t))` built from
//! cosine polynomials with Rudin-Shapiro signs.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psi::PsiSpec;
use crate::riesz::SummabilityBudget;
use crate::rudin_shapiro::{build_pair, rs_sign, FLATNESS_CONSTANT};

/// Largest `m` with `l = 2^m` accepted by [`build_trig_flat`].
pub const MAX_TRIG_EXPONENT: u32 = 12;

pub const MAX_TRIG_STAGES: usize = 3;

pub const DEFAULT_OVERSAMPLE: u64 = 16;

/// Upper limit on grid points times partial sums for one scan.
pub const MAX_GRID_WORK: u64 = 1 << 34;

/// `a = 1 / (4 C sqrt(l))`.
pub fn trig_amplitude(l: u64) -> f64 {
    1.0 / (4.0 * FLATNESS_CONSTANT * (l as f64).sqrt())
}

/// `constant + sum coeff(f) cos(f t)` over positive integer frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    constant: f64,
    coeffs: BTreeMap<u64, f64>,
}

impl TrigPolynomial {
    pub fn new(constant: f64, coeffs: BTreeMap<u64, f64>) -> Result<Self> {
        if coeffs.contains_key(&0) {
            return Err(Error::Precondition(
                "frequency 0 belongs in the constant".into(),
            ));
        }
        Ok(TrigPolynomial { constant, coeffs })
    }

    pub fn one() -> Self {
        TrigPolynomial {
            constant: 1.0,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn coeffs(&self) -> &BTreeMap<u64, f64> {
        &self.coeffs
    }

    /// `(frequency, coeff)` pairs including frequency 0, ascending.
    pub fn terms(&self) -> Vec<(u64, f64)> {
        std::iter::once((0, self.constant))
            .chain(self.coeffs.iter().map(|(&f, &c)| (f, c)))
            .collect()
    }

    pub fn max_frequency(&self) -> u64 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.constant
            + self
                .coeffs
                .iter()
                .map(|(&f, &c)| c * (f as f64 * t).cos())
                .sum::<f64>()
    }

    /// `|constant| + sum |coeff|`.
    pub fn a_norm(&self) -> f64 {
        self.constant.abs() + self.coeffs.values().map(|c| c.abs()).sum::<f64>()
    }

    pub fn pm_norm(&self) -> f64 {
        self.coeffs
            .values()
            .fold(self.constant.abs(), |m, c| m.max(c.abs()))
    }

    /// Mean of the square over a period.
    pub fn mean_square(&self) -> f64 {
        self.constant * self.constant + 0.5 * self.coeffs.values().map(|c| c * c).sum::<f64>()
    }

    /// `p(s t)`.
    pub fn dilate(&self, s: u64) -> TrigPolynomial {
        TrigPolynomial {
            constant: self.constant,
            coeffs: self.coeffs.iter().map(|(&f, &c)| (f * s, c)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> TrigPolynomial {
        TrigPolynomial {
            constant: a * self.constant,
            coeffs: self.coeffs.iter().map(|(&f, &c)| (f, a * c)).collect(),
        }
    }

    /// Product via `cos a cos b = (cos(a + b) + cos|a - b|) / 2`.
    pub fn multiply(&self, other: &TrigPolynomial) -> TrigPolynomial {
        let mut out: BTreeMap<u64, f64> = BTreeMap::new();
        let lhs = self.terms();
        let rhs = other.terms();
        for &(f, c) in &lhs {
            for &(g, d) in &rhs {
                if c == 0.0 || d == 0.0 {
                    continue;
                }
                if f == 0 || g == 0 {
                    *out.entry(f + g).or_default() += c * d;
                } else {
                    *out.entry(f + g).or_default() += 0.5 * c * d;
                    *out.entry(f.abs_diff(g)).or_default() += 0.5 * c * d;
                }
            }
        }
        let constant = out.remove(&0).unwrap_or(0.0);
        TrigPolynomial {
            constant,
            coeffs: out,
        }
    }

    /// Exact product `self * (1 + x)` where every new frequency must be new
    /// and distinct; returns the product and the added part `self * x`.
    pub fn multiply_disjoint(
        &self,
        x: &TrigPolynomial,
    ) -> Result<(TrigPolynomial, TrigPolynomial)> {
        let mut added: BTreeMap<u64, f64> = BTreeMap::new();
        let mut insert = |f: u64, v: f64| -> Result<()> {
            if f == 0 || self.coeffs.contains_key(&f) || added.insert(f, v).is_some() {
                return Err(Error::FrequencyCollision(f));
            }
            Ok(())
        };
        for (f, c) in self.terms() {
            for (&g, &d) in &x.coeffs {
                if f == 0 {
                    insert(g, c * d)?;
                } else {
                    insert(f + g, 0.5 * c * d)?;
                    insert(f.abs_diff(g), 0.5 * c * d)?;
                }
            }
        }
        let increment = TrigPolynomial {
            constant: 0.0,
            coeffs: added,
        };
        let mut coeffs = self.coeffs.clone();
        coeffs.extend(increment.coeffs.iter().map(|(&f, &c)| (f, c)));
        Ok((
            TrigPolynomial {
                constant: self.constant,
                coeffs,
            },
            increment,
        ))
    }
}

/// Extremes of all partial sums (in increasing frequency) on a uniform grid.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridScan {
    pub points: u64,
    pub min: f64,
    /// Highest frequency included in the partial sum attaining `min`.
    pub min_order: u64,
    pub min_t: f64,
    pub max_abs: f64,
    /// Full sum only.
    pub full_min: f64,
    pub full_max_abs: f64,
    /// `pi / points * max_F F ||S_F||_A`, the most any partial sum can dip
    /// between grid points.
    pub bernstein_slack: f64,
}

/// Scans every partial sum of `p` on `points` equally spaced nodes of
/// `[0, 2 pi)`.
pub fn grid_scan(p: &TrigPolynomial, points: u64) -> Result<GridScan> {
    let terms = p.terms();
    let work = points.saturating_mul(terms.len() as u64);
    if work > MAX_GRID_WORK {
        return Err(Error::OutOfRange {
            what: "grid work",
            value: work,
            limit: MAX_GRID_WORK,
        });
    }
    if points == 0 {
        return Err(Error::Precondition("empty grid".into()));
    }
    let step = 2.0 * PI / points as f64;
    let table: Vec<f64> = (0..points).map(|i| (i as f64 * step).cos()).collect();
    type Acc = ((f64, u64, u64), f64, f64, f64);
    let (min, max_abs, full_min, full_max_abs): Acc = (0..points)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            let mut min = (f64::INFINITY, 0u64, i);
            let mut max_abs = 0.0f64;
            for &(f, c) in &terms {
                s += c * table[((f as u128 * i as u128) % points as u128) as usize];
                if s < min.0 {
                    min = (s, f, i);
                }
                max_abs = max_abs.max(s.abs());
            }
            (min, max_abs, s, s.abs())
        })
        .reduce(
            || ((f64::INFINITY, 0, 0), 0.0, f64::INFINITY, 0.0),
            |a, b| {
                let min = if b.0 .0 < a.0 .0
                    || (b.0 .0 == a.0 .0 && (b.0 .1, b.0 .2) < (a.0 .1, a.0 .2))
                {
                    b.0
                } else {
                    a.0
                };
                (min, a.1.max(b.1), a.2.min(b.2), a.3.max(b.3))
            },
        );
    let mut a_norm = 0.0;
    let mut slope = 0.0f64;
    for &(f, c) in &terms {
        a_norm += c.abs();
        slope = slope.max(f as f64 * a_norm);
    }
    Ok(GridScan {
        points,
        min: min.0,
        min_order: min.1,
        min_t: min.2 as f64 * step,
        max_abs,
        full_min,
        full_max_abs,
        bernstein_slack: slope * PI / points as f64,
    })
}

/// `phi_l(t) = sum_{n=1}^{l} eps_{n-1} cos(n t)` with Rudin-Shapiro signs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigFlat {
    pub length: u64,
    pub poly: TrigPolynomial,
    /// Grid supremum of all partial sums in `n`.
    pub prefix_sup: f64,
    pub grid_points: u64,
}

impl TrigFlat {
    pub fn bound(&self) -> f64 {
        FLATNESS_CONSTANT * (self.length as f64).sqrt()
    }
}

pub fn build_trig_flat(length: u64) -> Result<TrigFlat> {
    build_trig_flat_on(length, DEFAULT_OVERSAMPLE)
}

/// Builds `phi_l` and asserts its prefix supremum on an `oversample * l`
/// point grid is at most `C sqrt(l)`.
pub fn build_trig_flat_on(length: u64, oversample: u64) -> Result<TrigFlat> {
    if !length.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(length as usize));
    }
    let m = length.trailing_zeros();
    if m > MAX_TRIG_EXPONENT {
        return Err(Error::OutOfRange {
            what: "trig length exponent",
            value: m as u64,
            limit: MAX_TRIG_EXPONENT as u64,
        });
    }
    let pair = build_pair(m)?;
    let coeffs: BTreeMap<u64, f64> = (0..length).map(|i| (i + 1, rs_sign(i) as f64)).collect();
    if coeffs
        .iter()
        .any(|(&f, &c)| c as i8 != pair.p()[f as usize - 1])
    {
        return Err(Error::Invariant(
            "sign sequence disagrees with the concatenation".into(),
        ));
    }
    let poly = TrigPolynomial {
        constant: 0.0,
        coeffs,
    };
    let grid_points = oversample.max(1) * length;
    let scan = grid_scan(&poly, grid_points)?;
    let flat = TrigFlat {
        length,
        poly,
        prefix_sup: scan.max_abs,
        grid_points,
    };
    if flat.prefix_sup > flat.bound() {
        return Err(Error::Invariant(format!(
            "grid prefix supremum {} exceeds {}",
            flat.prefix_sup,
            flat.bound()
        )));
    }
    Ok(flat)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigStage {
    pub stage: usize,
    pub length: u64,
    pub amplitude: f64,
    /// Smallest power of two above `4 F_k`, where the search started.
    pub lacunary_floor: u64,
    /// `a_{k+1} ||Pi_k||_A` against a certified lower bound of `inf Pi_k / 4`.
    pub sup_gap_lhs: f64,
    pub sup_gap_rhs: f64,
    pub stage_bound: f64,
    pub budget_term: f64,
    pub collisions_retried: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPsiTerm {
    pub stage: usize,
    pub exact: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigCertificate {
    pub grid: GridScan,
    pub oversample: u64,
    pub supports_disjoint: bool,
    pub parseval_residual: f64,
    pub psi_terms: Vec<TrigPsiTerm>,
    pub psi_exact_total: f64,
    pub psi_bound_total: f64,
    /// Number of admissible multi-indices checked.
    pub orthogonality_indices: usize,
    /// No admissible product has frequency 0 in its exact frequency set.
    pub orthogonality_exact: bool,
    /// Largest `|mean prod X_k^{alpha_k}|` by quadrature.
    pub orthogonality_residual: f64,
}

impl TrigCertificate {
    pub fn passed(&self) -> bool {
        self.grid.min >= 0.0
            && self.supports_disjoint
            && self.parseval_residual <= 1e-8
            && self
                .psi_terms
                .iter()
                .all(|t| t.exact <= t.bound * (1.0 + 1e-12))
            && self.orthogonality_exact
            && self.orthogonality_residual <= 1e-10
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigMeasure {
    pub stages: Vec<TrigStage>,
    /// `X_k` as cosine polynomials.
    pub factors: Vec<TrigPolynomial>,
    /// `Pi_0 .. Pi_K`.
    pub products: Vec<TrigPolynomial>,
    /// `Pi_{k-1} X_k`, the part added at stage `k`.
    pub increments: Vec<TrigPolynomial>,
    pub psi: String,
}

impl TrigMeasure {
    pub fn product(&self) -> &TrigPolynomial {
        self.products.last().expect("Pi_0 always exists")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigConfig {
    pub stages: usize,
    pub oversample: u64,
    pub budget: SummabilityBudget,
}

impl Default for TrigConfig {
    fn default() -> Self {
        TrigConfig {
            stages: 2,
            oversample: DEFAULT_OVERSAMPLE,
            budget: SummabilityBudget::default(),
        }
    }
}

/// Certified lower bound of a polynomial: grid minimum minus Bernstein slack.
fn certified_inf(p: &TrigPolynomial, oversample: u64) -> Result<f64> {
    if p.coeffs.is_empty() {
        return Ok(p.constant);
    }
    let points = oversample * p.max_frequency();
    let scan = grid_scan(p, points.max(1))?;
    let slope = p.max_frequency() as f64 * p.a_norm();
    Ok(scan.full_min - slope * PI / points as f64)
}

/// `||Pi_k||_A^2 * sum x_s^2 * psi_env(PM(Pi_k) PM(X))`.
fn trig_stage_bound(pi: &TrigPolynomial, x: &TrigPolynomial, psi: &PsiSpec) -> f64 {
    let sum_sq: f64 = x.coeffs.values().map(|c| c * c).sum();
    pi.a_norm().powi(2) * sum_sq * psi.envelope(pi.pm_norm() * x.pm_norm())
}

pub fn build_trig_measure(psi: &PsiSpec, config: &TrigConfig) -> Result<TrigMeasure> {
    psi.validate()?;
    if config.stages > MAX_TRIG_STAGES {
        return Err(Error::Precondition(format!(
            "at most {MAX_TRIG_STAGES} trigonometric stages are supported, got {}",
            config.stages
        )));
    }
    let mut measure = TrigMeasure {
        stages: Vec::new(),
        factors: Vec::new(),
        products: vec![TrigPolynomial::one()],
        increments: Vec::new(),
        psi: psi.label(),
    };
    for k in 0..config.stages {
        let pi = measure.product().clone();
        let floor = (4 * pi.max_frequency() + 1).next_power_of_two();
        let inf = certified_inf(&pi, config.oversample)?;
        let budget_term = config.budget.term_bound(k + 1);
        let mut length = floor;
        let mut retried = 0;
        let mut last_reason = String::new();
        let accepted = loop {
            if length.trailing_zeros() > MAX_TRIG_EXPONENT {
                return Err(Error::NoAdmissibleLevel {
                    cap: MAX_TRIG_EXPONENT,
                    reason: format!("stage {}: {last_reason}", k + 1),
                });
            }
            let amplitude = trig_amplitude(length);
            let flat = build_trig_flat_on(length, config.oversample)?;
            let x = flat.poly.dilate(length).scale(amplitude);
            let stage = TrigStage {
                stage: k + 1,
                length,
                amplitude,
                lacunary_floor: floor,
                sup_gap_lhs: amplitude * pi.a_norm(),
                sup_gap_rhs: inf / 4.0,
                stage_bound: trig_stage_bound(&pi, &x, psi),
                budget_term,
                collisions_retried: retried,
            };
            if stage.sup_gap_lhs > stage.sup_gap_rhs || stage.stage_bound > budget_term {
                last_reason = format!(
                    "length {length}: a*A = {:.3e} vs inf/4 >= {:.3e}, stage bound {:.3e} vs budget {:.3e}",
                    stage.sup_gap_lhs, stage.sup_gap_rhs, stage.stage_bound, budget_term
                );
                length *= 2;
                continue;
            }
            match pi.multiply_disjoint(&x) {
                Ok((next, increment)) => break (stage, x, next, increment),
                Err(Error::FrequencyCollision(f)) => {
                    last_reason = format!("length {length}: frequency collision at {f}");
                    retried += 1;
                    length *= 2;
                }
                Err(e) => return Err(e),
            }
        };
        let (stage, x, next, increment) = accepted;
        measure.stages.push(stage);
        measure.factors.push(x);
        measure.products.push(next);
        measure.increments.push(increment);
    }
    Ok(measure)
}

/// Frequencies reachable by `cos(a t) cos(b t)` products: `{a + b, |a - b|}`.
fn sumset(a: &BTreeSet<u64>, b: &BTreeSet<u64>) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    for &x in a {
        for &y in b {
            out.insert(x + y);
            out.insert(x.abs_diff(y));
        }
    }
    out
}

fn admissible_indices(k: usize) -> Vec<Vec<u8>> {
    (0..3usize.pow(k as u32))
        .map(|code| {
            (0..k)
                .map(|i| (code / 3usize.pow(i as u32) % 3) as u8)
                .collect::<Vec<u8>>()
        })
        .filter(|alpha| alpha.contains(&1) && alpha.iter().filter(|&&e| e == 2).count() <= 2)
        .collect()
}

/// Exact frequency-set check and quadrature residual of `mean prod X_k^{alpha_k}`
/// for every admissible multi-index.
pub fn trig_strong_orthogonality(factors: &[TrigPolynomial], points: u64) -> (usize, bool, f64) {
    let supports: Vec<BTreeSet<u64>> = factors
        .iter()
        .map(|x| {
            let mut s: BTreeSet<u64> = x.coeffs.keys().copied().collect();
            if x.constant != 0.0 {
                s.insert(0);
            }
            s
        })
        .collect();
    let indices = admissible_indices(factors.len());
    let mut exact = true;
    let mut residual = 0.0f64;
    let step = 2.0 * PI / points as f64;
    for alpha in &indices {
        let mut freq: BTreeSet<u64> = BTreeSet::from([0]);
        for (&e, s) in alpha.iter().zip(&supports) {
            for _ in 0..e {
                freq = sumset(&freq, s);
            }
        }
        exact &= !freq.contains(&0);
        let mean = (0..points)
            .into_par_iter()
            .map(|i| {
                let t = i as f64 * step;
                alpha
                    .iter()
                    .zip(factors)
                    .map(|(&e, x)| x.eval(t).powi(e as i32))
                    .product::<f64>()
            })
            .sum::<f64>()
            / points as f64;
        residual = residual.max(mean.abs());
    }
    (indices.len(), exact, residual)
}

/// Grid positivity, disjoint supports, Parseval, psi-sum and strong
/// orthogonality of a built trigonometric measure.
pub fn certify_trig_measure(
    measure: &TrigMeasure,
    psi: &PsiSpec,
    oversample: u64,
) -> Result<TrigCertificate> {
    let product = measure.product();
    let points = (oversample * product.max_frequency()).max(oversample);
    let grid = grid_scan(product, points)?;

    let mut seen: BTreeSet<u64> = BTreeSet::from([0]);
    let mut supports_disjoint = true;
    for inc in &measure.increments {
        for &f in inc.coeffs.keys() {
            supports_disjoint &= seen.insert(f);
        }
    }

    // The grid has more than twice the top frequency of the product, so the
    // mean of the square is computed exactly up to rounding.
    let step = 2.0 * PI / points as f64;
    let quadrature = (0..points)
        .into_par_iter()
        .map(|i| product.eval(i as f64 * step).powi(2))
        .sum::<f64>()
        / points as f64;
    let parseval_residual = (quadrature - product.mean_square()).abs();

    let psi_terms: Vec<TrigPsiTerm> = measure
        .increments
        .iter()
        .enumerate()
        .map(|(k, inc)| TrigPsiTerm {
            stage: k + 1,
            exact: inc.coeffs.values().map(|c| psi.eval(c.abs())).sum(),
            bound: trig_stage_bound(&measure.products[k], &measure.factors[k], psi),
        })
        .collect();
    let psi_exact_total = product.coeffs.values().map(|c| psi.eval(c.abs())).sum();
    let psi_bound_total = psi_terms.iter().map(|t| t.bound).sum();

    let orth_points = (oversample
        * 2
        * measure
            .factors
            .iter()
            .map(|x| x.max_frequency())
            .sum::<u64>())
    .max(oversample);
    let (orthogonality_indices, orthogonality_exact, orthogonality_residual) =
        trig_strong_orthogonality(&measure.factors, orth_points);

    Ok(TrigCertificate {
        grid,
        oversample,
        supports_disjoint,
        parseval_residual,
        psi_terms,
        psi_exact_total,
        psi_bound_total,
        orthogonality_indices,
        orthogonality_exact,
        orthogonality_residual,
    })
}
