//! Walsh Riesz products `Pi_k = (1 + X_1) ... (1 + X_k)` with adaptively
//! chosen levels, and their certificates.
//!
//! Each factor is `X_k = a_k phi_k` where `phi_k` is the flat polynomial of
//! level `l_k` substituted into a block `J_k` of `l_k + 1` fresh coordinates
//! and `a_k = 2^{-l_k/2} / (2C)`. Blocks sit strictly to the right of each
//! other, so the factors are independent and the spectrum of `Pi_k` is the
//! xor-disjoint product of the factor spectra.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psi::PsiSpec;
use crate::rudin_shapiro::{
    build_flat, substitute_terms, BlockSpec, FlatPolynomial, FLATNESS_CONSTANT, MAX_LEVEL,
};
use crate::walsh::{walsh_sign, AtomTable, WalshSeries, MAX_DENSE_DEPTH};

/// Default bound on used coordinates for exhaustive verification.
pub const DEFAULT_EXHAUSTIVE_CAP: u32 = 14;

/// Hard limit on used coordinates (indices are `u64`).
pub const MAX_COORDINATES: u32 = 62;

/// Largest spectrum the builder will materialise.
pub const MAX_SPECTRUM_TERMS: usize = 1 << 26;

/// Default number of random atoms in a sampled certificate.
pub const DEFAULT_SAMPLE_ATOMS: usize = 1024;

pub const DEFAULT_SEED: u64 = 0x5eed_2004;

/// `a = 2^{-l/2} / (2C)`.
pub fn standard_amplitude(level: u32) -> f64 {
    2f64.powf(-(level as f64) / 2.0) / (2.0 * FLATNESS_CONSTANT)
}

/// Placement and scale of one factor; enough to rebuild the product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub level: u32,
    pub block: BlockSpec,
    pub amplitude: f64,
}

/// Norms of a single factor `X = a phi`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorNorms {
    pub l2: f64,
    /// `None` when the level is too large for an exhaustive U-norm scan.
    pub u: Option<f64>,
    pub a: f64,
    pub pm: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug)]
pub struct Factor {
    record: StageRecord,
    flat: FlatPolynomial,
    terms: Vec<(u64, f64)>,
    /// Values of `X` on the `2^{l+1}` atoms of its own block.
    local: Vec<f64>,
    norms: FactorNorms,
}

impl Factor {
    fn new(level: u32, amplitude: f64, block: BlockSpec) -> Result<Self> {
        let flat = build_flat(level)?;
        let terms: Vec<(u64, f64)> = substitute_terms(&flat, &block)?
            .into_iter()
            .map(|(n, c)| (n, amplitude * c))
            .collect();
        let local: Vec<f64> = flat
            .to_series()
            .values()
            .into_values()
            .into_iter()
            .map(|v| amplitude * v)
            .collect();
        let (l2, a, pm) = flat.coefficient_norms();
        let (lo, hi) = flat.value_range();
        let scale = amplitude.abs();
        let (min, max) = if amplitude >= 0.0 {
            (amplitude * lo as f64, amplitude * hi as f64)
        } else {
            (amplitude * hi as f64, amplitude * lo as f64)
        };
        let norms = FactorNorms {
            l2: scale * l2,
            u: flat.u_norm().map(|u| scale * u),
            a: scale * a,
            pm: scale * pm,
            min,
            max,
        };
        Ok(Factor {
            record: StageRecord {
                level,
                block,
                amplitude,
            },
            flat,
            terms,
            local,
            norms,
        })
    }

    pub fn record(&self) -> &StageRecord {
        &self.record
    }

    pub fn level(&self) -> u32 {
        self.record.level
    }

    pub fn block(&self) -> &BlockSpec {
        &self.record.block
    }

    pub fn amplitude(&self) -> f64 {
        self.record.amplitude
    }

    pub fn flat(&self) -> &FlatPolynomial {
        &self.flat
    }

    /// Spectrum of `X` after substitution, sorted by index.
    pub fn terms(&self) -> &[(u64, f64)] {
        &self.terms
    }

    pub fn norms(&self) -> &FactorNorms {
        &self.norms
    }

    /// `sigma^2 = E X^2`.
    pub fn variance(&self) -> f64 {
        self.norms.l2 * self.norms.l2
    }

    /// Values of `X` on the atoms of its own block, indexed by local pattern.
    pub fn local_values(&self) -> &[f64] {
        &self.local
    }

    /// Value of `X` at a global atom pattern.
    pub fn value_at(&self, pattern: u64) -> f64 {
        let local = self
            .record
            .block
            .coords()
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &j)| {
                acc | ((((pattern >> (j - 1)) & 1) as usize) << i)
            });
        self.local[local]
    }

    /// Values of `X` on every atom of `depth` coordinates.
    pub fn table(&self, depth: u32) -> Result<AtomTable> {
        if depth < self.record.block.max() {
            return Err(Error::DepthMismatch {
                left: depth,
                right: self.record.block.max(),
            });
        }
        if depth > MAX_DENSE_DEPTH {
            return Err(Error::OutOfRange {
                what: "dense depth",
                value: depth as u64,
                limit: MAX_DENSE_DEPTH as u64,
            });
        }
        AtomTable::new((0..1u64 << depth).map(|t| self.value_at(t)).collect())
    }
}

/// How the infimum of a stage product was obtained.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfMethod {
    /// Minimum over every atom of the used coordinates.
    AtomSweep,
    /// Product of per-factor extremes; exact because the blocks are disjoint.
    Factorized,
}

/// Cached quantities of `Pi_k`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCache {
    /// `sup J_k`, the number of coordinates `Pi_k` depends on.
    pub used: u32,
    /// Number of spectrum terms of `Pi_k`.
    pub terms: usize,
    pub a_norm: f64,
    pub l2_sq: f64,
    pub inf: f64,
    pub sup: f64,
    pub inf_method: InfMethod,
}

/// The sparse spectrum of `Pi_k` together with its factors and caches.
#[derive(Clone, Debug)]
pub struct RieszProductState {
    factors: Vec<Factor>,
    spectrum: Vec<(u64, f64)>,
    stages: Vec<StageCache>,
    exhaustive_cap: u32,
}

impl Default for RieszProductState {
    fn default() -> Self {
        RieszProductState::new(DEFAULT_EXHAUSTIVE_CAP)
    }
}

impl RieszProductState {
    /// The empty product `Pi_0 = 1`.
    pub fn new(exhaustive_cap: u32) -> Self {
        RieszProductState {
            factors: Vec::new(),
            spectrum: vec![(0, 1.0)],
            stages: vec![StageCache {
                used: 0,
                terms: 1,
                a_norm: 1.0,
                l2_sq: 1.0,
                inf: 1.0,
                sup: 1.0,
                inf_method: InfMethod::AtomSweep,
            }],
            exhaustive_cap,
        }
    }

    /// Rebuilds a product from its stage records.
    pub fn from_records(records: &[StageRecord], exhaustive_cap: u32) -> Result<Self> {
        let mut state = RieszProductState::new(exhaustive_cap);
        for r in records {
            state.push_factor_on(r.level, r.amplitude, r.block.clone())?;
        }
        Ok(state)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn records(&self) -> Vec<StageRecord> {
        self.factors.iter().map(|f| f.record.clone()).collect()
    }

    /// Sorted `(index, coefficient)` pairs of `Pi_K`.
    pub fn spectrum(&self) -> &[(u64, f64)] {
        &self.spectrum
    }

    /// Caches of `Pi_0 .. Pi_K`.
    pub fn stages(&self) -> &[StageCache] {
        &self.stages
    }

    pub fn current(&self) -> &StageCache {
        self.stages.last().expect("stage 0 always exists")
    }

    pub fn stage_count(&self) -> usize {
        self.factors.len()
    }

    pub fn used_coordinates(&self) -> u32 {
        self.current().used
    }

    pub fn exhaustive_cap(&self) -> u32 {
        self.exhaustive_cap
    }

    pub fn within_cap(&self) -> bool {
        self.used_coordinates() <= self.exhaustive_cap
    }

    /// Appends `X = a(l) phi_l` on the next `l + 1` free coordinates.
    pub fn add_factor(&mut self, level: u32) -> Result<()> {
        self.push_factor(level, standard_amplitude(level))
    }

    /// Appends a factor with an explicit amplitude on the next free block.
    pub fn push_factor(&mut self, level: u32, amplitude: f64) -> Result<()> {
        let start = self.used_coordinates() + 1;
        let needed = self.used_coordinates() + level + 1;
        if needed > MAX_COORDINATES {
            return Err(Error::CoordinateBudget {
                needed,
                limit: MAX_COORDINATES,
            });
        }
        self.push_factor_on(level, amplitude, BlockSpec::contiguous(start, level + 1)?)
    }

    /// Appends a factor on an explicit block, which must lie strictly to the
    /// right of every coordinate already in use.
    pub fn push_factor_on(&mut self, level: u32, amplitude: f64, block: BlockSpec) -> Result<()> {
        let used = self.used_coordinates();
        if block.min() <= used {
            return Err(Error::OverlappingBlock(block.min()));
        }
        if block.max() > MAX_COORDINATES {
            return Err(Error::CoordinateBudget {
                needed: block.max(),
                limit: MAX_COORDINATES,
            });
        }
        if block.len() != level as usize + 1 {
            return Err(Error::CardinalityMismatch {
                expected: level as usize + 1,
                got: block.len(),
            });
        }
        let new_len = self.spectrum.len() * ((1usize << level) + 1);
        if new_len > MAX_SPECTRUM_TERMS {
            return Err(Error::OutOfRange {
                what: "spectrum size",
                value: new_len as u64,
                limit: MAX_SPECTRUM_TERMS as u64,
            });
        }
        let factor = Factor::new(level, amplitude, block)?;

        // Every old index is below 2^used and every factor index has its
        // bits inside J, so (j | s) is collision-free and already sorted.
        let mut spectrum = Vec::with_capacity(new_len);
        spectrum.extend_from_slice(&self.spectrum);
        for &(s, x) in &factor.terms {
            for &(j, c) in &self.spectrum {
                if j & s != 0 {
                    return Err(Error::SpectrumCollision(j ^ s));
                }
                spectrum.push((j | s, c * x));
            }
        }
        if spectrum.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Invariant(
                "product spectrum is not strictly increasing".into(),
            ));
        }

        let prev = *self.current();
        let a_norm = prev.a_norm * (1.0 + factor.norms.a);
        let direct_a: f64 = spectrum.iter().map(|(_, c)| c.abs()).sum();
        if (direct_a - a_norm).abs() > 1e-12 * a_norm {
            return Err(Error::Invariant(format!(
                "A-norm {direct_a} does not factor as {a_norm}"
            )));
        }
        let (lo, hi) = (1.0 + factor.norms.min, 1.0 + factor.norms.max);
        let corners = [prev.inf * lo, prev.inf * hi, prev.sup * lo, prev.sup * hi];
        let mut inf = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let mut sup = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let used = factor.block().max();
        let mut inf_method = InfMethod::Factorized;
        if used <= self.exhaustive_cap && used <= MAX_DENSE_DEPTH {
            let values = WalshSeries::from_terms(used, &spectrum)?.values();
            let direct_inf = values.min();
            let direct_sup = values
                .values()
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-12 * a_norm;
            if (direct_inf - inf).abs() > tol || (direct_sup - sup).abs() > tol {
                return Err(Error::Invariant(format!(
                    "atom sweep range [{direct_inf}, {direct_sup}] disagrees with factorized [{inf}, {sup}]"
                )));
            }
            inf = direct_inf;
            sup = direct_sup;
            inf_method = InfMethod::AtomSweep;
        }
        self.stages.push(StageCache {
            used,
            terms: spectrum.len(),
            a_norm,
            l2_sq: prev.l2_sq * (1.0 + factor.variance()),
            inf,
            sup,
            inf_method,
        });
        self.spectrum = spectrum;
        self.factors.push(factor);
        Ok(())
    }

    /// Spectrum of `Pi_k`: the prefix of indices below `2^{sup J_k}`.
    pub fn stage_spectrum(&self, k: usize) -> &[(u64, f64)] {
        &self.spectrum[..self.stages[k].terms]
    }

    /// Dense Walsh series of `Pi_k` at depth `sup J_k`.
    pub fn stage_series(&self, k: usize) -> Result<WalshSeries> {
        WalshSeries::from_terms(self.stages[k].used, self.stage_spectrum(k))
    }

    /// Dense Walsh series of the whole product.
    pub fn to_series(&self) -> Result<WalshSeries> {
        self.stage_series(self.stage_count())
    }

    /// `Pi_k` at a global atom pattern, via the factor values.
    pub fn stage_value_at(&self, k: usize, pattern: u64) -> f64 {
        self.factors[..k]
            .iter()
            .fold(1.0, |acc, f| acc * (1.0 + f.value_at(pattern)))
    }
}

/// Summability budget: stage `k` may spend at most `scale * 2^{-k}`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummabilityBudget {
    pub scale: f64,
}

impl Default for SummabilityBudget {
    fn default() -> Self {
        SummabilityBudget { scale: 1.0 }
    }
}

impl SummabilityBudget {
    /// Allowance of stage `k >= 1`.
    pub fn term_bound(&self, k: usize) -> f64 {
        self.scale * 2f64.powi(-(k as i32))
    }

    /// Total allowance of stages `1 ..= stages`.
    pub fn total(&self, stages: usize) -> f64 {
        (1..=stages).map(|k| self.term_bound(k)).sum()
    }
}

/// Certified bound on `sum psi(|c_n|)` over the spectrum of `Pi_k X_{k+1}`:
/// `||Pi_k||_A^2 sigma^2 psi_env(PM)`.
pub fn stage_bound(a_norm: f64, variance: f64, pm: f64, psi: &PsiSpec) -> f64 {
    a_norm * a_norm * variance * psi.envelope(pm)
}

/// Why a level was accepted for the next stage.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admission {
    pub stage: usize,
    pub level: u32,
    /// `a_{k+1} ||Pi_k||_A`, which must not exceed `inf Pi_k / 4`.
    pub sup_gap_lhs: f64,
    pub sup_gap_rhs: f64,
    pub stage_bound: f64,
    pub budget_term: f64,
}

impl Admission {
    pub fn holds(&self) -> bool {
        self.sup_gap_lhs <= self.sup_gap_rhs && self.stage_bound <= self.budget_term
    }
}

/// Smallest level `l` for the next factor such that
/// `a(l) ||Pi_k||_A <= inf Pi_k / 4` and the stage bound of
/// `Pi_k X_{k+1}` fits the budget term of stage `k + 1`.
pub fn choose_next_level(
    state: &RieszProductState,
    psi: &PsiSpec,
    budget: &SummabilityBudget,
    max_level: u32,
    max_coordinates: u32,
) -> Result<Admission> {
    let cache = state.current();
    let stage = state.stage_count() + 1;
    let budget_term = budget.term_bound(stage);
    let pm_pi = state
        .stage_spectrum(state.stage_count())
        .iter()
        .fold(0.0f64, |acc, (_, c)| acc.max(c.abs()));
    let max_level = max_level.min(MAX_LEVEL);
    let mut last = None;
    for level in 0..=max_level {
        if cache.used + level + 1 > max_coordinates {
            break;
        }
        let a = standard_amplitude(level);
        let variance = a * a * 2f64.powi(level as i32);
        let admission = Admission {
            stage,
            level,
            sup_gap_lhs: a * cache.a_norm,
            sup_gap_rhs: cache.inf / 4.0,
            stage_bound: stage_bound(cache.a_norm, variance, a * pm_pi, psi),
            budget_term,
        };
        if admission.holds() {
            return Ok(admission);
        }
        last = Some(admission);
    }
    let reason = match last {
        None => format!(
            "{} coordinates in use leave no room under the limit {max_coordinates}",
            cache.used
        ),
        Some(a) => format!(
            "at level {} (coordinate or level limit): a*A = {:.3e} vs inf/4 = {:.3e}, stage bound {:.3e} vs budget {:.3e}",
            a.level, a.sup_gap_lhs, a.sup_gap_rhs, a.stage_bound, a.budget_term
        ),
    };
    Err(Error::NoAdmissibleLevel {
        cap: max_level,
        reason,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub stages: usize,
    pub exhaustive_cap: u32,
    pub max_coordinates: u32,
    pub max_level: u32,
    pub budget: SummabilityBudget,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            stages: 3,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            max_coordinates: 40,
            max_level: MAX_LEVEL,
            budget: SummabilityBudget::default(),
        }
    }
}

/// A built Walsh measure together with the admission data of each stage.
#[derive(Clone, Debug)]
pub struct WalshMeasureBuild {
    pub state: RieszProductState,
    pub admissions: Vec<Admission>,
}

/// Runs the adaptive construction for `config.stages` stages.
pub fn build_walsh_measure(psi: &PsiSpec, config: &BuildConfig) -> Result<WalshMeasureBuild> {
    psi.validate()?;
    let max_coordinates = config.max_coordinates.min(MAX_COORDINATES);
    let mut state = RieszProductState::new(config.exhaustive_cap);
    let mut admissions = Vec::with_capacity(config.stages);
    for _ in 0..config.stages {
        let admission = choose_next_level(
            &state,
            psi,
            &config.budget,
            config.max_level,
            max_coordinates,
        )?;
        state.add_factor(admission.level)?;
        admissions.push(admission);
    }
    Ok(WalshMeasureBuild { state, admissions })
}

/// Outcome of scanning every prefix sum of the built series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityCertificate {
    pub exhaustive: bool,
    pub depth: u32,
    pub atoms_checked: u64,
    /// Number of distinct partial sums streamed per atom.
    pub distinct_partial_sums: u64,
    pub seed: Option<u64>,
    pub tolerance: f64,
    /// Minimum of `S_p(t)` over orders `p >= 1`.
    pub min_partial_sum: f64,
    pub min_order: u64,
    pub min_atom: u64,
    /// Minimum of `S_p(t) - Pi_k(t) / 4` where stage `k` owns order `p`.
    pub stagewise_min_margin: f64,
    pub stagewise_min_ratio: f64,
    pub stagewise_stage: usize,
    pub stagewise_order: u64,
    pub stagewise_atom: u64,
}

impl PositivityCertificate {
    pub fn nonnegative(&self) -> bool {
        self.min_partial_sum >= -self.tolerance
    }

    pub fn stagewise_holds(&self) -> bool {
        self.stagewise_min_margin >= -self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.nonnegative() && self.stagewise_holds()
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub sample_atoms: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: DEFAULT_SEED,
            sample_atoms: DEFAULT_SAMPLE_ATOMS,
        }
    }
}

#[derive(Copy, Clone)]
struct Extremes {
    min: (f64, u64, u64),
    margin: (f64, u64, u64, usize),
    ratio: f64,
}

impl Extremes {
    fn identity() -> Self {
        Extremes {
            min: (f64::INFINITY, u64::MAX, u64::MAX),
            margin: (f64::INFINITY, u64::MAX, u64::MAX, 0),
            ratio: f64::INFINITY,
        }
    }

    fn merge(self, other: Self) -> Self {
        let min = if other.min.0 < self.min.0
            || (other.min.0 == self.min.0 && (other.min.1, other.min.2) < (self.min.1, self.min.2))
        {
            other.min
        } else {
            self.min
        };
        let margin = if other.margin.0 < self.margin.0
            || (other.margin.0 == self.margin.0
                && (other.margin.1, other.margin.2) < (self.margin.1, self.margin.2))
        {
            other.margin
        } else {
            self.margin
        };
        Extremes {
            min,
            margin,
            ratio: self.ratio.min(other.ratio),
        }
    }
}

/// Streams every prefix sum of the product on every atom (or, past the
/// exhaustive cap, on a seeded sample of atoms) and checks both `S_p >= 0`
/// and the stagewise bound `S_p >= Pi_k / 4` for orders
/// `2^{sup J_k} < p <= 2^{sup J_{k+1}}`.
pub fn verify_all_partial_sums(
    state: &RieszProductState,
    options: &VerifyOptions,
) -> PositivityCertificate {
    let depth = state.used_coordinates();
    let spectrum = state.spectrum();
    let bounds: Vec<u64> = state.stages().iter().map(|s| 1u64 << s.used).collect();
    let top = *bounds.last().unwrap();
    let last_stage = state.stage_count().saturating_sub(1);
    let stage_of = |p: u64| -> usize {
        bounds
            .iter()
            .take(last_stage + 1)
            .rposition(|&b| b < p)
            .unwrap_or(0)
    };
    // The partial sum after term i is constant on orders [n_i + 1, n_{i+1}].
    let runs: Vec<(usize, usize)> = spectrum
        .iter()
        .enumerate()
        .map(|(i, &(n, _))| {
            let hi = spectrum.get(i + 1).map_or(top, |t| t.0);
            (stage_of(n + 1), stage_of(hi.max(n + 1)))
        })
        .collect();

    let exhaustive = depth <= state.exhaustive_cap();
    let atoms: Vec<u64> = if exhaustive {
        (0..1u64 << depth).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let all_minus = if depth == 64 {
            u64::MAX
        } else {
            (1u64 << depth) - 1
        };
        let mut atoms = vec![0, all_minus];
        atoms.extend((0..options.sample_atoms).map(|_| rng.gen_range(0..=all_minus)));
        atoms
    };
    let tolerance = 1e-12 * state.current().a_norm;

    let extremes = atoms
        .par_iter()
        .map(|&t| {
            let mut pis = Vec::with_capacity(state.stage_count() + 1);
            pis.push(1.0);
            for f in state.factors() {
                let prev = *pis.last().unwrap();
                pis.push(prev * (1.0 + f.value_at(t)));
            }
            let mut ex = Extremes::identity();
            let mut s = 0.0;
            for (&(n, c), &(k_lo, k_hi)) in spectrum.iter().zip(&runs) {
                s += if walsh_sign(n, t) > 0 { c } else { -c };
                if s < ex.min.0 {
                    ex.min = (s, n + 1, t);
                }
                for (k, pi) in pis.iter().enumerate().take(k_hi + 1).skip(k_lo) {
                    let margin = s - pi / 4.0;
                    if margin < ex.margin.0 {
                        ex.margin = (margin, n + 1, t, k);
                    }
                    ex.ratio = ex.ratio.min(s / pi);
                }
            }
            ex
        })
        .reduce(Extremes::identity, Extremes::merge);

    PositivityCertificate {
        exhaustive,
        depth,
        atoms_checked: atoms.len() as u64,
        distinct_partial_sums: spectrum.len() as u64,
        seed: (!exhaustive).then_some(options.seed),
        tolerance,
        min_partial_sum: extremes.min.0,
        min_order: extremes.min.1,
        min_atom: extremes.min.2,
        stagewise_min_margin: extremes.margin.0,
        stagewise_min_ratio: extremes.ratio,
        stagewise_stage: extremes.margin.3,
        stagewise_order: extremes.margin.1,
        stagewise_atom: extremes.margin.2,
    }
}

/// Exact and certified contributions of one stage to `sum psi(|c_n|)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTerm {
    pub stage: usize,
    pub level: u32,
    pub exact: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiSumReport {
    pub psi: String,
    /// `psi(|c_0|)`, excluded from the stage bounds.
    pub constant_term: f64,
    pub stages: Vec<StageTerm>,
    /// `sum_{n >= 1} psi(|c_n|)`.
    pub exact_total: f64,
    pub bound_total: f64,
}

impl PsiSumReport {
    /// Every stage's exact sum is within its bound.
    pub fn holds(&self) -> bool {
        self.stages
            .iter()
            .all(|s| s.exact <= s.bound * (1.0 + 1e-12))
            && self.exact_total <= self.bound_total * (1.0 + 1e-12)
    }
}

/// Computes `sum psi(|c_n|)` exactly over the built spectrum, split by stage,
/// next to the bound `||Pi_k||_A^2 sigma_{k+1}^2 psi_env(||Pi_k X_{k+1}||_PM)`.
pub fn psi_sum_report(state: &RieszProductState, psi: &PsiSpec) -> PsiSumReport {
    let spectrum = state.spectrum();
    let constant_term = psi.eval(spectrum[0].1.abs());
    let mut stages = Vec::with_capacity(state.stage_count());
    for (k, factor) in state.factors().iter().enumerate() {
        let lo = state.stages()[k].terms;
        let hi = state.stages()[k + 1].terms;
        let exact: f64 = spectrum[lo..hi]
            .iter()
            .map(|(_, c)| psi.eval(c.abs()))
            .sum();
        let pm_pi = spectrum[..lo]
            .iter()
            .fold(0.0f64, |acc, (_, c)| acc.max(c.abs()));
        let bound = stage_bound(
            state.stages()[k].a_norm,
            factor.variance(),
            pm_pi * factor.norms().pm,
            psi,
        );
        stages.push(StageTerm {
            stage: k + 1,
            level: factor.level(),
            exact,
            bound,
        });
    }
    let exact_total = spectrum[1..].iter().map(|(_, c)| psi.eval(c.abs())).sum();
    let bound_total = stages.iter().map(|s| s.bound).sum();
    PsiSumReport {
        psi: psi.label(),
        constant_term,
        stages,
        exact_total,
        bound_total,
    }
}

/// Measured norms of one factor next to their closed forms for the standard
/// amplitude.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub stage: usize,
    pub level: u32,
    pub l2: f64,
    pub u: Option<f64>,
    pub a: f64,
    pub pm: f64,
    pub expected_l2: f64,
    pub expected_a: f64,
    pub expected_pm: f64,
}

impl NormRow {
    pub fn max_residual(&self) -> f64 {
        (self.l2 - self.expected_l2)
            .abs()
            .max((self.a - self.expected_a).abs())
            .max((self.pm - self.expected_pm).abs())
    }

    /// Closed forms within `1e-12` and `||X||_U < 1/2` when it was measured.
    pub fn holds(&self) -> bool {
        self.max_residual() <= 1e-12 && self.u.is_none_or(|u| u < 0.5)
    }
}

pub fn norm_table(state: &RieszProductState) -> Vec<NormRow> {
    let c2 = 2.0 * FLATNESS_CONSTANT;
    state
        .factors()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let half = 2f64.powf(f.level() as f64 / 2.0);
            NormRow {
                stage: k + 1,
                level: f.level(),
                l2: f.norms().l2,
                u: f.norms().u,
                a: f.norms().a,
                pm: f.norms().pm,
                expected_l2: 1.0 / c2,
                expected_a: half / c2,
                expected_pm: 1.0 / (c2 * half),
            }
        })
        .collect()
}
