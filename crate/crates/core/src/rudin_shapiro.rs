//! Rudin–Shapiro pairs, the flat mean-zero polynomial built from them, and
//! substitution of a polynomial into a block of Rademacher coordinates.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walsh::{butterfly, coefficient_norms, walsh_sign, WalshSeries};

/// Flatness constant `sqrt(2) / (sqrt(2) - 1) = 2 + sqrt(2)`.
pub const FLATNESS_CONSTANT: f64 = 2.0 + SQRT_2;

/// Largest level accepted by [`build_pair`].
pub const MAX_LEVEL: u32 = 20;

/// Largest level whose U-norm is measured exhaustively (`4^level` work).
pub const EXHAUSTIVE_U_LEVEL: u32 = 13;

/// Rudin–Shapiro sign of index `i`: `(-1)^(number of adjacent 11 pairs)`.
pub fn rs_sign(i: u64) -> i8 {
    if (i & (i >> 1)).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Upper bound `2^{l/2} (2 + sqrt 2)` on the U-norm of `P_l`.
pub fn flatness_bound(level: u32) -> f64 {
    FLATNESS_CONSTANT * 2f64.powf(level as f64 / 2.0)
}

/// The pair `(P_l, Q_l)` as Walsh coefficient sign vectors in Paley order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RudinShapiroPair {
    level: u32,
    p: Vec<i8>,
    q: Vec<i8>,
}

/// `P_0 = Q_0 = 1`, `P_{l+1} = P_l + r_{l+1} Q_l`, `Q_{l+1} = P_l - r_{l+1} Q_l`.
///
/// Multiplying by `r_{l+1}` moves a coefficient from index `n` to
/// `n + 2^l`, so the recurrence is concatenation of sign vectors.
pub fn build_pair(level: u32) -> Result<RudinShapiroPair> {
    if level > MAX_LEVEL {
        return Err(Error::OutOfRange {
            what: "Rudin-Shapiro level",
            value: level as u64,
            limit: MAX_LEVEL as u64,
        });
    }
    let mut p = vec![1i8];
    let mut q = vec![1i8];
    for _ in 0..level {
        let mut next_p = p.clone();
        next_p.extend_from_slice(&q);
        let mut next_q = p;
        next_q.extend(q.iter().map(|s| -s));
        p = next_p;
        q = next_q;
    }
    Ok(RudinShapiroPair { level, p, q })
}

fn integer_values(signs: &[i8]) -> Vec<i64> {
    let mut data: Vec<i64> = signs.iter().map(|&s| s as i64).collect();
    butterfly(&mut data);
    data
}

/// Exact `max_{p, t} |sum_{n < p} s_n w_n(t)|` over all atoms of the
/// vector's own depth.
fn integer_u_norm(signs: &[i8]) -> i64 {
    (0..signs.len() as u64)
        .into_par_iter()
        .map(|t| {
            let mut s = 0i64;
            let mut best = 0i64;
            for (n, &c) in signs.iter().enumerate() {
                s += (c * walsh_sign(n as u64, t)) as i64;
                best = best.max(s.abs());
            }
            best
        })
        .max()
        .unwrap_or(0)
}

impl RudinShapiroPair {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn p(&self) -> &[i8] {
        &self.p
    }

    pub fn q(&self) -> &[i8] {
        &self.q
    }

    /// Exact values of `P_l` on the `2^l` atoms.
    pub fn p_values(&self) -> Vec<i64> {
        integer_values(&self.p)
    }

    pub fn q_values(&self) -> Vec<i64> {
        integer_values(&self.q)
    }

    /// Checks `P_l(t)^2 + Q_l(t)^2 = 2^{l+1}` on every atom in integers.
    pub fn energy_identity_holds(&self) -> bool {
        let target = 1i64 << (self.level + 1);
        self.p_values()
            .iter()
            .zip(self.q_values())
            .all(|(p, q)| p * p + q * q == target)
    }

    /// Exact U-norm of `P_l`.
    pub fn p_u_norm(&self) -> i64 {
        integer_u_norm(&self.p)
    }

    pub fn p_series(&self) -> WalshSeries {
        WalshSeries::new(self.p.iter().map(|&s| s as f64).collect())
            .expect("length is a power of two")
    }

    pub fn q_series(&self) -> WalshSeries {
        WalshSeries::new(self.q.iter().map(|&s| s as f64).collect())
            .expect("length is a power of two")
    }
}

/// The mean-zero flat polynomial `r_{l+1} P_l`.
///
/// Its coefficients are those of `P_l`, rehoused on the index window
/// `[2^l, 2^{l+1})`. Xor with `2^l` preserves order on `[0, 2^l)`, so every
/// prefix sum of this polynomial is `r_{l+1}` times a prefix sum of `P_l`
/// and the U-norms agree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatPolynomial {
    level: u32,
    coeffs: Vec<i8>,
    /// Exhaustively measured U-norm, when `level <= EXHAUSTIVE_U_LEVEL`.
    u_norm: Option<f64>,
}

pub fn build_flat(level: u32) -> Result<FlatPolynomial> {
    let pair = build_pair(level)?;
    let u_norm = if level <= EXHAUSTIVE_U_LEVEL {
        let u = pair.p_u_norm() as f64;
        if u >= flatness_bound(level) {
            return Err(Error::Invariant(format!(
                "U-norm {u} of the level-{level} flat polynomial exceeds {}",
                flatness_bound(level)
            )));
        }
        Some(u)
    } else {
        None
    };
    Ok(FlatPolynomial {
        level,
        coeffs: pair.p,
        u_norm,
    })
}

impl FlatPolynomial {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of Rademacher variables, `l + 1`.
    pub fn vars(&self) -> usize {
        self.level as usize + 1
    }

    pub fn signs(&self) -> &[i8] {
        &self.coeffs
    }

    pub fn spectrum_start(&self) -> u64 {
        1 << self.level
    }

    pub fn u_norm(&self) -> Option<f64> {
        self.u_norm
    }

    /// `(index, coefficient)` pairs in increasing index order.
    pub fn terms(&self) -> Vec<(u64, f64)> {
        let start = self.spectrum_start();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &s)| (start + i as u64, s as f64))
            .collect()
    }

    pub fn to_series(&self) -> WalshSeries {
        WalshSeries::from_terms(self.level + 1, &self.terms()).expect("indices fit the depth")
    }

    /// Minimum and maximum of the polynomial over its atoms, exactly.
    ///
    /// Equal to the extremes of `P_l` since `r_{l+1}` flips the sign.
    pub fn value_range(&self) -> (i64, i64) {
        let values = integer_values(&self.coeffs);
        let max_abs = values.iter().map(|v| v.abs()).max().unwrap_or(0);
        (-max_abs, max_abs)
    }

    /// `(l2, A, PM)` norms: `2^{l/2}`, `2^l`, `1`.
    pub fn coefficient_norms(&self) -> (f64, f64, f64) {
        coefficient_norms(self.coeffs.iter().map(|&s| s as f64))
    }
}

/// A sorted set of Rademacher coordinates `J` (1-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct BlockSpec {
    coords: Vec<u32>,
}

impl TryFrom<Vec<u32>> for BlockSpec {
    type Error = Error;

    fn try_from(coords: Vec<u32>) -> Result<Self> {
        BlockSpec::new(coords)
    }
}

impl From<BlockSpec> for Vec<u32> {
    fn from(block: BlockSpec) -> Self {
        block.coords
    }
}

impl BlockSpec {
    pub fn new(coords: Vec<u32>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidBlock("empty block".into()));
        }
        if coords[0] == 0 {
            return Err(Error::InvalidBlock("coordinates are 1-based".into()));
        }
        if coords.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBlock(format!(
                "coordinates {coords:?} are not strictly increasing"
            )));
        }
        if *coords.last().unwrap() > 64 {
            return Err(Error::InvalidBlock(format!(
                "coordinate {} exceeds 64",
                coords.last().unwrap()
            )));
        }
        Ok(BlockSpec { coords })
    }

    /// The block `{start, start + 1, .., start + len - 1}`.
    pub fn contiguous(start: u32, len: u32) -> Result<Self> {
        BlockSpec::new((start..start + len).collect())
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn min(&self) -> u32 {
        self.coords[0]
    }

    pub fn max(&self) -> u32 {
        *self.coords.last().unwrap()
    }

    /// Moves bit `i` of `n` to bit `coords[i] - 1`.
    pub fn remap(&self, n: u64) -> u64 {
        self.coords
            .iter()
            .enumerate()
            .filter(|(i, _)| (n >> i) & 1 == 1)
            .fold(0u64, |acc, (_, &j)| acc | 1 << (j - 1))
    }
}

/// Substitutes the `J` coordinates, in increasing order, for `r_1 .. r_{l+1}`.
///
/// The remap is increasing in the index, so the result stays sorted.
pub fn substitute_terms(phi: &FlatPolynomial, block: &BlockSpec) -> Result<Vec<(u64, f64)>> {
    if block.len() != phi.vars() {
        return Err(Error::CardinalityMismatch {
            expected: phi.vars(),
            got: block.len(),
        });
    }
    Ok(phi
        .terms()
        .into_iter()
        .map(|(n, c)| (block.remap(n), c))
        .collect())
}

/// Dense form of [`substitute_terms`] at depth `max J`.
pub fn substitute(phi: &FlatPolynomial, block: &BlockSpec) -> Result<WalshSeries> {
    let terms = substitute_terms(phi, block)?;
    WalshSeries::from_terms(block.max(), &terms)
}
