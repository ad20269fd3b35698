//! Walsh functions on the dyadic group in Paley ordering.
//!
//! The group `{-1, 1}^N` is modelled at finite depth by atoms: an atom over
//! `m` coordinates is an `m`-bit pattern whose bit `j - 1` encodes the
//! Rademacher coordinate `r_j`, with bit `0` meaning `r_j = +1` and bit `1`
//! meaning `r_j = -1`. The Walsh function `w_n` is the product of the `r_j`
//! for which bit `j - 1` of `n` is set, so `w_n(t) = (-1)^{popcount(n & t)}`
//! and the natural-order Hadamard butterfly produces coefficients already in
//! Paley order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest depth for which dense tables are materialised.
pub const MAX_DENSE_DEPTH: u32 = 30;

/// Absolute tolerance for pointwise linear identities.
pub const LINEAR_TOL: f64 = 1e-12;

/// Sign of `w_n` on the atom `pattern`, as `+1` or `-1`.
#[inline]
pub fn walsh_sign(n: u64, pattern: u64) -> i8 {
    if (n & pattern).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

#[inline]
fn signed(value: f64, n: u64, pattern: u64) -> f64 {
    if (n & pattern).count_ones() & 1 == 0 {
        value
    } else {
        -value
    }
}

/// A Walsh index `n = sum alpha_j 2^{j-1}`.
#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct WalshIndex(pub u64);

impl WalshIndex {
    pub const ZERO: WalshIndex = WalshIndex(0);

    pub fn new(n: u64) -> Self {
        WalshIndex(n)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// The exponent word `(alpha_1, alpha_2, ...)` up to the highest set bit.
    pub fn bits(self) -> Vec<u8> {
        (0..self.width())
            .map(|i| ((self.0 >> i) & 1) as u8)
            .collect()
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() > 64 {
            return Err(Error::OutOfRange {
                what: "exponent word length",
                value: bits.len() as u64,
                limit: 64,
            });
        }
        let mut n = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => n |= 1 << i,
                other => {
                    return Err(Error::Precondition(format!(
                        "exponent alpha_{} = {other} is not 0 or 1",
                        i + 1
                    )))
                }
            }
        }
        Ok(WalshIndex(n))
    }

    /// Number of coordinates needed to evaluate `w_n`.
    pub fn width(self) -> u32 {
        64 - self.0.leading_zeros()
    }

    /// Rademacher coordinates `j` (1-based) with `alpha_j = 1`.
    pub fn coordinates(self) -> impl Iterator<Item = u32> {
        let n = self.0;
        (0..64u32).filter(move |i| (n >> i) & 1 == 1).map(|i| i + 1)
    }

    /// Index of the product `w_self * w_other`.
    pub fn product(self, other: WalshIndex) -> WalshIndex {
        WalshIndex(self.0 ^ other.0)
    }
}

impl From<u64> for WalshIndex {
    fn from(n: u64) -> Self {
        WalshIndex(n)
    }
}

/// Index of `w_m * w_n`: exponents add modulo two.
pub fn product_index(m: WalshIndex, n: WalshIndex) -> WalshIndex {
    m.product(n)
}

/// A sign assignment of `r_1 .. r_m`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    coords: u32,
    pattern: u64,
}

impl Atom {
    pub fn new(coords: u32, pattern: u64) -> Result<Self> {
        if coords > 64 {
            return Err(Error::OutOfRange {
                what: "atom coordinates",
                value: coords as u64,
                limit: 64,
            });
        }
        if coords < 64 && pattern >> coords != 0 {
            return Err(Error::OutOfRange {
                what: "atom pattern",
                value: pattern,
                limit: (1u64 << coords) - 1,
            });
        }
        Ok(Atom { coords, pattern })
    }

    /// Builds an atom from the values of `r_1, r_2, ...` (each `+1` or `-1`).
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut pattern = 0u64;
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => pattern |= 1 << i,
                other => {
                    return Err(Error::Precondition(format!(
                        "r_{} = {other} is not a sign",
                        i + 1
                    )))
                }
            }
        }
        Atom::new(signs.len() as u32, pattern)
    }

    pub fn coords(&self) -> u32 {
        self.coords
    }

    pub fn pattern(&self) -> u64 {
        self.pattern
    }

    /// Value of the Rademacher function `r_j` at this atom.
    pub fn rademacher(&self, j: u32) -> Result<i8> {
        if j == 0 || j > self.coords {
            return Err(Error::CoordinateOutOfRange {
                coordinate: j,
                available: self.coords,
            });
        }
        Ok(if (self.pattern >> (j - 1)) & 1 == 0 {
            1
        } else {
            -1
        })
    }

    /// All `2^m` atoms over `m` coordinates, in pattern order.
    pub fn all(coords: u32) -> impl Iterator<Item = Atom> {
        assert!(coords < 64, "cannot enumerate 2^{coords} atoms");
        (0..1u64 << coords).map(move |pattern| Atom { coords, pattern })
    }
}

/// Evaluates `w_n` at the atom `t`.
pub fn walsh_eval(n: WalshIndex, t: Atom) -> Result<i8> {
    if n.width() > t.coords {
        return Err(Error::CoordinateOutOfRange {
            coordinate: n.width(),
            available: t.coords,
        });
    }
    Ok(walsh_sign(n.0, t.pattern))
}

fn check_dense_depth(depth: u32) -> Result<()> {
    if depth > MAX_DENSE_DEPTH {
        return Err(Error::OutOfRange {
            what: "dense depth",
            value: depth as u64,
            limit: MAX_DENSE_DEPTH as u64,
        });
    }
    Ok(())
}

fn depth_of(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let depth = len.trailing_zeros();
    check_dense_depth(depth)?;
    Ok(depth)
}

/// Values of a function of `r_1 .. r_m` on all `2^m` atoms, indexed by pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomTable {
    depth: u32,
    values: Vec<f64>,
}

impl AtomTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let depth = depth_of(values.len())?;
        Ok(AtomTable { depth, values })
    }

    pub fn constant(depth: u32, value: f64) -> Result<Self> {
        check_dense_depth(depth)?;
        Ok(AtomTable {
            depth,
            values: vec![value; 1 << depth],
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, atom: Atom) -> Result<f64> {
        if atom.coords != self.depth {
            return Err(Error::DepthMismatch {
                left: atom.coords,
                right: self.depth,
            });
        }
        Ok(self.values[atom.pattern as usize])
    }

    /// Mean over atoms, i.e. the Haar integral.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// The same function viewed over more coordinates (constant in the new ones).
    pub fn lift(&self, depth: u32) -> Result<AtomTable> {
        check_dense_depth(depth)?;
        if depth < self.depth {
            return Err(Error::DepthMismatch {
                left: depth,
                right: self.depth,
            });
        }
        let mask = (1usize << self.depth) - 1;
        let values = (0..1usize << depth)
            .map(|t| self.values[t & mask])
            .collect();
        Ok(AtomTable { depth, values })
    }

    pub fn max_abs_diff(&self, other: &AtomTable) -> Result<f64> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch {
                left: self.depth,
                right: other.depth,
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }
}

/// In-place unnormalised Hadamard butterfly in natural (Paley) order.
pub fn butterfly<T>(data: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
}

/// A finite real Walsh series `c_0 .. c_{2^K - 1}` in Paley order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalshSeries {
    depth: u32,
    coeffs: Vec<f64>,
}

impl WalshSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let depth = depth_of(coeffs.len())?;
        Ok(WalshSeries { depth, coeffs })
    }

    pub fn zeros(depth: u32) -> Result<Self> {
        check_dense_depth(depth)?;
        Ok(WalshSeries {
            depth,
            coeffs: vec![0.0; 1 << depth],
        })
    }

    /// Builds a series of the given depth from `(index, coefficient)` pairs.
    pub fn from_terms(depth: u32, terms: &[(u64, f64)]) -> Result<Self> {
        let mut series = WalshSeries::zeros(depth)?;
        for &(n, c) in terms {
            if n >= series.coeffs.len() as u64 {
                return Err(Error::OutOfRange {
                    what: "Walsh index",
                    value: n,
                    limit: series.coeffs.len() as u64 - 1,
                });
            }
            series.coeffs[n as usize] += c;
        }
        Ok(series)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: WalshIndex) -> f64 {
        self.coeffs.get(n.0 as usize).copied().unwrap_or(0.0)
    }

    /// Non-zero `(index, coefficient)` pairs in increasing index order.
    pub fn terms(&self) -> Vec<(u64, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(n, c)| (n as u64, *c))
            .collect()
    }

    /// The same series viewed at a larger depth (zero padded).
    pub fn extend_to(&self, depth: u32) -> Result<WalshSeries> {
        if depth < self.depth {
            return Err(Error::DepthMismatch {
                left: depth,
                right: self.depth,
            });
        }
        let mut out = WalshSeries::zeros(depth)?;
        out.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        Ok(out)
    }

    /// The `2^k`-prefix `c_0 .. c_{2^k - 1}` as a series of depth `k`.
    pub fn prefix(&self, k: u32) -> Result<WalshSeries> {
        if k > self.depth {
            return Err(Error::OutOfRange {
                what: "prefix level",
                value: k as u64,
                limit: self.depth as u64,
            });
        }
        Ok(WalshSeries {
            depth: k,
            coeffs: self.coeffs[..1 << k].to_vec(),
        })
    }

    /// Pointwise values of the full sum on all atoms.
    pub fn values(&self) -> AtomTable {
        inverse_fwht(self)
    }

    /// Values of `sum_{n < p} c_n w_n` on all atoms of the series' depth.
    pub fn partial_sum(&self, p: u64) -> Result<AtomTable> {
        if p > self.coeffs.len() as u64 {
            return Err(Error::OutOfRange {
                what: "prefix order",
                value: p,
                limit: self.coeffs.len() as u64,
            });
        }
        let mut data = self.coeffs.clone();
        data[p as usize..].iter_mut().for_each(|c| *c = 0.0);
        butterfly(&mut data);
        Ok(AtomTable {
            depth: self.depth,
            values: data,
        })
    }

    /// Coefficients of `w_m * S`: `d_n = c_{n xor m}`.
    pub fn multiply_by_walsh(&self, m: WalshIndex) -> Result<WalshSeries> {
        if m.0 >= self.coeffs.len() as u64 {
            return Err(Error::OutOfRange {
                what: "Walsh multiplier",
                value: m.0,
                limit: self.coeffs.len() as u64 - 1,
            });
        }
        let coeffs = (0..self.coeffs.len() as u64)
            .map(|n| self.coeffs[(n ^ m.0) as usize])
            .collect();
        Ok(WalshSeries {
            depth: self.depth,
            coeffs,
        })
    }

    pub fn norms(&self) -> NormBundle {
        let scan = scan_prefixes(self.depth, &self.terms());
        let sup = self.values().max_abs();
        let (l2, a, pm) = coefficient_norms(self.coeffs.iter().copied());
        NormBundle {
            l2,
            u: scan.max_abs,
            a,
            pm,
            sup,
        }
    }
}

/// `(l2, A, PM)` norms of a coefficient sequence.
pub fn coefficient_norms(coeffs: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let (sq, a, pm) = coeffs.fold((0.0, 0.0, 0.0f64), |(sq, a, pm), c| {
        (sq + c * c, a + c.abs(), pm.max(c.abs()))
    });
    (sq.sqrt(), a, pm)
}

/// Forward transform: atom values to Walsh coefficients (`c_n = E[v w_n]`).
pub fn fwht(table: &AtomTable) -> WalshSeries {
    let mut data = table.values.clone();
    butterfly(&mut data);
    let scale = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    WalshSeries {
        depth: table.depth,
        coeffs: data,
    }
}

/// Synthesis: Walsh coefficients to atom values.
pub fn inverse_fwht(series: &WalshSeries) -> AtomTable {
    let mut data = series.coeffs.clone();
    butterfly(&mut data);
    AtomTable {
        depth: series.depth,
        values: data,
    }
}

/// Norms of a Walsh polynomial.
///
/// `u` is the supremum over all prefix orders of the sup-norm of the partial
/// sum; `a` and `pm` are the sum and the maximum of the absolute coefficients.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBundle {
    pub l2: f64,
    pub u: f64,
    pub a: f64,
    pub pm: f64,
    pub sup: f64,
}

impl NormBundle {
    pub fn max_abs_diff(&self, other: &NormBundle) -> f64 {
        [
            self.l2 - other.l2,
            self.u - other.u,
            self.a - other.a,
            self.pm - other.pm,
            self.sup - other.sup,
        ]
        .iter()
        .fold(0.0, |acc, d| acc.max(d.abs()))
    }
}

/// Result of streaming every prefix sum over every atom.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixScan {
    /// Minimum of `S_p(t)` over orders `p >= 1` and atoms `t`.
    pub min_value: f64,
    /// Smallest order attaining `min_value`.
    pub min_order: u64,
    pub min_atom: u64,
    /// Supremum of `|S_p(t)|` over all orders and atoms.
    pub max_abs: f64,
}

fn better(a: (f64, u64, u64), b: (f64, u64, u64)) -> (f64, u64, u64) {
    if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
        b
    } else {
        a
    }
}

/// Streams all prefix sums of a sparse series (terms sorted by index) on
/// every atom of `depth` coordinates.
///
/// Prefix sums only change at indices carrying a non-zero coefficient, so
/// scanning the sparse terms visits every distinct partial sum.
pub fn scan_prefixes(depth: u32, terms: &[(u64, f64)]) -> PrefixScan {
    debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
    // Orders 1 ..= n_0 sum to zero when the first term is not at index 0.
    let zero_prefix = terms.first().is_none_or(|t| t.0 > 0);
    let start = if zero_prefix {
        (0.0, 1, 0)
    } else {
        (f64::INFINITY, u64::MAX, u64::MAX)
    };
    let (min, max_abs) = (0..1u64 << depth)
        .into_par_iter()
        .map(|t| {
            let mut s = 0.0;
            let mut min = start;
            let mut max_abs = 0.0f64;
            for &(n, c) in terms {
                s += signed(c, n, t);
                max_abs = max_abs.max(s.abs());
                min = better(min, (s, n + 1, t));
            }
            (min, max_abs)
        })
        .reduce(
            || (start, 0.0),
            |(ma, xa), (mb, xb)| (better(ma, mb), xa.max(xb)),
        );
    PrefixScan {
        min_value: min.0,
        min_order: min.1,
        min_atom: min.2,
        max_abs,
    }
}

/// First strictly negative prefix sum, ordered by `(order, atom)`, with early
/// exit per atom.
pub fn first_negative_prefix(depth: u32, terms: &[(u64, f64)]) -> Option<(u64, u64, f64)> {
    (0..1u64 << depth)
        .into_par_iter()
        .filter_map(|t| {
            let mut s = 0.0;
            for &(n, c) in terms {
                s += signed(c, n, t);
                if s < 0.0 {
                    return Some((n + 1, t, s));
                }
            }
            None
        })
        .min_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)))
}

/// Outcome of checking the reindexing lemma for one `(m, k)` pair.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaWitness {
    pub multiplier: u64,
    pub level: u32,
    /// The `2^k`-prefix of `w_m S` equals `w_m (S_upper - S_lower)`.
    pub lower: u64,
    pub upper: u64,
    pub max_residual: f64,
}

impl LemmaWitness {
    pub fn holds(&self) -> bool {
        self.max_residual <= LINEAR_TOL
    }
}

/// The indices `{n xor m : n < 2^k}` form the consecutive segment
/// `[m & !(2^k - 1), m & !(2^k - 1) + 2^k)`.
pub fn lemma_segment(m: WalshIndex, k: u32) -> (u64, u64) {
    let width = 1u64 << k;
    let lower = m.0 & !(width - 1);
    (lower, lower + width)
}

/// Checks pointwise that the `2^k`-prefix of `w_m S` is `w_m` times a
/// difference of two partial sums of `S`.
pub fn verify_lemma(series: &WalshSeries, m: WalshIndex, k: u32) -> Result<LemmaWitness> {
    if k > series.depth {
        return Err(Error::OutOfRange {
            what: "lemma level",
            value: k as u64,
            limit: series.depth as u64,
        });
    }
    let shifted = series.multiply_by_walsh(m)?;
    let (lower, upper) = lemma_segment(m, k);
    let segment_ok = (0..1u64 << k).all(|n| (lower..upper).contains(&(n ^ m.0)));
    if !segment_ok {
        return Err(Error::Invariant(format!(
            "indices n xor {} for n < 2^{k} leave [{lower}, {upper})",
            m.0
        )));
    }
    let lhs = shifted.partial_sum(1 << k)?;
    let high = series.partial_sum(upper)?;
    let low = series.partial_sum(lower)?;
    let max_residual = (0..lhs.values.len())
        .map(|t| {
            let rhs = signed(high.values[t] - low.values[t], m.0, t as u64);
            (lhs.values[t] - rhs).abs()
        })
        .fold(0.0, f64::max);
    Ok(LemmaWitness {
        multiplier: m.0,
        level: k,
        lower,
        upper,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_values(series: &WalshSeries, p: u64) -> Vec<f64> {
        Atom::all(series.depth())
            .map(|t| {
                (0..p)
                    .map(|n| {
                        series.coeffs()[n as usize] * walsh_eval(WalshIndex(n), t).unwrap() as f64
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn eval_examples() {
        let any = Atom::from_signs(&[-1, 1, -1]).unwrap();
        assert_eq!(walsh_eval(WalshIndex(0), any).unwrap(), 1);
        let t = Atom::from_signs(&[-1, -1]).unwrap();
        assert_eq!(walsh_eval(WalshIndex(3), t).unwrap(), 1);
        let t = Atom::from_signs(&[1, 1, -1]).unwrap();
        assert_eq!(walsh_eval(WalshIndex(4), t).unwrap(), -1);
    }

    #[test]
    fn paley_order_matches_rademacher_products() {
        for t in Atom::all(3) {
            let r = |j| t.rademacher(j).unwrap();
            assert_eq!(walsh_eval(WalshIndex(1), t).unwrap(), r(1));
            assert_eq!(walsh_eval(WalshIndex(2), t).unwrap(), r(2));
            assert_eq!(walsh_eval(WalshIndex(3), t).unwrap(), r(1) * r(2));
            assert_eq!(walsh_eval(WalshIndex(4), t).unwrap(), r(3));
        }
    }

    #[test]
    fn eval_rejects_coordinate_out_of_range() {
        let t = Atom::from_signs(&[1, 1]).unwrap();
        assert!(matches!(
            walsh_eval(WalshIndex(4), t),
            Err(Error::CoordinateOutOfRange {
                coordinate: 3,
                available: 2
            })
        ));
    }

    #[test]
    fn index_bits_round_trip() {
        let n = WalshIndex(0b1011);
        assert_eq!(n.bits(), vec![1, 1, 0, 1]);
        assert_eq!(WalshIndex::from_bits(&n.bits()).unwrap(), n);
        assert_eq!(n.coordinates().collect::<Vec<_>>(), vec![1, 2, 4]);
        assert!(WalshIndex::from_bits(&[2]).is_err());
    }

    #[test]
    fn product_index_examples() {
        assert_eq!(product_index(WalshIndex(0), WalshIndex(9)), WalshIndex(9));
        assert_eq!(product_index(WalshIndex(3), WalshIndex(5)), WalshIndex(6));
        assert_eq!(product_index(WalshIndex(7), WalshIndex(7)), WalshIndex(0));
    }

    #[test]
    fn orthonormality_is_exact() {
        let depth = 10;
        let n = 1u64 << depth;
        // Row sums of the Hadamard matrix: sum_t w_k(t) = 2^depth [k = 0].
        for k in 0..n {
            let total: i64 = (0..n).map(|t| walsh_sign(k, t) as i64).sum();
            assert_eq!(total, if k == 0 { n as i64 } else { 0 });
        }
        // Products reduce to single characters, so this covers all pairs m, n.
        for m in (0..n).step_by(37) {
            for k in 0..n {
                let total: i64 = (0..n)
                    .map(|t| (walsh_sign(m, t) * walsh_sign(k, t)) as i64)
                    .sum();
                assert_eq!(total, if m == k { n as i64 } else { 0 });
            }
        }
    }

    #[test]
    fn fwht_examples() {
        let table = AtomTable::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(fwht(&table).coeffs(), &[1.0, 0.0]);
        let series = WalshSeries::new(vec![1.0, 0.5]).unwrap();
        assert_eq!(inverse_fwht(&series).values(), &[1.5, 0.5]);
        assert!(matches!(
            AtomTable::new(vec![1.0; 3]),
            Err(Error::NotPowerOfTwo(3))
        ));
        assert!(WalshSeries::new(vec![]).is_err());
    }

    #[test]
    fn partial_sum_examples() {
        let series = WalshSeries::new(vec![1.0, 0.5, 0.25, 0.0]).unwrap();
        assert_eq!(series.partial_sum(0).unwrap().values(), &[0.0; 4]);
        assert_eq!(series.partial_sum(4).unwrap(), series.values());
        // 1 + 0.5 r_1 on the four atoms (pattern bit 0 is r_1).
        assert_eq!(
            series.partial_sum(2).unwrap().values(),
            &[1.5, 0.5, 1.5, 0.5]
        );
        for p in 0..=4 {
            assert_eq!(
                series.partial_sum(p).unwrap().values(),
                brute_values(&series, p)
            );
        }
        assert!(series.partial_sum(5).is_err());
    }

    #[test]
    fn multiply_by_walsh_examples() {
        let series = WalshSeries::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(series.multiply_by_walsh(WalshIndex(0)).unwrap(), series);
        assert_eq!(
            series.multiply_by_walsh(WalshIndex(1)).unwrap().coeffs(),
            &[2.0, 1.0, 4.0, 3.0]
        );
        assert!(series.multiply_by_walsh(WalshIndex(4)).is_err());
        let m = WalshIndex(3);
        let lhs = series.multiply_by_walsh(m).unwrap().values();
        let rhs = series.values();
        for t in 0..4u64 {
            let expected = walsh_sign(3, t) as f64 * rhs.values()[t as usize];
            assert_eq!(lhs.values()[t as usize], expected);
        }
    }

    #[test]
    fn lemma_segment_examples() {
        for k in 0..=5 {
            assert_eq!(lemma_segment(WalshIndex(0), k), (0, 1 << k));
        }
        // Multiplying by a high character shifts the block in order.
        assert_eq!(lemma_segment(WalshIndex(8), 2), (8, 12));
        assert_eq!(lemma_segment(WalshIndex(2), 1), (2, 4));
        let series = WalshSeries::new(vec![0.3, -0.2, 0.7, 0.1]).unwrap();
        let witness = verify_lemma(&series, WalshIndex(2), 1).unwrap();
        assert_eq!((witness.lower, witness.upper), (2, 4));
        assert!(witness.holds());
    }

    #[test]
    fn scan_reports_zero_prefix_and_minimum() {
        let series = WalshSeries::new(vec![1.0, -1.5, 0.0, 0.0]).unwrap();
        let scan = scan_prefixes(2, &series.terms());
        assert_eq!(scan.min_value, -0.5);
        assert_eq!((scan.min_order, scan.min_atom), (2, 0));
        assert_eq!(scan.max_abs, 2.5);
        let empty = scan_prefixes(2, &[(3, 1.0)]);
        assert_eq!((empty.min_value, empty.min_order), (-1.0, 4));
        assert_eq!(
            first_negative_prefix(2, &series.terms()),
            Some((2, 0, -0.5))
        );
        assert_eq!(first_negative_prefix(2, &[(0, 1.0)]), None);
    }

    #[test]
    fn lift_repeats_values() {
        let table = AtomTable::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(table.lift(2).unwrap().values(), &[1.0, 2.0, 1.0, 2.0]);
    }
}
