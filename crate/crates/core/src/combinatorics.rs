//! Exponential-cost combinatorial kernels: hafnians by perfect-matching
//! enumeration, permanents by Ryser's formula, set-partition streams, and the
//! repeated-index submatrix selection used by the probability formulas.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UbsError};
use crate::linalg::{c, symmetry_residual, CMat, ONE, ZERO};
use crate::taylor::TaylorScalar;

/// Occupation numbers per mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PhotonPattern(pub Vec<usize>);

impl PhotonPattern {
    pub fn vacuum(modes: usize) -> Self {
        Self(vec![0; modes])
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// `∏ n_i!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&n| (2..=n).map(|k| k as f64).product::<f64>())
            .product()
    }

    pub fn is_single_photon(&self) -> bool {
        self.0.iter().all(|&n| n <= 1)
    }

    /// Modes carrying at least one photon.
    pub fn occupied_modes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let occ: std::result::Result<Vec<usize>, _> =
            text.split(',').map(|t| t.trim().parse::<usize>()).collect();
        occ.map(Self)
            .map_err(|e| UbsError::UnsupportedPattern(format!("cannot parse `{text}`: {e}")))
    }
}

impl std::fmt::Display for PhotonPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Mode indices with multiplicities; the repetition rule for multi-photon
/// patterns (mode `j` appears `occupations[j]` times, ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionIndex(pub Vec<usize>);

impl SelectionIndex {
    pub fn from_pattern(pattern: &PhotonPattern) -> Self {
        let mut indices = Vec::with_capacity(pattern.total());
        for (mode, &n) in pattern.0.iter().enumerate() {
            indices.extend(std::iter::repeat(mode).take(n));
        }
        Self(indices)
    }

    pub fn multiplicity(&self, mode: usize) -> usize {
        self.0.iter().filter(|&&m| m == mode).count()
    }
}

/// Minimal ring interface so the matching enumeration runs over both plain
/// complex numbers and Taylor series.
pub trait MatchingRing: Clone + Send + Sync {
    fn ring_zero(proto: &Self) -> Self;
    fn ring_add(&self, rhs: &Self) -> Self;
    fn ring_mul(&self, rhs: &Self) -> Self;
}

impl MatchingRing for C64 {
    fn ring_zero(_: &Self) -> Self {
        ZERO
    }
    fn ring_add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn ring_mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
}

impl MatchingRing for TaylorScalar {
    fn ring_zero(proto: &Self) -> Self {
        TaylorScalar::zero(proto.shape())
    }
    fn ring_add(&self, rhs: &Self) -> Self {
        self.add(rhs)
    }
    fn ring_mul(&self, rhs: &Self) -> Self {
        self.mul(rhs)
    }
}

fn hafnian_rec<T: MatchingRing>(
    active: &[usize],
    entry: &(impl Fn(usize, usize) -> T + Sync),
    one: &T,
) -> T {
    if active.is_empty() {
        return one.clone();
    }
    let first = active[0];
    let mut total = T::ring_zero(one);
    for pick in 1..active.len() {
        let partner = active[pick];
        let rest: Vec<usize> = active[1..]
            .iter()
            .copied()
            .filter(|&k| k != partner)
            .collect();
        let sub = hafnian_rec(&rest, entry, one);
        total = total.ring_add(&entry(first, partner).ring_mul(&sub));
    }
    total
}

/// Hafnian over an arbitrary ring by direct enumeration of the `(2k-1)!!`
/// perfect matchings. `one` doubles as the empty-product value and the zero
/// prototype. Odd dimension yields zero (vanishing odd moments).
pub fn hafnian_generic<T: MatchingRing>(
    dim: usize,
    entry: impl Fn(usize, usize) -> T + Sync,
    one: &T,
) -> T {
    if dim % 2 == 1 {
        return T::ring_zero(one);
    }
    let active: Vec<usize> = (0..dim).collect();
    if dim >= 12 {
        // split on the partner of index 0; deterministic ordered reduction
        let branches: Vec<T> = (1..dim)
            .into_par_iter()
            .map(|pick| {
                let rest: Vec<usize> =
                    (1..dim).filter(|&k| k != pick).collect();
                entry(0, pick).ring_mul(&hafnian_rec(&rest, &entry, one))
            })
            .collect();
        let mut total = T::ring_zero(one);
        for b in &branches {
            total = total.ring_add(b);
        }
        total
    } else {
        hafnian_rec(&active, &entry, one)
    }
}

/// Hafnian of a symmetric complex matrix.
///
/// The input must be symmetric within `1e-10` (relative); odd dimension
/// returns 0 and the empty matrix returns 1.
pub fn hafnian(m: &CMat) -> Result<C64> {
    if m.nrows() != m.ncols() {
        return Err(UbsError::Shape(format!(
            "hafnian needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let resid = symmetry_residual(m);
    if resid > 1e-10 * (1.0 + m.norm()) {
        return Err(UbsError::Domain(format!(
            "hafnian input not symmetric (residual {resid:.3e})"
        )));
    }
    Ok(hafnian_generic(m.nrows(), |i, j| m[(i, j)], &ONE))
}

/// Number of perfect matchings the enumerator visits for dimension `2k`,
/// i.e. `(2k-1)!!`.
pub fn matching_count(dim: usize) -> u128 {
    if dim % 2 == 1 {
        return 0;
    }
    let mut count: u128 = 1;
    let mut k = dim as u128;
    while k > 1 {
        count *= k - 1;
        k -= 2;
    }
    count
}

/// Permanent by Ryser's inclusion-exclusion formula with Gray-code updates.
pub fn permanent(m: &CMat) -> C64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "permanent needs a square matrix");
    if n == 0 {
        return ONE;
    }
    assert!(n <= 24, "permanent limited to n <= 24");
    let mut row_sums = vec![ZERO; n];
    let mut total = ZERO;
    let mut prev_gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let gray = k ^ (k >> 1);
        let changed = gray ^ prev_gray;
        let col = changed.trailing_zeros() as usize;
        if gray & changed != 0 {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs += m[(i, col)];
            }
        } else {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs -= m[(i, col)];
            }
        }
        prev_gray = gray;
        let prod: C64 = row_sums.iter().product();
        if gray.count_ones() % 2 == n as u32 % 2 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Streams the set partitions of `{0..n-1}` as restricted-growth strings in
/// lexicographic order; exactly `Bell(n)` items.
pub struct Partitions {
    n: usize,
    rgs: Vec<usize>,
    maxima: Vec<usize>,
    done: bool,
}

impl Partitions {
    pub fn new(n: usize) -> Result<Self> {
        if n > 12 {
            return Err(UbsError::ResourceLimit(format!(
                "partition enumeration capped at n = 12, got {n}"
            )));
        }
        Ok(Self {
            n,
            rgs: vec![0; n],
            maxima: vec![0; n],
            done: false,
        })
    }
}

impl Iterator for Partitions {
    type Item = Vec<Vec<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let block_count = if self.n == 0 {
            0
        } else {
            self.rgs.iter().copied().max().unwrap() + 1
        };
        let mut blocks = vec![Vec::new(); block_count];
        for (elem, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(elem);
        }

        // advance the restricted-growth string
        if self.n <= 1 {
            self.done = true;
            return Some(blocks);
        }
        let mut i = self.n - 1;
        loop {
            if self.rgs[i] <= self.maxima[i] {
                self.rgs[i] += 1;
                break;
            }
            self.rgs[i] = 0;
            if i == 1 {
                self.done = true;
                break;
            }
            i -= 1;
        }
        if !self.done {
            for j in i + 1..self.n {
                self.maxima[j] = self.maxima[j - 1].max(self.rgs[j - 1]);
                self.rgs[j] = 0;
            }
        }
        Some(blocks)
    }
}

/// Convenience wrapper: all partitions of `{0..n-1}`.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Vec<Vec<usize>>>> {
    Ok(Partitions::new(n)?.collect())
}

/// Phase-space row/column indices selected by a detection pattern: mode `j`
/// contributes indices `j` and `j + M`, each with multiplicity
/// `occupations[j]`. The annihilator half comes first, ascending by mode.
pub fn phase_space_indices(pattern: &PhotonPattern, modes: usize) -> Vec<usize> {
    let sel = SelectionIndex::from_pattern(pattern);
    let mut indices = Vec::with_capacity(2 * sel.0.len());
    indices.extend(sel.0.iter().copied());
    indices.extend(sel.0.iter().map(|&m| m + modes));
    indices
}

/// Extracts the `2 total × 2 total` submatrix of a `2M × 2M` phase-space
/// matrix addressed by a detection pattern (with repetitions).
pub fn select_submatrix(g: &CMat, pattern: &PhotonPattern) -> Result<CMat> {
    let m = pattern.modes();
    if g.nrows() != 2 * m || g.ncols() != 2 * m {
        return Err(UbsError::Shape(format!(
            "expected a {}x{} matrix for {m} modes, got {}x{}",
            2 * m,
            2 * m,
            g.nrows(),
            g.ncols()
        )));
    }
    let idx = phase_space_indices(pattern, m);
    let t = idx.len();
    let mut out = CMat::zeros(t, t);
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            out[(a, b)] = g[(ia, ib)];
        }
    }
    Ok(out)
}

/// Entrywise squared modulus.
pub fn hadamard_abs_square(w: &CMat) -> DMatrix<f64> {
    DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)].norm_sqr())
}
