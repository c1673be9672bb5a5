//! Simplices, filtered simplicial complexes and filtration snapshots.
//!
//! Filtration values are stored squared (length²). A snapshot at scale `α`
//! contains every simplex whose squared value is at most `α²`; since simplices
//! of each dimension are kept sorted by value, every snapshot is a prefix of
//! the per-dimension simplex lists.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::MAX_DIM;

/// Relative slack used when testing `value ≤ α²`, so that `α = sqrt(v)`
/// always admits the simplex with value `v` despite rounding.
pub const MEMBERSHIP_REL_TOL: f64 = 1e-12;

/// Filtration values closer than this (relatively) are merged into one value.
/// Must stay well above [`MEMBERSHIP_REL_TOL`].
pub const MERGE_REL_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("negative filtration value {value} on simplex {simplex}")]
    NegativeFiltration { simplex: Simplex, value: f64 },
    #[error("non-finite filtration value on simplex {simplex}")]
    NonFiniteFiltration { simplex: Simplex },
    #[error("simplex dimension {0} exceeds the supported maximum of 3")]
    DimensionTooHigh(usize),
    #[error("simplex has no vertices")]
    EmptySimplex,
    #[error("vertex {0} repeated in simplex")]
    RepeatedVertex(u32),
}

/// An oriented simplex given by its strictly increasing vertex indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Simplex {
    verts: [u32; MAX_DIM + 1],
    len: u8,
}

impl Simplex {
    /// Builds a simplex from vertices in any order; they are sorted into the
    /// canonical orientation.
    pub fn new(vertices: &[u32]) -> Result<Self, ComplexError> {
        if vertices.is_empty() {
            return Err(ComplexError::EmptySimplex);
        }
        if vertices.len() > MAX_DIM + 1 {
            return Err(ComplexError::DimensionTooHigh(vertices.len() - 1));
        }
        let mut verts = [0u32; MAX_DIM + 1];
        verts[..vertices.len()].copy_from_slice(vertices);
        verts[..vertices.len()].sort_unstable();
        if let Some(w) = verts[..vertices.len()].windows(2).find(|w| w[0] == w[1]) {
            return Err(ComplexError::RepeatedVertex(w[0]));
        }
        Ok(Simplex { verts, len: vertices.len() as u8 })
    }

    /// Caller guarantees `vertices` is strictly increasing and has 1..=4 entries.
    pub(crate) fn from_sorted(vertices: &[u32]) -> Self {
        debug_assert!(!vertices.is_empty() && vertices.len() <= MAX_DIM + 1);
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        let mut verts = [0u32; MAX_DIM + 1];
        verts[..vertices.len()].copy_from_slice(vertices);
        Simplex { verts, len: vertices.len() as u8 }
    }

    pub fn vertex(v: u32) -> Self {
        Simplex::from_sorted(&[v])
    }

    pub fn dim(&self) -> usize {
        self.len as usize - 1
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..self.len as usize]
    }

    /// Codimension-one faces as `(face, omitted vertex, sign)`, where the sign
    /// is `(-1)^i` for the face omitting the `i`-th vertex.
    pub fn facets(&self) -> impl Iterator<Item = (Simplex, u32, i8)> + '_ {
        let n = if self.len > 1 { self.len as usize } else { 0 };
        (0..n).map(move |i| {
            let mut verts = [0u32; MAX_DIM + 1];
            let mut k = 0;
            for (j, &v) in self.vertices().iter().enumerate() {
                if j != i {
                    verts[k] = v;
                    k += 1;
                }
            }
            let face = Simplex { verts, len: self.len - 1 };
            let sign = if i % 2 == 0 { 1 } else { -1 };
            (face, self.verts[i], sign)
        })
    }

    /// Every non-empty face, including the simplex itself.
    pub fn all_faces(&self) -> Vec<Simplex> {
        let n = self.len as usize;
        (1u32..(1 << n))
            .map(|mask| {
                let vs: Vec<u32> =
                    (0..n).filter(|i| mask & (1 << i) != 0).map(|i| self.verts[i]).collect();
                Simplex::from_sorted(&vs)
            })
            .collect()
    }
}

impl Ord for Simplex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| self.vertices().cmp(other.vertices()))
    }
}

impl PartialOrd for Simplex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.vertices())
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.vertices())
    }
}

/// `value ≤ alpha_sq` up to [`MEMBERSHIP_REL_TOL`].
#[inline]
pub fn within(value_sq: f64, alpha_sq: f64) -> bool {
    value_sq <= alpha_sq + alpha_sq.abs() * MEMBERSHIP_REL_TOL
}

/// A simplicial complex with a squared filtration value on every simplex.
///
/// Immutable once built; simplices of each dimension are stored in filtration
/// order (ascending value, ties broken by vertex tuple).
#[derive(Clone, Debug)]
pub struct FilteredComplex {
    simplices: Vec<Vec<Simplex>>,
    values: Vec<Vec<f64>>,
    index: Vec<HashMap<Simplex, usize>>,
}

impl FilteredComplex {
    /// Highest dimension with at least one simplex (`None` for the empty complex).
    pub fn max_dim(&self) -> Option<usize> {
        self.simplices.iter().rposition(|s| !s.is_empty())
    }

    pub fn count(&self, dim: usize) -> usize {
        self.simplices.get(dim).map_or(0, Vec::len)
    }

    pub fn simplices(&self, dim: usize) -> &[Simplex] {
        self.simplices.get(dim).map_or(&[], Vec::as_slice)
    }

    /// Squared filtration values aligned with [`Self::simplices`].
    pub fn values_sq(&self, dim: usize) -> &[f64] {
        self.values.get(dim).map_or(&[], Vec::as_slice)
    }

    /// Position of `simplex` in the filtration order of its dimension.
    pub fn position(&self, simplex: &Simplex) -> Option<usize> {
        self.index.get(simplex.dim())?.get(simplex).copied()
    }

    pub fn value_sq(&self, simplex: &Simplex) -> Option<f64> {
        self.position(simplex).map(|i| self.values[simplex.dim()][i])
    }

    /// Number of simplices per dimension (dimensions `0..=3`).
    pub fn counts(&self) -> [usize; MAX_DIM + 1] {
        std::array::from_fn(|d| self.count(d))
    }

    pub fn snapshot(&self, alpha: f64) -> Snapshot {
        self.snapshot_sq(if alpha.is_infinite() { f64::INFINITY } else { alpha * alpha })
    }

    pub fn snapshot_sq(&self, alpha_sq: f64) -> Snapshot {
        let counts = std::array::from_fn(|d| {
            self.values_sq(d).partition_point(|&v| within(v, alpha_sq))
        });
        Snapshot { alpha_sq, counts }
    }

    /// Sorted distinct squared filtration values over all dimensions.
    pub fn distinct_values_sq(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.values.iter().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}

/// Simplex counts of the subcomplex `K_α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Snapshot {
    pub alpha_sq: f64,
    pub counts: [usize; MAX_DIM + 1],
}

impl Snapshot {
    pub fn alpha(&self) -> f64 {
        self.alpha_sq.sqrt()
    }

    /// `N_q^α`; zero for dimensions outside `0..=3`.
    pub fn count(&self, q: usize) -> usize {
        self.counts.get(q).copied().unwrap_or(0)
    }
}

/// Alternating sum of simplex counts.
pub fn euler_characteristic(snapshot: &Snapshot) -> i64 {
    snapshot
        .counts
        .iter()
        .enumerate()
        .map(|(q, &n)| if q % 2 == 0 { n as i64 } else { -(n as i64) })
        .sum()
}

/// Builds a filtered complex from `(simplex, squared value)` pairs.
///
/// Missing faces are inserted, and each face is lowered to the minimum of its
/// own value and those of its cofaces so that every snapshot is a subcomplex.
/// Values within [`MERGE_REL_TOL`] of each other are merged. Duplicate entries
/// keep their smallest value.
pub fn build_complex(entries: &[(Simplex, f64)]) -> Result<FilteredComplex, ComplexError> {
    let mut layers: Vec<HashMap<Simplex, f64>> = vec![HashMap::new(); MAX_DIM + 1];
    for &(s, v) in entries {
        if v.is_nan() || v.is_infinite() {
            return Err(ComplexError::NonFiniteFiltration { simplex: s });
        }
        if v < 0.0 {
            return Err(ComplexError::NegativeFiltration { simplex: s, value: v });
        }
        let slot = layers[s.dim()].entry(s).or_insert(v);
        *slot = slot.min(v);
    }
    // Top-down closure: a face enters no later than any of its cofaces.
    for d in (1..=MAX_DIM).rev() {
        let (lower, upper) = layers.split_at_mut(d);
        for (s, &v) in upper[0].iter() {
            for (face, _, _) in s.facets() {
                let slot = lower[d - 1].entry(face).or_insert(v);
                *slot = slot.min(v);
            }
        }
    }
    Ok(from_layers(layers))
}

/// Assembles the sorted complex; `layers` must already be closed and monotone
/// up to merge tolerance.
pub(crate) fn from_layers(mut layers: Vec<HashMap<Simplex, f64>>) -> FilteredComplex {
    merge_close_values(&mut layers);
    let mut simplices = Vec::with_capacity(MAX_DIM + 1);
    let mut values = Vec::with_capacity(MAX_DIM + 1);
    let mut index = Vec::with_capacity(MAX_DIM + 1);
    for layer in layers {
        let mut items: Vec<(Simplex, f64)> = layer.into_iter().collect();
        items.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        index.push(items.iter().enumerate().map(|(i, (s, _))| (*s, i)).collect());
        values.push(items.iter().map(|x| x.1).collect());
        simplices.push(items.into_iter().map(|x| x.0).collect());
    }
    FilteredComplex { simplices, values, index }
}

/// Snaps chains of values whose successive relative gaps are below
/// [`MERGE_REL_TOL`] onto the smallest value of the chain.
fn merge_close_values(layers: &mut [HashMap<Simplex, f64>]) {
    let mut all: Vec<f64> = layers.iter().flat_map(|l| l.values().copied()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let mut canon: HashMap<u64, f64> = HashMap::new();
    let mut anchor = f64::NAN;
    let mut prev = f64::NAN;
    for &v in &all {
        if prev.is_nan() || v - prev > prev.abs() * MERGE_REL_TOL {
            anchor = v;
        }
        canon.insert(v.to_bits(), anchor);
        prev = v;
    }
    for layer in layers.iter_mut() {
        for v in layer.values_mut() {
            *v = canon[&v.to_bits()];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[u32]) -> Simplex {
        Simplex::new(v).unwrap()
    }

    #[test]
    fn simplex_sorts_and_rejects_bad_input() {
        assert_eq!(s(&[2, 0, 1]).vertices(), &[0, 1, 2]);
        assert_eq!(Simplex::new(&[1, 1]), Err(ComplexError::RepeatedVertex(1)));
        assert_eq!(Simplex::new(&[0, 1, 2, 3, 4]), Err(ComplexError::DimensionTooHigh(4)));
        assert_eq!(Simplex::new(&[]), Err(ComplexError::EmptySimplex));
    }

    #[test]
    fn facets_carry_alternating_signs() {
        let f: Vec<_> = s(&[3, 5, 7]).facets().collect();
        assert_eq!(f[0], (s(&[5, 7]), 3, 1));
        assert_eq!(f[1], (s(&[3, 7]), 5, -1));
        assert_eq!(f[2], (s(&[3, 5]), 7, 1));
        assert_eq!(s(&[4]).facets().count(), 0);
        assert_eq!(s(&[0, 1, 2, 3]).all_faces().len(), 15);
    }

    #[test]
    fn single_vertex() {
        let c = build_complex(&[(s(&[0]), 0.0)]).unwrap();
        assert_eq!(c.counts(), [1, 0, 0, 0]);
        assert_eq!(c.max_dim(), Some(0));
    }

    #[test]
    fn closure_inserts_faces_below_coface_value() {
        let c = build_complex(&[(s(&[0, 1, 2]), 4.0)]).unwrap();
        assert_eq!(c.counts(), [3, 3, 1, 0]);
        assert!(c.values_sq(1).iter().all(|&v| v <= 4.0));
        assert!(c.values_sq(0).iter().all(|&v| v <= 4.0));
    }

    #[test]
    fn faces_are_lowered_to_coface_values() {
        let c = build_complex(&[(s(&[0, 1]), 9.0), (s(&[0, 1, 2]), 4.0), (s(&[0]), 0.0)]).unwrap();
        assert_eq!(c.value_sq(&s(&[0, 1])), Some(4.0));
        assert_eq!(c.value_sq(&s(&[0])), Some(0.0));
    }

    #[test]
    fn rejects_negative_and_non_finite_values() {
        assert!(matches!(
            build_complex(&[(s(&[0]), -1.0)]),
            Err(ComplexError::NegativeFiltration { .. })
        ));
        assert!(matches!(
            build_complex(&[(s(&[0]), f64::NAN)]),
            Err(ComplexError::NonFiniteFiltration { .. })
        ));
    }

    #[test]
    fn order_breaks_ties_lexicographically() {
        let c = build_complex(&[
            (s(&[1, 2]), 1.0),
            (s(&[0, 2]), 1.0),
            (s(&[0, 1]), 0.5),
            (s(&[0]), 0.0),
            (s(&[1]), 0.0),
            (s(&[2]), 0.0),
        ])
        .unwrap();
        assert_eq!(c.simplices(1), &[s(&[0, 1]), s(&[0, 2]), s(&[1, 2])]);
    }

    #[test]
    fn nearly_equal_values_merge() {
        let c = build_complex(&[(s(&[0, 1]), 1.0), (s(&[1, 2]), 1.0 + 1e-14)]).unwrap();
        let v = c.values_sq(1);
        assert_eq!(v[0], v[1]);
        assert_eq!(c.distinct_values_sq().len(), 1);
    }

    #[test]
    fn snapshot_counts_and_euler() {
        let c = build_complex(&[(s(&[0, 1, 2]), 4.0), (s(&[0, 1]), 1.0), (s(&[2]), 0.0)]).unwrap();
        let snap = c.snapshot(1.0);
        assert_eq!(snap.counts, [3, 1, 0, 0]);
        assert_eq!(euler_characteristic(&snap), 2);
        assert_eq!(c.snapshot(f64::INFINITY).counts, [3, 3, 1, 0]);
        assert_eq!(c.snapshot(0.0).counts, [1, 0, 0, 0]);
    }

    #[test]
    fn euler_characteristic_examples() {
        let snap = |counts| Snapshot { alpha_sq: 0.0, counts };
        assert_eq!(euler_characteristic(&snap([6, 0, 0, 0])), 6);
        assert_eq!(euler_characteristic(&snap([6, 7, 1, 0])), 0);
        assert_eq!(euler_characteristic(&snap([4, 6, 4, 1])), 1);
    }

    #[test]
    fn sqrt_of_critical_value_admits_the_simplex() {
        let v = 0.1f64 * 0.3;
        let c = build_complex(&[(s(&[0, 1]), v)]).unwrap();
        assert_eq!(c.snapshot(v.sqrt()).count(1), 1);
    }
}
