//! Persistent Laplacians, their spectra, and sweeps over filtration scales.
//!
//! `L_q^{α,p} = B_{q+1}^{α,p} (B_{q+1}^{α,p})ᵀ + (B_q^α)ᵀ B_q^α`. Its nullity is
//! the persistent Betti number `β_q^{α,p}`; its smallest non-zero eigenvalue
//! tracks geometric change that the Betti numbers miss.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::boundary::{persistent_boundary, BoundaryError, BoundaryOperators, PersistentBoundary, ProjectionMethod, SparseBoundaryMatrix};
use crate::complex::{FilteredComplex, Snapshot};
use crate::geometry::PointSet;
use crate::linalg::{lowest_eigenvalues, symmetric_eigenvalues, CsrMatrix, LinalgError};

/// Eigenvalues below `max(ZERO_ABS_TOL, ZERO_REL_TOL · λ_max)` count as zero.
pub const ZERO_ABS_TOL: f64 = 1e-8;
pub const ZERO_REL_TOL: f64 = 1e-10;
/// Required ratio between the smallest non-zero and the largest zero eigenvalue.
pub const GAP_RATIO: f64 = 1e3;
/// Relative bound on negative eigenvalues before a matrix is reported as not PSD.
pub const PSD_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("down-term has {down} columns but the up-term has {up} rows")]
    DimensionMismatch { down: usize, up: usize },
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error("eigensolver failed: {0}")]
    EigensolveFailure(#[from] LinalgError),
}

/// `L_q^{α,p}` in the simplicial basis of `C_q^α`.
#[derive(Clone, Debug)]
pub struct PersistentLaplacian {
    pub q: usize,
    pub alpha: f64,
    pub p: f64,
    /// `N_{q+1}^{α+p}`: columns of the up-term.
    pub n_up: usize,
    pub matrix: CsrMatrix,
}

/// Diagnostic conditions attached to a [`SpectrumRecord`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecordFlag {
    /// The zero and non-zero eigenvalues are separated by less than [`GAP_RATIO`].
    GapAmbiguous,
    /// An eigenvalue is more negative than [`PSD_REL_TOL`] allows.
    NotPsd,
    /// Only the bottom of the spectrum was computed (iterative solver).
    PartialSpectrum,
    /// The record could not be computed; see `failure`.
    Failed,
}

impl RecordFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordFlag::GapAmbiguous => "gap_ambiguous",
            RecordFlag::NotPsd => "not_psd",
            RecordFlag::PartialSpectrum => "partial_spectrum",
            RecordFlag::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [RecordFlag::GapAmbiguous, RecordFlag::NotPsd, RecordFlag::PartialSpectrum, RecordFlag::Failed]
            .into_iter()
            .find(|f| f.as_str() == s)
    }
}

impl fmt::Display for RecordFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Spectrum of one persistent Laplacian.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRecord {
    pub q: usize,
    pub alpha: f64,
    pub p: f64,
    /// Ascending; all `N_q^α` values unless flagged as a partial spectrum.
    pub eigenvalues: Vec<f64>,
    pub betti: usize,
    pub lambda_min_nonzero: Option<f64>,
    pub n_simplices: usize,
    pub flags: Vec<RecordFlag>,
    pub failure: Option<String>,
}

impl SpectrumRecord {
    pub fn has_flag(&self, flag: RecordFlag) -> bool {
        self.flags.contains(&flag)
    }

    fn failed(q: usize, alpha: f64, p: f64, n_simplices: usize, err: &SpectraError) -> Self {
        SpectrumRecord {
            q,
            alpha,
            p,
            eigenvalues: Vec::new(),
            betti: 0,
            lambda_min_nonzero: None,
            n_simplices,
            flags: vec![RecordFlag::Failed],
            failure: Some(err.to_string()),
        }
    }
}

/// Solver settings for [`spectrum`] and [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPolicy {
    /// Connected blocks up to this size are solved densely (full spectrum);
    /// larger ones iteratively (bottom of the spectrum only).
    pub dense_limit: usize,
    pub projection: ProjectionMethod,
    /// Seed for the iterative solver's start vectors.
    pub seed: u64,
}

impl Default for SpectralPolicy {
    fn default() -> Self {
        SpectralPolicy { dense_limit: 2000, projection: ProjectionMethod::Auto, seed: 0 }
    }
}

/// Assembles `L_q^{α,p}` from the restricted `B_q^α` and `B_{q+1}^{α,p}`.
pub fn assemble_laplacian(bq: &SparseBoundaryMatrix, up: &PersistentBoundary) -> Result<PersistentLaplacian, SpectraError> {
    let n = bq.cols();
    if up.rows() != n {
        return Err(SpectraError::DimensionMismatch { down: n, up: up.rows() });
    }
    let mut triplets: Vec<(u32, u32, f64)> = Vec::new();
    let mut by_row: Vec<Vec<(usize, i8)>> = vec![Vec::new(); bq.rows()];
    for c in 0..n {
        for (r, s) in bq.column(c) {
            by_row[r].push((c, s));
        }
    }
    for row in &by_row {
        push_outer(&mut triplets, row.iter().copied());
    }
    for col in up.free_columns() {
        let entries: Vec<(usize, i8)> = col.collect();
        push_outer(&mut triplets, entries.into_iter());
    }
    for block in up.blocks() {
        let gram = &block.values * block.values.transpose();
        for (i, &ri) in block.rows.iter().enumerate() {
            for (j, &rj) in block.rows.iter().enumerate() {
                triplets.push((ri as u32, rj as u32, gram[(i, j)]));
            }
        }
    }
    let p = (up.snap_tp.alpha() - up.snap_t.alpha()).max(0.0);
    Ok(PersistentLaplacian {
        q: bq.q(),
        alpha: up.snap_t.alpha(),
        p,
        n_up: up.cols(),
        matrix: CsrMatrix::from_triplets(n, triplets),
    })
}

fn push_outer(triplets: &mut Vec<(u32, u32, f64)>, entries: impl Iterator<Item = (usize, i8)> + Clone) {
    for (a, sa) in entries.clone() {
        for (b, sb) in entries.clone() {
            triplets.push((a as u32, b as u32, (sa as f64) * (sb as f64)));
        }
    }
}

/// Builds `L_q^{α,p}` for the given unsquared scale and persistence.
pub fn persistent_laplacian(
    complex: &FilteredComplex,
    ops: &BoundaryOperators,
    q: usize,
    alpha: f64,
    p: f64,
    method: ProjectionMethod,
) -> Result<PersistentLaplacian, SpectraError> {
    let snap_t = complex.snapshot(alpha);
    let snap_tp = complex.snapshot(alpha + p);
    let mut l = laplacian_for(ops, q, &snap_t, &snap_tp, method)?;
    l.alpha = alpha;
    l.p = p;
    Ok(l)
}

fn laplacian_for(
    ops: &BoundaryOperators,
    q: usize,
    snap_t: &Snapshot,
    snap_tp: &Snapshot,
    method: ProjectionMethod,
) -> Result<PersistentLaplacian, SpectraError> {
    let bq = ops.get(q).ok_or(BoundaryError::DimensionOutOfRange(q))?.restrict(snap_t);
    let up = persistent_boundary(ops, q + 1, snap_t, snap_tp, method)?;
    assemble_laplacian(&bq, &up)
}

/// Eigenvalues, Betti number and smallest non-zero eigenvalue of `l`.
///
/// The matrix is split into the connected blocks of its sparsity graph;
/// blocks up to `policy.dense_limit` are solved densely, larger ones by
/// shift-invert block Krylov iteration down to their first non-zero
/// eigenvalue.
pub fn spectrum(l: &PersistentLaplacian, policy: &SpectralPolicy) -> Result<SpectrumRecord, SpectraError> {
    let n = l.matrix.n();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut large = Vec::new();
    for comp in l.matrix.components() {
        if comp.len() <= policy.dense_limit {
            let sub = if comp.len() == n { l.matrix.to_dense() } else { l.matrix.submatrix(&comp).to_dense() };
            eigenvalues.extend(symmetric_eigenvalues(sub));
        } else {
            large.push(l.matrix.submatrix(&comp));
        }
    }
    let mut lambda_max = eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    for m in &large {
        lambda_max = lambda_max.max(m.gershgorin_max());
    }
    let tau = ZERO_ABS_TOL.max(ZERO_REL_TOL * lambda_max);
    let mut flags = Vec::new();
    for (k, m) in large.iter().enumerate() {
        eigenvalues.extend(lowest_eigenvalues(m, tau, policy.seed.wrapping_add(k as u64))?);
        flags.push(RecordFlag::PartialSpectrum);
    }
    flags.dedup();
    eigenvalues.sort_by(f64::total_cmp);

    let betti = eigenvalues.iter().filter(|&&x| x < tau).count();
    let lambda_min_nonzero = eigenvalues.iter().copied().find(|&x| x >= tau);
    if let Some(lmin) = lambda_min_nonzero {
        let largest_zero = eigenvalues[..betti].iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let noise = largest_zero.max(n as f64 * f64::EPSILON * lambda_max);
        if lmin < GAP_RATIO * noise {
            flags.push(RecordFlag::GapAmbiguous);
        }
    }
    if eigenvalues.first().is_some_and(|&x| x < -PSD_REL_TOL * lambda_max.max(1.0)) {
        flags.push(RecordFlag::NotPsd);
    }
    flags.sort();
    Ok(SpectrumRecord {
        q: l.q,
        alpha: l.alpha,
        p: l.p,
        eigenvalues,
        betti,
        lambda_min_nonzero,
        n_simplices: n,
        flags,
        failure: None,
    })
}

/// One record per `(q, α)`, ordered by `q` then `α`. Identical snapshots are
/// solved once; records run in parallel on the current rayon pool. Failures
/// are recorded per record rather than aborting the sweep.
pub fn sweep(
    complex: &FilteredComplex,
    alphas: &[f64],
    q_list: &[usize],
    p: f64,
    policy: &SpectralPolicy,
) -> Vec<SpectrumRecord> {
    let ops = BoundaryOperators::new(complex);
    let mut qs = q_list.to_vec();
    qs.sort_unstable();
    qs.dedup();
    let mut grid = alphas.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    type Key = (usize, usize, usize, usize, usize);
    let snaps: Vec<(Snapshot, Snapshot)> = grid.iter().map(|&a| (complex.snapshot(a), complex.snapshot(a + p))).collect();
    let key = |q: usize, (t, tp): &(Snapshot, Snapshot)| -> Key {
        let below = if q == 0 { 0 } else { t.count(q - 1) };
        (q, below, t.count(q), tp.count(q), tp.count(q + 1))
    };
    let mut unique: HashMap<Key, (usize, usize)> = HashMap::new();
    for &q in &qs {
        for (i, s) in snaps.iter().enumerate() {
            unique.entry(key(q, s)).or_insert((q, i));
        }
    }
    let mut jobs: Vec<(Key, (usize, usize))> = unique.into_iter().collect();
    jobs.sort_unstable_by_key(|j| j.0);
    let solved: HashMap<Key, Result<SpectrumRecord, SpectraError>> = jobs
        .into_par_iter()
        .map(|(k, (q, i))| {
            let (t, tp) = &snaps[i];
            let result = laplacian_for(&ops, q, t, tp, policy.projection).and_then(|l| spectrum(&l, policy));
            (k, result)
        })
        .collect();

    let mut out = Vec::with_capacity(qs.len() * grid.len());
    for &q in &qs {
        for (i, s) in snaps.iter().enumerate() {
            let record = match &solved[&key(q, s)] {
                Ok(r) => SpectrumRecord { alpha: grid[i], p, ..r.clone() },
                Err(e) => SpectrumRecord::failed(q, grid[i], p, s.0.count(q), e),
            };
            out.push(record);
        }
    }
    out
}

/// Per-vertex `Σ_α (L_0^{α,0})_ii`, normalized by its maximum. The diagonal of
/// `L_0^{α,0}` is the vertex degree in `K_α`. All-zero sums map to 1.
pub fn accumulated_laplacian_diagonal(complex: &FilteredComplex, alphas: &[f64]) -> Vec<f64> {
    let n = complex.count(0);
    let mut acc = vec![0.0f64; n];
    let edges = complex.simplices(1);
    for &alpha in alphas {
        let present = complex.snapshot(alpha).count(1);
        for e in &edges[..present] {
            for &v in e.vertices() {
                acc[v as usize] += 1.0;
            }
        }
    }
    let max = acc.iter().fold(0.0f64, |a, &b| a.max(b));
    if max == 0.0 {
        return vec![1.0; n];
    }
    acc.iter().map(|&x| x / max).collect()
}

/// A vertex pair joined by an edge that forms unusually early.
#[derive(Clone, Debug, PartialEq)]
pub struct Anomaly {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

/// Edges whose filtration value `α_e` satisfies `2·α_e < threshold`, in
/// filtration order, with the Euclidean distance of their endpoints.
pub fn detect_anomalies(complex: &FilteredComplex, points: &PointSet, threshold: f64) -> Vec<Anomaly> {
    complex
        .simplices(1)
        .iter()
        .zip(complex.values_sq(1))
        .take_while(|(_, &v)| 2.0 * v.sqrt() < threshold)
        .map(|(e, _)| {
            let (a, b) = (e.vertices()[0] as usize, e.vertices()[1] as usize);
            Anomaly { a, b, distance: points.distance(a, b) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::{assign_filtration, critical_alphas};
    use crate::complex::{build_complex, Simplex};
    use crate::geometry::delaunay;

    fn s(v: &[u32]) -> Simplex {
        Simplex::new(v).unwrap()
    }

    fn filtered(points: &PointSet) -> FilteredComplex {
        assign_filtration(&delaunay(points, 0).unwrap(), points).unwrap()
    }

    #[test]
    fn hollow_triangle_has_one_loop() {
        let c = build_complex(&[
            (s(&[0]), 0.0),
            (s(&[1]), 0.0),
            (s(&[2]), 0.0),
            (s(&[0, 1]), 1.0),
            (s(&[1, 2]), 1.0),
            (s(&[0, 2]), 1.0),
            (s(&[0, 1, 2]), 4.0),
        ])
        .unwrap();
        let recs = sweep(&c, &[0.0, 1.0, 2.0], &[0, 1], 0.0, &SpectralPolicy::default());
        let betti: Vec<(usize, usize)> = recs.iter().map(|r| (r.q, r.betti)).collect();
        assert_eq!(betti, vec![(0, 3), (0, 1), (0, 1), (1, 0), (1, 1), (1, 0)]);
        assert_eq!(recs[4].eigenvalues.len(), 3);
        assert!((recs[4].lambda_min_nonzero.unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(recs[0].lambda_min_nonzero, None);
        // Persistence kills the loop: at α=1 with p=1 the triangle fills it.
        let recs = sweep(&c, &[1.0], &[1], 1.0, &SpectralPolicy::default());
        assert_eq!(recs[0].betti, 0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let c = build_complex(&[(s(&[0, 1]), 1.0), (s(&[0]), 0.0), (s(&[1]), 0.0)]).unwrap();
        let ops = BoundaryOperators::new(&c);
        let snap = c.snapshot(2.0);
        let up = persistent_boundary(&ops, 2, &snap, &snap, ProjectionMethod::Nullspace).unwrap();
        let b0 = ops.get(0).unwrap().restrict(&snap);
        assert!(matches!(assemble_laplacian(&b0, &up), Err(SpectraError::DimensionMismatch { .. })));
    }

    #[test]
    fn iterative_path_matches_dense() {
        let pts: Vec<[f64; 2]> = (0..60).map(|i| [i as f64 + 0.001 * ((i * i) % 7) as f64, ((i * 37) % 11) as f64 * 0.3]).collect();
        let p = PointSet::from_2d(&pts).unwrap();
        let c = filtered(&p);
        let alphas = critical_alphas(&c);
        let mid = alphas[alphas.len() / 2];
        let dense = sweep(&c, &[mid], &[0, 1], 0.0, &SpectralPolicy::default());
        let it_policy = SpectralPolicy { dense_limit: 5, ..Default::default() };
        let iter = sweep(&c, &[mid], &[0, 1], 0.0, &it_policy);
        for (d, i) in dense.iter().zip(&iter) {
            assert_eq!(d.betti, i.betti);
            let (a, b) = (d.lambda_min_nonzero.unwrap(), i.lambda_min_nonzero.unwrap());
            assert!((a - b).abs() <= 1e-8 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn accumulated_diagonal_examples() {
        let single = filtered(&PointSet::from_2d(&[[0., 0.]]).unwrap());
        assert_eq!(accumulated_laplacian_diagonal(&single, &[0.0, 1.0]), vec![1.0]);
        let pair = filtered(&PointSet::from_2d(&[[0., 0.], [1., 0.]]).unwrap());
        assert_eq!(accumulated_laplacian_diagonal(&pair, &critical_alphas(&pair)), vec![1.0, 1.0]);
        let path = filtered(&PointSet::from_2d(&[[0., 0.], [1., 0.], [2., 0.]]).unwrap());
        assert_eq!(accumulated_laplacian_diagonal(&path, &critical_alphas(&path)), vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn anomalies_in_a_chain() {
        let mut pts: Vec<[f64; 3]> = (0..6).map(|i| [3.8 * i as f64, 0.0, 0.3 * (i % 2) as f64]).collect();
        pts.push([3.8 * 2.0 + 0.5, 2.854, 0.1]);
        let p = PointSet::new(3, pts).unwrap();
        let c = filtered(&p);
        let found = detect_anomalies(&c, &p, 3.0);
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].a, found[0].b), (2, 6));
        assert!((found[0].distance - p.distance(2, 6)).abs() < 1e-15);
        assert!(detect_anomalies(&c, &p, 2.0).is_empty());
    }
}
