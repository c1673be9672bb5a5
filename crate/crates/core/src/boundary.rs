//! Boundary matrices over filtration-ordered bases, their snapshot
//! restrictions, and persistent boundary operators.
//!
//! Because simplices of each dimension are stored in filtration order, the
//! boundary matrix of a snapshot is the top-left block of the full matrix.
//!
//! The persistent boundary `B_q^{α,p}` acts on those `q`-chains of `K_{α+p}`
//! whose boundary lies in `K_α`: the kernel of the difference operator (the
//! rows of `B_q^{α+p}` belonging to `(q-1)`-simplices born after `α`).
//! Columns whose faces all exist at `α` are in that kernel already; only the
//! remaining *coupled* columns need the orthogonal projector, which is block
//! diagonal over groups of coupled columns linked through shared new faces.

use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::complex::{FilteredComplex, Snapshot};
use crate::linalg::{cholesky_solve, column_space_basis, conjugate_gradient, psd_kernel_basis, symmetric_eigenvalues, CsrMatrix, LinalgError, UnionFind};
use crate::MAX_DIM;

/// Eigenvalues of `DᵀD` below this (relative) are treated as kernel.
const KERNEL_REL_TOL: f64 = 1e-10;
/// Largest difference-complex block solved densely in the harmonic method.
const HARMONIC_DENSE_LIMIT: usize = 3000;
/// Above this many columns the default projection method switches to the
/// harmonic extension.
pub const NULLSPACE_COLUMN_LIMIT: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("snapshot at α² = {earlier} must not come after snapshot at α² = {later}")]
    SnapshotOrderViolation { earlier: f64, later: f64 },
    #[error("boundary dimension {0} out of range")]
    DimensionOutOfRange(usize),
    #[error("harmonic extension solve failed: {0}")]
    LinearSolveFailure(#[from] LinalgError),
    #[error("harmonic extension system is not positive definite")]
    NotPositiveDefinite,
}

/// Signed incidence matrix in compressed-column form. Row `r` is the `r`-th
/// `(q-1)`-simplex and column `c` the `c`-th `q`-simplex in filtration order
/// (for `q = 0` there is a single zero row).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseBoundaryMatrix {
    q: usize,
    rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    signs: Vec<i8>,
}

impl SparseBoundaryMatrix {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.signs.len()
    }

    /// Nonzero `(row, sign)` pairs of column `c`, rows ascending.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let span = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[span.clone()].iter().zip(&self.signs[span]).map(|(&r, &s)| (r as usize, s))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols());
        for c in 0..self.cols() {
            for (r, s) in self.column(c) {
                m[(r, c)] = s as f64;
            }
        }
        m
    }

    pub fn to_dense_i64(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.cols()]; self.rows];
        for (r, c, s) in (0..self.cols()).flat_map(|c| self.column(c).map(move |(r, s)| (r, c, s))) {
            m[r][c] = i64::from(s);
        }
        m
    }

    fn from_columns(q: usize, rows: usize, columns: impl Iterator<Item = Vec<(u32, i8)>>) -> Self {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut signs = Vec::new();
        for mut col in columns {
            col.sort_unstable_by_key(|e| e.0);
            for (r, s) in col {
                row_idx.push(r);
                signs.push(s);
            }
            col_ptr.push(row_idx.len());
        }
        SparseBoundaryMatrix { q, rows, col_ptr, row_idx, signs }
    }

    /// Top-left `rows × cols` block.
    fn block(&self, rows: usize, cols: usize) -> Self {
        let columns = (0..cols).map(|c| self.column(c).filter(|&(r, _)| r < rows).map(|(r, s)| (r as u32, s)).collect());
        SparseBoundaryMatrix::from_columns(self.q, rows, columns)
    }

    /// The boundary matrix of the snapshot: its top-left
    /// `N_{q-1}^α × N_q^α` block.
    pub fn restrict(&self, snap: &Snapshot) -> Self {
        self.block(row_count(self.q, snap), snap.count(self.q))
    }

    /// Exact integer product `self · other` is zero (`∂∂ = 0`).
    pub fn composes_to_zero(&self, other: &SparseBoundaryMatrix) -> bool {
        assert_eq!(self.cols(), other.rows, "non-conformable boundary matrices");
        (0..other.cols()).all(|c| {
            let mut acc: HashMap<usize, i64> = HashMap::new();
            for (mid, s) in other.column(c) {
                for (r, t) in self.column(mid) {
                    *acc.entry(r).or_default() += (s as i64) * (t as i64);
                }
            }
            acc.values().all(|&v| v == 0)
        })
    }
}

fn row_count(q: usize, snap: &Snapshot) -> usize {
    if q == 0 {
        1
    } else {
        snap.count(q - 1)
    }
}

/// Full boundary matrix `B_q` over the whole filtration.
pub fn full_boundary(complex: &FilteredComplex, q: usize) -> SparseBoundaryMatrix {
    if q == 0 {
        return SparseBoundaryMatrix::from_columns(0, 1, (0..complex.count(0)).map(|_| Vec::new()));
    }
    let columns = complex.simplices(q).iter().map(|s| {
        s.facets()
            .map(|(face, _, sign)| {
                let r = complex.position(&face).expect("complex is closed under faces");
                (r as u32, sign)
            })
            .collect()
    });
    SparseBoundaryMatrix::from_columns(q, complex.count(q - 1), columns)
}

/// Every full boundary matrix `B_0 … B_{MAX_DIM+1}` of a complex.
#[derive(Clone, Debug)]
pub struct BoundaryOperators {
    matrices: Vec<SparseBoundaryMatrix>,
}

impl BoundaryOperators {
    pub fn new(complex: &FilteredComplex) -> Self {
        BoundaryOperators { matrices: (0..=MAX_DIM + 1).map(|q| full_boundary(complex, q)).collect() }
    }

    pub fn get(&self, q: usize) -> Option<&SparseBoundaryMatrix> {
        self.matrices.get(q)
    }
}

fn check_order(snap_t: &Snapshot, snap_tp: &Snapshot) -> Result<(), BoundaryError> {
    if snap_t.alpha_sq > snap_tp.alpha_sq {
        return Err(BoundaryError::SnapshotOrderViolation { earlier: snap_t.alpha_sq, later: snap_tp.alpha_sq });
    }
    Ok(())
}

/// Rows of `B_q^{α+p}` for the `(q-1)`-simplices born after `α`, reindexed
/// from zero. Its kernel is the space of `q`-chains of `K_{α+p}` whose
/// boundary lies in `K_α`.
pub fn diff_operator(
    full: &SparseBoundaryMatrix,
    snap_t: &Snapshot,
    snap_tp: &Snapshot,
) -> Result<SparseBoundaryMatrix, BoundaryError> {
    check_order(snap_t, snap_tp)?;
    let q = full.q();
    if q == 0 {
        return Ok(SparseBoundaryMatrix::from_columns(0, 0, (0..snap_tp.count(0)).map(|_| Vec::new())));
    }
    let (old, all) = (snap_t.count(q - 1), snap_tp.count(q - 1));
    let columns = (0..snap_tp.count(q)).map(|c| {
        full.column(c).filter(|&(r, _)| r >= old && r < all).map(|(r, s)| ((r - old) as u32, s)).collect()
    });
    Ok(SparseBoundaryMatrix::from_columns(q, all - old, columns))
}

/// How the projection onto the kernel of the difference operator is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProjectionMethod {
    /// Nullspace below [`NULLSPACE_COLUMN_LIMIT`] columns, harmonic extension above.
    #[default]
    Auto,
    /// `ℙ = I − UUᵀ` with `U` an orthonormal basis of the row space of the
    /// difference operator, from a pivoted QR factorization.
    Nullspace,
    /// `ℙ = I − Dᵀ L̃⁺ D` with `L̃` the Laplacian of the difference complex,
    /// made invertible by adding its kernel projector.
    HarmonicExtension,
}

/// Dense projected columns for one group of coupled columns.
#[derive(Clone, Debug)]
pub struct ProjectedBlock {
    /// Column indices (in `C_q^{α+p}`) of the group.
    pub cols: Vec<usize>,
    /// Row indices (in `C_{q-1}^α`) touched by the group.
    pub rows: Vec<usize>,
    /// `rows.len() × cols.len()` block of `B_q^{α+p} ℙ`.
    pub values: DMatrix<f64>,
}

/// Matrix of `B_q^{α,p}`: `N_{q-1}^α` rows, `N_q^{α+p}` columns.
///
/// Columns outside every [`ProjectedBlock`] are exact integer columns of the
/// restricted boundary matrix; the rest are replaced by their projections.
#[derive(Clone, Debug)]
pub struct PersistentBoundary {
    pub q: usize,
    pub snap_t: Snapshot,
    pub snap_tp: Snapshot,
    restricted: SparseBoundaryMatrix,
    blocks: Vec<ProjectedBlock>,
    coupled: Vec<bool>,
}

impl PersistentBoundary {
    pub fn rows(&self) -> usize {
        self.restricted.rows()
    }

    pub fn cols(&self) -> usize {
        self.restricted.cols()
    }

    /// Columns untouched by the projection, as sparse `(row, sign)` lists.
    pub fn free_columns(&self) -> impl Iterator<Item = impl Iterator<Item = (usize, i8)> + '_> + '_ {
        (0..self.cols()).filter(|&c| !self.coupled[c]).map(|c| self.restricted.column(c))
    }

    pub fn blocks(&self) -> &[ProjectedBlock] {
        &self.blocks
    }

    pub fn coupled_count(&self) -> usize {
        self.coupled.iter().filter(|&&c| c).count()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        for c in 0..self.cols() {
            if !self.coupled[c] {
                for (r, s) in self.restricted.column(c) {
                    m[(r, c)] = s as f64;
                }
            }
        }
        for b in &self.blocks {
            for (j, &c) in b.cols.iter().enumerate() {
                for (i, &r) in b.rows.iter().enumerate() {
                    m[(r, c)] = b.values[(i, j)];
                }
            }
        }
        m
    }
}

/// `B_q^{α,p}` for `snap_t = K_α`, `snap_tp = K_{α+p}`. For `p = 0` this is
/// exactly the restriction of `B_q` to `K_α`.
pub fn persistent_boundary(
    ops: &BoundaryOperators,
    q: usize,
    snap_t: &Snapshot,
    snap_tp: &Snapshot,
    method: ProjectionMethod,
) -> Result<PersistentBoundary, BoundaryError> {
    check_order(snap_t, snap_tp)?;
    let full = ops.get(q).ok_or(BoundaryError::DimensionOutOfRange(q))?;
    let rows_old = row_count(q, snap_t);
    let cols = snap_tp.count(q);
    let restricted = full.block(rows_old, cols);
    let diff = diff_operator(full, snap_t, snap_tp)?;
    let coupled: Vec<bool> = (0..cols).map(|c| diff.column(c).next().is_some()).collect();
    let method = match method {
        ProjectionMethod::Auto if cols <= NULLSPACE_COLUMN_LIMIT => ProjectionMethod::Nullspace,
        ProjectionMethod::Auto => ProjectionMethod::HarmonicExtension,
        m => m,
    };

    let n_new = diff.rows();
    // Relative boundary of the new (q-1)-simplices onto new (q-2)-simplices.
    let relative_down = if method == ProjectionMethod::HarmonicExtension && q >= 2 {
        let below = ops.get(q - 1).expect("q-1 is in range");
        let old2 = snap_t.count(q - 2);
        let columns: Vec<Vec<(usize, i8)>> = (0..n_new)
            .map(|k| below.column(rows_old + k).filter(|&(r, _)| r >= old2).map(|(r, s)| (r - old2, s)).collect())
            .collect();
        Some(columns)
    } else {
        None
    };

    let mut uf = UnionFind::new(n_new);
    for c in (0..cols).filter(|&c| coupled[c]) {
        let mut it = diff.column(c).map(|(r, _)| r);
        let first = it.next().expect("coupled column has a new face");
        it.for_each(|r| uf.union(first, r));
    }
    if let Some(down) = &relative_down {
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for (k, col) in down.iter().enumerate() {
            for &(r, _) in col {
                match owner.get(&r) {
                    Some(&o) => uf.union(o, k),
                    None => {
                        owner.insert(r, k);
                    }
                }
            }
        }
    }
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for c in (0..cols).filter(|&c| coupled[c]) {
        let root = uf.find(diff.column(c).next().unwrap().0);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push((Vec::new(), Vec::new()));
            groups.len() - 1
        });
        groups[g].0.push(c);
    }
    for r in 0..n_new {
        if let Some(&g) = slot.get(&uf.find(r)) {
            groups[g].1.push(r);
        }
    }

    let mut blocks = Vec::with_capacity(groups.len());
    for (gcols, new_rows) in groups {
        let mut old_rows: Vec<usize> = gcols.iter().flat_map(|&c| restricted.column(c).map(|(r, _)| r)).collect();
        old_rows.sort_unstable();
        old_rows.dedup();
        let b_top = dense_block(&restricted, &gcols, &old_rows);
        let d = dense_block(&diff, &gcols, &new_rows);
        let values = match method {
            ProjectionMethod::Nullspace => {
                // Projecting onto ker D removes the row space of D.
                let u = column_space_basis(d.transpose(), KERNEL_REL_TOL);
                let bu = &b_top * &u;
                b_top - bu * u.transpose()
            }
            _ => {
                let laplacian = difference_laplacian(&d, &new_rows, relative_down.as_deref());
                let f = solve_gauge_fixed(laplacian, &d)?;
                let coupling = &b_top * d.transpose();
                b_top - coupling * f
            }
        };
        blocks.push(ProjectedBlock { cols: gcols, rows: old_rows, values });
    }
    Ok(PersistentBoundary { q, snap_t: *snap_t, snap_tp: *snap_tp, restricted, blocks, coupled })
}

fn dense_block(m: &SparseBoundaryMatrix, cols: &[usize], rows: &[usize]) -> DMatrix<f64> {
    let local: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut out = DMatrix::zeros(rows.len(), cols.len());
    for (j, &c) in cols.iter().enumerate() {
        for (r, s) in m.column(c) {
            if let Some(&i) = local.get(&r) {
                out[(i, j)] = s as f64;
            }
        }
    }
    out
}

/// `D Dᵀ + B̃ᵀ B̃` on the group's new `(q-1)`-simplices, where `B̃` is the
/// relative boundary onto new `(q-2)`-simplices.
fn difference_laplacian(d: &DMatrix<f64>, new_rows: &[usize], down: Option<&[Vec<(usize, i8)>]>) -> DMatrix<f64> {
    let mut l = d * d.transpose();
    if let Some(down) = down {
        let n = new_rows.len();
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for &(r, s) in &down[new_rows[i]] {
                    if let Some(&(_, t)) = down[new_rows[j]].iter().find(|e| e.0 == r) {
                        acc += (s as f64) * (t as f64);
                    }
                }
                l[(i, j)] += acc;
                if i != j {
                    l[(j, i)] += acc;
                }
            }
        }
    }
    l
}

/// Solves `L̃ F = D` for the range component of `F`: densely via
/// `(L̃ + ZZᵀ)` with `Z` an orthonormal kernel basis, or by conjugate
/// gradients on the consistent singular system for large blocks.
fn solve_gauge_fixed(l: DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, BoundaryError> {
    let n = l.nrows();
    if n <= HARMONIC_DENSE_LIMIT {
        let z = psd_kernel_basis(l.clone(), KERNEL_REL_TOL);
        let gauged = l + &z * z.transpose();
        return cholesky_solve(gauged, rhs).ok_or(BoundaryError::NotPositiveDefinite);
    }
    let sparse = CsrMatrix::from_dense(&l);
    let diag = sparse.diagonal();
    let mut out = DMatrix::zeros(n, rhs.ncols());
    for j in 0..rhs.ncols() {
        let b: Vec<f64> = rhs.column(j).iter().copied().collect();
        let x = conjugate_gradient(|v, y| sparse.mul_vec(v, y), &diag, &b, 1e-13, 20 * n + 1000)?;
        out.column_mut(j).copy_from_slice(&x);
    }
    Ok(out)
}

/// Eigenvalues of `M Mᵀ` for a persistent boundary, for diagnostics and tests.
pub fn up_gram_spectrum(pb: &PersistentBoundary) -> Vec<f64> {
    let m = pb.dense();
    symmetric_eigenvalues(&m * m.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_complex, Simplex};

    fn s(v: &[u32]) -> Simplex {
        Simplex::new(v).unwrap()
    }

    fn two_triangles() -> FilteredComplex {
        build_complex(&[
            (s(&[0]), 0.0),
            (s(&[1]), 0.0),
            (s(&[2]), 0.0),
            (s(&[3]), 0.0),
            (s(&[0, 1]), 1.0),
            (s(&[1, 2]), 1.0),
            (s(&[0, 2]), 1.0),
            (s(&[1, 3]), 2.0),
            (s(&[2, 3]), 2.0),
            (s(&[0, 1, 2]), 3.0),
            (s(&[1, 2, 3]), 4.0),
        ])
        .unwrap()
    }

    #[test]
    fn edge_column_signs() {
        let c = build_complex(&[(s(&[0, 1]), 1.0), (s(&[0]), 0.0), (s(&[1]), 0.0)]).unwrap();
        let b = full_boundary(&c, 1);
        assert_eq!(b.column(0).collect::<Vec<_>>(), vec![(0, -1), (1, 1)]);
        let b0 = full_boundary(&c, 0);
        assert_eq!((b0.rows(), b0.cols(), b0.nnz()), (1, 2, 0));
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        let c = two_triangles();
        let ops = BoundaryOperators::new(&c);
        for q in 1..=MAX_DIM {
            assert!(ops.get(q).unwrap().composes_to_zero(ops.get(q + 1).unwrap()));
        }
    }

    #[test]
    fn restriction_is_top_left_block() {
        let c = two_triangles();
        let b2 = full_boundary(&c, 2);
        assert_eq!(b2.restrict(&c.snapshot(0.5)).cols(), 0);
        let r = b2.restrict(&c.snapshot(3f64.sqrt()));
        assert_eq!((r.rows(), r.cols()), (5, 1));
        assert_eq!(b2.restrict(&c.snapshot(f64::INFINITY)), b2);
    }

    #[test]
    fn diff_operator_zero_when_faces_exist() {
        let c = two_triangles();
        let b1 = full_boundary(&c, 1);
        let d = diff_operator(&b1, &c.snapshot(0.0), &c.snapshot(2.0)).unwrap();
        assert_eq!((d.rows(), d.nnz()), (0, 0));
        let e = diff_operator(&b1, &c.snapshot(2.0), &c.snapshot(0.0));
        assert!(matches!(e, Err(BoundaryError::SnapshotOrderViolation { .. })));
    }

    #[test]
    fn diff_operator_excludes_edge_with_late_vertex() {
        // Edge {2,3} has vertex 3 appearing only at the later scale.
        let c = build_complex(&[
            (s(&[0]), 0.0),
            (s(&[1]), 0.0),
            (s(&[2]), 0.0),
            (s(&[3]), 1.0),
            (s(&[0, 1]), 1.0),
            (s(&[2, 3]), 1.0),
        ])
        .unwrap();
        let b1 = full_boundary(&c, 1);
        let d = diff_operator(&b1, &c.snapshot(0.5), &c.snapshot(1.0)).unwrap();
        assert_eq!(d.rows(), 1);
        let e01 = c.position(&s(&[0, 1])).unwrap();
        let e23 = c.position(&s(&[2, 3])).unwrap();
        assert_eq!(d.column(e01).count(), 0);
        assert_eq!(d.column(e23).collect::<Vec<_>>(), vec![(0, 1)]);
        let ops = BoundaryOperators::new(&c);
        let pb = persistent_boundary(&ops, 1, &c.snapshot(0.5), &c.snapshot(1.0), ProjectionMethod::Nullspace).unwrap();
        let m = pb.dense();
        assert!(m.column(e23).iter().all(|&x| x.abs() < 1e-14));
        assert_eq!(m.column(e01).iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn zero_persistence_equals_restriction() {
        let c = two_triangles();
        let ops = BoundaryOperators::new(&c);
        for alpha in [0.0, 1.0, 1.5, 2.0, 3.0] {
            let snap = c.snapshot(alpha);
            for q in 0..=3 {
                for method in [ProjectionMethod::Nullspace, ProjectionMethod::HarmonicExtension] {
                    let pb = persistent_boundary(&ops, q, &snap, &snap, method).unwrap();
                    assert_eq!(pb.coupled_count(), 0);
                    assert_eq!(pb.dense(), ops.get(q).unwrap().restrict(&snap).to_dense());
                }
            }
        }
    }

    #[test]
    fn methods_agree_on_a_filling_triangle() {
        let c = two_triangles();
        let ops = BoundaryOperators::new(&c);
        let (t, tp) = (c.snapshot(1.0), c.snapshot(2.0));
        let a = persistent_boundary(&ops, 2, &t, &tp, ProjectionMethod::Nullspace).unwrap();
        let b = persistent_boundary(&ops, 2, &t, &tp, ProjectionMethod::HarmonicExtension).unwrap();
        assert!((a.dense() - b.dense()).abs().max() < 1e-10);
        let up = up_gram_spectrum(&a);
        assert!((up.last().unwrap() - 3.0).abs() < 1e-10);
    }
}
