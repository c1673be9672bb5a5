//! Sparse symmetric matrices, conjugate gradients and eigenvalue solvers.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("conjugate gradients did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("eigensolver made no progress after {rounds} restarts")]
    EigenStalled { rounds: usize },
}

/// Square sparse matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries and drops exact zeros.
    pub fn from_triplets(n: usize, mut triplets: Vec<(u32, u32, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        let mut i = 0;
        while i < triplets.len() {
            let (r, c, mut v) = triplets[i];
            i += 1;
            while i < triplets.len() && triplets[i].0 == r && triplets[i].1 == c {
                v += triplets[i].2;
                i += 1;
            }
            if v != 0.0 {
                rows.push(r);
                col_idx.push(c);
                vals.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r as usize + 1] += 1;
        }
        for k in 0..n {
            row_ptr[k + 1] += row_ptr[k];
        }
        CsrMatrix { n, row_ptr, col_idx, vals }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    t.push((r as u32, c as u32, m[(r, c)]));
                }
            }
        }
        CsrMatrix::from_triplets(m.nrows(), t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().zip(&self.vals[span]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Largest absolute difference between the matrix and its transpose.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    /// Gershgorin upper bound on the largest eigenvalue.
    pub fn gershgorin_max(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row(r).map(|(c, v)| if c == r { v } else { v.abs() }).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Index sets of the connected components of the sparsity graph, each
    /// sorted, ordered by smallest index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.n);
        for r in 0..self.n {
            for (c, _) in self.row(r) {
                uf.union(r, c);
            }
        }
        uf.groups()
    }

    /// Principal submatrix on `idx` (sorted, distinct).
    pub fn submatrix(&self, idx: &[usize]) -> CsrMatrix {
        let mut local = vec![u32::MAX; self.n];
        for (k, &i) in idx.iter().enumerate() {
            local[i] = k as u32;
        }
        let mut t = Vec::new();
        for (k, &i) in idx.iter().enumerate() {
            for (c, v) in self.row(i) {
                if local[c] != u32::MAX {
                    t.push((k as u32, local[c], v));
                }
            }
        }
        CsrMatrix::from_triplets(idx.len(), t)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    pub(crate) fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Orthonormal basis (as columns) of the numerical kernel of a symmetric
/// positive semi-definite matrix.
pub fn psd_kernel_basis(m: DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = m.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let tol = rel_tol * lmax.max(1.0);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < tol).collect();
    DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}

/// Orthonormal basis (as columns) of the numerical column space of `m`, by
/// Householder QR with column pivoting. Columns of `R` whose diagonal falls
/// below `rel_tol` times the leading one are treated as dependent.
pub fn column_space_basis(m: DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let qr = m.col_piv_qr();
    let r = qr.r();
    let lead = r[(0, 0)].abs().max(1.0);
    let rank = (0..rows.min(cols)).take_while(|&i| r[(i, i)].abs() > rel_tol * lead).count();
    qr.q().columns(0, rank).into_owned()
}

/// Preconditioned (Jacobi) conjugate gradients for a symmetric positive
/// semi-definite system with a consistent right-hand side.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, LinalgError> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(LinalgError::NoConvergence { iterations: it, residual: norm(&r) / bnorm });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        if norm(&r) <= rel_tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinalgError::NoConvergence { iterations: max_iter, residual: norm(&r) / bnorm })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigenvalues from the bottom of the spectrum of a sparse symmetric positive
/// semi-definite matrix, found by block Krylov iteration on the shift-inverted
/// operator `(A + σI)⁻¹` with locking.
///
/// Returns eigenvalues in ascending order, stopping after the first one at or
/// above `stop_at` (or after all `n`).
pub fn lowest_eigenvalues(a: &CsrMatrix, stop_at: f64, seed: u64) -> Result<Vec<f64>, LinalgError> {
    const BLOCK: usize = 8;
    const MAX_ROUNDS: usize = 400;
    let n = a.n();
    let lmax = a.gershgorin_max().max(1.0);
    let sigma = 1e-3 * lmax;
    let shifted_diag: Vec<f64> = a.diagonal().iter().map(|d| d + sigma).collect();
    let op = |x: &[f64]| -> Result<Vec<f64>, LinalgError> {
        conjugate_gradient(
            |v, out| {
                a.mul_vec(v, out);
                for (o, vi) in out.iter_mut().zip(v) {
                    *o += sigma * vi;
                }
            },
            &shifted_diag,
            x,
            1e-13,
            20 * n + 1000,
        )
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut steps = 6;
    let mut stalled = 0;
    for _ in 0..MAX_ROUNDS {
        if locked.len() == n || values.last().is_some_and(|&l| l >= stop_at) {
            return Ok(values);
        }
        let room = n - locked.len();
        let width = (steps * BLOCK).min(room);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(width);
        let mut images: Vec<Vec<f64>> = Vec::with_capacity(width);
        let mut block: Vec<Vec<f64>> = (0..BLOCK.min(room))
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        while basis.len() < width && !block.is_empty() {
            let mut next = Vec::new();
            for mut v in block.drain(..) {
                if basis.len() >= width {
                    break;
                }
                if !orthonormalize(&mut v, locked.iter().chain(basis.iter())) {
                    continue;
                }
                let w = op(&v)?;
                next.push(w.clone());
                basis.push(v);
                images.push(w);
            }
            block = next;
        }
        let k = basis.len();
        if k == 0 {
            return Ok(values);
        }
        let h = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let theta_max = eig.eigenvalues[order[0]].abs();
        let mut progressed = false;
        for &i in &order {
            let theta = eig.eigenvalues[i];
            let s = eig.eigenvectors.column(i);
            let mut y = vec![0.0; n];
            let mut oy = vec![0.0; n];
            for (c, coef) in s.iter().enumerate() {
                for t in 0..n {
                    y[t] += coef * basis[c][t];
                    oy[t] += coef * images[c][t];
                }
            }
            let residual: f64 = oy.iter().zip(&y).map(|(o, v)| (o - theta * v).powi(2)).sum::<f64>().sqrt();
            if residual > 1e-9 * theta_max {
                break;
            }
            if !orthonormalize(&mut y, locked.iter()) {
                break;
            }
            let mut ay = vec![0.0; n];
            a.mul_vec(&y, &mut ay);
            let lambda = dot(&y, &ay);
            locked.push(y);
            values.push(lambda);
            progressed = true;
            if lambda >= stop_at || locked.len() == n {
                break;
            }
        }
        if progressed {
            stalled = 0;
        } else {
            stalled += 1;
            steps = (steps * 2).min(n);
            if stalled > 6 {
                return Err(LinalgError::EigenStalled { rounds: stalled });
            }
        }
    }
    Err(LinalgError::EigenStalled { rounds: MAX_ROUNDS })
}

/// Twice-iterated Gram–Schmidt of `v` against orthonormal vectors; returns
/// false if `v` is (numerically) in their span.
fn orthonormalize<'a>(v: &mut [f64], against: impl Iterator<Item = &'a Vec<f64>> + Clone) -> bool {
    let start = norm(v);
    if start == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for u in against.clone() {
            let c = dot(u, v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
    }
    let left = norm(v);
    if left <= 1e-8 * start {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= left);
    true
}

/// Solves `m x = b` for symmetric positive definite `m` via Cholesky.
pub fn cholesky_solve(m: DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = m.cholesky()?;
    Some(chol.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            let (a, b) = (i as u32, i as u32 + 1);
            t.extend([(a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)]);
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn column_space_of_rank_deficient_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 2.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        let u = column_space_basis(m.clone(), 1e-10);
        assert_eq!(u.ncols(), 2);
        assert!((u.transpose() * &u - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!((&u * u.transpose() * &m - &m).amax() < 1e-12);
        assert_eq!(column_space_basis(DMatrix::zeros(3, 2), 1e-10).ncols(), 0);
    }

    #[test]
    fn triplets_are_summed_and_zeros_dropped() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 2, 1.0), (1, 2, -1.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.components(), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn components_and_submatrix() {
        let mut t = vec![(0, 2, 1.0), (2, 0, 1.0), (1, 1, 4.0), (3, 3, 1.0)];
        t.push((3, 1, 0.5));
        t.push((1, 3, 0.5));
        let m = CsrMatrix::from_triplets(4, t);
        assert_eq!(m.components(), vec![vec![0, 2], vec![1, 3]]);
        let s = m.submatrix(&[1, 3]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[4.0, 0.5, 0.5, 1.0]));
    }

    #[test]
    fn cg_solves_shifted_laplacian() {
        let m = path_laplacian(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let diag: Vec<f64> = m.diagonal().iter().map(|d| d + 0.1).collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            m.mul_vec(x, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += 0.1 * xi;
            }
        };
        let x = conjugate_gradient(apply, &diag, &b, 1e-12, 1000).unwrap();
        let mut r = vec![0.0; 50];
        apply(&x, &mut r);
        for i in 0..50 {
            assert!((r[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn iterative_matches_dense_with_degenerate_kernel() {
        // Four disjoint paths share a 4-dimensional kernel.
        let mut t = Vec::new();
        for block in 0..4u32 {
            for i in 0..29u32 {
                let (a, b) = (block * 30 + i, block * 30 + i + 1);
                t.extend([(a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)]);
            }
        }
        let m = CsrMatrix::from_triplets(120, t);
        let dense = symmetric_eigenvalues(m.to_dense());
        let it = lowest_eigenvalues(&m, 1e-8, 1).unwrap();
        assert_eq!(it.len(), 5);
        for (k, v) in it.iter().enumerate() {
            assert!((v - dense[k]).abs() < 1e-8, "{k}: {v} vs {}", dense[k]);
        }
    }

    #[test]
    fn kernel_basis_of_path_laplacian() {
        let z = psd_kernel_basis(path_laplacian(5).to_dense(), 1e-10);
        assert_eq!(z.ncols(), 1);
        let c = z[(0, 0)];
        assert!(z.iter().all(|&x| (x - c).abs() < 1e-12));
    }
}
