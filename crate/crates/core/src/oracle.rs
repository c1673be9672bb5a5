//! Persistent homology computed independently of the Laplacian path: Z2
//! column reduction of the filtration boundary matrix, and persistent Betti
//! numbers from exact integer ranks.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::complex::{within, FilteredComplex, Simplex};
use crate::spectra::{sweep, SpectralPolicy};

/// Largest `N_q^α` accepted by [`exact_rank_betti`].
pub const EXACT_SIZE_LIMIT: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("exact rank oracle limited to {limit} simplices, got {n}")]
    SizeLimitExceeded { n: usize, limit: usize },
}

/// A persistence interval; values are squared scales, `death_sq = None` for
/// classes that never die.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bar {
    pub dim: usize,
    pub birth_sq: f64,
    pub death_sq: Option<f64>,
}

impl Bar {
    pub fn birth(&self) -> f64 {
        self.birth_sq.sqrt()
    }

    pub fn death(&self) -> f64 {
        self.death_sq.map_or(f64::INFINITY, f64::sqrt)
    }
}

/// All persistence intervals, including zero-length ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Barcode {
    pub bars: Vec<Bar>,
}

impl Barcode {
    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &Bar> {
        self.bars.iter().filter(move |b| b.dim == dim)
    }
}

/// Barcode by standard column reduction over Z2 with clearing, on the global
/// order (value, dimension, vertex tuple).
pub fn reduce(complex: &FilteredComplex) -> Barcode {
    let mut order: Vec<(f64, Simplex)> = (0..=crate::MAX_DIM)
        .flat_map(|d| complex.simplices(d).iter().copied().zip(complex.values_sq(d).iter().copied()))
        .map(|(s, v)| (v, s))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let index: HashMap<Simplex, u32> = order.iter().enumerate().map(|(i, (_, s))| (*s, i as u32)).collect();
    let n = order.len();
    let mut columns: Vec<Vec<u32>> = order
        .iter()
        .map(|(_, s)| {
            let mut col: Vec<u32> = s.facets().map(|(f, _, _)| index[&f]).collect();
            col.sort_unstable();
            col
        })
        .collect();
    let mut pivot_of_low: Vec<u32> = vec![u32::MAX; n];
    let mut cleared = vec![false; n];
    for dim in (1..=crate::MAX_DIM).rev() {
        for j in 0..n {
            if order[j].1.dim() != dim || cleared[j] {
                continue;
            }
            while let Some(&low) = columns[j].last() {
                let p = pivot_of_low[low as usize];
                if p == u32::MAX {
                    pivot_of_low[low as usize] = j as u32;
                    cleared[low as usize] = true;
                    break;
                }
                let other = std::mem::take(&mut columns[p as usize]);
                columns[j] = symmetric_difference(&columns[j], &other);
                columns[p as usize] = other;
            }
        }
    }
    let mut bars = Vec::new();
    for (i, (value, s)) in order.iter().enumerate() {
        let killer = pivot_of_low[i];
        if killer != u32::MAX {
            bars.push(Bar { dim: s.dim(), birth_sq: *value, death_sq: Some(order[killer as usize].0) });
        } else if columns[i].is_empty() {
            bars.push(Bar { dim: s.dim(), birth_sq: *value, death_sq: None });
        }
    }
    bars.sort_by(|a, b| {
        (a.dim, a.birth_sq, a.death_sq.unwrap_or(f64::INFINITY))
            .partial_cmp(&(b.dim, b.birth_sq, b.death_sq.unwrap_or(f64::INFINITY)))
            .expect("finite values")
    });
    Barcode { bars }
}

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Number of dimension-`q` intervals born by `α` and still alive after `α + p`.
pub fn betti_from_barcode(barcode: &Barcode, q: usize, alpha: f64, p: f64) -> usize {
    let (t, tp) = (alpha * alpha, (alpha + p) * (alpha + p));
    barcode
        .in_dim(q)
        .filter(|b| within(b.birth_sq, t) && b.death_sq.is_none_or(|d| !within(d, tp)))
        .count()
}

/// Integer arithmetic used by the rank computation: checked `i128` first,
/// arbitrary precision when that overflows.
trait Exact: Clone + PartialEq {
    fn from_i64(x: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self>;
    fn gcd(&self, other: &Self) -> Self;
    fn div_exact(&self, d: &Self) -> Self;
    fn is_unit(&self) -> bool;
}

impl Exact for i128 {
    fn from_i64(x: i64) -> Self {
        x as i128
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self> {
        a.checked_mul(*x)?.checked_sub(b.checked_mul(*y)?)
    }
    fn gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn div_exact(&self, d: &Self) -> Self {
        self / d
    }
    fn is_unit(&self) -> bool {
        self.abs() == 1
    }
}

impl Exact for BigInt {
    fn from_i64(x: i64) -> Self {
        BigInt::from(x)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn mul_sub(a: &Self, x: &Self, b: &Self, y: &Self) -> Option<Self> {
        Some(a * x - b * y)
    }
    fn gcd(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }
    fn div_exact(&self, d: &Self) -> Self {
        self / d
    }
    fn is_unit(&self) -> bool {
        self.abs().is_one()
    }
}

/// Rank over the rationals of a sparse integer matrix given by columns of
/// `(row, value)` pairs, by fraction-free elimination on lowest nonzero rows.
/// Each updated column is divided by the gcd of its entries.
fn exact_rank<T: Exact>(columns: &[Vec<(u32, i64)>]) -> Option<usize> {
    let mut reduced: Vec<Vec<(u32, T)>> = Vec::new();
    let mut pivot: HashMap<u32, usize> = HashMap::new();
    for col in columns {
        let mut c: Vec<(u32, T)> = col.iter().filter(|e| e.1 != 0).map(|&(r, v)| (r, T::from_i64(v))).collect();
        c.sort_by_key(|e| e.0);
        while let Some((low, v)) = c.last().cloned() {
            let Some(&p) = pivot.get(&low) else {
                pivot.insert(low, reduced.len());
                reduced.push(c);
                break;
            };
            let other = &reduced[p];
            let w = other.last().expect("pivot column is non-empty").1.clone();
            c = combine(&c, &w, other, &v)?;
        }
    }
    Some(reduced.len())
}

/// `w·a − v·b` with the content divided out.
fn combine<T: Exact>(a: &[(u32, T)], w: &T, b: &[(u32, T)], v: &T) -> Option<Vec<(u32, T)>> {
    let zero = T::from_i64(0);
    let mut out: Vec<(u32, T)> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (row, x, y) = match (a.get(i), b.get(j)) {
            (Some(ea), Some(eb)) if ea.0 == eb.0 => {
                i += 1;
                j += 1;
                (ea.0, &ea.1, &eb.1)
            }
            (Some(ea), Some(eb)) if ea.0 < eb.0 => {
                i += 1;
                (ea.0, &ea.1, &zero)
            }
            (Some(ea), None) => {
                i += 1;
                (ea.0, &ea.1, &zero)
            }
            (_, Some(eb)) => {
                j += 1;
                (eb.0, &zero, &eb.1)
            }
            (None, None) => unreachable!(),
        };
        let val = T::mul_sub(w, x, v, y)?;
        if !val.is_zero() {
            out.push((row, val));
        }
    }
    let mut g = zero.clone();
    for (_, x) in &out {
        g = g.gcd(x);
        if g.is_unit() {
            return Some(out);
        }
    }
    if !g.is_zero() {
        for e in out.iter_mut() {
            e.1 = e.1.div_exact(&g);
        }
    }
    Some(out)
}

fn rank(columns: &[Vec<(u32, i64)>]) -> usize {
    exact_rank::<i128>(columns).unwrap_or_else(|| exact_rank::<BigInt>(columns).expect("arbitrary precision never overflows"))
}

/// Integer columns of the boundary of the first `cols` `dim`-simplices,
/// keeping only faces whose position lies in `rows`.
fn boundary_columns(complex: &FilteredComplex, dim: usize, cols: usize, rows: std::ops::Range<usize>) -> Vec<Vec<(u32, i64)>> {
    complex.simplices(dim)[..cols]
        .iter()
        .map(|s| {
            s.facets()
                .filter_map(|(f, _, sign)| {
                    let r = complex.position(&f).expect("closed complex");
                    rows.contains(&r).then_some((r as u32, sign as i64))
                })
                .collect()
        })
        .collect()
}

/// `β_q^{α,p} = N_q^α − rank B_q^α − (rank B_{q+1}^{α+p} − rank D)`, where `D`
/// is `B_{q+1}^{α+p}` restricted to the rows of `q`-simplices born after `α`,
/// with every rank computed exactly.
pub fn exact_rank_betti(complex: &FilteredComplex, q: usize, alpha: f64, p: f64) -> Result<usize, OracleError> {
    let t = complex.snapshot(alpha);
    let tp = complex.snapshot(alpha + p);
    let n = t.count(q);
    if n > EXACT_SIZE_LIMIT {
        return Err(OracleError::SizeLimitExceeded { n, limit: EXACT_SIZE_LIMIT });
    }
    if n == 0 {
        return Ok(0);
    }
    let rank_down = if q == 0 { 0 } else { rank(&boundary_columns(complex, q, n, 0..t.count(q - 1))) };
    let (up_cols, up_rows) = if q < crate::MAX_DIM { (tp.count(q + 1), tp.count(q)) } else { (0, 0) };
    let rank_up = rank(&boundary_columns(complex, q + 1, up_cols, 0..up_rows));
    let rank_diff = rank(&boundary_columns(complex, q + 1, up_cols, n..up_rows));
    Ok(n - rank_down - (rank_up - rank_diff))
}

/// One cell of a triple-agreement check.
#[derive(Clone, Debug, PartialEq)]
pub struct AgreementCell {
    pub q: usize,
    pub alpha: f64,
    pub p: f64,
    pub spectral: usize,
    pub barcode: usize,
    /// `None` when the snapshot exceeds [`EXACT_SIZE_LIMIT`].
    pub exact: Option<usize>,
    /// Spectral record was flagged (gap-ambiguous, failed, …).
    pub flagged: bool,
}

impl AgreementCell {
    pub fn agrees(&self) -> bool {
        !self.flagged && self.spectral == self.barcode && self.exact.is_none_or(|e| e == self.barcode)
    }
}

/// Spectral nullity, barcode count and exact-rank Betti number for every
/// `(q, α, p)` combination.
pub fn triple_agreement(
    complex: &FilteredComplex,
    q_list: &[usize],
    alphas: &[f64],
    p_list: &[f64],
    policy: &SpectralPolicy,
) -> Vec<AgreementCell> {
    let barcode = reduce(complex);
    let mut cells = Vec::new();
    for &p in p_list {
        let records = sweep(complex, alphas, q_list, p, policy);
        let exact: Vec<Option<usize>> =
            records.par_iter().map(|r| exact_rank_betti(complex, r.q, r.alpha, p).ok()).collect();
        for (r, e) in records.into_iter().zip(exact) {
            cells.push(AgreementCell {
                q: r.q,
                alpha: r.alpha,
                p,
                spectral: r.betti,
                barcode: betti_from_barcode(&barcode, r.q, r.alpha, p),
                exact: e,
                flagged: !r.flags.is_empty(),
            });
        }
    }
    cells
}
