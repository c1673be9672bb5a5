//! Incremental Bowyer–Watson Delaunay tessellation.
//!
//! The convex hull is closed off by cells through a symbolic vertex at
//! infinity, so every insertion (inside or outside the current hull) is the
//! same cavity retriangulation. All cells are stored positively oriented; an
//! infinite cell behaves as if its infinite vertex were a point far beyond its
//! hull facet. Points are inserted in Morton order and located by a visibility
//! walk from the most recently created cell.
//!
//! Ties of the in-sphere predicate are broken by a symbolic perturbation that
//! ranks points by index (or by a seeded permutation of the indices), so
//! cospherical inputs still produce a deterministic triangulation.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::predicates::{collinear, in_sphere_oriented, orient_sign};
use super::{GeometryError, PointSet, Tessellation};
use crate::complex::Simplex;
use crate::MAX_DIM;

const INF: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Cell {
    v: [u32; 4],
    n: [u32; 4],
    alive: bool,
}

struct Triangulation<'a> {
    d: usize,
    pts: &'a [[f64; 3]],
    rank: Vec<u32>,
    cells: Vec<Cell>,
    free: Vec<u32>,
    /// Per-cell visit stamp: `2 * generation` for cavity cells and
    /// `2 * generation + 1` for cells known to be outside the cavity.
    stamp: Vec<u64>,
    generation: u64,
    last: u32,
    rng: ChaCha8Rng,
    facet_links: HashMap<[u32; 3], (u32, usize)>,
}

impl<'a> Triangulation<'a> {
    fn new(d: usize, pts: &'a [[f64; 3]], rank: Vec<u32>, initial: &[u32]) -> Self {
        let mut t = Triangulation {
            d,
            pts,
            rank,
            cells: Vec::new(),
            free: Vec::new(),
            stamp: Vec::new(),
            generation: 0,
            last: 0,
            rng: ChaCha8Rng::seed_from_u64(0x5eed),
            facet_links: HashMap::new(),
        };
        let mut v = [NONE; 4];
        v[..=d].copy_from_slice(initial);
        if t.orient(&v) < 0 {
            v.swap(0, 1);
        }
        let first = t.alloc(v);
        let mut created = vec![first];
        for i in 0..=d {
            let mut w = v;
            w[i] = INF;
            // Facet i seen from outside: swap two finite vertices to flip orientation.
            let (a, b) = if i == 0 { (1, 2) } else if i == 1 { (0, 2) } else { (0, 1) };
            w.swap(a, b);
            created.push(t.alloc(w));
        }
        t.link(&created);
        t.last = first;
        t
    }

    fn alloc(&mut self, v: [u32; 4]) -> u32 {
        let cell = Cell { v, n: [NONE; 4], alive: true };
        if let Some(c) = self.free.pop() {
            self.cells[c as usize] = cell;
            c
        } else {
            self.cells.push(cell);
            self.stamp.push(0);
            (self.cells.len() - 1) as u32
        }
    }

    /// Facet key of `cell` opposite slot `i`: the other vertices, sorted.
    fn facet_key(&self, v: &[u32; 4], i: usize) -> [u32; 3] {
        let mut key = [NONE; 3];
        let mut k = 0;
        for (j, &x) in v[..=self.d].iter().enumerate() {
            if j != i {
                key[k] = x;
                k += 1;
            }
        }
        key[..self.d].sort_unstable();
        key
    }

    /// Pairs up unset neighbour slots of `cells` that share a facet.
    fn link(&mut self, cells: &[u32]) {
        self.facet_links.clear();
        for &c in cells {
            let v = self.cells[c as usize].v;
            for i in 0..=self.d {
                if self.cells[c as usize].n[i] != NONE {
                    continue;
                }
                let key = self.facet_key(&v, i);
                if let Some((o, j)) = self.facet_links.remove(&key) {
                    self.cells[c as usize].n[i] = o;
                    self.cells[o as usize].n[j] = c;
                } else {
                    self.facet_links.insert(key, (c, i));
                }
            }
        }
        debug_assert!(self.facet_links.is_empty(), "unmatched facets after linking");
    }

    fn point(&self, v: u32) -> &'a [f64; 3] {
        &self.pts[v as usize]
    }

    fn orient(&self, v: &[u32; 4]) -> i8 {
        let refs: Vec<&[f64; 3]> = v[..=self.d].iter().map(|&x| self.point(x)).collect();
        orient_sign(&refs)
    }

    fn infinite_slot(&self, c: u32) -> Option<usize> {
        self.cells[c as usize].v[..=self.d].iter().position(|&x| x == INF)
    }

    fn conflict(&self, c: u32, p: u32) -> bool {
        match self.infinite_slot(c) {
            Some(k) => {
                let mut v = self.cells[c as usize].v;
                v[k] = p;
                match self.orient(&v) {
                    0 => self.finite_conflict(self.cells[c as usize].n[k], p),
                    o => o > 0,
                }
            }
            None => self.finite_conflict(c, p),
        }
    }

    fn finite_conflict(&self, c: u32, p: u32) -> bool {
        let v = self.cells[c as usize].v;
        let refs: Vec<&[f64; 3]> = v[..=self.d].iter().map(|&x| self.point(x)).collect();
        match in_sphere_oriented(&refs, self.point(p), 1) {
            0 => self.perturbed_conflict(&v, p),
            s => s > 0,
        }
    }

    /// Sign of the in-sphere determinant after perturbing the points by
    /// infinitesimals ordered by rank: the leading non-vanishing term is an
    /// orientation with the highest-ranked point replaced by the query.
    fn perturbed_conflict(&self, v: &[u32; 4], p: u32) -> bool {
        let mut order: Vec<(u32, usize)> =
            (0..=self.d).map(|i| (self.rank[v[i] as usize], i)).collect();
        order.push((self.rank[p as usize], self.d + 1));
        order.sort_unstable_by(|a, b| b.cmp(a));
        for &(_, slot) in &order {
            if slot == self.d + 1 {
                return false;
            }
            let mut w = *v;
            w[slot] = p;
            match self.orient(&w) {
                0 => continue,
                o => return o > 0,
            }
        }
        false
    }

    fn locate(&mut self, p: u32) -> u32 {
        let mut c = self.last;
        if let Some(k) = self.infinite_slot(c) {
            c = self.cells[c as usize].n[k];
        }
        let limit = 4 * self.cells.len() + 16;
        for _ in 0..limit {
            if self.infinite_slot(c).is_some() {
                return c;
            }
            let start = self.rng.random_range(0..=self.d);
            let cell = self.cells[c as usize];
            let exit = (0..=self.d).map(|k| (start + k) % (self.d + 1)).find(|&i| {
                let mut w = cell.v;
                w[i] = p;
                self.orient(&w) < 0
            });
            match exit {
                Some(i) => c = cell.n[i],
                None => return c,
            }
        }
        (0..self.cells.len() as u32)
            .find(|&c| self.cells[c as usize].alive && self.conflict(c, p))
            .expect("an inserted point conflicts with at least one cell")
    }

    fn insert(&mut self, p: u32) {
        let start = self.locate(p);
        self.generation += 1;
        let inside = 2 * self.generation;
        let outside = inside + 1;
        self.stamp[start as usize] = inside;
        let mut stack = vec![start];
        let mut cavity = Vec::new();
        let mut boundary = Vec::new();
        while let Some(c) = stack.pop() {
            cavity.push(c);
            for i in 0..=self.d {
                let nb = self.cells[c as usize].n[i];
                let s = self.stamp[nb as usize];
                if s == inside {
                    continue;
                }
                if s != outside && self.conflict(nb, p) {
                    self.stamp[nb as usize] = inside;
                    stack.push(nb);
                } else {
                    self.stamp[nb as usize] = outside;
                    boundary.push((c, i));
                }
            }
        }
        let mut created = Vec::with_capacity(boundary.len());
        for &(c, i) in &boundary {
            let old = self.cells[c as usize];
            let mut v = old.v;
            v[i] = p;
            let nc = self.alloc(v);
            let outer = old.n[i];
            self.cells[nc as usize].n[i] = outer;
            let back = self.cells[outer as usize].n[..=self.d]
                .iter()
                .position(|&x| x == c)
                .expect("neighbour relation is symmetric");
            self.cells[outer as usize].n[back] = nc;
            created.push(nc);
        }
        for &c in &cavity {
            self.cells[c as usize].alive = false;
            self.free.push(c);
        }
        self.link(&created);
        self.last = created
            .iter()
            .copied()
            .find(|&c| self.infinite_slot(c).is_none())
            .unwrap_or(created[0]);
    }

    fn finite_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.alive && !c.v[..=self.d].contains(&INF))
    }

    #[cfg(test)]
    fn check_structure(&self) {
        for (ci, cell) in self.cells.iter().enumerate().filter(|(_, c)| c.alive) {
            for i in 0..=self.d {
                let nb = &self.cells[cell.n[i] as usize];
                assert!(nb.alive, "cell {ci} points to a dead neighbour");
                assert!(nb.n[..=self.d].contains(&(ci as u32)), "asymmetric adjacency at {ci}");
            }
            if !cell.v[..=self.d].contains(&INF) {
                assert_eq!(self.orient(&cell.v), 1, "cell {ci} not positively oriented");
            }
        }
    }
}

/// Bit-interleaved quantized coordinates, used to insert nearby points
/// consecutively.
fn morton_order(pts: &[[f64; 3]], d: usize, ids: &mut [u32]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in ids.iter() {
        for k in 0..d {
            lo[k] = lo[k].min(pts[i as usize][k]);
            hi[k] = hi[k].max(pts[i as usize][k]);
        }
    }
    let bits = if d == 2 { 16 } else { 10 };
    let scale = ((1u64 << bits) - 1) as f64;
    let code = |p: &[f64; 3]| -> u64 {
        let mut q = [0u64; 3];
        for k in 0..d {
            let span = hi[k] - lo[k];
            q[k] = if span > 0.0 { ((p[k] - lo[k]) / span * scale) as u64 } else { 0 };
        }
        let mut out = 0u64;
        for b in (0..bits).rev() {
            for qk in q.iter().take(d) {
                out = (out << 1) | ((qk >> b) & 1);
            }
        }
        out
    };
    ids.sort_by_key(|&i| (code(&pts[i as usize]), i));
}

fn lex_cmp(a: &[f64; 3], b: &[f64; 3]) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2]))
}

fn tessellation_from_tops(ambient_dim: usize, tops: impl Iterator<Item = Simplex>, n: usize) -> Tessellation {
    let mut simplices: Vec<Vec<Simplex>> = vec![Vec::new(); MAX_DIM + 1];
    simplices[0] = (0..n as u32).map(Simplex::vertex).collect();
    for top in tops {
        for face in top.all_faces() {
            if face.dim() > 0 {
                simplices[face.dim()].push(face);
            }
        }
    }
    for layer in simplices.iter_mut() {
        layer.sort_unstable();
        layer.dedup();
    }
    Tessellation { ambient_dim, simplices }
}

/// Delaunay tessellation of `points`.
///
/// Cospherical configurations are resolved by symbolic perturbation; `seed`
/// selects the perturbation order (0 ranks points by index). Inputs of lower
/// affine dimension are handled as far as a canonical answer exists: a single
/// point, collinear points (joined into a path in order along the line), or
/// `k ≤ d` affinely independent points (a single simplex). Coplanar point sets
/// of four or more points in 3D are rejected.
pub fn delaunay(points: &PointSet, seed: u64) -> Result<Tessellation, GeometryError> {
    let n = points.len();
    let d = points.dim();
    let pts = points.coords();
    if n == 0 {
        return Err(GeometryError::EmptyPointSet);
    }
    let mut sorted: Vec<u32> = (0..n as u32).collect();
    sorted.sort_by(|&a, &b| lex_cmp(&pts[a as usize], &pts[b as usize]).then(a.cmp(&b)));
    if let Some(w) = sorted.windows(2).find(|w| pts[w[0] as usize] == pts[w[1] as usize]) {
        return Err(GeometryError::DuplicatePoint { first: w[0] as usize, second: w[1] as usize });
    }
    if n == 1 {
        return Ok(tessellation_from_tops(d, std::iter::empty(), 1));
    }

    let (p0, p1) = (&pts[0], &pts[1]);
    let Some(i2) = (2..n).find(|&k| !collinear(p0, p1, &pts[k])) else {
        let path = sorted.windows(2).map(|w| Simplex::new(w).expect("distinct vertices"));
        return Ok(tessellation_from_tops(d, path, n));
    };
    let mut basis = vec![0u32, 1, i2 as u32];
    if d == 3 {
        let p2 = &pts[i2];
        match (2..n).find(|&k| orient_sign(&[p0, p1, p2, &pts[k]]) != 0) {
            Some(i3) => basis.push(i3 as u32),
            None if n == 3 => {
                return Ok(tessellation_from_tops(d, std::iter::once(Simplex::new(&basis).unwrap()), n));
            }
            None => return Err(GeometryError::AllCoplanar),
        }
    }

    let rank: Vec<u32> = if seed == 0 {
        (0..n as u32).collect()
    } else {
        let mut r: Vec<u32> = (0..n as u32).collect();
        r.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        r
    };
    let mut rest: Vec<u32> = (0..n as u32).filter(|i| !basis.contains(i)).collect();
    morton_order(pts, d, &mut rest);

    let mut tri = Triangulation::new(d, pts, rank, &basis);
    for &p in &rest {
        tri.insert(p);
    }
    #[cfg(test)]
    tri.check_structure();

    let tops = tri.finite_cells().map(|c| Simplex::new(&c.v[..=d]).expect("distinct vertices"));
    Ok(tessellation_from_tops(d, tops.collect::<Vec<_>>().into_iter(), n))
}

/// Checks the empty-circumsphere property of every full-dimensional simplex
/// against every input point with the exact, unperturbed predicate. Returns
/// the first simplex whose open circumsphere contains a point.
pub fn audit_empty_circumspheres(tess: &Tessellation, points: &PointSet) -> Result<(), (Simplex, usize)> {
    let d = points.dim();
    for top in tess.simplices(d) {
        let refs: Vec<&[f64; 3]> = top.vertices().iter().map(|&v| points.point(v as usize)).collect();
        let o = orient_sign(&refs);
        for (i, q) in points.coords().iter().enumerate() {
            if top.vertices().contains(&(i as u32)) {
                continue;
            }
            if o == 0 || in_sphere_oriented(&refs, q, o) > 0 {
                return Err((*top, i));
            }
        }
    }
    Ok(())
}
