//! Inputs shared by the criterion benchmarks.

use pslap_core::alpha::assign_filtration;
use pslap_core::geometry::delaunay;
use pslap_core::{FilteredComplex, PointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` uniform points in the unit cube (or square when `dim == 2`).
pub fn uniform_cloud(seed: u64, n: usize, dim: usize) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n)
        .map(|_| {
            let mut p = [0.0; 3];
            for c in p.iter_mut().take(dim) {
                *c = rng.random::<f64>();
            }
            p
        })
        .collect();
    PointSet::new(dim, coords).expect("random points are distinct")
}

pub fn filtration(points: &PointSet) -> FilteredComplex {
    let tess = delaunay(points, 0).expect("tessellation");
    assign_filtration(&tess, points).expect("filtration")
}

/// `count` evenly spaced scales strictly inside the filtration span.
pub fn scale_grid(complex: &FilteredComplex, count: usize) -> Vec<f64> {
    let top = pslap_core::alpha::critical_alphas(complex).last().copied().unwrap_or(1.0);
    (1..=count).map(|i| top * i as f64 / (count + 1) as f64).collect()
}
