#![allow(dead_code)]

use std::path::PathBuf;

use pslap_core::alpha::assign_filtration;
use pslap_core::geometry::delaunay;
use pslap_core::{io, FilteredComplex, PointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn filtration(points: &PointSet) -> FilteredComplex {
    let tess = delaunay(points, 0).expect("tessellation");
    assign_filtration(&tess, points).expect("filtration")
}

pub fn load(name: &str) -> (PointSet, FilteredComplex) {
    let points = io::read_xyz(fixture(name)).expect("fixture parses");
    let complex = filtration(&points);
    (points, complex)
}

/// Uniform points in the unit square or cube.
pub fn random_cloud(seed: u64, n: usize, dim: usize) -> PointSet {
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
    PointSet::new(dim, coords).unwrap()
}

/// Every xyz fixture, with its name.
pub fn all_xyz_fixtures() -> Vec<(&'static str, PointSet, FilteredComplex)> {
    ["six_point.xyz", "icosahedron.xyz", "chain_defect.xyz", "chain_clean.xyz", "pair.xyz", "path3.xyz"]
        .into_iter()
        .map(|name| {
            let (p, c) = load(name);
            (name, p, c)
        })
        .collect()
}

pub fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
    }
}
