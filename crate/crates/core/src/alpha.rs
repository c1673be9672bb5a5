//! Alpha filtration values on a Delaunay tessellation.
//!
//! Top-dimensional simplices get their squared circumradius. Going down one
//! dimension at a time, a face is *attached* when the opposite vertex of one
//! of its cofaces lies strictly inside its smallest circumsphere (the face is
//! not Gabriel); an attached face enters together with its earliest coface,
//! any other face enters at its own squared circumradius. Vertices enter at 0.

use std::collections::HashMap;

use thiserror::Error;

use crate::complex::{from_layers, FilteredComplex, Simplex};
use crate::geometry::predicates::encroaches_refs;
use crate::geometry::{min_circumsphere, GeometryError, PointSet, Tessellation};
use crate::MAX_DIM;

/// Faces whose own value exceeds a coface's value by less than this relative
/// amount are rounding artefacts of the circumradius formulas and are clamped.
const MONOTONE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiltrationError {
    #[error("tessellation has {tessellation} vertices but the point set has {points}")]
    VertexCountMismatch { tessellation: usize, points: usize },
    #[error("filtration value of {face} exceeds that of its coface {coface}")]
    NotADelaunayComplex { face: Simplex, coface: Simplex },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn simplex_refs<'a>(points: &'a PointSet, s: &Simplex) -> Vec<&'a [f64; 3]> {
    s.vertices().iter().map(|&v| points.point(v as usize)).collect()
}

/// Whether no input point lies strictly inside the smallest circumsphere of
/// `simplex`. Vertices are always Gabriel.
pub fn is_gabriel(points: &PointSet, simplex: &Simplex) -> bool {
    let face = simplex_refs(points, simplex);
    if face.len() == 1 {
        return true;
    }
    if face.len() > 3 {
        let sphere = match min_circumsphere(&points.simplex_points(simplex)) {
            Ok(s) => s,
            Err(_) => return false,
        };
        return points.coords().iter().enumerate().all(|(i, p)| {
            simplex.vertices().contains(&(i as u32))
                || crate::geometry::dist_sq(p, &sphere.center) >= sphere.radius_sq * (1.0 - 1e-12)
        });
    }
    points
        .coords()
        .iter()
        .enumerate()
        .all(|(i, p)| simplex.vertices().contains(&(i as u32)) || !encroaches_refs(&face, p))
}

/// Assigns alpha filtration values (squared) to every simplex of a Delaunay
/// tessellation of `points`.
pub fn assign_filtration(tess: &Tessellation, points: &PointSet) -> Result<FilteredComplex, FiltrationError> {
    if tess.count(0) != points.len() {
        return Err(FiltrationError::VertexCountMismatch { tessellation: tess.count(0), points: points.len() });
    }
    let top = tess.top_dim();
    let mut layers: Vec<HashMap<Simplex, f64>> = vec![HashMap::new(); MAX_DIM + 1];
    // (coface value, opposite vertex) for every face of the dimension below.
    let mut cofaces: HashMap<Simplex, Vec<(f64, u32)>> = HashMap::new();
    for dim in (0..=top).rev() {
        let mut next: HashMap<Simplex, Vec<(f64, u32)>> = HashMap::new();
        for s in tess.simplices(dim) {
            let value = if dim == 0 {
                0.0
            } else {
                let own = || min_circumsphere(&points.simplex_points(s)).map(|c| c.radius_sq);
                match cofaces.get(s) {
                    Some(cof) => {
                        let face = simplex_refs(points, s);
                        let attached = cof.iter().any(|&(_, v)| encroaches_refs(&face, points.point(v as usize)));
                        if attached {
                            cof.iter().map(|c| c.0).fold(f64::INFINITY, f64::min)
                        } else {
                            own()?
                        }
                    }
                    None => own()?,
                }
            };
            layers[dim].insert(*s, value);
            for (face, opposite, _) in s.facets() {
                next.entry(face).or_default().push((value, opposite));
            }
        }
        cofaces = next;
    }
    enforce_monotone(&mut layers)?;
    Ok(from_layers(layers))
}

fn enforce_monotone(layers: &mut [HashMap<Simplex, f64>]) -> Result<(), FiltrationError> {
    for dim in (1..layers.len()).rev() {
        let (lower, upper) = layers.split_at_mut(dim);
        for (s, &v) in upper[0].iter() {
            for (face, _, _) in s.facets() {
                let fv = lower[dim - 1].get_mut(&face).expect("tessellation is closed under faces");
                if *fv > v {
                    if *fv - v > MONOTONE_REL_TOL * v.abs() {
                        return Err(FiltrationError::NotADelaunayComplex { face, coface: *s });
                    }
                    *fv = v;
                }
            }
        }
    }
    Ok(())
}

/// Sorted distinct `α = sqrt(value)` over all simplices: the only scales at
/// which any snapshot changes.
pub fn critical_alphas(complex: &FilteredComplex) -> Vec<f64> {
    complex.distinct_values_sq().into_iter().map(f64::sqrt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::delaunay;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: &[u32]) -> Simplex {
        Simplex::new(v).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    fn filtered(points: &PointSet) -> FilteredComplex {
        assign_filtration(&delaunay(points, 0).unwrap(), points).unwrap()
    }

    #[test]
    fn gabriel_examples() {
        let p = PointSet::from_2d(&[[0., 0.], [2., 0.], [1., 5.]]).unwrap();
        assert!(is_gabriel(&p, &s(&[0, 1])));
        let p = PointSet::from_2d(&[[0., 0.], [4., 0.], [2., 0.5]]).unwrap();
        assert!(!is_gabriel(&p, &s(&[0, 1])));
        assert!(is_gabriel(&p, &s(&[0, 2])));
        assert!(is_gabriel(&p, &s(&[2])));
    }

    #[test]
    fn equilateral_triangle_values() {
        let h = 3f64.sqrt() / 2.0;
        let p = PointSet::from_2d(&[[0., 0.], [1., 0.], [0.5, h]]).unwrap();
        let c = filtered(&p);
        assert!(c.values_sq(0).iter().all(|&v| v == 0.0));
        assert!(c.values_sq(1).iter().all(|&v| close(v, 0.25)));
        assert!(close(c.values_sq(2)[0], 1.0 / 3.0));
        let alphas = critical_alphas(&c);
        assert_eq!(alphas.len(), 3);
        assert_eq!(alphas[0], 0.0);
        assert!(close(alphas[1], 0.5));
        assert!(close(alphas[2], (1.0f64 / 3.0).sqrt()));
    }

    #[test]
    fn obtuse_triangle_long_edge_inherits() {
        let p = PointSet::from_2d(&[[0., 0.], [4., 0.], [2., 0.5]]).unwrap();
        let c = filtered(&p);
        assert!(close(c.value_sq(&s(&[0, 1, 2])).unwrap(), 18.0625));
        assert_eq!(c.value_sq(&s(&[0, 1])), c.value_sq(&s(&[0, 1, 2])));
        assert!(close(c.value_sq(&s(&[0, 2])).unwrap(), 4.25 / 4.0));
    }

    #[test]
    fn single_edge_critical_values() {
        let p = PointSet::from_2d(&[[0., 0.], [2., 0.]]).unwrap();
        assert_eq!(critical_alphas(&filtered(&p)), vec![0.0, 1.0]);
    }

    fn random_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> PointSet {
        let coords = (0..n)
            .map(|_| {
                let mut p = [0.0; 3];
                for x in p.iter_mut().take(d) {
                    *x = rng.random_range(-1.0..1.0);
                }
                p
            })
            .collect();
        PointSet::new(d, coords).unwrap()
    }

    fn subsets(n: u32, k: usize) -> Vec<Vec<u32>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for rest in subsets(n, k - 1) {
            let start = rest.last().map_or(0, |&x| x + 1);
            for v in start..n {
                let mut r = rest.clone();
                r.push(v);
                out.push(r);
            }
        }
        out
    }

    /// Alpha value straight from the nerve definition: the smallest radius at
    /// which some point is equidistant from the simplex's vertices with no
    /// input point closer. Such a point is the smallest-circumsphere center of
    /// some superset whose ball is empty.
    fn brute_force_alpha_sq(points: &PointSet) -> HashMap<Simplex, f64> {
        let n = points.len() as u32;
        let mut feasible = Vec::new();
        for k in 1..=points.dim() + 1 {
            for verts in subsets(n, k) {
                let tau = s(&verts);
                let Ok(sphere) = min_circumsphere(&points.simplex_points(&tau)) else { continue };
                let empty = (0..n).filter(|i| !verts.contains(i)).all(|i| {
                    crate::geometry::dist_sq(points.point(i as usize), &sphere.center) > sphere.radius_sq
                });
                if empty {
                    feasible.push((tau, sphere.radius_sq));
                }
            }
        }
        let mut out: HashMap<Simplex, f64> = HashMap::new();
        for (tau, r) in feasible {
            for face in tau.all_faces() {
                let e = out.entry(face).or_insert(r);
                *e = e.min(r);
            }
        }
        out
    }

    #[test]
    fn matches_nerve_definition_on_small_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..40 {
            let d = 2 + trial % 2;
            let n = rng.random_range(d + 2..=12);
            let p = random_points(n, d, &mut rng);
            let c = filtered(&p);
            let oracle = brute_force_alpha_sq(&p);
            let total: usize = (0..=3).map(|q| c.count(q)).sum();
            assert_eq!(total, oracle.len(), "trial {trial}: simplex sets differ");
            for (simplex, expected) in oracle {
                let got = c.value_sq(&simplex).unwrap_or_else(|| panic!("missing {simplex}"));
                assert!((got - expected).abs() <= 1e-9 * expected.max(1.0), "{simplex}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn gabriel_simplices_keep_their_circumradius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_points(25, 3, &mut rng);
        let c = filtered(&p);
        for q in 1..=2 {
            for (simplex, &v) in c.simplices(q).iter().zip(c.values_sq(q)) {
                let r = min_circumsphere(&p.simplex_points(simplex)).unwrap().radius_sq;
                if is_gabriel(&p, simplex) {
                    assert!((v - r).abs() <= 1e-12 * r);
                } else {
                    assert!(v > r);
                }
            }
        }
    }

    #[test]
    fn rejects_mismatched_points() {
        let p = PointSet::from_2d(&[[0., 0.], [2., 0.]]).unwrap();
        let t = delaunay(&p, 0).unwrap();
        let q = PointSet::from_2d(&[[0., 0.]]).unwrap();
        assert!(matches!(assign_filtration(&t, &q), Err(FiltrationError::VertexCountMismatch { .. })));
    }
}
