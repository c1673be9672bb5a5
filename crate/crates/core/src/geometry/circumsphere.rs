use super::predicates::{collinear, orient_sign};
use super::{dist_sq, GeometryError};

/// Smallest sphere through the vertices of a simplex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circumsphere {
    pub center: [f64; 3],
    pub radius_sq: f64,
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scaled_sum(terms: &[(f64, [f64; 3])], denom: f64) -> [f64; 3] {
    std::array::from_fn(|k| terms.iter().map(|(s, v)| s * v[k]).sum::<f64>() / denom)
}

/// Smallest sphere through one to four affinely independent points; for fewer
/// points than the ambient dimension allows, its center lies in their affine
/// hull. Planar input uses `z = 0`.
pub fn min_circumsphere(points: &[[f64; 3]]) -> Result<Circumsphere, GeometryError> {
    let a = points.first().ok_or(GeometryError::DegenerateSimplex)?;
    let offset = match points.len() {
        1 => [0.0; 3],
        2 => {
            if points[0] == points[1] {
                return Err(GeometryError::DegenerateSimplex);
            }
            sub(&points[1], a).map(|x| 0.5 * x)
        }
        3 => {
            if collinear(a, &points[1], &points[2]) {
                return Err(GeometryError::DegenerateSimplex);
            }
            let u = sub(&points[1], a);
            let v = sub(&points[2], a);
            let n = cross(&u, &v);
            let w = scaled_sum(&[(dot(&u, &u), v), (-dot(&v, &v), u)], 1.0);
            cross(&w, &n).map(|x| x / (2.0 * dot(&n, &n)))
        }
        4 => {
            let refs: Vec<&[f64; 3]> = points.iter().collect();
            if orient_sign(&refs) == 0 {
                return Err(GeometryError::DegenerateSimplex);
            }
            let u = sub(&points[1], a);
            let v = sub(&points[2], a);
            let w = sub(&points[3], a);
            let vw = cross(&v, &w);
            let denom = 2.0 * dot(&u, &vw);
            scaled_sum(
                &[(dot(&u, &u), vw), (dot(&v, &v), cross(&w, &u)), (dot(&w, &w), cross(&u, &v))],
                denom,
            )
        }
        _ => return Err(GeometryError::DegenerateSimplex),
    };
    let center = [a[0] + offset[0], a[1] + offset[1], a[2] + offset[2]];
    Ok(Circumsphere { center, radius_sq: dot(&offset, &offset) })
}

impl Circumsphere {
    /// Largest relative deviation of the squared distances from `points` to
    /// the center; a consistency diagnostic.
    pub fn equidistance_error(&self, points: &[[f64; 3]]) -> f64 {
        let scale = self.radius_sq.max(f64::MIN_POSITIVE);
        points.iter().map(|p| (dist_sq(p, &self.center) - self.radius_sq).abs() / scale).fold(0.0, f64::max)
    }
}
