//! Orientation, in-sphere and encroachment predicates.
//!
//! Each predicate is a polynomial in the input coordinates written once over a
//! small [`Num`] trait. It is first evaluated in floating point together with
//! a running magnitude bound; when the result is too close to zero for the
//! bound to certify its sign, the same polynomial is re-evaluated over exact
//! rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::GeometryError;

/// Relative error budget for the floating-point filter. The predicate
/// polynomials need a few dozen roundings, so this leaves a wide margin.
const FILTER_REL: f64 = 1e-12;
/// Below this magnitude underflow could hide rounding errors; go exact.
const FILTER_MIN_MAG: f64 = 1e-200;

trait Num: Clone {
    fn lift(x: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
}

/// A floating-point value paired with an upper bound on the magnitudes that
/// went into it (the permanent of the expression).
#[derive(Clone, Copy, Debug)]
struct Approx {
    v: f64,
    m: f64,
}

impl Num for Approx {
    fn lift(x: f64) -> Self {
        Approx { v: x, m: x.abs() }
    }
    fn add(&self, o: &Self) -> Self {
        Approx { v: self.v + o.v, m: self.m + o.m }
    }
    fn sub(&self, o: &Self) -> Self {
        Approx { v: self.v - o.v, m: self.m + o.m }
    }
    fn mul(&self, o: &Self) -> Self {
        Approx { v: self.v * o.v, m: self.m * o.m }
    }
}

impl Num for BigRational {
    fn lift(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

fn adaptive(fast: Approx, exact: impl FnOnce() -> BigRational) -> i8 {
    if fast.m.is_finite() && fast.m > FILTER_MIN_MAG && fast.v.abs() > FILTER_REL * fast.m {
        return if fast.v > 0.0 { 1 } else { -1 };
    }
    let r = exact();
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

fn det2<N: Num>(a: &N, b: &N, c: &N, d: &N) -> N {
    a.mul(d).sub(&b.mul(c))
}

fn det3<N: Num>(m: &[[N; 3]; 3]) -> N {
    let c0 = det2(&m[1][1], &m[1][2], &m[2][1], &m[2][2]);
    let c1 = det2(&m[1][0], &m[1][2], &m[2][0], &m[2][2]);
    let c2 = det2(&m[1][0], &m[1][1], &m[2][0], &m[2][1]);
    m[0][0].mul(&c0).sub(&m[0][1].mul(&c1)).add(&m[0][2].mul(&c2))
}

fn det4<N: Num>(m: &[[N; 4]; 4]) -> N {
    let minor = |skip: usize| -> N {
        let rows: [[N; 3]; 3] = std::array::from_fn(|r| {
            let row = &m[r + 1];
            let mut it = (0..4).filter(|&c| c != skip).map(|c| row[c].clone());
            std::array::from_fn(|_| it.next().unwrap())
        });
        det3(&rows)
    };
    let mut acc = m[0][0].mul(&minor(0));
    acc = acc.sub(&m[0][1].mul(&minor(1)));
    acc = acc.add(&m[0][2].mul(&minor(2)));
    acc.sub(&m[0][3].mul(&minor(3)))
}

fn diff<N: Num>(a: &[f64; 3], b: &[f64; 3], k: usize) -> N {
    N::lift(a[k]).sub(&N::lift(b[k]))
}

fn dot<N: Num>(a: &[N; 3], b: &[N; 3]) -> N {
    a[0].mul(&b[0]).add(&a[1].mul(&b[1])).add(&a[2].mul(&b[2]))
}

fn vec_diff<N: Num>(a: &[f64; 3], b: &[f64; 3]) -> [N; 3] {
    std::array::from_fn(|k| diff(a, b, k))
}

fn orient_expr<N: Num>(pts: &[&[f64; 3]]) -> N {
    let p0 = pts[0];
    match pts.len() {
        3 => det2(
            &diff(pts[1], p0, 0),
            &diff(pts[1], p0, 1),
            &diff(pts[2], p0, 0),
            &diff(pts[2], p0, 1),
        ),
        4 => {
            let m: [[N; 3]; 3] = std::array::from_fn(|i| vec_diff(pts[i + 1], p0));
            det3(&m)
        }
        n => panic!("orientation needs 3 or 4 points, got {n}"),
    }
}

fn proj_orient_expr<N: Num>(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], i: usize, j: usize) -> N {
    det2(&diff(b, a, i), &diff(b, a, j), &diff(c, a, i), &diff(c, a, j))
}

fn in_sphere_expr<N: Num>(pts: &[&[f64; 3]], q: &[f64; 3]) -> N {
    let row = |p: &[f64; 3], d: usize| -> Vec<N> {
        let mut r: Vec<N> = (0..d).map(|k| diff(p, q, k)).collect();
        let lifted = r.iter().skip(1).fold(r[0].mul(&r[0]), |acc, x| acc.add(&x.mul(x)));
        r.push(lifted);
        r
    };
    match pts.len() {
        3 => {
            let m: [[N; 3]; 3] = std::array::from_fn(|i| {
                let r = row(pts[i], 2);
                std::array::from_fn(|k| r[k].clone())
            });
            det3(&m)
        }
        4 => {
            let m: [[N; 4]; 4] = std::array::from_fn(|i| {
                let r = row(pts[i], 3);
                std::array::from_fn(|k| r[k].clone())
            });
            det4(&m)
        }
        n => panic!("in-sphere needs 3 or 4 simplex points, got {n}"),
    }
}

/// Negative iff `v` lies strictly inside the smallest sphere through the face.
fn encroach_expr<N: Num>(face: &[&[f64; 3]], v: &[f64; 3]) -> N {
    let a = face[0];
    match face.len() {
        2 => {
            let w: [N; 3] = vec_diff(v, a);
            let u: [N; 3] = vec_diff(v, face[1]);
            dot(&w, &u)
        }
        3 => {
            let e1: [N; 3] = vec_diff(face[1], a);
            let e2: [N; 3] = vec_diff(face[2], a);
            let w: [N; 3] = vec_diff(v, a);
            let g11 = dot(&e1, &e1);
            let g12 = dot(&e1, &e2);
            let g22 = dot(&e2, &e2);
            let det_g = g11.mul(&g22).sub(&g12.mul(&g12));
            // Twice the adjugate of the Gram matrix applied to (g11, g22) / 2.
            let c1 = g22.mul(&g11).sub(&g12.mul(&g22));
            let c2 = g11.mul(&g22).sub(&g12.mul(&g11));
            let proj = c1.mul(&dot(&w, &e1)).add(&c2.mul(&dot(&w, &e2)));
            det_g.mul(&dot(&w, &w)).sub(&proj)
        }
        n => panic!("encroachment is defined for edges and triangles, got {n} points"),
    }
}

pub(crate) fn orient_sign(pts: &[&[f64; 3]]) -> i8 {
    adaptive(orient_expr(pts), || orient_expr(pts))
}

/// Sign of the raw lifted determinant; see [`in_sphere`] for the oriented form.
pub(crate) fn in_sphere_raw_sign(pts: &[&[f64; 3]], q: &[f64; 3]) -> i8 {
    adaptive(in_sphere_expr(pts, q), || in_sphere_expr(pts, q))
}

/// +1 inside, −1 outside, 0 on the circumsphere, for a simplex of the given
/// orientation sign (which must be non-zero).
pub(crate) fn in_sphere_oriented(pts: &[&[f64; 3]], q: &[f64; 3], orient: i8) -> i8 {
    let parity = if pts.len() % 2 == 1 { 1 } else { -1 };
    in_sphere_raw_sign(pts, q) * orient * parity
}

/// True iff the three points lie on a common line (in 3D).
pub(crate) fn collinear(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> bool {
    [(0, 1), (0, 2), (1, 2)].iter().all(|&(i, j)| {
        adaptive(proj_orient_expr(a, b, c, i, j), || proj_orient_expr(a, b, c, i, j)) == 0
    })
}

/// Sign of the orientation determinant of `d + 1` points: three points are
/// treated as planar (x, y), four as spatial.
pub fn orientation(points: &[[f64; 3]]) -> i8 {
    let refs: Vec<&[f64; 3]> = points.iter().collect();
    orient_sign(&refs)
}

/// Whether `query` lies inside (+1), outside (−1) or on (0) the circumsphere of
/// a triangle (three planar points) or tetrahedron (four spatial points).
pub fn in_sphere(simplex: &[[f64; 3]], query: &[f64; 3]) -> Result<i8, GeometryError> {
    let refs: Vec<&[f64; 3]> = simplex.iter().collect();
    match orient_sign(&refs) {
        0 => Err(GeometryError::DegenerateSimplex),
        o => Ok(in_sphere_oriented(&refs, query, o)),
    }
}

/// Whether `v` lies strictly inside the open ball of the smallest sphere
/// through `face` (one, two or three affinely independent points).
pub fn encroaches(face: &[[f64; 3]], v: &[f64; 3]) -> bool {
    let refs: Vec<&[f64; 3]> = face.iter().collect();
    encroaches_refs(&refs, v)
}

pub(crate) fn encroaches_refs(face: &[&[f64; 3]], v: &[f64; 3]) -> bool {
    if face.len() == 1 {
        return false;
    }
    adaptive(encroach_expr(face, v), || encroach_expr(face, v)) < 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p2(x: f64, y: f64) -> [f64; 3] {
        [x, y, 0.0]
    }

    #[test]
    fn orientation_examples() {
        assert_eq!(orientation(&[p2(0., 0.), p2(1., 0.), p2(0., 1.)]), 1);
        assert_eq!(orientation(&[p2(0., 0.), p2(1., 1.), p2(2., 2.)]), 0);
        assert_eq!(orientation(&[p2(0., 0.), p2(0., 1.), p2(1., 0.)]), -1);
        let tet = [[0., 0., 0.], [1., 0., 0.], [0., 1., 0.], [0., 0., 1.]];
        assert_eq!(orientation(&tet), 1);
    }

    #[test]
    fn orientation_is_exact_near_degeneracy() {
        // The third point is one ulp off the line.
        let a = p2(0.5, 0.5);
        let b = p2(12.0, 12.0);
        let c = p2(24.0, 24.000000000000004);
        assert_eq!(orientation(&[a, b, c]), 1);
        assert_eq!(orientation(&[a, b, p2(24.0, 24.0)]), 0);
        let x = 1e-300;
        assert_eq!(orientation(&[p2(0., 0.), p2(x, 0.), p2(0., x)]), 1);
    }

    #[test]
    fn in_circle_examples() {
        let tri = [p2(0., 0.), p2(1., 0.), p2(0., 1.)];
        assert_eq!(in_sphere(&tri, &p2(1., 1.)), Ok(0));
        assert_eq!(in_sphere(&tri, &p2(0.3, 0.3)), Ok(1));
        assert_eq!(in_sphere(&tri, &p2(2., 2.)), Ok(-1));
        let flipped = [p2(0., 0.), p2(0., 1.), p2(1., 0.)];
        assert_eq!(in_sphere(&flipped, &p2(0.3, 0.3)), Ok(1));
        assert_eq!(
            in_sphere(&[p2(0., 0.), p2(1., 1.), p2(2., 2.)], &p2(0., 1.)),
            Err(GeometryError::DegenerateSimplex)
        );
    }

    #[test]
    fn in_sphere_3d_examples() {
        let tet = [[0., 0., 0.], [1., 0., 0.], [0., 1., 0.], [0., 0., 1.]];
        assert_eq!(in_sphere(&tet, &[0.1, 0.1, 0.1]), Ok(1));
        assert_eq!(in_sphere(&tet, &[1., 1., 1.]), Ok(0));
        assert_eq!(in_sphere(&tet, &[2., 2., 2.]), Ok(-1));
        let swapped = [tet[1], tet[0], tet[2], tet[3]];
        assert_eq!(in_sphere(&swapped, &[0.1, 0.1, 0.1]), Ok(1));
    }

    #[test]
    fn encroachment() {
        let edge = [p2(0., 0.), p2(2., 0.)];
        assert!(!encroaches(&edge, &p2(1., 5.)));
        assert!(encroaches(&edge, &p2(1., 0.5)));
        assert!(!encroaches(&edge, &p2(1., 1.)));
        let tri = [[0., 0., 0.], [2., 0., 0.], [0., 2., 0.]];
        // Circumcenter (1,1,0), radius √2.
        assert!(encroaches(&tri, &[1., 1., 1.]));
        assert!(!encroaches(&tri, &[1., 1., 1.5]));
        assert!(!encroaches(&tri, &[1., 1., 2f64.sqrt()]));
        assert!(!encroaches(&[[0., 0., 0.]], &[0., 0., 0.]));
    }

    #[test]
    fn collinearity_in_space() {
        assert!(collinear(&[0., 0., 0.], &[1., 2., 3.], &[2., 4., 6.]));
        assert!(!collinear(&[0., 0., 0.], &[1., 2., 3.], &[2., 4., 6.5]));
    }

    fn coord() -> impl Strategy<Value = f64> {
        (-20i32..20).prop_map(|x| x as f64 * 0.25)
    }

    fn pt3() -> impl Strategy<Value = [f64; 3]> {
        (coord(), coord(), coord()).prop_map(|(x, y, z)| [x, y, z])
    }

    fn sign_exact(m: [[f64; 3]; 3]) -> i8 {
        let r = det3(&m.map(|row| row.map(<BigRational as Num>::lift)));
        if r.is_zero() { 0 } else if r.is_positive() { 1 } else { -1 }
    }

    proptest! {
        #[test]
        fn orientation_antisymmetric(a in pt3(), b in pt3(), c in pt3(), d in pt3()) {
            let o = orientation(&[a, b, c, d]);
            prop_assert_eq!(orientation(&[b, a, c, d]), -o);
            prop_assert_eq!(orientation(&[b, c, a, d]), o);
            prop_assert_eq!(orientation(&[a, b, d, c]), -o);
        }

        #[test]
        fn orientation_matches_exact_determinant(a in pt3(), b in pt3(), c in pt3(), d in pt3()) {
            let m = [b, c, d].map(|p| [p[0] - a[0], p[1] - a[1], p[2] - a[2]]);
            prop_assert_eq!(orientation(&[a, b, c, d]), sign_exact(m));
        }

        #[test]
        fn in_sphere_invariant_under_permutation(a in pt3(), b in pt3(), c in pt3(), d in pt3(), q in pt3()) {
            prop_assume!(orientation(&[a, b, c, d]) != 0);
            let s = in_sphere(&[a, b, c, d], &q).unwrap();
            prop_assert_eq!(in_sphere(&[b, a, c, d], &q).unwrap(), s);
            prop_assert_eq!(in_sphere(&[c, d, a, b], &q).unwrap(), s);
        }

        #[test]
        fn vertices_lie_on_their_sphere(a in pt3(), b in pt3(), c in pt3(), d in pt3()) {
            prop_assume!(orientation(&[a, b, c, d]) != 0);
            for v in [a, b, c, d] {
                prop_assert_eq!(in_sphere(&[a, b, c, d], &v).unwrap(), 0);
            }
        }
    }
}
