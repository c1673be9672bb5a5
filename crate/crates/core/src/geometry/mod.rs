//! Point sets, exact geometric predicates, circumspheres and Delaunay
//! tessellations in two and three dimensions.

mod circumsphere;
mod delaunay;
pub(crate) mod predicates;

use thiserror::Error;

use crate::complex::Simplex;

pub use circumsphere::{min_circumsphere, Circumsphere};
pub use delaunay::{audit_empty_circumspheres, delaunay};
pub use predicates::{encroaches, in_sphere, orientation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ambient dimension must be 2 or 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("point {0} has a non-finite coordinate")]
    NonFiniteCoordinate(usize),
    #[error("2D point {0} has a non-zero z coordinate")]
    NonPlanarPoint(usize),
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },
    #[error("all points are coplanar; no 3D tessellation exists")]
    AllCoplanar,
    #[error("simplex points are affinely dependent")]
    DegenerateSimplex,
}

/// Points in the plane or in space. Planar points keep a zero `z` coordinate so
/// that every algorithm can work on `[f64; 3]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<[f64; 3]>,
    labels: Option<Vec<String>>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<[f64; 3]>) -> Result<Self, GeometryError> {
        if dim != 2 && dim != 3 {
            return Err(GeometryError::UnsupportedDimension(dim));
        }
        for (i, p) in coords.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(GeometryError::NonFiniteCoordinate(i));
            }
            if dim == 2 && p[2] != 0.0 {
                return Err(GeometryError::NonPlanarPoint(i));
            }
        }
        Ok(PointSet { dim, coords, labels: None })
    }

    pub fn from_2d(coords: &[[f64; 2]]) -> Result<Self, GeometryError> {
        PointSet::new(2, coords.iter().map(|p| [p[0], p[1], 0.0]).collect())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, GeometryError> {
        if labels.len() != self.coords.len() {
            return Err(GeometryError::LabelCount { expected: self.coords.len(), got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64; 3] {
        &self.coords[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist_sq(&self.coords[i], &self.coords[j]).sqrt()
    }

    /// Coordinates of the vertices of `simplex`, in vertex order.
    pub fn simplex_points(&self, simplex: &Simplex) -> Vec<[f64; 3]> {
        simplex.vertices().iter().map(|&v| self.coords[v as usize]).collect()
    }
}

/// A Delaunay tessellation: every simplex of the final complex, lexicographically
/// sorted per dimension. Filtration values are attached by
/// [`crate::alpha::assign_filtration`].
#[derive(Clone, Debug, PartialEq)]
pub struct Tessellation {
    pub ambient_dim: usize,
    pub simplices: Vec<Vec<Simplex>>,
}

impl Tessellation {
    pub fn simplices(&self, dim: usize) -> &[Simplex] {
        self.simplices.get(dim).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, dim: usize) -> usize {
        self.simplices(dim).len()
    }

    /// Highest dimension with at least one simplex.
    pub fn top_dim(&self) -> usize {
        self.simplices.iter().rposition(|s| !s.is_empty()).unwrap_or(0)
    }
}

pub(crate) fn dist_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum()
}
