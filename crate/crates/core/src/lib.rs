//! Persistent Laplacian spectra of alpha-complex filtrations.
//!
//! The pipeline runs point cloud → Delaunay tessellation → alpha filtration →
//! boundary operators → persistent Laplacians → spectra. The harmonic part of
//! each spectrum (the multiplicity of zero) is a persistent Betti number, and
//! the smallest non-zero eigenvalue tracks geometric change across scales.
//!
//! An independent persistent-homology oracle ([`oracle`]) recomputes the same
//! Betti numbers by Z2 column reduction and by exact integer rank formulas, so
//! every spectral result can be cross-checked.
//!
//! ```
//! use pslap_core::{alpha, geometry::{delaunay, PointSet}, spectra};
//!
//! let points = PointSet::new(2, vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
//! let tess = delaunay(&points, 0).unwrap();
//! let complex = alpha::assign_filtration(&tess, &points).unwrap();
//! let alphas = alpha::critical_alphas(&complex);
//! let records = spectra::sweep(&complex, &alphas, &[0, 1], 0.0, &Default::default());
//! assert_eq!(records.last().unwrap().betti, 0);
//! ```

pub mod alpha;
pub mod boundary;
pub mod complex;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod spectra;

pub use boundary::{BoundaryOperators, PersistentBoundary, ProjectionMethod, SparseBoundaryMatrix};
pub use complex::{build_complex, euler_characteristic, FilteredComplex, Simplex, Snapshot};
pub use error::Error;
pub use geometry::{Circumsphere, PointSet, Tessellation};
pub use oracle::{Bar, Barcode};
pub use spectra::{PersistentLaplacian, RecordFlag, SpectralPolicy, SpectrumRecord};

/// Largest simplex dimension handled anywhere in the crate.
pub const MAX_DIM: usize = 3;
