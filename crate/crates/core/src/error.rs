use thiserror::Error;

use crate::{
    alpha::FiltrationError, boundary::BoundaryError, complex::ComplexError,
    geometry::GeometryError, io::DataError, oracle::OracleError, spectra::SpectraError,
};

/// Umbrella error for callers driving the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Filtration(#[from] FiltrationError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Data(#[from] DataError),
}
