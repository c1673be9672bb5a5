//! Reading point clouds and writing spectra as CSV, JSON and SVG.

mod points;
mod records;
mod svg;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::GeometryError;

pub use points::{parse_pdb_ca, parse_xyz, read_pdb_ca, read_xyz};
pub use records::{
    format_g, format_spectra_csv, parse_spectra_csv, read_spectra_csv, spectra_json, write_spectra_csv,
    write_spectra_json, GridSpec, RunInfo, CSV_HEADER,
};
pub use svg::{curves_svg, write_curves_svg, CurveStyle};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} coordinates, found {found}")]
    MixedDimensions { line: usize, expected: usize, found: usize },
    #[error("no alpha carbon ATOM records found")]
    NoCAAtoms,
    #[error("records span several homology orders ({first} and {other})")]
    MixedOrders { first: usize, other: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("json encoding failed: {0}")]
    Json(#[from] serde_json::Error),
}

fn read_text(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_owned(), source })
}

fn write_text(path: &Path, text: &str) -> Result<(), DataError> {
    std::fs::write(path, text).map_err(|source| DataError::Io { path: path.to_owned(), source })
}
