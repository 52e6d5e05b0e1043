use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: expected {expected} bytes for the given dimensions, found {found}", path.display())]
    SizeMismatch { path: PathBuf, expected: u64, found: u64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid dimensions {nrows}x{ncols}: need at least 2x2")]
    InvalidDimensions { nrows: usize, ncols: usize },

    #[error("NODATA value -32768 at post ({row}, {col})")]
    NoData { row: usize, col: usize },

    #[error("elevation {0} does not fit in a signed 16-bit integer")]
    ElevationOutOfRange(i32),

    #[error("invalid elevation range: zmin {zmin} > zmax {zmax}")]
    InvalidRange { zmin: i32, zmax: i32 },

    #[error("posts ({}, {}) and ({}, {}) are not adjacent", p.0, p.1, q.0, q.1)]
    NotAdjacent { p: (usize, usize), q: (usize, usize) },

    #[error("point ({row}, {col}) lies outside the {nrows}x{ncols} grid")]
    OffGrid {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("viewshed window {row0}+{height} x {col0}+{width} exceeds the {nrows}x{ncols} terrain")]
    WindowOutOfBounds {
        row0: usize,
        col0: usize,
        height: usize,
        width: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
