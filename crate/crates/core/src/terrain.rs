//! Raster terrains: a row-major grid of integer elevation posts spaced one
//! unit apart in both axes.
//!
//! A post value is taken to be the terrain elevation at that exact point.
//! Between adjacent posts the terrain is linearly interpolated.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Filled DEMs never carry this value; loaders treat it as a hole.
pub const NODATA: i32 = i16::MIN as i32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub row: usize,
    pub col: usize,
}

impl GridPoint {
    pub const fn new(row: usize, col: usize) -> Self {
        GridPoint { row, col }
    }

    /// Squared 2D distance in post units.
    pub fn dist2(self, other: GridPoint) -> u64 {
        let dr = self.row.abs_diff(other.row) as u64;
        let dc = self.col.abs_diff(other.col) as u64;
        dr * dr + dc * dc
    }
}

impl From<(usize, usize)> for GridPoint {
    fn from((row, col): (usize, usize)) -> Self {
        GridPoint { row, col }
    }
}

/// Immutable elevation grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerrainGrid {
    nrows: usize,
    ncols: usize,
    elevations: Vec<i32>,
}

impl TerrainGrid {
    pub fn new(nrows: usize, ncols: usize, elevations: Vec<i32>) -> Result<Self> {
        if nrows < 2 || ncols < 2 {
            return Err(Error::InvalidDimensions { nrows, ncols });
        }
        if elevations.len() != nrows * ncols {
            return Err(Error::InvalidParam(format!(
                "{} elevations supplied for a {nrows}x{ncols} grid",
                elevations.len()
            )));
        }
        Ok(TerrainGrid {
            nrows,
            ncols,
            elevations,
        })
    }

    /// A grid with every post at elevation `z`.
    pub fn flat(nrows: usize, ncols: usize, z: i32) -> Result<Self> {
        Self::new(nrows, ncols, vec![z; nrows.saturating_mul(ncols)])
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> i32) -> Result<Self> {
        let mut elevations = Vec::with_capacity(nrows * ncols);
        for r in 0..nrows {
            for c in 0..ncols {
                elevations.push(f(r, c));
            }
        }
        Self::new(nrows, ncols, elevations)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.elevations.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.elevations.is_empty()
    }

    pub fn elevations(&self) -> &[i32] {
        &self.elevations
    }

    /// Elevation of post (row, col). Panics when off-grid.
    #[inline]
    pub fn z(&self, row: usize, col: usize) -> i32 {
        self.elevations[row * self.ncols + col]
    }

    #[inline]
    pub fn at(&self, p: GridPoint) -> i32 {
        self.z(p.row, p.col)
    }

    #[inline]
    pub fn contains(&self, p: GridPoint) -> bool {
        p.row < self.nrows && p.col < self.ncols
    }

    pub(crate) fn check(&self, p: GridPoint) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OffGrid {
                row: p.row,
                col: p.col,
                nrows: self.nrows,
                ncols: self.ncols,
            })
        }
    }

    pub fn min_elevation(&self) -> i32 {
        *self.elevations.iter().min().expect("grid is never empty")
    }

    pub fn max_elevation(&self) -> i32 {
        *self.elevations.iter().max().expect("grid is never empty")
    }

    /// Reads `nrows * ncols` little-endian `i16` posts, row 0 first.
    pub fn load_binary(path: impl AsRef<Path>, nrows: usize, ncols: usize) -> Result<Self> {
        let path = path.as_ref();
        if nrows < 2 || ncols < 2 {
            return Err(Error::InvalidDimensions { nrows, ncols });
        }
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let expected = (nrows as u64) * (ncols as u64) * 2;
        if bytes.len() as u64 != expected {
            return Err(Error::SizeMismatch {
                path: path.to_path_buf(),
                expected,
                found: bytes.len() as u64,
            });
        }
        let mut elevations = Vec::with_capacity(nrows * ncols);
        for (i, pair) in bytes.chunks_exact(2).enumerate() {
            let z = i16::from_le_bytes([pair[0], pair[1]]) as i32;
            if z == NODATA {
                return Err(Error::NoData {
                    row: i / ncols,
                    col: i % ncols,
                });
            }
            elevations.push(z);
        }
        Self::new(nrows, ncols, elevations)
    }

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::with_capacity(self.elevations.len() * 2);
        for &z in &self.elevations {
            let z16 = i16::try_from(z).map_err(|_| Error::ElevationOutOfRange(z))?;
            bytes.extend_from_slice(&z16.to_le_bytes());
        }
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Reads the text format: `nrows N ncols M` followed by `N*M`
    /// whitespace-separated integers.
    pub fn load_ascii_grid(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_ascii(&text)
    }

    pub fn parse_ascii(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + 1, t)));
        let last_line = text.lines().count().max(1);

        let mut header = |key: &str| -> Result<usize> {
            match tokens.next() {
                Some((_, t)) if t == key => {}
                Some((line, t)) => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected `{key}`, found `{t}`"),
                    })
                }
                None => {
                    return Err(Error::Parse {
                        line: last_line,
                        msg: format!("missing `{key}` in header"),
                    })
                }
            }
            match tokens.next() {
                Some((line, t)) => t.parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad {key} value `{t}`"),
                }),
                None => Err(Error::Parse {
                    line: last_line,
                    msg: format!("missing {key} value"),
                }),
            }
        };
        let nrows = header("nrows")?;
        let ncols = header("ncols")?;
        if nrows < 2 || ncols < 2 {
            return Err(Error::InvalidDimensions { nrows, ncols });
        }

        let n = nrows * ncols;
        let mut elevations = Vec::with_capacity(n);
        for (line, t) in tokens {
            if elevations.len() == n {
                return Err(Error::Parse {
                    line,
                    msg: format!("trailing value `{t}` after {n} elevations"),
                });
            }
            let z: i32 = t.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad elevation `{t}`"),
            })?;
            if z == NODATA {
                let i = elevations.len();
                return Err(Error::NoData {
                    row: i / ncols,
                    col: i % ncols,
                });
            }
            elevations.push(z);
        }
        if elevations.len() != n {
            return Err(Error::Parse {
                line: last_line,
                msg: format!("expected {n} elevations, found {}", elevations.len()),
            });
        }
        Self::new(nrows, ncols, elevations)
    }

    pub fn write_ascii(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "nrows {} ncols {}", self.nrows, self.ncols)?;
            for row in self.elevations.chunks(self.ncols) {
                let mut first = true;
                for z in row {
                    if !first {
                        w.write_all(b" ")?;
                    }
                    write!(w, "{z}")?;
                    first = false;
                }
                w.write_all(b"\n")?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    /// Diamond-square synthetic terrain.
    ///
    /// Displacement amplitude shrinks by `roughness` at each subdivision
    /// level. The field is then rescaled so that its spread is `roughness`
    /// times the requested range, centred in `[zmin, zmax]`: a roughness near
    /// zero gives a nearly constant surface, a roughness of one spans the full
    /// range.
    pub fn generate_fractal(
        nrows: usize,
        ncols: usize,
        roughness: f64,
        seed: u64,
        zmin: i32,
        zmax: i32,
    ) -> Result<Self> {
        if nrows < 2 || ncols < 2 {
            return Err(Error::InvalidDimensions { nrows, ncols });
        }
        if zmin > zmax {
            return Err(Error::InvalidRange { zmin, zmax });
        }
        if !(roughness > 0.0 && roughness <= 1.0) {
            return Err(Error::InvalidParam(format!("roughness {roughness} outside (0, 1]")));
        }

        let field = diamond_square(nrows.max(ncols), roughness, seed);
        let side = field.side;

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..nrows {
            for c in 0..ncols {
                let v = field.cells[r * side + c];
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let mid = (zmin as f64 + zmax as f64) / 2.0;
        let half = (zmax as f64 - zmin as f64) / 2.0 * roughness;
        let span = hi - lo;

        Self::from_fn(nrows, ncols, |r, c| {
            let unit = if span > 0.0 {
                (field.cells[r * side + c] - lo) / span * 2.0 - 1.0
            } else {
                0.0
            };
            let z = (mid + unit * half).round();
            (z as i32).clamp(zmin, zmax)
        })
    }
}

struct Field {
    side: usize,
    cells: Vec<f64>,
}

/// Square field of side `2^k + 1 >= n` filled by diamond-square steps.
fn diamond_square(n: usize, roughness: f64, seed: u64) -> Field {
    let side = (n - 1).next_power_of_two() + 1;
    let mut cells = vec![0.0f64; side * side];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = side - 1;

    let mut amp = 1.0;
    for &(r, c) in &[(0, 0), (0, last), (last, 0), (last, last)] {
        cells[r * side + c] = rng.gen_range(-amp..=amp);
    }

    let mut step = last;
    while step > 1 {
        let half = step / 2;
        amp *= roughness;

        // diamond: centres of squares
        for r in (half..side).step_by(step) {
            for c in (half..side).step_by(step) {
                let avg = (cells[(r - half) * side + c - half]
                    + cells[(r - half) * side + c + half]
                    + cells[(r + half) * side + c - half]
                    + cells[(r + half) * side + c + half])
                    / 4.0;
                cells[r * side + c] = avg + rng.gen_range(-amp..=amp);
            }
        }

        // square: edge midpoints
        for r in (0..side).step_by(half) {
            let start = if (r / half).is_multiple_of(2) { half } else { 0 };
            for c in (start..side).step_by(step) {
                let mut sum = 0.0;
                let mut count = 0.0;
                if r >= half {
                    sum += cells[(r - half) * side + c];
                    count += 1.0;
                }
                if r + half < side {
                    sum += cells[(r + half) * side + c];
                    count += 1.0;
                }
                if c >= half {
                    sum += cells[r * side + c - half];
                    count += 1.0;
                }
                if c + half < side {
                    sum += cells[r * side + c + half];
                    count += 1.0;
                }
                cells[r * side + c] = sum / count + rng.gen_range(-amp..=amp);
            }
        }
        step = half;
    }
    Field { side, cells }
}

/// Linear interpolation between two adjacent (or identical) posts.
pub fn elevation_between(grid: &TerrainGrid, p: GridPoint, q: GridPoint, frac: f64) -> Result<f64> {
    grid.check(p)?;
    grid.check(q)?;
    let dr = p.row.abs_diff(q.row);
    let dc = p.col.abs_diff(q.col);
    if dr + dc > 1 {
        return Err(Error::NotAdjacent {
            p: (p.row, p.col),
            q: (q.row, q.col),
        });
    }
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::InvalidParam(format!("fraction {frac} outside [0, 1]")));
    }
    let zp = grid.at(p) as f64;
    let zq = grid.at(q) as f64;
    Ok(zp * (1.0 - frac) + zq * frac)
}
