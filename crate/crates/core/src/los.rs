//! Point-to-point line of sight over the interpolated terrain.
//!
//! The 2D segment between the two bases is walked crossing by crossing: every
//! time it meets a vertical (`col = k`) or horizontal (`row = k`) grid line
//! strictly between its endpoints, the terrain there is linearly interpolated
//! between the two posts on that grid line and compared with the height of the
//! 3D sight line. Terrain strictly above the sight line blocks; touching it
//! does not.
//!
//! Crossing positions are kept as exact integer ratios so that a segment
//! passing through a post uses that post's elevation, and so that comparisons
//! on integer elevations are free of rounding.

use crate::error::Result;
use crate::terrain::{GridPoint, TerrainGrid};

/// A transmitter or receiver: a base post and a height above the terrain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverSpec {
    pub base: GridPoint,
    pub height: f64,
}

impl ObserverSpec {
    pub fn new(base: GridPoint, height: f64) -> Self {
        ObserverSpec { base, height }
    }

    pub fn at(row: usize, col: usize, height: f64) -> Self {
        ObserverSpec {
            base: GridPoint::new(row, col),
            height,
        }
    }

    /// Absolute elevation of the observer's eye.
    pub fn eye(&self, grid: &TerrainGrid) -> f64 {
        grid.at(self.base) as f64 + self.height
    }
}

/// One crossing of a segment with a grid line.
///
/// The crossing lies at parameter `t = t_num / den` along the segment and
/// `rem / den` of the way from post `lo` to post `hi`. When `rem == 0` the
/// crossing sits exactly on `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Crossing {
    pub t_num: u64,
    pub den: u64,
    pub rem: u64,
    pub lo: (i64, i64),
    pub hi: (i64, i64),
}

impl Crossing {
    /// Interpolated terrain elevation scaled by `den`. Exact for integer
    /// elevations.
    #[inline]
    pub fn terrain_scaled(&self, grid: &TerrainGrid) -> f64 {
        let zlo = grid.z(self.lo.0 as usize, self.lo.1 as usize) as f64;
        if self.rem == 0 {
            return zlo * self.den as f64;
        }
        let zhi = grid.z(self.hi.0 as usize, self.hi.1 as usize) as f64;
        zlo * self.den as f64 + self.rem as f64 * (zhi - zlo)
    }
}

/// Grid-line crossings of the segment `from -> to`, strictly between the
/// endpoints, in order of increasing distance from `from`.
#[derive(Debug, Clone)]
pub(crate) struct CrossingWalk {
    r0: i64,
    c0: i64,
    sr: i64,
    sc: i64,
    adr: u64,
    adc: u64,
    // next vertical-line index (1..adc) and horizontal-line index (1..adr)
    i: u64,
    j: u64,
}

impl CrossingWalk {
    pub fn new(from: (i64, i64), to: (i64, i64)) -> Self {
        let dr = to.0 - from.0;
        let dc = to.1 - from.1;
        CrossingWalk {
            r0: from.0,
            c0: from.1,
            sr: dr.signum(),
            sc: dc.signum(),
            adr: dr.unsigned_abs(),
            adc: dc.unsigned_abs(),
            i: 1,
            j: 1,
        }
    }

    fn vertical(&self, i: u64) -> Crossing {
        let num = i * self.adr;
        let q = (num / self.adc) as i64;
        let rem = num % self.adc;
        let col = self.c0 + self.sc * i as i64;
        Crossing {
            t_num: i,
            den: self.adc,
            rem,
            lo: (self.r0 + self.sr * q, col),
            hi: (self.r0 + self.sr * (q + 1), col),
        }
    }

    fn horizontal(&self, j: u64) -> Crossing {
        let num = j * self.adc;
        let q = (num / self.adr) as i64;
        let rem = num % self.adr;
        let row = self.r0 + self.sr * j as i64;
        Crossing {
            t_num: j,
            den: self.adr,
            rem,
            lo: (row, self.c0 + self.sc * q),
            hi: (row, self.c0 + self.sc * (q + 1)),
        }
    }
}

impl Iterator for CrossingWalk {
    type Item = Crossing;

    fn next(&mut self) -> Option<Crossing> {
        let has_v = self.i < self.adc;
        let has_h = self.j < self.adr;
        match (has_v, has_h) {
            (false, false) => None,
            (true, false) => {
                self.i += 1;
                Some(self.vertical(self.i - 1))
            }
            (false, true) => {
                self.j += 1;
                Some(self.horizontal(self.j - 1))
            }
            (true, true) => {
                // compare i/adc with j/adr
                let lhs = self.i * self.adr;
                let rhs = self.j * self.adc;
                if lhs < rhs {
                    self.i += 1;
                    Some(self.vertical(self.i - 1))
                } else if rhs < lhs {
                    self.j += 1;
                    Some(self.horizontal(self.j - 1))
                } else {
                    // the segment passes exactly through a post
                    let c = self.vertical(self.i);
                    self.i += 1;
                    self.j += 1;
                    Some(c)
                }
            }
        }
    }
}

#[inline]
pub(crate) fn signed(p: GridPoint) -> (i64, i64) {
    (p.row as i64, p.col as i64)
}

/// One sampled crossing along a line of sight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEntry {
    /// 2D distance from the transmitter base.
    pub distance: f64,
    pub terrain_z: f64,
    pub los_z: f64,
}

impl ProfileEntry {
    pub fn blocks(&self) -> bool {
        self.terrain_z > self.los_z
    }
}

/// Scaled terrain and sight-line heights at a crossing; both share the
/// crossing's denominator.
#[inline]
fn scaled_heights(grid: &TerrainGrid, c: &Crossing, eye: f64, target: f64) -> (f64, f64) {
    let den = c.den as f64;
    let terrain = c.terrain_scaled(grid);
    let sight = eye * den + c.t_num as f64 * (target - eye);
    (terrain, sight)
}

/// True iff the receiver is visible from the transmitter.
pub fn is_visible(grid: &TerrainGrid, tx: ObserverSpec, rx: ObserverSpec) -> Result<bool> {
    grid.check(tx.base)?;
    grid.check(rx.base)?;
    Ok(visible_unchecked(grid, tx, rx))
}

pub(crate) fn visible_unchecked(grid: &TerrainGrid, tx: ObserverSpec, rx: ObserverSpec) -> bool {
    let eye = tx.eye(grid);
    let target = rx.eye(grid);
    CrossingWalk::new(signed(tx.base), signed(rx.base)).all(|c| {
        let (terrain, sight) = scaled_heights(grid, &c, eye, target);
        terrain <= sight
    })
}

/// Every crossing of the line of sight, nearest to the transmitter first.
pub fn los_profile(grid: &TerrainGrid, tx: ObserverSpec, rx: ObserverSpec) -> Result<Vec<ProfileEntry>> {
    grid.check(tx.base)?;
    grid.check(rx.base)?;
    let eye = tx.eye(grid);
    let target = rx.eye(grid);
    let length = (tx.base.dist2(rx.base) as f64).sqrt();
    Ok(CrossingWalk::new(signed(tx.base), signed(rx.base))
        .map(|c| {
            let (terrain, sight) = scaled_heights(grid, &c, eye, target);
            let den = c.den as f64;
            ProfileEntry {
                distance: c.t_num as f64 / den * length,
                terrain_z: terrain / den,
                los_z: sight / den,
            }
        })
        .collect())
}
