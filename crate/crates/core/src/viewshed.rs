//! Radial-sweep viewsheds packed into 64-bit words.
//!
//! Rays run from the transmitter to every cell of the rasterized circle of
//! radius `roi`. Along a ray the grid-line crossings are visited in order
//! while a running horizon (the steepest terrain rise-over-run seen so far)
//! is maintained. Every post whose unit cell the ray passes through is judged
//! in turn: its receiver point, `z + h_r`, is visible iff its rise-over-run is
//! at least the horizon accumulated from crossings nearer than the post. A
//! post judged by several rays is visible if any of them sees it.
//!
//! Posts on the eight principal lines (axes and diagonals) are judged only by
//! the ray that passes exactly through them, so those cells agree exactly with
//! a point-to-point line-of-sight test.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::bits;
use crate::candidates::Candidate;
use crate::error::{Error, Result};
use crate::los::{signed, CrossingWalk};
use crate::siting::SiteParams;
use crate::terrain::{GridPoint, TerrainGrid};

/// Rectangle of terrain posts, `height` rows by `width` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

impl Window {
    /// Bounding square of the disk of radius `roi` around `origin`, clipped
    /// to the grid.
    pub fn around(origin: GridPoint, roi: usize, nrows: usize, ncols: usize) -> Self {
        let row0 = origin.row.saturating_sub(roi);
        let col0 = origin.col.saturating_sub(roi);
        let row1 = (origin.row + roi).min(nrows - 1);
        let col1 = (origin.col + roi).min(ncols - 1);
        Window {
            row0,
            col0,
            height: row1 - row0 + 1,
            width: col1 - col0 + 1,
        }
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.row >= self.row0 && p.col >= self.col0 && p.row < self.row0 + self.height && p.col < self.col0 + self.width
    }

    #[inline]
    pub fn bit_index(&self, p: GridPoint) -> usize {
        (p.row - self.row0) * self.width + (p.col - self.col0)
    }

    pub fn fits(&self, nrows: usize, ncols: usize) -> bool {
        self.row0 + self.height <= nrows && self.col0 + self.width <= ncols
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Viewshed {
    pub origin: GridPoint,
    pub roi: usize,
    pub window: Window,
    /// Row-major visibility bits of `window`; padding bits are zero.
    pub words: Vec<u64>,
}

impl Viewshed {
    pub fn empty(origin: GridPoint, roi: usize, window: Window) -> Self {
        Viewshed {
            origin,
            roi,
            window,
            words: vec![0; bits::words_for(window.area())],
        }
    }

    pub fn is_visible(&self, p: GridPoint) -> bool {
        self.window.contains(p) && bits::get(&self.words, self.window.bit_index(p))
    }

    pub fn set(&mut self, p: GridPoint) {
        let i = self.window.bit_index(p);
        bits::set(&mut self.words, i);
    }

    /// Visible posts in row-major order.
    pub fn iter_visible(&self) -> impl Iterator<Item = GridPoint> + '_ {
        let w = self.window;
        (0..w.area())
            .filter(move |&i| bits::get(&self.words, i))
            .map(move |i| GridPoint::new(w.row0 + i / w.width, w.col0 + i % w.width))
    }

    /// Header of four little-endian `u64`s (window row0, col0, width,
    /// height) followed by the packed words, little-endian.
    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        let w = self.window;
        for v in [w.row0, w.col0, w.width, w.height] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        for word in &self.words {
            out.write_all(&word.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(32 + self.words.len() * 8);
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// Reads a dump back; the transmitter origin and radius are not stored.
    pub fn read_window(mut input: impl Read) -> std::io::Result<(Window, Vec<u64>)> {
        let mut next = || -> std::io::Result<u64> {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let row0 = next()? as usize;
        let col0 = next()? as usize;
        let width = next()? as usize;
        let height = next()? as usize;
        let window = Window {
            row0,
            col0,
            height,
            width,
        };
        let words = (0..bits::words_for(window.area()))
            .map(|_| next())
            .collect::<std::io::Result<_>>()?;
        Ok((window, words))
    }
}

pub fn popcount(v: &Viewshed) -> u64 {
    bits::popcount(&v.words)
}

/// Offsets of the 8-connected midpoint circle of radius `r`, plus the
/// diagonal offsets `(±d, ±d)` with `d` the largest integer where `2d² <= r²`.
pub fn circle_perimeter(r: usize) -> Vec<(i64, i64)> {
    let r = r as i64;
    let mut pts = BTreeSet::new();
    let mut x = r;
    let mut y = 0i64;
    let mut err = 1 - r;
    while x >= y {
        for (a, b) in [(x, y), (y, x)] {
            for (sa, sb) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                pts.insert((sa * a, sb * b));
            }
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
    let mut d = ((r * r / 2) as f64).sqrt() as i64;
    while 2 * (d + 1) * (d + 1) <= r * r {
        d += 1;
    }
    while 2 * d * d > r * r {
        d -= 1;
    }
    if d > 0 {
        for (sa, sb) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            pts.insert((sa * d, sb * d));
        }
    }
    pts.into_iter().collect()
}

#[inline]
fn on_principal_line(dr: i64, dc: i64) -> bool {
    dr == 0 || dc == 0 || dr.abs() == dc.abs()
}

pub fn compute_viewshed(grid: &TerrainGrid, tx_base: GridPoint, params: &SiteParams) -> Result<Viewshed> {
    grid.check(tx_base)?;
    if params.roi < 1 {
        return Err(Error::InvalidParam("roi must be at least 1".into()));
    }
    Ok(sweep(grid, tx_base, params, &SweepPlan::new(params.roi)))
}

/// Posts whose unit cell the ray from the origin along `target` passes
/// through (touching a corner does not count), in order of their projection
/// onto the ray, up to `limit` steps along the major axis.
struct RayCells {
    sr: i64,
    sc: i64,
    major: i64,
    minor: i64,
    col_major: bool,
    limit: i64,
    i: i64,
    k: i64,
    k_max: i64,
}

impl RayCells {
    fn new(target: (i64, i64), limit: usize) -> Self {
        let (adr, adc) = (target.0.abs(), target.1.abs());
        let col_major = adc >= adr;
        let (major, minor) = if col_major { (adc, adr) } else { (adr, adc) };
        let mut cells = RayCells {
            sr: target.0.signum(),
            sc: target.1.signum(),
            major,
            minor,
            col_major,
            limit: limit as i64,
            i: 0,
            k: 1,
            k_max: 0,
        };
        cells.advance_column();
        cells
    }

    fn advance_column(&mut self) {
        self.i += 1;
        // 2k * major strictly inside 2i * minor -/+ (minor + major)
        let (m, n) = (self.major, self.minor);
        let lo = 2 * self.i * n - (n + m);
        let hi = 2 * self.i * n + (n + m);
        self.k = lo.div_euclid(2 * m) + 1;
        self.k_max = (hi - 1).div_euclid(2 * m);
    }
}

impl Iterator for RayCells {
    /// Offset from the origin and its dot product with the ray direction.
    type Item = ((i64, i64), i64);

    fn next(&mut self) -> Option<Self::Item> {
        while self.k > self.k_max {
            if self.i >= self.limit {
                return None;
            }
            self.advance_column();
        }
        let (i, k) = (self.i, self.k);
        self.k += 1;
        let offset = if self.col_major {
            (self.sr * k, self.sc * i)
        } else {
            (self.sr * i, self.sc * k)
        };
        Some((offset, k * self.minor + i * self.major))
    }
}

/// One event along a ray, relative to the origin.
#[derive(Debug, Clone, Copy)]
enum Step {
    /// Grid-line crossing interpolated between `lo` and `hi`; raises the
    /// horizon to `(z * den - eye * den) / t_num` with `z * den` the scaled
    /// interpolated terrain.
    Crossing {
        lo: (i64, i64),
        hi: (i64, i64),
        den: f64,
        rem: f64,
        t_num: f64,
    },
    /// A post judged against the horizon at rise `(z + h_r - eye) * scale / dot`.
    Post { at: (i64, i64), scale: f64, dot: f64 },
}

/// Ray events for every perimeter target of one radius. The geometry does
/// not depend on the terrain or the origin, so it is built once and replayed
/// for every transmitter.
#[derive(Debug, Clone)]
struct SweepPlan {
    roi: usize,
    steps: Vec<Step>,
    /// Start of each ray in `steps`, plus a final end marker.
    starts: Vec<usize>,
    /// Largest row or column offset touched by any step.
    reach: i64,
}

impl SweepPlan {
    fn new(roi: usize) -> Self {
        let roi2 = (roi * roi) as i64;
        let mut steps = Vec::new();
        let mut starts = vec![0];
        for (tr, tc) in circle_perimeter(roi) {
            // Crossings are walked along twice the perimeter offset so that
            // cells past the perimeter cell can still be judged. A crossing at
            // `t_num / den` along that doubled ray and a cell whose dot
            // product with the perimeter offset is `dot` are ordered by
            // comparing `dot * den` with `t_num * scale`.
            let scale = 2 * (tr * tr + tc * tc);
            let mut walk = CrossingWalk::new((0, 0), (2 * tr, 2 * tc)).peekable();
            let mut pending = Vec::new();
            for ((dr, dc), dot) in RayCells::new((tr, tc), roi) {
                while let Some(c) = walk.next_if(|c| (c.t_num as i64) * scale < dot * c.den as i64) {
                    pending.push(Step::Crossing {
                        lo: c.lo,
                        hi: if c.rem == 0 { c.lo } else { c.hi },
                        den: c.den as f64,
                        rem: c.rem as f64,
                        t_num: c.t_num as f64,
                    });
                }
                if dr * dr + dc * dc > roi2 || (on_principal_line(dr, dc) && dr * tc != dc * tr) {
                    continue;
                }
                steps.append(&mut pending);
                steps.push(Step::Post {
                    at: (dr, dc),
                    scale: scale as f64,
                    dot: dot as f64,
                });
            }
            starts.push(steps.len());
        }
        let reach = steps
            .iter()
            .map(|s| match *s {
                Step::Crossing { lo, hi, .. } => lo.0.abs().max(lo.1.abs()).max(hi.0.abs()).max(hi.1.abs()),
                Step::Post { at, .. } => at.0.abs().max(at.1.abs()),
            })
            .max()
            .unwrap_or(0);
        SweepPlan {
            roi,
            steps,
            starts,
            reach,
        }
    }

    fn rays(&self) -> impl Iterator<Item = &[Step]> {
        self.starts.windows(2).map(|w| &self.steps[w[0]..w[1]])
    }
}

fn sweep(grid: &TerrainGrid, origin: GridPoint, params: &SiteParams, plan: &SweepPlan) -> Viewshed {
    let (nrows, ncols) = (grid.nrows(), grid.ncols());
    let o = signed(origin);
    let interior =
        o.0 >= plan.reach && o.1 >= plan.reach && o.0 + plan.reach < nrows as i64 && o.1 + plan.reach < ncols as i64;
    if interior {
        replay::<false>(grid, origin, params, plan)
    } else {
        replay::<true>(grid, origin, params, plan)
    }
}

/// Walks every ray of `plan` from `origin`. With `CHECKED` unset the caller
/// guarantees that every step lands on the grid.
fn replay<const CHECKED: bool>(
    grid: &TerrainGrid,
    origin: GridPoint,
    params: &SiteParams,
    plan: &SweepPlan,
) -> Viewshed {
    let (nrows, ncols) = (grid.nrows() as i64, grid.ncols() as i64);
    let window = Window::around(origin, plan.roi, grid.nrows(), grid.ncols());
    let mut shed = Viewshed::empty(origin, plan.roi, window);
    shed.set(origin);

    let z = grid.elevations();
    let eye = grid.at(origin) as f64 + params.tx_height;
    let h_r = params.rx_height;
    let o = signed(origin);
    let inside = |(r, c): (i64, i64)| !CHECKED || (r >= 0 && c >= 0 && r < nrows && c < ncols);
    let at = |(dr, dc): (i64, i64)| (o.0 + dr, o.1 + dc);
    let zi = |(r, c): (i64, i64)| z[(r * ncols + c) as usize] as f64;
    let (wr, wc, ww) = (window.row0 as i64, window.col0 as i64, window.width as i64);

    for ray in plan.rays() {
        let mut horizon = f64::NEG_INFINITY;
        for step in ray {
            match *step {
                Step::Crossing {
                    lo,
                    hi,
                    den,
                    rem,
                    t_num,
                } => {
                    let (lo, hi) = (at(lo), at(hi));
                    if inside(lo) && inside(hi) {
                        let zlo = zi(lo);
                        let scaled = if rem == 0.0 {
                            zlo * den
                        } else {
                            zlo * den + rem * (zi(hi) - zlo)
                        };
                        let h = (scaled - eye * den) / t_num;
                        if h > horizon {
                            horizon = h;
                        }
                    }
                }
                Step::Post { at: off, scale, dot } => {
                    let p = at(off);
                    if inside(p) {
                        // rise over run, run in units of the doubled ray's parameter
                        let rise = (zi(p) + h_r - eye) * scale / dot;
                        if rise >= horizon {
                            bits::set(&mut shed.words, ((p.0 - wr) * ww + (p.1 - wc)) as usize);
                        }
                    }
                }
            }
        }
    }
    shed
}

/// Viewsheds for every candidate, in candidate order.
pub fn compute_all_viewsheds(
    grid: &TerrainGrid,
    candidates: &[Candidate],
    params: &SiteParams,
) -> Result<Vec<Viewshed>> {
    if params.roi < 1 {
        return Err(Error::InvalidParam("roi must be at least 1".into()));
    }
    let plan = SweepPlan::new(params.roi);
    candidates
        .par_iter()
        .map(|c| {
            grid.check(c.base)?;
            Ok(sweep(grid, c.base, params, &plan))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::los::{is_visible, ObserverSpec};

    fn params(roi: usize, ht: f64, hr: f64) -> SiteParams {
        SiteParams {
            roi,
            tx_height: ht,
            rx_height: hr,
            ..SiteParams::default()
        }
    }

    fn lattice_disk(roi: i64) -> u64 {
        let mut n = 0;
        for dx in -roi..=roi {
            for dy in -roi..=roi {
                if dx * dx + dy * dy <= roi * roi {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn flat_terrain_sees_full_disk() {
        let g = TerrainGrid::flat(101, 101, 100).unwrap();
        for roi in [1usize, 2, 5, 13, 30, 47] {
            let v = compute_viewshed(&g, GridPoint::new(50, 50), &params(roi, 10.0, 10.0)).unwrap();
            assert_eq!(popcount(&v), lattice_disk(roi as i64), "roi {roi}");
        }
        let v = compute_viewshed(&g, GridPoint::new(50, 50), &params(30, 10.0, 10.0)).unwrap();
        assert_eq!(popcount(&v), 2821);
        assert_eq!(v.words.len(), (61 * 61usize).div_ceil(64));
    }

    #[test]
    fn corner_transmitter_is_clipped() {
        let g = TerrainGrid::flat(50, 50, 0).unwrap();
        let v = compute_viewshed(&g, GridPoint::new(0, 0), &params(10, 5.0, 5.0)).unwrap();
        assert_eq!(
            v.window,
            Window {
                row0: 0,
                col0: 0,
                height: 11,
                width: 11
            }
        );
        let quadrant = (0..=10i64)
            .flat_map(|a| (0..=10i64).map(move |b| a * a + b * b))
            .filter(|&d| d <= 100)
            .count() as u64;
        assert_eq!(popcount(&v), quadrant);
        assert!(v.iter_visible().all(|p| p.dist2(GridPoint::new(0, 0)) <= 100));
    }

    #[test]
    fn ridge_shadows_cells_behind_it() {
        let g = TerrainGrid::from_fn(9, 9, |_, c| if c == 4 { 50 } else { 0 }).unwrap();
        let p = params(4, 1.0, 1.0);
        let tx = GridPoint::new(4, 2);
        let v = compute_viewshed(&g, tx, &p).unwrap();
        for r in 0..9 {
            for c in 0..9 {
                let q = GridPoint::new(r, c);
                if q.dist2(tx) > 16 {
                    assert!(!v.is_visible(q));
                    continue;
                }
                let r3 = is_visible(&g, ObserverSpec::new(tx, 1.0), ObserverSpec::new(q, 1.0)).unwrap();
                assert_eq!(v.is_visible(q), r3, "cell {q:?}");
                if c < 4 {
                    assert!(v.is_visible(q));
                } else if c > 4 {
                    assert!(!v.is_visible(q));
                }
            }
        }
    }

    #[test]
    fn popcount_edges() {
        let w = Window {
            row0: 0,
            col0: 0,
            height: 1,
            width: 65,
        };
        let mut v = Viewshed::empty(GridPoint::new(0, 0), 65, w);
        assert_eq!(popcount(&v), 0);
        for c in 0..65 {
            v.set(GridPoint::new(0, c));
        }
        assert_eq!(v.words.len(), 2);
        assert_eq!(popcount(&v), 65);
        assert_eq!(v.words[1], 1);
    }

    #[test]
    fn batch_matches_single_and_keeps_order() {
        let g = TerrainGrid::generate_fractal(60, 60, 0.6, 4, 0, 300).unwrap();
        let p = params(12, 10.0, 10.0);
        let cands: Vec<Candidate> = [(5, 5), (30, 40), (5, 5), (59, 0)]
            .iter()
            .map(|&(r, c)| Candidate {
                base: GridPoint::new(r, c),
                score: 0,
            })
            .collect();
        let all = compute_all_viewsheds(&g, &cands, &p).unwrap();
        assert_eq!(all.len(), 4);
        for (c, v) in cands.iter().zip(&all) {
            assert_eq!(*v, compute_viewshed(&g, c.base, &p).unwrap());
        }
        assert_eq!(all[0], all[2]);
        assert!(compute_all_viewsheds(&g, &[], &p).unwrap().is_empty());

        let off = [Candidate {
            base: GridPoint::new(60, 0),
            score: 0,
        }];
        assert!(compute_all_viewsheds(&g, &off, &p).is_err());
    }

    #[test]
    fn raising_transmitter_only_adds_bits() {
        for seed in 0..10 {
            let g = TerrainGrid::generate_fractal(50, 50, 0.7, seed, 0, 500).unwrap();
            let tx = GridPoint::new(10 + seed as usize * 3, 25);
            let low = compute_viewshed(&g, tx, &params(15, 2.0, 3.0)).unwrap();
            let high = compute_viewshed(&g, tx, &params(15, 25.0, 3.0)).unwrap();
            for (a, b) in low.words.iter().zip(&high.words) {
                assert_eq!(a & !b, 0, "seed {seed}");
            }
        }
    }

    #[test]
    fn dump_round_trip() {
        let g = TerrainGrid::generate_fractal(40, 40, 0.5, 2, 0, 100).unwrap();
        let v = compute_viewshed(&g, GridPoint::new(3, 38), &params(9, 5.0, 5.0)).unwrap();
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + v.words.len() * 8);
        let (w, words) = Viewshed::read_window(&buf[..]).unwrap();
        assert_eq!(w, v.window);
        assert_eq!(words, v.words);
    }

    #[test]
    fn perimeter_is_closed_ring() {
        for r in [1usize, 3, 10, 30] {
            let pts = circle_perimeter(r);
            assert!(pts.contains(&(r as i64, 0)) && pts.contains(&(0, -(r as i64))));
            // every point has an 8-neighbour on the ring
            for &(a, b) in &pts {
                let near = pts
                    .iter()
                    .filter(|&&(x, y)| (x - a).abs() <= 1 && (y - b).abs() <= 1)
                    .count();
                assert!(near >= 3, "r {r} point {a},{b}");
            }
        }
    }
}
