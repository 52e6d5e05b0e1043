//! Sampled visibility index for every post.
//!
//! Each post is treated as a transmitter and tested against a handful of
//! receivers drawn uniformly from the grid posts inside its radius of
//! interest. The score is the number of visible samples; accuracy is not
//! critical since scores only rank potential transmitters.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::los::{visible_unchecked, ObserverSpec};
use crate::siting::SiteParams;
use crate::terrain::{GridPoint, TerrainGrid};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VixMap {
    nrows: usize,
    ncols: usize,
    scores: Vec<u16>,
    samples_per_point: u16,
}

impl VixMap {
    pub fn new(nrows: usize, ncols: usize, scores: Vec<u16>, samples_per_point: u16) -> Result<Self> {
        if scores.len() != nrows * ncols {
            return Err(Error::InvalidParam(format!(
                "{} scores for a {nrows}x{ncols} grid",
                scores.len()
            )));
        }
        if let Some(&s) = scores.iter().find(|&&s| s > samples_per_point) {
            return Err(Error::InvalidParam(format!(
                "score {s} exceeds {samples_per_point} samples"
            )));
        }
        Ok(VixMap {
            nrows,
            ncols,
            scores,
            samples_per_point,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn samples_per_point(&self) -> u16 {
        self.samples_per_point
    }

    pub fn scores(&self) -> &[u16] {
        &self.scores
    }

    #[inline]
    pub fn score(&self, row: usize, col: usize) -> u16 {
        self.scores[row * self.ncols + col]
    }

    /// Estimated visibility index in [0, 1].
    pub fn index(&self, row: usize, col: usize) -> f64 {
        self.score(row, col) as f64 / self.samples_per_point as f64
    }

    /// Row-major scores, one byte per post.
    pub fn write_bytes(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if self.samples_per_point > u8::MAX as u16 {
            return Err(Error::InvalidParam(format!(
                "{} samples per point do not fit in one byte",
                self.samples_per_point
            )));
        }
        let bytes: Vec<u8> = self.scores.iter().map(|&s| s as u8).collect();
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

/// Receiver bases drawn for the transmitter at `tx`.
///
/// Rejection sampling from the ROI bounding square clipped to the grid, so
/// every base is on the grid and within `roi` of `tx` (the transmitter's own
/// post included). The stream depends only on `(seed, tx)`.
pub fn sample_receivers(
    nrows: usize,
    ncols: usize,
    tx: GridPoint,
    roi: usize,
    count: usize,
    seed: u64,
) -> impl Iterator<Item = GridPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tx.row * ncols + tx.col) as u64);
    let rows = tx.row.saturating_sub(roi)..=(tx.row + roi).min(nrows - 1);
    let cols = tx.col.saturating_sub(roi)..=(tx.col + roi).min(ncols - 1);
    let roi2 = (roi * roi) as u64;
    std::iter::repeat_with(move || loop {
        let p = GridPoint::new(rng.gen_range(rows.clone()), rng.gen_range(cols.clone()));
        if p.dist2(tx) <= roi2 {
            break p;
        }
    })
    .take(count)
}

pub fn estimate_vix(grid: &TerrainGrid, params: &SiteParams, seed: u64) -> Result<VixMap> {
    if params.roi < 1 {
        return Err(Error::InvalidParam("roi must be at least 1".into()));
    }
    if params.samples_per_point < 1 {
        return Err(Error::InvalidParam("samples_per_point must be at least 1".into()));
    }
    let (nrows, ncols) = (grid.nrows(), grid.ncols());
    let samples = params.samples_per_point;
    let mut scores = vec![0u16; nrows * ncols];

    scores.par_chunks_mut(ncols).enumerate().for_each(|(row, out)| {
        for (col, slot) in out.iter_mut().enumerate() {
            let base = GridPoint::new(row, col);
            let tx = ObserverSpec::new(base, params.tx_height);
            let seen = sample_receivers(nrows, ncols, base, params.roi, samples as usize, seed)
                .filter(|&r| visible_unchecked(grid, tx, ObserverSpec::new(r, params.rx_height)))
                .count();
            *slot = seen as u16;
        }
    });

    VixMap::new(nrows, ncols, scores, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::los::is_visible;

    fn params(roi: usize, samples: u16) -> SiteParams {
        SiteParams {
            roi,
            samples_per_point: samples,
            ..SiteParams::default()
        }
    }

    #[test]
    fn flat_terrain_scores_full() {
        let g = TerrainGrid::flat(40, 30, 100).unwrap();
        let v = estimate_vix(&g, &params(8, 10), 1).unwrap();
        assert!(v.scores().iter().all(|&s| s == 10));
        assert_eq!(v.index(5, 5), 1.0);
    }

    #[test]
    fn samples_stay_in_disk_and_grid() {
        for &(r, c) in &[(0, 0), (3, 29), (20, 15), (39, 0)] {
            let tx = GridPoint::new(r, c);
            for p in sample_receivers(40, 30, tx, 7, 500, 99) {
                assert!(p.row < 40 && p.col < 30);
                assert!(p.dist2(tx) <= 49);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = TerrainGrid::generate_fractal(40, 40, 0.6, 5, 0, 300).unwrap();
        let a = estimate_vix(&g, &params(6, 10), 11).unwrap();
        let b = estimate_vix(&g, &params(6, 10), 11).unwrap();
        let c = estimate_vix(&g, &params(6, 10), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_zero_roi() {
        let g = TerrainGrid::flat(4, 4, 0).unwrap();
        assert!(estimate_vix(&g, &params(0, 10), 0).is_err());
    }

    #[test]
    fn pit_counts_only_rim_receivers() {
        // post (6,6) at z = 0 ringed by z = 10000 at Chebyshev distance 1
        let g = TerrainGrid::from_fn(13, 13, |r, c| {
            let d = r.abs_diff(6).max(c.abs_diff(6));
            if d == 1 {
                10_000
            } else {
                0
            }
        })
        .unwrap();
        let p = SiteParams {
            roi: 5,
            tx_height: 10.0,
            rx_height: 10.0,
            samples_per_point: 50,
            ..SiteParams::default()
        };
        let centre = GridPoint::new(6, 6);
        let tx = ObserverSpec::new(centre, 10.0);

        // brute-force visible set over the disk
        let mut visible = Vec::new();
        for r in 0..13 {
            for c in 0..13 {
                let q = GridPoint::new(r, c);
                if q.dist2(centre) <= 25 && is_visible(&g, tx, ObserverSpec::new(q, 10.0)).unwrap() {
                    visible.push(q);
                }
            }
        }
        assert_eq!(visible.len(), 9);

        let v = estimate_vix(&g, &p, 3).unwrap();
        let drawn: Vec<_> = sample_receivers(13, 13, centre, 5, 50, 3).collect();
        let expected = drawn.iter().filter(|q| visible.contains(q)).count();
        assert_eq!(v.score(6, 6) as usize, expected);
        assert!(v.score(6, 6) < 50);
    }

    #[test]
    fn byte_dump() {
        let dir = tempfile::tempdir().unwrap();
        let v = VixMap::new(2, 2, vec![0, 1, 2, 3], 10).unwrap();
        let path = dir.path().join("vix.bin");
        v.write_bytes(&path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), vec![0, 1, 2, 3]);
        assert!(VixMap::new(2, 2, vec![0, 1, 2, 11], 10).is_err());
    }
}
