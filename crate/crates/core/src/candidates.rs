//! Potential transmitters: the best few posts of every block.
//!
//! Taking the globally best posts would concentrate candidates in a few
//! high-visibility regions whose viewsheds mostly overlap. Partitioning into
//! blocks about a third of the radius of interest wide keeps candidates
//! spread over the whole terrain.

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::terrain::GridPoint;
use crate::vix::VixMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub base: GridPoint,
    pub score: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    pub nrows: usize,
    pub ncols: usize,
    pub block_width: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
}

impl BlockPartition {
    pub fn block_count(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    /// Row and column ranges of block `(by, bx)`; boundary blocks may be short.
    pub fn block_bounds(&self, by: usize, bx: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let w = self.block_width;
        let r0 = by * w;
        let c0 = bx * w;
        (r0..(r0 + w).min(self.nrows), c0..(c0 + w).min(self.ncols))
    }

    /// Number of candidates `find_candidates` returns for `per_block`.
    pub fn candidate_total(&self, per_block: usize) -> usize {
        (0..self.blocks_y)
            .flat_map(|by| (0..self.blocks_x).map(move |bx| (by, bx)))
            .map(|(by, bx)| {
                let (rows, cols) = self.block_bounds(by, bx);
                (rows.len() * cols.len()).min(per_block)
            })
            .sum()
    }
}

pub fn partition(nrows: usize, ncols: usize, roi: usize) -> Result<BlockPartition> {
    if roi < 3 {
        return Err(Error::InvalidParam(format!("roi {roi} < 3 leaves no block width")));
    }
    let block_width = roi.div_ceil(3);
    Ok(BlockPartition {
        nrows,
        ncols,
        block_width,
        blocks_x: ncols.div_ceil(block_width),
        blocks_y: nrows.div_ceil(block_width),
    })
}

/// Higher score first, then ascending (row, col).
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score.cmp(&a.score).then_with(|| a.base.cmp(&b.base))
}

/// The `per_block` best posts of each block, blocks in row-major order and
/// candidates within a block by descending score.
pub fn find_candidates(vix: &VixMap, part: &BlockPartition, per_block: usize) -> Result<Vec<Candidate>> {
    if per_block < 1 {
        return Err(Error::InvalidParam("per_block must be at least 1".into()));
    }
    if vix.nrows() != part.nrows || vix.ncols() != part.ncols {
        return Err(Error::InvalidParam(format!(
            "partition is {}x{} but the visibility map is {}x{}",
            part.nrows,
            part.ncols,
            vix.nrows(),
            vix.ncols()
        )));
    }

    let per_block_lists: Vec<Vec<Candidate>> = (0..part.block_count())
        .into_par_iter()
        .map(|b| {
            let (rows, cols) = part.block_bounds(b / part.blocks_x, b % part.blocks_x);
            let mut posts: Vec<Candidate> = rows
                .flat_map(|r| cols.clone().map(move |c| (r, c)))
                .map(|(r, c)| Candidate {
                    base: GridPoint::new(r, c),
                    score: vix.score(r, c),
                })
                .collect();
            if posts.len() > per_block {
                posts.select_nth_unstable_by(per_block - 1, rank);
                posts.truncate(per_block);
            }
            posts.sort_unstable_by(rank);
            posts
        })
        .collect();

    Ok(per_block_lists.into_iter().flatten().collect())
}

/// `row,col,score` per candidate.
pub fn write_csv(candidates: &[Candidate], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(candidates.len() * 12 + 16);
    writeln!(out, "row,col,score").unwrap();
    for c in candidates {
        writeln!(out, "{},{},{}", c.base.row, c.base.col, c.score).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
