//! Greedy max-coverage selection over candidate viewsheds.
//!
//! Each round commits the candidate whose viewshed adds the most uncovered
//! posts to the cumulative viewshed. Gains can only shrink as coverage grows,
//! so a gain computed in an earlier round is an upper bound on the current
//! one. The lazy variant keeps candidates in a max-heap keyed by their last
//! known gain and only re-evaluates the head; once the head's gain is
//! current it beats every other bound and is committed.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::bits;
use crate::error::{Error, Result};
use crate::terrain::GridPoint;
use crate::viewshed::Viewshed;

#[derive(Debug, Clone, PartialEq)]
pub struct SiteParams {
    /// Radius of interest in posts, measured horizontally.
    pub roi: usize,
    pub tx_height: f64,
    pub rx_height: f64,
    /// Stop once this fraction of all posts is covered.
    pub target_coverage: f64,
    pub samples_per_point: u16,
    pub per_block: usize,
    pub max_selected: Option<usize>,
}

impl Default for SiteParams {
    fn default() -> Self {
        SiteParams {
            roi: 30,
            tx_height: 10.0,
            rx_height: 10.0,
            target_coverage: 0.95,
            samples_per_point: 10,
            per_block: 20,
            max_selected: None,
        }
    }
}

impl SiteParams {
    pub fn validate(&self) -> Result<()> {
        if self.roi < 1 {
            return Err(Error::InvalidParam("roi must be at least 1".into()));
        }
        if !(self.target_coverage > 0.0 && self.target_coverage <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "target coverage {} outside (0, 1]",
                self.target_coverage
            )));
        }
        if !(self.tx_height >= 0.0 && self.rx_height >= 0.0) {
            return Err(Error::InvalidParam("heights must be non-negative".into()));
        }
        if self.samples_per_point < 1 {
            return Err(Error::InvalidParam("samples_per_point must be at least 1".into()));
        }
        if self.per_block < 1 {
            return Err(Error::InvalidParam("per_block must be at least 1".into()));
        }
        Ok(())
    }
}

/// Union of the selected viewsheds over the whole terrain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulativeShed {
    nrows: usize,
    ncols: usize,
    words: Vec<u64>,
    covered: u64,
}

impl CumulativeShed {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CumulativeShed {
            nrows,
            ncols,
            words: vec![0; bits::words_for(nrows * ncols)],
            covered: 0,
        }
    }

    pub fn full(nrows: usize, ncols: usize) -> Self {
        let mut cum = Self::new(nrows, ncols);
        let n = nrows * ncols;
        for (i, w) in cum.words.iter_mut().enumerate() {
            let len = (n - i * 64).min(64);
            *w = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        }
        cum.covered = n as u64;
        cum
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn covered_count(&self) -> u64 {
        self.covered
    }

    pub fn is_covered(&self, p: GridPoint) -> bool {
        bits::get(&self.words, p.row * self.ncols + p.col)
    }

    pub fn cover(&mut self, p: GridPoint) {
        let i = p.row * self.ncols + p.col;
        if !bits::get(&self.words, i) {
            bits::set(&mut self.words, i);
            self.covered += 1;
        }
    }

    fn check(&self, shed: &Viewshed) -> Result<()> {
        let w = shed.window;
        if w.fits(self.nrows, self.ncols) {
            Ok(())
        } else {
            Err(Error::WindowOutOfBounds {
                row0: w.row0,
                col0: w.col0,
                height: w.height,
                width: w.width,
                nrows: self.nrows,
                ncols: self.ncols,
            })
        }
    }

    /// ORs `shed` in and returns how many posts became covered.
    pub fn union(&mut self, shed: &Viewshed) -> Result<u64> {
        self.check(shed)?;
        let gained = gain_unchecked(shed, self);
        let w = shed.window;
        for i in 0..w.height {
            let src = i * w.width;
            let dst = (w.row0 + i) * self.ncols + w.col0;
            let mut k = 0;
            while k < w.width {
                let len = (w.width - k).min(64);
                let v = bits::read(&shed.words, src + k, len);
                bits::or(&mut self.words, dst + k, len, v);
                k += len;
            }
        }
        self.covered += gained;
        Ok(gained)
    }
}

fn gain_unchecked(shed: &Viewshed, cum: &CumulativeShed) -> u64 {
    let w = shed.window;
    let mut gain = 0u64;
    for i in 0..w.height {
        let src = i * w.width;
        let dst = (w.row0 + i) * cum.ncols + w.col0;
        let mut k = 0;
        while k < w.width {
            let len = (w.width - k).min(64);
            let a = bits::read(&shed.words, src + k, len);
            let b = bits::read(&cum.words, dst + k, len);
            gain += (a & !b).count_ones() as u64;
            k += len;
        }
    }
    gain
}

/// Posts of `shed` not yet in `cum`.
pub fn marginal_gain(shed: &Viewshed, cum: &CumulativeShed) -> Result<u64> {
    cum.check(shed)?;
    Ok(gain_unchecked(shed, cum))
}

pub fn coverage(cum: &CumulativeShed) -> f64 {
    cum.covered as f64 / (cum.nrows * cum.ncols) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    CandidatesExhausted,
    ZeroGain,
    MaxSelected,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::TargetReached => "target-reached",
            StopReason::CandidatesExhausted => "candidates-exhausted",
            StopReason::ZeroGain => "zero-gain",
            StopReason::MaxSelected => "max-selected",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedTransmitter {
    /// Index into the viewshed (candidate) list.
    pub index: usize,
    pub base: GridPoint,
    pub marginal_gain: u64,
    pub cumulative_coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SitingResult {
    pub selected: Vec<SelectedTransmitter>,
    pub covered: u64,
    pub final_coverage: f64,
    pub stop_reason: StopReason,
    /// Gain evaluations after the initial pass; a measure of lazy savings.
    pub reevaluations: u64,
}

impl SitingResult {
    pub fn indices(&self) -> Vec<usize> {
        self.selected.iter().map(|s| s.index).collect()
    }

    /// `rank,row,col,marginal_gain,cumulative_coverage` per selection.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        self.write_csv_to(&mut out).expect("writing to a Vec cannot fail");
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn write_csv_to(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "rank,row,col,marginal_gain,cumulative_coverage")?;
        for (rank, s) in self.selected.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{:.6}",
                rank + 1,
                s.base.row,
                s.base.col,
                s.marginal_gain,
                s.cumulative_coverage
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct HeapEntry {
    gain: u64,
    index: usize,
    round: usize,
}

impl Ord for HeapEntry {
    // larger gain first, then lower index
    fn cmp(&self, other: &Self) -> Ordering {
        (self.gain, Reverse(self.index)).cmp(&(other.gain, Reverse(other.index)))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy greedy selection. Equal gains go to the lower viewshed index.
pub fn site(viewsheds: &[Viewshed], nrows: usize, ncols: usize, params: &SiteParams) -> Result<SitingResult> {
    params.validate()?;
    let mut cum = CumulativeShed::new(nrows, ncols);
    for v in viewsheds {
        cum.check(v)?;
    }
    let total = (nrows * ncols) as f64;
    let cap = params.max_selected.unwrap_or(usize::MAX);

    let initial: Vec<u64> = viewsheds.par_iter().map(|v| bits::popcount(&v.words)).collect();
    let mut heap: BinaryHeap<HeapEntry> = initial
        .into_iter()
        .enumerate()
        .map(|(index, gain)| HeapEntry { gain, index, round: 0 })
        .collect();

    let mut selected = Vec::new();
    let mut reevaluations = 0u64;
    let mut round = 0usize;

    let stop_reason = loop {
        if cum.covered as f64 / total >= params.target_coverage {
            break StopReason::TargetReached;
        }
        if selected.len() >= cap {
            break StopReason::MaxSelected;
        }
        let Some(mut head) = heap.pop() else {
            break StopReason::CandidatesExhausted;
        };
        while head.round != round {
            head.gain = gain_unchecked(&viewsheds[head.index], &cum);
            head.round = round;
            reevaluations += 1;
            heap.push(head);
            head = heap.pop().expect("just pushed");
        }
        if head.gain == 0 {
            break StopReason::ZeroGain;
        }
        let gained = cum.union(&viewsheds[head.index])?;
        debug_assert_eq!(gained, head.gain);
        debug_assert!(selected
            .last()
            .is_none_or(|s: &SelectedTransmitter| s.marginal_gain >= gained));
        round += 1;
        selected.push(SelectedTransmitter {
            index: head.index,
            base: viewsheds[head.index].origin,
            marginal_gain: gained,
            cumulative_coverage: cum.covered as f64 / total,
        });
    };

    log::debug!(
        "sited {} transmitters, {} gain re-evaluations, stop: {stop_reason}",
        selected.len(),
        reevaluations
    );

    Ok(SitingResult {
        final_coverage: cum.covered as f64 / total,
        covered: cum.covered,
        selected,
        stop_reason,
        reevaluations,
    })
}

/// Union of the first `count` selections.
pub fn cumulative_after(
    result: &SitingResult,
    viewsheds: &[Viewshed],
    nrows: usize,
    ncols: usize,
    count: usize,
) -> Result<CumulativeShed> {
    let mut cum = CumulativeShed::new(nrows, ncols);
    for s in result.selected.iter().take(count) {
        let v = viewsheds
            .get(s.index)
            .ok_or_else(|| Error::InvalidParam(format!("selection refers to missing viewshed {}", s.index)))?;
        cum.union(v)?;
    }
    Ok(cum)
}
