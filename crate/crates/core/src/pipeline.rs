//! End-to-end run: read or synthesize a terrain, then visibility indexes,
//! candidate selection, viewsheds and siting, with per-stage wall-clock
//! timings and the result files.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::candidates::{find_candidates, partition, BlockPartition, Candidate};
use crate::error::{Error, Result};
use crate::render::{power_of_two_schedule, render_snapshots};
use crate::siting::{cumulative_after, site, SiteParams, SitingResult};
use crate::terrain::TerrainGrid;
use crate::viewshed::compute_all_viewsheds;
use crate::vix::estimate_vix;
use crate::{bits, render};

#[derive(Debug, Clone, PartialEq)]
pub enum TerrainSource {
    /// Raw little-endian `i16`, dimensions given out of band.
    Binary {
        path: PathBuf,
        nrows: usize,
        ncols: usize,
    },
    Ascii {
        path: PathBuf,
    },
    Synthetic {
        nrows: usize,
        ncols: usize,
        roughness: f64,
        seed: u64,
        zmin: i32,
        zmax: i32,
    },
}

impl TerrainSource {
    pub fn load(&self) -> Result<TerrainGrid> {
        match self {
            TerrainSource::Binary { path, nrows, ncols } => TerrainGrid::load_binary(path, *nrows, *ncols),
            TerrainSource::Ascii { path } => TerrainGrid::load_ascii_grid(path),
            TerrainSource::Synthetic {
                nrows,
                ncols,
                roughness,
                seed,
                zmin,
                zmax,
            } => TerrainGrid::generate_fractal(*nrows, *ncols, *roughness, *seed, *zmin, *zmax),
        }
    }
}

impl fmt::Display for TerrainSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerrainSource::Binary { path, nrows, ncols } => {
                write!(f, "binary {} ({nrows}x{ncols})", path.display())
            }
            TerrainSource::Ascii { path } => write!(f, "ascii {}", path.display()),
            TerrainSource::Synthetic {
                nrows,
                ncols,
                roughness,
                seed,
                zmin,
                zmax,
            } => write!(
                f,
                "synthetic {nrows}x{ncols} roughness {roughness} seed {seed} range [{zmin}, {zmax}]"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub source: TerrainSource,
    pub params: SiteParams,
    /// Seed for the receiver sampling of the visibility-index stage.
    pub vix_seed: u64,
    /// Worker cap for every stage; `None` uses all cores.
    pub threads: Option<usize>,
    /// Where result files go; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Snapshot counts; `None` means powers of two up to the number sited.
    pub snapshots: Option<Vec<usize>>,
}

impl PipelineConfig {
    pub fn new(source: TerrainSource, params: SiteParams) -> Self {
        PipelineConfig {
            source,
            params,
            vix_seed: 0,
            threads: None,
            out_dir: None,
            snapshots: None,
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub read: f64,
    pub vix: f64,
    pub findmax: f64,
    pub viewshed: f64,
    pub site: f64,
    /// Everything else: thread-pool setup and output files.
    pub overhead: f64,
}

impl StageTimings {
    pub fn stages_sum(&self) -> f64 {
        self.read + self.vix + self.findmax + self.viewshed + self.site
    }

    pub fn total(&self) -> f64 {
        self.stages_sum() + self.overhead
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub threads: usize,
    pub nrows: usize,
    pub ncols: usize,
    pub min_elevation: i32,
    pub max_elevation: i32,
    pub partition: BlockPartition,
    pub candidate_count: usize,
    pub timings: StageTimings,
    /// Bytes held by the largest in-memory structures at their peak.
    pub peak_memory_estimate: u64,
    pub result: SitingResult,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let p = &self.config.params;
        let t = &self.timings;
        let mut s = String::new();
        let _ = writeln!(s, "terrain source: {}", self.config.source);
        let _ = writeln!(s, "rows: {}", self.nrows);
        let _ = writeln!(s, "columns: {}", self.ncols);
        let _ = writeln!(s, "elevation posts: {}", self.nrows * self.ncols);
        let _ = writeln!(s, "min elevation: {}", self.min_elevation);
        let _ = writeln!(s, "max elevation: {}", self.max_elevation);
        let _ = writeln!(s, "transmitter height: {}", p.tx_height);
        let _ = writeln!(s, "receiver height: {}", p.rx_height);
        let _ = writeln!(s, "target coverage: {}", p.target_coverage);
        let _ = writeln!(s, "radius of interest: {}", p.roi);
        let _ = writeln!(s, "samples per point: {}", p.samples_per_point);
        let _ = writeln!(s, "vix seed: {}", self.config.vix_seed);
        let _ = writeln!(
            s,
            "blocks: {}x{} (width {})",
            self.partition.blocks_y, self.partition.blocks_x, self.partition.block_width
        );
        let _ = writeln!(s, "potential transmitters per block: {}", p.per_block);
        let _ = writeln!(s, "potential transmitters: {}", self.candidate_count);
        let _ = writeln!(s, "transmitters selected: {}", self.result.selected.len());
        let _ = writeln!(s, "final coverage: {:.6}", self.result.final_coverage);
        let _ = writeln!(s, "stop reason: {}", self.result.stop_reason);
        let _ = writeln!(s, "threads: {}", self.threads);
        let _ = writeln!(s, "peak memory estimate (bytes): {}", self.peak_memory_estimate);
        let _ = writeln!(s, "elapsed seconds, read data: {:.3}", t.read);
        let _ = writeln!(s, "elapsed seconds, visibility indexes: {:.3}", t.vix);
        let _ = writeln!(s, "elapsed seconds, find potential transmitters: {:.3}", t.findmax);
        let _ = writeln!(s, "elapsed seconds, viewsheds: {:.3}", t.viewshed);
        let _ = writeln!(s, "elapsed seconds, site transmitters: {:.3}", t.site);
        let _ = writeln!(s, "elapsed seconds, total: {:.3}", t.total());
        s
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Runs all four stages inside a pool of `config.threads` workers.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    let start = Instant::now();
    config.params.validate().map_err(|e| e.in_stage("config"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParam(e.to_string()).in_stage("config"))?;
    let threads = pool.current_num_threads();
    pool.install(|| run_stages(config, threads, start))
}

fn run_stages(config: &PipelineConfig, threads: usize, start: Instant) -> Result<RunReport> {
    let params = &config.params;
    let mut timings = StageTimings::default();

    let clock = Instant::now();
    let grid = config.source.load().map_err(|e| e.in_stage("read"))?;
    timings.read = clock.elapsed().as_secs_f64();
    let (nrows, ncols) = (grid.nrows(), grid.ncols());
    log::info!("read {nrows}x{ncols} terrain in {:.3}s", timings.read);

    let clock = Instant::now();
    let vix = estimate_vix(&grid, params, config.vix_seed).map_err(|e| e.in_stage("vix"))?;
    timings.vix = clock.elapsed().as_secs_f64();
    log::info!("visibility indexes in {:.3}s", timings.vix);

    let clock = Instant::now();
    let part = partition(nrows, ncols, params.roi).map_err(|e| e.in_stage("findmax"))?;
    let candidates = find_candidates(&vix, &part, params.per_block).map_err(|e| e.in_stage("findmax"))?;
    timings.findmax = clock.elapsed().as_secs_f64();
    log::info!("{} potential transmitters in {:.3}s", candidates.len(), timings.findmax);

    let clock = Instant::now();
    let viewsheds = compute_all_viewsheds(&grid, &candidates, params).map_err(|e| e.in_stage("viewshed"))?;
    timings.viewshed = clock.elapsed().as_secs_f64();
    log::info!("viewsheds in {:.3}s", timings.viewshed);

    let clock = Instant::now();
    let result = site(&viewsheds, nrows, ncols, params).map_err(|e| e.in_stage("site"))?;
    timings.site = clock.elapsed().as_secs_f64();
    log::info!(
        "sited {} transmitters, coverage {:.4}, in {:.3}s",
        result.selected.len(),
        result.final_coverage,
        timings.site
    );

    let posts = (nrows * ncols) as u64;
    let shed_bytes: u64 = viewsheds
        .iter()
        .map(|v| (v.words.len() * 8 + std::mem::size_of_val(v)) as u64)
        .sum();
    let peak_memory_estimate = posts * 4
        + posts * 2
        + (candidates.len() * std::mem::size_of::<Candidate>()) as u64
        + shed_bytes
        + bits::words_for(nrows * ncols) as u64 * 8
        + viewsheds.len() as u64 * 24;

    let mut report = RunReport {
        config: config.clone(),
        threads,
        nrows,
        ncols,
        min_elevation: grid.min_elevation(),
        max_elevation: grid.max_elevation(),
        partition: part,
        candidate_count: candidates.len(),
        timings,
        peak_memory_estimate,
        result,
        files: Vec::new(),
    };

    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).in_stage("output"))?;
        let write = |report: &mut RunReport| -> Result<()> {
            let csv = dir.join("transmitters.csv");
            report.result.write_csv(&csv)?;
            report.files.push(csv);

            let final_img = dir.join("cumshed.pgm");
            let cum = cumulative_after(&report.result, &viewsheds, nrows, ncols, usize::MAX)?;
            render::render_cumshed(&cum, &final_img)?;
            report.files.push(final_img);

            let schedule = config
                .snapshots
                .clone()
                .unwrap_or_else(|| power_of_two_schedule(report.result.selected.len()));
            if !schedule.is_empty() {
                let snaps = render_snapshots(
                    &report.result,
                    &viewsheds,
                    nrows,
                    ncols,
                    &schedule,
                    dir.join("snapshots"),
                )?;
                report.files.extend(snaps);
            }
            Ok(())
        };
        write(&mut report).map_err(|e| e.in_stage("output"))?;
    }

    report.timings.overhead = (start.elapsed().as_secs_f64() - report.timings.stages_sum()).max(0.0);

    if let Some(dir) = &config.out_dir {
        let path = dir.join("report.txt");
        write_file(&path, report.to_text()).map_err(|e| e.in_stage("output"))?;
        report.files.push(path);
    }
    Ok(report)
}
