//! Siting of many radio transmitters on raster terrains.
//!
//! The pipeline has four stages:
//!
//! 1. [`vix`]: estimate a visibility index for every post by testing a few
//!    random receivers inside the radius of interest.
//! 2. [`candidates`]: split the terrain into blocks and keep the best few
//!    posts of each block as potential transmitters.
//! 3. [`viewshed`]: compute a packed bitmap viewshed for every potential
//!    transmitter with a radial horizon sweep.
//! 4. [`siting`]: greedily pick transmitters that add the most new coverage,
//!    using stale gains as upper bounds (lazy greedy).
//!
//! [`pipeline`] strings the stages together and [`render`] writes the
//! cumulative viewshed images.

pub mod bits;
pub mod candidates;
mod error;
pub mod los;
pub mod pipeline;
pub mod render;
pub mod siting;
pub mod terrain;
pub mod viewshed;
pub mod vix;

pub use candidates::{find_candidates, partition, BlockPartition, Candidate};
pub use error::{Error, Result};
pub use los::{is_visible, los_profile, ObserverSpec, ProfileEntry};
pub use pipeline::{run_pipeline, PipelineConfig, RunReport, StageTimings, TerrainSource};
pub use render::{render_cumshed, render_snapshots};
pub use siting::{
    coverage, marginal_gain, site, CumulativeShed, SelectedTransmitter, SiteParams, SitingResult, StopReason,
};
pub use terrain::{GridPoint, TerrainGrid};
pub use viewshed::{compute_all_viewsheds, compute_viewshed, popcount, Viewshed, Window};
pub use vix::{estimate_vix, VixMap};
