use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use towersite::{run_pipeline, PipelineConfig, SiteParams, TerrainGrid, TerrainSource};

/// Site radio transmitters on a raster terrain so that their combined
/// viewshed reaches a target coverage.
#[derive(Debug, Parser)]
#[command(name = "towersite", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic fractal terrain to disk.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct TerrainArgs {
    /// Terrain file: raw little-endian i16 (needs --nrows/--ncols) or an
    /// ASCII grid when --nrows/--ncols are omitted.
    #[arg(long, conflicts_with = "synth")]
    input: Option<PathBuf>,

    #[arg(long, requires = "ncols")]
    nrows: Option<usize>,

    #[arg(long, requires = "nrows")]
    ncols: Option<usize>,

    /// Generate a SIZE x SIZE fractal terrain instead of reading one.
    #[arg(long, value_name = "SIZE")]
    synth: Option<usize>,

    /// Seed for the synthetic terrain.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Fractal roughness in (0, 1].
    #[arg(long, default_value_t = 0.6)]
    roughness: f64,

    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    zmin: i32,

    #[arg(long, default_value_t = 1000, allow_negative_numbers = true)]
    zmax: i32,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    terrain: TerrainArgs,

    /// Radius of interest in posts.
    #[arg(long, default_value_t = 30)]
    roi: usize,

    #[arg(long, default_value_t = 10.0)]
    tx_height: f64,

    #[arg(long, default_value_t = 10.0)]
    rx_height: f64,

    /// Target coverage fraction.
    #[arg(long, default_value_t = 0.95)]
    coverage: f64,

    /// Receivers sampled per post for the visibility index.
    #[arg(long, default_value_t = 10)]
    samples: u16,

    /// Potential transmitters kept per block.
    #[arg(long, default_value_t = 20)]
    per_block: usize,

    /// Stop after this many transmitters.
    #[arg(long)]
    max_selected: Option<usize>,

    /// Seed for visibility-index sampling.
    #[arg(long, default_value_t = 0)]
    vix_seed: u64,

    /// Worker threads for every stage (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long, default_value = "towersite-out")]
    out_dir: PathBuf,

    /// Comma-separated snapshot counts (default: 1, 2, 4, ... then the
    /// final count). Pass an empty string for none.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    nrows: usize,

    #[arg(long)]
    ncols: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long, default_value_t = 0.6)]
    roughness: f64,

    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    zmin: i32,

    #[arg(long, default_value_t = 1000, allow_negative_numbers = true)]
    zmax: i32,

    /// Write an ASCII grid instead of raw i16.
    #[arg(long)]
    ascii: bool,

    #[arg(long)]
    output: PathBuf,
}

fn terrain_source(t: &TerrainArgs) -> anyhow::Result<TerrainSource> {
    match (&t.input, t.synth) {
        (Some(path), None) => Ok(match (t.nrows, t.ncols) {
            (Some(nrows), Some(ncols)) => TerrainSource::Binary {
                path: path.clone(),
                nrows,
                ncols,
            },
            _ => TerrainSource::Ascii { path: path.clone() },
        }),
        (None, Some(n)) => Ok(TerrainSource::Synthetic {
            nrows: t.nrows.unwrap_or(n),
            ncols: t.ncols.unwrap_or(n),
            roughness: t.roughness,
            seed: t.seed,
            zmin: t.zmin,
            zmax: t.zmax,
        }),
        _ => bail!("config: give either --input or --synth"),
    }
}

fn parse_snapshots(raw: &[String]) -> anyhow::Result<Vec<usize>> {
    raw.iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .with_context(|| format!("config: bad snapshot count {s:?}"))
        })
        .collect()
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let params = SiteParams {
        roi: args.roi,
        tx_height: args.tx_height,
        rx_height: args.rx_height,
        target_coverage: args.coverage,
        samples_per_point: args.samples,
        per_block: args.per_block,
        max_selected: args.max_selected,
    };
    let mut config = PipelineConfig::new(terrain_source(&args.terrain)?, params);
    config.vix_seed = args.vix_seed;
    config.threads = args.threads;
    config.out_dir = Some(args.out_dir);
    config.snapshots = args.snapshots.as_deref().map(parse_snapshots).transpose()?;

    let report = run_pipeline(&config)?;
    print!("{}", report.to_text());
    Ok(())
}

fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    let grid = TerrainGrid::generate_fractal(args.nrows, args.ncols, args.roughness, args.seed, args.zmin, args.zmax)?;
    if args.ascii {
        grid.write_ascii(&args.output)?;
    } else {
        grid.write_binary(&args.output)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Some(Command::Generate(g)) => generate(g),
        None => run(cli.run),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
