use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mpcstat::channel::{AngleDomain, Averaging, Segment};
use mpcstat::config::{ConfigError, RunConfig};
use mpcstat::format::{read_trajectory, write_trajectory_string};
use mpcstat::pipeline::{run_stages, PipelineError, Stages};
use mpcstat::synth::{generate, CanyonScene, SynthError};
use mpcstat::Trajectory;

#[derive(Parser)]
#[command(name = "mpcstat", version, about = "Multipath-component statistics for vehicular channel traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a street-canyon trajectory from a scene file.
    Synth {
        /// Scene description (TOML). The built-in default scene is used when omitted.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Output trajectory file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print the default scene as TOML and exit.
        #[arg(long)]
        print_default_scene: bool,
    },
    /// Parse a trajectory file and print a summary.
    Validate { trajectory: PathBuf },
    /// MPC counts, path loss, spread sweeps and gain-weighted spreads.
    Stats(AnalysisArgs),
    /// Cone power fractions and per-cone tracks.
    Cones(AnalysisArgs),
    /// Fallback beams under cone blockage.
    Blockage(AnalysisArgs),
    /// Every table.
    Pipeline(AnalysisArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Aoa,
    Aod,
}

#[derive(Clone, Copy, ValueEnum)]
enum AveragingArg {
    Db,
    Linear,
}

#[derive(Args)]
struct AnalysisArgs {
    trajectory: PathBuf,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Second band at the same locations (congruency table, cone hints).
    #[arg(long)]
    companion: Option<PathBuf>,
    /// Drop MPCs more than this many dB below the strongest.
    #[arg(long)]
    mpct_db: Option<f64>,
    /// Thresholds for the MPC-count table, comma separated.
    #[arg(long, value_delimiter = ',')]
    mpct_sweep: Option<Vec<f64>>,
    /// Beamwidths in degrees for the spread sweep, comma separated.
    #[arg(long = "bew", value_delimiter = ',')]
    bew_values: Option<Vec<f64>>,
    /// Multiplier on the half-beamwidth window.
    #[arg(long)]
    window_scale: Option<f64>,
    /// Cone HPBW pair `AZxEL`, repeatable.
    #[arg(long = "hpbw", value_parser = parse_pair)]
    hpbw_pairs: Vec<[f64; 2]>,
    /// Cones built per location.
    #[arg(long)]
    max_cones: Option<usize>,
    /// Multiplier on the cone half-widths.
    #[arg(long)]
    cone_scale: Option<f64>,
    /// Angles used to build cones.
    #[arg(long, value_enum)]
    cone_domain: Option<DomainArg>,
    /// Path-loss averaging domain.
    #[arg(long, value_enum)]
    averaging: Option<AveragingArg>,
    /// Azimuth HPBWs for gain-weighted spreads, comma separated.
    #[arg(long, value_delimiter = ',')]
    beamweight_hpbw_az: Option<Vec<f64>>,
    /// Elevation HPBW for gain-weighted spreads.
    #[arg(long)]
    beamweight_hpbw_el: Option<f64>,
    /// Skip receive-side gain weighting.
    #[arg(long)]
    no_rx_weight: bool,
    /// Skip transmit-side gain weighting.
    #[arg(long)]
    no_tx_weight: bool,
    /// Apply a hard beam window on top of the antenna weights.
    #[arg(long)]
    beamweight_window: bool,
    /// Take cone boresights from the companion trajectory.
    #[arg(long)]
    cone_hint: bool,
    /// Directory for the CSV tables.
    #[arg(short, long)]
    out_dir: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected AZxEL, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([num(a)?, num(b)?])
}

enum CliError {
    Parse(String),
    Config(String),
    Compute(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Config(_) => 3,
            CliError::Compute(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Config(m) | CliError::Compute(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Parse(_) => CliError::Parse(e.to_string()),
            SynthError::InvalidScene(_) => CliError::Config(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

fn load_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    read_trajectory(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn build_config(args: &AnalysisArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.mpct_db {
        cfg.mpct_db = v;
    }
    if let Some(v) = &args.mpct_sweep {
        cfg.mpct_sweep = v.clone();
    }
    if let Some(v) = &args.bew_values {
        cfg.bew_values = v.clone();
    }
    if let Some(v) = args.window_scale {
        cfg.window_scale = v;
    }
    if !args.hpbw_pairs.is_empty() {
        cfg.hpbw_pairs = args.hpbw_pairs.clone();
    }
    if let Some(v) = args.max_cones {
        cfg.max_cones = v;
    }
    if let Some(v) = args.cone_scale {
        cfg.cone_scale = v;
    }
    if let Some(d) = args.cone_domain {
        cfg.cone_domain = match d {
            DomainArg::Aoa => AngleDomain::Aoa,
            DomainArg::Aod => AngleDomain::Aod,
        };
    }
    if let Some(a) = args.averaging {
        cfg.averaging = match a {
            AveragingArg::Db => Averaging::Db,
            AveragingArg::Linear => Averaging::Linear,
        };
    }
    if let Some(v) = &args.beamweight_hpbw_az {
        cfg.beamweight_hpbw_az = v.clone();
    }
    if let Some(v) = args.beamweight_hpbw_el {
        cfg.beamweight_hpbw_el = v;
    }
    if args.no_rx_weight {
        cfg.rx_weight = false;
    }
    if args.no_tx_weight {
        cfg.tx_weight = false;
    }
    if args.beamweight_window {
        cfg.beamweight_window = true;
    }
    if args.cone_hint {
        cfg.cone_hint = true;
    }
    if let Some(v) = &args.out_dir {
        cfg.out_dir = v.clone();
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn analyse(args: &AnalysisArgs, stages: Stages) -> Result<(), CliError> {
    let cfg = build_config(args)?;
    let trajectory = load_trajectory(&args.trajectory)?;
    let companion = args.companion.as_deref().map(load_trajectory).transpose()?;
    let output = run_stages(&cfg, &trajectory, companion.as_ref(), stages)?;
    for path in output.write_to(&cfg.out_dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn synth(scene: Option<&Path>, output: Option<&Path>, print_default: bool) -> Result<(), CliError> {
    if print_default {
        print!("{}", CanyonScene::default().to_toml());
        return Ok(());
    }
    let scene = match scene {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?;
            CanyonScene::from_toml(&text)?
        }
        None => CanyonScene::default(),
    };
    let trajectory = generate(&scene)?;
    let text = write_trajectory_string(&trajectory).map_err(|e| CliError::Compute(e.to_string()))?;
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Compute(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn validate(path: &Path) -> Result<(), CliError> {
    let t = load_trajectory(path)?;
    let count = |seg| t.segment_snapshots(seg).count();
    let n_mpcs: usize = t.snapshots.iter().map(|s| s.mpcs.len()).sum();
    println!("band {} ({} GHz), tx {} dBm", t.band.label, t.band.freq_ghz, t.tx_power_dbm);
    println!(
        "{} locations ({} NLOS, {} LOS), {} MPCs",
        t.snapshots.len(),
        count(Segment::Nlos),
        count(Segment::Los),
        n_mpcs
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth { scene, output, print_default_scene } => {
            synth(scene.as_deref(), output.as_deref(), *print_default_scene)
        }
        Command::Validate { trajectory } => validate(trajectory),
        Command::Stats(a) => analyse(a, Stages { stats: true, cones: false, blockage: false }),
        Command::Cones(a) => analyse(a, Stages { stats: false, cones: true, blockage: false }),
        Command::Blockage(a) => analyse(a, Stages { stats: false, cones: false, blockage: true }),
        Command::Pipeline(a) => analyse(a, Stages::ALL),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
