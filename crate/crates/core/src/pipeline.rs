//! End-to-end batch run: threshold the trajectory, compute every statistic,
//! and lay the results out as fixed-schema CSV tables.
//!
//! Per-location work runs on a rayon pool; results are gathered in location
//! order and reduced sequentially, so the output bytes do not depend on the
//! number of workers.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::angle::Direction;
use crate::antenna::{aligned_patterns, weighted_spread, AntennaError, SpreadTarget};
use crate::channel::{
    avg_path_loss, congruency_offset, mpct_sweep, AngleDomain, ChannelError, Segment, Snapshot, Trajectory,
};
use crate::cones::{
    blocked_fallback, build_cones, build_cones_hinted, fractional_power, hint_for, track_records, ConeError,
    ConeParams, ConeTrackRecord, Fallback,
};
use crate::config::RunConfig;
use crate::format::fmt_sig9;
use crate::spread::{aligned_spread_scaled, filter_beam, BeamConfig, Metric, Plane, SpreadError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Spread(#[from] SpreadError),
    #[error(transparent)]
    Antenna(#[from] AntennaError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error("location {location}: {source}")]
    AtLocation {
        location: u32,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => fmt_sig9(*x),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

fn text(s: impl ToString) -> Cell {
    Cell::Text(s.to_string())
}

fn opt_num(x: Option<f64>) -> Cell {
    x.map_or(Cell::Empty, Cell::Num)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

pub const MPCT_SWEEP_HEADER: &[&str] = &["mpct_db", "segment", "bounce_class", "mean_mpc_count"];
pub const PATH_LOSS_HEADER: &[&str] = &["segment", "bounce_class", "n_mpcs", "mean_pl_db"];
pub const SPREAD_HEADER: &[&str] = &["domain", "plane", "metric", "bew_deg", "segment", "n_locations", "mean_rms"];
pub const WEIGHTED_HEADER: &[&str] = &[
    "domain",
    "plane",
    "metric",
    "hpbw_az_deg",
    "hpbw_el_deg",
    "window",
    "segment",
    "n_locations",
    "mean_rms_unweighted",
    "mean_rms_weighted",
];
pub const CONE_FRACTIONS_HEADER: &[&str] =
    &["hpbw_az_deg", "hpbw_el_deg", "location_index", "segment", "cone", "n_members", "fraction"];
pub const CONE_TRACKS_HEADER: &[&str] = &[
    "hpbw_az_deg",
    "hpbw_el_deg",
    "location_index",
    "segment",
    "rank",
    "mpc_index",
    "power_dbm",
    "aoa_az_deg",
    "aoa_el_deg",
    "aod_az_deg",
    "aod_el_deg",
];
pub const BLOCKAGE_HEADER: &[&str] = &[
    "hpbw_az_deg",
    "hpbw_el_deg",
    "location_index",
    "segment",
    "blocked",
    "outcome",
    "mpc_index",
    "cone",
    "power_dbm",
    "power_drop_db",
    "aoa_az_deg",
    "aoa_el_deg",
];
pub const CONGRUENCY_HEADER: &[&str] = &["location_index", "segment", "offset_deg"];

/// Spread statistics reported by the beamwidth sweep, in output order.
pub const SPREAD_COMBOS: [(AngleDomain, Plane, Metric); 8] = [
    (AngleDomain::Aoa, Plane::Azimuth, Metric::Angular),
    (AngleDomain::Aoa, Plane::Elevation, Metric::Angular),
    (AngleDomain::Aod, Plane::Azimuth, Metric::Angular),
    (AngleDomain::Aod, Plane::Elevation, Metric::Angular),
    (AngleDomain::Aoa, Plane::Azimuth, Metric::Delay),
    (AngleDomain::Aoa, Plane::Elevation, Metric::Delay),
    (AngleDomain::Aod, Plane::Azimuth, Metric::Delay),
    (AngleDomain::Aod, Plane::Elevation, Metric::Delay),
];

/// Gain-weighted statistics, all in the azimuth plane. The delay spread does
/// not depend on a measured domain and is reported once.
pub const WEIGHTED_TARGETS: [(Option<AngleDomain>, Metric); 3] =
    [(Some(AngleDomain::Aoa), Metric::Angular), (Some(AngleDomain::Aod), Metric::Angular), (None, Metric::Delay)];

/// Sets of cone ranks blocked in the blockage table: nothing, each single
/// rank, then growing prefixes `1+2`, `1+2+3`, ...
pub fn blockage_patterns(max_cones: usize) -> Vec<BTreeSet<usize>> {
    let mut out = vec![BTreeSet::new()];
    out.extend((1..=max_cones).map(|r| BTreeSet::from([r])));
    out.extend((2..=max_cones).map(|r| (1..=r).collect()));
    out
}

pub fn pattern_label(blocked: &BTreeSet<usize>) -> String {
    if blocked.is_empty() {
        return "none".to_string();
    }
    blocked.iter().map(usize::to_string).collect::<Vec<_>>().join("+")
}

/// Per-location output of one cone configuration.
struct ConeLocation {
    fractions: Vec<(usize, usize, f64)>,
    residual: (usize, f64),
    tracks: Vec<ConeTrackRecord>,
    blockage: Vec<(String, Fallback, Option<Direction>)>,
    unblocked_dbm: f64,
}

struct LocationResult {
    location_index: u32,
    segment: Segment,
    /// `[combo][bew]`
    spreads: Vec<Vec<f64>>,
    /// `[hpbw][target]` as (unweighted, weighted)
    weighted: Vec<Vec<(f64, f64)>>,
    /// `[hpbw pair]`
    cones: Vec<ConeLocation>,
}

fn weighted_for_location(snapshot: &Snapshot, cfg: &RunConfig) -> Result<Vec<Vec<(f64, f64)>>, PipelineError> {
    let strongest = snapshot.strongest().ok_or(ChannelError::NoMpcs)?;
    let aoa = snapshot.mpcs[strongest].aoa;
    let aod = snapshot.mpcs[strongest].aod;
    cfg.beamweight_hpbw_az
        .iter()
        .map(|&hpbw| {
            let (rx_pat, tx_pat) = aligned_patterns(snapshot, hpbw, cfg.beamweight_hpbw_el, true)?;
            let rx = cfg.rx_weight.then_some(rx_pat);
            let tx = cfg.tx_weight.then_some(tx_pat);
            let mut base = snapshot.clone();
            if cfg.beamweight_window {
                if rx.is_some() {
                    let beam = BeamConfig::in_plane(aoa, Plane::Azimuth, hpbw, AngleDomain::Aoa)?
                        .with_window_scale(cfg.window_scale)?;
                    base = filter_beam(&base, &beam);
                }
                if tx.is_some() {
                    let beam = BeamConfig::in_plane(aod, Plane::Azimuth, hpbw, AngleDomain::Aod)?
                        .with_window_scale(cfg.window_scale)?;
                    base = filter_beam(&base, &beam);
                }
            }
            WEIGHTED_TARGETS
                .iter()
                .map(|&(domain, metric)| {
                    let target =
                        SpreadTarget { domain: domain.unwrap_or(AngleDomain::Aoa), plane: Plane::Azimuth, metric };
                    let plain = weighted_spread(&base, None, None, target)?.rms;
                    let weighted = weighted_spread(&base, rx.as_ref(), tx.as_ref(), target)?.rms;
                    Ok((plain, weighted))
                })
                .collect()
        })
        .collect()
}

fn cones_for_location(
    snapshot: &Snapshot,
    hint: Option<&Snapshot>,
    params: &ConeParams,
) -> Result<ConeLocation, PipelineError> {
    let decomposition = match hint {
        Some(h) => build_cones_hinted(snapshot, h, params)?,
        None => build_cones(snapshot, params)?,
    };
    let fractions = fractional_power(&decomposition);
    let existing: BTreeSet<usize> = decomposition.cones.iter().map(|c| c.rank).collect();
    let unblocked_dbm = snapshot.max_power_dbm().ok_or(ChannelError::NoMpcs)?;
    let blockage = blockage_patterns(params.max_cones)
        .into_iter()
        .map(|pattern| {
            let effective: BTreeSet<usize> = pattern.intersection(&existing).copied().collect();
            let fb = blocked_fallback(snapshot, &decomposition, &effective)?;
            let dir = match fb {
                Fallback::Locked { mpc_index, .. } => Some(snapshot.mpcs[mpc_index].direction(params.domain)),
                Fallback::Outage => None,
            };
            Ok((pattern_label(&pattern), fb, dir))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(ConeLocation {
        fractions: decomposition
            .cones
            .iter()
            .zip(&fractions)
            .map(|(c, &f)| (c.rank, c.member_indices.len(), f))
            .collect(),
        residual: (decomposition.residual_indices.len(), decomposition.residual_fraction()),
        tracks: track_records(snapshot, &decomposition, params.max_cones),
        blockage,
        unblocked_dbm,
    })
}

fn analyse_location(
    snapshot: &Snapshot,
    hint: Option<&Snapshot>,
    cfg: &RunConfig,
    cone_params: &[ConeParams],
) -> Result<LocationResult, PipelineError> {
    let spreads = SPREAD_COMBOS
        .iter()
        .map(|&(domain, plane, metric)| {
            cfg.bew_values
                .iter()
                .map(|&bew| Ok(aligned_spread_scaled(snapshot, domain, plane, metric, bew, cfg.window_scale)?.rms))
                .collect::<Result<Vec<_>, PipelineError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let weighted = weighted_for_location(snapshot, cfg)?;
    let cones = cone_params.iter().map(|p| cones_for_location(snapshot, hint, p)).collect::<Result<Vec<_>, _>>()?;
    Ok(LocationResult { location_index: snapshot.location_index, segment: snapshot.segment, spreads, weighted, cones })
}

/// Output of a pipeline run, one table per CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub tables: Vec<Table>,
}

impl PipelineOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes every table into `dir` as `<name>` and returns the paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.to_path_buf(), source })?;
        self.tables
            .iter()
            .map(|t| {
                let path = dir.join(t.name);
                std::fs::write(&path, t.to_csv()).map_err(|source| PipelineError::Io { path: path.clone(), source })?;
                Ok(path)
            })
            .collect()
    }
}

/// Which groups of tables to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub stats: bool,
    pub cones: bool,
    pub blockage: bool,
}

impl Stages {
    pub const ALL: Stages = Stages { stats: true, cones: true, blockage: true };
}

fn segment_means<'a>(
    results: &'a [LocationResult],
    value: impl Fn(&'a LocationResult) -> f64,
) -> Vec<(Segment, usize, f64)> {
    Segment::ALL
        .iter()
        .filter_map(|&seg| {
            let vals: Vec<f64> = results.iter().filter(|r| r.segment == seg).map(&value).collect();
            (!vals.is_empty()).then(|| (seg, vals.len(), vals.iter().sum::<f64>() / vals.len() as f64))
        })
        .collect()
}

/// Runs every stage on `trajectory`. `companion` is a second band sampled at
/// the same locations; it enables the congruency table and, with
/// `cfg.cone_hint`, supplies cone boresights.
pub fn run_pipeline(
    cfg: &RunConfig,
    trajectory: &Trajectory,
    companion: Option<&Trajectory>,
) -> Result<PipelineOutput, PipelineError> {
    run_stages(cfg, trajectory, companion, Stages::ALL)
}

pub fn run_stages(
    cfg: &RunConfig,
    trajectory: &Trajectory,
    companion: Option<&Trajectory>,
    stages: Stages,
) -> Result<PipelineOutput, PipelineError> {
    cfg.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    if cfg.cone_hint && companion.is_none() {
        return Err(PipelineError::Config("cone_hint requires a companion trajectory".into()));
    }
    if trajectory.snapshots.is_empty() {
        return Err(ChannelError::EmptyTrajectory.into());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(cfg, trajectory, companion, stages))
}

fn run_in_pool(
    cfg: &RunConfig,
    trajectory: &Trajectory,
    companion: Option<&Trajectory>,
    stages: Stages,
) -> Result<PipelineOutput, PipelineError> {
    let gated = trajectory.with_mpct(cfg.mpct_db)?;
    let gated_companion = companion.map(|c| c.with_mpct(cfg.mpct_db)).transpose()?;
    let hint_traj = if cfg.cone_hint { gated_companion.as_ref() } else { None };

    let cone_params: Vec<ConeParams> = if stages.cones || stages.blockage {
        cfg.hpbw_pairs
            .iter()
            .map(|&[az, el]| {
                let mut p = ConeParams::new(az, el, cfg.max_cones)?;
                p.domain = cfg.cone_domain;
                p.scale = cfg.cone_scale;
                Ok(p)
            })
            .collect::<Result<_, ConeError>>()?
    } else {
        Vec::new()
    };
    let stats_cfg = if stages.stats {
        cfg.clone()
    } else {
        RunConfig { bew_values: vec![], beamweight_hpbw_az: vec![], ..cfg.clone() }
    };

    let results: Vec<LocationResult> = gated
        .snapshots
        .par_iter()
        .map(|s| {
            let hint = hint_traj.map(|h| hint_for(h, s.location_index)).transpose()?;
            analyse_location(s, hint, &stats_cfg, &cone_params)
                .map_err(|e| PipelineError::AtLocation { location: s.location_index, source: Box::new(e) })
        })
        .collect::<Result<_, _>>()?;

    let mut tables = Vec::new();
    if stages.stats {
        tables.push(mpct_table(trajectory, cfg)?);
        tables.push(path_loss_table(trajectory, cfg)?);
        tables.push(spread_table(&results, cfg));
        tables.push(weighted_table(&results, cfg));
    }
    if stages.cones {
        tables.push(cone_fraction_table(&results, &cone_params));
        tables.push(cone_track_table(&results, &cone_params));
    }
    if stages.blockage {
        tables.push(blockage_table(&results, &cone_params));
    }
    if let (true, Some(c)) = (stages.stats, companion) {
        tables.push(congruency_table(&gated, c)?);
    }
    Ok(PipelineOutput { tables })
}

fn mpct_table(trajectory: &Trajectory, cfg: &RunConfig) -> Result<Table, PipelineError> {
    let rows = mpct_sweep(trajectory, &cfg.mpct_sweep)?
        .into_iter()
        .map(|r| vec![Cell::Num(r.mpct_db), text(r.segment), text(r.class), Cell::Num(r.mean_count)])
        .collect();
    Ok(Table { name: "mpct_sweep.csv", header: MPCT_SWEEP_HEADER, rows })
}

fn path_loss_table(trajectory: &Trajectory, cfg: &RunConfig) -> Result<Table, PipelineError> {
    let rows = avg_path_loss(trajectory, cfg.mpct_db, cfg.averaging)?
        .into_iter()
        .map(|r| vec![text(r.segment), text(r.class), Cell::Int(r.n_mpcs as u64), opt_num(r.mean_pl_db)])
        .collect();
    Ok(Table { name: "path_loss.csv", header: PATH_LOSS_HEADER, rows })
}

fn spread_table(results: &[LocationResult], cfg: &RunConfig) -> Table {
    let mut rows = Vec::new();
    for (c, &(domain, plane, metric)) in SPREAD_COMBOS.iter().enumerate() {
        for (b, &bew) in cfg.bew_values.iter().enumerate() {
            for (seg, n, mean) in segment_means(results, |r| r.spreads[c][b]) {
                rows.push(vec![
                    text(domain),
                    text(plane),
                    text(metric),
                    Cell::Num(bew),
                    text(seg),
                    Cell::Int(n as u64),
                    Cell::Num(mean),
                ]);
            }
        }
    }
    Table { name: "spread_vs_bew.csv", header: SPREAD_HEADER, rows }
}

fn weighted_table(results: &[LocationResult], cfg: &RunConfig) -> Table {
    let mut rows = Vec::new();
    let window = if cfg.beamweight_window { "hard" } else { "none" };
    for (t, &(domain, metric)) in WEIGHTED_TARGETS.iter().enumerate() {
        for (h, &hpbw) in cfg.beamweight_hpbw_az.iter().enumerate() {
            let plain = segment_means(results, |r| r.weighted[h][t].0);
            let weighted = segment_means(results, |r| r.weighted[h][t].1);
            for ((seg, n, p), (_, _, w)) in plain.into_iter().zip(weighted) {
                rows.push(vec![
                    domain.map_or_else(|| text("-"), text),
                    text(Plane::Azimuth),
                    text(metric),
                    Cell::Num(hpbw),
                    Cell::Num(cfg.beamweight_hpbw_el),
                    text(window),
                    text(seg),
                    Cell::Int(n as u64),
                    Cell::Num(p),
                    Cell::Num(w),
                ]);
            }
        }
    }
    Table { name: "weighted_spread.csv", header: WEIGHTED_HEADER, rows }
}

fn cone_prefix(p: &ConeParams, r: &LocationResult) -> Vec<Cell> {
    vec![Cell::Num(p.hpbw_az_deg), Cell::Num(p.hpbw_el_deg), Cell::Int(r.location_index as u64), text(r.segment)]
}

fn cone_fraction_table(results: &[LocationResult], params: &[ConeParams]) -> Table {
    let mut rows = Vec::new();
    for (k, p) in params.iter().enumerate() {
        for r in results {
            let loc = &r.cones[k];
            for &(rank, n, f) in &loc.fractions {
                let mut row = cone_prefix(p, r);
                row.extend([Cell::Int(rank as u64), Cell::Int(n as u64), Cell::Num(f)]);
                rows.push(row);
            }
            let mut row = cone_prefix(p, r);
            row.extend([text("residual"), Cell::Int(loc.residual.0 as u64), Cell::Num(loc.residual.1)]);
            rows.push(row);
        }
    }
    Table { name: "cone_fractions.csv", header: CONE_FRACTIONS_HEADER, rows }
}

fn cone_track_table(results: &[LocationResult], params: &[ConeParams]) -> Table {
    let mut rows = Vec::new();
    for (k, p) in params.iter().enumerate() {
        for r in results {
            for rec in &r.cones[k].tracks {
                let mut row = cone_prefix(p, r);
                row.push(Cell::Int(rec.rank as u64));
                match rec.strongest {
                    Some(tp) => row.extend([
                        Cell::Int(tp.mpc_index as u64),
                        Cell::Num(tp.power_dbm),
                        Cell::Num(tp.aoa.az_deg),
                        Cell::Num(tp.aoa.el_deg),
                        Cell::Num(tp.aod.az_deg),
                        Cell::Num(tp.aod.el_deg),
                    ]),
                    None => row.extend(std::iter::repeat_n(Cell::Empty, 6)),
                }
                rows.push(row);
            }
        }
    }
    Table { name: "cone_tracks.csv", header: CONE_TRACKS_HEADER, rows }
}

fn blockage_table(results: &[LocationResult], params: &[ConeParams]) -> Table {
    let mut rows = Vec::new();
    for (k, p) in params.iter().enumerate() {
        for r in results {
            let loc = &r.cones[k];
            for (label, fb, dir) in &loc.blockage {
                let mut row = cone_prefix(p, r);
                row.push(text(label));
                match (fb, dir) {
                    (Fallback::Locked { mpc_index, power_dbm, cone_rank }, Some(d)) => row.extend([
                        text("locked"),
                        Cell::Int(*mpc_index as u64),
                        cone_rank.map_or_else(|| text("residual"), |c| Cell::Int(c as u64)),
                        Cell::Num(*power_dbm),
                        Cell::Num(loc.unblocked_dbm - power_dbm),
                        Cell::Num(d.az_deg),
                        Cell::Num(d.el_deg),
                    ]),
                    _ => {
                        row.push(text("outage"));
                        row.extend(std::iter::repeat_n(Cell::Empty, 6));
                    }
                }
                rows.push(row);
            }
        }
    }
    Table { name: "blockage.csv", header: BLOCKAGE_HEADER, rows }
}

fn congruency_table(gated: &Trajectory, companion: &Trajectory) -> Result<Table, PipelineError> {
    let rows = congruency_offset(gated, companion)?
        .into_iter()
        .zip(&gated.snapshots)
        .map(|((loc, off), s)| vec![Cell::Int(loc as u64), text(s.segment), Cell::Num(off)])
        .collect();
    Ok(Table { name: "congruency.csv", header: CONGRUENCY_HEADER, rows })
}
