//! Channel data model: multipath components, per-location snapshots,
//! trajectories, MPC thresholding and path-loss statistics.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::{is_valid_azimuth, is_valid_elevation, Direction};

/// Default relative MPC threshold in dB.
pub const DEFAULT_MPCT_DB: f64 = 40.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("no MPCs")]
    NoMpcs,
    #[error("trajectory has no snapshots")]
    EmptyTrajectory,
    #[error("MPC threshold must be a non-negative number of dB, got {0}")]
    InvalidThreshold(f64),
    #[error("threshold list is empty")]
    EmptyThresholdList,
    #[error("invalid MPC: {0}")]
    InvalidMpc(String),
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("location sets differ between trajectories (location {0})")]
    LocationMismatch(u32),
    #[error("location {0} appears more than once or out of order")]
    UnorderedLocations(u32),
}

/// One discrete propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub power_dbm: f64,
    pub phase_deg: f64,
    pub delay_s: f64,
    pub aoa: Direction,
    pub aod: Direction,
    pub n_reflections: u32,
    pub n_diffractions: u32,
}

impl Mpc {
    /// Checks the range invariants on every field.
    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |m: &str| Err(ChannelError::InvalidMpc(m.to_string()));
        if !self.power_dbm.is_finite() {
            return bad("power_dbm must be finite");
        }
        if !(0.0..360.0).contains(&self.phase_deg) {
            return bad("phase_deg must lie in [0, 360)");
        }
        if !(self.delay_s.is_finite() && self.delay_s >= 0.0) {
            return bad("delay_s must be finite and non-negative");
        }
        for (name, dir) in [("aoa", &self.aoa), ("aod", &self.aod)] {
            if !is_valid_azimuth(dir.az_deg) {
                return Err(ChannelError::InvalidMpc(format!("{name} azimuth outside [-180, 180)")));
            }
            if !is_valid_elevation(dir.el_deg) {
                return Err(ChannelError::InvalidMpc(format!("{name} elevation outside [-90, 90]")));
            }
        }
        Ok(())
    }

    pub fn direction(&self, domain: AngleDomain) -> Direction {
        match domain {
            AngleDomain::Aoa => self.aoa,
            AngleDomain::Aod => self.aod,
        }
    }

    /// Linear amplitude relative to a 1 mW reference.
    pub fn amplitude(&self) -> f64 {
        10f64.powf(self.power_dbm / 20.0)
    }

    /// Complex amplitude-and-phase term `rho * exp(-j phi)` as (re, im).
    pub fn anp(&self) -> (f64, f64) {
        let rho = self.amplitude();
        let phi = self.phase_deg.to_radians();
        (rho * phi.cos(), -rho * phi.sin())
    }

    pub fn bounce_class(&self) -> BounceClass {
        classify_bounce(self)
    }
}

/// Which end of the link an angle belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleDomain {
    Aoa,
    Aod,
}

impl fmt::Display for AngleDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AngleDomain::Aoa => "AOA",
            AngleDomain::Aod => "AOD",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Segment {
    Los,
    Nlos,
}

impl Segment {
    pub const ALL: [Segment; 2] = [Segment::Los, Segment::Nlos];
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Segment::Los => "LOS",
            Segment::Nlos => "NLOS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BounceClass {
    Direct,
    Single,
    Double,
    BeyondDouble,
}

impl BounceClass {
    pub const ALL: [BounceClass; 4] =
        [BounceClass::Direct, BounceClass::Single, BounceClass::Double, BounceClass::BeyondDouble];

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BounceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BounceClass::Direct => "direct",
            BounceClass::Single => "single",
            BounceClass::Double => "double",
            BounceClass::BeyondDouble => "beyond_double",
        })
    }
}

/// Reflection-order class. Any diffraction puts a path in `BeyondDouble`.
pub fn classify_bounce(mpc: &Mpc) -> BounceClass {
    if mpc.n_diffractions > 0 {
        return BounceClass::BeyondDouble;
    }
    match mpc.n_reflections {
        0 => BounceClass::Direct,
        1 => BounceClass::Single,
        2 => BounceClass::Double,
        _ => BounceClass::BeyondDouble,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub label: String,
    pub freq_ghz: f64,
}

impl BandSpec {
    pub fn new(label: impl Into<String>, freq_ghz: f64) -> Result<Self, ChannelError> {
        let label = label.into();
        if !(freq_ghz.is_finite() && freq_ghz > 0.0) {
            return Err(ChannelError::InvalidBand(format!("freq_ghz must be > 0, got {freq_ghz}")));
        }
        if label.is_empty() || label.contains(|c: char| c.is_whitespace() || c == ',' || c == '=') {
            return Err(ChannelError::InvalidBand(format!("bad label {label:?}")));
        }
        Ok(Self { label, freq_ghz })
    }

    /// Bands f1..f8 of the reference ray-tracing campaign.
    pub fn standard(index: usize) -> Option<Self> {
        const FREQS: [f64; 8] = [0.9, 1.8, 2.1, 5.0, 5.9, 28.0, 38.0, 73.0];
        let freq = *FREQS.get(index.checked_sub(1)?)?;
        Some(Self { label: format!("f{index}"), freq_ghz: freq })
    }
}

/// All MPCs seen at one vehicle location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub location_index: u32,
    pub segment: Segment,
    pub mpcs: Vec<Mpc>,
}

impl Snapshot {
    pub fn new(location_index: u32, segment: Segment, mpcs: Vec<Mpc>) -> Result<Self, ChannelError> {
        if mpcs.is_empty() {
            return Err(ChannelError::NoMpcs);
        }
        for m in &mpcs {
            m.validate()?;
        }
        Ok(Self { location_index, segment, mpcs })
    }

    pub fn len(&self) -> usize {
        self.mpcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mpcs.is_empty()
    }

    /// Index of the strongest MPC, see [`strongest_index`].
    pub fn strongest(&self) -> Option<usize> {
        strongest_index(&self.mpcs, 0..self.mpcs.len())
    }

    /// Largest power among the MPCs.
    pub fn max_power_dbm(&self) -> Option<f64> {
        self.strongest().map(|i| self.mpcs[i].power_dbm)
    }

    /// Same location with a different MPC list.
    pub fn with_mpcs(&self, mpcs: Vec<Mpc>) -> Self {
        Self { location_index: self.location_index, segment: self.segment, mpcs }
    }
}

/// Ordered snapshots of one band along a vehicle route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub band: BandSpec,
    pub tx_power_dbm: f64,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn new(band: BandSpec, tx_power_dbm: f64, snapshots: Vec<Snapshot>) -> Result<Self, ChannelError> {
        let mut prev: Option<u32> = None;
        for s in &snapshots {
            if prev.is_some_and(|p| s.location_index <= p) {
                return Err(ChannelError::UnorderedLocations(s.location_index));
            }
            prev = Some(s.location_index);
        }
        Ok(Self { band, tx_power_dbm, snapshots })
    }

    pub fn segment_snapshots(&self, segment: Segment) -> impl Iterator<Item = &Snapshot> {
        self.snapshots.iter().filter(move |s| s.segment == segment)
    }

    /// Copy of the trajectory with the threshold applied to every snapshot.
    pub fn with_mpct(&self, mpct_db: f64) -> Result<Self, ChannelError> {
        let snapshots = self.snapshots.iter().map(|s| apply_mpct(s, mpct_db)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { band: self.band.clone(), tx_power_dbm: self.tx_power_dbm, snapshots })
    }
}

/// Strongest MPC among `candidates`. Ties go to the smaller delay, then to
/// the earlier index.
pub fn strongest_index(mpcs: &[Mpc], candidates: impl IntoIterator<Item = usize>) -> Option<usize> {
    candidates.into_iter().min_by(|&a, &b| {
        let (ma, mb) = (&mpcs[a], &mpcs[b]);
        mb.power_dbm.total_cmp(&ma.power_dbm).then(ma.delay_s.total_cmp(&mb.delay_s)).then(a.cmp(&b))
    })
}

/// Linear power of `power_dbm` relative to `reference_dbm`.
pub(crate) fn relative_linear(power_dbm: f64, reference_dbm: f64) -> f64 {
    10f64.powf((power_dbm - reference_dbm) / 10.0)
}

fn check_mpct(mpct_db: f64) -> Result<(), ChannelError> {
    if mpct_db.is_nan() || mpct_db < 0.0 {
        return Err(ChannelError::InvalidThreshold(mpct_db));
    }
    Ok(())
}

/// Indices of the MPCs within `mpct_db` of the strongest one.
pub fn mpct_indices(snapshot: &Snapshot, mpct_db: f64) -> Result<Vec<usize>, ChannelError> {
    check_mpct(mpct_db)?;
    let max = snapshot.max_power_dbm().ok_or(ChannelError::NoMpcs)?;
    Ok(snapshot.mpcs.iter().enumerate().filter(|(_, m)| m.power_dbm - max >= -mpct_db).map(|(i, _)| i).collect())
}

/// Keeps the MPCs with power at or above `max - mpct_db`, in input order.
pub fn apply_mpct(snapshot: &Snapshot, mpct_db: f64) -> Result<Snapshot, ChannelError> {
    let keep = mpct_indices(snapshot, mpct_db)?;
    Ok(snapshot.with_mpcs(keep.into_iter().map(|i| snapshot.mpcs[i]).collect()))
}

fn class_counts(mpcs: &[Mpc]) -> [usize; 4] {
    let mut counts = [0usize; 4];
    for m in mpcs {
        counts[classify_bounce(m).slot()] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpctSweepRow {
    pub mpct_db: f64,
    pub segment: Segment,
    pub class: BounceClass,
    pub mean_count: f64,
}

/// Mean number of surviving MPCs per bounce class, per segment, for each
/// threshold. Segments with no snapshots produce no rows.
pub fn mpct_sweep(trajectory: &Trajectory, mpct_values: &[f64]) -> Result<Vec<MpctSweepRow>, ChannelError> {
    if mpct_values.is_empty() {
        return Err(ChannelError::EmptyThresholdList);
    }
    let mut rows = Vec::new();
    for &mpct in mpct_values {
        for segment in Segment::ALL {
            let mut totals = [0usize; 4];
            let mut n = 0usize;
            for snap in trajectory.segment_snapshots(segment) {
                let kept = apply_mpct(snap, mpct)?;
                for (t, c) in totals.iter_mut().zip(class_counts(&kept.mpcs)) {
                    *t += c;
                }
                n += 1;
            }
            if n == 0 {
                continue;
            }
            rows.extend(BounceClass::ALL.iter().map(|&class| MpctSweepRow {
                mpct_db: mpct,
                segment,
                class,
                mean_count: totals[class.slot()] as f64 / n as f64,
            }));
        }
    }
    Ok(rows)
}

/// How path-loss values are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Arithmetic mean of the dB values.
    #[default]
    Db,
    /// Mean of the linear received powers, converted back to dB.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathLossRow {
    pub segment: Segment,
    pub class: BounceClass,
    pub n_mpcs: usize,
    /// `None` when no MPC of the class survived anywhere in the segment.
    pub mean_pl_db: Option<f64>,
}

/// Mean path loss (`tx_power - power_dbm`) per segment and bounce class over
/// all MPCs surviving the threshold.
pub fn avg_path_loss(
    trajectory: &Trajectory,
    mpct_db: f64,
    averaging: Averaging,
) -> Result<Vec<PathLossRow>, ChannelError> {
    if trajectory.snapshots.is_empty() {
        return Err(ChannelError::EmptyTrajectory);
    }
    let mut rows = Vec::new();
    for segment in Segment::ALL {
        let mut per_class: [Vec<f64>; 4] = Default::default();
        let mut any = false;
        for snap in trajectory.segment_snapshots(segment) {
            any = true;
            for m in apply_mpct(snap, mpct_db)?.mpcs {
                per_class[classify_bounce(&m).slot()].push(trajectory.tx_power_dbm - m.power_dbm);
            }
        }
        if !any {
            continue;
        }
        for class in BounceClass::ALL {
            let losses = &per_class[class.slot()];
            rows.push(PathLossRow { segment, class, n_mpcs: losses.len(), mean_pl_db: mean_loss(losses, averaging) });
        }
    }
    Ok(rows)
}

fn mean_loss(losses: &[f64], averaging: Averaging) -> Option<f64> {
    if losses.is_empty() {
        return None;
    }
    let n = losses.len() as f64;
    Some(match averaging {
        Averaging::Db => losses.iter().sum::<f64>() / n,
        Averaging::Linear => {
            // mean of 10^(-PL/10), referenced to the smallest loss
            let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
            let mean_rel = losses.iter().map(|&l| relative_linear(min, l)).sum::<f64>() / n;
            min - 10.0 * mean_rel.log10()
        }
    })
}

/// Great-circle angle between the strongest-MPC arrival directions of two
/// trajectories sampled at the same locations.
pub fn congruency_offset(a: &Trajectory, b: &Trajectory) -> Result<Vec<(u32, f64)>, ChannelError> {
    if a.snapshots.len() != b.snapshots.len() {
        let loc = a
            .snapshots
            .iter()
            .zip(&b.snapshots)
            .find(|(x, y)| x.location_index != y.location_index)
            .map(|(x, _)| x.location_index)
            .or_else(|| match a.snapshots.len().cmp(&b.snapshots.len()) {
                Ordering::Greater => a.snapshots.get(b.snapshots.len()).map(|s| s.location_index),
                _ => b.snapshots.get(a.snapshots.len()).map(|s| s.location_index),
            })
            .unwrap_or(0);
        return Err(ChannelError::LocationMismatch(loc));
    }
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(sa, sb)| {
            if sa.location_index != sb.location_index {
                return Err(ChannelError::LocationMismatch(sa.location_index));
            }
            let ia = sa.strongest().ok_or(ChannelError::NoMpcs)?;
            let ib = sb.strongest().ok_or(ChannelError::NoMpcs)?;
            Ok((sa.location_index, sa.mpcs[ia].aoa.separation_deg(&sb.mpcs[ib].aoa)))
        })
        .collect()
}
