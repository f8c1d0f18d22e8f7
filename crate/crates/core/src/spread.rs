//! Beam alignment on the strongest MPC, hard beamwidth windows, and the
//! power-weighted mean / RMS spread statistics in angle and delay.
//!
//! Angles enter the moment sums as offsets from the beam boresight wrapped to
//! `(-180, 180]`, so a window straddling the ±180° seam is handled exactly.
//! The moments themselves are taken relative to the strongest in-beam MPC,
//! which makes a single-path or co-located set come out at exactly zero.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::{normalize_azimuth, Direction};
use crate::channel::{relative_linear, strongest_index, AngleDomain, Segment, Snapshot, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpreadError {
    #[error("no MPCs")]
    NoMpcs,
    #[error("no MPCs inside the beam")]
    EmptyBeam,
    #[error("beamwidth must lie in (0, 360], got {0}")]
    InvalidBeamwidth(f64),
    #[error("window scale must be positive, got {0}")]
    InvalidWindowScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Plane {
    Azimuth,
    Elevation,
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plane::Azimuth => "az",
            Plane::Elevation => "el",
        })
    }
}

/// Angular or delay spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Angular,
    Delay,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Angular => "AS",
            Metric::Delay => "DS",
        })
    }
}

/// Full azimuth width; any beamwidth at or above it leaves azimuth unfiltered.
pub const FULL_AZIMUTH_DEG: f64 = 360.0;
/// Full elevation width; any beamwidth at or above it leaves elevation unfiltered.
pub const FULL_ELEVATION_DEG: f64 = 180.0;

/// Hard angular window centred on a boresight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub boresight: Direction,
    pub bew_az_deg: f64,
    pub bew_el_deg: f64,
    pub domain: AngleDomain,
    /// Half-width of the window is `window_scale * bew / 2`.
    pub window_scale: f64,
}

fn check_bew(bew: f64) -> Result<(), SpreadError> {
    if !(bew > 0.0 && bew <= FULL_AZIMUTH_DEG) {
        return Err(SpreadError::InvalidBeamwidth(bew));
    }
    Ok(())
}

impl BeamConfig {
    pub fn new(
        boresight: Direction,
        bew_az_deg: f64,
        bew_el_deg: f64,
        domain: AngleDomain,
    ) -> Result<Self, SpreadError> {
        check_bew(bew_az_deg)?;
        check_bew(bew_el_deg)?;
        Ok(Self { boresight, bew_az_deg, bew_el_deg, domain, window_scale: 1.0 })
    }

    /// Window in one plane only; the other plane is left unconstrained.
    pub fn in_plane(
        boresight: Direction,
        plane: Plane,
        bew_deg: f64,
        domain: AngleDomain,
    ) -> Result<Self, SpreadError> {
        match plane {
            Plane::Azimuth => Self::new(boresight, bew_deg, FULL_ELEVATION_DEG, domain),
            Plane::Elevation => Self::new(boresight, FULL_AZIMUTH_DEG, bew_deg, domain),
        }
    }

    pub fn full(boresight: Direction, domain: AngleDomain) -> Self {
        Self { boresight, bew_az_deg: FULL_AZIMUTH_DEG, bew_el_deg: FULL_ELEVATION_DEG, domain, window_scale: 1.0 }
    }

    pub fn with_window_scale(mut self, scale: f64) -> Result<Self, SpreadError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(SpreadError::InvalidWindowScale(scale));
        }
        self.window_scale = scale;
        Ok(self)
    }

    pub fn admits(&self, dir: &Direction) -> bool {
        let az_ok = self.bew_az_deg >= FULL_AZIMUTH_DEG
            || dir.az_offset_from(&self.boresight).abs() <= self.window_scale * self.bew_az_deg / 2.0;
        let el_ok = self.bew_el_deg >= FULL_ELEVATION_DEG
            || dir.el_offset_from(&self.boresight).abs() <= self.window_scale * self.bew_el_deg / 2.0;
        az_ok && el_ok
    }
}

/// Weighted mean and RMS spread over the MPCs inside a beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadResult {
    /// Degrees for angular spreads, seconds for delay spreads.
    pub mean: f64,
    pub rms: f64,
    pub n_mpcs_in_beam: usize,
}

/// Direction of the strongest MPC in the chosen domain.
pub fn select_boresight(snapshot: &Snapshot, domain: AngleDomain) -> Result<Direction, SpreadError> {
    let i = snapshot.strongest().ok_or(SpreadError::NoMpcs)?;
    Ok(snapshot.mpcs[i].direction(domain))
}

/// Indices of the MPCs whose direction in `beam.domain` lies in the window.
pub fn beam_indices(snapshot: &Snapshot, beam: &BeamConfig) -> Vec<usize> {
    snapshot.mpcs.iter().enumerate().filter(|(_, m)| beam.admits(&m.direction(beam.domain))).map(|(i, _)| i).collect()
}

pub fn filter_beam(snapshot: &Snapshot, beam: &BeamConfig) -> Snapshot {
    snapshot.with_mpcs(beam_indices(snapshot, beam).into_iter().map(|i| snapshot.mpcs[i]).collect())
}

/// Weighted first and second central moments of `(value, weight)` pairs.
/// Values are shifted by the value of `pivot` before summation.
pub(crate) fn weighted_moments(samples: &[(f64, f64)], pivot: usize) -> (f64, f64) {
    let origin = samples[pivot].0;
    let total: f64 = samples.iter().map(|&(_, w)| w).sum();
    let mean_shift = samples.iter().map(|&(x, w)| (x - origin) * w).sum::<f64>() / total;
    let var = samples
        .iter()
        .map(|&(x, w)| {
            let d = x - origin - mean_shift;
            d * d * w
        })
        .sum::<f64>()
        / total;
    (origin + mean_shift, var.sqrt())
}

/// Offset of a direction from the boresight in one plane.
pub(crate) fn plane_offset(dir: &Direction, boresight: &Direction, plane: Plane) -> f64 {
    match plane {
        Plane::Azimuth => dir.az_offset_from(boresight),
        Plane::Elevation => dir.el_offset_from(boresight),
    }
}

/// Maps a mean offset back to an absolute angle.
pub(crate) fn offset_to_angle(boresight: &Direction, plane: Plane, offset: f64) -> f64 {
    match plane {
        Plane::Azimuth => normalize_azimuth(boresight.az_deg + offset),
        Plane::Elevation => boresight.el_deg + offset,
    }
}

fn in_beam(snapshot: &Snapshot, beam: &BeamConfig) -> Result<(Vec<usize>, usize, f64), SpreadError> {
    let idx = beam_indices(snapshot, beam);
    let pivot_mpc = strongest_index(&snapshot.mpcs, idx.iter().copied()).ok_or(SpreadError::EmptyBeam)?;
    let pivot = idx.iter().position(|&i| i == pivot_mpc).expect("pivot is a member");
    let reference = snapshot.mpcs[pivot_mpc].power_dbm;
    Ok((idx, pivot, reference))
}

pub fn angular_spread(snapshot: &Snapshot, beam: &BeamConfig, plane: Plane) -> Result<SpreadResult, SpreadError> {
    let (idx, pivot, reference) = in_beam(snapshot, beam)?;
    let samples: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| {
            let m = &snapshot.mpcs[i];
            let x = plane_offset(&m.direction(beam.domain), &beam.boresight, plane);
            (x, relative_linear(m.power_dbm, reference))
        })
        .collect();
    let (mean_offset, rms) = weighted_moments(&samples, pivot);
    Ok(SpreadResult { mean: offset_to_angle(&beam.boresight, plane, mean_offset), rms, n_mpcs_in_beam: idx.len() })
}

/// Power-weighted mean angle (degrees) of the in-beam MPCs in `plane`.
pub fn mean_angle(snapshot: &Snapshot, beam: &BeamConfig, plane: Plane) -> Result<f64, SpreadError> {
    angular_spread(snapshot, beam, plane).map(|r| r.mean)
}

/// RMS angular spread in `plane` over the MPCs admitted by `beam`.
///
/// Use [`BeamConfig::in_plane`] to leave the other plane unconstrained.
pub fn rms_angular_spread(snapshot: &Snapshot, beam: &BeamConfig, plane: Plane) -> Result<SpreadResult, SpreadError> {
    angular_spread(snapshot, beam, plane)
}

/// RMS delay spread (seconds) over the MPCs admitted by `beam`.
pub fn rms_delay_spread(snapshot: &Snapshot, beam: &BeamConfig) -> Result<SpreadResult, SpreadError> {
    let (idx, pivot, reference) = in_beam(snapshot, beam)?;
    let samples: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| {
            let m = &snapshot.mpcs[i];
            (m.delay_s, relative_linear(m.power_dbm, reference))
        })
        .collect();
    let (mean, rms) = weighted_moments(&samples, pivot);
    Ok(SpreadResult { mean, rms, n_mpcs_in_beam: idx.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSweepRow {
    pub bew_deg: f64,
    pub segment: Segment,
    pub n_locations: usize,
    pub mean_rms: f64,
}

/// Spread of one snapshot with the beam re-aligned on its strongest MPC and
/// a window of `bew_deg` in `plane` only.
pub fn aligned_spread(
    snapshot: &Snapshot,
    domain: AngleDomain,
    plane: Plane,
    metric: Metric,
    bew_deg: f64,
) -> Result<SpreadResult, SpreadError> {
    aligned_spread_scaled(snapshot, domain, plane, metric, bew_deg, 1.0)
}

/// [`aligned_spread`] with a window half-width of `window_scale * bew / 2`.
pub fn aligned_spread_scaled(
    snapshot: &Snapshot,
    domain: AngleDomain,
    plane: Plane,
    metric: Metric,
    bew_deg: f64,
    window_scale: f64,
) -> Result<SpreadResult, SpreadError> {
    let boresight = select_boresight(snapshot, domain)?;
    let beam = BeamConfig::in_plane(boresight, plane, bew_deg, domain)?.with_window_scale(window_scale)?;
    match metric {
        Metric::Angular => rms_angular_spread(snapshot, &beam, plane),
        Metric::Delay => rms_delay_spread(snapshot, &beam),
    }
}

/// Mean per-location spread against beamwidth, per segment.
pub fn spread_vs_bew(
    trajectory: &Trajectory,
    domain: AngleDomain,
    plane: Plane,
    metric: Metric,
    bew_values: &[f64],
) -> Result<Vec<SpreadSweepRow>, SpreadError> {
    for &b in bew_values {
        check_bew(b)?;
    }
    let mut rows = Vec::new();
    for &bew in bew_values {
        for segment in Segment::ALL {
            let spreads = trajectory
                .segment_snapshots(segment)
                .map(|s| aligned_spread(s, domain, plane, metric, bew).map(|r| r.rms))
                .collect::<Result<Vec<_>, _>>()?;
            if spreads.is_empty() {
                continue;
            }
            rows.push(SpreadSweepRow {
                bew_deg: bew,
                segment,
                n_locations: spreads.len(),
                mean_rms: spreads.iter().sum::<f64>() / spreads.len() as f64,
            });
        }
    }
    Ok(rows)
}
