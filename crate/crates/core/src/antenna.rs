//! Gaussian main-lobe antenna gain and gain-weighted spread statistics.
//!
//! The gain of a pattern with half-power beamwidths `w_az`, `w_el` at angular
//! offsets `(d_az, d_el)` from boresight is
//!
//! ```text
//! G_dB = 10 log10(16 pi / (6.76 w_az w_el)) - 12 (d_az / w_az)^2 - 12 (d_el / w_el)^2
//! ```
//!
//! with the beamwidths in radians inside the directivity term. The roll-off
//! terms are ratios, so their unit does not matter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::Direction;
use crate::channel::{relative_linear, strongest_index, AngleDomain, Snapshot};
use crate::spread::{offset_to_angle, plane_offset, weighted_moments, Metric, Plane, SpreadResult};

/// Elevation HPBW used for planar (fixed-elevation) evaluation.
pub const DEFAULT_PLANAR_EL_HPBW_DEG: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AntennaError {
    #[error("half-power beamwidth must lie in (0, 180], got {0}")]
    InvalidHpbw(f64),
    #[error("no MPCs")]
    NoMpcs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub boresight: Direction,
    pub hpbw_az_deg: f64,
    pub hpbw_el_deg: f64,
    /// Lowest gain returned, if set.
    pub floor_db: Option<f64>,
    /// Ignore elevation offsets (2D evaluation). The elevation HPBW still
    /// enters the directivity term.
    pub planar: bool,
}

impl AntennaPattern {
    pub fn new(boresight: Direction, hpbw_az_deg: f64, hpbw_el_deg: f64) -> Result<Self, AntennaError> {
        for w in [hpbw_az_deg, hpbw_el_deg] {
            if !(w > 0.0 && w <= 180.0) {
                return Err(AntennaError::InvalidHpbw(w));
            }
        }
        Ok(Self { boresight, hpbw_az_deg, hpbw_el_deg, floor_db: None, planar: false })
    }

    /// Azimuth-only pattern with the default 30° elevation HPBW.
    pub fn planar(boresight: Direction, hpbw_az_deg: f64) -> Result<Self, AntennaError> {
        let mut p = Self::new(boresight, hpbw_az_deg, DEFAULT_PLANAR_EL_HPBW_DEG)?;
        p.planar = true;
        Ok(p)
    }

    pub fn with_floor(mut self, floor_db: f64) -> Self {
        self.floor_db = Some(floor_db);
        self
    }

    /// Gain at the boresight.
    pub fn peak_gain_db(&self) -> f64 {
        let w_az = self.hpbw_az_deg.to_radians();
        let w_el = self.hpbw_el_deg.to_radians();
        10.0 * (16.0 * std::f64::consts::PI / (6.76 * w_az * w_el)).log10()
    }

    pub fn gain_db(&self, dir: &Direction) -> f64 {
        let d_az = dir.az_offset_from(&self.boresight) / self.hpbw_az_deg;
        let d_el = if self.planar { 0.0 } else { dir.el_offset_from(&self.boresight) / self.hpbw_el_deg };
        let g = self.peak_gain_db() - 12.0 * d_az * d_az - 12.0 * d_el * d_el;
        match self.floor_db {
            Some(floor) => g.max(floor),
            None => g,
        }
    }

    pub fn gain_linear(&self, dir: &Direction) -> f64 {
        10f64.powf(self.gain_db(dir) / 10.0)
    }
}

/// Free function form of [`AntennaPattern::gain_db`].
pub fn gain_db(pattern: &AntennaPattern, dir: &Direction) -> f64 {
    pattern.gain_db(dir)
}

/// What to measure in a weighted spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpreadTarget {
    /// Angles of this end of the link are measured for [`Metric::Angular`].
    pub domain: AngleDomain,
    pub plane: Plane,
    pub metric: Metric,
}

/// Spread with each MPC's power scaled by the receive gain at its AOA and
/// the transmit gain at its AOD. A missing pattern means unit gain.
///
/// Angular offsets are taken from the boresight of the pattern on the
/// measured side, or from the strongest MPC when that side has none.
pub fn weighted_spread(
    snapshot: &Snapshot,
    rx: Option<&AntennaPattern>,
    tx: Option<&AntennaPattern>,
    target: SpreadTarget,
) -> Result<SpreadResult, AntennaError> {
    let strongest = snapshot.strongest().ok_or(AntennaError::NoMpcs)?;
    let reference_dbm = snapshot.mpcs[strongest].power_dbm;
    let weights: Vec<f64> = snapshot
        .mpcs
        .iter()
        .map(|m| {
            let mut w = relative_linear(m.power_dbm, reference_dbm);
            if let Some(p) = rx {
                w *= p.gain_linear(&m.aoa);
            }
            if let Some(p) = tx {
                w *= p.gain_linear(&m.aod);
            }
            w
        })
        .collect();
    // pivot on the MPC with the largest weighted power
    let pivot =
        (0..weights.len()).max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a))).unwrap_or(strongest);
    let n = snapshot.mpcs.len();
    match target.metric {
        Metric::Delay => {
            let samples: Vec<(f64, f64)> = snapshot.mpcs.iter().zip(&weights).map(|(m, &w)| (m.delay_s, w)).collect();
            let (mean, rms) = weighted_moments(&samples, pivot);
            Ok(SpreadResult { mean, rms, n_mpcs_in_beam: n })
        }
        Metric::Angular => {
            let side = match target.domain {
                AngleDomain::Aoa => rx,
                AngleDomain::Aod => tx,
            };
            let boresight =
                side.map(|p| p.boresight).unwrap_or_else(|| snapshot.mpcs[strongest].direction(target.domain));
            let samples: Vec<(f64, f64)> = snapshot
                .mpcs
                .iter()
                .zip(&weights)
                .map(|(m, &w)| (plane_offset(&m.direction(target.domain), &boresight, target.plane), w))
                .collect();
            let (mean_offset, rms) = weighted_moments(&samples, pivot);
            Ok(SpreadResult { mean: offset_to_angle(&boresight, target.plane, mean_offset), rms, n_mpcs_in_beam: n })
        }
    }
}

/// Receive and transmit patterns aimed at the strongest MPC's AOA and AOD.
pub fn aligned_patterns(
    snapshot: &Snapshot,
    hpbw_az_deg: f64,
    hpbw_el_deg: f64,
    planar: bool,
) -> Result<(AntennaPattern, AntennaPattern), AntennaError> {
    let i = strongest_index(&snapshot.mpcs, 0..snapshot.mpcs.len()).ok_or(AntennaError::NoMpcs)?;
    let m = &snapshot.mpcs[i];
    let mut rx = AntennaPattern::new(m.aoa, hpbw_az_deg, hpbw_el_deg)?;
    let mut tx = AntennaPattern::new(m.aod, hpbw_az_deg, hpbw_el_deg)?;
    rx.planar = planar;
    tx.planar = planar;
    Ok((rx, tx))
}
