//! Spatial cones around successive strongest MPCs, their power share, and
//! beam fallback when whole cones are blocked.
//!
//! Cone `r` is centred on the strongest MPC not taken by cones `1..r`. An MPC
//! belongs to a cone when its wrapped offset from the cone boresight lies in
//! the ellipse with semi-axes `scale * hpbw / 2`; each MPC goes to the first
//! cone that admits it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::Direction;
use crate::channel::{relative_linear, strongest_index, AngleDomain, Segment, Snapshot, Trajectory};

pub const DEFAULT_MAX_CONES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("no MPCs")]
    NoMpcs,
    #[error("cone HPBW must lie in (0, 180], got {0}")]
    InvalidHpbw(f64),
    #[error("max_cones must be at least 1")]
    NoCones,
    #[error("cone scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("blocked rank {0} does not exist")]
    UnknownRank(usize),
    #[error("hint trajectory has no snapshot for location {0}")]
    MissingHint(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub hpbw_az_deg: f64,
    pub hpbw_el_deg: f64,
    pub max_cones: usize,
    pub domain: AngleDomain,
    pub scale: f64,
}

impl ConeParams {
    pub fn new(hpbw_az_deg: f64, hpbw_el_deg: f64, max_cones: usize) -> Result<Self, ConeError> {
        let p = Self { hpbw_az_deg, hpbw_el_deg, max_cones, domain: AngleDomain::Aoa, scale: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConeError> {
        for w in [self.hpbw_az_deg, self.hpbw_el_deg] {
            if !(w > 0.0 && w <= 180.0) {
                return Err(ConeError::InvalidHpbw(w));
            }
        }
        if self.max_cones == 0 {
            return Err(ConeError::NoCones);
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(ConeError::InvalidScale(self.scale));
        }
        Ok(())
    }

    /// Whether `dir` lies in the elliptical region of a cone aimed at `boresight`.
    pub fn admits(&self, boresight: &Direction, dir: &Direction) -> bool {
        let a = dir.az_offset_from(boresight) / (self.scale * self.hpbw_az_deg / 2.0);
        let e = dir.el_offset_from(boresight) / (self.scale * self.hpbw_el_deg / 2.0);
        a * a + e * e <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    /// 1 for the strongest cone.
    pub rank: usize,
    pub boresight: Direction,
    /// MPC the cone was built on; `None` when the boresight came from a hint.
    pub boresight_index: Option<usize>,
    pub hpbw_az_deg: f64,
    pub hpbw_el_deg: f64,
    /// Ascending snapshot indices.
    pub member_indices: Vec<usize>,
    /// Member power, linear, relative to the decomposition reference.
    pub power_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeDecomposition {
    pub cones: Vec<Cone>,
    pub residual_indices: Vec<usize>,
    /// Power of the strongest MPC; all linear powers are relative to it.
    pub reference_dbm: f64,
    pub total_power_rel: f64,
    pub residual_power_rel: f64,
}

impl ConeDecomposition {
    /// Total linear power in mW.
    pub fn total_power_lin(&self) -> f64 {
        self.total_power_rel * 10f64.powf(self.reference_dbm / 10.0)
    }

    pub fn cone(&self, rank: usize) -> Option<&Cone> {
        self.cones.get(rank.checked_sub(1)?)
    }

    /// Rank of the cone holding `index`, `None` for residual MPCs.
    pub fn rank_of(&self, index: usize) -> Option<usize> {
        self.cones.iter().find(|c| c.member_indices.binary_search(&index).is_ok()).map(|c| c.rank)
    }

    pub fn residual_fraction(&self) -> f64 {
        self.residual_power_rel / self.total_power_rel
    }
}

fn decompose(
    snapshot: &Snapshot,
    params: &ConeParams,
    mut next_boresight: impl FnMut(usize, &[usize]) -> Option<(Direction, Option<usize>)>,
) -> Result<ConeDecomposition, ConeError> {
    params.validate()?;
    let reference_idx = snapshot.strongest().ok_or(ConeError::NoMpcs)?;
    let reference_dbm = snapshot.mpcs[reference_idx].power_dbm;
    let lin: Vec<f64> = snapshot.mpcs.iter().map(|m| relative_linear(m.power_dbm, reference_dbm)).collect();

    let mut unassigned: Vec<usize> = (0..snapshot.mpcs.len()).collect();
    let mut cones = Vec::new();
    for rank in 1..=params.max_cones {
        if unassigned.is_empty() {
            break;
        }
        let Some((boresight, boresight_index)) = next_boresight(rank, &unassigned) else {
            break;
        };
        let (members, rest): (Vec<usize>, Vec<usize>) =
            unassigned.iter().partition(|&&i| params.admits(&boresight, &snapshot.mpcs[i].direction(params.domain)));
        unassigned = rest;
        cones.push(Cone {
            rank,
            boresight,
            boresight_index,
            hpbw_az_deg: params.hpbw_az_deg,
            hpbw_el_deg: params.hpbw_el_deg,
            power_rel: members.iter().map(|&i| lin[i]).sum(),
            member_indices: members,
        });
    }
    Ok(ConeDecomposition {
        cones,
        residual_power_rel: unassigned.iter().map(|&i| lin[i]).sum(),
        residual_indices: unassigned,
        reference_dbm,
        total_power_rel: lin.iter().sum(),
    })
}

/// Greedy cone construction on the snapshot's own strongest MPCs.
pub fn build_cones(snapshot: &Snapshot, params: &ConeParams) -> Result<ConeDecomposition, ConeError> {
    decompose(snapshot, params, |_, unassigned| {
        let i = strongest_index(&snapshot.mpcs, unassigned.iter().copied())?;
        Some((snapshot.mpcs[i].direction(params.domain), Some(i)))
    })
}

/// Cones whose boresights come from the cones of a companion snapshot (for
/// example a lower band at the same location), with membership and power
/// taken from `snapshot`.
pub fn build_cones_hinted(
    snapshot: &Snapshot,
    hint: &Snapshot,
    params: &ConeParams,
) -> Result<ConeDecomposition, ConeError> {
    let guide = build_cones(hint, params)?;
    decompose(snapshot, params, |rank, _| guide.cone(rank).map(|c| (c.boresight, None)))
}

/// Share of total power in each cone, by rank.
pub fn fractional_power(decomposition: &ConeDecomposition) -> Vec<f64> {
    decomposition.cones.iter().map(|c| c.power_rel / decomposition.total_power_rel).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fallback {
    Locked {
        mpc_index: usize,
        power_dbm: f64,
        /// `None` when the MPC is in no cone.
        cone_rank: Option<usize>,
    },
    Outage,
}

/// Strongest MPC outside every blocked cone.
pub fn blocked_fallback(
    snapshot: &Snapshot,
    decomposition: &ConeDecomposition,
    blocked_ranks: &BTreeSet<usize>,
) -> Result<Fallback, ConeError> {
    if let Some(&bad) = blocked_ranks.iter().find(|&&r| decomposition.cone(r).is_none()) {
        return Err(ConeError::UnknownRank(bad));
    }
    let candidates = decomposition
        .cones
        .iter()
        .filter(|c| !blocked_ranks.contains(&c.rank))
        .flat_map(|c| c.member_indices.iter().copied())
        .chain(decomposition.residual_indices.iter().copied());
    Ok(match strongest_index(&snapshot.mpcs, candidates) {
        Some(i) => Fallback::Locked {
            mpc_index: i,
            power_dbm: snapshot.mpcs[i].power_dbm,
            cone_rank: decomposition.rank_of(i),
        },
        None => Fallback::Outage,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub mpc_index: usize,
    pub power_dbm: f64,
    pub aoa: Direction,
    pub aod: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeTrackRecord {
    pub location_index: u32,
    pub segment: Segment,
    pub rank: usize,
    /// Strongest member of the cone, `None` if the cone does not exist or is empty.
    pub strongest: Option<TrackPoint>,
}

pub(crate) fn track_records(
    snapshot: &Snapshot,
    decomposition: &ConeDecomposition,
    max_cones: usize,
) -> Vec<ConeTrackRecord> {
    (1..=max_cones)
        .map(|rank| {
            let strongest = decomposition
                .cone(rank)
                .and_then(|c| strongest_index(&snapshot.mpcs, c.member_indices.iter().copied()))
                .map(|i| {
                    let m = &snapshot.mpcs[i];
                    TrackPoint { mpc_index: i, power_dbm: m.power_dbm, aoa: m.aoa, aod: m.aod }
                });
            ConeTrackRecord { location_index: snapshot.location_index, segment: snapshot.segment, rank, strongest }
        })
        .collect()
}

/// Per-location, per-rank strongest cone member, cones rebuilt at every
/// location.
pub fn cone_tracks(trajectory: &Trajectory, params: &ConeParams) -> Result<Vec<ConeTrackRecord>, ConeError> {
    let mut out = Vec::with_capacity(trajectory.snapshots.len() * params.max_cones);
    for s in &trajectory.snapshots {
        let d = build_cones(s, params)?;
        out.extend(track_records(s, &d, params.max_cones));
    }
    Ok(out)
}

/// Looks up the hint snapshot for each location of `trajectory`.
pub fn hint_for(hint: &Trajectory, location_index: u32) -> Result<&Snapshot, ConeError> {
    hint.snapshots
        .binary_search_by_key(&location_index, |s| s.location_index)
        .map(|i| &hint.snapshots[i])
        .map_err(|_| ConeError::MissingHint(location_index))
}
