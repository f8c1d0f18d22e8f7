//! Deterministic street-canyon channel generator.
//!
//! The street runs along x with vertical walls at `y = ±width/2` and flat
//! ground at `z = 0`. Paths are the direct ray, the first-order images in
//! each wall and the ground, and the two second-order wall-wall images. Each
//! bounce costs a fixed reflection loss on top of free-space loss, so every
//! power, delay and angle has a closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::Direction;
use crate::channel::{BandSpec, ChannelError, Mpc, Segment, Snapshot, Trajectory};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("zero-length path at waypoint {0}")]
    DegenerateGeometry(u32),
    #[error("scene file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Free-space path loss in dB.
pub fn friis_path_loss_db(distance_m: f64, freq_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * freq_hz / SPEED_OF_LIGHT).log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UePath {
    Line { start: [f64; 2], end: [f64; 2], points: usize },
    Waypoints { waypoints: Vec<[f64; 2]> },
}

impl UePath {
    pub fn waypoints(&self) -> Vec<[f64; 2]> {
        match self {
            UePath::Waypoints { waypoints } => waypoints.clone(),
            UePath::Line { start, end, points } => {
                let n = *points;
                (0..n)
                    .map(|i| {
                        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                        [start[0] + t * (end[0] - start[0]), start[1] + t * (end[1] - start[1])]
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanyonScene {
    #[serde(default = "default_band")]
    pub band: String,
    pub freq_ghz: f64,
    pub street_width_m: f64,
    pub wall_height_m: f64,
    pub bs_position_m: [f64; 3],
    #[serde(default = "default_ue_height")]
    pub ue_height_m: f64,
    pub ue_path: UePath,
    /// Leading waypoints whose direct ray is occluded.
    #[serde(default)]
    pub nlos_points: usize,
    #[serde(default = "default_reflection_loss")]
    pub wall_reflection_loss_db: f64,
    #[serde(default)]
    pub tx_power_dbm: f64,
}

fn default_band() -> String {
    "synth".to_string()
}
fn default_ue_height() -> f64 {
    2.0
}
fn default_reflection_loss() -> f64 {
    6.0
}

impl Default for CanyonScene {
    /// 20 m wide street, 10 m BS mast, 100 UE points of which the first 30
    /// have the direct ray occluded, 28 GHz.
    fn default() -> Self {
        Self {
            band: "f6".to_string(),
            freq_ghz: 28.0,
            street_width_m: 20.0,
            wall_height_m: 30.0,
            bs_position_m: [0.0, 5.0, 10.0],
            ue_height_m: 2.0,
            ue_path: UePath::Line { start: [20.0, -3.0], end: [218.0, -3.0], points: 100 },
            nlos_points: 30,
            wall_reflection_loss_db: 6.0,
            tx_power_dbm: 0.0,
        }
    }
}

/// Planar reflectors of the canyon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    /// Wall at `y = +width/2`.
    NorthWall,
    /// Wall at `y = -width/2`.
    SouthWall,
    Ground,
}

/// A geometric path between two points.
#[derive(Debug, Clone, PartialEq)]
pub struct RayPath {
    /// Surfaces in the order the wave hits them, starting at the transmitter.
    pub bounces: Vec<Surface>,
    pub length_m: f64,
    pub aod: Direction,
    pub aoa: Direction,
}

const PATH_ORDER: [&[Surface]; 6] = [
    &[],
    &[Surface::Ground],
    &[Surface::NorthWall],
    &[Surface::SouthWall],
    &[Surface::NorthWall, Surface::SouthWall],
    &[Surface::SouthWall, Surface::NorthWall],
];

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl CanyonScene {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let scene: Self = toml::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidScene(m));
        let half = self.street_width_m / 2.0;
        if !(self.street_width_m > 0.0 && self.wall_height_m > 0.0) {
            return bad("street width and wall height must be positive".into());
        }
        if !(self.freq_ghz.is_finite() && self.freq_ghz > 0.0) {
            return bad(format!("freq_ghz must be positive, got {}", self.freq_ghz));
        }
        if !(self.wall_reflection_loss_db >= 0.0 && self.wall_reflection_loss_db.is_finite()) {
            return bad("wall_reflection_loss_db must be >= 0".into());
        }
        if !self.tx_power_dbm.is_finite() {
            return bad("tx_power_dbm must be finite".into());
        }
        let [bx, by, bz] = self.bs_position_m;
        if !(bx.is_finite() && by.abs() < half && bz > 0.0 && bz.is_finite()) {
            return bad("BS must be above ground and strictly between the walls".into());
        }
        if !(self.ue_height_m > 0.0 && self.ue_height_m.is_finite()) {
            return bad("ue_height_m must be positive".into());
        }
        let wps = self.ue_path.waypoints();
        if wps.is_empty() {
            return bad("UE path has no waypoints".into());
        }
        if let Some(p) = wps.iter().find(|p| !(p[0].is_finite() && p[1].abs() < half)) {
            return bad(format!("UE waypoint {p:?} is outside the canyon"));
        }
        if self.nlos_points > wps.len() {
            return bad(format!("nlos_points {} exceeds waypoint count {}", self.nlos_points, wps.len()));
        }
        BandSpec::new(self.band.clone(), self.freq_ghz)?;
        Ok(())
    }

    fn mirror(&self, p: [f64; 3], s: Surface) -> [f64; 3] {
        let w = self.street_width_m;
        match s {
            Surface::NorthWall => [p[0], w - p[1], p[2]],
            Surface::SouthWall => [p[0], -w - p[1], p[2]],
            Surface::Ground => [p[0], p[1], -p[2]],
        }
    }

    /// Point where the segment `a -> b` crosses surface `s`.
    fn crossing(&self, a: [f64; 3], b: [f64; 3], s: Surface) -> Option<[f64; 3]> {
        let half = self.street_width_m / 2.0;
        let (axis, level) = match s {
            Surface::NorthWall => (1, half),
            Surface::SouthWall => (1, -half),
            Surface::Ground => (2, 0.0),
        };
        let denom = b[axis] - a[axis];
        if denom == 0.0 {
            return None;
        }
        let t = (level - a[axis]) / denom;
        if !(0.0..=1.0).contains(&t) {
            return None;
        }
        let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])];
        let on_surface = match s {
            Surface::NorthWall | Surface::SouthWall => (0.0..=self.wall_height_m).contains(&p[2]),
            Surface::Ground => p[1].abs() <= half,
        };
        on_surface.then_some(p)
    }

    /// Specular path via `bounces`, or `None` if a reflection point falls off
    /// its surface.
    pub fn trace(&self, tx: [f64; 3], rx: [f64; 3], bounces: &[Surface]) -> Option<RayPath> {
        let mut images = vec![tx];
        for &s in bounces {
            let last = *images.last().unwrap();
            images.push(self.mirror(last, s));
        }
        let final_image = *images.last().unwrap();
        let length_m = norm(sub(final_image, rx));
        // walk back from the receiver to recover the reflection points
        let mut toward = rx;
        let mut first_hop = rx;
        for (k, &s) in bounces.iter().enumerate().rev() {
            let p = self.crossing(toward, images[k + 1], s)?;
            toward = p;
            first_hop = p;
        }
        if length_m == 0.0 || norm(sub(first_hop, tx)) == 0.0 {
            return Some(RayPath {
                bounces: bounces.to_vec(),
                length_m,
                aod: Direction::new(0.0, 0.0),
                aoa: Direction::new(0.0, 0.0),
            });
        }
        Some(RayPath {
            bounces: bounces.to_vec(),
            length_m,
            aod: Direction::from_vector(sub(first_hop, tx)),
            aoa: Direction::from_vector(sub(final_image, rx)),
        })
    }

    /// All valid paths from `tx` to `rx`, direct ray first.
    pub fn paths(&self, tx: [f64; 3], rx: [f64; 3], direct_visible: bool) -> Vec<RayPath> {
        PATH_ORDER.iter().filter(|b| direct_visible || !b.is_empty()).filter_map(|b| self.trace(tx, rx, b)).collect()
    }

    pub fn freq_hz(&self) -> f64 {
        self.freq_ghz * 1e9
    }

    pub fn ue_positions(&self) -> Vec<[f64; 3]> {
        self.ue_path.waypoints().into_iter().map(|[x, y]| [x, y, self.ue_height_m]).collect()
    }

    pub fn mpc_for(&self, path: &RayPath) -> Mpc {
        let n = path.bounces.len() as u32;
        let lambda = SPEED_OF_LIGHT / self.freq_hz();
        Mpc {
            power_dbm: self.tx_power_dbm
                - friis_path_loss_db(path.length_m, self.freq_hz())
                - n as f64 * self.wall_reflection_loss_db,
            phase_deg: ((path.length_m / lambda).fract() * 360.0) % 360.0,
            delay_s: path.length_m / SPEED_OF_LIGHT,
            aoa: path.aoa,
            aod: path.aod,
            n_reflections: n,
            n_diffractions: 0,
        }
    }
}

/// Channel trajectory for the scene, one snapshot per waypoint.
pub fn generate(scene: &CanyonScene) -> Result<Trajectory, SynthError> {
    scene.validate()?;
    let band = BandSpec::new(scene.band.clone(), scene.freq_ghz)?;
    let snapshots = scene
        .ue_positions()
        .into_iter()
        .enumerate()
        .map(|(i, ue)| {
            let location = i as u32 + 1;
            let nlos = i < scene.nlos_points;
            let paths = scene.paths(scene.bs_position_m, ue, !nlos);
            if paths.iter().any(|p| p.length_m == 0.0) {
                return Err(SynthError::DegenerateGeometry(location));
            }
            let segment = if nlos { Segment::Nlos } else { Segment::Los };
            let mpcs = paths.iter().map(|p| scene.mpc_for(p)).collect();
            Ok(Snapshot::new(location, segment, mpcs)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory::new(band, scene.tx_power_dbm, snapshots)?)
}
