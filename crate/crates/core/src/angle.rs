//! Angle conventions shared by every module.
//!
//! Directions are carried in degrees (azimuth in `[-180, 180)`, elevation in
//! `[-90, 90]`); trigonometry happens in radians.

use serde::{Deserialize, Serialize};

/// An azimuth/elevation pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl Direction {
    pub const fn new(az_deg: f64, el_deg: f64) -> Self {
        Self { az_deg, el_deg }
    }

    /// Unit vector (x east, y north, z up).
    pub fn unit_vector(&self) -> [f64; 3] {
        let (az, el) = (self.az_deg.to_radians(), self.el_deg.to_radians());
        [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
    }

    /// Direction of a non-zero vector. A vertical vector gets the canonical
    /// azimuth 0.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let horiz = v[0].hypot(v[1]);
        let az = if horiz == 0.0 { 0.0 } else { normalize_azimuth(v[1].atan2(v[0]).to_degrees()) };
        let el = v[2].atan2(horiz).to_degrees();
        Self::new(az, el)
    }

    /// Signed azimuth offset of `self` from `reference`, wrapped to `(-180, 180]`.
    pub fn az_offset_from(&self, reference: &Direction) -> f64 {
        wrap_offset(self.az_deg - reference.az_deg)
    }

    pub fn el_offset_from(&self, reference: &Direction) -> f64 {
        self.el_deg - reference.el_deg
    }

    /// Great-circle separation in degrees.
    pub fn separation_deg(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        sin.atan2(cos).to_degrees()
    }
}

/// Maps any azimuth onto `[-180, 180)`.
pub fn normalize_azimuth(az_deg: f64) -> f64 {
    let a = (az_deg + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can return 360 - ulp rounding up to exactly 180
    if a >= 180.0 {
        a - 360.0
    } else {
        a + 0.0
    }
}

/// Maps an angular difference onto `(-180, 180]`.
pub fn wrap_offset(delta_deg: f64) -> f64 {
    let w = -normalize_azimuth(-delta_deg);
    w + 0.0
}

pub fn is_valid_azimuth(az_deg: f64) -> bool {
    (-180.0..180.0).contains(&az_deg)
}

pub fn is_valid_elevation(el_deg: f64) -> bool {
    (-90.0..=90.0).contains(&el_deg)
}
