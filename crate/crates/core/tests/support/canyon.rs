//! Closed-form street-canyon paths from image points, written against the
//! scene parameters only.

use mpcstat::synth::CanyonScene;

const C: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy)]
pub struct OraclePath {
    pub n_bounces: u32,
    pub length_m: f64,
    pub power_dbm: f64,
    pub delay_s: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
}

pub fn friis_db(d: f64, f_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * d * f_hz / C).log10()
}

fn bearing(from: [f64; 3], to: [f64; 3]) -> (f64, f64) {
    let (dx, dy, dz) = (to[0] - from[0], to[1] - from[1], to[2] - from[2]);
    let mut az = dy.atan2(dx).to_degrees();
    if az >= 180.0 {
        az -= 360.0;
    }
    (az, dz.atan2((dx * dx + dy * dy).sqrt()).to_degrees())
}

/// UE positions of a straight-line route.
pub fn line_positions(start: [f64; 2], end: [f64; 2], n: usize, height: f64) -> Vec<[f64; 3]> {
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            [start[0] + (end[0] - start[0]) * t, start[1] + (end[1] - start[1]) * t, height]
        })
        .collect()
}

/// Paths in the order direct, ground, north wall, south wall, north-south,
/// south-north. Wall reflection points lie on the straight line between the
/// final image and the receiver, so their heights stay between the two end
/// heights: walls taller than both ends keep every wall path, walls lower
/// than both remove them all.
pub fn oracle_paths(scene: &CanyonScene, ue: [f64; 3], los: bool) -> Vec<OraclePath> {
    let [x, y, z] = scene.bs_position_m;
    let w = scene.street_width_m;
    let h = scene.wall_height_m;
    let walls = if h >= z.max(ue[2]) {
        true
    } else if h < z.min(ue[2]) {
        false
    } else {
        panic!("oracle does not handle walls between the antenna heights");
    };
    let images: [([f64; 3], u32, bool); 6] = [
        ([x, y, z], 0, los),
        ([x, y, -z], 1, true),
        ([x, w - y, z], 1, walls),
        ([x, -w - y, z], 1, walls),
        ([x, y - 2.0 * w, z], 2, walls),
        ([x, y + 2.0 * w, z], 2, walls),
    ];
    let f = scene.freq_ghz * 1e9;
    images
        .iter()
        .filter(|(_, _, keep)| *keep)
        .map(|&(img, n, _)| {
            let d = ((img[0] - ue[0]).powi(2) + (img[1] - ue[1]).powi(2) + (img[2] - ue[2]).powi(2)).sqrt();
            let (aoa_az, aoa_el) = bearing(ue, img);
            OraclePath {
                n_bounces: n,
                length_m: d,
                power_dbm: scene.tx_power_dbm - friis_db(d, f) - n as f64 * scene.wall_reflection_loss_db,
                delay_s: d / C,
                aoa_az,
                aoa_el,
            }
        })
        .collect()
}

/// Oracle paths for every waypoint of a default-style line route.
pub fn oracle_route(scene: &CanyonScene, start: [f64; 2], end: [f64; 2], n: usize) -> Vec<Vec<OraclePath>> {
    line_positions(start, end, n, scene.ue_height_m)
        .into_iter()
        .enumerate()
        .map(|(i, ue)| oracle_paths(scene, ue, i >= scene.nlos_points))
        .collect()
}
