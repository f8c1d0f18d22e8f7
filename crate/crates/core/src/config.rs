use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{AngleDomain, Averaging, DEFAULT_MPCT_DB};
use crate::cones::DEFAULT_MAX_CONES;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

/// Settings shared by every analysis stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Threshold applied before every statistic.
    pub mpct_db: f64,
    /// Thresholds for the MPC-count sweep.
    pub mpct_sweep: Vec<f64>,
    /// Beamwidths (degrees) for the spread sweep.
    pub bew_values: Vec<f64>,
    pub window_scale: f64,
    /// Cone HPBWs as `[az, el]` pairs.
    pub hpbw_pairs: Vec<[f64; 2]>,
    pub max_cones: usize,
    pub cone_scale: f64,
    pub cone_domain: AngleDomain,
    pub averaging: Averaging,
    /// Azimuth HPBWs for gain-weighted spreads.
    pub beamweight_hpbw_az: Vec<f64>,
    pub beamweight_hpbw_el: f64,
    pub rx_weight: bool,
    pub tx_weight: bool,
    /// Also apply a hard azimuth window of width equal to the HPBW.
    pub beamweight_window: bool,
    /// Take cone boresights from the companion trajectory.
    pub cone_hint: bool,
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mpct_db: DEFAULT_MPCT_DB,
            mpct_sweep: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
            bew_values: vec![5.0, 10.0, 20.0, 30.0, 60.0, 90.0, 120.0, 180.0, 360.0],
            window_scale: 1.0,
            hpbw_pairs: vec![[10.0, 10.0], [30.0, 30.0]],
            max_cones: DEFAULT_MAX_CONES,
            cone_scale: 1.0,
            cone_domain: AngleDomain::Aoa,
            averaging: Averaging::Db,
            beamweight_hpbw_az: vec![10.0, 20.0, 30.0, 60.0, 90.0],
            beamweight_hpbw_el: 30.0,
            rx_weight: true,
            tx_weight: true,
            beamweight_window: false,
            cone_hint: false,
            out_dir: PathBuf::from("results"),
            threads: None,
        }
    }
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

fn check_list(field: &'static str, values: &[f64], ok: impl Fn(f64) -> bool, range: &str) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    if let Some(v) = values.iter().find(|&&v| !ok(v)) {
        return Err(invalid(field, format!("{v} outside {range}")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let hpbw = |v: f64| v > 0.0 && v <= 180.0;
        if !(self.mpct_db >= 0.0 && self.mpct_db.is_finite()) {
            return Err(invalid("mpct_db", format!("{} must be a finite value >= 0", self.mpct_db)));
        }
        check_list("mpct_sweep", &self.mpct_sweep, |v| v >= 0.0 && v.is_finite(), "[0, inf)")?;
        check_list("bew_values", &self.bew_values, |v| v > 0.0 && v <= 360.0, "(0, 360]")?;
        if !(self.window_scale > 0.0 && self.window_scale.is_finite()) {
            return Err(invalid("window_scale", "must be positive"));
        }
        if self.hpbw_pairs.is_empty() {
            return Err(invalid("hpbw_pairs", "must not be empty"));
        }
        if let Some(p) = self.hpbw_pairs.iter().find(|p| !(hpbw(p[0]) && hpbw(p[1]))) {
            return Err(invalid("hpbw_pairs", format!("{p:?} outside (0, 180]")));
        }
        if self.max_cones == 0 {
            return Err(invalid("max_cones", "must be at least 1"));
        }
        if !(self.cone_scale > 0.0 && self.cone_scale.is_finite()) {
            return Err(invalid("cone_scale", "must be positive"));
        }
        check_list("beamweight_hpbw_az", &self.beamweight_hpbw_az, hpbw, "(0, 180]")?;
        if !hpbw(self.beamweight_hpbw_el) {
            return Err(invalid("beamweight_hpbw_el", format!("{} outside (0, 180]", self.beamweight_hpbw_el)));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        Ok(())
    }
}
