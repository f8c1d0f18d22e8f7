//! Statistics for multipath-component channel traces along a vehicle route.
//!
//! A [`Trajectory`] holds one [`Snapshot`] of discrete propagation paths per
//! vehicle location. On top of it the crate provides
//!
//! - relative power thresholding and path loss per reflection order ([`channel`]),
//! - beam alignment, beamwidth windows and RMS angular/delay spreads ([`spread`]),
//! - a Gaussian main-lobe antenna model and gain-weighted spreads ([`antenna`]),
//! - spatial cones, their power share and blockage fallback ([`cones`]),
//! - a closed-form street-canyon channel generator ([`synth`]),
//! - the trajectory text format and a batch pipeline writing CSV tables.

pub mod angle;
pub mod antenna;
pub mod channel;
pub mod cones;
pub mod config;
pub mod format;
pub mod pipeline;
pub mod spread;
pub mod synth;

pub use angle::Direction;
pub use antenna::{gain_db, weighted_spread, AntennaPattern, SpreadTarget};
pub use channel::{
    apply_mpct, avg_path_loss, classify_bounce, congruency_offset, mpct_sweep, AngleDomain, Averaging, BandSpec,
    BounceClass, ChannelError, Mpc, Segment, Snapshot, Trajectory,
};
pub use cones::{
    blocked_fallback, build_cones, cone_tracks, fractional_power, Cone, ConeDecomposition, ConeParams, Fallback,
};
pub use config::RunConfig;
pub use format::{parse_trajectory, read_trajectory, write_trajectory, ParseError};
pub use pipeline::{run_pipeline, PipelineError, PipelineOutput};
pub use spread::{
    filter_beam, mean_angle, rms_angular_spread, rms_delay_spread, select_boresight, spread_vs_bew, BeamConfig, Metric,
    Plane, SpreadResult,
};
pub use synth::{generate, CanyonScene};
