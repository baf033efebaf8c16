//! Acoustic source localization: GCC, steered response power maps and the
//! bandwidth rule that chooses between PHAT and constant weighting.

mod bandwidth;
mod gcc;
mod srp;

pub use bandwidth::{estimate_bandwidth, MIN_BANDWIDTH_FRAME};
pub use gcc::{gcc, phat_weight, GccFunction, Weighting, MIN_GCC_LEN, PHAT_EPSILON};
pub use srp::{
    combined_srp_map, combined_srp_map_with_speed, find_peak, select_mode, srp_map,
    srp_map_with_speed, GridCell, SrpMode, SteeredPowerMap, SteeringGrid,
    DEFAULT_BANDWIDTH_THRESHOLD,
};

/// Frame length used by the pipeline (128 ms at 32 kHz).
pub const DEFAULT_FRAME_LEN: usize = 4096;
