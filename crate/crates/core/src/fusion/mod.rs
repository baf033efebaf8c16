//! Three-frame face confirmation and the audio-visual decision tree.

mod decision;
mod track;

pub use decision::{
    fuse, map_grid_to_pixels, pixel_to_grid_point, AcousticPeak, FusionOutcome, OutcomeKind,
    OutcomeRecord,
};
pub use track::{
    update_face_track, ConfirmedFace, FaceObservation, FaceTrack, TrackEntry, TRACK_LENGTH,
};

/// Default co-location distance as a fraction of the image width.
pub const COLOCATE_FRACTION: f64 = 0.10;
/// Default track proximity as a fraction of the image width.
pub const PROXIMITY_FRACTION: f64 = 0.15;
