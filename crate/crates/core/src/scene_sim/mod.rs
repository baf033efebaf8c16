//! Array geometry and ground-truth-known synthetic audio and image frames.

mod array;
mod audio;
mod scene;
mod sprites;

pub use array::{
    build_double_ring_array, distance, expected_tdoa, spatial_alias_limit, DoubleRingParams,
    MicArray, Vec3, SPEED_OF_SOUND,
};
pub use audio::{synthesize_scene, synthesize_silence, MultichannelSignal, DEFAULT_SAMPLE_RATE};
pub use scene::{EchoTap, FaceSprite, SceneDescription, SignalKind, SourceSpec};
pub use sprites::{
    render_face_patch, render_synthetic_frame, FaceVariation, PixelBox, SpriteTruth,
    LEFT_EYE_ANCHOR, RIGHT_EYE_ANCHOR, SPRITE_BASE_SIZE,
};
