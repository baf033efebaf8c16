//! End-to-end scenarios and experiments built on the other modules.

mod config;
mod experiment;
mod overlay;
mod scenario;

pub use config::{
    default_face_model, demo_scene, GridParams, ModeChoice, Scenario, ScenarioConfig,
    ScenarioSettings, DEFAULT_IMAGES_PER_CLASS, DEFAULT_IMAGE_SIZE, DEFAULT_SEED, EXTRA_IDENTITIES,
};
pub use experiment::{
    closed_set_accuracy, localization_trial, run_experiment, ExperimentParams, ExperimentTable,
    EXPERIMENT_NAMES, SNR_LEVELS_DB,
};
pub use overlay::render_overlay;
pub use scenario::{
    analyze_frame, calibrate_floors, frame_seed, run_scenario, select_face, FrameAnalysis,
    FrameOutcome, LocalizationStats, PeakFloors, ScenarioReport, ScenarioSummary,
    PEAK_FLOOR_FACTOR,
};
