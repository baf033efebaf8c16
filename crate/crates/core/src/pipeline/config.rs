use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::{toy_face_cascade, CascadeModel};
use crate::error::{Error, Result};
use crate::fusion::pixel_to_grid_point;
use crate::localization::{SteeringGrid, DEFAULT_BANDWIDTH_THRESHOLD, DEFAULT_FRAME_LEN};
use crate::recognition::{synthetic_dataset, FaceModel, TrainSpec, DEFAULT_COMPONENTS};
use crate::scene_sim::{
    DoubleRingParams, FaceSprite, MicArray, SceneDescription, SignalKind, SourceSpec,
    DEFAULT_SAMPLE_RATE,
};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_IMAGE_SIZE: (usize, usize) = (640, 480);

/// Which SRP weighting to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    /// Pick per frame from the signal bandwidth.
    #[default]
    Auto,
    Phat,
    Const,
}

/// Steering plane parallel to the array, as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridParams {
    pub distance: f64,
    pub half_width: f64,
    pub half_height: f64,
    pub cols: usize,
    pub rows: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            distance: 2.0,
            half_width: 1.5,
            half_height: 1.125,
            cols: 64,
            rows: 48,
        }
    }
}

impl GridParams {
    pub fn build(&self) -> Result<SteeringGrid> {
        if !(self.distance > 0.0 && self.half_width > 0.0 && self.half_height > 0.0) {
            return Err(Error::Config(
                "grid distance and half extents must be positive".into(),
            ));
        }
        SteeringGrid::camera_plane(
            self.distance,
            self.half_width,
            self.half_height,
            self.cols,
            self.rows,
        )
    }
}

/// Everything [`super::run_scenario`] reads, as paths and numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// `None` runs the built-in talking-sprite scene.
    pub scene: Option<PathBuf>,
    pub array: DoubleRingParams,
    pub grid: GridParams,
    /// `None` uses the built-in toy cascade.
    pub cascade: Option<PathBuf>,
    /// `None` trains an eigenface model on synthetic renders of the
    /// scene's identities.
    pub face_model: Option<PathBuf>,
    pub frames: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub mode: ModeChoice,
    pub image_width: usize,
    pub image_height: usize,
    pub frame_len: usize,
    pub components: usize,
    pub knn_k: usize,
    pub unknown_threshold: Option<f64>,
    pub bandwidth_threshold: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scene: None,
            array: DoubleRingParams::default(),
            grid: GridParams::default(),
            cascade: None,
            face_model: None,
            frames: 10,
            seed: DEFAULT_SEED,
            out: PathBuf::from("out"),
            mode: ModeChoice::Auto,
            image_width: DEFAULT_IMAGE_SIZE.0,
            image_height: DEFAULT_IMAGE_SIZE.1,
            frame_len: DEFAULT_FRAME_LEN,
            components: DEFAULT_COMPONENTS,
            knn_k: 1,
            unknown_threshold: None,
            bandwidth_threshold: DEFAULT_BANDWIDTH_THRESHOLD,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Config("frames must be at least 1".into()));
        }
        if self.image_width < 24 || self.image_height < 24 {
            return Err(Error::Config(
                "image_width and image_height must be at least 24".into(),
            ));
        }
        if self.frame_len < 64 {
            return Err(Error::Config(
                "frame_len must be at least 64 samples".into(),
            ));
        }
        if self.knn_k == 0 {
            return Err(Error::Config("knn_k must be at least 1".into()));
        }
        if self.components == 0 {
            return Err(Error::Config("components must be at least 1".into()));
        }
        Ok(())
    }

    /// Loads every referenced file and builds the runtime objects.
    pub fn resolve(&self) -> Result<Scenario> {
        self.validate()?;
        let image_size = (self.image_width, self.image_height);
        let grid = self.grid.build()?;
        let scene = match &self.scene {
            Some(p) => SceneDescription::load(p)?,
            None => demo_scene(&grid, image_size),
        };
        let array = self.array.build()?;
        let cascade = match &self.cascade {
            Some(p) => CascadeModel::load(p)?,
            None => toy_face_cascade(),
        };
        let face_model = match &self.face_model {
            Some(p) => FaceModel::load(p)?,
            None => default_face_model(&scene, self.components, self.seed)?,
        };
        Ok(Scenario {
            scene,
            array,
            grid,
            cascade,
            face_model,
            settings: ScenarioSettings {
                frames: self.frames,
                seed: self.seed,
                mode: self.mode,
                image_size,
                frame_len: self.frame_len,
                sample_rate: DEFAULT_SAMPLE_RATE,
                knn_k: self.knn_k,
                unknown_threshold: self.unknown_threshold,
                bandwidth_threshold: self.bandwidth_threshold,
            },
        })
    }
}

/// Runtime knobs of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSettings {
    pub frames: usize,
    pub seed: u64,
    pub mode: ModeChoice,
    pub image_size: (usize, usize),
    pub frame_len: usize,
    pub sample_rate: f64,
    pub knn_k: usize,
    pub unknown_threshold: Option<f64>,
    pub bandwidth_threshold: f64,
}

impl ScenarioSettings {
    pub fn colocate_px(&self) -> f64 {
        crate::fusion::COLOCATE_FRACTION * self.image_size.0 as f64
    }

    pub fn proximity_px(&self) -> f64 {
        crate::fusion::PROXIMITY_FRACTION * self.image_size.0 as f64
    }
}

/// Fully loaded scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub scene: SceneDescription,
    pub array: MicArray,
    pub grid: SteeringGrid,
    pub cascade: CascadeModel,
    pub face_model: FaceModel,
    pub settings: ScenarioSettings,
}

/// Speaker "alice" talking (broadband source at her mouth's place on the
/// steering plane) next to a silent "bob", SNR 20 dB.
pub fn demo_scene(grid: &SteeringGrid, image_size: (usize, usize)) -> SceneDescription {
    let (w, h) = (image_size.0 as f64, image_size.1 as f64);
    let speaker = [0.66 * w, 0.42 * h];
    let size = 0.14 * w;
    SceneDescription {
        sources: vec![SourceSpec {
            position: pixel_to_grid_point(speaker, grid, image_size),
            signal: SignalKind::WhiteNoise,
            level: 1.0,
            echoes: vec![],
        }],
        snr_db: Some(20.0),
        seed: 0,
        face_sprites: vec![
            FaceSprite {
                identity: "alice".into(),
                x: speaker[0],
                y: speaker[1],
                scale: size / crate::scene_sim::SPRITE_BASE_SIZE,
                rotation_deg: 0.0,
            },
            FaceSprite {
                identity: "bob".into(),
                x: 0.3 * w,
                y: 0.55 * h,
                scale: 0.9 * size / crate::scene_sim::SPRITE_BASE_SIZE,
                rotation_deg: 4.0,
            },
        ],
        speed_of_sound: crate::scene_sim::SPEED_OF_SOUND,
    }
}

/// Identities the default model knows besides the scene's own.
pub const EXTRA_IDENTITIES: [&str; 3] = ["carol", "dave", "erin"];
pub const DEFAULT_IMAGES_PER_CLASS: usize = 10;

/// Eigenface model over the scene's identities plus [`EXTRA_IDENTITIES`].
pub fn default_face_model(
    scene: &SceneDescription,
    components: usize,
    seed: u64,
) -> Result<FaceModel> {
    let mut names: Vec<&str> = Vec::new();
    for s in &scene.face_sprites {
        if !names.contains(&s.identity.as_str()) {
            names.push(&s.identity);
        }
    }
    for extra in EXTRA_IDENTITIES {
        if !names.contains(&extra) {
            names.push(extra);
        }
    }
    let data = synthetic_dataset(&names, DEFAULT_IMAGES_PER_CLASS, 1.0, seed)?;
    FaceModel::train(
        &data,
        &TrainSpec::Eigen {
            components,
            skip_leading: 0,
        },
    )
}
