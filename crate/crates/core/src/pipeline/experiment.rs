use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::DEFAULT_SEED;
use crate::error::{Error, Result};
use crate::localization::{
    combined_srp_map, find_peak, SteeringGrid, DEFAULT_BANDWIDTH_THRESHOLD, DEFAULT_FRAME_LEN,
};
use crate::recognition::{
    knn_classify, synthetic_dataset, train_eigenfaces, train_fisherfaces_with, train_lbph,
    FaceDataset, FaceModel, LbphParams, Recognizer,
};
use crate::scene_sim::{
    synthesize_scene, MicArray, SceneDescription, SignalKind, SourceSpec, DEFAULT_SAMPLE_RATE,
    SPEED_OF_SOUND,
};

pub const EXPERIMENT_NAMES: [&str; 3] = [
    "accuracy_vs_components",
    "accuracy_vs_training_images",
    "localization_vs_snr",
];
pub const SNR_LEVELS_DB: [f64; 4] = [0.0, 10.0, 20.0, 40.0];

const IDENTITIES: [&str; 5] = ["alice", "bob", "carol", "dave", "erin"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub seed: u64,
    /// Identities in the synthetic face set (2 to 5).
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Pose and lighting variation of the synthetic faces.
    pub strength: f64,
    pub max_components: usize,
    /// Seeded trials per SNR level.
    pub trials: usize,
    pub snr_levels_db: Vec<f64>,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            classes: 5,
            train_per_class: 8,
            test_per_class: 8,
            strength: 1.0,
            max_components: 16,
            trials: 10,
            snr_levels_db: SNR_LEVELS_DB.to_vec(),
        }
    }
}

/// Named columns of optional numbers; `None` prints as `-`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl ExperimentTable {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Tab-separated, header first.
    pub fn to_text(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Some(x) if x.fract() == 0.0 && x.abs() < 1e15 => format!("{x:.0}"),
                    Some(x) => format!("{x:.4}"),
                    None => "-".into(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }
}

pub fn run_experiment(name: &str, params: &ExperimentParams) -> Result<ExperimentTable> {
    match name {
        "accuracy_vs_components" => accuracy_vs_components(params),
        "accuracy_vs_training_images" => accuracy_vs_training_images(params),
        "localization_vs_snr" => localization_vs_snr(params),
        other => Err(Error::Config(format!(
            "unknown experiment '{other}'; valid names: {}",
            EXPERIMENT_NAMES.join(", ")
        ))),
    }
}

fn face_sets(
    params: &ExperimentParams,
    train_per_class: usize,
) -> Result<(FaceDataset, FaceDataset)> {
    if !(2..=IDENTITIES.len()).contains(&params.classes) {
        return Err(Error::Config(format!(
            "classes must be between 2 and {}",
            IDENTITIES.len()
        )));
    }
    let ids = &IDENTITIES[..params.classes];
    let train = synthetic_dataset(ids, train_per_class, params.strength, params.seed)?;
    let test = synthetic_dataset(
        ids,
        params.test_per_class,
        params.strength,
        params.seed ^ 0xC0FF_EE00_D15E_A5E5,
    )?;
    Ok((train, test))
}

/// Closed-set nearest-neighbor accuracy on `test`.
pub fn closed_set_accuracy(recognizer: Recognizer, test: &FaceDataset) -> Result<f64> {
    let model = FaceModel::new(recognizer, None);
    let mut correct = 0;
    for (img, &label) in test.images().iter().zip(test.labels()) {
        let r = knn_classify(&model, img, 1, None)?;
        if r.label.as_deref() == Some(test.class_names()[label].as_str()) {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

fn accuracy_vs_components(params: &ExperimentParams) -> Result<ExperimentTable> {
    let (train, test) = face_sets(params, params.train_per_class)?;
    let full = train_eigenfaces(&train, params.max_components)?;
    let mut table = ExperimentTable::new(
        "accuracy_vs_components",
        &["components", "eigen_accuracy", "fisher_accuracy"],
    );
    for e in 1..=params.max_components {
        let eigen = closed_set_accuracy(Recognizer::Eigen(full.truncated(e)), &test)?;
        let fisher = match train_fisherfaces_with(&train, Some(e)) {
            Ok(m) => Some(closed_set_accuracy(Recognizer::Fisher(m), &test)?),
            Err(Error::InvalidTraining(_) | Error::SingularScatter | Error::DegenerateModel(_)) => {
                None
            }
            Err(e) => return Err(e),
        };
        table.rows.push(vec![Some(e as f64), Some(eigen), fisher]);
    }
    Ok(table)
}

fn accuracy_vs_training_images(params: &ExperimentParams) -> Result<ExperimentTable> {
    let (train, test) = face_sets(params, params.train_per_class)?;
    let mut table = ExperimentTable::new(
        "accuracy_vs_training_images",
        &[
            "images_per_class",
            "eigen_accuracy",
            "fisher_accuracy",
            "lbph_accuracy",
        ],
    );
    for n in 1..=params.train_per_class {
        let subset = train.take_per_class(n)?;
        let eigen = match train_eigenfaces(&subset, params.max_components) {
            Ok(m) => Some(closed_set_accuracy(Recognizer::Eigen(m), &test)?),
            Err(Error::InvalidTraining(_) | Error::DegenerateModel(_)) => None,
            Err(e) => return Err(e),
        };
        let fisher = match train_fisherfaces_with(&subset, None) {
            Ok(m) => Some(closed_set_accuracy(Recognizer::Fisher(m), &test)?),
            Err(Error::InvalidTraining(_) | Error::SingularScatter | Error::DegenerateModel(_)) => {
                None
            }
            Err(e) => return Err(e),
        };
        let lbph = closed_set_accuracy(
            Recognizer::Lbph(train_lbph(&subset, LbphParams::default())?),
            &test,
        )?;
        table
            .rows
            .push(vec![Some(n as f64), eigen, fisher, Some(lbph)]);
    }
    Ok(table)
}

/// Grid-cell error of one broadband source at a seeded random cell.
pub fn localization_trial(
    array: &MicArray,
    grid: &SteeringGrid,
    snr_db: f64,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // keep the source a few cells away from the border
    let a = rng.random_range(0.1..0.9);
    let b = rng.random_range(0.1..0.9);
    let position = grid.point_at(a, b);
    let scene = SceneDescription {
        sources: vec![SourceSpec {
            position,
            signal: SignalKind::WhiteNoise,
            level: 1.0,
            echoes: vec![],
        }],
        snr_db: Some(snr_db),
        seed,
        face_sprites: vec![],
        speed_of_sound: SPEED_OF_SOUND,
    };
    let duration = DEFAULT_FRAME_LEN as f64 / DEFAULT_SAMPLE_RATE;
    let signal = synthesize_scene(&scene, array, DEFAULT_SAMPLE_RATE, duration)?;
    let map = combined_srp_map(&signal, array, grid, DEFAULT_BANDWIDTH_THRESHOLD)?;
    let (cell, _) =
        find_peak(&map, 0.0).ok_or_else(|| Error::DegenerateModel("empty power map".into()))?;
    let truth = grid
        .cell_of(&position)
        .ok_or_else(|| Error::Bounds("source outside the steering grid".into()))?;
    Ok(cell.euclidean(&truth))
}

fn localization_vs_snr(params: &ExperimentParams) -> Result<ExperimentTable> {
    if params.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let array = MicArray::default_double_ring();
    let grid = SteeringGrid::default_camera();
    let mut table = ExperimentTable::new(
        "localization_vs_snr",
        &[
            "snr_db",
            "median_error_cells",
            "mean_error_cells",
            "within_1_cell",
        ],
    );
    for &snr in &params.snr_levels_db {
        // same source placements at every SNR
        let mut errors: Vec<f64> = (0..params.trials)
            .into_par_iter()
            .map(|t| localization_trial(&array, &grid, snr, params.seed.wrapping_add(t as u64)))
            .collect::<Result<_>>()?;
        errors.sort_by(f64::total_cmp);
        let n = errors.len();
        let median = if n % 2 == 1 {
            errors[n / 2]
        } else {
            0.5 * (errors[n / 2 - 1] + errors[n / 2])
        };
        let mean = errors.iter().sum::<f64>() / n as f64;
        let hits = errors.iter().filter(|&&e| e <= 1.5).count();
        table
            .rows
            .push(vec![Some(snr), Some(median), Some(mean), Some(hits as f64)]);
    }
    Ok(table)
}
