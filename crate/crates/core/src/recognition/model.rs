use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::FaceDataset;
use super::eigen::{train_eigenfaces, EigenModel};
use super::fisher::{train_fisherfaces_with, FisherModel};
use super::knn::{vote, Gallery, Metric, RecognitionResult};
use super::lbph::{train_lbph, LbphModel, LbphParams};
use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const FACE_MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recognizer {
    Eigen(EigenModel),
    Fisher(FisherModel),
    Lbph(LbphModel),
}

impl Recognizer {
    pub fn kind(&self) -> &'static str {
        match self {
            Recognizer::Eigen(_) => "eigen",
            Recognizer::Fisher(_) => "fisher",
            Recognizer::Lbph(_) => "lbph",
        }
    }

    pub fn gallery(&self) -> &Gallery {
        match self {
            Recognizer::Eigen(m) => &m.gallery,
            Recognizer::Fisher(m) => &m.gallery,
            Recognizer::Lbph(m) => &m.gallery,
        }
    }

    /// Euclidean for the subspace models, chi-square for histograms.
    pub fn metric(&self) -> Metric {
        match self {
            Recognizer::Lbph(_) => Metric::ChiSquare,
            _ => Metric::Euclidean,
        }
    }

    pub fn features(&self, img: &GrayImage) -> Result<Vec<f64>> {
        match self {
            Recognizer::Eigen(m) => m.project(img),
            Recognizer::Fisher(m) => m.project(img),
            Recognizer::Lbph(m) => m.describe(img),
        }
    }

    pub fn input_dims(&self) -> (usize, usize) {
        match self {
            Recognizer::Eigen(m) => (m.width, m.height),
            Recognizer::Fisher(m) => (m.width, m.height),
            Recognizer::Lbph(m) => (m.width, m.height),
        }
    }
}

/// What to train.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainSpec {
    Eigen {
        components: usize,
        /// Number of leading eigenfaces to discard.
        skip_leading: usize,
    },
    Fisher {
        components: Option<usize>,
    },
    Lbph(LbphParams),
}

impl TrainSpec {
    pub fn fit(&self, data: &FaceDataset) -> Result<Recognizer> {
        Ok(match *self {
            TrainSpec::Eigen {
                components,
                skip_leading,
            } => {
                let m = train_eigenfaces(data, components + skip_leading)?;
                Recognizer::Eigen(if skip_leading > 0 {
                    m.without_leading(skip_leading)
                } else {
                    m
                })
            }
            TrainSpec::Fisher { components } => {
                Recognizer::Fisher(train_fisherfaces_with(data, components)?)
            }
            TrainSpec::Lbph(params) => Recognizer::Lbph(train_lbph(data, params)?),
        })
    }
}

fn without(data: &FaceDataset, skip: usize) -> Option<FaceDataset> {
    let mut images = data.images().to_vec();
    let mut labels = data.labels().to_vec();
    images.remove(skip);
    labels.remove(skip);
    FaceDataset::new(images, labels, data.class_names().to_vec()).ok()
}

/// Mean + 2·stddev of leave-one-out nearest-neighbor distances: every
/// image is queried against a model trained without it. Images whose
/// removal leaves an untrainable dataset are skipped; `None` when fewer
/// than two distances remain.
pub fn calibrate_unknown_threshold(data: &FaceDataset, spec: &TrainSpec) -> Result<Option<f64>> {
    let mut nn = Vec::new();
    if let TrainSpec::Lbph(params) = spec {
        // histogram entries do not depend on the other samples
        let all = train_lbph(data, *params)?;
        let entries = &all.gallery.entries;
        for (i, q) in entries.iter().enumerate() {
            let d = entries
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, e)| Metric::ChiSquare.distance(&q.features, &e.features))
                .fold(f64::INFINITY, f64::min);
            if d.is_finite() {
                nn.push(d);
            }
        }
    } else {
        for i in 0..data.len() {
            let Some(rest) = without(data, i) else {
                continue;
            };
            let rec = match spec.fit(&rest) {
                Ok(r) => r,
                Err(
                    Error::InvalidTraining(_) | Error::SingularScatter | Error::DegenerateModel(_),
                ) => continue,
                Err(e) => return Err(e),
            };
            let q = rec.features(&data.images()[i])?;
            let d = rec
                .gallery()
                .distances(&q, rec.metric())
                .iter()
                .map(|d| d.0)
                .fold(f64::INFINITY, f64::min);
            nn.push(d);
        }
    }
    if nn.len() < 2 {
        return Ok(None);
    }
    let n = nn.len() as f64;
    let mean = nn.iter().sum::<f64>() / n;
    let var = nn.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok(Some(mean + 2.0 * var.sqrt()))
}

/// A trained recognizer plus its open-set distance threshold, as stored on
/// disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceModel {
    pub version: u32,
    /// Nearest-neighbor distances above this mean UNKNOWN; `None` never
    /// rejects.
    pub unknown_threshold: Option<f64>,
    pub recognizer: Recognizer,
}

impl FaceModel {
    pub fn new(recognizer: Recognizer, unknown_threshold: Option<f64>) -> Self {
        Self {
            version: FACE_MODEL_VERSION,
            unknown_threshold,
            recognizer,
        }
    }

    /// Trains on `data` and calibrates the threshold by leave-one-out.
    pub fn train(data: &FaceDataset, spec: &TrainSpec) -> Result<Self> {
        let recognizer = spec.fit(data)?;
        let threshold = calibrate_unknown_threshold(data, spec)?;
        Ok(Self::new(recognizer, threshold))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("face model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: FaceModel =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("face model: {e}")))?;
        if model.version != FACE_MODEL_VERSION {
            return Err(Error::Format(format!(
                "face model version {} is not supported (expected {FACE_MODEL_VERSION})",
                model.version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// k-NN decision on a canonical face. `threshold` overrides the model's
/// calibrated one when given.
pub fn knn_classify(
    model: &FaceModel,
    img: &GrayImage,
    k: usize,
    threshold: Option<f64>,
) -> Result<RecognitionResult> {
    let gallery = model.recognizer.gallery();
    if gallery.entries.is_empty() {
        return Err(Error::NoModel("gallery is empty".into()));
    }
    let query = model.recognizer.features(img)?;
    let distances = gallery.distances(&query, model.recognizer.metric());
    let v = vote(&distances, k, threshold.or(model.unknown_threshold))?;
    Ok(RecognitionResult {
        label: v.label.map(|l| gallery.class_names[l].clone()),
        distance: v.distance,
        position: None,
    })
}
