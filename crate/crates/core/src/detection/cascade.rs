use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::haar::{HaarFeature, HaarKind, Parity, WeakClassifier};
use super::integral::{integral_image, IntegralImage};
use super::lbp::LbpCodeMap;
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Only file version understood by [`CascadeModel::from_json`].
pub const CASCADE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedWeak {
    pub classifier: WeakClassifier,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// An LBP probe: a window position and its 256-entry score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbpProbe {
    pub x: usize,
    pub y: usize,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Stage {
    /// Passes when the weighted vote of its weak classifiers reaches `threshold`.
    Haar {
        weak: Vec<WeightedWeak>,
        threshold: f64,
    },
    /// Passes when the summed probe-table score reaches `threshold`.
    Lbp {
        probes: Vec<LbpProbe>,
        threshold: f64,
    },
}

impl Stage {
    pub fn threshold(&self) -> f64 {
        match self {
            Stage::Haar { threshold, .. } | Stage::Lbp { threshold, .. } => *threshold,
        }
    }
}

/// Ordered stages evaluated on a `base_window`-sized sliding window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeModel {
    pub version: u32,
    pub base_window: (usize, usize),
    pub stages: Vec<Stage>,
}

impl CascadeModel {
    pub fn new(base_window: (usize, usize), stages: Vec<Stage>) -> Result<Self> {
        let model = Self {
            version: CASCADE_FORMAT_VERSION,
            base_window,
            stages,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CASCADE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "cascade version {} is not supported (expected {CASCADE_FORMAT_VERSION})",
                self.version
            )));
        }
        let (bw, bh) = self.base_window;
        if bw == 0 || bh == 0 {
            return Err(Error::Config("cascade base_window must be positive".into()));
        }
        for (i, stage) in self.stages.iter().enumerate() {
            match stage {
                Stage::Haar { weak, .. } => {
                    for (j, w) in weak.iter().enumerate() {
                        if !w.classifier.feature.fits(self.base_window) {
                            return Err(Error::Config(format!(
                                "stages[{i}].weak[{j}] feature leaves the {bw}x{bh} window"
                            )));
                        }
                    }
                }
                Stage::Lbp { probes, .. } => {
                    for (j, p) in probes.iter().enumerate() {
                        if p.x == 0 || p.y == 0 || p.x + 1 >= bw || p.y + 1 >= bh {
                            return Err(Error::Config(format!(
                                "stages[{i}].probes[{j}] at ({}, {}) lacks a 3x3 neighborhood",
                                p.x, p.y
                            )));
                        }
                        if p.table.len() != 256 {
                            return Err(Error::Config(format!(
                                "stages[{i}].probes[{j}].table has {} entries, expected 256",
                                p.table.len()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn uses_lbp(&self) -> bool {
        self.stages.iter().any(|s| matches!(s, Stage::Lbp { .. }))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: CascadeModel =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("cascade: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cascade serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Precomputed per-image data shared by every window of a detection pass.
pub struct FeatureFrame {
    pub ii: IntegralImage,
    pub codes: Option<LbpCodeMap>,
}

impl FeatureFrame {
    pub fn new(img: &GrayImage, with_lbp: bool) -> Self {
        Self {
            ii: integral_image(img),
            codes: with_lbp.then(|| LbpCodeMap::new(img)),
        }
    }

    pub fn for_model(img: &GrayImage, model: &CascadeModel) -> Self {
        Self::new(img, model.uses_lbp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeVerdict {
    Accept,
    /// Index of the first failing stage.
    Reject(usize),
}

/// `H_n(X)`: sum of each probe's table entry at the code observed under it.
pub fn lbp_stage_score(
    codes: &LbpCodeMap,
    origin: (usize, usize),
    scale: f64,
    probes: &[LbpProbe],
) -> Result<f64> {
    let s = |v: usize| (v as f64 * scale).round() as usize;
    let mut score = 0.0;
    for p in probes {
        let code = codes.get(origin.0 + s(p.x), origin.1 + s(p.y))?;
        score += p.table[usize::from(code)];
    }
    Ok(score)
}

fn stage_score(
    frame: &FeatureFrame,
    origin: (usize, usize),
    scale: f64,
    base_window: (usize, usize),
    stage: &Stage,
) -> Result<f64> {
    match stage {
        Stage::Haar { weak, .. } => {
            let mut votes = 0.0;
            for w in weak {
                let f = w
                    .classifier
                    .feature
                    .response(&frame.ii, origin, scale, base_window)?;
                votes += w.weight * f64::from(w.classifier.decide(f));
            }
            Ok(votes)
        }
        Stage::Lbp { probes, .. } => {
            let codes = frame.codes.as_ref().ok_or_else(|| {
                Error::Config("cascade has LBP stages but the frame has no LBP codes".into())
            })?;
            lbp_stage_score(codes, origin, scale, probes)
        }
    }
}

/// [`run_cascade`] that reports each stage index to `on_stage` before
/// evaluating it. Returns the verdict and the last stage's score.
pub fn run_cascade_observed(
    frame: &FeatureFrame,
    origin: (usize, usize),
    scale: f64,
    model: &CascadeModel,
    mut on_stage: impl FnMut(usize),
) -> Result<(CascadeVerdict, f64)> {
    let (bw, bh) = model.base_window;
    let win_w = (bw as f64 * scale).round() as usize;
    let win_h = (bh as f64 * scale).round() as usize;
    if origin.0 + win_w > frame.ii.width() || origin.1 + win_h > frame.ii.height() {
        return Err(Error::Bounds(format!(
            "window {win_w}x{win_h} at {origin:?} leaves the {}x{} image",
            frame.ii.width(),
            frame.ii.height()
        )));
    }
    let mut last = 0.0;
    for (i, stage) in model.stages.iter().enumerate() {
        on_stage(i);
        last = stage_score(frame, origin, scale, model.base_window, stage)?;
        if last < stage.threshold() {
            return Ok((CascadeVerdict::Reject(i), last));
        }
    }
    Ok((CascadeVerdict::Accept, last))
}

/// Evaluates the stages in order and stops at the first one that fails.
pub fn run_cascade(
    frame: &FeatureFrame,
    origin: (usize, usize),
    scale: f64,
    model: &CascadeModel,
) -> Result<CascadeVerdict> {
    run_cascade_observed(frame, origin, scale, model, |_| {}).map(|(v, _)| v)
}

fn weak(feature: HaarFeature, threshold: f64, parity: Parity) -> WeightedWeak {
    WeightedWeak {
        classifier: WeakClassifier {
            feature,
            threshold,
            parity,
        },
        weight: 1.0,
    }
}

/// Hand-built three-stage Haar cascade matched to the synthetic face sprites
/// (24×24 window over the sprite box).
///
/// 1. each eye region is darker than the cheek below it;
/// 2. both eyes are darker than the bridge between them, and the mouth is
///    darker than the upper lip;
/// 3. each eye is darker than the band above and below it.
pub fn toy_face_cascade() -> CascadeModel {
    use HaarKind::*;
    let stage1 = Stage::Haar {
        weak: vec![
            weak(
                HaarFeature::new(TwoRectVertical, 5, 7, 5, 3),
                -0.6,
                Parity::Positive,
            ),
            weak(
                HaarFeature::new(TwoRectVertical, 14, 7, 5, 3),
                -0.6,
                Parity::Positive,
            ),
        ],
        threshold: 2.0,
    };
    let stage2 = Stage::Haar {
        weak: vec![
            weak(
                HaarFeature::new(ThreeRectHorizontal, 5, 7, 5, 3),
                -1.0,
                Parity::Positive,
            ),
            weak(
                HaarFeature::new(TwoRectVertical, 9, 14, 6, 2),
                0.15,
                Parity::Negative,
            ),
        ],
        threshold: 2.0,
    };
    let stage3 = Stage::Haar {
        weak: vec![
            weak(
                HaarFeature::new(ThreeRectVertical, 5, 4, 5, 3),
                0.8,
                Parity::Negative,
            ),
            weak(
                HaarFeature::new(ThreeRectVertical, 14, 4, 5, 3),
                0.8,
                Parity::Negative,
            ),
        ],
        threshold: 2.0,
    };
    CascadeModel::new((24, 24), vec![stage1, stage2, stage3]).expect("toy cascade is valid")
}
