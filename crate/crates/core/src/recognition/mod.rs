//! Face normalization and recognition with Eigenfaces, Fisherfaces or LBP
//! histograms under an open-set k-nearest-neighbor decision.

mod dataset;
mod eigen;
mod fisher;
mod knn;
mod lbph;
pub mod linalg;
mod model;
mod preprocess;

pub use dataset::{synthetic_dataset, FaceDataset};
pub use eigen::{train_eigenfaces, EigenModel, RANK_TOLERANCE};
pub use fisher::{train_fisherfaces, train_fisherfaces_with, FisherModel, SCATTER_TOLERANCE};
pub use knn::{vote, Gallery, GalleryEntry, Metric, RecognitionResult, Vote};
pub use lbph::{lbp_pr_codes, lbph_descriptor, train_lbph, LbphModel, LbphParams, LBPH_EPSILON};
pub use model::{
    calibrate_unknown_threshold, knn_classify, FaceModel, Recognizer, TrainSpec, FACE_MODEL_VERSION,
};
pub use preprocess::{
    canonical_eyes, elliptical_mask, locate_eyes, mask_and_equalize, preprocess_face,
    preprocess_face_detailed, warp, Alignment, PreprocessedFace, CANONICAL_SIZE, MIN_EYE_CONTRAST,
};

/// Default number of eigenfaces.
pub const DEFAULT_COMPONENTS: usize = 30;
pub const DEFAULT_K: usize = 1;
