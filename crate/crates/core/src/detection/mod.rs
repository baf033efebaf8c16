//! Sliding-window face detection with Haar and LBP cascades.

mod cascade;
mod haar;
mod integral;
mod lbp;
mod multiscale;

pub use cascade::{
    lbp_stage_score, run_cascade, run_cascade_observed, toy_face_cascade, CascadeModel,
    CascadeVerdict, FeatureFrame, LbpProbe, Stage, WeightedWeak, CASCADE_FORMAT_VERSION,
};
pub use haar::{
    enumerate_haar_features, enumerate_haar_features_of, eval_weak_classifier, HaarFeature,
    HaarKind, HaarRect, Parity, WeakClassifier,
};
pub use integral::{integral_image, rect_sum, IntegralImage};
pub use lbp::{lbp_code, lbp_uniformity, LbpCodeMap};
pub use multiscale::{
    detect_multiscale, merge_detections, pyramid_scales, raw_detections, write_detections,
    Detection, MultiscaleParams, DEFAULT_MIN_NEIGHBORS, DEFAULT_SCALE_FACTOR, DEFAULT_STEP,
    MERGE_IOU,
};
