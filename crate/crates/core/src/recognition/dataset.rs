use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::preprocess::preprocess_face;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::scene_sim::{render_face_patch, FaceVariation};

/// Labelled training images of one common size.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceDataset {
    images: Vec<GrayImage>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl FaceDataset {
    /// `labels[i]` indexes `class_names`; every class needs an image.
    pub fn new(
        images: Vec<GrayImage>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::InvalidTraining("dataset has no images".into()));
        }
        if images.len() != labels.len() {
            return Err(Error::InvalidTraining(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        let (w, h) = (images[0].width(), images[0].height());
        if let Some(i) = images
            .iter()
            .position(|im| im.width() != w || im.height() != h)
        {
            return Err(Error::InvalidTraining(format!(
                "image {i} is {}x{}, expected {w}x{h}",
                images[i].width(),
                images[i].height()
            )));
        }
        let mut counts = vec![0usize; class_names.len()];
        for &l in &labels {
            *counts
                .get_mut(l)
                .ok_or_else(|| Error::InvalidTraining(format!("label {l} has no class name")))? +=
                1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::InvalidTraining(format!(
                "class '{}' has no images",
                class_names[c]
            )));
        }
        Ok(Self {
            images,
            labels,
            class_names,
        })
    }

    /// Builds a dataset from string labels; classes are numbered in order of
    /// first appearance.
    pub fn from_named(samples: Vec<(GrayImage, String)>) -> Result<Self> {
        let mut class_names: Vec<String> = Vec::new();
        let mut images = Vec::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for (img, name) in samples {
            let id = match class_names.iter().position(|n| *n == name) {
                Some(i) => i,
                None => {
                    class_names.push(name);
                    class_names.len() - 1
                }
            };
            images.push(img);
            labels.push(id);
        }
        Self::new(images, labels, class_names)
    }

    pub fn images(&self) -> &[GrayImage] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// R, the number of images.
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// C, the number of classes.
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.images[0].width(), self.images[0].height())
    }

    /// Images as row vectors of `f64` pixels.
    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.images.iter().map(GrayImage::to_f64_vec).collect()
    }

    /// Keeps the first `per_class` images of every class.
    pub fn take_per_class(&self, per_class: usize) -> Result<Self> {
        let mut seen = vec![0usize; self.class_count()];
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for (img, &l) in self.images.iter().zip(&self.labels) {
            if seen[l] < per_class {
                seen[l] += 1;
                images.push(img.clone());
                labels.push(l);
            }
        }
        Self::new(images, labels, self.class_names.clone())
    }
}

/// Side of the rendered patch the synthetic dataset crops faces from.
const PATCH_SIZE: usize = 80;

/// Renders `per_class` randomly varied, preprocessed faces per identity.
///
/// `strength` scales pose, lighting and noise variation (0 = identical
/// renders). Faces whose eyes cannot be found, or that drift out of the
/// patch, are re-rendered.
pub fn synthetic_dataset(
    identities: &[&str],
    per_class: usize,
    strength: f64,
    seed: u64,
) -> Result<FaceDataset> {
    if identities.is_empty() || per_class == 0 {
        return Err(Error::InvalidTraining(
            "need at least one identity and one image per class".into(),
        ));
    }
    let mut samples = Vec::with_capacity(identities.len() * per_class);
    for (c, name) in identities.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64 + 1);
        let mut made = 0;
        let mut attempts = 0;
        while made < per_class {
            attempts += 1;
            if attempts > per_class * 4 + 8 {
                return Err(Error::PreprocessingFailed(format!(
                    "could not render usable faces for '{name}'"
                )));
            }
            let variation = FaceVariation::random(&mut rng, strength);
            let patch_seed = rand::Rng::random::<u64>(&mut rng);
            let (patch, truth) = render_face_patch(name, PATCH_SIZE, &variation, patch_seed)?;
            match preprocess_face(&patch, &truth.bbox, None) {
                Ok(face) => {
                    samples.push((face, name.to_string()));
                    made += 1;
                }
                Err(Error::PreprocessingFailed(_) | Error::Bounds(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    FaceDataset::from_named(samples)
}
