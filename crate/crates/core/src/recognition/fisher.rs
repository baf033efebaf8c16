use serde::{Deserialize, Serialize};

use super::dataset::FaceDataset;
use super::eigen::{center, principal_components};
use super::knn::{Gallery, GalleryEntry};
use super::linalg::{cholesky, dot, jacobi_eigen, norm, solve_lower, solve_lower_transpose, Mat};
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Pivot floor, relative to the largest diagonal entry, below which the
/// projected within-class scatter counts as singular.
pub const SCATTER_TOLERANCE: f64 = 1e-10;

/// Fisherfaces: PCA to R − C dimensions followed by the discriminant
/// projection, composed into one matrix with at most C − 1 rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherModel {
    pub width: usize,
    pub height: usize,
    pub mean: Vec<f64>,
    /// Rows of W_opt, each scaled to unit length.
    pub projection: Vec<Vec<f64>>,
    /// Generalized eigenvalues (between / within ratio), strongest first.
    pub eigenvalues: Vec<f64>,
    /// Class means in the projected space.
    pub class_means: Vec<Vec<f64>>,
    pub gallery: Gallery,
}

/// Trains Fisherfaces with the full C − 1 discriminant directions.
pub fn train_fisherfaces(data: &FaceDataset) -> Result<FisherModel> {
    train_fisherfaces_with(data, None)
}

/// Trains Fisherfaces keeping `min(components, C − 1)` directions.
pub fn train_fisherfaces_with(
    data: &FaceDataset,
    components: Option<usize>,
) -> Result<FisherModel> {
    let c = data.class_count();
    let r = data.len();
    if c < 2 {
        return Err(Error::InvalidTraining(format!(
            "fisherfaces need at least 2 classes, got {c}"
        )));
    }
    if r < c + 1 {
        return Err(Error::InvalidTraining(format!(
            "fisherfaces need more images than classes ({r} images, {c} classes)"
        )));
    }
    if components == Some(0) {
        return Err(Error::InvalidTraining(
            "component count must be at least 1".into(),
        ));
    }
    let (width, height) = data.dims();
    let (mean, centered) = center(&data.vectors());

    // W_pca: strongest R − C directions of the total scatter
    let (w_pca, _) = principal_components(&centered, r - c)?;
    let m = w_pca.len();
    if m == 0 {
        return Err(Error::DegenerateModel(
            "training images are all identical".into(),
        ));
    }
    let y: Vec<Vec<f64>> = centered
        .iter()
        .map(|phi| w_pca.iter().map(|u| dot(u, phi)).collect())
        .collect();

    let mut means = vec![vec![0.0; m]; c];
    let mut counts = vec![0usize; c];
    for (yk, &l) in y.iter().zip(data.labels()) {
        counts[l] += 1;
        for (a, b) in means[l].iter_mut().zip(yk) {
            *a += b;
        }
    }
    for (mu, &n) in means.iter_mut().zip(&counts) {
        mu.iter_mut().for_each(|v| *v /= n as f64);
    }
    // the projected overall mean is zero, so S_B = Σ N_i μ_i μ_iᵀ
    let mut s_b = Mat::zeros(m, m);
    let mut s_w = Mat::zeros(m, m);
    for (mu, &n) in means.iter().zip(&counts) {
        for i in 0..m {
            for j in 0..m {
                s_b[(i, j)] += n as f64 * mu[i] * mu[j];
            }
        }
    }
    for (yk, &l) in y.iter().zip(data.labels()) {
        let d: Vec<f64> = yk.iter().zip(&means[l]).map(|(a, b)| a - b).collect();
        for i in 0..m {
            for j in 0..m {
                s_w[(i, j)] += d[i] * d[j];
            }
        }
    }
    let total = s_b.trace() + s_w.trace();
    if !(s_b.trace() > 1e-12 * total) {
        return Err(Error::DegenerateModel(
            "all class means coincide, so the between-class scatter vanishes".into(),
        ));
    }
    let l = cholesky(&s_w, SCATTER_TOLERANCE).ok_or(Error::SingularScatter)?;

    // S_B w = λ S_W w  <=>  (L⁻¹ S_B L⁻ᵀ) z = λ z with w = L⁻ᵀ z
    let mut tmp = Mat::zeros(m, m);
    for j in 0..m {
        let col = solve_lower(&l, &s_b.column(j));
        for i in 0..m {
            tmp[(i, j)] = col[i];
        }
    }
    let mut sym = Mat::zeros(m, m);
    for i in 0..m {
        let row = solve_lower(&l, tmp.row(i));
        for j in 0..m {
            sym[(i, j)] = row[j];
        }
    }
    let eig = jacobi_eigen(&sym)?;
    let keep = components.unwrap_or(usize::MAX).min(c - 1).min(m);

    let d = mean.len();
    let mut projection = Vec::with_capacity(keep);
    for k in 0..keep {
        let w = solve_lower_transpose(&l, &eig.vectors.column(k));
        let mut row = vec![0.0; d];
        for (wi, u) in w.iter().zip(&w_pca) {
            for (r, x) in row.iter_mut().zip(u) {
                *r += wi * x;
            }
        }
        let n = norm(&row);
        if !(n > 0.0) {
            return Err(Error::DegenerateModel("zero discriminant direction".into()));
        }
        row.iter_mut().for_each(|x| *x /= n);
        projection.push(row);
    }
    let eigenvalues = eig.values[..keep].to_vec();

    let project = |phi: &[f64]| projection.iter().map(|p| dot(p, phi)).collect::<Vec<f64>>();
    let entries: Vec<GalleryEntry> = centered
        .iter()
        .zip(data.labels())
        .map(|(phi, &label)| GalleryEntry {
            label,
            features: project(phi),
        })
        .collect();
    let mut class_means = vec![vec![0.0; keep]; c];
    for e in &entries {
        for (a, b) in class_means[e.label].iter_mut().zip(&e.features) {
            *a += b / counts[e.label] as f64;
        }
    }
    Ok(FisherModel {
        width,
        height,
        mean,
        projection,
        eigenvalues,
        class_means,
        gallery: Gallery {
            class_names: data.class_names().to_vec(),
            entries,
        },
    })
}

impl FisherModel {
    pub fn component_count(&self) -> usize {
        self.projection.len()
    }

    pub fn project_vector(&self, gamma: &[f64]) -> Result<Vec<f64>> {
        if gamma.len() != self.mean.len() {
            return Err(Error::Shape(format!(
                "vector of length {} does not match the model's {} pixels",
                gamma.len(),
                self.mean.len()
            )));
        }
        let phi: Vec<f64> = gamma.iter().zip(&self.mean).map(|(g, m)| g - m).collect();
        Ok(self.projection.iter().map(|p| dot(p, &phi)).collect())
    }

    pub fn project(&self, img: &GrayImage) -> Result<Vec<f64>> {
        if (img.width(), img.height()) != (self.width, self.height) {
            return Err(Error::Shape(format!(
                "image is {}x{}, model expects {}x{}",
                img.width(),
                img.height(),
                self.width,
                self.height
            )));
        }
        self.project_vector(&img.to_f64_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: Vec<(Vec<u8>, usize)>, classes: usize, w: usize) -> FaceDataset {
        let h = rows[0].0.len() / w;
        let (images, labels) = rows
            .into_iter()
            .map(|(p, l)| (GrayImage::new(w, h, p).unwrap(), l))
            .unzip();
        FaceDataset::new(
            images,
            labels,
            (0..classes).map(|i| format!("c{i}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_classes_give_one_direction() {
        let data = ds(
            vec![
                (vec![10, 12, 50, 50], 0),
                (vec![12, 10, 52, 49], 0),
                (vec![11, 11, 49, 53], 0),
                (vec![60, 61, 10, 12], 1),
                (vec![62, 60, 11, 10], 1),
            ],
            2,
            2,
        );
        let m = train_fisherfaces(&data).unwrap();
        assert_eq!(m.component_count(), 1);
        assert_eq!(
            train_fisherfaces_with(&data, Some(5))
                .unwrap()
                .component_count(),
            1
        );
        // classes separate along the single direction
        let a = m.class_means[0][0];
        let b = m.class_means[1][0];
        assert!((a - b).abs() > 10.0);
    }

    #[test]
    fn equal_class_means_are_degenerate() {
        let data = ds(
            vec![
                (vec![10, 20], 0),
                (vec![20, 10], 0),
                (vec![10, 20], 1),
                (vec![20, 10], 1),
            ],
            2,
            2,
        );
        assert!(matches!(
            train_fisherfaces(&data),
            Err(Error::DegenerateModel(_))
        ));
    }

    #[test]
    fn too_few_images() {
        let data = ds(vec![(vec![1, 2], 0), (vec![3, 4], 1)], 2, 2);
        assert!(matches!(
            train_fisherfaces(&data),
            Err(Error::InvalidTraining(_))
        ));
    }
}
