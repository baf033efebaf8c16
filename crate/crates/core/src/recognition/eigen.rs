use serde::{Deserialize, Serialize};

use super::dataset::FaceDataset;
use super::knn::{Gallery, GalleryEntry};
use super::linalg::{dot, gram, jacobi_eigen, norm};
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Eigenvalues at or below this fraction of the total variance count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Eigenfaces: mean face, orthonormal principal components and the
/// projected training gallery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenModel {
    pub width: usize,
    pub height: usize,
    pub mean: Vec<f64>,
    /// Unit-length eigenfaces, strongest first.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub gallery: Gallery,
}

/// Mean vector and mean-centered rows.
pub(crate) fn center(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let centered = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    (mean, centered)
}

/// Principal directions of the centered rows via the small `R×R` Gram
/// matrix: eigenvector `v` of `ΦΦᵀ` maps to `Φᵀv`, renormalized. Returns
/// at most `limit` (direction, eigenvalue) pairs above the rank tolerance.
pub(crate) fn principal_components(
    centered: &[Vec<f64>],
    limit: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let l = gram(centered);
    let total = l.trace();
    let eig = jacobi_eigen(&l)?;
    let d = centered[0].len();
    let mut comps = Vec::new();
    let mut values = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if comps.len() == limit || !(lambda > RANK_TOLERANCE * total) {
            break;
        }
        let mut u = vec![0.0; d];
        for (i, row) in centered.iter().enumerate() {
            let c = eig.vectors[(i, k)];
            for (uj, rj) in u.iter_mut().zip(row) {
                *uj += c * rj;
            }
        }
        let n = norm(&u);
        u.iter_mut().for_each(|x| *x /= n);
        comps.push(u);
        values.push(lambda);
    }
    Ok((comps, values))
}

/// Trains eigenfaces keeping the `components` strongest directions (fewer
/// when the data has lower rank).
pub fn train_eigenfaces(data: &FaceDataset, components: usize) -> Result<EigenModel> {
    if components == 0 {
        return Err(Error::InvalidTraining(
            "component count must be at least 1".into(),
        ));
    }
    if data.len() < 2 {
        return Err(Error::InvalidTraining(format!(
            "eigenfaces need at least 2 images, got {}",
            data.len()
        )));
    }
    let (width, height) = data.dims();
    let (mean, centered) = center(&data.vectors());
    let (comps, eigenvalues) = principal_components(&centered, components)?;
    let entries = centered
        .iter()
        .zip(data.labels())
        .map(|(phi, &label)| GalleryEntry {
            label,
            features: comps.iter().map(|u| dot(u, phi)).collect(),
        })
        .collect();
    Ok(EigenModel {
        width,
        height,
        mean,
        components: comps,
        eigenvalues,
        gallery: Gallery {
            class_names: data.class_names().to_vec(),
            entries,
        },
    })
}

impl EigenModel {
    pub fn component_count(&self) -> usize {
        self.components.len()
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
        Ok(self.components.iter().map(|u| dot(u, &phi)).collect())
    }

    /// Weights ω_k = u_kᵀ(Γ − Ψ).
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

    /// Ψ + Σ ω_k u_k over the given weights.
    pub fn reconstruct(&self, omega: &[f64]) -> Result<Vec<f64>> {
        if omega.len() > self.components.len() {
            return Err(Error::Shape(format!(
                "{} weights for a model with {} components",
                omega.len(),
                self.components.len()
            )));
        }
        let mut out = self.mean.clone();
        for (w, u) in omega.iter().zip(&self.components) {
            for (o, x) in out.iter_mut().zip(u) {
                *o += w * x;
            }
        }
        Ok(out)
    }

    /// The same model restricted to its first `e` components.
    pub fn truncated(&self, e: usize) -> EigenModel {
        self.keep(0, e.min(self.components.len()))
    }

    /// Drops the `n` strongest components, which mostly encode lighting.
    pub fn without_leading(&self, n: usize) -> EigenModel {
        let n = n.min(self.components.len());
        self.keep(n, self.components.len())
    }

    fn keep(&self, from: usize, to: usize) -> EigenModel {
        let mut m = self.clone();
        m.components = self.components[from..to].to_vec();
        m.eigenvalues = self.eigenvalues[from..to].to_vec();
        for e in &mut m.gallery.entries {
            e.features = e.features[from..to].to_vec();
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(rows: &[&[u8]], w: usize, h: usize) -> FaceDataset {
        let images = rows
            .iter()
            .map(|r| GrayImage::new(w, h, r.to_vec()).unwrap())
            .collect();
        let labels = (0..rows.len()).collect();
        let names = (0..rows.len()).map(|i| format!("p{i}")).collect();
        FaceDataset::new(images, labels, names).unwrap()
    }

    #[test]
    fn identical_images_have_rank_zero() {
        let ds = dataset(&[&[1, 2, 3, 4], &[1, 2, 3, 4], &[1, 2, 3, 4]], 2, 2);
        let m = train_eigenfaces(&ds, 5).unwrap();
        assert_eq!(m.mean, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.component_count(), 0);
    }

    #[test]
    fn two_images_give_difference_direction() {
        let ds = dataset(&[&[10, 0, 0, 0], &[0, 0, 0, 10]], 2, 2);
        let m = train_eigenfaces(&ds, 3).unwrap();
        assert_eq!(m.component_count(), 1);
        let s = 0.5f64.sqrt();
        let u = &m.components[0];
        let sign = u[0].signum();
        let want = [s, 0.0, 0.0, -s];
        for (a, b) in u.iter().zip(want) {
            assert!((a * sign - b).abs() < 1e-12);
        }
        // eigenvalue of the Gram matrix: |Φ_1|² + |Φ_2|² = 2 · 50
        assert!((m.eigenvalues[0] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let ds = dataset(&[&[1, 2, 3, 4], &[4, 3, 2, 1]], 2, 2);
        assert!(matches!(
            train_eigenfaces(&ds, 0),
            Err(Error::InvalidTraining(_))
        ));
        let m = train_eigenfaces(&ds, 1).unwrap();
        assert!(matches!(
            m.project(&GrayImage::filled(3, 2, 0).unwrap()),
            Err(Error::Shape(_))
        ));
        assert!(m.reconstruct(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn mean_projects_to_zero_and_scaled_component_recovers() {
        let ds = dataset(&[&[9, 1, 4, 7], &[2, 8, 3, 3], &[5, 5, 9, 0]], 2, 2);
        let m = train_eigenfaces(&ds, 3).unwrap();
        let zero = m.project_vector(&m.mean).unwrap();
        assert!(zero.iter().all(|w| w.abs() < 1e-12));
        let shifted: Vec<f64> = m
            .mean
            .iter()
            .zip(&m.components[0])
            .map(|(a, u)| a + 3.0 * u)
            .collect();
        let w = m.project_vector(&shifted).unwrap();
        assert!((w[0] - 3.0).abs() < 1e-9);
        assert!(w[1..].iter().all(|x| x.abs() < 1e-9));
        assert_eq!(m.reconstruct(&[]).unwrap(), m.mean);
    }

    #[test]
    fn truncation_and_leading_drop() {
        let ds = dataset(
            &[&[9, 1, 4, 7], &[2, 8, 3, 3], &[5, 5, 9, 0], &[1, 1, 1, 2]],
            2,
            2,
        );
        let m = train_eigenfaces(&ds, 10).unwrap();
        assert_eq!(m.component_count(), 3);
        let t = m.truncated(2);
        assert_eq!(t.components, m.components[..2].to_vec());
        assert_eq!(t.gallery.entries[0].features.len(), 2);
        let d = m.without_leading(1);
        assert_eq!(d.components[0], m.components[1]);
        assert_eq!(
            d.gallery.entries[1].features,
            m.gallery.entries[1].features[1..].to_vec()
        );
    }
}
