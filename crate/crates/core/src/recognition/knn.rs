use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene_sim::PixelBox;

/// One stored training sample in feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub label: usize,
    pub features: Vec<f64>,
}

/// Labelled feature vectors searched by the k-NN decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gallery {
    pub class_names: Vec<String>,
    pub entries: Vec<GalleryEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    ChiSquare,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => super::linalg::squared_distance(a, b).sqrt(),
            Metric::ChiSquare => a
                .iter()
                .zip(b)
                .filter(|(x, y)| *x + *y > 0.0)
                .map(|(x, y)| (x - y) * (x - y) / (x + y))
                .sum(),
        }
    }
}

/// Outcome of the k-NN vote before labels are resolved to names.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vote {
    /// `None` means UNKNOWN.
    pub label: Option<usize>,
    /// Distance to the nearest gallery entry.
    pub distance: f64,
}

/// Majority label among the `k` nearest distances (ties go to the smallest
/// mean distance, then the smallest label); UNKNOWN when the nearest
/// distance exceeds `threshold`.
pub fn vote(distances: &[(f64, usize)], k: usize, threshold: Option<f64>) -> Result<Vote> {
    if distances.is_empty() {
        return Err(Error::NoModel("gallery is empty".into()));
    }
    if k == 0 || k > distances.len() {
        return Err(Error::Config(format!(
            "k must be in 1..={}, got {k}",
            distances.len()
        )));
    }
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&i, &j| distances[i].0.total_cmp(&distances[j].0).then(i.cmp(&j)));
    let nearest = distances[order[0]].0;
    if threshold.is_some_and(|t| nearest > t) {
        return Ok(Vote {
            label: None,
            distance: nearest,
        });
    }
    // (label, count, distance sum)
    let mut tally: Vec<(usize, usize, f64)> = Vec::new();
    for &i in &order[..k] {
        let (d, label) = distances[i];
        match tally.iter_mut().find(|t| t.0 == label) {
            Some(t) => {
                t.1 += 1;
                t.2 += d;
            }
            None => tally.push((label, 1, d)),
        }
    }
    tally.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then((a.2 / a.1 as f64).total_cmp(&(b.2 / b.1 as f64)))
            .then(a.0.cmp(&b.0))
    });
    Ok(Vote {
        label: Some(tally[0].0),
        distance: nearest,
    })
}

impl Gallery {
    pub fn distances(&self, query: &[f64], metric: Metric) -> Vec<(f64, usize)> {
        self.entries
            .iter()
            .map(|e| (metric.distance(query, &e.features), e.label))
            .collect()
    }
}

/// A classified face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionResult {
    /// `None` for UNKNOWN.
    pub label: Option<String>,
    pub distance: f64,
    pub position: Option<PixelBox>,
}

impl RecognitionResult {
    pub fn label_or_unknown(&self) -> &str {
        self.label.as_deref().unwrap_or("UNKNOWN")
    }

    pub fn is_unknown(&self) -> bool {
        self.label.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_identical_wins() {
        let v = vote(&[(0.0, 2), (5.0, 1)], 1, Some(1.0)).unwrap();
        assert_eq!(
            v,
            Vote {
                label: Some(2),
                distance: 0.0
            }
        );
    }

    #[test]
    fn above_threshold_is_unknown() {
        assert_eq!(vote(&[(3.0, 0)], 1, Some(2.0)).unwrap().label, None);
        assert_eq!(vote(&[(3.0, 0)], 1, None).unwrap().label, Some(0));
    }

    #[test]
    fn majority_of_three() {
        let d = [(1.0, 0), (2.0, 0), (0.5, 1), (9.0, 1)];
        assert_eq!(vote(&d, 3, None).unwrap().label, Some(0));
        // 2-2 tie at k = 4: class 1 mean (0.5 + 9) / 2 > class 0 mean 1.5
        assert_eq!(vote(&d, 4, None).unwrap().label, Some(0));
    }

    #[test]
    fn bad_k_and_empty_gallery() {
        assert!(matches!(vote(&[], 1, None), Err(Error::NoModel(_))));
        assert!(vote(&[(1.0, 0)], 2, None).is_err());
        assert!(vote(&[(1.0, 0)], 0, None).is_err());
    }

    #[test]
    fn chi_square_basics() {
        assert_eq!(Metric::ChiSquare.distance(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(Metric::ChiSquare.distance(&[2.0, 0.0], &[0.0, 2.0]), 4.0);
        assert_eq!(Metric::Euclidean.distance(&[0.0, 3.0], &[4.0, 0.0]), 5.0);
    }
}
