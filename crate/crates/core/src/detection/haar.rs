use serde::{Deserialize, Serialize};

use super::integral::IntegralImage;
use crate::error::{Error, Result};

/// The five canonical Haar-like feature layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaarKind {
    /// White left half, black right half.
    TwoRectHorizontal,
    /// White top half, black bottom half.
    TwoRectVertical,
    /// White | black | white, left to right.
    ThreeRectHorizontal,
    /// White / black / white, top to bottom.
    ThreeRectVertical,
    /// White top-left and bottom-right, black elsewhere.
    FourRect,
}

impl HaarKind {
    pub const ALL: [HaarKind; 5] = [
        HaarKind::TwoRectHorizontal,
        HaarKind::TwoRectVertical,
        HaarKind::ThreeRectHorizontal,
        HaarKind::ThreeRectVertical,
        HaarKind::FourRect,
    ];

    /// Number of unit cells across and down.
    pub fn cells(self) -> (usize, usize) {
        match self {
            HaarKind::TwoRectHorizontal => (2, 1),
            HaarKind::TwoRectVertical => (1, 2),
            HaarKind::ThreeRectHorizontal => (3, 1),
            HaarKind::ThreeRectVertical => (1, 3),
            HaarKind::FourRect => (2, 2),
        }
    }
}

/// One weighted rectangle of a feature, window-relative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub weight: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarFeature {
    pub kind: HaarKind,
    pub rects: Vec<HaarRect>,
}

impl HaarFeature {
    /// Feature of `kind` whose top-left corner is (`x`, `y`) and whose unit
    /// cell measures `cell_w`×`cell_h`. Weights are area-balanced so that the
    /// feature responds with exactly 0 on a flat patch.
    pub fn new(kind: HaarKind, x: usize, y: usize, cell_w: usize, cell_h: usize) -> Self {
        let r = |cx: usize, cy: usize, weight: i32| HaarRect {
            x: x + cx * cell_w,
            y: y + cy * cell_h,
            w: cell_w,
            h: cell_h,
            weight,
        };
        let rects = match kind {
            HaarKind::TwoRectHorizontal => vec![r(0, 0, 1), r(1, 0, -1)],
            HaarKind::TwoRectVertical => vec![r(0, 0, 1), r(0, 1, -1)],
            HaarKind::ThreeRectHorizontal => vec![r(0, 0, 1), r(1, 0, -2), r(2, 0, 1)],
            HaarKind::ThreeRectVertical => vec![r(0, 0, 1), r(0, 1, -2), r(0, 2, 1)],
            HaarKind::FourRect => vec![r(0, 0, 1), r(1, 0, -1), r(0, 1, -1), r(1, 1, 1)],
        };
        Self { kind, rects }
    }

    /// Smallest (w, h) box enclosing all rects, measured from the window origin.
    pub fn extent(&self) -> (usize, usize) {
        self.rects
            .iter()
            .fold((0, 0), |(w, h), r| (w.max(r.x + r.w), h.max(r.y + r.h)))
    }

    pub fn fits(&self, window: (usize, usize)) -> bool {
        let (w, h) = self.extent();
        w <= window.0 && h <= window.1
    }

    /// Sum of weight × area over all rects; zero for a balanced feature.
    pub fn weighted_area(&self) -> i64 {
        self.rects
            .iter()
            .map(|r| i64::from(r.weight) * (r.w * r.h) as i64)
            .sum()
    }

    /// White-minus-black response of the feature placed at `origin` with the
    /// window scaled by `scale`, divided by the scaled window area.
    pub fn response(
        &self,
        ii: &IntegralImage,
        origin: (usize, usize),
        scale: f64,
        base_window: (usize, usize),
    ) -> Result<f64> {
        let s = |v: usize| (v as f64 * scale).round() as usize;
        let mut total = 0i64;
        for r in &self.rects {
            let sum = ii.rect_sum(origin.0 + s(r.x), origin.1 + s(r.y), s(r.w), s(r.h))?;
            total += i64::from(r.weight) * sum;
        }
        let area = (s(base_window.0) * s(base_window.1)).max(1) as f64;
        Ok(total as f64 / area)
    }
}

/// Direction of the weak classifier's inequality; serialized as `1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Parity {
    Positive,
    Negative,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Positive => 1.0,
            Parity::Negative => -1.0,
        }
    }
}

impl TryFrom<i8> for Parity {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Parity::Positive),
            -1 => Ok(Parity::Negative),
            other => Err(format!("parity must be 1 or -1, got {other}")),
        }
    }
}

impl From<Parity> for i8 {
    fn from(p: Parity) -> i8 {
        match p {
            Parity::Positive => 1,
            Parity::Negative => -1,
        }
    }
}

/// Thresholded Haar feature: votes 1 iff `p·f < p·θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakClassifier {
    pub feature: HaarFeature,
    pub threshold: f64,
    pub parity: Parity,
}

impl WeakClassifier {
    pub fn decide(&self, response: f64) -> u8 {
        let p = self.parity.sign();
        u8::from(p * response < p * self.threshold)
    }
}

/// Evaluates one weak classifier on the window at `origin`, `scale`.
pub fn eval_weak_classifier(
    ii: &IntegralImage,
    origin: (usize, usize),
    scale: f64,
    base_window: (usize, usize),
    wc: &WeakClassifier,
) -> Result<u8> {
    Ok(wc.decide(wc.feature.response(ii, origin, scale, base_window)?))
}

/// Every placement and size of the requested feature kinds inside `window`.
pub fn enumerate_haar_features_of(window: (usize, usize), kinds: &[HaarKind]) -> Vec<HaarFeature> {
    let (ww, wh) = window;
    let mut out = Vec::new();
    for &kind in kinds {
        let (cx, cy) = kind.cells();
        for cell_w in 1..=ww / cx {
            for cell_h in 1..=wh / cy {
                let (fw, fh) = (cell_w * cx, cell_h * cy);
                for y in 0..=wh - fh {
                    for x in 0..=ww - fw {
                        out.push(HaarFeature::new(kind, x, y, cell_w, cell_h));
                    }
                }
            }
        }
    }
    out
}

/// Exhaustive enumeration of all five canonical kinds.
pub fn enumerate_haar_features(window: (usize, usize)) -> Result<Vec<HaarFeature>> {
    if window.0 == 0 || window.1 == 0 {
        return Err(Error::Shape(format!(
            "window must be at least 1x1, got {}x{}",
            window.0, window.1
        )));
    }
    Ok(enumerate_haar_features_of(window, &HaarKind::ALL))
}
