use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cascade::{run_cascade_observed, CascadeModel, CascadeVerdict, FeatureFrame};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::scene_sim::PixelBox;

pub const DEFAULT_SCALE_FACTOR: f64 = 1.1;
pub const DEFAULT_STEP: usize = 2;
pub const DEFAULT_MIN_NEIGHBORS: usize = 3;
/// Two boxes belong to the same cluster when their IoU reaches this value.
pub const MERGE_IOU: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
    #[serde(rename = "neighbors")]
    pub neighbor_count: usize,
}

impl Detection {
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn intersection_area(&self, other: &Detection) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        ix.max(0.0) * iy.max(0.0)
    }

    pub fn to_pixel_box(&self) -> PixelBox {
        PixelBox {
            x: self.x,
            y: self.y,
            w: self.w,
            h: self.h,
        }
    }

    pub fn iou(&self, other: &Detection) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiscaleParams {
    pub scale_factor: f64,
    pub step: usize,
    pub min_neighbors: usize,
}

impl Default for MultiscaleParams {
    fn default() -> Self {
        Self {
            scale_factor: DEFAULT_SCALE_FACTOR,
            step: DEFAULT_STEP,
            min_neighbors: DEFAULT_MIN_NEIGHBORS,
        }
    }
}

/// Scales `scale_factor^k` at which the base window still fits the image.
pub fn pyramid_scales(
    image: (usize, usize),
    base_window: (usize, usize),
    scale_factor: f64,
) -> Result<Vec<f64>> {
    if !(scale_factor > 1.0) || !scale_factor.is_finite() {
        return Err(Error::Config(format!(
            "scale_factor must be a finite value above 1, got {scale_factor}"
        )));
    }
    let mut scales = Vec::new();
    let mut k = 0;
    loop {
        let s = scale_factor.powi(k);
        // unrounded test so the count follows floor(log(dim / base) / log(factor)) + 1
        if base_window.0 as f64 * s > image.0 as f64 || base_window.1 as f64 * s > image.1 as f64 {
            break;
        }
        scales.push(s);
        k += 1;
    }
    Ok(scales)
}

/// Accepted windows at every scale and position, before merging.
pub fn raw_detections(
    img: &GrayImage,
    model: &CascadeModel,
    params: &MultiscaleParams,
) -> Result<Vec<Detection>> {
    let scales = pyramid_scales(
        (img.width(), img.height()),
        model.base_window,
        params.scale_factor,
    )?;
    if scales.is_empty() {
        return Ok(Vec::new());
    }
    let frame = FeatureFrame::for_model(img, model);
    let per_scale: Result<Vec<Vec<Detection>>> = scales
        .par_iter()
        .map(|&s| {
            let win_w = (model.base_window.0 as f64 * s).round() as usize;
            let win_h = (model.base_window.1 as f64 * s).round() as usize;
            let step = ((params.step.max(1) as f64) * s).round().max(1.0) as usize;
            let mut found = Vec::new();
            for y in (0..=img.height() - win_h).step_by(step) {
                for x in (0..=img.width() - win_w).step_by(step) {
                    let (verdict, score) = run_cascade_observed(&frame, (x, y), s, model, |_| {})?;
                    if verdict == CascadeVerdict::Accept {
                        found.push(Detection {
                            x: x as f64,
                            y: y as f64,
                            w: win_w as f64,
                            h: win_h as f64,
                            score,
                            neighbor_count: 1,
                        });
                    }
                }
            }
            Ok(found)
        })
        .collect();
    Ok(per_scale?.into_iter().flatten().collect())
}

/// Slides the cascade over an image pyramid and merges the accepted windows.
pub fn detect_multiscale(
    img: &GrayImage,
    model: &CascadeModel,
    scale_factor: f64,
    step: usize,
    min_neighbors: usize,
) -> Result<Vec<Detection>> {
    let params = MultiscaleParams {
        scale_factor,
        step,
        min_neighbors,
    };
    Ok(merge_detections(
        &raw_detections(img, model, &params)?,
        min_neighbors,
    ))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Clusters boxes linked by IoU ≥ [`MERGE_IOU`] and replaces each cluster
/// of at least `min_neighbors` boxes with its mean box.
pub fn merge_detections(raw: &[Detection], min_neighbors: usize) -> Vec<Detection> {
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if raw[i].iou(&raw[j]) >= MERGE_IOU {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    // Clusters keyed by root, kept in order of first member.
    let mut order: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if members[r].is_empty() {
            order.push(r);
        }
        members[r].push(i);
    }
    order
        .into_iter()
        .filter(|&r| members[r].len() >= min_neighbors.max(1))
        .map(|r| {
            let m = &members[r];
            let k = m.len() as f64;
            let mean = |f: fn(&Detection) -> f64| m.iter().map(|&i| f(&raw[i])).sum::<f64>() / k;
            Detection {
                x: mean(|d| d.x),
                y: mean(|d| d.y),
                w: mean(|d| d.w),
                h: mean(|d| d.h),
                score: m
                    .iter()
                    .map(|&i| raw[i].score)
                    .fold(f64::NEG_INFINITY, f64::max),
                neighbor_count: m.len(),
            }
        })
        .collect()
}

/// One JSON object per line.
pub fn write_detections(out: &mut impl Write, detections: &[Detection]) -> std::io::Result<()> {
    for d in detections {
        serde_json::to_writer(&mut *out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::toy_face_cascade;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> Detection {
        Detection {
            x,
            y,
            w,
            h,
            score: 0.0,
            neighbor_count: 1,
        }
    }

    #[test]
    fn small_image_gives_nothing() {
        let img = GrayImage::filled(20, 30, 128).unwrap();
        assert!(detect_multiscale(&img, &toy_face_cascade(), 1.1, 2, 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn scale_factor_must_exceed_one() {
        let img = GrayImage::filled(40, 40, 0).unwrap();
        assert!(detect_multiscale(&img, &toy_face_cascade(), 1.0, 2, 1).is_err());
    }

    #[test]
    fn scale_count_matches_log_formula() {
        for side in [24usize, 25, 26, 30, 48, 100, 240, 480] {
            let expected = ((side as f64 / 24.0).ln() / 1.1f64.ln()).floor() as usize + 1;
            let got = pyramid_scales((side, side + 7), (24, 24), 1.1)
                .unwrap()
                .len();
            assert_eq!(got, expected, "side {side}");
        }
    }

    #[test]
    fn identical_pair_merges() {
        let b = bx(3.0, 4.0, 10.0, 12.0);
        let out = merge_detections(&[b, b], 2);
        assert_eq!(out.len(), 1);
        assert_eq!(
            (out[0].x, out[0].y, out[0].w, out[0].h),
            (3.0, 4.0, 10.0, 12.0)
        );
        assert_eq!(out[0].neighbor_count, 2);
    }

    #[test]
    fn disjoint_boxes_stay() {
        let a = bx(0.0, 0.0, 5.0, 5.0);
        let b = bx(50.0, 50.0, 5.0, 5.0);
        let out = merge_detections(&[a, b], 1);
        assert_eq!(out.len(), 2);
        assert!(merge_detections(&[a, b], 2).is_empty());
    }

    #[test]
    fn cluster_mean() {
        let raw = [
            bx(10.0, 10.0, 20.0, 20.0),
            bx(12.0, 12.0, 20.0, 20.0),
            bx(14.0, 10.0, 20.0, 20.0),
        ];
        let out = merge_detections(&raw, 3);
        assert_eq!(out.len(), 1);
        assert!((out[0].x - 12.0).abs() < 1e-12);
        assert!((out[0].y - 32.0 / 3.0).abs() < 1e-12);
        assert_eq!((out[0].w, out[0].h), (20.0, 20.0));
    }

    #[test]
    fn detections_serialize_as_lines() {
        let mut buf = Vec::new();
        write_detections(&mut buf, &[bx(1.0, 2.0, 3.0, 4.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains("\"neighbors\":1"));
    }
}
