//! Face normalization: eye localization, similarity alignment, elliptical
//! mask and histogram equalization.
//!
//! The eye search and the warp run in integer arithmetic, so adding a
//! constant brightness to the input (without clipping) shifts every
//! intermediate value by exactly that constant and the rank-based
//! equalization then removes it.

use crate::detection::{integral_image, IntegralImage};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::scene_sim::{PixelBox, LEFT_EYE_ANCHOR, RIGHT_EYE_ANCHOR};

/// Side of the canonical face image.
pub const CANONICAL_SIZE: usize = 64;
/// Minimum mean darkness of an eye blob against its surround, in gray levels.
pub const MIN_EYE_CONTRAST: i64 = 10;

/// Canonical eye positions in an `n`×`n` output.
pub fn canonical_eyes(n: usize) -> ([f64; 2], [f64; 2]) {
    let n = n as f64;
    (
        [LEFT_EYE_ANCHOR[0] * n, LEFT_EYE_ANCHOR[1] * n],
        [RIGHT_EYE_ANCHOR[0] * n, RIGHT_EYE_ANCHOR[1] * n],
    )
}

/// Similarity transform from output (canonical) to input pixel coordinates:
/// `(x, y) -> (a·x − b·y + tx, b·x + a·y + ty)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub a: f64,
    pub b: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Alignment {
    /// The transform sending `targets` to `eyes`.
    pub fn from_eyes(eyes: ([f64; 2], [f64; 2]), targets: ([f64; 2], [f64; 2])) -> Result<Self> {
        let (el, er) = eyes;
        let (tl, tr) = targets;
        let de = [er[0] - el[0], er[1] - el[1]];
        let dt = [tr[0] - tl[0], tr[1] - tl[1]];
        let dt2 = dt[0] * dt[0] + dt[1] * dt[1];
        if de[0] * de[0] + de[1] * de[1] < 1e-6 || dt2 < 1e-6 {
            return Err(Error::PreprocessingFailed("eye positions coincide".into()));
        }
        // complex ratio de / dt
        let a = (de[0] * dt[0] + de[1] * dt[1]) / dt2;
        let b = (de[1] * dt[0] - de[0] * dt[1]) / dt2;
        Ok(Self {
            a,
            b,
            tx: el[0] - (a * tl[0] - b * tl[1]),
            ty: el[1] - (b * tl[0] + a * tl[1]),
        })
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.a * p[0] - self.b * p[1] + self.tx,
            self.b * p[0] + self.a * p[1] + self.ty,
        ]
    }

    /// Maps an input point into output coordinates.
    pub fn invert(&self, p: [f64; 2]) -> [f64; 2] {
        let det = self.a * self.a + self.b * self.b;
        let x = p[0] - self.tx;
        let y = p[1] - self.ty;
        [
            (self.a * x + self.b * y) / det,
            (-self.b * x + self.a * y) / det,
        ]
    }
}

struct IntBox {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
}

fn face_region(img: &GrayImage, face: &PixelBox) -> Result<IntBox> {
    let x = face.x.round();
    let y = face.y.round();
    let w = face.w.round();
    let h = face.h.round();
    if !(x >= 0.0 && y >= 0.0 && w >= 8.0 && h >= 8.0)
        || x + w > img.width() as f64
        || y + h > img.height() as f64
    {
        return Err(Error::Bounds(format!(
            "face box {face:?} is not a box of at least 8x8 inside the {}x{} image",
            img.width(),
            img.height()
        )));
    }
    Ok(IntBox {
        x: x as usize,
        y: y as usize,
        w: w as usize,
        h: h as usize,
    })
}

fn box_sum(ii: &IntegralImage, x0: usize, y0: usize, x1: usize, y1: usize) -> i64 {
    ii.at(x1, y1) - ii.at(x0, y1) - ii.at(x1, y0) + ii.at(x0, y0)
}

/// Darkest blob in `[x0, x1) × [y0, y1)`: box-filter argmin, then the
/// centroid of the pixels darker than the midpoint between the blob and its
/// surround.
fn find_dark_blob(
    img: &GrayImage,
    ii: &IntegralImage,
    region: (usize, usize, usize, usize),
    kernel: (usize, usize),
) -> Option<[f64; 2]> {
    let (x0, y0, x1, y1) = region;
    let (kw, kh) = kernel;
    if x1 < x0 + kw || y1 < y0 + kh {
        return None;
    }
    let mut best = (i64::MAX, 0, 0);
    for y in y0..=y1 - kh {
        for x in x0..=x1 - kw {
            let s = box_sum(ii, x, y, x + kw, y + kh);
            if s < best.0 {
                best = (s, x, y);
            }
        }
    }
    let (dark_sum, bx, by) = best;
    let nx0 = bx.saturating_sub(kw).max(x0);
    let ny0 = by.saturating_sub(kh).max(y0);
    let nx1 = (bx + 2 * kw).min(x1);
    let ny1 = (by + 2 * kh).min(y1);
    let area_d = (kw * kh) as i64;
    let area_n = ((nx1 - nx0) * (ny1 - ny0)) as i64;
    let near_sum = box_sum(ii, nx0, ny0, nx1, ny1);
    // contrast: mean(surround) − mean(blob) ≥ MIN_EYE_CONTRAST, cross-multiplied
    if near_sum * area_d - dark_sum * area_n < MIN_EYE_CONTRAST * area_d * area_n {
        return None;
    }
    let thr2 = i128::from(dark_sum * area_n + near_sum * area_d);
    let scale = 2 * i128::from(area_d * area_n);
    let (mut sw, mut sx, mut sy) = (0i128, 0i128, 0i128);
    for y in ny0..ny1 {
        for x in nx0..nx1 {
            let wgt = thr2 - scale * i128::from(img.get(x, y));
            if wgt > 0 {
                sw += wgt;
                sx += wgt * x as i128;
                sy += wgt * y as i128;
            }
        }
    }
    if sw == 0 {
        return None;
    }
    Some([sx as f64 / sw as f64, sy as f64 / sw as f64])
}

/// Finds both eyes as dark blobs in the upper half of the face box.
pub fn locate_eyes(img: &GrayImage, face: &PixelBox) -> Result<([f64; 2], [f64; 2])> {
    let r = face_region(img, face)?;
    let ii = integral_image(img);
    let frac = |v: f64, of: usize| (v * of as f64).round() as usize;
    let kernel = (frac(0.12, r.w).max(1), frac(0.07, r.h).max(1));
    let y0 = r.y + frac(0.2, r.h);
    let y1 = r.y + frac(0.55, r.h);
    let mid = r.x + r.w / 2;
    let left = find_dark_blob(img, &ii, (r.x + frac(0.05, r.w), y0, mid, y1), kernel).ok_or_else(
        || Error::PreprocessingFailed("no eye found in the left half of the face".into()),
    )?;
    let right = find_dark_blob(img, &ii, (mid, y0, r.x + r.w - frac(0.05, r.w), y1), kernel)
        .ok_or_else(|| {
            Error::PreprocessingFailed("no eye found in the right half of the face".into())
        })?;
    let dx = right[0] - left[0];
    let dy = right[1] - left[1];
    if dx < 0.2 * r.w as f64 || dy.abs() > dx {
        return Err(Error::PreprocessingFailed(format!(
            "implausible eye pair {left:?} / {right:?}"
        )));
    }
    Ok((left, right))
}

/// Resamples `img` through `align` into an `n`×`n` image. Bilinear weights
/// are quantized to 1/256 and borders are replicated.
pub fn warp(img: &GrayImage, align: &Alignment, n: usize) -> GrayImage {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let px =
        |x: i64, y: i64| i64::from(img.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize));
    let split = |v: f64| {
        let f = v.floor();
        let q = ((v - f) * 256.0).round() as i64;
        (f as i64, q)
    };
    GrayImage::from_fn(n, n, |x, y| {
        let [sx, sy] = align.apply([x as f64, y as f64]);
        let (fx, qx) = split(sx);
        let (fy, qy) = split(sy);
        let acc = (256 - qx) * (256 - qy) * px(fx, fy)
            + qx * (256 - qy) * px(fx + 1, fy)
            + (256 - qx) * qy * px(fx, fy + 1)
            + qx * qy * px(fx + 1, fy + 1);
        ((acc + 32768) >> 16).clamp(0, 255) as u8
    })
    .expect("positive canonical size")
}

/// Elliptical face mask, axes 0.78·n × 1.1·n, centered at (n/2, 0.55·n).
pub fn elliptical_mask(n: usize) -> Vec<bool> {
    let nf = n as f64;
    let (cx, cy) = ((nf - 1.0) / 2.0, 0.55 * nf);
    let (ax, ay) = (0.39 * nf, 0.55 * nf);
    let mut mask = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let u = (x as f64 - cx) / ax;
            let v = (y as f64 - cy) / ay;
            mask.push(u * u + v * v <= 1.0);
        }
    }
    mask
}

/// Masks a square image and equalizes the histogram of the pixels inside
/// the mask; outside pixels become 0.
pub fn mask_and_equalize(img: &GrayImage) -> GrayImage {
    assert_eq!(img.width(), img.height(), "canonical faces are square");
    let n = img.width();
    let mask = elliptical_mask(n);
    let mut hist = [0i64; 256];
    for (p, &m) in img.pixels().iter().zip(&mask) {
        if m {
            hist[usize::from(*p)] += 1;
        }
    }
    let total: i64 = hist.iter().sum();
    let mut cdf = [0i64; 256];
    let mut run = 0;
    for (c, h) in cdf.iter_mut().zip(hist) {
        run += h;
        *c = run;
    }
    let cmin = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    let span = total - cmin;
    let lut: Vec<u8> = cdf
        .iter()
        .map(|&c| {
            if span == 0 {
                128
            } else {
                ((255 * (c - cmin) + span / 2) / span).clamp(0, 255) as u8
            }
        })
        .collect();
    let pixels = img
        .pixels()
        .iter()
        .zip(&mask)
        .map(|(&p, &m)| if m { lut[usize::from(p)] } else { 0 })
        .collect();
    GrayImage::new(n, n, pixels).expect("same size")
}

/// Eye positions, the alignment used, and the canonical face.
#[derive(Debug, Clone)]
pub struct PreprocessedFace {
    pub eyes: ([f64; 2], [f64; 2]),
    pub alignment: Alignment,
    pub face: GrayImage,
}

/// [`preprocess_face`] with an explicit output size and full diagnostics.
pub fn preprocess_face_detailed(
    img: &GrayImage,
    face_box: &PixelBox,
    eyes: Option<([f64; 2], [f64; 2])>,
    n: usize,
) -> Result<PreprocessedFace> {
    if n < 8 {
        return Err(Error::Config(format!("canonical size {n} is too small")));
    }
    face_region(img, face_box)?;
    let eyes = match eyes {
        Some(e) => e,
        None => locate_eyes(img, face_box)?,
    };
    let alignment = Alignment::from_eyes(eyes, canonical_eyes(n))?;
    let face = mask_and_equalize(&warp(img, &alignment, n));
    Ok(PreprocessedFace {
        eyes,
        alignment,
        face,
    })
}

/// Canonical 64×64 face: eyes found (unless given), aligned to fixed
/// anchors, masked and equalized.
pub fn preprocess_face(
    img: &GrayImage,
    face_box: &PixelBox,
    eyes: Option<([f64; 2], [f64; 2])>,
) -> Result<GrayImage> {
    preprocess_face_detailed(img, face_box, eyes, CANONICAL_SIZE).map(|p| p.face)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_maps_targets_to_eyes() {
        let eyes = ([30.0, 40.0], [60.0, 50.0]);
        let targets = canonical_eyes(64);
        let al = Alignment::from_eyes(eyes, targets).unwrap();
        for (t, e) in [(targets.0, eyes.0), (targets.1, eyes.1)] {
            let p = al.apply(t);
            assert!((p[0] - e[0]).abs() < 1e-9 && (p[1] - e[1]).abs() < 1e-9);
            let back = al.invert(e);
            assert!((back[0] - t[0]).abs() < 1e-9 && (back[1] - t[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_warp_is_exact() {
        let img = GrayImage::from_fn(16, 16, |x, y| (x * 13 + y * 7) as u8).unwrap();
        let id = Alignment {
            a: 1.0,
            b: 0.0,
            tx: 0.0,
            ty: 0.0,
        };
        assert_eq!(warp(&img, &id, 16), img);
    }

    #[test]
    fn equalization_spans_full_range() {
        let img = GrayImage::from_fn(32, 32, |x, _| 100 + (x as u8 % 4)).unwrap();
        let eq = mask_and_equalize(&img);
        let mask = elliptical_mask(32);
        let inside: Vec<u8> = eq
            .pixels()
            .iter()
            .zip(&mask)
            .filter(|(_, m)| **m)
            .map(|(p, _)| *p)
            .collect();
        assert_eq!(*inside.iter().min().unwrap(), 0);
        assert_eq!(*inside.iter().max().unwrap(), 255);
        assert_eq!(
            mask_and_equalize(&GrayImage::filled(8, 8, 9).unwrap()).get(4, 4),
            128
        );
    }

    #[test]
    fn flat_face_has_no_eyes() {
        let img = GrayImage::filled(60, 60, 140).unwrap();
        let face = PixelBox {
            x: 5.0,
            y: 5.0,
            w: 50.0,
            h: 50.0,
        };
        assert!(matches!(
            locate_eyes(&img, &face),
            Err(Error::PreprocessingFailed(_))
        ));
        let outside = PixelBox {
            x: 30.0,
            y: 5.0,
            w: 50.0,
            h: 50.0,
        };
        assert!(matches!(
            preprocess_face(&img, &outside, None),
            Err(Error::Bounds(_))
        ));
    }
}
