use serde::{Deserialize, Serialize};

use super::dataset::FaceDataset;
use super::knn::{Gallery, GalleryEntry};
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Tolerance of the neighbor-vs-center comparison on interpolated samples.
pub const LBPH_EPSILON: f64 = 1e-9;
pub const MAX_NEIGHBORS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbphParams {
    /// P, the number of samples on the circle.
    pub neighbors: usize,
    /// R, the circle radius in pixels.
    pub radius: f64,
    pub grid_x: usize,
    pub grid_y: usize,
}

impl Default for LbphParams {
    fn default() -> Self {
        Self {
            neighbors: 8,
            radius: 1.0,
            grid_x: 8,
            grid_y: 8,
        }
    }
}

impl LbphParams {
    fn validate(&self) -> Result<()> {
        if self.neighbors == 0 || self.neighbors > MAX_NEIGHBORS {
            return Err(Error::Config(format!(
                "LBPH neighbor count must be in 1..={MAX_NEIGHBORS}, got {}",
                self.neighbors
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Config(format!(
                "LBPH radius must be positive, got {}",
                self.radius
            )));
        }
        if self.grid_x == 0 || self.grid_y == 0 {
            return Err(Error::InvalidGrid(
                "grid dimensions must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Margin of uncoded pixels along every border.
    pub fn border(&self) -> usize {
        self.radius.ceil() as usize
    }

    pub fn bins(&self) -> usize {
        1 << self.neighbors
    }

    /// Sample offsets, starting one step counter-clockwise from straight up
    /// (the top-left neighbor for P = 8) and proceeding clockwise.
    pub fn offsets(&self) -> Vec<(f64, f64)> {
        let p = self.neighbors as f64;
        let snap = |v: f64| {
            if (v - v.round()).abs() < 1e-9 {
                v.round()
            } else {
                v
            }
        };
        (0..self.neighbors)
            .map(|i| {
                let phi =
                    std::f64::consts::FRAC_PI_2 + std::f64::consts::TAU * (1.0 - i as f64) / p;
                (
                    snap(self.radius * phi.cos()),
                    snap(-self.radius * phi.sin()),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbphModel {
    pub width: usize,
    pub height: usize,
    pub params: LbphParams,
    pub gallery: Gallery,
}

fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (xi, yi) = (x0 as usize, y0 as usize);
    let at = |dx: usize, dy: usize, w: f64| {
        if w == 0.0 {
            0.0
        } else {
            w * f64::from(img.get(xi + dx, yi + dy))
        }
    };
    at(0, 0, (1.0 - fx) * (1.0 - fy))
        + at(1, 0, fx * (1.0 - fy))
        + at(0, 1, (1.0 - fx) * fy)
        + at(1, 1, fx * fy)
}

/// LBP_{P,R} code at every coded pixel, row-major over the
/// `(w − 2b) × (h − 2b)` interior where `b = ceil(R)`.
pub fn lbp_pr_codes(img: &GrayImage, params: &LbphParams) -> Result<(usize, usize, Vec<u32>)> {
    params.validate()?;
    let b = params.border();
    if img.width() <= 2 * b || img.height() <= 2 * b {
        return Err(Error::Shape(format!(
            "{}x{} image has no pixels at distance {} from the border",
            img.width(),
            img.height(),
            b
        )));
    }
    let offsets = params.offsets();
    let (cw, ch) = (img.width() - 2 * b, img.height() - 2 * b);
    let mut codes = Vec::with_capacity(cw * ch);
    for y in b..b + ch {
        for x in b..b + cw {
            let center = f64::from(img.get(x, y));
            let mut code = 0u32;
            for &(dx, dy) in &offsets {
                let v = bilinear(img, x as f64 + dx, y as f64 + dy);
                code = (code << 1) | u32::from(v - center >= -LBPH_EPSILON);
            }
            codes.push(code);
        }
    }
    Ok((cw, ch, codes))
}

/// Concatenated per-cell code histograms (raw counts).
pub fn lbph_descriptor(img: &GrayImage, params: &LbphParams) -> Result<Vec<f64>> {
    let (cw, ch, codes) = lbp_pr_codes(img, params)?;
    let (gx, gy) = (params.grid_x, params.grid_y);
    if cw / gx < 3 || ch / gy < 3 {
        return Err(Error::InvalidGrid(format!(
            "{gx}x{gy} grid over a {cw}x{ch} coded region leaves cells smaller than 3x3"
        )));
    }
    let bins = params.bins();
    let mut hist = vec![0.0; gx * gy * bins];
    for y in 0..ch {
        let cy = y * gy / ch;
        for x in 0..cw {
            let cx = x * gx / cw;
            hist[(cy * gx + cx) * bins + codes[y * cw + x] as usize] += 1.0;
        }
    }
    Ok(hist)
}

pub fn train_lbph(data: &FaceDataset, params: LbphParams) -> Result<LbphModel> {
    let (width, height) = data.dims();
    let entries = data
        .images()
        .iter()
        .zip(data.labels())
        .map(|(img, &label)| {
            Ok(GalleryEntry {
                label,
                features: lbph_descriptor(img, &params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LbphModel {
        width,
        height,
        params,
        gallery: Gallery {
            class_names: data.class_names().to_vec(),
            entries,
        },
    })
}

impl LbphModel {
    pub fn describe(&self, img: &GrayImage) -> Result<Vec<f64>> {
        if (img.width(), img.height()) != (self.width, self.height) {
            return Err(Error::Shape(format!(
                "image is {}x{}, model expects {}x{}",
                img.width(),
                img.height(),
                self.width,
                self.height
            )));
        }
        lbph_descriptor(img, &self.params)
    }
}
