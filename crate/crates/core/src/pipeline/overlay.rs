use crate::detection::Detection;
use crate::fusion::FusionOutcome;
use crate::image::{GrayImage, RgbImage};
use crate::localization::SteeredPowerMap;

const DETECTION_COLOR: [u8; 3] = [255, 255, 255];
const SOURCE_COLOR: [u8; 3] = [255, 0, 0];
const SPEAKER_COLOR: [u8; 3] = [0, 255, 0];

struct Canvas {
    img: RgbImage,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.img.width && (y as usize) < self.img.height {
            let i = y as usize * self.img.width + x as usize;
            self.img.pixels[i] = c;
        }
    }

    fn rect(&mut self, x0: f64, y0: f64, w: f64, h: f64, c: [u8; 3]) {
        let (x0, y0) = (x0.round() as i64, y0.round() as i64);
        let (x1, y1) = (x0 + w.round() as i64 - 1, y0 + h.round() as i64 - 1);
        for x in x0..=x1 {
            self.put(x, y0, c);
            self.put(x, y1, c);
        }
        for y in y0..=y1 {
            self.put(x0, y, c);
            self.put(x1, y, c);
        }
    }

    fn circle(&mut self, center: [f64; 2], r: f64, c: [u8; 3]) {
        let steps = (2.0 * std::f64::consts::PI * r).ceil().max(16.0) as usize;
        for i in 0..steps {
            let t = i as f64 / steps as f64 * std::f64::consts::TAU;
            self.put(
                (center[0] + r * t.cos()).round() as i64,
                (center[1] + r * t.sin()).round() as i64,
                c,
            );
        }
    }

    fn cross(&mut self, center: [f64; 2], half: i64, c: [u8; 3]) {
        let (cx, cy) = (center[0].round() as i64, center[1].round() as i64);
        for d in -half..=half {
            self.put(cx + d, cy, c);
            self.put(cx, cy + d, c);
        }
    }
}

/// Frame blended half and half with the power map (nearest-cell upsampling),
/// with detections, the acoustic source and the fused speaker marked.
pub fn render_overlay(
    frame: &GrayImage,
    map: &SteeredPowerMap,
    detections: &[Detection],
    outcome: &FusionOutcome,
) -> RgbImage {
    let (w, h) = (frame.width(), frame.height());
    let colors = map.to_color_image();
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = y * colors.height / h;
        for x in 0..w {
            let col = x * colors.width / w;
            let heat = colors.pixels[row * colors.width + col];
            let g = frame.get(x, y) as u16;
            pixels.push(heat.map(|c| (g + c as u16).div_ceil(2) as u8));
        }
    }
    let mut canvas = Canvas {
        img: RgbImage {
            width: w,
            height: h,
            pixels,
        },
    };
    for d in detections {
        canvas.rect(d.x, d.y, d.w, d.h, DETECTION_COLOR);
    }
    let radius = 0.03 * w as f64;
    if let Some(p) = outcome.source_position {
        canvas.circle(p, radius, SOURCE_COLOR);
    }
    if let Some(p) = outcome.speaker_position {
        canvas.cross(p, radius.round() as i64, SPEAKER_COLOR);
    }
    canvas.img
}
