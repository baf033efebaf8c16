//! Deterministic synthetic faces standing in for webcam frames.
//!
//! Every identity label maps to a fixed pattern (skin tone, a 4×4 block
//! pattern, a shading gradient, hair line and mouth width). All faces share
//! the same layout: an oval with two dark eye blobs at fractional
//! coordinates (0.3, 0.35) and (0.7, 0.35) of the sprite box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::scene::{FaceSprite, SceneDescription};
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Side length in pixels of a sprite at scale 1.
pub const SPRITE_BASE_SIZE: f64 = 48.0;

/// Fractional eye anchors inside the sprite box.
pub const LEFT_EYE_ANCHOR: [f64; 2] = [0.3, 0.35];
pub const RIGHT_EYE_ANCHOR: [f64; 2] = [0.7, 0.35];

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl PixelBox {
    pub fn center(&self) -> [f64; 2] {
        [self.x + self.w / 2.0, self.y + self.h / 2.0]
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn intersection_area(&self, other: &PixelBox) -> f64 {
        let w = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let h = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn iou(&self, other: &PixelBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// Where a rendered face ended up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpriteTruth {
    pub identity: String,
    pub bbox: PixelBox,
    pub left_eye: [f64; 2],
    pub right_eye: [f64; 2],
}

fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone)]
struct FacePattern {
    skin: f64,
    blocks: [[f64; 4]; 4],
    gradient: [f64; 2],
    hair_line: f64,
    hair_tone: f64,
    mouth_half_width: f64,
}

impl FacePattern {
    fn for_identity(identity: &str) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(identity));
        let mut blocks = [[0.0; 4]; 4];
        for row in &mut blocks {
            for b in row.iter_mut() {
                *b = rng.random_range(-18.0..18.0);
            }
        }
        Self {
            skin: rng.random_range(150.0..195.0),
            blocks,
            gradient: [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)],
            hair_line: rng.random_range(0.08..0.2),
            hair_tone: rng.random_range(35.0..95.0),
            mouth_half_width: rng.random_range(0.1..0.17),
        }
    }

    /// Intensity at fractional sprite coordinates, `None` outside the face oval.
    fn intensity(&self, u: f64, v: f64) -> Option<f64> {
        let ou = (u - 0.5) / 0.46;
        let ov = (v - 0.5) / 0.5;
        if ou * ou + ov * ov > 1.0 {
            return None;
        }
        let in_eye = |anchor: [f64; 2]| {
            let du = (u - anchor[0]) / 0.1;
            let dv = (v - anchor[1]) / 0.065;
            du * du + dv * dv <= 1.0
        };
        if in_eye(LEFT_EYE_ANCHOR) || in_eye(RIGHT_EYE_ANCHOR) {
            return Some(25.0);
        }
        if v < self.hair_line {
            return Some(self.hair_tone);
        }
        let col = ((u * 4.0) as usize).min(3);
        let row = ((v * 4.0) as usize).min(3);
        let base = self.skin
            + self.blocks[row][col]
            + self.gradient[0] * (u - 0.5)
            + self.gradient[1] * (v - 0.5);
        if (v - 0.72).abs() < 0.035 && (u - 0.5).abs() < self.mouth_half_width {
            return Some((base - 80.0).clamp(0.0, 255.0));
        }
        Some(base.clamp(0.0, 255.0))
    }
}

/// Composites one face into `canvas`; returns its ground truth.
fn draw_face(
    canvas: &mut [f64],
    width: usize,
    height: usize,
    identity: &str,
    center: [f64; 2],
    size: f64,
    rotation_deg: f64,
) -> SpriteTruth {
    let pattern = FacePattern::for_identity(identity);
    let (sin, cos) = rotation_deg.to_radians().sin_cos();
    // sprite-local offset -> image offset is a rotation by +theta
    let to_image = |u: f64, v: f64| {
        let dx = (u - 0.5) * size;
        let dy = (v - 0.5) * size;
        [
            center[0] + cos * dx - sin * dy,
            center[1] + sin * dx + cos * dy,
        ]
    };
    let reach = size * std::f64::consts::FRAC_1_SQRT_2 + 2.0;
    let x0 = (center[0] - reach).floor().max(0.0) as usize;
    let y0 = (center[1] - reach).floor().max(0.0) as usize;
    let x1 = ((center[0] + reach).ceil() as usize).min(width);
    let y1 = ((center[1] + reach).ceil() as usize).min(height);
    const SUB: [f64; 2] = [-0.25, 0.25];
    for py in y0..y1 {
        for px in x0..x1 {
            let mut acc = 0.0;
            let mut hits = 0;
            for sy in SUB {
                for sx in SUB {
                    let dx = px as f64 + sx - center[0];
                    let dy = py as f64 + sy - center[1];
                    // inverse rotation back into the sprite frame
                    let u = (cos * dx + sin * dy) / size + 0.5;
                    let v = (-sin * dx + cos * dy) / size + 0.5;
                    if let Some(value) = pattern.intensity(u, v) {
                        acc += value;
                        hits += 1;
                    }
                }
            }
            if hits > 0 {
                let idx = py * width + px;
                let bg = canvas[idx];
                canvas[idx] = (acc + bg * f64::from(4 - hits)) / 4.0;
            }
        }
    }
    SpriteTruth {
        identity: identity.to_string(),
        bbox: PixelBox {
            x: center[0] - size / 2.0,
            y: center[1] - size / 2.0,
            w: size,
            h: size,
        },
        left_eye: to_image(LEFT_EYE_ANCHOR[0], LEFT_EYE_ANCHOR[1]),
        right_eye: to_image(RIGHT_EYE_ANCHOR[0], RIGHT_EYE_ANCHOR[1]),
    }
}

fn textured_background(width: usize, height: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x5eed);
    let phase_x: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let phase_y: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let wave = (x as f64 / 31.0 + phase_x).sin() * (y as f64 / 19.0 + phase_y).cos();
            out.push(105.0 + 22.0 * wave + rng.random_range(-5.0..5.0));
        }
    }
    out
}

fn quantize(canvas: &[f64]) -> Vec<u8> {
    canvas
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect()
}

fn sprite_size(sprite: &FaceSprite) -> f64 {
    SPRITE_BASE_SIZE * sprite.scale
}

/// Renders the scene's face sprites onto a textured background.
///
/// Returns the frame and one [`SpriteTruth`] per sprite, in scene order.
pub fn render_synthetic_frame(
    scene: &SceneDescription,
    width: usize,
    height: usize,
) -> Result<(GrayImage, Vec<SpriteTruth>)> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidScene(
            "frame dimensions must be positive".into(),
        ));
    }
    let mut canvas = textured_background(width, height, scene.seed);
    let mut truths = Vec::with_capacity(scene.face_sprites.len());
    for (i, sprite) in scene.face_sprites.iter().enumerate() {
        if !(sprite.scale.is_finite() && sprite.scale > 0.0) {
            return Err(Error::InvalidScene(format!(
                "face_sprites[{i}].scale must be positive"
            )));
        }
        let size = sprite_size(sprite);
        let half = size / 2.0;
        let inside = sprite.x - half >= 0.0
            && sprite.y - half >= 0.0
            && sprite.x + half <= width as f64
            && sprite.y + half <= height as f64;
        if !inside {
            return Err(Error::InvalidScene(format!(
                "face_sprites[{i}] at ({}, {}) with size {size} leaves the {width}x{height} frame",
                sprite.x, sprite.y
            )));
        }
        truths.push(draw_face(
            &mut canvas,
            width,
            height,
            &sprite.identity,
            [sprite.x, sprite.y],
            size,
            sprite.rotation_deg,
        ));
    }
    let image = GrayImage::new(width, height, quantize(&canvas))?;
    Ok((image, truths))
}

/// Nuisance parameters for one rendering of a face patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceVariation {
    pub rotation_deg: f64,
    pub dx: f64,
    pub dy: f64,
    pub scale: f64,
    pub brightness: f64,
    pub contrast: f64,
    pub noise_sigma: f64,
}

impl Default for FaceVariation {
    fn default() -> Self {
        Self {
            rotation_deg: 0.0,
            dx: 0.0,
            dy: 0.0,
            scale: 1.0,
            brightness: 0.0,
            contrast: 1.0,
            noise_sigma: 0.0,
        }
    }
}

impl FaceVariation {
    /// Random variation with the given overall strength (0 = none, 1 = strong).
    pub fn random(rng: &mut impl Rng, strength: f64) -> Self {
        let s = strength.max(0.0);
        let sym = |rng: &mut dyn rand::RngCore, r: f64| {
            if r == 0.0 {
                0.0
            } else {
                rng.random_range(-r..r)
            }
        };
        Self {
            rotation_deg: sym(rng, 8.0 * s),
            dx: sym(rng, 2.0 * s),
            dy: sym(rng, 2.0 * s),
            scale: 1.0 + sym(rng, 0.06 * s),
            brightness: sym(rng, 30.0 * s),
            contrast: 1.0 + sym(rng, 0.25 * s),
            noise_sigma: 12.0 * s,
        }
    }
}

/// A single face on a `size`×`size` patch of textured background, the face
/// box spanning roughly 80% of the patch.
pub fn render_face_patch(
    identity: &str,
    size: usize,
    variation: &FaceVariation,
    seed: u64,
) -> Result<(GrayImage, SpriteTruth)> {
    if size < 8 {
        return Err(Error::InvalidScene(format!(
            "face patch size {size} is too small"
        )));
    }
    let mut canvas = textured_background(size, size, seed);
    let center = [
        size as f64 / 2.0 + variation.dx,
        size as f64 / 2.0 + variation.dy,
    ];
    let face = size as f64 * 0.8 * variation.scale;
    let truth = draw_face(
        &mut canvas,
        size,
        size,
        identity,
        center,
        face,
        variation.rotation_deg,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    for v in canvas.iter_mut() {
        let mut out = variation.contrast * (*v - 128.0) + 128.0 + variation.brightness;
        if variation.noise_sigma > 0.0 {
            out += variation.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        *v = out;
    }
    let image = GrayImage::new(size, size, quantize(&canvas))?;
    Ok((image, truth))
}
