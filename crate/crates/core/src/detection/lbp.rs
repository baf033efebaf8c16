use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Neighbor offsets clockwise from the top-left; the first is the most
/// significant bit of the code.
const CLOCKWISE: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

/// 8-bit local binary pattern of the pixel at column `x`, row `y`.
///
/// Bit `7 - k` is set when neighbor `k` (clockwise from top-left) is at
/// least as bright as the center.
pub fn lbp_code(img: &GrayImage, x: usize, y: usize) -> Result<u8> {
    if x == 0 || y == 0 || x + 1 >= img.width() || y + 1 >= img.height() {
        return Err(Error::Bounds(format!(
            "pixel ({x}, {y}) lacks a full 3x3 neighborhood in a {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let center = img.get(x, y);
    let mut code = 0u8;
    for (k, (dx, dy)) in CLOCKWISE.iter().enumerate() {
        let n = img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
        if n >= center {
            code |= 1 << (7 - k);
        }
    }
    Ok(code)
}

/// Number of 0/1 transitions around the circular 8-bit pattern.
pub fn lbp_uniformity(code: u8) -> u32 {
    (code ^ code.rotate_left(1)).count_ones()
}

/// Codes for every interior pixel; border pixels hold no code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpCodeMap {
    width: usize,
    height: usize,
    codes: Vec<u8>,
}

impl LbpCodeMap {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let mut codes = vec![0u8; w * h];
        for y in 1..h.saturating_sub(1) {
            for x in 1..w.saturating_sub(1) {
                codes[y * w + x] = lbp_code(img, x, y).expect("interior pixel");
            }
        }
        Self {
            width: w,
            height: h,
            codes,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Result<u8> {
        if x == 0 || y == 0 || x + 1 >= self.width || y + 1 >= self.height {
            return Err(Error::Bounds(format!(
                "no LBP code at border pixel ({x}, {y})"
            )));
        }
        Ok(self.codes[y * self.width + x])
    }
}
