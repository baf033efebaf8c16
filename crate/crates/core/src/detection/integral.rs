use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Summed-area table with a zero first row and column.
///
/// `at(x, y)` is the sum of all pixels strictly above and left of (x, y).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<i64>,
}

impl IntegralImage {
    /// Image width (the table is one wider).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> i64 {
        self.table[y * (self.width + 1) + x]
    }

    /// Sum over the `w`×`h` rectangle whose top-left pixel is (`x`, `y`).
    #[inline]
    pub fn rect_sum(&self, x: usize, y: usize, w: usize, h: usize) -> Result<i64> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::Bounds(format!(
                "rect ({x},{y},{w},{h}) outside {}x{} image",
                self.width, self.height
            )));
        }
        Ok(self.at(x + w, y + h) - self.at(x, y + h) - self.at(x + w, y) + self.at(x, y))
    }
}

pub fn integral_image(img: &GrayImage) -> IntegralImage {
    let (w, h) = (img.width(), img.height());
    let stride = w + 1;
    let mut table = vec![0i64; stride * (h + 1)];
    for y in 0..h {
        let mut row_sum = 0i64;
        for x in 0..w {
            row_sum += i64::from(img.get(x, y));
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
        }
    }
    IntegralImage {
        width: w,
        height: h,
        table,
    }
}

/// Free-function form of [`IntegralImage::rect_sum`].
pub fn rect_sum(ii: &IntegralImage, x: usize, y: usize, w: usize, h: usize) -> Result<i64> {
    ii.rect_sum(x, y, w, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_corner_is_area() {
        let ii = integral_image(&GrayImage::filled(4, 4, 1).unwrap());
        assert_eq!(ii.at(4, 4), 16);
        assert_eq!(ii.at(0, 3), 0);
        assert_eq!(ii.at(2, 0), 0);
        assert_eq!(rect_sum(&ii, 1, 1, 3, 2).unwrap(), 6);
    }

    #[test]
    fn single_pixel_and_full_frame() {
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 7 + y * 31) as u8).unwrap();
        let ii = integral_image(&img);
        assert_eq!(rect_sum(&ii, 3, 2, 1, 1).unwrap(), i64::from(img.get(3, 2)));
        let total: i64 = img.pixels().iter().map(|&p| i64::from(p)).sum();
        assert_eq!(rect_sum(&ii, 0, 0, 5, 3).unwrap(), total);
    }

    #[test]
    fn out_of_bounds_rect() {
        let ii = integral_image(&GrayImage::filled(4, 4, 1).unwrap());
        assert!(matches!(rect_sum(&ii, 2, 2, 3, 1), Err(Error::Bounds(_))));
    }
}
