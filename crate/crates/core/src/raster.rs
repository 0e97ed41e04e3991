//! 8-bit grayscale frames and the few raster operations the pipeline needs.

use crate::error::{Error, Result};

pub const MIN_SIDE: usize = 8;

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::invalid(format!(
                "image {width}x{height} smaller than {MIN_SIDE}x{MIN_SIDE}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Copy of the image shifted by whole pixels; uncovered area takes `fill`.
    pub fn translated(&self, dx: isize, dy: isize, fill: u8) -> GrayImage {
        let mut out = vec![fill; self.pixels.len()];
        for y in 0..self.height {
            let sy = y as isize - dy;
            if sy < 0 || sy >= self.height as isize {
                continue;
            }
            for x in 0..self.width {
                let sx = x as isize - dx;
                if sx >= 0 && sx < self.width as isize {
                    out[y * self.width + x] = self.get(sx as usize, sy as usize);
                }
            }
        }
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: out,
        }
    }

    /// Rotate clockwise (on screen, y pointing down) by `degrees` about the
    /// image centre. The canvas grows to hold the whole rotated frame and new
    /// area takes `fill`. Quarter turns are exact pixel permutations; other
    /// angles use nearest-neighbour sampling.
    pub fn rotated(&self, degrees: f64, fill: u8) -> GrayImage {
        let quarter = degrees.rem_euclid(360.0) / 90.0;
        if (quarter - quarter.round()).abs() < 1e-12 {
            return self.rotated_quarters(quarter.round() as usize % 4);
        }
        let (w, h) = (self.width as f64, self.height as f64);
        let (s, c) = degrees.to_radians().sin_cos();
        let out_w = (w * c.abs() + h * s.abs()).ceil() as usize;
        let out_h = (w * s.abs() + h * c.abs()).ceil() as usize;
        let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
        let (ox, oy) = ((out_w as f64 - 1.0) / 2.0, (out_h as f64 - 1.0) / 2.0);
        let mut out = vec![fill; out_w * out_h];
        for y in 0..out_h {
            let dy = y as f64 - oy;
            for x in 0..out_w {
                let dx = x as f64 - ox;
                // Inverse rotation back into the source frame.
                let sx = (c * dx + s * dy + cx).round();
                let sy = (-s * dx + c * dy + cy).round();
                if sx >= 0.0 && sy >= 0.0 && sx < w && sy < h {
                    out[y * out_w + x] = self.get(sx as usize, sy as usize);
                }
            }
        }
        GrayImage {
            width: out_w,
            height: out_h,
            pixels: out,
        }
    }

    fn rotated_quarters(&self, turns: usize) -> GrayImage {
        let (w, h) = (self.width, self.height);
        match turns {
            0 => self.clone(),
            2 => {
                let mut pixels = self.pixels.clone();
                pixels.reverse();
                GrayImage {
                    width: w,
                    height: h,
                    pixels,
                }
            }
            _ => {
                let mut pixels = vec![0; w * h];
                // New frame is h wide and w tall.
                for y in 0..h {
                    for x in 0..w {
                        let (nx, ny) = if turns == 1 {
                            (h - 1 - y, x)
                        } else {
                            (y, w - 1 - x)
                        };
                        pixels[ny * h + nx] = self.get(x, y);
                    }
                }
                GrayImage {
                    width: h,
                    height: w,
                    pixels,
                }
            }
        }
    }
}

/// Foreground mask produced by [`crate::signature::binarize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width * height {
            return Err(Error::invalid("mask size does not match dimensions"));
        }
        Ok(BinaryImage {
            width,
            height,
            mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::new(w, h, (0..w * h).map(|i| (i % 251) as u8).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(GrayImage::new(7, 8, vec![0; 56]).is_err());
        assert!(GrayImage::new(8, 8, vec![0; 63]).is_err());
    }

    #[test]
    fn quarter_turns_compose() {
        let img = ramp(12, 9);
        let r1 = img.rotated(90.0, 255);
        assert_eq!((r1.width(), r1.height()), (9, 12));
        // Top-left goes to top-right under a clockwise turn.
        assert_eq!(r1.get(8, 0), img.get(0, 0));
        let r4 = r1.rotated(90.0, 255).rotated(90.0, 255).rotated(90.0, 255);
        assert_eq!(r4, img);
        assert_eq!(img.rotated(180.0, 0), r1.rotated(90.0, 0));
        assert_eq!(img.rotated(-90.0, 0), img.rotated(270.0, 0));
    }

    #[test]
    fn arbitrary_rotation_grows_canvas() {
        let img = GrayImage::filled(40, 20, 7).unwrap();
        let r = img.rotated(45.0, 255);
        assert!(r.width() >= 42 && r.height() >= 42);
        assert_eq!(r.get(r.width() / 2, r.height() / 2), 7);
        assert_eq!(r.get(0, 0), 255);
    }

    #[test]
    fn translation_moves_pixels() {
        let img = ramp(10, 10);
        let t = img.translated(2, 3, 0);
        assert_eq!(t.get(2, 3), img.get(0, 0));
        assert_eq!(t.get(0, 0), 0);
    }
}
