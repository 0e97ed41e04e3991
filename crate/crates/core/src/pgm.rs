//! Binary PGM (P5) reading and writing, plus the frame loader.
//!
//! Only 8-bit images (maxval <= 255) are accepted. Samples are rescaled to
//! 0..=255 when maxval is below 255. Header comments (`#` to end of line)
//! are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse {
        what: "pgm",
        line: 0,
        msg: msg.into(),
    }
}

struct Header<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, name: &str) -> Result<usize> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(parse_err(format!("expected {name}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(format!("{name} out of range")))
    }
}

/// Decode a P5 byte buffer.
pub fn decode_pgm(data: &[u8]) -> Result<GrayImage> {
    if data.len() < 2 || &data[..2] != b"P5" {
        return Err(parse_err("missing P5 magic"));
    }
    let mut h = Header { data, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(parse_err(format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if h.pos >= data.len() || !data[h.pos].is_ascii_whitespace() {
        return Err(parse_err("missing raster separator"));
    }
    let start = h.pos + 1;
    let len = width
        .checked_mul(height)
        .ok_or_else(|| parse_err("dimensions overflow"))?;
    let raster = data
        .get(start..start + len)
        .ok_or_else(|| parse_err(format!("truncated raster: need {len} bytes")))?;
    let pixels = if maxval == 255 {
        raster.to_vec()
    } else {
        raster
            .iter()
            .map(|&v| {
                ((v.min(maxval as u8) as u32 * 255 + maxval as u32 / 2) / maxval as u32) as u8
            })
            .collect()
    };
    GrayImage::new(width, height, pixels)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_pgm(img))?;
    Ok(())
}

/// Decode a frame from memory, dispatching on the magic bytes. PNG needs the
/// `png` feature.
pub fn decode_frame(data: &[u8]) -> Result<GrayImage> {
    const PNG_MAGIC: &[u8] = b"\x89PNG";
    if data.starts_with(b"P5") {
        decode_pgm(data)
    } else if data.starts_with(PNG_MAGIC) {
        decode_png(data)
    } else {
        Err(parse_err("unrecognised image format (expected P5 PGM)"))
    }
}

#[cfg(feature = "png")]
fn decode_png(data: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(data, image::ImageFormat::Png)
        .map_err(|e| parse_err(e.to_string()))?
        .into_luma8();
    let (w, h) = img.dimensions();
    GrayImage::new(w as usize, h as usize, img.into_raw())
}

#[cfg(not(feature = "png"))]
fn decode_png(_data: &[u8]) -> Result<GrayImage> {
    Err(parse_err(
        "PNG support not compiled in (enable the `png` feature)",
    ))
}

pub fn load_frame(path: &Path) -> Result<GrayImage> {
    decode_frame(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_with_comments() {
        let mut data = b"P5\n# made by hand\n8 8\n# another\n255\n".to_vec();
        data.extend((0..64).map(|i| i as u8));
        let img = decode_pgm(&data).unwrap();
        assert_eq!((img.width(), img.height()), (8, 8));
        assert_eq!(img.get(7, 7), 63);
    }

    #[test]
    fn encode_decode_round_trip() {
        let img = GrayImage::new(9, 8, (0..72).map(|i| (i * 3) as u8).collect()).unwrap();
        assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn low_maxval_rescales() {
        let mut data = b"P5 8 8 1\n".to_vec();
        data.extend(std::iter::repeat_n(1u8, 32));
        data.extend(std::iter::repeat_n(0u8, 32));
        let img = decode_pgm(&data).unwrap();
        assert_eq!(img.get(0, 0), 255);
        assert_eq!(img.get(0, 7), 0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode_pgm(b"P2 8 8 255\n").is_err());
        assert!(decode_pgm(b"P5 8 8 255\n\x00\x01").is_err());
        assert!(decode_pgm(b"P5 8 8 65535\n").is_err());
        assert!(decode_pgm(b"P5 8\n").is_err());
        assert!(decode_frame(b"GIF89a").is_err());
    }
}
