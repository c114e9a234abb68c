//! RGB8 raster buffer with PPM (P6) and PNG output.
//!
//! PPM is the canonical byte-determinism target: the encoding is a fixed
//! header plus the raw pixel payload, so identical images are identical
//! files. PNG goes through the `image` crate and is offered for
//! convenience.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major RGB8 image with the origin at the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("image dimensions must be >= 1"));
        }
        let mut pixels = vec![0u8; width * height * 3];
        for px in pixels.chunks_exact_mut(3) {
            px.copy_from_slice(&color);
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn set(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let at = (y * self.width + x) * 3;
        self.pixels[at..at + 3].copy_from_slice(&color);
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let at = (y * self.width + x) * 3;
        [self.pixels[at], self.pixels[at + 1], self.pixels[at + 2]]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let header = format!("P6\n{} {}\n255\n", self.width, self.height);
        let mut bytes = Vec::with_capacity(header.len() + self.pixels.len());
        bytes.extend_from_slice(header.as_bytes());
        bytes.extend_from_slice(&self.pixels);
        bytes
    }

    /// Write the image, choosing the encoding from the file extension:
    /// `.ppm` (mandatory path) or `.png`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("ppm") => {
                fs::write(path, self.to_ppm_bytes()).map_err(|e| Error::io(path, e))
            }
            Some("png") => image::save_buffer(
                path,
                &self.pixels,
                self.width as u32,
                self.height as u32,
                image::ColorType::Rgb8,
            )
            .map_err(|e| Error::format(path, format!("png encoding failed: {e}"))),
            _ => Err(Error::validation(format!(
                "unsupported image extension (use .ppm or .png): {}",
                path.display()
            ))),
        }
    }
}
