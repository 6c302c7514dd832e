//! Grayscale rasters and the mirror-angle estimation pipeline.
//!
//! The pipeline crops the frame to the mirror holder, binarizes it, runs
//! Canny, fits a line through the edge pixels and converts the slope to
//! an angle from horizontal.

mod canny;
mod fit;
mod pipeline;
mod pnm;
mod render;

use std::path::Path;

use crate::error::{Result, TagError};

pub use canny::{canny_edges, sobel_kernels, CannyConfig};
pub use fit::{angle_from_slope, fit_edge_line, EdgeLineFit};
pub use pipeline::{
    estimate_angle, estimate_angle_detailed, write_edges_csv, AngleEstimate, PipelineConfig,
};
pub use render::{render_synthetic_tag, RenderParams};

/// Intensity cut used to binarize frames: values above map to 255.
pub const BINARY_THRESHOLD: u8 = 125;

/// Row-major 8-bit raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        GrayImage {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(TagError::InvalidConfig(format!(
                "raster of {} bytes does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, v: u8) {
        self.data[row * self.width + col] = v;
    }

    pub fn crop(&self, rect: CropRect) -> Result<GrayImage> {
        if rect.width == 0
            || rect.height == 0
            || rect.x + rect.width > self.width
            || rect.y + rect.height > self.height
        {
            return Err(TagError::InvalidConfig(format!(
                "crop {rect:?} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(rect.width * rect.height);
        for row in rect.y..rect.y + rect.height {
            let start = row * self.width + rect.x;
            data.extend_from_slice(&self.data[start..start + rect.width]);
        }
        Ok(GrayImage {
            width: rect.width,
            height: rect.height,
            data,
        })
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| TagError::io(path, e))?;
        pnm::decode_p5(&bytes)
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm_bytes()).map_err(|e| TagError::io(path, e))
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        pnm::encode_p5(self)
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        pnm::decode_p5(bytes)
    }
}

/// `I > cut -> 255`, `I <= cut -> 0`.
pub fn threshold_binary(img: &GrayImage, cut: u8) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img
            .data
            .iter()
            .map(|&v| if v > cut { 255 } else { 0 })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn threshold_boundary() {
        let img = GrayImage::from_raw(4, 1, vec![0, 125, 126, 255]).unwrap();
        let out = threshold_binary(&img, BINARY_THRESHOLD);
        assert_eq!(out.data(), &[0, 0, 255, 255]);
        let black = GrayImage::new(5, 3, 0);
        assert_eq!(threshold_binary(&black, BINARY_THRESHOLD), black);
    }

    #[test]
    fn crop_extracts_window() {
        let data: Vec<u8> = (0..12).collect();
        let img = GrayImage::from_raw(4, 3, data).unwrap();
        let c = img
            .crop(CropRect {
                x: 1,
                y: 1,
                width: 2,
                height: 2,
            })
            .unwrap();
        assert_eq!(c.data(), &[5, 6, 9, 10]);
        assert!(img
            .crop(CropRect {
                x: 3,
                y: 0,
                width: 2,
                height: 1
            })
            .is_err());
    }

    #[test]
    fn raw_length_checked() {
        assert!(GrayImage::from_raw(3, 3, vec![0; 8]).is_err());
    }

    proptest! {
        #[test]
        fn threshold_idempotent_and_binary(data in prop::collection::vec(any::<u8>(), 64), cut in any::<u8>()) {
            let img = GrayImage::from_raw(8, 8, data).unwrap();
            let once = threshold_binary(&img, cut);
            prop_assert!(once.data().iter().all(|&v| v == 0 || v == 255));
            prop_assert_eq!(threshold_binary(&once, cut), once.clone());
            prop_assert_eq!(threshold_binary(&once, BINARY_THRESHOLD), threshold_binary(&img, cut));
        }
    }
}
