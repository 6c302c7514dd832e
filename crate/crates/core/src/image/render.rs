//! Synthetic stand-in for a benchtop photograph: a bright mirror-holder
//! rectangle on black, rotated about its pivot corner.

use std::f64::consts::FRAC_PI_4;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{CropRect, GrayImage};
use crate::error::{Result, TagError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderParams {
    pub width: usize,
    pub height: usize,
    /// Pivot in pixel-corner coordinates `(x, y)`, y down. The holder's
    /// top-left corner sits here and the top edge is horizontal at rest.
    pub pivot: (f64, f64),
    pub holder_width: f64,
    pub holder_height: f64,
    /// Additive Gaussian intensity noise; 0 renders a clean frame.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            width: 480,
            height: 480,
            pivot: (60.0, 260.0),
            holder_width: 320.0,
            holder_height: 200.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl RenderParams {
    /// Window that sees only the top edge for every rotation in
    /// `[0, 45)` deg with the default geometry.
    pub fn default_crop() -> CropRect {
        CropRect {
            x: 110,
            y: 60,
            width: 140,
            height: 240,
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    /// Holder corners for rotation `phi`: pivot, top-right, bottom-right,
    /// bottom-left. Positive `phi` lifts the free end (towards row 0).
    pub fn corners(&self, phi: f64) -> [(f64, f64); 4] {
        let (s, c) = phi.sin_cos();
        let u = (c, -s);
        let v = (s, c);
        let (px, py) = self.pivot;
        let (w, h) = (self.holder_width, self.holder_height);
        [
            (px, py),
            (px + w * u.0, py + w * u.1),
            (px + w * u.0 + h * v.0, py + w * u.1 + h * v.1),
            (px + h * v.0, py + h * v.1),
        ]
    }
}

/// Renders the holder at rotation `phi` (rad, `[0, 45)` deg).
pub fn render_synthetic_tag(phi: f64, params: &RenderParams) -> Result<GrayImage> {
    if !phi.is_finite() || !(0.0..FRAC_PI_4).contains(&phi) {
        return Err(TagError::param(
            "phi",
            format!(
                "{:.4} deg outside the renderable range [0, 45)",
                phi.to_degrees()
            ),
        ));
    }
    if params.width == 0 || params.height == 0 {
        return Err(TagError::InvalidConfig(
            "image dimensions must be positive".into(),
        ));
    }
    if !(params.holder_width > 0.0 && params.holder_height > 0.0) {
        return Err(TagError::InvalidConfig(
            "holder dimensions must be positive".into(),
        ));
    }
    if !(params.noise_sigma >= 0.0 && params.noise_sigma.is_finite()) {
        return Err(TagError::InvalidConfig(format!(
            "noise sigma {} must be >= 0",
            params.noise_sigma
        )));
    }
    let corners = params.corners(phi);
    let (w, h) = (params.width as f64, params.height as f64);
    if corners
        .iter()
        .any(|&(x, y)| !(0.0..=w).contains(&x) || !(0.0..=h).contains(&y))
    {
        return Err(TagError::InvalidConfig(format!(
            "holder at {:.3} deg leaves the {}x{} frame",
            phi.to_degrees(),
            params.width,
            params.height
        )));
    }

    let mut img = GrayImage::new(params.width, params.height, 0);
    let min_x = corners
        .iter()
        .map(|c| c.0)
        .fold(f64::INFINITY, f64::min)
        .floor() as usize;
    let max_x = corners.iter().map(|c| c.0).fold(0.0, f64::max).ceil() as usize;
    let min_y = corners
        .iter()
        .map(|c| c.1)
        .fold(f64::INFINITY, f64::min)
        .floor() as usize;
    let max_y = corners.iter().map(|c| c.1).fold(0.0, f64::max).ceil() as usize;
    for row in min_y..max_y.min(params.height) {
        for col in min_x..max_x.min(params.width) {
            if inside_convex(&corners, col as f64 + 0.5, row as f64 + 0.5) {
                img.set(col, row, 255);
            }
        }
    }

    if params.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let normal = Normal::new(0.0, params.noise_sigma)
            .map_err(|e| TagError::InvalidConfig(e.to_string()))?;
        for row in 0..params.height {
            for col in 0..params.width {
                let v = f64::from(img.get(col, row)) + normal.sample(&mut rng);
                img.set(col, row, v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(img)
}

/// Pixel-centre test against a convex polygon with corners in a consistent
/// winding; points on an edge count as inside.
fn inside_convex(poly: &[(f64, f64); 4], x: f64, y: f64) -> bool {
    let mut sign = 0.0f64;
    for i in 0..4 {
        let (ax, ay) = poly[i];
        let (bx, by) = poly[(i + 1) % 4];
        let cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
        if cross != 0.0 {
            if sign == 0.0 {
                sign = cross.signum();
            } else if cross.signum() != sign {
                return false;
            }
        }
    }
    true
}
