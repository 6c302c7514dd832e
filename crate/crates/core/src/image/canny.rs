//! Canny edge detector.
//!
//! Stages: optional Gaussian pre-blur, separable Sobel gradient with the
//! configured aperture, L2 magnitude, non-maximum suppression along the
//! quantized gradient direction, and 8-connected double-threshold
//! hysteresis. Borders are replicated.
//!
//! Kernels are unnormalized (the aperture-7 Sobel smoothing taps sum to
//! 64), so the thresholds are in the same units as OpenCV's `Canny` on an
//! 8-bit image. NMS keeps a pixel whose magnitude is strictly greater than
//! the neighbour behind it and at least the neighbour ahead of it, which
//! makes plateaus of two equal pixels resolve to the first one.

use super::GrayImage;
use crate::error::{Result, TagError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyConfig {
    pub low: f64,
    pub high: f64,
    /// Sobel kernel size, odd and at least 3.
    pub aperture: usize,
    /// Pre-blur standard deviation in pixels; 0 disables it.
    pub blur_sigma: f64,
}

impl Default for CannyConfig {
    fn default() -> Self {
        CannyConfig {
            low: 100.0,
            high: 150.0,
            aperture: 7,
            blur_sigma: 1.0,
        }
    }
}

impl CannyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.low > 0.0 && self.low < self.high && self.high.is_finite()) {
            return Err(TagError::InvalidConfig(format!(
                "canny thresholds must satisfy 0 < low < high, got {} / {}",
                self.low, self.high
            )));
        }
        if self.aperture < 3 || self.aperture.is_multiple_of(2) || self.aperture > 31 {
            return Err(TagError::InvalidConfig(format!(
                "canny aperture must be odd in [3, 31], got {}",
                self.aperture
            )));
        }
        if !(self.blur_sigma >= 0.0 && self.blur_sigma.is_finite()) {
            return Err(TagError::InvalidConfig(format!(
                "blur sigma {} must be >= 0",
                self.blur_sigma
            )));
        }
        Ok(())
    }
}

fn binomial_row(order: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..order {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// `(derivative, smoothing)` taps for an odd aperture `k`: smoothing is the
/// binomial row of order `k - 1`, the derivative is the order `k - 3` row
/// convolved with `[-1, 0, 1]`.
pub fn sobel_kernels(aperture: usize) -> (Vec<f64>, Vec<f64>) {
    let smooth = binomial_row(aperture - 1);
    let base = binomial_row(aperture - 3);
    let mut deriv = vec![0.0; aperture];
    for (i, b) in base.iter().enumerate() {
        deriv[i] -= b;
        deriv[i + 2] += b;
    }
    (deriv, smooth)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Correlates rows with `kx` then columns with `ky`.
fn separable(src: &[f64], w: usize, h: usize, kx: &[f64], ky: &[f64]) -> Vec<f64> {
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        for c in 0..w {
            let mut acc = 0.0;
            for (j, k) in kx.iter().enumerate() {
                acc += k * row[clamp_index(c as isize + j as isize - rx, w)];
            }
            tmp[r * w + c] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (j, k) in ky.iter().enumerate() {
                acc += k * tmp[clamp_index(r as isize + j as isize - ry, h) * w + c];
            }
            out[r * w + c] = acc;
        }
    }
    out
}

/// Returns retained edge pixels as `(col, row)` in raster order.
pub fn canny_edges(img: &GrayImage, cfg: &CannyConfig) -> Result<Vec<(usize, usize)>> {
    cfg.validate()?;
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return Ok(Vec::new());
    }
    let mut src: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
    if cfg.blur_sigma > 0.0 {
        let g = gaussian_kernel(cfg.blur_sigma);
        src = separable(&src, w, h, &g, &g);
    }
    let (deriv, smooth) = sobel_kernels(cfg.aperture);
    let gx = separable(&src, w, h, &deriv, &smooth);
    let gy = separable(&src, w, h, &smooth, &deriv);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(x, y)| x.hypot(*y)).collect();

    // 0: none, 1: weak, 2: strong
    let mut class = vec![0u8; w * h];
    let at = |c: isize, r: isize| -> f64 {
        if c < 0 || r < 0 || c >= w as isize || r >= h as isize {
            0.0
        } else {
            mag[r as usize * w + c as usize]
        }
    };
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let m = mag[i];
            if m <= cfg.low {
                continue;
            }
            let (dc, dr) = direction_step(gx[i], gy[i]);
            let (ci, ri) = (c as isize, r as isize);
            let behind = at(ci - dc, ri - dr);
            let ahead = at(ci + dc, ri + dr);
            if m > behind && m >= ahead {
                class[i] = if m > cfg.high { 2 } else { 1 };
            }
        }
    }

    let keep = hysteresis(&class, w, h);
    Ok(keep
        .iter()
        .enumerate()
        .filter(|(_, &k)| k)
        .map(|(i, _)| (i % w, i / w))
        .collect())
}

/// Keeps strong pixels (2) and weak pixels (1) 8-connected to a strong one.
fn hysteresis(class: &[u8], w: usize, h: usize) -> Vec<bool> {
    let mut stack: Vec<usize> = (0..w * h).filter(|&i| class[i] == 2).collect();
    let mut keep = vec![false; w * h];
    for &i in &stack {
        keep[i] = true;
    }
    while let Some(i) = stack.pop() {
        let (c, r) = ((i % w) as isize, (i / w) as isize);
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (nc, nr) = (c + dc, r + dr);
                if nc < 0 || nr < 0 || nc >= w as isize || nr >= h as isize {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if class[j] == 1 && !keep[j] {
                    keep[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    keep
}

/// Pixel step along the gradient, quantized to 0/45/90/135 degrees.
/// Rows grow downwards.
fn direction_step(gx: f64, gy: f64) -> (isize, isize) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (1, 0)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobel_taps() {
        let (d, s) = sobel_kernels(3);
        assert_eq!(d, vec![-1.0, 0.0, 1.0]);
        assert_eq!(s, vec![1.0, 2.0, 1.0]);
        let (d, s) = sobel_kernels(7);
        assert_eq!(d, vec![-1.0, -4.0, -5.0, 0.0, 5.0, 4.0, 1.0]);
        assert_eq!(s, vec![1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(CannyConfig::default().validate().is_ok());
        let bad = [
            CannyConfig {
                low: 150.0,
                high: 100.0,
                ..Default::default()
            },
            CannyConfig {
                low: 0.0,
                ..Default::default()
            },
            CannyConfig {
                aperture: 4,
                ..Default::default()
            },
            CannyConfig {
                aperture: 1,
                ..Default::default()
            },
            CannyConfig {
                blur_sigma: -1.0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn uniform_image_has_no_edges() {
        for v in [0, 90, 255] {
            let img = GrayImage::new(40, 30, v);
            assert!(canny_edges(&img, &CannyConfig::default())
                .unwrap()
                .is_empty());
        }
    }

    fn step_image(w: usize, h: usize, step_row: usize) -> GrayImage {
        let mut img = GrayImage::new(w, h, 0);
        for r in step_row..h {
            for c in 0..w {
                img.set(c, r, 255);
            }
        }
        img
    }

    #[test]
    fn horizontal_step_yields_single_band() {
        for sigma in [0.0, 1.0, 2.0] {
            let cfg = CannyConfig {
                blur_sigma: sigma,
                ..Default::default()
            };
            let edges = canny_edges(&step_image(50, 40, 20), &cfg).unwrap();
            assert_eq!(edges.len(), 50, "sigma {sigma}");
            assert!(edges.iter().all(|&(_, r)| r == 19 || r == 20));
            let first = edges[0].1;
            assert!(edges.iter().all(|&(_, r)| r == first));
        }
    }

    #[test]
    fn vertical_step_yields_single_column() {
        let mut img = GrayImage::new(40, 30, 0);
        for r in 0..30 {
            for c in 17..40 {
                img.set(c, r, 200);
            }
        }
        let edges = canny_edges(&img, &CannyConfig::default()).unwrap();
        assert_eq!(edges.len(), 30);
        assert!(edges.iter().all(|&(c, _)| c == 16 || c == 17));
    }

    #[test]
    fn weak_isolated_response_dropped() {
        // A faint step sits between the thresholds everywhere, so nothing
        // is seeded as strong and hysteresis keeps nothing.
        let cfg = CannyConfig {
            aperture: 3,
            blur_sigma: 0.0,
            low: 10.0,
            high: 1e9,
        };
        let mut img = GrayImage::new(20, 20, 0);
        for r in 10..20 {
            for c in 0..20 {
                img.set(c, r, 10);
            }
        }
        assert!(canny_edges(&img, &cfg).unwrap().is_empty());
    }

    #[test]
    fn hysteresis_follows_weak_chains_from_strong_seeds() {
        #[rustfmt::skip]
        let class = [
            1, 1, 0, 0, 0, 1,
            0, 0, 1, 0, 0, 0,
            0, 0, 0, 2, 0, 1,
            0, 0, 0, 0, 0, 1,
        ];
        let keep = hysteresis(&class, 6, 4);
        #[rustfmt::skip]
        let want = [
            true,  true,  false, false, false, false,
            false, false, true,  false, false, false,
            false, false, false, true,  false, false,
            false, false, false, false, false, false,
        ];
        assert_eq!(keep, want);
    }
}
