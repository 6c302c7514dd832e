use crate::error::{Result, TagError};

/// Least-squares line `row = slope * col + intercept` through edge pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeLineFit {
    /// `d row / d col` in image coordinates (rows grow downwards).
    pub slope: f64,
    /// Row at column 0. For a vertical fit this holds the mean column instead.
    pub intercept: f64,
    pub inlier_count: usize,
    /// RMS of the row residuals, or of the column spread for a vertical fit.
    pub fit_residual_rms: f64,
    pub degenerate_vertical: bool,
}

/// Column variance below which the fit is reported as vertical.
const VERTICAL_VARIANCE: f64 = 1e-12;

/// Ordinary least squares of row on column over `(col, row)` points.
pub fn fit_edge_line(points: &[(f64, f64)]) -> Result<EdgeLineFit> {
    let distinct = {
        let mut p: Vec<(u64, u64)> = points
            .iter()
            .map(|(x, y)| (x.to_bits(), y.to_bits()))
            .collect();
        p.sort_unstable();
        p.dedup();
        p.len()
    };
    if distinct < 2 {
        return Err(TagError::InsufficientData {
            needed: 2,
            got: distinct,
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    if sxx / n < VERTICAL_VARIANCE {
        return Ok(EdgeLineFit {
            slope: f64::INFINITY,
            intercept: mean_x,
            inlier_count: points.len(),
            fit_residual_rms: 0.0,
            degenerate_vertical: true,
        });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Ok(EdgeLineFit {
        slope,
        intercept,
        inlier_count: points.len(),
        fit_residual_rms: (ss_res / n).sqrt(),
        degenerate_vertical: false,
    })
}

/// Edge angle from horizontal in degrees, `90 - atan(|1/m|)`.
pub fn angle_from_slope(fit: &EdgeLineFit) -> f64 {
    if fit.degenerate_vertical {
        return 90.0;
    }
    90.0 - (1.0 / fit.slope).abs().atan().to_degrees()
}
