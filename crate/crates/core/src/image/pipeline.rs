use std::io::Write;

use super::{
    angle_from_slope, canny_edges, fit_edge_line, threshold_binary, CannyConfig, CropRect,
    EdgeLineFit, GrayImage, RenderParams, BINARY_THRESHOLD,
};
use crate::error::{Result, TagError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Chosen so that the holder's top edge is the only edge inside it.
    pub crop: CropRect,
    pub threshold: u8,
    pub canny: CannyConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            crop: RenderParams::default_crop(),
            threshold: BINARY_THRESHOLD,
            canny: CannyConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.crop.width == 0 || self.crop.height == 0 {
            return Err(TagError::InvalidConfig("crop rectangle is empty".into()));
        }
        self.canny.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleEstimate {
    pub angle_deg: f64,
    pub fit: EdgeLineFit,
    /// Edge pixels in crop coordinates, `(col, row)`.
    pub edges: Vec<(usize, usize)>,
}

/// Crop, binarize, detect edges, fit, convert slope to degrees.
pub fn estimate_angle(img: &GrayImage, cfg: &PipelineConfig) -> Result<f64> {
    estimate_angle_detailed(img, cfg).map(|e| e.angle_deg)
}

pub fn estimate_angle_detailed(img: &GrayImage, cfg: &PipelineConfig) -> Result<AngleEstimate> {
    cfg.validate()?;
    let cropped = img.crop(cfg.crop)?;
    let binary = threshold_binary(&cropped, cfg.threshold);
    let edges = canny_edges(&binary, &cfg.canny)?;
    if edges.is_empty() {
        return Err(TagError::NoEdges);
    }
    let points: Vec<(f64, f64)> = edges.iter().map(|&(c, r)| (c as f64, r as f64)).collect();
    let fit = fit_edge_line(&points)?;
    Ok(AngleEstimate {
        angle_deg: angle_from_slope(&fit),
        fit,
        edges,
    })
}

/// Writes `col,row` lines with a header.
pub fn write_edges_csv<W: Write>(out: W, edges: &[(usize, usize)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["col", "row"])?;
    for &(c, r) in edges {
        w.serialize((c, r))?;
    }
    w.flush().map_err(|e| TagError::io("<edges csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::render_synthetic_tag;

    fn estimate_at(deg: f64, params: &RenderParams) -> f64 {
        let img = render_synthetic_tag(deg.to_radians(), params).unwrap();
        estimate_angle(&img, &PipelineConfig::default()).unwrap()
    }

    #[test]
    fn rest_edge_is_one_row() {
        let img = render_synthetic_tag(0.0, &RenderParams::default()).unwrap();
        let est = estimate_angle_detailed(&img, &PipelineConfig::default()).unwrap();
        let row = est.edges[0].1;
        assert!(est.edges.iter().all(|&(_, r)| r == row));
        assert_eq!(est.edges.len(), PipelineConfig::default().crop.width);
        assert_eq!(est.angle_deg, 0.0);
    }

    #[test]
    fn step_edge_band() {
        let mut img = GrayImage::new(60, 40, 0);
        for r in 25..40 {
            for c in 0..60 {
                img.set(c, r, 255);
            }
        }
        let edges = canny_edges(&img, &CannyConfig::default()).unwrap();
        assert!(!edges.is_empty());
        assert!(edges.iter().all(|&(_, r)| (24..=25).contains(&r)));
    }

    #[test]
    fn clean_angles() {
        let p = RenderParams::default();
        for deg in [0.0, 10.0, 15.0, 20.0, 30.0, 35.0] {
            let est = estimate_at(deg, &p);
            assert!((est - deg).abs() <= 0.25, "{deg}: {est}");
        }
    }

    #[test]
    fn fifteen_degree_slope() {
        let img = render_synthetic_tag(15f64.to_radians(), &RenderParams::default()).unwrap();
        let est = estimate_angle_detailed(&img, &PipelineConfig::default()).unwrap();
        let want = 15f64.to_radians().tan();
        assert!(
            (est.fit.slope.abs() - want).abs() / want < 0.005,
            "{}",
            est.fit.slope
        );
    }

    #[test]
    fn ten_degree_edges_follow_top_edge() {
        let p = RenderParams::default();
        let img = render_synthetic_tag(10f64.to_radians(), &p).unwrap();
        let cfg = PipelineConfig::default();
        let est = estimate_angle_detailed(&img, &cfg).unwrap();
        // every edge pixel within two pixels of the analytic top edge
        let tan = 10f64.to_radians().tan();
        for &(c, r) in &est.edges {
            let x = (c + cfg.crop.x) as f64 + 0.5;
            let y = (r + cfg.crop.y) as f64 + 0.5;
            let edge_y = p.pivot.1 - (x - p.pivot.0) * tan;
            assert!((y - edge_y).abs() < 2.0, "({c},{r})");
        }
    }

    #[test]
    fn noisy_angle() {
        let p = RenderParams::default().with_noise(5.0, 9);
        let est = estimate_at(25.0, &p);
        assert!((est - 25.0).abs() <= 1.0, "{est}");
    }

    #[test]
    fn black_frame_has_no_edges() {
        let img = GrayImage::new(480, 480, 0);
        assert!(matches!(
            estimate_angle(&img, &PipelineConfig::default()),
            Err(TagError::NoEdges)
        ));
    }

    #[test]
    fn crop_outside_frame_rejected() {
        let img = GrayImage::new(100, 100, 0);
        assert!(matches!(
            estimate_angle(&img, &PipelineConfig::default()),
            Err(TagError::InvalidConfig(_))
        ));
    }

    #[test]
    fn edges_csv_layout() {
        let mut buf = Vec::new();
        write_edges_csv(&mut buf, &[(3, 4), (5, 6)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "col,row\n3,4\n5,6\n");
    }
}
