//! Stroke sweep: pull the tendon in fixed increments, photograph the mirror
//! holder at each step and compare the angle change against the model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::report::SweepMeasurement;
use super::{mean, rmse};
use crate::error::{Result, TagError};
use crate::image::{estimate_angle, render_synthetic_tag, PipelineConfig, RenderParams};
use crate::kinematics::{phi_from_stroke_with, Elongation};
use crate::params::TagParameters;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub step_mm: f64,
    pub max_mm: f64,
    pub trials: usize,
    pub seed: u64,
    /// Render and measure a frame per sample; otherwise only the model
    /// columns are filled.
    pub synthetic_images: bool,
    /// Per-frame deviation of the true holder angle from the model.
    pub angle_jitter_deg: f64,
    /// Gaussian intensity noise added to each frame.
    pub image_noise_sigma: f64,
    pub render: RenderParams,
    pub pipeline: PipelineConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            step_mm: 0.05,
            max_mm: 2.0,
            trials: 5,
            seed: 0,
            synthetic_images: true,
            angle_jitter_deg: 0.0,
            image_noise_sigma: 5.0,
            render: RenderParams::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

impl SweepConfig {
    /// Samples per trial, the rest frame included.
    pub fn samples_per_trial(&self) -> usize {
        (self.max_mm / self.step_mm - 1e-9).ceil() as usize
    }
}

/// One frame of one trial. Angle columns are changes from the trial's
/// first frame, in degrees; `None` where the value could not be produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub trial_id: usize,
    pub stroke_mm: f64,
    pub model_dtheta_deg: Option<f64>,
    pub model_dtheta_noelong_deg: Option<f64>,
    pub estimated_dtheta_deg: Option<f64>,
    pub error: Option<String>,
}

/// Trial-averaged sweep at one stroke.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummaryRow {
    pub stroke_mm: f64,
    pub model_dtheta_deg: Option<f64>,
    pub model_dtheta_noelong_deg: Option<f64>,
    pub mean_estimated_dtheta_deg: Option<f64>,
    pub trials: usize,
}

fn model_columns(stroke: f64, p: &TagParameters) -> (Result<f64>, Result<f64>) {
    (
        phi_from_stroke_with(stroke, p, Elongation::Included).map(f64::to_degrees),
        phi_from_stroke_with(stroke, p, Elongation::Ignored).map(f64::to_degrees),
    )
}

fn join_errors(errors: &[Option<String>]) -> Option<String> {
    let msgs: Vec<&str> = errors.iter().flatten().map(String::as_str).collect();
    (!msgs.is_empty()).then(|| msgs.join("; "))
}

pub fn run_stroke_sweep(p: &TagParameters, cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    if !(cfg.step_mm > 0.0 && cfg.step_mm.is_finite()) {
        return Err(TagError::param(
            "step_mm",
            format!("{} must be > 0", cfg.step_mm),
        ));
    }
    if !(cfg.max_mm > 0.0 && cfg.max_mm <= p.max_stroke_mm) {
        return Err(TagError::param(
            "max_mm",
            format!("{} must lie in (0, {}]", cfg.max_mm, p.max_stroke_mm),
        ));
    }
    if cfg.trials == 0 {
        return Err(TagError::param("trials", "at least one trial is required"));
    }
    let jitter = Normal::new(0.0, cfg.angle_jitter_deg)
        .map_err(|e| TagError::param("angle_jitter_deg", e.to_string()))?;
    if cfg.synthetic_images {
        cfg.pipeline.validate()?;
    }
    let n = cfg.samples_per_trial();

    let trials: Vec<Vec<SweepRecord>> = (1..=cfg.trials)
        .into_par_iter()
        .map(|trial_id| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial_id as u64);
            let mut raw = Vec::with_capacity(n);
            for k in 0..n {
                let stroke = k as f64 * cfg.step_mm;
                let (with, without) = model_columns(stroke, p);
                let offset = jitter.sample(&mut rng);
                let frame_seed: u64 = rng.random();
                let estimated = match (&with, cfg.synthetic_images) {
                    (Ok(phi_deg), true) => {
                        // the holder cannot swing below its rest stop
                        let true_phi = (phi_deg + offset).max(0.0).to_radians();
                        let params = cfg.render.with_noise(cfg.image_noise_sigma, frame_seed);
                        Some(
                            render_synthetic_tag(true_phi, &params)
                                .and_then(|img| estimate_angle(&img, &cfg.pipeline)),
                        )
                    }
                    (Err(_), true) => Some(Err(TagError::InvalidConfig(
                        "no model angle to render".into(),
                    ))),
                    (_, false) => None,
                };
                raw.push((stroke, with, without, estimated));
            }
            differentiate(trial_id, raw)
        })
        .collect();
    Ok(trials.into_iter().flatten().collect())
}

type RawSample = (f64, Result<f64>, Result<f64>, Option<Result<f64>>);

/// Converts absolute angles to changes from the first sample.
fn differentiate(trial_id: usize, raw: Vec<RawSample>) -> Vec<SweepRecord> {
    let base = |i: usize| -> Option<f64> {
        match raw.first() {
            Some((_, w, wo, e)) => match i {
                0 => w.as_ref().ok().copied(),
                1 => wo.as_ref().ok().copied(),
                _ => e.as_ref().and_then(|r| r.as_ref().ok().copied()),
            },
            None => None,
        }
    };
    let (b_with, b_without, b_est) = (base(0), base(1), base(2));
    raw.iter()
        .map(|(stroke, with, without, est)| {
            let err = |r: &Result<f64>| r.as_ref().err().map(|e| e.to_string());
            let mut errors = vec![err(with), err(without)];
            if let Some(r) = est {
                errors.push(err(r));
            }
            SweepRecord {
                trial_id,
                stroke_mm: *stroke,
                model_dtheta_deg: with.as_ref().ok().zip(b_with).map(|(v, b)| v - b),
                model_dtheta_noelong_deg: without.as_ref().ok().zip(b_without).map(|(v, b)| v - b),
                estimated_dtheta_deg: est
                    .as_ref()
                    .and_then(|r| r.as_ref().ok())
                    .zip(b_est)
                    .map(|(v, b)| v - b),
                error: join_errors(&errors),
            }
        })
        .collect()
}

/// Rebuilds sweep records from externally measured angles. Measured values
/// are re-baselined against each trial's smallest-stroke sample.
pub fn sweep_from_measurements(
    p: &TagParameters,
    measurements: &[SweepMeasurement],
) -> Vec<SweepRecord> {
    let mut trial_ids: Vec<usize> = measurements.iter().map(|m| m.trial_id).collect();
    trial_ids.sort_unstable();
    trial_ids.dedup();
    let mut out = Vec::with_capacity(measurements.len());
    for trial_id in trial_ids {
        let mut rows: Vec<&SweepMeasurement> = measurements
            .iter()
            .filter(|m| m.trial_id == trial_id)
            .collect();
        rows.sort_by(|a, b| a.stroke_mm.total_cmp(&b.stroke_mm));
        let raw = rows
            .iter()
            .map(|m| {
                let (with, without) = model_columns(m.stroke_mm, p);
                let est = Some(m.estimated_dtheta_deg.ok_or_else(|| {
                    TagError::Parse(format!(
                        "trial {trial_id}: missing measurement at {} mm",
                        m.stroke_mm
                    ))
                }));
                (m.stroke_mm, with, without, est)
            })
            .collect();
        out.extend(differentiate(trial_id, raw));
    }
    out
}

/// Averages the estimated angle change over trials at each stroke.
pub fn summarize_sweep(records: &[SweepRecord]) -> Vec<SweepSummaryRow> {
    let key = |s: f64| (s * 1e6).round() as i64;
    let mut keys: Vec<i64> = records.iter().map(|r| key(r.stroke_mm)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|k| {
            let at: Vec<&SweepRecord> = records.iter().filter(|r| key(r.stroke_mm) == k).collect();
            let est: Vec<f64> = at.iter().filter_map(|r| r.estimated_dtheta_deg).collect();
            SweepSummaryRow {
                stroke_mm: at[0].stroke_mm,
                model_dtheta_deg: at.iter().find_map(|r| r.model_dtheta_deg),
                model_dtheta_noelong_deg: at.iter().find_map(|r| r.model_dtheta_noelong_deg),
                mean_estimated_dtheta_deg: (!est.is_empty()).then(|| mean(&est)),
                trials: est.len(),
            }
        })
        .collect()
}

/// RMSE between the trial-averaged estimate and the model (with
/// elongation) over strokes where both exist.
pub fn sweep_rmse(records: &[SweepRecord]) -> Result<f64> {
    let (est, model): (Vec<f64>, Vec<f64>) = summarize_sweep(records)
        .iter()
        .filter_map(|r| r.mean_estimated_dtheta_deg.zip(r.model_dtheta_deg))
        .unzip();
    rmse(&est, &model)
}
