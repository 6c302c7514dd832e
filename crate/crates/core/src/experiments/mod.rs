//! Benchtop experiments: the stroke sweep with image-based angle
//! estimation, the laser steering trials, model calibration and the CSV
//! reports they produce.

mod calibrate;
mod report;
mod steering;
mod sweep;

pub use calibrate::{calibrate, CalibrationConfig, CalibrationIteration, CalibrationResult};
pub use report::{
    calibration_csv, read_steering_replay, read_sweep_replay, steering_csv, steering_summary_csv,
    sweep_csv, write_atomic, SteeringMeasurement, SweepMeasurement,
};
pub use steering::{
    run_laser_steering, steering_from_measurements, steering_rmse, SteeringConfig, SteeringRecord,
};
pub use sweep::{
    run_stroke_sweep, summarize_sweep, sweep_from_measurements, sweep_rmse, SweepConfig,
    SweepRecord, SweepSummaryRow,
};

use crate::error::{Result, TagError};

/// `sqrt(mean((a - b)^2))`.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(TagError::InvalidConfig(format!(
            "rmse needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(TagError::InsufficientData { needed: 1, got: 0 });
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((ss / a.len() as f64).sqrt())
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1); zero for a single value.
pub(crate) fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Signed error in percent; positive when `measured` overshoots.
pub fn percent_error(measured: f64, theoretical: f64) -> f64 {
    100.0 * (measured - theoretical) / theoretical
}
