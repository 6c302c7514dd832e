//! Laser steering trials: rotate the mirror to fixed angles and measure
//! how far the spot travels on a surface `v2` away.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::report::SteeringMeasurement;
use super::{mean, percent_error, rmse, sample_std};
use crate::error::{Result, TagError};
use crate::kinematics::delta_x;
use crate::params::LaserGeometry;

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringConfig {
    /// Commanded mirror rotations.
    pub angles_deg: Vec<f64>,
    pub trials: usize,
    /// Standard deviation of the simulated spot measurement.
    pub noise_sigma_mm: f64,
    pub seed: u64,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        SteeringConfig {
            angles_deg: vec![10.0, 20.0, 30.0],
            trials: 5,
            noise_sigma_mm: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringRecord {
    pub phi_deg: f64,
    pub theoretical_dx_mm: f64,
    /// One entry per trial, in trial order.
    pub measured_dx_mm: Vec<f64>,
    pub mean_dx_mm: f64,
    pub std_dx_mm: f64,
    pub percent_error: f64,
}

impl SteeringRecord {
    fn new(phi_deg: f64, theoretical_dx_mm: f64, measured_dx_mm: Vec<f64>) -> Self {
        let mean_dx_mm = mean(&measured_dx_mm);
        SteeringRecord {
            phi_deg,
            theoretical_dx_mm,
            std_dx_mm: sample_std(&measured_dx_mm),
            percent_error: percent_error(mean_dx_mm, theoretical_dx_mm),
            mean_dx_mm,
            measured_dx_mm,
        }
    }
}

fn theoretical(phi_deg: f64, g: &LaserGeometry) -> Result<f64> {
    if !(phi_deg > 0.0 && phi_deg < 45.0) {
        return Err(TagError::param(
            "angles_deg",
            format!("{phi_deg} must lie in (0, 45)"),
        ));
    }
    delta_x(phi_deg.to_radians(), g)
}

/// Simulated measurements are the model displacement plus seeded Gaussian
/// noise; each angle draws from its own stream.
pub fn run_laser_steering(g: &LaserGeometry, cfg: &SteeringConfig) -> Result<Vec<SteeringRecord>> {
    if cfg.trials == 0 {
        return Err(TagError::param("trials", "at least one trial is required"));
    }
    let noise = Normal::new(0.0, cfg.noise_sigma_mm)
        .map_err(|e| TagError::param("noise_sigma_mm", e.to_string()))?;
    cfg.angles_deg
        .iter()
        .enumerate()
        .map(|(i, &phi_deg)| {
            let dx = theoretical(phi_deg, g)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let measured = (0..cfg.trials)
                .map(|_| dx + noise.sample(&mut rng))
                .collect();
            Ok(SteeringRecord::new(phi_deg, dx, measured))
        })
        .collect()
}

/// Groups externally measured displacements by angle (ascending) and
/// computes the same statistics as a simulated run.
pub fn steering_from_measurements(
    g: &LaserGeometry,
    measurements: &[SteeringMeasurement],
) -> Result<Vec<SteeringRecord>> {
    let mut angles: Vec<f64> = measurements.iter().map(|m| m.phi_deg).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    angles
        .into_iter()
        .map(|phi_deg| {
            let mut rows: Vec<&SteeringMeasurement> = measurements
                .iter()
                .filter(|m| m.phi_deg == phi_deg)
                .collect();
            rows.sort_by_key(|m| m.trial_id);
            let measured = rows.iter().map(|m| m.measured_dx_mm).collect();
            Ok(SteeringRecord::new(
                phi_deg,
                theoretical(phi_deg, g)?,
                measured,
            ))
        })
        .collect()
}

/// RMSE between mean measured and theoretical displacement.
pub fn steering_rmse(records: &[SteeringRecord]) -> Result<f64> {
    let means: Vec<f64> = records.iter().map(|r| r.mean_dx_mm).collect();
    let theory: Vec<f64> = records.iter().map(|r| r.theoretical_dx_mm).collect();
    rmse(&means, &theory)
}
