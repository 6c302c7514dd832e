//! Fits the lever model `φ = asin((1 - c) t / l)` to measured
//! (stroke, angle) pairs.
//!
//! Stroke and angle alone only determine the ratio `(1 - c) / l`, so the
//! elongation coefficient is tied to its elastic estimate from the initial
//! parameters by one extra residual `(c - c0) / (c_scale)`. With a good
//! elastic estimate this recovers both parameters; otherwise the data moves
//! `l` and the prior holds `c`.
//!
//! The solver is Levenberg-Marquardt with Marquardt diagonal scaling.
//! A step is accepted only if it lowers the cost, so accepted iterates
//! decrease the residual monotonically.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Result, TagError};
use crate::params::TagParameters;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub max_iterations: usize,
    /// Converged once a proposed step is shorter than this.
    pub step_tolerance: f64,
    /// Angle residual (deg) charged per unit of `(c - c0) / c_scale`.
    pub prior_weight_deg: f64,
    pub initial_damping: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            max_iterations: 100,
            step_tolerance: 1e-10,
            prior_weight_deg: 1.0,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationIteration {
    pub iteration: usize,
    pub l_mm: f64,
    pub c: f64,
    pub residual_rmse_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub fulcrum_length_mm: f64,
    pub elongation_coefficient: f64,
    /// RMS of the angle residuals only, prior excluded.
    pub residual_rmse_deg: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the first proposed step.
    pub first_step_norm: f64,
    /// Iteration 0 is the starting point; one entry per accepted step after.
    pub history: Vec<CalibrationIteration>,
}

/// Beyond this the arcsin is continued linearly so that iterates which
/// overshoot the lever still get a finite, steep residual.
const ASIN_KNEE: f64 = 1.0 - 1e-6;

/// `(asin(a) in degrees, d/da)`, linearly extended past the knee.
fn asin_deg(a: f64) -> (f64, f64) {
    let k = 180.0 / std::f64::consts::PI;
    if a.abs() <= ASIN_KNEE {
        (a.asin() * k, k / (1.0 - a * a).sqrt())
    } else {
        let a0 = ASIN_KNEE.copysign(a);
        let slope = k / (1.0 - a0 * a0).sqrt();
        (a0.asin() * k + slope * (a - a0), slope)
    }
}

struct Problem<'a> {
    samples: &'a [(f64, f64)],
    c_prior: f64,
    c_scale: f64,
    prior_weight: f64,
}

impl Problem<'_> {
    /// Residuals (angle residuals first, prior last) and their Jacobian
    /// rows with respect to `(l, c)`.
    fn evaluate(&self, l: f64, c: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        let mut r = Vec::with_capacity(self.samples.len() + 1);
        let mut j = Vec::with_capacity(self.samples.len() + 1);
        for &(t, measured) in self.samples {
            let a = (1.0 - c) * t / l;
            let (f, df) = asin_deg(a);
            r.push(f - measured);
            j.push([df * (-(1.0 - c) * t / (l * l)), df * (-t / l)]);
        }
        r.push(self.prior_weight * (c - self.c_prior) / self.c_scale);
        j.push([0.0, self.prior_weight / self.c_scale]);
        (r, j)
    }

    fn cost(&self, l: f64, c: f64) -> f64 {
        self.evaluate(l, c).0.iter().map(|v| v * v).sum()
    }

    fn angle_rmse(&self, l: f64, c: f64) -> f64 {
        let (r, _) = self.evaluate(l, c);
        let n = self.samples.len();
        (r[..n].iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()
    }
}

/// Fits `(l, c)` to `(stroke_mm, angle_deg)` samples starting from `init`.
pub fn calibrate(
    samples: &[(f64, f64)],
    init: &TagParameters,
    cfg: &CalibrationConfig,
) -> Result<CalibrationResult> {
    if samples.len() < 4 {
        return Err(TagError::InsufficientData {
            needed: 4,
            got: samples.len(),
        });
    }
    if samples
        .iter()
        .any(|(t, a)| !t.is_finite() || !a.is_finite() || *t < 0.0)
    {
        return Err(TagError::param(
            "samples",
            "strokes must be finite and >= 0, angles finite",
        ));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (t, _)| {
            (lo.min(*t), hi.max(*t))
        });
    if hi - lo < 0.5 {
        return Err(TagError::param(
            "samples",
            format!("strokes span {:.3} mm, need at least 0.5 mm", hi - lo),
        ));
    }
    let c0 = init.raw_elongation_coefficient();
    if !(0.0..1.0).contains(&c0) || init.fulcrum_length_mm.is_nan() || init.fulcrum_length_mm <= 0.0
    {
        return Err(TagError::param(
            "init",
            "initial parameters outside the model domain",
        ));
    }
    let problem = Problem {
        samples,
        c_prior: c0,
        c_scale: 0.1 * c0.max(1e-3),
        prior_weight: cfg.prior_weight_deg,
    };

    let (mut l, mut c) = (init.fulcrum_length_mm, c0);
    let mut cost = problem.cost(l, c);
    let mut lambda = cfg.initial_damping;
    let mut history = vec![CalibrationIteration {
        iteration: 0,
        l_mm: l,
        c,
        residual_rmse_deg: problem.angle_rmse(l, c),
    }];
    let mut first_step_norm = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let (r, jac) = problem.evaluate(l, c);
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for (ri, ji) in r.iter().zip(&jac) {
            let row = Vector2::new(ji[0], ji[1]);
            jtj += row * row.transpose();
            jtr += row * *ri;
        }
        let diag = Matrix2::from_diagonal(&jtj.diagonal());
        let damped = jtj + diag * lambda;
        let Some(step) = damped.lu().solve(&(-jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let norm = step.norm();
        first_step_norm.get_or_insert(norm);
        if norm < cfg.step_tolerance {
            converged = true;
            break;
        }
        let (nl, nc) = (l + step[0], c + step[1]);
        let new_cost = if nl > 0.0 && (0.0..1.0).contains(&nc) {
            problem.cost(nl, nc)
        } else {
            f64::INFINITY
        };
        if new_cost < cost {
            l = nl;
            c = nc;
            cost = new_cost;
            lambda = (lambda / 10.0).max(1e-12);
            history.push(CalibrationIteration {
                iteration: iterations,
                l_mm: l,
                c,
                residual_rmse_deg: problem.angle_rmse(l, c),
            });
        } else {
            lambda *= 10.0;
        }
    }

    Ok(CalibrationResult {
        fulcrum_length_mm: l,
        elongation_coefficient: c,
        residual_rmse_deg: problem.angle_rmse(l, c),
        iterations,
        converged,
        first_step_norm: first_step_norm.unwrap_or(0.0),
        history,
    })
}
