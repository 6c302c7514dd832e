//! Stroke to mirror angle, mirror angle to laser endpoint, and inverses.
//!
//! The lever model: pulling the tendon by `t_s` compresses the return
//! springs by `l sin φ` and stretches the wire by `c t_s`, so
//! `φ = asin((1 - c) t_s / l)`. The reflected beam turns by twice the
//! mirror rotation and lands on a surface `v2` away, giving the endpoint
//! `(v1 - v2 tan 2φ, v2, 0)` in the joint-tip frame.
//!
//! Increasing `φ` moves the endpoint towards `-x`; [`delta_x`] reports
//! the unsigned displacement.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{Matrix4, Vector3};

use crate::error::{Result, TagError};
use crate::params::{LaserGeometry, TagParameters};
use crate::transform::HomogeneousTransform;

/// Mirror pose for a given stroke.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorState {
    pub stroke_mm: f64,
    /// Rotation away from the rest stop.
    pub phi_rad: f64,
    /// `rest_incident + phi_rad`.
    pub incident_angle_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// End of the continuum joint.
    Tip,
    /// Robot base, reached through `LaserGeometry::base_transform`.
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserEndpoint {
    pub position_mm: Vector3<f64>,
    /// Deflection of the reflected beam.
    pub theta1_rad: f64,
    pub frame: Frame,
}

/// Whether the tendon stretch term participates in the lever model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elongation {
    Included,
    Ignored,
}

/// Fraction of the stroke lost to wire stretch under the two parallel
/// springs: `c = 2 K_s L / (E π r²)`.
pub fn elongation_coefficient(p: &TagParameters) -> Result<f64> {
    let c = p.raw_elongation_coefficient();
    if !c.is_finite() || c < 0.0 {
        return Err(TagError::param(
            "spring_constant_n_per_mm",
            format!("elongation coefficient {c} is not a non-negative number"),
        ));
    }
    if c >= 1.0 {
        return Err(TagError::CompliantWire(c));
    }
    Ok(c)
}

fn check_stroke(t_s: f64, p: &TagParameters) -> Result<()> {
    if t_s.is_finite() && (0.0..=p.max_stroke_mm).contains(&t_s) {
        Ok(())
    } else {
        Err(TagError::StrokeOutOfRange {
            stroke_mm: t_s,
            max_mm: p.max_stroke_mm,
        })
    }
}

/// Mirror rotation for tendon stroke `t_s` (mm).
pub fn phi_from_stroke(t_s: f64, p: &TagParameters) -> Result<f64> {
    phi_from_stroke_with(t_s, p, Elongation::Included)
}

pub fn phi_from_stroke_with(t_s: f64, p: &TagParameters, elongation: Elongation) -> Result<f64> {
    check_stroke(t_s, p)?;
    let c = match elongation {
        Elongation::Included => elongation_coefficient(p)?,
        Elongation::Ignored => 0.0,
    };
    let argument = (1.0 - c) * t_s / p.fulcrum_length_mm;
    if argument > 1.0 {
        return Err(TagError::Unreachable { argument });
    }
    Ok(argument.asin())
}

/// Stroke needed to reach mirror rotation `phi` (rad).
pub fn stroke_from_phi(phi: f64, p: &TagParameters) -> Result<f64> {
    if !phi.is_finite() || !(0.0..FRAC_PI_2).contains(&phi) {
        return Err(TagError::param(
            "phi",
            format!("{:.6} deg outside [0, 90)", phi.to_degrees()),
        ));
    }
    let c = elongation_coefficient(p)?;
    Ok(p.fulcrum_length_mm * phi.sin() / (1.0 - c))
}

/// Laser incident angle (rad) at stroke `t_s`.
pub fn incident_angle(t_s: f64, p: &TagParameters) -> Result<f64> {
    Ok(p.rest_incident_deg.to_radians() + phi_from_stroke(t_s, p)?)
}

pub fn mirror_state(t_s: f64, p: &TagParameters) -> Result<MirrorState> {
    let phi = phi_from_stroke(t_s, p)?;
    Ok(MirrorState {
        stroke_mm: t_s,
        phi_rad: phi,
        incident_angle_rad: p.rest_incident_deg.to_radians() + phi,
    })
}

/// Beam deflection `θ₁ = 2φ`.
pub fn reflection_angle(phi: f64) -> Result<f64> {
    if !phi.is_finite() || phi < 0.0 {
        return Err(TagError::param("phi", format!("{phi} must be >= 0")));
    }
    if phi >= FRAC_PI_4 {
        return Err(TagError::BeamParallel {
            phi_deg: phi.to_degrees(),
        });
    }
    Ok(2.0 * phi)
}

/// One Denavit-Hartenberg row, `Rz(θ) Tz(d) Tx(a) Rx(α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub theta: f64,
    pub d: f64,
    pub a: f64,
    pub alpha: f64,
}

impl DhRow {
    pub fn transform(&self) -> HomogeneousTransform {
        HomogeneousTransform::rot_z(self.theta)
            * HomogeneousTransform::translation_only(Vector3::new(0.0, 0.0, self.d))
            * HomogeneousTransform::translation_only(Vector3::new(self.a, 0.0, 0.0))
            * HomogeneousTransform::rot_x(self.alpha)
    }
}

fn check_theta1(theta1: f64) -> Result<()> {
    if theta1.is_finite() && theta1.abs() < FRAC_PI_2 {
        Ok(())
    } else {
        Err(TagError::Singular {
            theta1_deg: theta1.to_degrees(),
        })
    }
}

/// The three rows of the laser chain: the source segment `v1`, the
/// rotating mirror, and the beam to the surface whose length `v2 / cos θ₁`
/// grows with deflection so that it always ends on the scan plane.
pub fn dh_rows(theta1: f64, g: &LaserGeometry) -> Result<[DhRow; 3]> {
    check_theta1(theta1)?;
    Ok([
        DhRow {
            theta: 0.0,
            d: 0.0,
            a: g.v1_mm,
            alpha: 0.0,
        },
        DhRow {
            theta: theta1,
            d: 0.0,
            a: 0.0,
            alpha: -FRAC_PI_2,
        },
        DhRow {
            theta: 0.0,
            d: g.v2_mm / theta1.cos(),
            a: 0.0,
            alpha: 0.0,
        },
    ])
}

/// Joint tip to laser point, as the product of the DH rows.
pub fn dh_transform(theta1: f64, g: &LaserGeometry) -> Result<HomogeneousTransform> {
    let rows = dh_rows(theta1, g)?;
    Ok(rows
        .iter()
        .fold(HomogeneousTransform::identity(), |acc, row| {
            acc * row.transform()
        }))
}

/// Closed form of [`dh_transform`].
pub fn laser_transform_closed_form(theta1: f64, g: &LaserGeometry) -> Result<HomogeneousTransform> {
    check_theta1(theta1)?;
    let (s, c) = theta1.sin_cos();
    Ok(HomogeneousTransform::from_matrix_unchecked(Matrix4::new(
        c,
        0.0,
        -s,
        g.v1_mm - g.v2_mm * theta1.tan(), //
        s,
        0.0,
        c,
        g.v2_mm, //
        0.0,
        -1.0,
        0.0,
        0.0, //
        0.0,
        0.0,
        0.0,
        1.0,
    )))
}

/// Laser spot for mirror rotation `phi`.
pub fn laser_point(phi: f64, g: &LaserGeometry, frame: Frame) -> Result<LaserEndpoint> {
    let theta1 = reflection_angle(phi)?;
    let tip = laser_transform_closed_form(theta1, g)?.translation();
    let position_mm = match frame {
        Frame::Tip => tip,
        Frame::Base => g.base_transform.transform_point(&tip),
    };
    Ok(LaserEndpoint {
        position_mm,
        theta1_rad: theta1,
        frame,
    })
}

/// Unsigned spot displacement from the rest position, `v2 tan 2φ`.
pub fn delta_x(phi: f64, g: &LaserGeometry) -> Result<f64> {
    let theta1 = reflection_angle(phi)?;
    Ok(g.v2_mm * theta1.tan())
}

/// Mirror rotation producing spot displacement `dx`.
pub fn ik_phi_from_delta_x(dx: f64, g: &LaserGeometry) -> Result<f64> {
    if !dx.is_finite() || dx < 0.0 {
        return Err(TagError::param(
            "dx",
            format!("{dx} must be finite and >= 0"),
        ));
    }
    Ok(0.5 * (dx / g.v2_mm).atan())
}

/// Stroke producing spot displacement `dx`; fails if it exceeds the
/// configured stroke range.
pub fn ik_stroke_from_delta_x(dx: f64, g: &LaserGeometry, p: &TagParameters) -> Result<f64> {
    let phi = ik_phi_from_delta_x(dx, g)?;
    let stroke = stroke_from_phi(phi, p)?;
    check_stroke(stroke, p)?;
    Ok(stroke)
}
