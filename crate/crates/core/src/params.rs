//! Physical constants of the mechanism, laser geometry and actuator.
//!
//! Angles are carried in radians everywhere except `rest_incident_deg`,
//! which is kept in degrees so that configuration files read naturally.
//! Lengths are millimetres, stiffness N/mm, modulus GPa.

use std::path::Path;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TagError};
use crate::transform::HomogeneousTransform;

/// Lever and tendon constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagParameters {
    /// Pivot to tendon attachment distance.
    pub fulcrum_length_mm: f64,
    /// Stiffness of one return spring; two act in parallel on the wire.
    pub spring_constant_n_per_mm: f64,
    pub wire_length_mm: f64,
    pub wire_modulus_gpa: f64,
    pub wire_radius_mm: f64,
    pub max_stroke_mm: f64,
    /// Incident angle at zero stroke, set by the prism mirror.
    pub rest_incident_deg: f64,
}

impl TagParameters {
    /// Prototype values: l = 2.83 mm, K_s = 0.269 N/mm, L = 142 mm,
    /// E = 53.97 GPa, r = 0.178 mm, 2 mm sweep, 45 deg rest incidence.
    pub const NOMINAL: TagParameters = TagParameters {
        fulcrum_length_mm: 2.83,
        spring_constant_n_per_mm: 0.269,
        wire_length_mm: 142.0,
        wire_modulus_gpa: 53.97,
        wire_radius_mm: 0.178,
        max_stroke_mm: 2.0,
        rest_incident_deg: 45.0,
    };

    /// `2 K_s L / (E π r²)` without any domain checks.
    pub fn raw_elongation_coefficient(&self) -> f64 {
        let modulus_n_per_mm2 = self.wire_modulus_gpa * 1e3;
        let area_mm2 = std::f64::consts::PI * self.wire_radius_mm * self.wire_radius_mm;
        2.0 * self.spring_constant_n_per_mm * self.wire_length_mm / (modulus_n_per_mm2 * area_mm2)
    }

    /// Returns `self` if every invariant holds.
    pub fn validate(self) -> Result<Self> {
        positive("fulcrum_length_mm", self.fulcrum_length_mm)?;
        non_negative("spring_constant_n_per_mm", self.spring_constant_n_per_mm)?;
        positive("wire_length_mm", self.wire_length_mm)?;
        positive("wire_modulus_gpa", self.wire_modulus_gpa)?;
        positive("wire_radius_mm", self.wire_radius_mm)?;
        positive("max_stroke_mm", self.max_stroke_mm)?;
        if !self.rest_incident_deg.is_finite() || !(0.0..90.0).contains(&self.rest_incident_deg) {
            return Err(TagError::param(
                "rest_incident_deg",
                format!("{} outside [0, 90)", self.rest_incident_deg),
            ));
        }
        if self.max_stroke_mm >= self.fulcrum_length_mm {
            return Err(TagError::param(
                "max_stroke_mm",
                format!(
                    "{} must be shorter than fulcrum_length_mm {}",
                    self.max_stroke_mm, self.fulcrum_length_mm
                ),
            ));
        }
        let c = self.raw_elongation_coefficient();
        if c >= 1.0 {
            return Err(TagError::CompliantWire(c));
        }
        let argument = (1.0 - c) * self.max_stroke_mm / self.fulcrum_length_mm;
        if argument > 1.0 {
            return Err(TagError::Unreachable { argument });
        }
        Ok(self)
    }
}

impl Default for TagParameters {
    fn default() -> Self {
        Self::NOMINAL
    }
}

/// Beam segments treated as links, plus the base-to-joint-tip transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserGeometry {
    /// Source-to-mirror segment.
    pub v1_mm: f64,
    /// Mirror-to-surface perpendicular distance.
    pub v2_mm: f64,
    /// Robot base to continuum-joint tip.
    pub base_transform: HomogeneousTransform,
}

impl LaserGeometry {
    /// Surface distance used in the steering bench experiment.
    pub const BENCH_V2_MM: f64 = 8.56;

    pub fn new(v1_mm: f64, v2_mm: f64) -> Result<Self> {
        LaserGeometry {
            v1_mm,
            v2_mm,
            base_transform: HomogeneousTransform::identity(),
        }
        .validate()
    }

    pub fn bench() -> Self {
        Self::new(0.0, Self::BENCH_V2_MM).expect("bench geometry is valid")
    }

    pub fn with_base_transform(mut self, base: HomogeneousTransform) -> Self {
        self.base_transform = base;
        self
    }

    pub fn validate(self) -> Result<Self> {
        non_negative("v1_mm", self.v1_mm)?;
        positive("v2_mm", self.v2_mm)?;
        HomogeneousTransform::from_matrix(*self.base_transform.matrix())?;
        Ok(self)
    }
}

/// Lead-screw drive converting motor revolutions to tendon stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorConfig {
    pub lead_screw_pitch_mm_per_rev: f64,
    pub encoder_counts_per_rev: u32,
}

impl ActuatorConfig {
    pub const PITCH_MM_PER_REV: f64 = 0.6;

    pub fn validate(self) -> Result<Self> {
        positive(
            "lead_screw_pitch_mm_per_rev",
            self.lead_screw_pitch_mm_per_rev,
        )?;
        if self.encoder_counts_per_rev == 0 {
            return Err(TagError::param(
                "encoder_counts_per_rev",
                "must be positive",
            ));
        }
        Ok(self)
    }

    pub fn stroke_from_motor(&self, revs: f64) -> f64 {
        revs * self.lead_screw_pitch_mm_per_rev
    }

    pub fn motor_from_stroke(&self, stroke_mm: f64) -> f64 {
        stroke_mm / self.lead_screw_pitch_mm_per_rev
    }

    pub fn stroke_from_counts(&self, counts: i64) -> f64 {
        self.stroke_from_motor(counts as f64 / f64::from(self.encoder_counts_per_rev))
    }
}

impl Default for ActuatorConfig {
    fn default() -> Self {
        ActuatorConfig {
            lead_screw_pitch_mm_per_rev: Self::PITCH_MM_PER_REV,
            encoder_counts_per_rev: 1200,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(TagError::param(name, format!("{v} must be finite and > 0")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(TagError::param(
            name,
            format!("{v} must be finite and >= 0"),
        ))
    }
}

/// Key-value configuration file. Every key is optional; missing keys keep
/// their nominal values.
///
/// ```text
/// fulcrum_length_mm = 2.83
/// v2_mm = 8.56
/// base_transform = [1, 0, 0, 0,  0, 1, 0, 0,  0, 0, 1, 0,  0, 0, 0, 1]
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub fulcrum_length_mm: Option<f64>,
    pub spring_constant_n_per_mm: Option<f64>,
    pub wire_length_mm: Option<f64>,
    pub wire_modulus_gpa: Option<f64>,
    pub wire_radius_mm: Option<f64>,
    pub max_stroke_mm: Option<f64>,
    pub rest_incident_deg: Option<f64>,
    pub v1_mm: Option<f64>,
    pub v2_mm: Option<f64>,
    /// Row-major 4x4.
    pub base_transform: Option<Vec<f64>>,
    pub lead_screw_pitch_mm_per_rev: Option<f64>,
    pub encoder_counts_per_rev: Option<u32>,
}

/// Fully resolved and validated model configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub tag: TagParameters,
    pub geometry: LaserGeometry,
    pub actuator: ActuatorConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            tag: TagParameters::NOMINAL,
            geometry: LaserGeometry::bench(),
            actuator: ActuatorConfig::default(),
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| TagError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| TagError::io(path, e))?;
        Self::parse(&text)
    }

    /// Values set in `other` take precedence.
    pub fn overlay(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            fulcrum_length_mm: other.fulcrum_length_mm.or(self.fulcrum_length_mm),
            spring_constant_n_per_mm: other
                .spring_constant_n_per_mm
                .or(self.spring_constant_n_per_mm),
            wire_length_mm: other.wire_length_mm.or(self.wire_length_mm),
            wire_modulus_gpa: other.wire_modulus_gpa.or(self.wire_modulus_gpa),
            wire_radius_mm: other.wire_radius_mm.or(self.wire_radius_mm),
            max_stroke_mm: other.max_stroke_mm.or(self.max_stroke_mm),
            rest_incident_deg: other.rest_incident_deg.or(self.rest_incident_deg),
            v1_mm: other.v1_mm.or(self.v1_mm),
            v2_mm: other.v2_mm.or(self.v2_mm),
            base_transform: other.base_transform.or(self.base_transform),
            lead_screw_pitch_mm_per_rev: other
                .lead_screw_pitch_mm_per_rev
                .or(self.lead_screw_pitch_mm_per_rev),
            encoder_counts_per_rev: other.encoder_counts_per_rev.or(self.encoder_counts_per_rev),
        }
    }

    /// Fills gaps from the nominal configuration and validates the result.
    pub fn resolve(&self) -> Result<ModelConfig> {
        let d = ModelConfig::default();
        let tag = TagParameters {
            fulcrum_length_mm: self.fulcrum_length_mm.unwrap_or(d.tag.fulcrum_length_mm),
            spring_constant_n_per_mm: self
                .spring_constant_n_per_mm
                .unwrap_or(d.tag.spring_constant_n_per_mm),
            wire_length_mm: self.wire_length_mm.unwrap_or(d.tag.wire_length_mm),
            wire_modulus_gpa: self.wire_modulus_gpa.unwrap_or(d.tag.wire_modulus_gpa),
            wire_radius_mm: self.wire_radius_mm.unwrap_or(d.tag.wire_radius_mm),
            max_stroke_mm: self.max_stroke_mm.unwrap_or(d.tag.max_stroke_mm),
            rest_incident_deg: self.rest_incident_deg.unwrap_or(d.tag.rest_incident_deg),
        }
        .validate()?;
        let base = match &self.base_transform {
            None => HomogeneousTransform::identity(),
            Some(v) if v.len() == 16 => {
                HomogeneousTransform::from_matrix(Matrix4::from_row_slice(v))?
            }
            Some(v) => {
                return Err(TagError::InvalidConfig(format!(
                    "base_transform needs 16 entries, found {}",
                    v.len()
                )))
            }
        };
        let geometry = LaserGeometry {
            v1_mm: self.v1_mm.unwrap_or(d.geometry.v1_mm),
            v2_mm: self.v2_mm.unwrap_or(d.geometry.v2_mm),
            base_transform: base,
        }
        .validate()?;
        let actuator = ActuatorConfig {
            lead_screw_pitch_mm_per_rev: self
                .lead_screw_pitch_mm_per_rev
                .unwrap_or(d.actuator.lead_screw_pitch_mm_per_rev),
            encoder_counts_per_rev: self
                .encoder_counts_per_rev
                .unwrap_or(d.actuator.encoder_counts_per_rev),
        }
        .validate()?;
        Ok(ModelConfig {
            tag,
            geometry,
            actuator,
        })
    }

    /// Snapshot of a resolved configuration, suitable for echoing.
    pub fn from_model(m: &ModelConfig) -> ConfigFile {
        ConfigFile {
            fulcrum_length_mm: Some(m.tag.fulcrum_length_mm),
            spring_constant_n_per_mm: Some(m.tag.spring_constant_n_per_mm),
            wire_length_mm: Some(m.tag.wire_length_mm),
            wire_modulus_gpa: Some(m.tag.wire_modulus_gpa),
            wire_radius_mm: Some(m.tag.wire_radius_mm),
            max_stroke_mm: Some(m.tag.max_stroke_mm),
            rest_incident_deg: Some(m.tag.rest_incident_deg),
            v1_mm: Some(m.geometry.v1_mm),
            v2_mm: Some(m.geometry.v2_mm),
            base_transform: Some(
                m.geometry
                    .base_transform
                    .matrix()
                    .transpose()
                    .iter()
                    .copied()
                    .collect(),
            ),
            lead_screw_pitch_mm_per_rev: Some(m.actuator.lead_screw_pitch_mm_per_rev),
            encoder_counts_per_rev: Some(m.actuator.encoder_counts_per_rev),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nominal_parameters_accepted() {
        let p = TagParameters::NOMINAL.validate().unwrap();
        assert_eq!(p, TagParameters::NOMINAL);
    }

    #[test]
    fn zero_fulcrum_rejected() {
        let p = TagParameters {
            fulcrum_length_mm: 0.0,
            ..TagParameters::NOMINAL
        };
        assert!(matches!(
            p.validate(),
            Err(TagError::InvalidParameter {
                name: "fulcrum_length_mm",
                ..
            })
        ));
    }

    #[test]
    fn stroke_beyond_lever_rejected() {
        // (1 - c) * 3.0 / 2.83 = 1.0448 with c = 0.014218
        let p = TagParameters {
            max_stroke_mm: 3.0,
            ..TagParameters::NOMINAL
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn negative_and_nan_values_rejected() {
        for bad in [-1.0, f64::NAN, f64::INFINITY] {
            let p = TagParameters {
                wire_radius_mm: bad,
                ..TagParameters::NOMINAL
            };
            assert!(p.validate().is_err(), "{bad}");
        }
    }

    #[test]
    fn pitch_maps_revolutions() {
        let a = ActuatorConfig::default();
        assert_eq!(a.stroke_from_motor(1.0), 0.6);
        assert_eq!(a.stroke_from_motor(0.0), 0.0);
        assert!((a.stroke_from_motor(2.5) - 1.5).abs() < 1e-15);
        assert!((a.stroke_from_counts(1200) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn config_file_overrides_and_validates() {
        let cfg = ConfigFile::parse("fulcrum_length_mm = 3.0\nv2_mm = 10.0\n").unwrap();
        let m = cfg.resolve().unwrap();
        assert_eq!(m.tag.fulcrum_length_mm, 3.0);
        assert_eq!(m.tag.wire_length_mm, 142.0);
        assert_eq!(m.geometry.v2_mm, 10.0);

        assert!(ConfigFile::parse("bogus_key = 1\n").is_err());
        let bad = ConfigFile::parse("max_stroke_mm = 3.0\n").unwrap();
        assert!(bad.resolve().is_err());
        let short = ConfigFile::parse("base_transform = [1, 0, 0]\n").unwrap();
        assert!(short.resolve().is_err());
    }

    #[test]
    fn config_snapshot_round_trips() {
        let base = HomogeneousTransform::rot_z(0.3)
            * HomogeneousTransform::translation_only(nalgebra::Vector3::new(1.0, 2.0, 3.0));
        let m = ModelConfig {
            geometry: LaserGeometry::bench().with_base_transform(base),
            ..ModelConfig::default()
        };
        let text = toml::to_string(&ConfigFile::from_model(&m)).unwrap();
        let back = ConfigFile::parse(&text).unwrap().resolve().unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn motor_stroke_round_trip(stroke in 0.0f64..2.0) {
            let a = ActuatorConfig::default();
            prop_assert!((a.stroke_from_motor(a.motor_from_stroke(stroke)) - stroke).abs() < 1e-12);
        }
    }
}
