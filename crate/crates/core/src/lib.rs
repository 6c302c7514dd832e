//! Kinematics and benchtop simulation for a tendon-actuated galvanometer:
//! a single-wire mirror mount that steers a laser from the tip of a
//! continuum joint.
//!
//! - [`params`]: mechanism constants, laser geometry, actuator, config files
//! - [`transform`]: rigid homogeneous transforms
//! - [`kinematics`]: stroke to mirror angle to laser spot, and inverses
//! - [`image`]: synthetic frames and image-based mirror angle estimation
//! - [`experiments`]: stroke sweep, laser steering, calibration, CSV reports

pub mod error;
pub mod experiments;
pub mod image;
pub mod kinematics;
pub mod params;
pub mod transform;

pub use error::{ErrorClass, Result, TagError};
pub use params::{ActuatorConfig, ConfigFile, LaserGeometry, ModelConfig, TagParameters};
pub use transform::HomogeneousTransform;
