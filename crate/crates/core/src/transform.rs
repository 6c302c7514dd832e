//! Rigid 4x4 homogeneous transforms.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Result, TagError};

/// Orthonormality and determinant tolerance for a rotation block.
pub const RIGID_TOLERANCE: f64 = 1e-9;

/// A rigid transform `[R p; 0 1]` with `R` in SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousTransform(Matrix4<f64>);

impl HomogeneousTransform {
    pub fn identity() -> Self {
        HomogeneousTransform(Matrix4::identity())
    }

    /// Validates and wraps a full 4x4 matrix.
    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(TagError::NotRigid("non-finite entry".into()));
        }
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(TagError::NotRigid(format!(
                "bottom row {bottom:?} is not (0, 0, 0, 1)"
            )));
        }
        let t = HomogeneousTransform(m);
        let r = t.rotation();
        let ortho = (r.transpose() * r - Matrix3::identity()).amax();
        if ortho > RIGID_TOLERANCE {
            return Err(TagError::NotRigid(format!(
                "rotation block deviates from orthonormal by {ortho:.3e}"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > RIGID_TOLERANCE {
            return Err(TagError::NotRigid(format!("rotation determinant {det}")));
        }
        Ok(t)
    }

    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self::from_matrix(m)
    }

    /// Wraps a matrix the caller has constructed to be rigid by design.
    pub(crate) fn from_matrix_unchecked(m: Matrix4<f64>) -> Self {
        HomogeneousTransform(m)
    }

    pub fn translation_only(p: Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&p);
        HomogeneousTransform(m)
    }

    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        HomogeneousTransform(Matrix4::new(
            1.0, 0.0, 0.0, 0.0, //
            0.0, c, -s, 0.0, //
            0.0, s, c, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ))
    }

    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        HomogeneousTransform(Matrix4::new(
            c, -s, 0.0, 0.0, //
            s, c, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Closed-form inverse `[Rᵀ, -Rᵀp; 0 1]`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        let p = -(rt * self.translation());
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&p);
        HomogeneousTransform(m)
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        HomogeneousTransform(self.0 * rhs.0)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }

    /// Largest deviation of `RᵀR` from identity together with `|det R - 1|`.
    pub fn rigidity_error(&self) -> f64 {
        let r = self.rotation();
        let ortho = (r.transpose() * r - Matrix3::identity()).amax();
        ortho.max((r.determinant() - 1.0).abs())
    }

    /// Parses sixteen whitespace- or comma-separated numbers in row-major order.
    pub fn parse_row_major(text: &str) -> Result<Self> {
        let values = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| TagError::Parse(format!("transform entry `{s}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != 16 {
            return Err(TagError::Parse(format!(
                "transform needs 16 entries, found {}",
                values.len()
            )));
        }
        Self::from_matrix(Matrix4::from_row_slice(&values))
    }
}

impl Default for HomogeneousTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for HomogeneousTransform {
    type Output = HomogeneousTransform;

    fn mul(self, rhs: Self) -> Self::Output {
        self.compose(&rhs)
    }
}

impl Mul for &HomogeneousTransform {
    type Output = HomogeneousTransform;

    fn mul(self, rhs: Self) -> Self::Output {
        self.compose(rhs)
    }
}
