use serde::{Deserialize, Serialize};

use crate::error::ensure_finite;
use crate::{Mat3, PhysicalConstants, Result, Vec3};

/// Field floor for the force surrogate `sqrt(|B|^2 + B_REG^2)` near zeros (T).
pub const B_REG: f64 = 1e-10;

/// Step for central-difference Jacobians (m).
pub const FD_STEP: f64 = 1e-7;

/// Anything that produces a (possibly time-dependent) magnetic field.
pub trait FieldSource: Send + Sync {
    fn field(&self, p: &Vec3, t: f64) -> Result<Vec3>;

    /// Field and Jacobian `J[(i, k)] = dB_i/dx_k`. Defaults to central
    /// differences of [`FieldSource::field`].
    fn field_jacobian(&self, p: &Vec3, t: f64) -> Result<(Vec3, Mat3)> {
        let b = self.field(p, t)?;
        Ok((b, fd_jacobian(|q| self.field(q, t), p, FD_STEP)?))
    }
}

impl<T: FieldSource + ?Sized> FieldSource for &T {
    fn field(&self, p: &Vec3, t: f64) -> Result<Vec3> {
        (**self).field(p, t)
    }
    fn field_jacobian(&self, p: &Vec3, t: f64) -> Result<(Vec3, Mat3)> {
        (**self).field_jacobian(p, t)
    }
}

impl<T: FieldSource + ?Sized> FieldSource for Box<T> {
    fn field(&self, p: &Vec3, t: f64) -> Result<Vec3> {
        (**self).field(p, t)
    }
    fn field_jacobian(&self, p: &Vec3, t: f64) -> Result<(Vec3, Mat3)> {
        (**self).field_jacobian(p, t)
    }
}

pub fn fd_jacobian<F>(f: F, p: &Vec3, h: f64) -> Result<Mat3>
where
    F: Fn(&Vec3) -> Result<Vec3>,
{
    let mut j = Mat3::zeros();
    for k in 0..3 {
        let mut dp = Vec3::zeros();
        dp[k] = h;
        let col = (f(&(p + dp))? - f(&(p - dp))?) / (2.0 * h);
        j.set_column(k, &col);
    }
    Ok(j)
}

/// Gradient of `|B|` from field and Jacobian, with the smoothed surrogate
/// below [`B_REG`].
pub fn norm_gradient(b: &Vec3, j: &Mat3) -> Vec3 {
    let n = b.norm();
    let denom = if n < B_REG {
        (n * n + B_REG * B_REG).sqrt()
    } else {
        n
    };
    j.transpose() * b / denom
}

/// Divergence and curl of a field by central differences.
pub fn divergence_and_curl<S: FieldSource + ?Sized>(
    source: &S,
    p: &Vec3,
    t: f64,
    h: f64,
) -> Result<(f64, Vec3)> {
    let j = fd_jacobian(|q| source.field(q, t), p, h)?;
    let div = j[(0, 0)] + j[(1, 1)] + j[(2, 2)];
    let curl = Vec3::new(
        j[(2, 1)] - j[(1, 2)],
        j[(0, 2)] - j[(2, 0)],
        j[(1, 0)] - j[(0, 1)],
    );
    Ok((div, curl))
}

/// Uniform gravitational acceleration. `height(p)` is measured against it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gravity {
    /// Acceleration vector (m/s^2), e.g. `(0, 0, -g)`.
    pub acceleration: Vec3,
}

impl Gravity {
    pub fn off() -> Self {
        Gravity {
            acceleration: Vec3::zeros(),
        }
    }

    /// Standard gravity along lab -z.
    pub fn standard(constants: &PhysicalConstants) -> Self {
        Gravity {
            acceleration: Vec3::new(0.0, 0.0, -constants.g_grav()),
        }
    }

    /// Gravitational potential energy per unit mass relative to the origin.
    pub fn potential_per_mass(&self, p: &Vec3) -> f64 {
        -self.acceleration.dot(p)
    }
}

/// `U(p) = mu_m |B(p)| + m g h(p)`.
pub fn total_potential<S: FieldSource + ?Sized>(
    p: &Vec3,
    t: f64,
    source: &S,
    constants: &PhysicalConstants,
    gravity: &Gravity,
) -> Result<f64> {
    ensure_finite(p, "position")?;
    let b = source.field(p, t)?;
    Ok(constants.mu_m() * b.norm() + constants.mass() * gravity.potential_per_mass(p))
}

/// Spatially uniform, static field. Mostly useful in tests.
#[derive(Debug, Clone, Copy)]
pub struct UniformField(pub Vec3);

impl FieldSource for UniformField {
    fn field(&self, _p: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.0)
    }
    fn field_jacobian(&self, _p: &Vec3, _t: f64) -> Result<(Vec3, Mat3)> {
        Ok((self.0, Mat3::zeros()))
    }
}
