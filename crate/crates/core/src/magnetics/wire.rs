//! Filamentary conductors and exact superposition of their fields.

use nalgebra::Unit;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::ring::RingFrame;
use super::source::FieldSource;
use crate::constants::MU0;
use crate::error::ensure_finite;
use crate::{Error, Mat3, Result, Vec3};

/// Chords used for a full 2π arc; partial arcs scale proportionally.
pub const ARC_SEGMENTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WireShape {
    InfiniteLine {
        point: Vec3,
        direction: Unit<Vec3>,
    },
    Segment {
        start: Vec3,
        end: Vec3,
    },
    /// Arc starting at `center + radius * start`, running counter-clockwise
    /// about `normal` through `span` radians.
    Arc {
        center: Vec3,
        normal: Unit<Vec3>,
        start: Unit<Vec3>,
        radius: f64,
        span: f64,
    },
}

/// One conductor carrying a signed current (A). For segments and arcs the
/// current flows from start to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireElement {
    pub shape: WireShape,
    pub current: f64,
}

impl WireElement {
    pub fn line(point: Vec3, direction: Vec3, current: f64) -> Self {
        WireElement {
            shape: WireShape::InfiniteLine {
                point,
                direction: Unit::new_normalize(direction),
            },
            current,
        }
    }

    pub fn segment(start: Vec3, end: Vec3, current: f64) -> Self {
        WireElement {
            shape: WireShape::Segment { start, end },
            current,
        }
    }

    pub fn arc(
        center: Vec3,
        normal: Vec3,
        start: Vec3,
        radius: f64,
        span: f64,
        current: f64,
    ) -> Result<Self> {
        let normal = Unit::new_normalize(normal);
        let start = start - normal.into_inner() * normal.dot(&start);
        if start.norm() == 0.0 || !(radius > 0.0) || !(span > 0.0 && span <= 2.0 * PI + 1e-12) {
            return Err(Error::invalid(
                "arc needs radius > 0, span in (0, 2π] and a start direction off the normal",
            ));
        }
        Ok(WireElement {
            shape: WireShape::Arc {
                center,
                normal,
                start: Unit::new_normalize(start),
                radius,
                span,
            },
            current,
        })
    }

    /// Field and Jacobian of this element at `p`.
    pub fn field_jacobian(&self, p: &Vec3) -> Result<(Vec3, Mat3)> {
        match &self.shape {
            WireShape::InfiniteLine { point, direction } => {
                line_field(p, point, direction, self.current)
            }
            WireShape::Segment { start, end } => segment_field(p, start, end, self.current),
            WireShape::Arc {
                center,
                normal,
                start,
                radius,
                span,
            } => {
                let n = ((ARC_SEGMENTS as f64 * span / (2.0 * PI)).ceil() as usize).max(16);
                let n = n + n % 2;
                let (b_fine, j_fine) =
                    arc_polygon(p, center, normal, start, *radius, *span, n, self.current)?;
                let (b_coarse, j_coarse) = arc_polygon(
                    p,
                    center,
                    normal,
                    start,
                    *radius,
                    *span,
                    n / 2,
                    self.current,
                )?;
                // chord error is O(1/n^2): one Richardson step
                Ok((
                    (4.0 * b_fine - b_coarse) / 3.0,
                    (4.0 * j_fine - j_coarse) / 3.0,
                ))
            }
        }
    }

    /// Straight-chord approximation of this element with `n` chords per arc.
    /// Lines and segments are returned unchanged.
    pub fn discretize(&self, chords_per_radian: f64) -> Vec<WireElement> {
        match &self.shape {
            WireShape::Arc {
                center,
                normal,
                start,
                radius,
                span,
            } => {
                let n = ((chords_per_radian * span).ceil() as usize).max(1);
                let pts = arc_points(center, normal, start, *radius, *span, n);
                pts.windows(2)
                    .map(|w| WireElement::segment(w[0], w[1], self.current))
                    .collect()
            }
            _ => vec![self.clone()],
        }
    }

    /// Rigid motion `p -> rot * p + shift`.
    pub fn transformed(&self, rot: &nalgebra::Rotation3<f64>, shift: &Vec3) -> WireElement {
        let shape = match &self.shape {
            WireShape::InfiniteLine { point, direction } => WireShape::InfiniteLine {
                point: rot * point + shift,
                direction: Unit::new_normalize(rot * direction.into_inner()),
            },
            WireShape::Segment { start, end } => WireShape::Segment {
                start: rot * start + shift,
                end: rot * end + shift,
            },
            WireShape::Arc {
                center,
                normal,
                start,
                radius,
                span,
            } => WireShape::Arc {
                center: rot * center + shift,
                normal: Unit::new_normalize(rot * normal.into_inner()),
                start: Unit::new_normalize(rot * start.into_inner()),
                radius: *radius,
                span: *span,
            },
        };
        WireElement {
            shape,
            current: self.current,
        }
    }
}

fn line_field(p: &Vec3, point: &Vec3, dir: &Unit<Vec3>, current: f64) -> Result<(Vec3, Mat3)> {
    let a = p - point;
    let rho = a - dir.into_inner() * dir.dot(&a);
    let r2 = rho.norm_squared();
    if r2 <= (1e-12 * (1.0 + a.norm())).powi(2) {
        return Err(Error::singular(*p, "point lies on an infinite wire"));
    }
    let c = MU0 * current / (2.0 * PI);
    let u = dir.into_inner();
    let uxr = u.cross(&rho);
    let b = uxr * (c / r2);
    let j = (u.cross_matrix() / r2 - uxr * rho.transpose() * (2.0 / (r2 * r2))) * c;
    Ok((b, j))
}

fn segment_field(p: &Vec3, start: &Vec3, end: &Vec3, current: f64) -> Result<(Vec3, Mat3)> {
    let a = p - start;
    let b = p - end;
    let s = a.norm();
    let q = b.norm();
    let l = end - start;
    let cross = a.cross(&b);
    let c2 = cross.norm_squared();
    let ab = a.dot(&b);
    let scale = s.max(q).max(l.norm());
    if s == 0.0 || q == 0.0 || (ab < 0.0 && c2.sqrt() <= 10.0 * f64::EPSILON * l.norm() * scale) {
        return Err(Error::singular(*p, "point lies on a wire segment"));
    }
    let ds = a / s;
    let dq = b / q;
    // w = sq + a.b loses all precision beside a long segment; use |a×b|^2 / (sq - a.b) there
    let (w, dw) = if ab < 0.0 {
        let u = s * q - ab;
        let w = c2 / u;
        let du = ds * q + dq * s - a - b;
        (w, (cross.cross(&l) * 2.0 - du * w) / u)
    } else {
        (s * q + ab, ds * q + dq * s + a + b)
    };
    if !(w > 0.0) {
        // on the extension of the segment the field vanishes
        return Ok((Vec3::zeros(), Mat3::zeros()));
    }
    let c = MU0 * current / (4.0 * PI);
    let f = (s + q) / (s * q * w);
    let field = cross * (c * f);
    let df = ((ds + dq) / (s + q) - ds / s - dq / q - dw / w) * f;
    let j = (cross * df.transpose() + l.cross_matrix() * f) * c;
    Ok((field, j))
}

fn arc_points(
    center: &Vec3,
    normal: &Unit<Vec3>,
    start: &Unit<Vec3>,
    radius: f64,
    span: f64,
    n: usize,
) -> Vec<Vec3> {
    let u = start.into_inner();
    let v = normal.cross(&u);
    (0..=n)
        .map(|k| {
            let th = span * k as f64 / n as f64;
            center + (u * th.cos() + v * th.sin()) * radius
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn arc_polygon(
    p: &Vec3,
    center: &Vec3,
    normal: &Unit<Vec3>,
    start: &Unit<Vec3>,
    radius: f64,
    span: f64,
    n: usize,
    current: f64,
) -> Result<(Vec3, Mat3)> {
    let pts = arc_points(center, normal, start, radius, span, n);
    let mut b = Vec3::zeros();
    let mut j = Mat3::zeros();
    for w in pts.windows(2) {
        let (bb, jj) = segment_field(p, &w[0], &w[1], current)?;
        b += bb;
        j += jj;
    }
    Ok((b, j))
}

/// Smooth multiplicative ripple of `|B|` around one azimuth of a ring,
/// modelling the non-uniform current where the ring is fed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionModel {
    pub frame: RingFrame,
    pub radius: f64,
    /// Peak fractional increase ε of |B|.
    pub ripple: f64,
    /// Full azimuthal extent ℓ (arc length, m).
    pub extent: f64,
    /// Azimuth φj of the bump centre (rad).
    pub location: f64,
}

impl JunctionModel {
    /// Multiplier `1 + ε w(φ − φj)` and its gradient.
    pub fn factor(&self, p: &Vec3) -> (f64, Vec3) {
        let (rho, phi, _) = self.frame.to_cylindrical(p);
        let width = self.extent / self.radius;
        let d = wrap_angle(phi - self.location);
        if d.abs() >= 0.5 * width || rho == 0.0 {
            return (1.0, Vec3::zeros());
        }
        let k = 2.0 * PI / width;
        let w = 0.5 * (1.0 + (k * d).cos());
        let dw = -0.5 * k * (k * d).sin();
        let grad = self.frame.tangent(phi) * (self.ripple * dw / rho);
        (1.0 + self.ripple * w, grad)
    }

    /// Apply to a field/Jacobian pair. With ε = 0 the input is returned untouched.
    pub fn apply(&self, p: &Vec3, b: Vec3, j: Mat3) -> (Vec3, Mat3) {
        if self.ripple == 0.0 {
            return (b, j);
        }
        let (f, grad) = self.factor(p);
        if f == 1.0 && grad == Vec3::zeros() {
            return (b, j);
        }
        (b * f, j * f + b * grad.transpose())
    }
}

/// Wrap an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Superposed field of all elements, optionally modulated by a junction.
/// An empty element list gives zero field.
pub fn field_exact(
    p: &Vec3,
    elements: &[WireElement],
    junction: Option<&JunctionModel>,
) -> Result<Vec3> {
    Ok(field_exact_jacobian(p, elements, junction)?.0)
}

pub fn field_exact_jacobian(
    p: &Vec3,
    elements: &[WireElement],
    junction: Option<&JunctionModel>,
) -> Result<(Vec3, Mat3)> {
    ensure_finite(p, "position")?;
    let mut b = Vec3::zeros();
    let mut j = Mat3::zeros();
    for e in elements {
        let (bb, jj) = e.field_jacobian(p)?;
        b += bb;
        j += jj;
    }
    Ok(match junction {
        Some(jm) => jm.apply(p, b, j),
        None => (b, j),
    })
}

/// Static collection of wires as a [`FieldSource`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireSet {
    pub elements: Vec<WireElement>,
    pub junction: Option<JunctionModel>,
}

impl WireSet {
    pub fn new(elements: Vec<WireElement>) -> Self {
        WireSet {
            elements,
            junction: None,
        }
    }
}

impl FieldSource for WireSet {
    fn field(&self, p: &Vec3, _t: f64) -> Result<Vec3> {
        field_exact(p, &self.elements, self.junction.as_ref())
    }
    fn field_jacobian(&self, p: &Vec3, _t: f64) -> Result<(Vec3, Mat3)> {
        field_exact_jacobian(p, &self.elements, self.junction.as_ref())
    }
}
