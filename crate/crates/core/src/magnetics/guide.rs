//! Straight two-wire guides.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::source::FieldSource;
use super::wire::{field_exact_jacobian, WireElement};
use crate::constants::MU0;
use crate::error::ensure_finite;
use crate::{Error, Mat3, Result, Vec3};

/// Linear change of the wire spacing along the guide axis, measured from
/// the guide's reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Taper {
    pub start_separation: f64,
    pub length: f64,
}

/// Two parallel wires carrying co-directed currents `current`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuideGeometry {
    /// Spacing at and beyond the end of the taper (m).
    pub separation: f64,
    pub current: f64,
    /// Point on the centre axis where the taper ends.
    pub point: Vec3,
    /// Current direction; the taper lies on the negative side of `point`.
    pub direction: Vec3,
    pub separation_axis: Vec3,
    pub taper: Option<Taper>,
}

impl Default for GuideGeometry {
    fn default() -> Self {
        GuideGeometry {
            separation: 840e-6,
            current: 8.0,
            point: Vec3::zeros(),
            direction: Vec3::z(),
            separation_axis: Vec3::y(),
            taper: None,
        }
    }
}

/// `4 mu0 I / (pi d^2)`, the gradient at the centre of an ideal two-wire guide.
pub fn quadrupole_gradient(current: f64, separation: f64) -> f64 {
    4.0 * MU0 * current / (PI * separation * separation)
}

impl GuideGeometry {
    pub fn new(separation: f64, current: f64) -> Result<Self> {
        let g = GuideGeometry {
            separation,
            current,
            ..Self::default()
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.separation > 0.0) || !self.separation.is_finite() {
            return Err(Error::Geometry("guide separation must be positive".into()));
        }
        if !self.current.is_finite() {
            return Err(Error::invalid("guide current must be finite"));
        }
        let (a, s) = (self.direction, self.separation_axis);
        if (a.norm() - 1.0).abs() > 1e-9 || (s.norm() - 1.0).abs() > 1e-9 || a.dot(&s).abs() > 1e-9
        {
            return Err(Error::Geometry(
                "guide axis and separation axis must be orthonormal".into(),
            ));
        }
        if let Some(t) = &self.taper {
            if !(t.start_separation > 0.0) || !(t.length > 0.0) {
                return Err(Error::Geometry(
                    "taper needs positive length and start separation".into(),
                ));
            }
        }
        Ok(())
    }

    /// Spacing at axial coordinate `s` (m from `point` along `direction`).
    pub fn separation_at(&self, s: f64) -> f64 {
        match &self.taper {
            Some(t) if s < 0.0 => {
                let f = (-s / t.length).min(1.0);
                self.separation + f * (t.start_separation - self.separation)
            }
            _ => self.separation,
        }
    }

    /// `(x, y, s)` in guide coordinates: `y` along the separation axis, `s`
    /// along the wires, `x = y × s`.
    pub fn local(&self, p: &Vec3) -> (f64, f64, f64) {
        let rel = p - self.point;
        let xh = self.separation_axis.cross(&self.direction);
        (
            xh.dot(&rel),
            self.separation_axis.dot(&rel),
            self.direction.dot(&rel),
        )
    }

    pub fn gradient(&self) -> f64 {
        quadrupole_gradient(self.current, self.separation)
    }

    /// Conductor layout. Untapered guides are two infinite lines; tapered
    /// ones are polylines extended by `extension` beyond both taper ends.
    pub fn wire_elements(&self, extension: f64) -> Result<Vec<WireElement>> {
        self.validate()?;
        let (a, y) = (self.direction, self.separation_axis);
        let mut out = Vec::new();
        for sign in [1.0, -1.0] {
            match &self.taper {
                None => out.push(WireElement::line(
                    self.point + y * (sign * 0.5 * self.separation),
                    a,
                    self.current,
                )),
                Some(t) => {
                    let at = |s: f64| self.point + a * s + y * (sign * 0.5 * self.separation_at(s));
                    let s0 = -t.length - extension;
                    let pts = [at(s0), at(-t.length), at(0.0), at(extension)];
                    for w in pts.windows(2) {
                        out.push(WireElement::segment(w[0], w[1], self.current));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Lowest-order field between the wires, `B' (y x̂ + x ŷ)` in guide
/// coordinates, using the local spacing when the guide is tapered.
pub fn field_quadrupole(p: &Vec3, guide: &GuideGeometry) -> Result<Vec3> {
    ensure_finite(p, "position")?;
    let (x, y, s) = guide.local(p);
    let g = quadrupole_gradient(guide.current, guide.separation_at(s));
    let xh = guide.separation_axis.cross(&guide.direction);
    Ok(xh * (g * y) + guide.separation_axis * (g * x))
}

/// [`field_quadrupole`] as a field source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrupoleGuide(pub GuideGeometry);

impl FieldSource for QuadrupoleGuide {
    fn field(&self, p: &Vec3, _t: f64) -> Result<Vec3> {
        field_quadrupole(p, &self.0)
    }
    fn field_jacobian(&self, p: &Vec3, t: f64) -> Result<(Vec3, Mat3)> {
        let b = self.field(p, t)?;
        if self.0.taper.is_some() {
            return Ok((
                b,
                super::source::fd_jacobian(|q| field_quadrupole(q, &self.0), p, super::FD_STEP)?,
            ));
        }
        let g = self.0.gradient();
        let xh = self.0.separation_axis.cross(&self.0.direction);
        let yh = self.0.separation_axis;
        Ok((b, (xh * yh.transpose() + yh * xh.transpose()) * g))
    }
}

/// Exact filamentary field of a two-wire guide.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWireGuide {
    pub geometry: GuideGeometry,
    elements: Vec<WireElement>,
}

impl TwoWireGuide {
    pub fn new(geometry: GuideGeometry) -> Result<Self> {
        Ok(TwoWireGuide {
            elements: geometry.wire_elements(1.0)?,
            geometry,
        })
    }

    pub fn elements(&self) -> &[WireElement] {
        &self.elements
    }
}

impl FieldSource for TwoWireGuide {
    fn field(&self, p: &Vec3, t: f64) -> Result<Vec3> {
        Ok(self.field_jacobian(p, t)?.0)
    }
    fn field_jacobian(&self, p: &Vec3, _t: f64) -> Result<(Vec3, Mat3)> {
        field_exact_jacobian(p, &self.elements, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_gradient() {
        let g = quadrupole_gradient(8.0, 840e-6);
        assert!((g - 18.14).abs() < 0.01, "{g}");
        // oracle: 4 * 4πe-7 * 8 / (π * (8.4e-4)^2)
        let oracle = 16e-7 * 8.0 / (840e-6f64).powi(2);
        assert!((g - oracle).abs() / oracle < 1e-9);
    }

    #[test]
    fn quadrupole_zero_and_magnitude() {
        let guide = GuideGeometry::default();
        assert_eq!(
            field_quadrupole(&Vec3::zeros(), &guide).unwrap(),
            Vec3::zeros()
        );
        let b = field_quadrupole(&Vec3::new(1e-5, 0.0, 0.3), &guide).unwrap();
        assert!((b.norm() - 1.814e-4).abs() < 1e-6);
    }

    #[test]
    fn quadrupole_matches_exact_near_axis() {
        let guide = GuideGeometry::default();
        let exact = TwoWireGuide::new(guide).unwrap();
        let p = Vec3::new(3e-6, -2e-6, 0.0);
        let bq = field_quadrupole(&p, &guide).unwrap();
        let be = exact.field(&p, 0.0).unwrap();
        assert!((bq - be).norm() / be.norm() < 1e-3);
    }

    #[test]
    fn taper_interpolates() {
        let mut g = GuideGeometry::default();
        g.taper = Some(Taper {
            start_separation: 4e-3,
            length: 0.04,
        });
        assert_eq!(g.separation_at(0.1), 840e-6);
        assert_eq!(g.separation_at(-1.0), 4e-3);
        assert!((g.separation_at(-0.02) - 0.5 * (4e-3 + 840e-6)).abs() < 1e-15);
        assert_eq!(g.wire_elements(0.01).unwrap().len(), 6);
    }

    #[test]
    fn rejects_non_orthonormal_axes() {
        let mut g = GuideGeometry::default();
        g.separation_axis = Vec3::new(0.0, 1.0, 0.1).normalize();
        assert!(matches!(g.validate(), Err(Error::Geometry(_))));
    }
}
