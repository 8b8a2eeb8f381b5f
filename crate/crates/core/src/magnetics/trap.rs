//! Static characterization of a two-wire trap cross-section.

use serde::{Deserialize, Serialize};

use super::guide::{GuideGeometry, TwoWireGuide};
use super::ring::RingGeometry;
use super::source::FieldSource;
use crate::{Error, PhysicalConstants, Result, Vec3};

/// Which conductor pair to characterize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CrossSection {
    Guide(GuideGeometry),
    /// Evaluated at azimuth zero with the junction ignored.
    Ring(RingGeometry),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapOptions {
    /// Prefactor κ in `b0 = sqrt(κ ħ v / (mu_m B'))`.
    pub kappa: f64,
    /// Optional fixed loss radius replacing the formula (m).
    pub loss_radius_override: Option<f64>,
    /// Offset used to measure the cone slope at the zero (m).
    pub slope_step: f64,
}

impl Default for TrapOptions {
    fn default() -> Self {
        TrapOptions {
            kappa: 1.0,
            loss_radius_override: None,
            slope_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapCharacterization {
    pub zero: Vec3,
    /// |∇|B|| at the zero line (T/m).
    pub gradient_center: f64,
    pub saddle_point: Vec3,
    pub saddle_field: f64,
    pub depth_joule: f64,
    pub depth_kelvin: f64,
    pub effective_frequency: f64,
    pub loss_radius: f64,
    /// Moment used for the energies (J/T).
    pub mu_m: f64,
}

impl TrapCharacterization {
    /// Depth in kelvin for another moment, since depth is linear in it.
    pub fn depth_kelvin_for(&self, mu: f64, constants: &PhysicalConstants) -> f64 {
        mu * self.saddle_field / constants.kb()
    }
}

struct Section {
    source: Box<dyn FieldSource>,
    origin: Vec3,
    /// Transverse plane basis: `u` is the escape direction (bisector),
    /// `w` points from one wire to the other.
    u: Vec3,
    w: Vec3,
    separation: f64,
}

fn section(cs: &CrossSection) -> Result<Section> {
    match cs {
        CrossSection::Guide(g) => {
            g.validate()?;
            Ok(Section {
                source: Box::new(TwoWireGuide::new(*g)?),
                origin: g.point,
                u: g.separation_axis.cross(&g.direction),
                w: g.separation_axis,
                separation: g.separation,
            })
        }
        CrossSection::Ring(r) => {
            r.validate()?;
            let mut r = *r;
            r.junction = None;
            Ok(Section {
                source: Box::new(r),
                origin: r.frame.point(r.radius, 0.0, 0.0),
                u: r.frame.reference(),
                w: r.frame.axis(),
                separation: r.separation,
            })
        }
    }
}

fn find_zero(s: &Section) -> Result<Vec3> {
    let mut p = s.origin;
    for _ in 0..50 {
        let (b, j) = s.source.field_jacobian(&p, 0.0)?;
        // restrict to the transverse plane
        let bu = b.dot(&s.u);
        let bw = b.dot(&s.w);
        let m = nalgebra::Matrix2::new(
            s.u.dot(&(j * s.u)),
            s.u.dot(&(j * s.w)),
            s.w.dot(&(j * s.u)),
            s.w.dot(&(j * s.w)),
        );
        let step = m.try_inverse().ok_or_else(|| {
            Error::Geometry("degenerate field Jacobian while locating the zero".into())
        })? * nalgebra::Vector2::new(bu, bw);
        p -= s.u * step.x + s.w * step.y;
        if step.norm() < 1e-15 * s.separation {
            break;
        }
        if (p - s.origin).norm() > 0.5 * s.separation {
            break;
        }
    }
    let scale = s
        .source
        .field(&(s.origin + s.u * (0.5 * s.separation)), 0.0)?
        .norm();
    let b = s.source.field(&p, 0.0)?.norm();
    if !(b <= 1e-9 * scale) || (p - s.origin).norm() > 0.5 * s.separation {
        return Err(Error::Geometry(format!(
            "no field zero between the wires (|B| = {b:e} T at best point)"
        )));
    }
    Ok(p)
}

/// Maximize `|B|` along `zero + t dir` for `t` in `(0, t_max)`.
fn saddle_along(s: &Section, zero: &Vec3, dir: &Vec3, t_max: f64) -> Result<(f64, f64)> {
    let f = |t: f64| -> Result<f64> { Ok(s.source.field(&(zero + dir * t), 0.0)?.norm()) };
    let n = 400;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 1..=n {
        let v = f(t_max * i as f64 / n as f64)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    if best.0 == n {
        return Err(Error::Numeric {
            message: "saddle search did not bracket a maximum".into(),
            diagnostics: vec![format!("|B| still rising at t = {t_max:e} m")],
        });
    }
    let h = t_max / n as f64;
    let (mut a, mut b) = ((best.0 as f64 - 1.0) * h, (best.0 as f64 + 1.0) * h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    let mut iters = 0;
    while b - a > 1e-12 * t_max {
        iters += 1;
        if iters > 200 {
            return Err(Error::Numeric {
                message: "saddle search did not converge".into(),
                diagnostics: vec![format!("bracket [{a:e}, {b:e}] m after {iters} iterations")],
            });
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

/// Locate the zero and escape saddle numerically and derive the gradient,
/// depth, linear-well frequency at `thermal_energy` and the loss radius.
pub fn characterize_trap(
    cs: &CrossSection,
    constants: &PhysicalConstants,
    thermal_energy: f64,
    opts: &TrapOptions,
) -> Result<TrapCharacterization> {
    if !(thermal_energy > 0.0) || !thermal_energy.is_finite() {
        return Err(Error::invalid("thermal energy must be positive"));
    }
    if !(opts.kappa > 0.0) || !(opts.slope_step > 0.0) {
        return Err(Error::invalid("kappa and slope step must be positive"));
    }
    let s = section(cs)?;
    let zero = find_zero(&s)?;
    let h = opts.slope_step;
    let mut slope = 0.0;
    for d in [s.u, s.w] {
        let up = s.source.field(&(zero + d * h), 0.0)?.norm();
        let dn = s.source.field(&(zero - d * h), 0.0)?.norm();
        slope += (up + dn) / (2.0 * h);
    }
    let gradient = 0.5 * slope;

    let mut saddle: Option<(Vec3, f64)> = None;
    for dir in [s.u, -s.u] {
        let (t, b) = saddle_along(&s, &zero, &dir, 2.0 * s.separation)?;
        if saddle.is_none_or(|(_, bb)| b < bb) {
            saddle = Some((zero + dir * t, b));
        }
    }
    let (saddle_point, saddle_field) = saddle.expect("two directions searched");

    let mu = constants.mu_m();
    let depth = mu * saddle_field;
    let force = mu * gradient;
    let freq = force / (4.0 * (2.0 * constants.mass() * thermal_energy).sqrt());
    let v_bar = (thermal_energy / constants.mass()).sqrt();
    let b0 = match opts.loss_radius_override {
        Some(r) if r >= 0.0 => r,
        Some(_) => return Err(Error::invalid("loss radius must be non-negative")),
        None => (opts.kappa * constants.hbar() * v_bar / force).sqrt(),
    };
    Ok(TrapCharacterization {
        zero,
        gradient_center: gradient,
        saddle_point,
        saddle_field,
        depth_joule: depth,
        depth_kelvin: depth / constants.kb(),
        effective_frequency: freq,
        loss_radius: b0,
        mu_m: mu,
    })
}
