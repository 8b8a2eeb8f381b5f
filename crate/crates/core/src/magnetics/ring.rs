//! Storage-ring geometry: two coaxial current loops a distance `d` apart.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};

use super::elliptic::complete_elliptic;
use super::source::FieldSource;
use super::wire::{JunctionModel, WireElement};
use crate::constants::MU0;
use crate::error::ensure_finite;
use crate::{Error, Mat3, Result, Vec3};

/// Orientation of the ring plane. `axis` is the ring normal, `reference`
/// the in-plane direction of azimuth zero; azimuth grows towards
/// `axis × reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingFrame {
    pub center: Vec3,
    axis: Vec3,
    reference: Vec3,
}

impl RingFrame {
    pub fn new(center: Vec3, axis: Vec3, reference: Vec3) -> Result<Self> {
        // keep already orthonormal input bit for bit
        let unit = |v: &Vec3| (v.norm_squared() - 1.0).abs() <= 4.0 * f64::EPSILON;
        if unit(&axis) && unit(&reference) && axis.dot(&reference) == 0.0 {
            return Ok(RingFrame {
                center,
                axis,
                reference,
            });
        }
        let axis = axis
            .try_normalize(1e-300)
            .ok_or_else(|| Error::invalid("ring axis is zero"))?;
        let r = reference - axis * axis.dot(&reference);
        let reference = r
            .try_normalize(1e-12 * reference.norm().max(1e-300))
            .ok_or_else(|| Error::invalid("ring reference direction is parallel to the axis"))?;
        Ok(RingFrame {
            center,
            axis,
            reference,
        })
    }

    /// Ring in the vertical x-z plane centred at the origin. Azimuth zero is
    /// at +x where the tangent points straight down.
    pub fn vertical() -> Self {
        RingFrame {
            center: Vec3::zeros(),
            axis: Vec3::y(),
            reference: Vec3::x(),
        }
    }

    /// Vertical frame tilted about +x by `angle`; π/2 lays the ring flat.
    pub fn tilted(angle: f64) -> Self {
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::x_axis(), angle);
        RingFrame {
            center: Vec3::zeros(),
            axis: rot * Vec3::y(),
            reference: Vec3::x(),
        }
    }

    pub fn with_center(mut self, center: Vec3) -> Self {
        self.center = center;
        self
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn reference(&self) -> Vec3 {
        self.reference
    }

    pub fn binormal(&self) -> Vec3 {
        self.axis.cross(&self.reference)
    }

    /// `(rho, phi, z)` of a lab point, `phi` in (-π, π].
    pub fn to_cylindrical(&self, p: &Vec3) -> (f64, f64, f64) {
        let rel = p - self.center;
        let z = self.axis.dot(&rel);
        let x = self.reference.dot(&rel);
        let y = self.binormal().dot(&rel);
        (x.hypot(y), y.atan2(x), z)
    }

    /// `(rho, z)` without the azimuth.
    pub fn rho_z(&self, p: &Vec3) -> (f64, f64) {
        let rel = p - self.center;
        let z = self.axis.dot(&rel);
        ((rel - self.axis * z).norm(), z)
    }

    pub fn point(&self, rho: f64, phi: f64, z: f64) -> Vec3 {
        self.center
            + (self.reference * phi.cos() + self.binormal() * phi.sin()) * rho
            + self.axis * z
    }

    pub fn radial(&self, phi: f64) -> Vec3 {
        self.reference * phi.cos() + self.binormal() * phi.sin()
    }

    /// Unit tangent in the direction of increasing azimuth.
    pub fn tangent(&self, phi: f64) -> Vec3 {
        self.binormal() * phi.cos() - self.reference * phi.sin()
    }
}

/// Optional feed junction; see [`JunctionModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub ripple: f64,
    pub extent: f64,
    pub location: f64,
}

impl Default for Junction {
    fn default() -> Self {
        Junction {
            ripple: 0.2,
            extent: 250e-6,
            location: PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingGeometry {
    pub radius: f64,
    pub separation: f64,
    pub current: f64,
    pub frame: RingFrame,
    pub junction: Option<Junction>,
}

impl Default for RingGeometry {
    fn default() -> Self {
        RingGeometry {
            radius: 0.01,
            separation: 840e-6,
            current: 8.0,
            frame: RingFrame::vertical(),
            junction: None,
        }
    }
}

impl RingGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.separation > 0.0) || !(self.radius > self.separation) {
            return Err(Error::Geometry(format!(
                "ring needs R > d > 0 (R = {} m, d = {} m)",
                self.radius, self.separation
            )));
        }
        if !self.current.is_finite() || self.current < 0.0 {
            return Err(Error::invalid(
                "ring current must be finite and non-negative",
            ));
        }
        if let Some(j) = &self.junction {
            if !(0.0..1.0).contains(&j.ripple) || !(j.extent > 0.0) || !j.location.is_finite() {
                return Err(Error::invalid(
                    "junction needs ripple in [0, 1) and extent > 0",
                ));
            }
        }
        Ok(())
    }

    pub fn junction_model(&self) -> Option<JunctionModel> {
        self.junction.map(|j| JunctionModel {
            frame: self.frame,
            radius: self.radius,
            ripple: j.ripple,
            extent: j.extent,
            location: j.location,
        })
    }

    fn loop_offsets(&self) -> [f64; 2] {
        [0.5 * self.separation, -0.5 * self.separation]
    }

    /// Field and Jacobian of the two ideal loops for 1 A, without junction.
    pub fn field_per_amp(&self, p: &Vec3) -> Result<(Vec3, Mat3)> {
        let n = self.frame.axis;
        let rel = p - self.frame.center;
        let z = n.dot(&rel);
        let rvec = rel - n * z;
        let rho_true = rvec.norm();
        let rho = rho_true.max(1e-6 * self.radius);
        let rhat = if rho_true > 0.0 {
            rvec / rho_true
        } else {
            self.frame.reference
        };
        let mut b_r = Dual::cst(0.0);
        let mut b_z = Dual::cst(0.0);
        for z0 in self.loop_offsets() {
            let (br, bz) = loop_dual(self.radius, rho, z - z0)
                .ok_or_else(|| Error::singular(*p, "point lies on a ring wire"))?;
            b_r = b_r + br;
            b_z = b_z + bz;
        }
        let b = rhat * b_r.v + n * b_z.v;
        let perp = Mat3::identity() - n * n.transpose() - rhat * rhat.transpose();
        let j = rhat * (rhat.transpose() * b_r.r + n.transpose() * b_r.z)
            + perp * (b_r.v / rho)
            + n * (rhat.transpose() * b_z.r + n.transpose() * b_z.z);
        Ok((b, j))
    }

    /// Ideal two-loop field and Jacobian at the configured current, with the
    /// junction ripple applied when present.
    pub fn field_jacobian(&self, p: &Vec3) -> Result<(Vec3, Mat3)> {
        ensure_finite(p, "position")?;
        let (b, j) = self.field_per_amp(p)?;
        let (b, j) = (b * self.current, j * self.current);
        Ok(match self.junction_model() {
            Some(jm) => jm.apply(p, b, j),
            None => (b, j),
        })
    }

    /// In-plane radius of the field zero between the loops.
    pub fn zero_radius(&self) -> Result<f64> {
        let bz = |rho: f64| -> Result<f64> {
            let p = self.frame.point(rho, 0.0, 0.0);
            Ok(self.field_per_amp(&p)?.0.dot(&self.frame.axis))
        };
        let mut lo = self.radius - 0.45 * self.separation;
        let mut hi = self.radius + 0.45 * self.separation;
        let (mut flo, fhi) = (bz(lo)?, bz(hi)?);
        if flo.signum() == fhi.signum() {
            return Err(Error::Geometry(
                "ring field has no zero between the wires".into(),
            ));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = bz(mid)?;
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * self.radius {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Discrete conductor layout: two arcs, open over the junction gap when a
    /// junction is present, with radial feed leads closed by an outer segment.
    pub fn wire_elements(&self, lead_length: f64) -> Result<Vec<WireElement>> {
        self.validate()?;
        let n = self.frame.axis;
        let mut out = Vec::new();
        for z0 in self.loop_offsets() {
            let c = self.frame.center + n * z0;
            match &self.junction {
                None => out.push(WireElement::arc(
                    c,
                    n,
                    self.frame.reference,
                    self.radius,
                    2.0 * PI,
                    self.current,
                )?),
                Some(j) => {
                    let gap = j.extent / self.radius;
                    let start_phi = j.location + 0.5 * gap;
                    let end_phi = j.location - 0.5 * gap + 2.0 * PI;
                    let start = self.frame.radial(start_phi);
                    out.push(WireElement::arc(
                        c,
                        n,
                        start,
                        self.radius,
                        2.0 * PI - gap,
                        self.current,
                    )?);
                    let outer = self.radius + lead_length;
                    let a_end = self.frame.point(self.radius, end_phi, z0);
                    let o_end = self.frame.point(outer, end_phi, z0);
                    let o_start = self.frame.point(outer, start_phi, z0);
                    let a_start = self.frame.point(self.radius, start_phi, z0);
                    out.push(WireElement::segment(a_end, o_end, self.current));
                    out.push(WireElement::segment(o_end, o_start, self.current));
                    out.push(WireElement::segment(o_start, a_start, self.current));
                }
            }
        }
        Ok(out)
    }
}

impl FieldSource for RingGeometry {
    fn field(&self, p: &Vec3, _t: f64) -> Result<Vec3> {
        Ok(self.field_jacobian(p)?.0)
    }
    fn field_jacobian(&self, p: &Vec3, _t: f64) -> Result<(Vec3, Mat3)> {
        RingGeometry::field_jacobian(self, p)
    }
}

/// Closed-form field `(B_rho, B_z)` of a single circular loop of radius `a`
/// centred on the axis at `z = 0`.
pub fn loop_field(a: f64, current: f64, rho: f64, z: f64) -> Option<(f64, f64)> {
    let (br, bz) = loop_dual(a, rho.max(1e-6 * a), z)?;
    Some((br.v * current, bz.v * current))
}

/// Value with partial derivatives in (rho, z).
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: f64,
    r: f64,
    z: f64,
}

impl Dual {
    fn cst(v: f64) -> Self {
        Dual { v, r: 0.0, z: 0.0 }
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let k = 0.5 / s;
        Dual {
            v: s,
            r: self.r * k,
            z: self.z * k,
        }
    }
    fn chain(self, v: f64, dv: f64) -> Self {
        Dual {
            v,
            r: self.r * dv,
            z: self.z * dv,
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            r: self.r + o.r,
            z: self.z + o.z,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            r: self.r - o.r,
            z: self.z - o.z,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            r: self.r * o.v + self.v * o.r,
            z: self.z * o.v + self.v * o.z,
        }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, k: f64) -> Dual {
        Dual {
            v: self.v * k,
            r: self.r * k,
            z: self.z * k,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Dual {
            v: q,
            r: (self.r - q * o.r) * inv,
            z: (self.z - q * o.z) * inv,
        }
    }
}

fn loop_dual(a: f64, rho: f64, z: f64) -> Option<(Dual, Dual)> {
    let c = MU0 / PI;
    let r = Dual {
        v: rho,
        r: 1.0,
        z: 0.0,
    };
    let zz = Dual {
        v: z,
        r: 0.0,
        z: 1.0,
    };
    let s = Dual::cst(a * a) + r * r + zz * zz;
    let alpha2 = s - r * (2.0 * a);
    let beta2 = s + r * (2.0 * a);
    if !(alpha2.v > 0.0) || alpha2.v < 1e-24 * a * a {
        return None;
    }
    let beta = beta2.sqrt();
    let m = Dual::cst(1.0) - alpha2 / beta2;
    let mv = m.v.clamp(0.0, 1.0);
    let (kv, ev) = complete_elliptic(mv);
    let (dk, de) = if mv < 1e-10 {
        (PI / 8.0, -PI / 8.0)
    } else {
        (
            (ev - (1.0 - mv) * kv) / (2.0 * mv * (1.0 - mv)),
            (ev - kv) / (2.0 * mv),
        )
    };
    let k = m.chain(kv, dk);
    let e = m.chain(ev, de);
    let denom = alpha2 * beta * 2.0;
    let b_rho = zz * (s * e - alpha2 * k) / (denom * r) * c;
    let b_z = ((Dual::cst(2.0 * a * a) - s) * e + alpha2 * k) / denom * c;
    Some((b_rho, b_z))
}


/// Tabulated ring cross-section for fast repeated evaluation.
///
/// Stores the two-loop field per ampere minus the field of two straight
/// wires through the same cross-section points. The remainder is smooth near
/// the zero and is interpolated with bicubic Hermite patches; the straight-wire
/// part is added back in closed form. Points outside the table use the
/// closed-form loop field.
#[derive(Debug, Clone)]
pub struct RingFieldTable {
    geometry: RingGeometry,
    rho0: f64,
    z0: f64,
    h: f64,
    n: usize,
    /// Per node: [R_rho, dR_rho/drho, dR_rho/dz, d2R_rho, R_z, ...].
    nodes: Vec<[f64; 8]>,
}

impl RingFieldTable {
    /// Table over `radius ± half_width` by `± half_width` with spacing `h`.
    pub fn new(geometry: &RingGeometry, half_width: f64, h: f64) -> Result<Self> {
        geometry.validate()?;
        if !(h > 0.0) || !(half_width > h) || half_width >= geometry.radius {
            return Err(Error::invalid("ring table needs 0 < h < half width < R"));
        }
        let n = (2.0 * half_width / h).ceil() as usize + 1;
        let rho0 = geometry.radius - half_width;
        let z0 = -half_width;
        let eps = 1e-3 * h;
        let mut nodes = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                let rho = rho0 + i as f64 * h;
                let z = z0 + k as f64 * h;
                let at = |dz: f64| -> [Dual; 2] {
                    let (r, zz) = residual(geometry, rho, z + dz);
                    [r, zz]
                };
                let c = at(0.0);
                let up = at(eps);
                let dn = at(-eps);
                let mut node = [0.0; 8];
                for (m, comp) in c.iter().enumerate() {
                    node[4 * m] = comp.v;
                    node[4 * m + 1] = comp.r;
                    node[4 * m + 2] = comp.z;
                    node[4 * m + 3] = (up[m].r - dn[m].r) / (2.0 * eps);
                }
                if node.iter().any(|v| !v.is_finite()) {
                    // nodes on a wire: never used by trapped atoms
                    node = [0.0; 8];
                }
                nodes.push(node);
            }
        }
        Ok(RingFieldTable {
            geometry: *geometry,
            rho0,
            z0,
            h,
            n,
            nodes,
        })
    }

    /// Default table: ±0.65 d around the wire circle at 4 µm spacing.
    pub fn for_ring(geometry: &RingGeometry) -> Result<Self> {
        let hw = 0.65 * geometry.separation;
        Self::new(geometry, hw, (hw / 150.0).min(4e-6))
    }

    pub fn geometry(&self) -> &RingGeometry {
        &self.geometry
    }

    /// Same as [`RingGeometry::field_per_amp`] within interpolation error.
    pub fn field_per_amp(&self, p: &Vec3) -> Result<(Vec3, Mat3)> {
        let g = &self.geometry;
        let n_ax = g.frame.axis;
        let rel = p - g.frame.center;
        let z = n_ax.dot(&rel);
        let rvec = rel - n_ax * z;
        let rho = rvec.norm();
        let u = (rho - self.rho0) / self.h;
        let w = (z - self.z0) / self.h;
        let last = (self.n - 1) as f64;
        if !(u >= 0.0 && u < last && w >= 0.0 && w < last) || rho == 0.0 {
            return g.field_per_amp(p);
        }
        let (i, k) = (u as usize, w as usize);
        let (tu, tw) = (u - i as f64, w - k as f64);
        let mut br = [0.0; 3];
        let mut bz = [0.0; 3];
        let corners = [
            &self.nodes[i * self.n + k],
            &self.nodes[(i + 1) * self.n + k],
            &self.nodes[i * self.n + k + 1],
            &self.nodes[(i + 1) * self.n + k + 1],
        ];
        for (m, out) in [&mut br, &mut bz].into_iter().enumerate() {
            *out = bicubic(&corners, 4 * m, tu, tw, self.h);
        }
        // add back the straight-wire part
        for zc in g.loop_offsets() {
            let (wr, wz) = straight_wire(rho - g.radius, z - zc);
            for c in 0..3 {
                br[c] += wr[c];
                bz[c] += wz[c];
            }
        }
        let rhat = rvec / rho;
        let b = rhat * br[0] + n_ax * bz[0];
        let perp = Mat3::identity() - n_ax * n_ax.transpose() - rhat * rhat.transpose();
        let j = rhat * (rhat.transpose() * br[1] + n_ax.transpose() * br[2])
            + perp * (br[0] / rho)
            + n_ax * (rhat.transpose() * bz[1] + n_ax.transpose() * bz[2]);
        Ok((b, j))
    }
}

/// Straight wire along -φ̂ ... in the (rho, z) half-plane: current direction
/// matching the loops, value and (d/drho, d/dz) of (B_rho, B_z) per ampere.
fn straight_wire(x: f64, y: f64) -> ([f64; 3], [f64; 3]) {
    // loop current circulates along +φ; in the (rho, z) plane with φ̂ = z × rho
    // pointing out of it, a straight wire along φ̂ gives B = c (-y, x) / r^2
    // with x = rho - a, y = z - zc, so B_rho = -c y / r^2, B_z = c x / r^2.
    let c = MU0 / (2.0 * PI);
    let r2 = x * x + y * y;
    let r4 = r2 * r2;
    let br = [-c * y / r2, c * 2.0 * x * y / r4, -c * (x * x - y * y) / r4];
    let bz = [c * x / r2, c * (y * y - x * x) / r4, -c * 2.0 * x * y / r4];
    (br, bz)
}

fn residual(g: &RingGeometry, rho: f64, z: f64) -> (Dual, Dual) {
    let mut r = Dual::cst(0.0);
    let mut zz = Dual::cst(0.0);
    for zc in g.loop_offsets() {
        match loop_dual(g.radius, rho, z - zc) {
            Some((a, b)) => {
                let (wr, wz) = straight_wire(rho - g.radius, z - zc);
                r = r + a
                    - Dual {
                        v: wr[0],
                        r: wr[1],
                        z: wr[2],
                    };
                zz = zz + b
                    - Dual {
                        v: wz[0],
                        r: wz[1],
                        z: wz[2],
                    };
            }
            None => return (Dual::cst(f64::NAN), Dual::cst(f64::NAN)),
        }
    }
    (r, zz)
}

/// Bicubic Hermite patch on a unit cell. Returns value and the two physical
/// partial derivatives.
fn bicubic(c: &[&[f64; 8]; 4], off: usize, tu: f64, tw: f64, h: f64) -> [f64; 3] {
    let h00 = |t: f64| (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    let h10 = |t: f64| t * (1.0 - t) * (1.0 - t);
    let h01 = |t: f64| t * t * (3.0 - 2.0 * t);
    let h11 = |t: f64| t * t * (t - 1.0);
    let d00 = |t: f64| 6.0 * t * t - 6.0 * t;
    let d10 = |t: f64| 3.0 * t * t - 4.0 * t + 1.0;
    let d01 = |t: f64| 6.0 * t - 6.0 * t * t;
    let d11 = |t: f64| 3.0 * t * t - 2.0 * t;
    // corner order: (0,0), (1,0), (0,1), (1,1) in (u, w)
    let bu = [[h00(tu), h10(tu)], [h01(tu), h11(tu)]];
    let bw = [[h00(tw), h10(tw)], [h01(tw), h11(tw)]];
    let du = [[d00(tu), d10(tu)], [d01(tu), d11(tu)]];
    let dw = [[d00(tw), d10(tw)], [d01(tw), d11(tw)]];
    let mut v = 0.0;
    let mut gu = 0.0;
    let mut gw = 0.0;
    for (idx, node) in c.iter().enumerate() {
        let (a, b) = (idx & 1, idx >> 1);
        // values scaled to unit cell: f, h f_u, h f_w, h^2 f_uw
        let f = [
            node[off],
            node[off + 1] * h,
            node[off + 2] * h,
            node[off + 3] * h * h,
        ];
        let terms = [(0, 0, f[0]), (1, 0, f[1]), (0, 1, f[2]), (1, 1, f[3])];
        for (ku, kw, val) in terms {
            v += val * bu[a][ku] * bw[b][kw];
            gu += val * du[a][ku] * bw[b][kw];
            gw += val * bu[a][ku] * dw[b][kw];
        }
    }
    [v, gu / h, gw / h]
}
