use serde::{Deserialize, Serialize};

use super::state::{AtomState, LossCause};
use crate::magnetics::{norm_gradient, FieldSource, Gravity, RingFrame};
use crate::{Error, Mat3, PhysicalConstants, Result, Vec3};

/// Region outside which an atom is declared lost over the barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Unbounded,
    Sphere {
        center: Vec3,
        radius: f64,
    },
    /// Infinite cylinder around a line.
    Cylinder {
        point: Vec3,
        direction: Vec3,
        radius: f64,
    },
    /// Solid torus of minor radius `tube` around the circle of radius
    /// `radius` in the ring plane.
    Torus {
        frame: RingFrame,
        radius: f64,
        tube: f64,
    },
    /// Segment-capped cylinder from `start` to `end`.
    Capsule {
        start: Vec3,
        end: Vec3,
        radius: f64,
    },
    Union(Vec<Region>),
}

impl Region {
    pub fn contains(&self, p: &Vec3) -> bool {
        match self {
            Region::Unbounded => true,
            Region::Sphere { center, radius } => (p - center).norm() <= *radius,
            Region::Cylinder {
                point,
                direction,
                radius,
            } => {
                let rel = p - point;
                (rel - direction * direction.dot(&rel)).norm() <= *radius
            }
            Region::Torus {
                frame,
                radius,
                tube,
            } => {
                let (rho, z) = frame.rho_z(p);
                (rho - radius).hypot(z) <= *tube
            }
            Region::Capsule { start, end, radius } => {
                let l = end - start;
                let t = ((p - start).dot(&l) / l.norm_squared()).clamp(0.0, 1.0);
                (p - (start + l * t)).norm() <= *radius
            }
            Region::Union(rs) => rs.iter().any(|r| r.contains(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub max_steps: u64,
    /// Relative energy drift allowed per 0.1 s in static fields.
    pub energy_tolerance: f64,
    /// Fixed spin substeps per motion step; `None` picks them adaptively.
    pub spin_substeps: Option<u32>,
    /// Keep every n-th step in returned trajectories.
    pub sample_stride: usize,
    pub bounds: Region,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-6,
            max_steps: 100_000_000,
            energy_tolerance: 1e-6,
            spin_substeps: None,
            sample_stride: 100,
            bounds: Region::Unbounded,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("integrator dt must be positive"));
        }
        if self.spin_substeps == Some(0) {
            return Err(Error::invalid("spin substep ratio must be at least 1"));
        }
        if self.sample_stride == 0 || self.max_steps == 0 {
            return Err(Error::invalid(
                "sample stride and max steps must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Acceleration `-(mu_m/m) grad|B| + g`, together with the field and its
/// Jacobian at `p`.
pub fn acceleration<S: FieldSource + ?Sized>(
    p: &Vec3,
    t: f64,
    source: &S,
    constants: &PhysicalConstants,
    gravity: &Gravity,
) -> Result<(Vec3, Vec3, Mat3)> {
    let (b, j) = source.field_jacobian(p, t).map_err(|e| match e {
        Error::Singularity { position, reason } => Error::Numeric {
            message: format!("force undefined: {reason}"),
            diagnostics: vec![format!("position {position:?} m at t = {t} s")],
        },
        other => other,
    })?;
    let a = -norm_gradient(&b, &j) * (constants.mu_m() / constants.mass()) + gravity.acceleration;
    if !a.iter().all(|c| c.is_finite()) {
        return Err(Error::Numeric {
            message: "non-finite force".into(),
            diagnostics: vec![format!("position {p:?} m at t = {t} s")],
        });
    }
    Ok((a, b, j))
}

/// Kinetic plus magnetic plus gravitational energy (J).
pub fn total_energy<S: FieldSource + ?Sized>(
    s: &AtomState,
    source: &S,
    constants: &PhysicalConstants,
    gravity: &Gravity,
) -> Result<f64> {
    let b = source.field(&s.position, s.t)?;
    let m = constants.mass();
    Ok(0.5 * m * s.velocity.norm_squared()
        + constants.mu_m() * b.norm()
        + m * gravity.potential_per_mass(&s.position))
}

/// Force and field at the current position, reused by the next step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceCache {
    pub acc: Vec3,
    pub b: Vec3,
    pub j: Mat3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub b_start: Vec3,
    pub b_end: Vec3,
    pub j_end: Mat3,
    pub position_start: Vec3,
    pub dt: f64,
}

/// Velocity-Verlet stepper. One field evaluation per step.
pub struct Verlet<'a, S: FieldSource + ?Sized> {
    pub source: &'a S,
    pub constants: PhysicalConstants,
    pub gravity: Gravity,
}

impl<'a, S: FieldSource + ?Sized> Verlet<'a, S> {
    pub fn new(source: &'a S, constants: PhysicalConstants, gravity: Gravity) -> Self {
        Verlet {
            source,
            constants,
            gravity,
        }
    }

    pub fn prime(&self, s: &AtomState) -> Result<ForceCache> {
        let (acc, b, j) = acceleration(
            &s.position,
            s.t,
            self.source,
            &self.constants,
            &self.gravity,
        )?;
        Ok(ForceCache { acc, b, j })
    }

    pub fn step(&self, s: &mut AtomState, cache: &mut ForceCache, dt: f64) -> Result<StepRecord> {
        let start = s.position;
        let b_start = cache.b;
        let v_half = s.velocity + cache.acc * (0.5 * dt);
        s.position += v_half * dt;
        s.t += dt;
        let (acc, b, j) = acceleration(
            &s.position,
            s.t,
            self.source,
            &self.constants,
            &self.gravity,
        )?;
        s.velocity = v_half + acc * (0.5 * dt);
        *cache = ForceCache { acc, b, j };
        Ok(StepRecord {
            b_start,
            b_end: b,
            j_end: j,
            position_start: start,
            dt,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<AtomState>,
    pub final_state: AtomState,
    pub steps: u64,
}

/// Integrate from `s0` to `t_end`, sampling every `cfg.sample_stride` steps
/// (first and last states always included). Leaving `cfg.bounds` ends the
/// run with an over-barrier loss.
pub fn integrate_trajectory<S: FieldSource + ?Sized>(
    s0: &AtomState,
    source: &S,
    constants: &PhysicalConstants,
    gravity: &Gravity,
    cfg: &IntegratorConfig,
    t_end: f64,
) -> Result<Trajectory> {
    cfg.validate()?;
    s0.validate()?;
    if !s0.is_alive() {
        return Err(Error::invalid("initial state must be alive"));
    }
    if !(t_end > s0.t) {
        return Err(Error::invalid("t_end must be after the initial time"));
    }
    let v = Verlet::new(source, *constants, *gravity);
    let mut s = *s0;
    let mut cache = v.prime(&s)?;
    let mut samples = vec![s];
    let mut steps = 0u64;
    let t0 = s0.t;
    while s.t < t_end {
        if steps >= cfg.max_steps {
            return Err(Error::Numeric {
                message: format!("step limit {} reached", cfg.max_steps),
                diagnostics: vec![format!("t = {} s of {} s", s.t, t_end)],
            });
        }
        // land exactly on t_end
        let n_next = steps + 1;
        let t_next = t0 + n_next as f64 * cfg.dt;
        let dt = if t_next >= t_end - 1e-9 * cfg.dt {
            t_end - s.t
        } else {
            t_next - s.t
        };
        v.step(&mut s, &mut cache, dt)?;
        steps = n_next;
        if !cfg.bounds.contains(&s.position) {
            s.mark_lost(LossCause::OverBarrier, s.t);
            break;
        }
        if steps.is_multiple_of(cfg.sample_stride as u64) && s.t < t_end {
            samples.push(s);
        }
    }
    samples.push(s);
    Ok(Trajectory {
        samples,
        final_state: s,
        steps,
    })
}
