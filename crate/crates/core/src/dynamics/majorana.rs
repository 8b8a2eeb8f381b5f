use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::integrator::acceleration;
use super::spin::{rotate, FlipEvent, SpinConfig, SpinTracker};
use super::state::{AtomState, LossCause};
use crate::magnetics::{FieldSource, Gravity, GuideGeometry, TrapCharacterization, TwoWireGuide};
use crate::rng::atom_rng;
use crate::{Error, Mat3, PhysicalConstants, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MajoranaMethod {
    /// Removal on first entry into the loss radius around the zero line.
    LossDisk,
    /// Removal on a confirmed classical spin flip.
    SpinOracle,
}

/// Transverse acceleration `constant + amplitude sin(2π t / period)` felt in
/// the guide frame, e.g. centrifugal and gravity components of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseForcing {
    pub constant: Vec3,
    pub amplitude: Vec3,
    pub period: f64,
}

impl TransverseForcing {
    pub fn none() -> Self {
        TransverseForcing {
            constant: Vec3::zeros(),
            amplitude: Vec3::zeros(),
            period: 1.0,
        }
    }

    fn at(&self, t: f64) -> Vec3 {
        self.constant + self.amplitude * (2.0 * PI * t / self.period).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransverseProfile {
    /// Boltzmann distribution in the linear well at the cloud temperature.
    Thermal,
    /// Gaussian spread about the zero (m), independent of the temperature.
    Gaussian { sigma: f64 },
}

/// Transverse Monte Carlo cloud in a straight two-wire guide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajoranaCloud {
    pub n: usize,
    /// Transverse velocity temperature (K).
    pub temperature: f64,
    pub profile: TransverseProfile,
    pub forcing: TransverseForcing,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    /// Spin-oracle method: precess explicitly within this many loss radii of
    /// the zero; elsewhere the spin follows the field adiabatically.
    pub spin_zone: f64,
    /// Mean time between transverse velocity redraws from the cloud
    /// temperature, standing in for mixing that the bare cross-section lacks.
    pub mixing_time: Option<f64>,
    /// Draw initial states and velocity redraws only below the trap depth,
    /// so the cloud holds bound atoms only.
    pub bound: bool,
}

impl Default for MajoranaCloud {
    fn default() -> Self {
        MajoranaCloud {
            n: 1000,
            temperature: 57e-6,
            profile: TransverseProfile::Thermal,
            forcing: TransverseForcing::none(),
            duration: 1.0,
            dt: 1e-5,
            seed: 1,
            spin_zone: 20.0,
            mixing_time: None,
            bound: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEstimate {
    pub tau: f64,
    pub sigma: f64,
    pub n: usize,
    pub majorana_losses: usize,
    pub other_losses: usize,
    /// Surviving fraction against Majorana loss at regular times.
    pub survival: Vec<(f64, f64)>,
}

/// Maximum-likelihood 1/e time for exponentially distributed loss times
/// with right censoring: total exposure divided by the number of losses.
/// Returns `(tau, sigma)` with `sigma = tau / sqrt(k)`; no losses give
/// `(inf, inf)`.
pub fn exponential_lifetime(exposure: &[(f64, bool)]) -> (f64, f64) {
    let k = exposure.iter().filter(|e| e.1).count();
    let total: f64 = exposure.iter().map(|e| e.0).sum();
    if k == 0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let tau = total / k as f64;
    (tau, tau / (k as f64).sqrt())
}

trait Ln1pNeg {
    fn ln_1p_neg(self) -> f64;
}

impl Ln1pNeg for f64 {
    /// `ln(1 - u)` for `u` in [0, 1).
    fn ln_1p_neg(self) -> f64 {
        (-self).ln_1p()
    }
}

/// Minimum `|B|` along the straight segment from `b0` to `b1`.
pub(crate) fn min_norm_on_segment(b0: &Vec3, b1: &Vec3) -> f64 {
    let d = b1 - b0;
    let dd = d.norm_squared();
    if dd == 0.0 {
        return b0.norm();
    }
    let s = (-b0.dot(&d) / dd).clamp(0.0, 1.0);
    (b0 + d * s).norm()
}

/// Local cone slope `|∇|B||` near a zero from the field Jacobian.
pub(crate) fn local_gradient(j: &Mat3) -> f64 {
    j.norm() / 2f64.sqrt()
}

/// Monte Carlo Majorana lifetime of a thermal cloud in the guide's
/// transverse potential.
pub fn majorana_lifetime_estimate(
    cloud: &MajoranaCloud,
    guide: &GuideGeometry,
    trap: &TrapCharacterization,
    constants: &PhysicalConstants,
    method: MajoranaMethod,
) -> Result<LifetimeEstimate> {
    if cloud.n < 100 {
        return Err(Error::Statistics(format!(
            "{} atoms is too few for a lifetime estimate (need 100)",
            cloud.n
        )));
    }
    if !(cloud.temperature > 0.0)
        || matches!(cloud.profile, TransverseProfile::Gaussian { sigma } if !(sigma >= 0.0))
    {
        return Err(Error::invalid(
            "cloud needs positive temperature and non-negative size",
        ));
    }
    if matches!(cloud.mixing_time, Some(tm) if !(tm > 0.0)) {
        return Err(Error::invalid("mixing time must be positive"));
    }
    if !(cloud.dt > 0.0) || !(cloud.duration > cloud.dt) || !(cloud.forcing.period > 0.0) {
        return Err(Error::invalid(
            "duration, dt and forcing period must be positive",
        ));
    }
    let b0 = trap.loss_radius;
    if b0 == 0.0 {
        return Ok(LifetimeEstimate {
            tau: f64::INFINITY,
            sigma: f64::INFINITY,
            n: cloud.n,
            majorana_losses: 0,
            other_losses: 0,
            survival: vec![(0.0, 1.0), (cloud.duration, 1.0)],
        });
    }
    let source = TwoWireGuide::new(*guide)?;
    let spin_cfg = SpinConfig::from_constants(constants);
    let outcomes: Vec<Result<(f64, Option<LossCause>)>> = (0..cloud.n)
        .into_par_iter()
        .map(|i| {
            run_atom(
                i as u64, cloud, guide, &source, trap, constants, &spin_cfg, method,
            )
        })
        .collect();
    let mut exposure = Vec::with_capacity(cloud.n);
    let mut other = 0;
    let mut failures = 0;
    for o in outcomes {
        match o {
            Ok((t, cause)) => {
                let maj = cause == Some(LossCause::Majorana);
                if cause.is_some() && !maj {
                    other += 1;
                }
                exposure.push((t, maj));
            }
            Err(_) => failures += 1,
        }
    }
    if failures * 2 > cloud.n {
        return Err(Error::numeric(format!(
            "{failures} of {} trajectories failed",
            cloud.n
        )));
    }
    let (tau, sigma) = exponential_lifetime(&exposure);
    let k = exposure.iter().filter(|e| e.1).count();
    let mut loss_times: Vec<f64> = exposure.iter().filter(|e| e.1).map(|e| e.0).collect();
    loss_times.sort_by(f64::total_cmp);
    let survival = (0..=20)
        .map(|i| {
            let t = cloud.duration * i as f64 / 20.0;
            let lost = loss_times.partition_point(|&x| x <= t);
            (t, 1.0 - lost as f64 / exposure.len() as f64)
        })
        .collect();
    Ok(LifetimeEstimate {
        tau,
        sigma,
        n: exposure.len(),
        majorana_losses: k,
        other_losses: other,
        survival,
    })
}

const MAX_REDRAWS: usize = 1000;

#[allow(clippy::too_many_arguments)]
fn run_atom(
    index: u64,
    cloud: &MajoranaCloud,
    guide: &GuideGeometry,
    source: &TwoWireGuide,
    trap: &TrapCharacterization,
    constants: &PhysicalConstants,
    spin_cfg: &SpinConfig,
    method: MajoranaMethod,
) -> Result<(f64, Option<LossCause>)> {
    let mut rng = atom_rng(cloud.seed, index);
    let xh = guide.separation_axis.cross(&guide.direction);
    let yh = guide.separation_axis;
    let sv = (constants.kb() * cloud.temperature / constants.mass()).sqrt();
    let nv = Normal::new(0.0, sv).map_err(|e| Error::invalid(e.to_string()))?;
    let energy = |p: &Vec3, v: &Vec3| -> Result<f64> {
        Ok(constants.mu_m() * source.field(p, 0.0)?.norm()
            + 0.5 * constants.mass() * v.norm_squared())
    };
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<(Vec3, Vec3)> {
        let (dx, dy) = match cloud.profile {
            TransverseProfile::Gaussian { sigma } => {
                let np = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
                (np.sample(rng), np.sample(rng))
            }
            TransverseProfile::Thermal => {
                // r e^{-r/a} dr: sum of two exponentials
                let a =
                    constants.kb() * cloud.temperature / (constants.mu_m() * trap.gradient_center);
                let r = -a * (rng.random::<f64>().ln_1p_neg() + rng.random::<f64>().ln_1p_neg());
                let th = rng.random_range(0.0..2.0 * PI);
                (r * th.cos(), r * th.sin())
            }
        };
        let p = trap.zero + xh * dx + yh * dy;
        let v = xh * nv.sample(rng) + yh * nv.sample(rng);
        Ok((p, v))
    };
    let mut tries = 0;
    let (p, v) = loop {
        let (p, v) = draw(&mut rng)?;
        if !cloud.bound || energy(&p, &v)? < trap.depth_joule {
            break (p, v);
        }
        tries += 1;
        if tries > MAX_REDRAWS {
            return Err(Error::invalid(
                "cloud temperature leaves almost no bound atoms",
            ));
        }
    };
    let gravity = Gravity::off();
    let (mut acc, mut b, _) = acceleration(&p, 0.0, source, constants, &gravity)?;
    acc += cloud.forcing.at(0.0);
    let bh = b.try_normalize(0.0).unwrap_or(xh);
    let tilt_axis = bh.cross(&Vec3::new(0.3, 0.5, 0.8)).normalize();
    let spin0 = rotate(
        &rotate(&-bh, &tilt_axis, 0.05),
        &bh,
        rng.random_range(0.0..2.0 * PI),
    );
    let mut s = AtomState::new(p, v, spin0, 0.0)?;
    let mut tracker = SpinTracker::default();
    let escape = guide.separation;
    let b0 = trap.loss_radius;
    let n_steps = (cloud.duration / cloud.dt).ceil() as u64;
    for step in 1..=n_steps {
        let t_prev = s.t;
        let dt = cloud.dt.min(cloud.duration - t_prev);
        let b_prev = b;
        let p_prev = s.position;
        let v_half = s.velocity + acc * (0.5 * dt);
        s.position += v_half * dt;
        s.t = if step == n_steps {
            cloud.duration
        } else {
            t_prev + dt
        };
        let (a_new, b_new, j_new) = acceleration(&s.position, s.t, source, constants, &gravity)?;
        acc = a_new + cloud.forcing.at(s.t);
        s.velocity = v_half + acc * (0.5 * dt);
        b = b_new;
        if let Some(tm) = cloud.mixing_time {
            if rng.random::<f64>() < dt / tm {
                for _ in 0..MAX_REDRAWS {
                    let v = xh * nv.sample(&mut rng) + yh * nv.sample(&mut rng);
                    if !cloud.bound || energy(&s.position, &v)? < trap.depth_joule {
                        s.velocity = v;
                        break;
                    }
                }
            }
        }
        if (s.position - trap.zero).norm() > escape {
            return Ok((s.t, Some(LossCause::OverBarrier)));
        }
        let g = local_gradient(&j_new);
        let bmin = min_norm_on_segment(&b_prev, &b);
        match method {
            MajoranaMethod::LossDisk => {
                if bmin < g * b0 {
                    return Ok((s.t, Some(LossCause::Majorana)));
                }
            }
            MajoranaMethod::SpinOracle => {
                let step = SpinStep {
                    p_prev,
                    p_new: s.position,
                    b_prev,
                    b_new: b,
                    t_prev,
                    dt,
                };
                let explicit = bmin < g * b0 * cloud.spin_zone;
                if let Some(ev) =
                    hybrid_spin_step(source, spin_cfg, &mut s.spin, &mut tracker, &step, explicit)?
                {
                    return Ok((ev.t, Some(LossCause::Majorana)));
                }
            }
        }
    }
    Ok((cloud.duration, None))
}

/// Endpoints of one motion step.
pub(crate) struct SpinStep {
    pub p_prev: Vec3,
    pub p_new: Vec3,
    pub b_prev: Vec3,
    pub b_new: Vec3,
    pub t_prev: f64,
    pub dt: f64,
}

/// Advance the spin over one motion step. With `explicit` the spin precesses
/// about the field sampled along the straight path; otherwise it follows
/// the field direction adiabatically.
pub(crate) fn hybrid_spin_step<S: FieldSource + ?Sized>(
    source: &S,
    cfg: &SpinConfig,
    spin: &mut Vec3,
    tracker: &mut SpinTracker,
    step: &SpinStep,
    explicit: bool,
) -> Result<Option<FlipEvent>> {
    let dt = step.dt;
    if explicit {
        let bmax = step.b_prev.norm().max(step.b_new.norm());
        let n = ((cfg.gamma * bmax * dt / cfg.target_angle).ceil() as usize).max(1);
        let h = dt / n as f64;
        for k in 0..n {
            let f = (k as f64 + 0.5) / n as f64;
            let pk = step.p_prev + (step.p_new - step.p_prev) * f;
            let tk = step.t_prev + f * dt;
            let bk = source.field(&pk, tk)?;
            let bn = bk.norm();
            if bn > 0.0 {
                let axis = bk / bn;
                let ang = cfg.gamma * bn * h;
                *spin = rotate(spin, &axis, ang);
                if let Some(ev) = tracker.update(tk, &pk, spin.dot(&axis), ang, cfg.confirm_phase) {
                    return Ok(Some(ev));
                }
            }
        }
        Ok(None)
    } else {
        *spin = transport(spin, &step.b_prev, &step.b_new);
        let bn = step.b_new.norm();
        if bn == 0.0 {
            return Ok(None);
        }
        let t = step.t_prev + dt;
        Ok(tracker.update(
            t,
            &step.p_new,
            spin.dot(&(step.b_new / bn)),
            cfg.gamma * bn * dt,
            cfg.confirm_phase,
        ))
    }
}

/// Rotate `s` by the rotation taking the direction of `b0` to that of `b1`
/// (adiabatic following).
pub(crate) fn transport(s: &Vec3, b0: &Vec3, b1: &Vec3) -> Vec3 {
    let (n0, n1) = (b0.norm(), b1.norm());
    if n0 == 0.0 || n1 == 0.0 {
        return *s;
    }
    let (u0, u1) = (b0 / n0, b1 / n1);
    let axis = u0.cross(&u1);
    let sin = axis.norm();
    if sin < 1e-300 {
        return *s;
    }
    let angle = sin.atan2(u0.dot(&u1));
    rotate(s, &(axis / sin), angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetics::{characterize_trap, CrossSection, TrapOptions};

    #[test]
    fn censored_mle() {
        let (tau, sigma) = exponential_lifetime(&[(1.0, true), (2.0, false), (3.0, true)]);
        assert_eq!(tau, 3.0);
        assert!((sigma - 3.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(exponential_lifetime(&[(1.0, false)]).0.is_infinite());
    }

    #[test]
    fn zero_loss_radius_means_no_loss() {
        let c = PhysicalConstants::rb87();
        let g = GuideGeometry::default();
        let opts = TrapOptions {
            loss_radius_override: Some(0.0),
            ..TrapOptions::default()
        };
        let trap = characterize_trap(&CrossSection::Guide(g), &c, c.kb() * 57e-6, &opts).unwrap();
        let est = majorana_lifetime_estimate(
            &MajoranaCloud::default(),
            &g,
            &trap,
            &c,
            MajoranaMethod::LossDisk,
        )
        .unwrap();
        assert!(est.tau.is_infinite());
    }

    #[test]
    fn too_few_atoms() {
        let c = PhysicalConstants::rb87();
        let g = GuideGeometry::default();
        let trap = characterize_trap(
            &CrossSection::Guide(g),
            &c,
            c.kb() * 57e-6,
            &TrapOptions::default(),
        )
        .unwrap();
        let cloud = MajoranaCloud {
            n: 99,
            ..MajoranaCloud::default()
        };
        assert!(matches!(
            majorana_lifetime_estimate(&cloud, &g, &trap, &c, MajoranaMethod::LossDisk),
            Err(Error::Statistics(_))
        ));
    }

    #[test]
    fn transport_maps_directions() {
        let s = transport(&Vec3::x(), &Vec3::x(), &Vec3::y());
        assert!((s - Vec3::y()).norm() < 1e-15);
        assert!(
            (min_norm_on_segment(&Vec3::new(-1.0, 1.0, 0.0), &Vec3::new(1.0, 1.0, 0.0)) - 1.0)
                .abs()
                < 1e-15
        );
    }
}
