use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use super::state::AtomState;
use crate::magnetics::{FieldSource, GuideGeometry, QuadrupoleGuide};
use crate::rng::atom_rng;
use crate::{Error, PhysicalConstants, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinConfig {
    /// Precession rate per tesla, `2 mu_m / hbar` by default (rad s^-1 T^-1).
    pub gamma: f64,
    /// Adaptive substeps aim for this rotation per substep (rad).
    pub target_angle: f64,
    /// Larger rotations per substep are refused (rad).
    pub max_angle: f64,
    pub fixed_substeps: Option<u32>,
    /// Larmor phase the reversed projection must persist for (rad).
    pub confirm_phase: f64,
}

impl SpinConfig {
    pub fn from_constants(c: &PhysicalConstants) -> Self {
        SpinConfig {
            gamma: 2.0 * c.mu_m() / c.hbar(),
            target_angle: 0.1,
            max_angle: 0.5,
            fixed_substeps: None,
            confirm_phase: 20.0 * PI,
        }
    }
}

/// Rotate `s` about the unit vector `k` by `angle` and renormalize.
pub fn rotate(s: &Vec3, k: &Vec3, angle: f64) -> Vec3 {
    let (sin, cos) = angle.sin_cos();
    let r = s * cos + k.cross(s) * sin + k * (k.dot(s) * (1.0 - cos));
    r / r.norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipEvent {
    /// Time the projection on the field first turned positive.
    pub t: f64,
    pub position: Vec3,
}

/// Detects a confirmed flip: `S·B̂ > 0` held for `confirm_phase` of Larmor phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinTracker {
    since: Option<(f64, Vec3)>,
    phase: f64,
    pub flip: Option<FlipEvent>,
}

impl SpinTracker {
    pub fn update(
        &mut self,
        t: f64,
        p: &Vec3,
        projection: f64,
        dphase: f64,
        confirm_phase: f64,
    ) -> Option<FlipEvent> {
        if self.flip.is_some() {
            return None;
        }
        if projection > 0.0 {
            match self.since {
                None => {
                    self.since = Some((t, *p));
                    self.phase = 0.0;
                }
                Some((t0, p0)) => {
                    self.phase += dphase;
                    if self.phase > confirm_phase {
                        self.flip = Some(FlipEvent {
                            t: t0,
                            position: p0,
                        });
                        return self.flip;
                    }
                }
            }
        } else {
            self.since = None;
            self.phase = 0.0;
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinHistory {
    /// Spin at each trajectory sample.
    pub spins: Vec<Vec3>,
    pub flips: Vec<FlipEvent>,
    pub substeps: u64,
    pub max_norm_error: f64,
}

/// Integrate `dS/dt = -gamma S × B` along a sampled trajectory. Positions
/// between samples are interpolated linearly in time.
pub fn precess_spin<S: FieldSource + ?Sized>(
    samples: &[AtomState],
    source: &S,
    cfg: &SpinConfig,
    s0: Vec3,
) -> Result<SpinHistory> {
    if samples.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    for w in samples.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(Error::invalid("trajectory samples must be time ordered"));
        }
    }
    if !(cfg.gamma > 0.0) || !(cfg.target_angle > 0.0) || !(cfg.max_angle >= cfg.target_angle) {
        return Err(Error::invalid(
            "spin config needs gamma > 0 and 0 < target angle <= max angle",
        ));
    }
    if cfg.fixed_substeps == Some(0) {
        return Err(Error::invalid("spin substep ratio must be at least 1"));
    }
    let mut s = s0
        .try_normalize(0.0)
        .ok_or_else(|| Error::invalid("initial spin is zero"))?;
    let mut spins = vec![s];
    let mut tracker = SpinTracker::default();
    let mut flips = Vec::new();
    let mut substeps = 0u64;
    let mut max_err: f64 = 0.0;
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let span = b.t - a.t;
        let at = |f: f64| a.position + (b.position - a.position) * f;
        let n = match cfg.fixed_substeps {
            Some(n) => n as usize,
            None => {
                let bmax = [0.0, 0.5, 1.0]
                    .iter()
                    .map(|&f| source.field(&at(f), a.t + f * span).map(|v| v.norm()))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                ((cfg.gamma * bmax * span / cfg.target_angle).ceil() as usize).max(1)
            }
        };
        let h = span / n as f64;
        for i in 0..n {
            let f = (i as f64 + 0.5) / n as f64;
            let t = a.t + f * span;
            let p = at(f);
            let bv = source.field(&p, t)?;
            let bn = bv.norm();
            let angle = cfg.gamma * bn * h;
            if angle > cfg.max_angle {
                return Err(Error::Accuracy(format!(
                    "spin substep rotates {angle:.3} rad at t = {t} s; use a smaller spin step"
                )));
            }
            if bn > 0.0 {
                let k = bv / bn;
                s = rotate(&s, &k, angle);
                max_err = max_err.max((s.norm() - 1.0).abs());
                if let Some(ev) = tracker.update(t, &p, s.dot(&k), angle, cfg.confirm_phase) {
                    flips.push(ev);
                }
            }
            substeps += 1;
        }
        spins.push(s);
    }
    Ok(SpinHistory {
        spins,
        flips,
        substeps,
        max_norm_error: max_err,
    })
}

/// Rotation rate of the local field direction seen by the moving atom,
/// divided by `mu_m |B| / hbar`. Zero field gives `f64::INFINITY`.
pub fn adiabaticity_ratio<S: FieldSource + ?Sized>(
    state: &AtomState,
    source: &S,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let (b, j) = source.field_jacobian(&state.position, state.t)?;
    let bn = b.norm();
    if bn == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ht = 1e-7;
    let dbdt_explicit = (source.field(&state.position, state.t + ht)?
        - source.field(&state.position, state.t - ht)?)
        / (2.0 * ht);
    let dbdt = j * state.velocity + dbdt_explicit;
    let bh = b / bn;
    let rate = (dbdt - bh * bh.dot(&dbdt)).norm() / bn;
    Ok(rate / (constants.mu_m() * bn / constants.hbar()))
}

/// Initial tilt of the spin away from anti-alignment in
/// [`straight_pass_flip_fraction`] (rad).
pub const PASS_TILT: f64 = 0.05;

/// Fraction of straight transverse passes through the quadrupole field of
/// `guide` that end in a confirmed flip. Each pass runs from `-half_length`
/// to `half_length` at impact parameter `b` and speed `v`, starting with the
/// spin tilted by [`PASS_TILT`] from `-B̂` at a random phase.
pub fn straight_pass_flip_fraction(
    guide: &GuideGeometry,
    cfg: &SpinConfig,
    b: f64,
    v: f64,
    half_length: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(v > 0.0) || !(half_length > b.abs()) || samples == 0 {
        return Err(Error::invalid(
            "pass needs v > 0, half length beyond b and at least one sample",
        ));
    }
    let source = QuadrupoleGuide(*guide);
    let xh = guide.separation_axis.cross(&guide.direction);
    let yh = guide.separation_axis;
    let n = 400;
    let path: Vec<AtomState> = (0..=n)
        .map(|i| {
            let x = -half_length + 2.0 * half_length * i as f64 / n as f64;
            let p = guide.point + xh * x + yh * b;
            AtomState::new(p, xh * v, Vec3::z(), (x + half_length) / v)
        })
        .collect::<Result<_>>()?;
    let b_start = source.field(&path[0].position, 0.0)?;
    let bh = b_start
        .try_normalize(0.0)
        .ok_or_else(|| Error::invalid("pass starts on the zero"))?;
    let e1 = bh
        .cross(&guide.direction)
        .try_normalize(1e-12)
        .unwrap_or_else(|| bh.cross(&Vec3::x()).normalize());
    let e2 = bh.cross(&e1);
    let flips = (0..samples)
        .into_par_iter()
        .map(|i| {
            let phi = atom_rng(seed, i as u64).random::<f64>() * 2.0 * PI;
            let s0 = -bh * PASS_TILT.cos() + (e1 * phi.cos() + e2 * phi.sin()) * PASS_TILT.sin();
            precess_spin(&path, &source, cfg, s0).map(|h| !h.flips.is_empty())
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(flips.iter().filter(|&&f| f).count() as f64 / samples as f64)
}
