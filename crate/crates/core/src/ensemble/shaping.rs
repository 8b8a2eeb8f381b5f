use serde::{Deserialize, Serialize};

use crate::analysis::{median, robust_sigma, FWHM_PER_SIGMA};
use crate::dynamics::{AtomState, LossCause};
use crate::magnetics::RingFrame;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeMode {
    Keep,
    Remove,
}

/// Azimuthal window centred on the cloud, `fraction` of its FWHM wide.
/// A fraction of 1 or more covers the whole cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingWindow {
    pub fraction: f64,
    pub mode: ShapeMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeOutcome {
    /// Azimuth of the cloud centre (rad).
    pub center: f64,
    /// Arc-length FWHM (m).
    pub fwhm: f64,
    pub kept: usize,
    pub removed: usize,
    /// Nothing survived.
    pub empty: bool,
}

/// Arc-length positions of `states` on a circle of `radius`, relative to the
/// circular mean azimuth of the alive ones. Returns `(mean azimuth, offsets)`;
/// lost atoms get NaN.
pub fn azimuthal_offsets(states: &[AtomState], frame: &RingFrame, radius: f64) -> (f64, Vec<f64>) {
    let phis: Vec<f64> = states
        .iter()
        .map(|s| frame.to_cylindrical(&s.position).1)
        .collect();
    let (mut sx, mut sy) = (0.0, 0.0);
    for (s, phi) in states.iter().zip(&phis) {
        if s.is_alive() {
            sx += phi.cos();
            sy += phi.sin();
        }
    }
    let mean = sy.atan2(sx);
    let offsets = states
        .iter()
        .zip(&phis)
        .map(|(s, phi)| {
            if s.is_alive() {
                radius * crate::magnetics::wrap_angle(phi - mean)
            } else {
                f64::NAN
            }
        })
        .collect();
    (mean, offsets)
}

/// Cut the azimuthal distribution of the alive atoms with `window` centred
/// on their median position. Atoms cut away are marked removed by shaping.
pub fn shape_velocity(
    states: &mut [AtomState],
    frame: &RingFrame,
    radius: f64,
    window: &ShapingWindow,
) -> Result<ShapeOutcome> {
    if !(window.fraction >= 0.0) || !window.fraction.is_finite() {
        return Err(Error::invalid(
            "shaping fraction must be finite and non-negative",
        ));
    }
    let (mean, offsets) = azimuthal_offsets(states, frame, radius);
    let alive: Vec<f64> = offsets.iter().copied().filter(|o| o.is_finite()).collect();
    if alive.len() < 2 {
        return Err(Error::Statistics(
            "shaping needs at least two atoms in the ring".into(),
        ));
    }
    let c = median(&alive)?;
    let fwhm = FWHM_PER_SIGMA * robust_sigma(&alive)?;
    let half = 0.5 * window.fraction * fwhm;
    let (mut kept, mut removed) = (0, 0);
    for (s, o) in states.iter_mut().zip(&offsets) {
        if !s.is_alive() {
            continue;
        }
        let inside = window.fraction >= 1.0 || (o - c).abs() <= half;
        let keep = match window.mode {
            ShapeMode::Keep => inside,
            ShapeMode::Remove => !inside,
        };
        if keep {
            kept += 1;
        } else {
            let t = s.t;
            s.mark_lost(LossCause::RemovedByShaping, t);
            removed += 1;
        }
    }
    Ok(ShapeOutcome {
        center: mean + c / radius,
        fwhm,
        kept,
        removed,
        empty: kept == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;

    fn line_cloud(n: usize) -> Vec<AtomState> {
        let f = RingFrame::vertical();
        (0..n)
            .map(|i| {
                let phi = 0.3 + 0.2 * (i as f64 / (n - 1) as f64 - 0.5);
                AtomState::new(f.point(0.01, phi, 0.0), Vec3::zeros(), Vec3::z(), 0.0).unwrap()
            })
            .collect()
    }

    #[test]
    fn keep_everything_is_identity() {
        let mut s = line_cloud(101);
        let before = s.clone();
        let w = ShapingWindow {
            fraction: 1.0,
            mode: ShapeMode::Keep,
        };
        let o = shape_velocity(&mut s, &RingFrame::vertical(), 0.01, &w).unwrap();
        assert_eq!(o.removed, 0);
        assert_eq!(s, before);
    }

    #[test]
    fn keep_and_remove_partition() {
        let f = RingFrame::vertical();
        let w = |mode| ShapingWindow {
            fraction: 0.4,
            mode,
        };
        let mut a = line_cloud(201);
        let mut b = line_cloud(201);
        let oa = shape_velocity(&mut a, &f, 0.01, &w(ShapeMode::Keep)).unwrap();
        let ob = shape_velocity(&mut b, &f, 0.01, &w(ShapeMode::Remove)).unwrap();
        assert_eq!(oa.kept + ob.kept, 201);
        for (x, y) in a.iter().zip(&b) {
            assert_ne!(x.is_alive(), y.is_alive());
        }
        // uniform cloud: robust FWHM = 2.3548 * IQR / 1.349 of the arc span
        assert!((oa.center - 0.3).abs() < 1e-9);
    }
}
