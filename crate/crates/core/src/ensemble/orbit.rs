use std::f64::consts::PI;

use crate::magnetics::{Gravity, RingFrame};
use crate::{Error, Result, Vec3};

/// Speed at `p` for an atom moving with `v_ref` at `p_ref` under gravity alone.
pub fn speed_at(v_ref: f64, p_ref: &Vec3, p: &Vec3, gravity: &Gravity) -> Option<f64> {
    let v2 = v_ref * v_ref + 2.0 * gravity.acceleration.dot(&(p - p_ref));
    (v2 > 0.0).then(|| v2.sqrt())
}

/// Period of a circular orbit of radius `radius` in `frame` for an atom
/// passing azimuth zero at speed `v_entry`, with the speed set by energy
/// conservation in gravity: `∮ ds / v(s)` by the periodic trapezoid rule.
pub fn orbit_period(
    frame: &RingFrame,
    radius: f64,
    gravity: &Gravity,
    v_entry: f64,
) -> Result<f64> {
    if !(radius > 0.0) || !(v_entry > 0.0) {
        return Err(Error::invalid(
            "orbit needs positive radius and entry speed",
        ));
    }
    let n = 4096;
    let p0 = frame.point(radius, 0.0, 0.0);
    let mut sum = 0.0;
    for k in 0..n {
        let phi = 2.0 * PI * k as f64 / n as f64;
        let v = speed_at(v_entry, &p0, &frame.point(radius, phi, 0.0), gravity)
            .ok_or_else(|| Error::invalid("atom cannot climb over the top of the ring"))?;
        sum += 1.0 / v;
    }
    Ok(2.0 * PI * radius * sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PhysicalConstants;

    #[test]
    fn no_gravity_is_circumference_over_speed() {
        let t = orbit_period(&RingFrame::vertical(), 0.01, &Gravity::off(), 0.8).unwrap();
        assert!((t - 2.0 * PI * 0.01 / 0.8).abs() < 1e-15);
    }

    #[test]
    fn horizontal_ring_ignores_gravity() {
        let g = Gravity::standard(&PhysicalConstants::rb87());
        let t = orbit_period(&RingFrame::tilted(0.5 * PI), 0.01, &g, 0.8).unwrap();
        assert!((t - 2.0 * PI * 0.01 / 0.8).abs() < 1e-12);
    }

    #[test]
    fn vertical_ring_is_slower_on_average() {
        // entry at mid height: the upper half is slower than the lower half is fast
        let g = Gravity::standard(&PhysicalConstants::rb87());
        let t = orbit_period(&RingFrame::vertical(), 0.01, &g, 0.8857).unwrap();
        let t0 = 2.0 * PI * 0.01 / 0.8857;
        assert!(t > t0 && t < 1.05 * t0, "{t} {t0}");
        assert!(orbit_period(&RingFrame::vertical(), 0.01, &g, 0.2).is_err());
    }
}
