use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Default exponent for a linear trap: E^{3/2}/B' is an adiabatic invariant.
pub const LINEAR_TRAP_EXPONENT: f64 = 2.0 / 3.0;

/// Temperature after a slow change of trap gradient,
/// `T_in * (grad_out / grad_in)^exponent`.
pub fn compression_temperature(
    t_in: f64,
    grad_in: f64,
    grad_out: f64,
    exponent: f64,
) -> Result<f64> {
    if !(grad_in > 0.0 && grad_out > 0.0) || !grad_in.is_finite() || !grad_out.is_finite() {
        return Err(Error::invalid("gradients must be positive and finite"));
    }
    if !(t_in >= 0.0) || !t_in.is_finite() || !exponent.is_finite() {
        return Err(Error::invalid(
            "temperature must be non-negative and exponent finite",
        ));
    }
    Ok(t_in * (grad_out / grad_in).powf(exponent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AreaConvention {
    SinglePath,
    /// Both counter-propagating arms counted.
    #[default]
    SagnacPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerMetrics {
    /// m²
    pub area: f64,
    /// m
    pub path: f64,
}

pub fn interferometer_metrics(
    n_rev: u32,
    radius: f64,
    convention: AreaConvention,
) -> Result<InterferometerMetrics> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::invalid("radius must be non-negative"));
    }
    let n = n_rev as f64;
    let single = n * PI * radius * radius;
    Ok(InterferometerMetrics {
        area: match convention {
            AreaConvention::SinglePath => single,
            AreaConvention::SagnacPair => 2.0 * single,
        },
        path: n * 2.0 * PI * radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compression_examples() {
        assert_eq!(
            compression_temperature(57e-6, 3.0, 3.0, LINEAR_TRAP_EXPONENT).unwrap(),
            57e-6
        );
        let t = compression_temperature(57e-6, 1.0, 22.7, LINEAR_TRAP_EXPONENT).unwrap();
        assert!((t - 458e-6).abs() < 2e-6, "{t}");
        assert!(compression_temperature(1e-6, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn seven_revolutions() {
        let m = interferometer_metrics(7, 0.01, AreaConvention::SagnacPair).unwrap();
        assert!((m.path - 0.4398).abs() < 1e-4);
        assert!((m.area * 1e6 - 4398.2).abs() < 0.1);
        let s = interferometer_metrics(7, 0.01, AreaConvention::SinglePath).unwrap();
        assert_eq!(m.area, 2.0 * s.area);
        let z = interferometer_metrics(0, 0.01, AreaConvention::SagnacPair).unwrap();
        assert_eq!((z.area, z.path), (0.0, 0.0));
    }
}
