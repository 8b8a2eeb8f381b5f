use serde::{Deserialize, Serialize};

use crate::{Error, PhysicalConstants, Result};

/// 1σ of a normal distribution in units of its half interquartile range.
const IQR_TO_SIGMA: f64 = 1.0 / (2.0 * 0.674_489_750_196_081_7);
/// FWHM of a normal distribution in units of σ.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub sigma_v: f64,
    pub temperature: f64,
    pub fwhm: f64,
    /// `v_bar / sigma_v`, infinite for a zero spread.
    pub speed_ratio: f64,
}

/// Linearly interpolated quantile of sorted data (type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Robust spread: interquartile range over 1.349, which equals σ for a
/// normal distribution and ignores far tails.
pub fn robust_sigma(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("need at least two samples for a spread"));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok((quantile(&s, 0.75) - quantile(&s, 0.25)) * IQR_TO_SIGMA)
}

pub fn median(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("median of no samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(quantile(&s, 0.5))
}

/// Spread, temperature `m σ²/kB`, FWHM and speed ratio of velocity samples.
pub fn distribution_stats(
    samples: &[f64],
    v_bar: f64,
    constants: &PhysicalConstants,
) -> Result<DistributionStats> {
    let sigma_v = robust_sigma(samples)?;
    Ok(stats_from_sigma(sigma_v, v_bar, constants))
}

pub fn stats_from_sigma(
    sigma_v: f64,
    v_bar: f64,
    constants: &PhysicalConstants,
) -> DistributionStats {
    DistributionStats {
        sigma_v,
        temperature: constants.temperature_from_spread(sigma_v),
        fwhm: FWHM_PER_SIGMA * sigma_v,
        speed_ratio: if sigma_v > 0.0 {
            v_bar.abs() / sigma_v
        } else {
            f64::INFINITY
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let c = PhysicalConstants::rb87();
        let s = distribution_stats(&[0.85; 10], 0.85, &c).unwrap();
        assert_eq!(s.sigma_v, 0.0);
        assert_eq!(s.temperature, 0.0);
        assert!(s.speed_ratio.is_infinite());
    }

    #[test]
    fn single_sample_rejected() {
        let c = PhysicalConstants::rb87();
        assert!(distribution_stats(&[1.0], 1.0, &c).is_err());
    }

    #[test]
    fn temperatures() {
        let c = PhysicalConstants::rb87();
        let t = stats_from_sigma(0.0180, 0.85, &c).temperature;
        // m σ² / kB by hand
        let want = 1.443_16e-25 * 0.018 * 0.018 / 1.380_649e-23;
        assert!((t - want).abs() < 1e-15);
        assert!((t - 3.4e-6).abs() < 0.05e-6);
        assert!((stats_from_sigma(0.0739, 0.85, &c).temperature - 57e-6).abs() < 0.5e-6);
    }

    #[test]
    fn uniform_quantiles() {
        let s: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        assert_eq!(quantile(&s, 0.25), 25.0);
        assert!((robust_sigma(&s).unwrap() - 50.0 * IQR_TO_SIGMA).abs() < 1e-12);
    }
}
