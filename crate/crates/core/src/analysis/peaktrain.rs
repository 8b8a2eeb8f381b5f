use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    /// Amplitude relative to `n0`.
    pub beta: f64,
    pub tau_fill: f64,
}

/// Revolution peak train: Gaussian peaks at multiples of the orbit period,
/// spreading by free azimuthal expansion and decaying exponentially, on an
/// optional slowly filling background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakTrainParams {
    pub n0: f64,
    pub t_orb: f64,
    /// Initial azimuthal spread (m).
    pub sigma0: f64,
    /// Azimuthal velocity spread (m/s).
    pub sigma_v: f64,
    pub v_bar: f64,
    pub tau: f64,
    pub background: Background,
    /// Probe pulse width added in quadrature (s).
    pub probe_width: f64,
}

/// Number of entries in [`PeakTrainParams::to_vec`].
pub const N_PARAMS: usize = 9;
pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "n0",
    "t_orb",
    "sigma0",
    "sigma_v",
    "v_bar",
    "tau",
    "beta",
    "tau_fill",
    "probe_width",
];

impl PeakTrainParams {
    pub fn validate(&self) -> Result<()> {
        let v = self.to_vec();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("peak-train parameters must be finite"));
        }
        if !(self.t_orb > 0.0
            && self.tau > 0.0
            && self.background.tau_fill > 0.0
            && self.v_bar > 0.0)
        {
            return Err(Error::invalid(
                "t_orb, tau, tau_fill and v_bar must be positive",
            ));
        }
        if self.sigma0 < 0.0
            || self.sigma_v < 0.0
            || self.background.beta < 0.0
            || self.probe_width < 0.0
        {
            return Err(Error::invalid(
                "sigma0, sigma_v, beta and probe_width must be non-negative",
            ));
        }
        if self.sigma0 == 0.0 && self.sigma_v == 0.0 && self.probe_width == 0.0 {
            return Err(Error::invalid("peaks need a non-zero width"));
        }
        Ok(())
    }

    pub fn to_vec(&self) -> [f64; N_PARAMS] {
        [
            self.n0,
            self.t_orb,
            self.sigma0,
            self.sigma_v,
            self.v_bar,
            self.tau,
            self.background.beta,
            self.background.tau_fill,
            self.probe_width,
        ]
    }

    pub fn from_vec(v: &[f64; N_PARAMS]) -> Self {
        PeakTrainParams {
            n0: v[0],
            t_orb: v[1],
            sigma0: v[2],
            sigma_v: v[3],
            v_bar: v[4],
            tau: v[5],
            background: Background {
                beta: v[6],
                tau_fill: v[7],
            },
            probe_width: v[8],
        }
    }

    /// Temporal width of peak `n` (s).
    pub fn peak_width(&self, n: u32) -> f64 {
        let tn = n as f64 * self.t_orb;
        ((self.sigma0.powi(2) + (self.sigma_v * tn).powi(2)) / self.v_bar.powi(2)
            + self.probe_width.powi(2))
        .sqrt()
    }
}

/// Model signal at `t`.
pub fn peak_train_model(p: &PeakTrainParams, t: f64) -> Result<f64> {
    p.validate()?;
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    Ok(eval(p, t, None))
}

/// Model signal and its gradient with respect to [`PeakTrainParams::to_vec`].
pub fn peak_train_gradient(p: &PeakTrainParams, t: f64) -> Result<(f64, [f64; N_PARAMS])> {
    p.validate()?;
    let mut g = [0.0; N_PARAMS];
    let v = eval(p, t, Some(&mut g));
    Ok((v, g))
}

/// exp(-x) below this underflows.
const CUTOFF: f64 = 700.0;
const MAX_PEAKS: i64 = 100_000;

fn eval(p: &PeakTrainParams, t: f64, mut grad: Option<&mut [f64; N_PARAMS]>) -> f64 {
    let decay = (-t / p.tau).exp();
    let vb2 = p.v_bar * p.v_bar;
    // peak sum at unit amplitude
    let mut sum = 0.0;
    let center = ((t / p.t_orb).round() as i64).clamp(1, MAX_PEAKS);
    let add = |n: i64, sum: &mut f64, grad: &mut Option<&mut [f64; N_PARAMS]>| -> f64 {
        let nf = n as f64;
        let tn = nf * p.t_orb;
        let s2 =
            (p.sigma0 * p.sigma0 + (p.sigma_v * tn).powi(2)) / vb2 + p.probe_width * p.probe_width;
        let x = t - tn;
        let q = x * x / (2.0 * s2);
        if q > CUTOFF {
            return q;
        }
        let g = (-q).exp() / (2.0 * PI * s2).sqrt();
        *sum += g;
        if let Some(gr) = grad.as_deref_mut() {
            let dl_ds2 = -0.5 / s2 + x * x / (2.0 * s2 * s2);
            let gd = p.n0 * g * decay;
            gr[1] += gd * (nf * x / s2 + dl_ds2 * 2.0 * p.sigma_v * p.sigma_v * nf * tn / vb2);
            gr[2] += gd * dl_ds2 * 2.0 * p.sigma0 / vb2;
            gr[3] += gd * dl_ds2 * 2.0 * p.sigma_v * tn * tn / vb2;
            gr[4] -= gd * dl_ds2 * 2.0 * (p.sigma0 * p.sigma0 + (p.sigma_v * tn).powi(2))
                / (vb2 * p.v_bar);
            gr[8] += gd * dl_ds2 * 2.0 * p.probe_width;
        }
        q
    };
    let mut n = center;
    while n >= 1 {
        let q = add(n, &mut sum, &mut grad);
        if q > CUTOFF && t > n as f64 * p.t_orb {
            break;
        }
        n -= 1;
    }
    let mut n = center + 1;
    let mut last = f64::INFINITY;
    while n <= MAX_PEAKS {
        let before = sum;
        let q = add(n, &mut sum, &mut grad);
        let term = sum - before;
        if (q > CUTOFF || term < 1e-18 * sum) && term <= last {
            break;
        }
        last = term;
        n += 1;
    }
    let e_fill = (-t / p.background.tau_fill).exp();
    let unit = sum + p.background.beta * (1.0 - e_fill);
    let value = p.n0 * decay * unit;
    if let Some(gr) = grad {
        gr[0] = decay * unit;
        gr[5] = value * t / (p.tau * p.tau);
        gr[6] = decay * p.n0 * (1.0 - e_fill);
        gr[7] = -decay * p.n0 * p.background.beta * e_fill * t
            / (p.background.tau_fill * p.background.tau_fill);
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper() -> PeakTrainParams {
        PeakTrainParams {
            n0: 100.0,
            t_orb: 0.081,
            sigma0: 1e-3,
            sigma_v: 0.018,
            v_bar: 0.85,
            tau: 0.18,
            background: Background {
                beta: 0.0,
                tau_fill: 0.1,
            },
            probe_width: 0.5e-3,
        }
    }

    #[test]
    fn undecayed_peaks_are_identical() {
        let p = PeakTrainParams {
            tau: 1e30,
            sigma_v: 0.0,
            ..paper()
        };
        let a = peak_train_model(&p, 0.081).unwrap();
        let b = peak_train_model(&p, 5.0 * 0.081).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        assert!(peak_train_model(&p, 1.5 * 0.081).unwrap() < 1e-6 * a);
    }

    #[test]
    fn fifth_peak_width() {
        let p = PeakTrainParams {
            sigma0: 0.0,
            probe_width: 0.0,
            ..paper()
        };
        // 0.018 * 5 * 0.081 / 0.85
        assert!((p.peak_width(5) - 8.576e-3).abs() < 1e-5);
    }

    #[test]
    fn gradient_matches_differences() {
        let p = PeakTrainParams {
            background: Background {
                beta: 0.1,
                tau_fill: 0.05,
            },
            ..paper()
        };
        for &t in &[0.07, 0.162, 0.2, 0.33] {
            let (v, g) = peak_train_gradient(&p, t).unwrap();
            assert!((v - peak_train_model(&p, t).unwrap()).abs() < 1e-12 * v.abs().max(1.0));
            let x = p.to_vec();
            for k in 0..N_PARAMS {
                let h = 1e-6 * x[k].abs().max(1e-6);
                let mut up = x;
                let mut dn = x;
                up[k] += h;
                dn[k] -= h;
                let fd = (eval(&PeakTrainParams::from_vec(&up), t, None)
                    - eval(&PeakTrainParams::from_vec(&dn), t, None))
                    / (2.0 * h);
                // plus the roundoff floor of the difference quotient
                let floor = 10.0 * f64::EPSILON * v.abs() / h;
                assert!(
                    (fd - g[k]).abs() <= 1e-5 * fd.abs().max(1e-3 * v.abs()) + floor,
                    "{k} {fd} {}",
                    g[k]
                );
            }
        }
    }

    #[test]
    fn invalid_params() {
        let p = PeakTrainParams {
            tau: 0.0,
            ..paper()
        };
        assert!(peak_train_model(&p, 0.1).is_err());
        let p = PeakTrainParams {
            n0: f64::NAN,
            ..paper()
        };
        assert!(peak_train_model(&p, 0.1).is_err());
    }
}
