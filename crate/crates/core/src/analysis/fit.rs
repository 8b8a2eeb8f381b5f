use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::peaktrain::{peak_train_gradient, Background, PeakTrainParams, N_PARAMS, PARAM_NAMES};
use crate::ensemble::{zero_circumference, ProbeTrace, ScenarioConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// 1/max(y, 1) weights.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub max_iterations: usize,
    /// Held fixed. When `None`, taken from `init` or from
    /// `circumference / t_orb` after initialization.
    pub v_bar: Option<f64>,
    pub circumference: f64,
    /// Held fixed unless `init` sets it.
    pub probe_width: f64,
    /// Convergence threshold on the largest cosine between the residual
    /// vector and a Jacobian column.
    pub gradient_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            weighting: Weighting::Uniform,
            max_iterations: 200,
            v_bar: None,
            circumference: 2.0 * std::f64::consts::PI * 0.01,
            probe_width: 0.0,
            gradient_tolerance: 1e-4,
        }
    }
}

impl FitOptions {
    /// Circumference of the configured zero circle and the probe's time
    /// resolution at the nominal entry speed.
    pub fn for_scenario(cfg: &ScenarioConfig) -> Result<Self> {
        let speed = match cfg.loads.first() {
            Some(l) if l.speed > 0.0 => l.speed,
            _ => {
                let h = cfg.guide.as_ref().map(|g| g.fall_height).unwrap_or(0.04);
                (2.0 * cfg.constants.g_grav() * h).sqrt()
            }
        };
        Ok(FitOptions {
            circumference: zero_circumference(cfg)?,
            probe_width: cfg.probe.time_width(speed),
            ..FitOptions::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: PeakTrainParams,
    pub names: Vec<String>,
    /// Which entries of the parameter vector were varied.
    pub free: Vec<bool>,
    /// Row-major, in the order of [`PeakTrainParams::to_vec`]. Fixed
    /// parameters have zero rows and columns.
    pub covariance: Vec<Vec<f64>>,
    pub uncertainties: Vec<f64>,
    /// sqrt(sum of weighted squared residuals).
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest residual/column cosine at the solution.
    pub gradient_measure: f64,
    pub gradient_tolerance: f64,
    pub diagnostics: Vec<String>,
    pub trace_hash: String,
}

/// Indices into the parameter vector that the fit varies.
const FREE: [usize; 7] = [0, 1, 2, 3, 5, 6, 7];

/// Fit the trace sampled at its pulse centres with default options.
pub fn fit_peak_train(trace: &ProbeTrace, init: Option<PeakTrainParams>) -> Result<FitResult> {
    trace.validate()?;
    fit_peak_train_with(
        &trace.pulse_centres(),
        &trace.signal,
        init,
        &FitOptions::default(),
    )
}

/// SHA-256 over the little-endian bytes of the samples.
pub fn trace_hash(t: &[f64], y: &[f64]) -> String {
    let mut h = Sha256::new();
    for (a, b) in t.iter().zip(y) {
        h.update(a.to_le_bytes());
        h.update(b.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn fit_peak_train_with(
    t: &[f64],
    y: &[f64],
    init: Option<PeakTrainParams>,
    opts: &FitOptions,
) -> Result<FitResult> {
    if t.len() != y.len() {
        return Err(Error::invalid("times and signal differ in length"));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("trace must be finite"));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("trace times must be strictly increasing"));
    }
    let start = match init {
        Some(p) => {
            p.validate()?;
            p
        }
        None => initial_guess(t, y, opts)?,
    };
    if t.len() <= FREE.len() {
        return Err(Error::Statistics(format!(
            "{} samples cannot fit {} parameters",
            t.len(),
            FREE.len()
        )));
    }
    let w: Vec<f64> = match opts.weighting {
        Weighting::Uniform => vec![1.0; y.len()],
        Weighting::Poisson => y.iter().map(|v| 1.0 / v.max(1.0)).collect(),
    };
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let k = FREE.len();
    let m = t.len();

    let residuals = |x: &[f64; N_PARAMS]| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let p = PeakTrainParams::from_vec(x);
        let mut r = DVector::zeros(m);
        let mut jac = DMatrix::zeros(m, k);
        for i in 0..m {
            let (v, g) = peak_train_gradient(&p, t[i])?;
            r[i] = sw[i] * (v - y[i]);
            for (c, &j) in FREE.iter().enumerate() {
                jac[(i, c)] = sw[i] * g[j];
            }
        }
        Ok((r, jac))
    };

    let mut x = project(start.to_vec(), &start);
    let (mut r, mut jac) = residuals(&x)?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut diagnostics = Vec::new();
    let target = (opts.gradient_tolerance * 1e-3).max(1e-12);
    let mut stalled = 0;
    loop {
        let gm = gradient_measure(&r, &jac, &x);
        if gm <= target {
            break;
        }
        if iterations >= opts.max_iterations {
            diagnostics.push(format!("stopped after {iterations} iterations"));
            break;
        }
        iterations += 1;
        let g_all = jac.transpose() * &r;
        // parameters held on a bound by the gradient sit out this step
        let moving: Vec<usize> = (0..k)
            .filter(|&c| !(at_lower_bound(FREE[c], &x) && g_all[c] > 0.0))
            .collect();
        let jm = jac.select_columns(&moving);
        let a = jm.transpose() * &jm;
        let g = jm.transpose() * &r;
        let km = moving.len();
        let dmax = (0..km).map(|i| a[(i, i)]).fold(0.0, f64::max);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut lhs = a.clone();
            for i in 0..km {
                lhs[(i, i)] += lambda * a[(i, i)].max(1e-12 * dmax).max(f64::MIN_POSITIVE);
            }
            let Some(delta) = lhs.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 4.0;
                continue;
            };
            let mut xn = x;
            for (c, &i) in moving.iter().enumerate() {
                xn[FREE[i]] += delta[c];
            }
            let xn = project(xn, &start);
            let trial = residuals(&xn);
            let Ok((rn, jn)) = trial else {
                lambda *= 4.0;
                continue;
            };
            let cn = rn.norm_squared();
            if cn <= cost {
                let small = cost - cn <= 1e-15 * cost;
                x = xn;
                r = rn;
                jac = jn;
                cost = cn;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                stalled = if small { stalled + 1 } else { 0 };
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            diagnostics.push("damping exhausted without a decrease".to_string());
            break;
        }
        if stalled >= 3 {
            break;
        }
    }

    let gm = gradient_measure(&r, &jac, &x);
    let converged = gm <= opts.gradient_tolerance;
    if !converged {
        diagnostics.push(format!(
            "gradient measure {gm:.3e} above tolerance {:.1e}",
            opts.gradient_tolerance
        ));
    }
    let dof = (m - k) as f64;
    let s2 = cost / dof;
    let cov_free = pseudo_inverse(&(jac.transpose() * &jac)) * s2;
    let mut covariance = vec![vec![0.0; N_PARAMS]; N_PARAMS];
    for (a, &i) in FREE.iter().enumerate() {
        for (b, &j) in FREE.iter().enumerate() {
            covariance[i][j] = 0.5 * (cov_free[(a, b)] + cov_free[(b, a)]);
        }
    }
    let uncertainties = (0..N_PARAMS)
        .map(|i| covariance[i][i].max(0.0).sqrt())
        .collect();
    let mut free = vec![false; N_PARAMS];
    for &j in &FREE {
        free[j] = true;
    }
    Ok(FitResult {
        params: PeakTrainParams::from_vec(&x),
        names: PARAM_NAMES.iter().map(|s| s.to_string()).collect(),
        free,
        covariance,
        uncertainties,
        residual_norm: cost.sqrt(),
        iterations,
        converged,
        gradient_measure: gm,
        gradient_tolerance: opts.gradient_tolerance,
        diagnostics,
        trace_hash: trace_hash(t, y),
    })
}

/// Clamp into the parameter domain. Lower bounds on strictly positive
/// quantities are tiny fractions of their starting values.
fn project(mut x: [f64; N_PARAMS], start: &PeakTrainParams) -> [f64; N_PARAMS] {
    x[0] = x[0].max(0.0);
    x[1] = x[1].max(1e-6 * start.t_orb);
    x[2] = x[2].max(0.0);
    x[3] = x[3].max(0.0);
    x[5] = x[5].max(1e-6 * start.t_orb);
    x[6] = x[6].max(0.0);
    x[7] = x[7].max(1e-6 * start.t_orb);
    if x[2] == 0.0 && x[3] == 0.0 && x[8] == 0.0 {
        x[2] = 1e-9 * start.v_bar * start.t_orb;
    }
    x
}

fn at_lower_bound(j: usize, x: &[f64; N_PARAMS]) -> bool {
    matches!(j, 0 | 2 | 3 | 6) && x[j] == 0.0
}

/// Largest |cos| between the residual and a Jacobian column, ignoring
/// columns whose descent direction is blocked by a bound.
fn gradient_measure(r: &DVector<f64>, jac: &DMatrix<f64>, x: &[f64; N_PARAMS]) -> f64 {
    let rn = r.norm();
    if rn == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for (c, &j) in FREE.iter().enumerate() {
        let col = jac.column(c);
        let g = col.dot(r);
        if at_lower_bound(j, x) && g > 0.0 {
            continue;
        }
        let cn = col.norm();
        if cn > 0.0 {
            worst = worst.max(g.abs() / (cn * rn));
        }
    }
    worst
}

/// Pseudo-inverse of a symmetric positive semidefinite matrix, computed on
/// the unit-diagonal rescaling so badly scaled parameters do not matter.
fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let s: Vec<f64> = (0..n)
        .map(|i| {
            if a[(i, i)] > 0.0 {
                1.0 / a[(i, i)].sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * s[i] * s[j]);
    let eig = scaled.symmetric_eigen();
    let emax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut inv = DMatrix::zeros(n, n);
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        if e > 1e-12 * emax {
            let v = eig.eigenvectors.column(k);
            inv += (v * v.transpose()) / e;
        }
    }
    DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * s[i] * s[j])
}

/// Moments of one revolution peak, measured above the local floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakMoment {
    pub n: u32,
    pub center: f64,
    pub area: f64,
    /// RMS width (s).
    pub width: f64,
    pub height: f64,
    pub floor: f64,
}

/// Period estimate from the first autocorrelation maximum past the first
/// minimum. Samples are resampled onto a uniform grid first.
pub fn autocorrelation_period(t: &[f64], y: &[f64]) -> Result<f64> {
    let none = || Error::Statistics("initialization: no periodic peaks in trace".into());
    if t.len() < 8 {
        return Err(none());
    }
    let n = t.len();
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    let u: Vec<f64> = (0..n).map(|i| interp(t, y, t[0] + i as f64 * dt)).collect();
    let mean = u.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = u.iter().map(|v| v - mean).collect();
    let var: f64 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(none());
    }
    let ac: Vec<f64> = (0..n / 2)
        .map(|k| {
            d[..n - k]
                .iter()
                .zip(&d[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / ((n - k) as f64 * var)
        })
        .collect();
    let mut k = 1;
    while k + 1 < ac.len() && !(ac[k] <= ac[k - 1] && ac[k] < ac[k + 1]) {
        k += 1;
    }
    let mut best = None;
    for j in k + 1..ac.len().saturating_sub(1) {
        if ac[j] >= ac[j - 1] && ac[j] > ac[j + 1] && ac[j] > 0.0 {
            best = Some(j);
            break;
        }
    }
    let j = best.ok_or_else(none)?;
    // parabolic refinement
    let (a, b, c) = (ac[j - 1], ac[j], ac[j + 1]);
    let den = a - 2.0 * b + c;
    let off = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
    Ok((j as f64 + off) * dt)
}

fn interp(t: &[f64], y: &[f64], x: f64) -> f64 {
    let i = t.partition_point(|v| *v <= x);
    if i == 0 {
        return y[0];
    }
    if i >= t.len() {
        return y[t.len() - 1];
    }
    let f = (x - t[i - 1]) / (t[i] - t[i - 1]);
    y[i - 1] + f * (y[i] - y[i - 1])
}

/// Moments of each peak n ≥ 1 whose window `[(n - 1/2)T, (n + 1/2)T]`
/// lies inside the trace and stands clear of the noise.
pub fn peak_moments(t: &[f64], y: &[f64], period: f64) -> Vec<PeakMoment> {
    let m = t.len();
    if m < 3 || !(period > 0.0) {
        return Vec::new();
    }
    let mut diffs: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let noise = if diffs.is_empty() {
        0.0
    } else {
        diffs.sort_by(f64::total_cmp);
        1.4826 * diffs[diffs.len() / 2] / 2f64.sqrt()
    };
    let mut out = Vec::new();
    let mut n = 1u32;
    loop {
        let (lo, hi) = ((n as f64 - 0.5) * period, (n as f64 + 0.5) * period);
        if lo > t[m - 1] {
            break;
        }
        if lo >= t[0] - 1e-12 * period && hi <= t[m - 1] + 1e-12 * period {
            let idx: Vec<usize> = (0..m).filter(|&i| t[i] >= lo && t[i] < hi).collect();
            if idx.len() >= 3 {
                let floor = idx.iter().map(|&i| y[i]).fold(f64::INFINITY, f64::min);
                let top = idx.iter().map(|&i| y[i]).fold(f64::NEG_INFINITY, f64::max);
                let height = top - floor;
                if height > 3.0 * noise && height > 0.0 {
                    let mut s0 = 0.0;
                    let mut s1 = 0.0;
                    let mut s2 = 0.0;
                    for &i in &idx {
                        let dt = 0.5 * (t[(i + 1).min(m - 1)] - t[i.saturating_sub(1)]);
                        let wgt = (y[i] - floor) * dt;
                        s0 += wgt;
                        s1 += wgt * t[i];
                        s2 += wgt * t[i] * t[i];
                    }
                    if s0 > 0.0 {
                        let c = s1 / s0;
                        out.push(PeakMoment {
                            n,
                            center: c,
                            area: s0,
                            width: (s2 / s0 - c * c).max(0.0).sqrt(),
                            height,
                            floor,
                        });
                    }
                }
            }
        }
        n += 1;
    }
    out
}

/// Ordinary least squares `y = a + b x`, returning (a, b, R²).
pub fn linear_regression(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Some((my - b * mx, b, r2))
}

/// Starting point from autocorrelation, peak moments and regressions.
pub fn initial_guess(t: &[f64], y: &[f64], opts: &FitOptions) -> Result<PeakTrainParams> {
    let t0 = autocorrelation_period(t, y)?;
    let mut peaks = peak_moments(t, y, t0);
    if peaks.len() < 3 {
        return Err(Error::Statistics(format!(
            "initialization: found {} discernible peaks, need 3",
            peaks.len()
        )));
    }
    let ns: Vec<f64> = peaks.iter().map(|p| p.n as f64).collect();
    let cs: Vec<f64> = peaks.iter().map(|p| p.center).collect();
    let period = match linear_regression(&ns, &cs) {
        Some((_, b, _)) if b > 0.0 => b,
        _ => t0,
    };
    peaks = peak_moments(t, y, period);
    if peaks.len() < 3 {
        return Err(Error::Statistics(
            "initialization: peaks lost after period refinement".into(),
        ));
    }
    let v_bar = opts.v_bar.unwrap_or(opts.circumference / period);
    let tn: Vec<f64> = peaks.iter().map(|p| p.n as f64 * period).collect();
    let la: Vec<f64> = peaks.iter().map(|p| p.area.ln()).collect();
    let t_span = t[t.len() - 1] - t[0];
    let (n0, tau) = match linear_regression(&tn, &la) {
        Some((a, b, _)) if b < 0.0 => (a.exp(), (-1.0 / b).min(100.0 * t_span)),
        _ => (peaks[0].area, 10.0 * t_span),
    };
    let t2: Vec<f64> = tn.iter().map(|v| v * v).collect();
    let w2: Vec<f64> = peaks.iter().map(|p| p.width * p.width).collect();
    let pw2 = opts.probe_width.powi(2);
    let (sigma0, sigma_v) = match linear_regression(&t2, &w2) {
        Some((a, b, _)) => {
            let sv = v_bar * b.max(0.0).sqrt();
            let s0 = v_bar * (a - pw2).max(0.0).sqrt();
            (s0, sv)
        }
        None => (0.0, 0.0),
    };
    let sigma0 = if sigma0 > 0.0 {
        sigma0
    } else {
        0.05 * v_bar * peaks[0].width.max(1e-3 * period)
    };
    // late-time floor relative to the decayed amplitude
    let late: Vec<f64> = peaks[peaks.len() / 2..]
        .iter()
        .map(|p| p.floor / (n0 * (-p.center / tau).exp()))
        .filter(|v| v.is_finite())
        .collect();
    let beta = if late.is_empty() {
        0.0
    } else {
        (late.iter().sum::<f64>() / late.len() as f64).max(0.0)
    };
    let p = PeakTrainParams {
        n0,
        t_orb: period,
        sigma0,
        sigma_v,
        v_bar,
        tau,
        background: Background {
            beta,
            tau_fill: period,
        },
        probe_width: opts.probe_width,
    };
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::peak_train_model;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn truth() -> PeakTrainParams {
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

    fn synth(p: &PeakTrainParams, noise: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<f64> = (0..600).map(|i| 0.04 + i as f64 * 1e-3).collect();
        let clean: Vec<f64> = t.iter().map(|&x| peak_train_model(p, x).unwrap()).collect();
        let nd = Normal::new(0.0, 1.0).unwrap();
        let y = clean
            .iter()
            .map(|v| v * (1.0 + noise * nd.sample(&mut rng)))
            .collect();
        (t, y)
    }

    #[test]
    fn recovers_known_parameters() {
        let p = truth();
        let (t, y) = synth(&p, 0.01, 3);
        let opts = FitOptions {
            v_bar: Some(p.v_bar),
            probe_width: p.probe_width,
            ..FitOptions::default()
        };
        let fit = fit_peak_train_with(&t, &y, None, &opts).unwrap();
        let q = fit.params;
        assert!(fit.converged, "{:?}", fit.diagnostics);
        assert!((q.tau / p.tau - 1.0).abs() < 0.05, "tau {}", q.tau);
        assert!((q.t_orb / p.t_orb - 1.0).abs() < 0.05, "T {}", q.t_orb);
        assert!(
            (q.sigma_v / p.sigma_v - 1.0).abs() < 0.10,
            "sv {}",
            q.sigma_v
        );
    }

    #[test]
    fn exact_trace_is_reproduced() {
        let p = truth();
        let (t, y) = synth(&p, 0.0, 0);
        let opts = FitOptions {
            v_bar: Some(p.v_bar),
            probe_width: p.probe_width,
            ..FitOptions::default()
        };
        let q = fit_peak_train_with(&t, &y, None, &opts).unwrap().params;
        assert!((q.tau / p.tau - 1.0).abs() < 1e-4, "{q:?}");
        assert!((q.sigma_v / p.sigma_v - 1.0).abs() < 1e-4, "{q:?}");
    }

    #[test]
    fn refit_does_not_increase_residual() {
        let p = truth();
        let (t, y) = synth(&p, 0.02, 9);
        let opts = FitOptions {
            v_bar: Some(p.v_bar),
            probe_width: p.probe_width,
            ..FitOptions::default()
        };
        let a = fit_peak_train_with(&t, &y, None, &opts).unwrap();
        let b = fit_peak_train_with(&t, &y, Some(a.params), &opts).unwrap();
        assert!(b.residual_norm <= a.residual_norm);
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let p = truth();
        let (t, y) = synth(&p, 0.01, 4);
        let fit = fit_peak_train_with(&t, &y, Some(p), &FitOptions::default()).unwrap();
        let c = DMatrix::from_fn(N_PARAMS, N_PARAMS, |i, j| fit.covariance[i][j]);
        assert_eq!(c, c.transpose());
        let e = c.symmetric_eigen();
        let emax = e.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(e.eigenvalues.iter().all(|v| *v >= -1e-10 * emax));
    }

    #[test]
    fn zero_trace_has_no_peaks() {
        let t: Vec<f64> = (0..500).map(|i| i as f64 * 1e-3).collect();
        let y = vec![0.0; 500];
        let e = fit_peak_train_with(&t, &y, None, &FitOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Statistics(_)));
    }

    #[test]
    fn autocorrelation_finds_period() {
        let p = PeakTrainParams {
            tau: 1.0,
            ..truth()
        };
        let (t, y) = synth(&p, 0.0, 0);
        let tp = autocorrelation_period(&t, &y).unwrap();
        assert!((tp - 0.081).abs() < 2e-3, "{tp}");
    }

    #[test]
    fn regression_exact_line() {
        let (a, b, r2) = linear_regression(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
