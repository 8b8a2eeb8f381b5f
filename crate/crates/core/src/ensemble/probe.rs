use serde::{Deserialize, Serialize};

use super::run::ScenarioResult;
use crate::magnetics::wrap_angle;
use crate::{Error, Result};

/// Pulsed fluorescence probe at a fixed ring azimuth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Ring azimuth of the probe focus (rad).
    pub azimuth: f64,
    /// Arc length of the focus along the ring (m).
    pub window: f64,
    /// Pulse length (s).
    pub duration: f64,
    pub delays: Vec<f64>,
    /// Counted atoms are removed for later delays.
    pub destructive: bool,
    /// Largest distance from the ring zero counted (m).
    pub transverse_radius: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            azimuth: 0.0,
            window: 1e-3,
            duration: 1e-3,
            delays: Vec::new(),
            destructive: false,
            transverse_radius: 420e-6,
        }
    }
}

impl ProbeConfig {
    /// RMS time width of the counting window for atoms moving at `speed`:
    /// an atom is counted when its window passage overlaps the pulse.
    pub fn time_width(&self, speed: f64) -> f64 {
        (self.window / speed.abs() + self.duration) / 12f64.sqrt()
    }

    /// Delays from `start` to `stop` inclusive in steps of `step`.
    pub fn sweep(mut self, start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::invalid(
                "probe sweep needs step > 0 and stop >= start",
            ));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        self.delays = (0..=n)
            .map(|k| (start + k as f64 * step).min(stop))
            .collect();
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays.is_empty() {
            return Err(Error::invalid("probe needs at least one delay"));
        }
        if !(self.window > 0.0) || !(self.duration > 0.0) || !(self.transverse_radius > 0.0) {
            return Err(Error::invalid(
                "probe window, duration and radius must be positive",
            ));
        }
        if !self.azimuth.is_finite() || self.delays.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("probe azimuth and delays must be finite"));
        }
        if self.delays.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("probe delays must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrace {
    pub delays: Vec<f64>,
    pub signal: Vec<f64>,
    pub seed: u64,
    pub scenario_hash: String,
    pub n: usize,
    /// Pulse length (s).
    pub duration: f64,
}

impl ProbeTrace {
    /// Pulse mid-times, where a passing atom is counted most.
    pub fn pulse_centres(&self) -> Vec<f64> {
        self.delays
            .iter()
            .map(|d| d + 0.5 * self.duration)
            .collect()
    }

    /// CSV with a `#` metadata preamble.
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# ringsim {}\n# scenario_hash {}\n# seed {}\n# n {}\n# duration_s {}\ndelay_s,signal\n",
            crate::VERSION,
            self.scenario_hash,
            self.seed,
            self.n,
            self.duration
        );
        for (d, v) in self.delays.iter().zip(&self.signal) {
            s.push_str(&format!("{d},{v}\n"));
        }
        s
    }

    /// Parse the output of [`ProbeTrace::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut delays = Vec::new();
        let mut signal = Vec::new();
        let mut header = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if let (Some(k), Some(v)) = (it.next(), it.next()) {
                    meta.insert(k.to_string(), v.to_string());
                }
                continue;
            }
            if !header {
                if line != "delay_s,signal" {
                    return Err(Error::invalid(format!(
                        "line {}: expected header delay_s,signal",
                        i + 1
                    )));
                }
                header = true;
                continue;
            }
            let bad = || Error::invalid(format!("line {}: expected two numbers", i + 1));
            let (a, b) = line.split_once(',').ok_or_else(bad)?;
            delays.push(a.trim().parse::<f64>().map_err(|_| bad())?);
            signal.push(b.trim().parse::<f64>().map_err(|_| bad())?);
        }
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| Error::invalid(format!("trace is missing `# {k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::invalid(format!("bad `# {k}`")))
        };
        let trace = ProbeTrace {
            delays,
            signal,
            seed: num("seed")? as u64,
            scenario_hash: get("scenario_hash")?,
            n: num("n")? as usize,
            duration: num("duration_s")?,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays.len() != self.signal.len() {
            return Err(Error::invalid("trace delays and signal differ in length"));
        }
        if self.delays.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("trace delays must be strictly increasing"));
        }
        if self.signal.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::invalid(
                "trace signal must be finite and non-negative",
            ));
        }
        if !(self.duration >= 0.0) {
            return Err(Error::invalid("pulse duration must be non-negative"));
        }
        Ok(())
    }
}

/// Count, for each pulse `[delay, delay + duration]`, the atoms that are
/// inside the probe window at some time during the pulse. Window passages
/// come from the zero crossings of the probe azimuth recorded during the
/// run. The non-destructive count equals independent same-seed replays with
/// one delay each, since atoms do not interact.
pub fn probe_trace(result: &ScenarioResult, probe: &ProbeConfig) -> Result<ProbeTrace> {
    probe.validate()?;
    let m = result
        .monitors
        .iter()
        .position(|&a| wrap_angle(a - probe.azimuth).abs() < 1e-12)
        .ok_or_else(|| Error::invalid("scenario did not record passages at the probe azimuth"))?;
    let last = probe.delays[probe.delays.len() - 1] + probe.duration;
    if last > result.t_end * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "probe delays reach {last} s but the scenario ends at {} s",
            result.t_end
        )));
    }
    // passage intervals per atom, sorted by end time
    let half = 0.5 * probe.window;
    let intervals: Vec<Vec<(f64, f64)>> = result
        .atoms
        .iter()
        .map(|a| {
            let mut v: Vec<(f64, f64)> = a
                .crossings
                .iter()
                .filter(|c| c.monitor as usize == m && c.offset <= probe.transverse_radius)
                .map(|c| {
                    let w = half / c.speed.abs().max(1e-6);
                    (c.t - w, c.t + w)
                })
                .collect();
            v.sort_by(|a, b| a.1.total_cmp(&b.1));
            v
        })
        .collect();
    let mut removed = vec![false; intervals.len()];
    let mut signal = Vec::with_capacity(probe.delays.len());
    for &d in &probe.delays {
        let (lo, hi) = (d, d + probe.duration);
        let mut count = 0usize;
        for (i, iv) in intervals.iter().enumerate() {
            if removed[i] {
                continue;
            }
            let k = iv.partition_point(|x| x.1 < lo);
            if iv.get(k).is_some_and(|x| x.0 <= hi) {
                count += 1;
                if probe.destructive {
                    removed[i] = true;
                }
            }
        }
        signal.push(count as f64);
    }
    Ok(ProbeTrace {
        delays: probe.delays.clone(),
        signal,
        seed: result.seed,
        scenario_hash: result.scenario_hash.clone(),
        n: result.atoms.len(),
        duration: probe.duration,
    })
}
