//! Output files. Every file carries the tool version and the scenario hash:
//! JSON files as top-level fields, CSV files as `#` preamble lines.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{
    compression_temperature, fit_peak_train_with, interferometer_metrics, AreaConvention,
    FitOptions, FitResult, InterferometerMetrics, LINEAR_TRAP_EXPONENT,
};
use crate::constants::MomentConvention;
use crate::ensemble::{configured_orbit_period, ProbeTrace, ScenarioConfig, Summary};
use crate::magnetics::{
    characterize_trap, quadrupole_gradient, CrossSection, GuideGeometry, TrapOptions,
};
use crate::units::{gradient_to_gauss_per_cm, kelvin_to_mk, kelvin_to_uk};
use crate::{Error, Result, VERSION};

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Static properties of one trap cross-section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionReport {
    pub name: String,
    pub separation_m: f64,
    pub current_a: f64,
    pub gradient_t_per_m: f64,
    pub gradient_g_per_cm: f64,
    /// 4 µ0 I / (π d²).
    pub gradient_formula_t_per_m: f64,
    pub saddle_field_t: f64,
    /// µ0 I / (π d).
    pub saddle_formula_t: f64,
    pub depth_mk_half_bohr: f64,
    pub depth_mk_bohr: f64,
    pub depth_mk_configured: f64,
    pub loss_radius_m: f64,
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub version: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub moment_convention: String,
    pub sections: Vec<CrossSectionReport>,
    /// Speed after falling the guide height from rest (m/s).
    pub free_fall_speed: f64,
    pub orbit_period_s: f64,
    pub circumference_m: f64,
    pub compression_in_k: f64,
    pub compression_out_k: Option<f64>,
    pub metrics_single: InterferometerMetrics,
    pub metrics_pair: InterferometerMetrics,
}

/// Revolutions used for the interferometer figures.
pub const METRIC_REVOLUTIONS: u32 = 7;

pub fn trap_report(cfg: &ScenarioConfig) -> Result<TrapReport> {
    let k = &cfg.constants;
    let load = cfg
        .loads
        .first()
        .ok_or_else(|| Error::invalid("scenario has no cloud"))?;
    let thermal = k.kb() * load.t_transverse.max(1e-9);
    let opts = TrapOptions::default();
    let mu_half = 0.5 * k.mu_b();
    let mut sections = Vec::new();
    let mut section = |name: &str, cs: CrossSection, d: f64, i: f64| -> Result<()> {
        let t = characterize_trap(&cs, k, thermal, &opts)?;
        sections.push(CrossSectionReport {
            name: name.to_string(),
            separation_m: d,
            current_a: i,
            gradient_t_per_m: t.gradient_center,
            gradient_g_per_cm: gradient_to_gauss_per_cm(t.gradient_center),
            gradient_formula_t_per_m: quadrupole_gradient(i, d),
            saddle_field_t: t.saddle_field,
            saddle_formula_t: k.mu0() * i / (std::f64::consts::PI * d),
            depth_mk_half_bohr: kelvin_to_mk(t.depth_kelvin_for(mu_half, k)),
            depth_mk_bohr: kelvin_to_mk(t.depth_kelvin_for(k.mu_b(), k)),
            depth_mk_configured: kelvin_to_mk(t.depth_kelvin),
            loss_radius_m: t.loss_radius,
            frequency_hz: t.effective_frequency,
        });
        Ok(())
    };
    let r = &cfg.ring;
    section("ring", CrossSection::Ring(*r), r.separation, r.current)?;
    let fall = cfg.guide.as_ref().map(|g| g.fall_height).unwrap_or(0.04);
    let (gsep, gcur) = match &cfg.guide {
        Some(g) if cfg.guide_current > 0.0 => (g.separation, cfg.guide_current),
        Some(g) => (g.separation, r.current),
        None => (r.separation, r.current),
    };
    section(
        "guide",
        CrossSection::Guide(GuideGeometry::new(gsep, gcur)?),
        gsep,
        gcur,
    )?;
    let mut compression_out = None;
    if let Some(t) = cfg.guide.as_ref().and_then(|g| g.taper_separation) {
        let grad_in = quadrupole_gradient(gcur, t);
        let grad_out = quadrupole_gradient(gcur, gsep);
        compression_out = Some(compression_temperature(
            load.t_transverse,
            grad_in,
            grad_out,
            LINEAR_TRAP_EXPONENT,
        )?);
    }
    let v = (2.0 * k.g_grav() * fall).sqrt();
    let radius = r.zero_radius()?;
    let period = configured_orbit_period(cfg, v)?;
    let convention = match k.convention() {
        MomentConvention::Lande => "Landé |gF mF| muB".to_string(),
        MomentConvention::BohrMagneton => "muB".to_string(),
        MomentConvention::Explicit(m) => format!("explicit {m:e} J/T"),
    };
    Ok(TrapReport {
        version: VERSION.to_string(),
        scenario_hash: cfg.hash(),
        seed: cfg.seed,
        moment_convention: convention,
        sections,
        free_fall_speed: v,
        orbit_period_s: period,
        circumference_m: 2.0 * std::f64::consts::PI * radius,
        compression_in_k: load.t_transverse,
        compression_out_k: compression_out,
        metrics_single: interferometer_metrics(
            METRIC_REVOLUTIONS,
            r.radius,
            AreaConvention::SinglePath,
        )?,
        metrics_pair: interferometer_metrics(
            METRIC_REVOLUTIONS,
            r.radius,
            AreaConvention::SagnacPair,
        )?,
    })
}

impl TrapReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "ringsim {}  scenario {}",
            self.version, self.scenario_hash
        );
        for c in &self.sections {
            let _ = writeln!(
                s,
                "\n[{}] d = {:.1} µm, I = {} A",
                c.name,
                c.separation_m * 1e6,
                c.current_a
            );
            let _ = writeln!(
                s,
                "  gradient        {:.2} T/m = {:.0} G/cm (4µ0I/πd² = {:.2} T/m)",
                c.gradient_t_per_m, c.gradient_g_per_cm, c.gradient_formula_t_per_m
            );
            let _ = writeln!(
                s,
                "  saddle field    {:.4e} T (µ0I/πd = {:.4e} T)",
                c.saddle_field_t, c.saddle_formula_t
            );
            let _ = writeln!(
                s,
                "  depth           {:.2} mK with mu_m = muB/2, {:.2} mK with mu_m = muB",
                c.depth_mk_half_bohr, c.depth_mk_bohr
            );
            let _ = writeln!(s, "  loss radius     {:.3} µm", c.loss_radius_m * 1e6);
            let _ = writeln!(s, "  well frequency  {:.1} Hz", c.frequency_hz);
        }
        let _ = writeln!(
            s,
            "\nmoment convention: {} (depth scales linearly with mu_m; a full Bohr magneton doubles the F=1 value)",
            self.moment_convention
        );
        let _ = writeln!(s, "free-fall entry speed {:.4} m/s", self.free_fall_speed);
        let _ = writeln!(
            s,
            "orbit period {:.2} ms over {:.2} mm circumference",
            self.orbit_period_s * 1e3,
            self.circumference_m * 1e3
        );
        if let Some(t) = self.compression_out_k {
            let _ = writeln!(
                s,
                "adiabatic compression {:.0} µK -> {:.0} µK",
                kelvin_to_uk(self.compression_in_k),
                kelvin_to_uk(t)
            );
        }
        let _ = writeln!(
            s,
            "{} revolutions: path {:.3} m, area {:.0} mm² single path, {:.0} mm² counter-propagating pair",
            METRIC_REVOLUTIONS,
            self.metrics_pair.path,
            self.metrics_single.area * 1e6,
            self.metrics_pair.area * 1e6
        );
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub version: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub fit: FitResult,
    /// Temperature of the fitted azimuthal velocity spread (K).
    pub azimuthal_temperature: f64,
    /// v_bar / sigma_v; `None` when the fitted spread is zero.
    pub speed_ratio: Option<f64>,
}

/// Fit a trace produced by `cfg`. Refuses traces from another scenario.
pub fn fit_report(cfg: &ScenarioConfig, trace: &ProbeTrace) -> Result<FitReport> {
    let hash = cfg.hash();
    if trace.scenario_hash != hash {
        return Err(Error::invalid(format!(
            "trace was produced by scenario {} but the scenario file hashes to {hash}",
            trace.scenario_hash
        )));
    }
    trace.validate()?;
    let opts = FitOptions::for_scenario(cfg)?;
    let fit = fit_peak_train_with(&trace.pulse_centres(), &trace.signal, None, &opts)?;
    let p = fit.params;
    Ok(FitReport {
        version: VERSION.to_string(),
        scenario_hash: hash,
        seed: trace.seed,
        azimuthal_temperature: cfg.constants.temperature_from_spread(p.sigma_v),
        speed_ratio: (p.sigma_v > 0.0).then(|| p.v_bar / p.sigma_v),
        fit,
    })
}

/// Version and scenario hash read back from an output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    pub scenario_hash: String,
}

pub fn read_provenance(path: &Path) -> Result<Provenance> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let bad = || {
        Error::invalid(format!(
            "{}: no version and scenario hash found",
            path.display()
        ))
    };
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(&text)?;
        let get = |k: &str| v.get(k).and_then(|x| x.as_str()).map(str::to_string);
        return Ok(Provenance {
            version: get("version").ok_or_else(bad)?,
            scenario_hash: get("scenario_hash").ok_or_else(bad)?,
        });
    }
    let mut version = None;
    let mut hash = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let mut it = line.trim_start_matches('#').split_whitespace();
        match (it.next(), it.next()) {
            (Some("ringsim"), Some(v)) => version = Some(v.to_string()),
            (Some("scenario_hash"), Some(h)) => hash = Some(h.to_string()),
            _ => {}
        }
    }
    Ok(Provenance {
        version: version.ok_or_else(bad)?,
        scenario_hash: hash.ok_or_else(bad)?,
    })
}

/// Check that all files come from one scenario.
pub fn check_same_scenario(files: &[(String, Provenance)], expected: Option<&str>) -> Result<()> {
    let reference = expected
        .map(str::to_string)
        .or_else(|| files.first().map(|f| f.1.scenario_hash.clone()));
    if let Some(h) = reference {
        for (name, p) in files {
            if p.scenario_hash != h {
                return Err(Error::invalid(format!(
                    "{name} was produced by scenario {} but the report is for {h}",
                    p.scenario_hash
                )));
            }
        }
    }
    Ok(())
}

/// Reference values for the comparison table.
pub struct Reference {
    pub quantity: &'static str,
    pub unit: &'static str,
    pub value: &'static str,
}

pub const REFERENCES: &[Reference] = &[
    Reference {
        quantity: "gradient",
        unit: "G/cm",
        value: "1800",
    },
    Reference {
        quantity: "trap depth",
        unit: "mK",
        value: "2.5",
    },
    Reference {
        quantity: "entry speed",
        unit: "cm/s",
        value: "85",
    },
    Reference {
        quantity: "orbit period",
        unit: "ms",
        value: "81",
    },
    Reference {
        quantity: "ring lifetime",
        unit: "ms",
        value: "180",
    },
    Reference {
        quantity: "azimuthal temperature",
        unit: "µK",
        value: "3.4",
    },
    Reference {
        quantity: "transverse temperature in",
        unit: "µK",
        value: "57",
    },
    Reference {
        quantity: "guided path, 7 rev",
        unit: "m",
        value: "0.5",
    },
    Reference {
        quantity: "enclosed area, 7 rev",
        unit: "mm²",
        value: "4400",
    },
];

/// Human-readable report combining whatever outputs are available.
pub fn combined_report(
    trap: Option<&TrapReport>,
    summary: Option<&Summary>,
    fit: Option<&FitReport>,
) -> String {
    let guide = trap.and_then(|t| t.sections.iter().find(|c| c.name == "guide"));
    let fmt =
        |v: Option<f64>, p: usize| v.map(|x| format!("{x:.p$}")).unwrap_or_else(|| "-".into());
    let values = [
        fmt(guide.map(|c| c.gradient_g_per_cm), 0),
        fmt(guide.map(|c| c.depth_mk_bohr), 2),
        fmt(
            summary
                .and_then(|s| s.mean_entry_speed)
                .or(trap.map(|t| t.free_fall_speed))
                .map(|v| v * 100.0),
            1,
        ),
        fmt(
            summary
                .and_then(|s| s.orbit_period)
                .or(trap.map(|t| t.orbit_period_s))
                .map(|v| v * 1e3),
            2,
        ),
        fmt(fit.map(|f| f.fit.params.tau * 1e3), 1),
        fmt(fit.map(|f| kelvin_to_uk(f.azimuthal_temperature)), 2),
        fmt(trap.map(|t| kelvin_to_uk(t.compression_in_k)), 1),
        fmt(trap.map(|t| t.metrics_pair.path), 3),
        fmt(trap.map(|t| t.metrics_pair.area * 1e6), 0),
    ];
    let mut s = String::new();
    let hash = trap
        .map(|t| t.scenario_hash.as_str())
        .or(summary.map(|x| x.scenario_hash.as_str()))
        .or(fit.map(|f| f.scenario_hash.as_str()))
        .unwrap_or("-");
    let _ = writeln!(s, "ringsim {VERSION} report for scenario {hash}\n");
    let _ = writeln!(
        s,
        "{:<28}{:>12}{:>12}  unit",
        "quantity", "this run", "reference"
    );
    for (r, v) in REFERENCES.iter().zip(values) {
        let _ = writeln!(s, "{:<28}{:>12}{:>12}  {}", r.quantity, v, r.value, r.unit);
    }
    if let Some(sm) = summary {
        let _ = writeln!(s, "\nsurvivors {} of {}", sm.alive, sm.n);
        for (cause, n) in &sm.losses {
            if *n > 0 {
                let _ = writeln!(s, "  lost to {cause}: {n}");
            }
        }
    }
    if let Some(f) = fit {
        let p = &f.fit.params;
        let _ =
            writeln!(
            s,
            "\nfit: T_orb {:.3} ms, tau {:.1} ms, sigma_v {:.2} cm/s, speed ratio {}, converged {}",
            p.t_orb * 1e3,
            p.tau * 1e3,
            p.sigma_v * 100.0,
            f.speed_ratio.map(|r| format!("{r:.0}")).unwrap_or_else(|| "-".into()),
            f.fit.converged
        );
    }
    if let Some(t) = trap {
        if let Some(c) = t.compression_out_k {
            let _ = writeln!(
                s,
                "adiabatic compression estimate {:.0} µK",
                kelvin_to_uk(c)
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_report_gradient_and_depth() {
        let cfg = ScenarioConfig::ring_stage(1, 10, 0.8857, 0.1).unwrap();
        let r = trap_report(&cfg).unwrap();
        let guide = r.sections.iter().find(|c| c.name == "guide").unwrap();
        // 4 µ0 I / (π d²) at 8 A, 840 µm
        let oracle = 4.0 * 4e-7 * std::f64::consts::PI * 8.0
            / (std::f64::consts::PI * 840e-6f64.powi(2))
            * 100.0;
        assert!(
            (guide.gradient_g_per_cm - oracle).abs() < 0.01 * oracle,
            "{}",
            guide.gradient_g_per_cm
        );
        assert!((guide.depth_mk_bohr - 2.56).abs() < 0.05);
        assert!(r.sections.iter().any(|c| c.name == "ring"));
        assert!(r.to_text().contains("G/cm"));
    }

    #[test]
    fn csv_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_file(&p, "# ringsim 0.1.0\n# scenario_hash abc\n# seed 1\nx\n").unwrap();
        let pr = read_provenance(&p).unwrap();
        assert_eq!(pr.scenario_hash, "abc");
        let files = vec![
            ("a".to_string(), pr.clone()),
            (
                "b".to_string(),
                Provenance {
                    scenario_hash: "def".into(),
                    ..pr
                },
            ),
        ];
        assert!(check_same_scenario(&files, None).is_err());
    }
}
