//! Scenario files: TOML with every physical quantity written as
//! `"<number> <unit>"`.
//!
//! ```toml
//! seed = 7
//!
//! [ring]
//! radius = "10 mm"
//! separation = "840 µm"
//! current = "8 A"
//!
//! [cloud]
//! n = 1000
//! t_longitudinal = "3.4 µK"
//!
//! [integrator]
//! t_end = "540 ms"
//! ```
//!
//! Unknown keys are rejected. Errors name the file, line and key path.

use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;
use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::constants::MomentConvention;
use crate::dynamics::{Breakpoint, EventKind, RampSchedule};
use crate::ensemble::{
    schedule_multi_load, GuideLayout, Load, LossModel, MajoranaModel, ProbeConfig, ScenarioConfig,
    ShapeMode, ShapingPulse, ShapingWindow, Stage,
};
use crate::magnetics::{Junction, RingFrame, RingGeometry};
use crate::units::{format_si, parse_quantity, Dimension};
use crate::{Error, PhysicalConstants, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::invalid(format!(
                "unknown format `{s}`, expected csv or json"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    pub format: Option<OutputFormat>,
    pub directory: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub config: ScenarioConfig,
    pub output: OutputSpec,
}

/// Default run length when `[integrator] t_end` is absent (s).
pub const DEFAULT_T_END: f64 = 0.6;

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    Ok(parse_scenario_file(path)?.config)
}

pub fn parse_scenario_file(path: impl AsRef<Path>) -> Result<ScenarioFile> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario_str(&text, &path.display().to_string())
}

/// Parse scenario text; `origin` is used in error messages.
pub fn parse_scenario_str(text: &str, origin: &str) -> Result<ScenarioFile> {
    let ctx = Ctx { text, origin };
    let root = DeTable::parse(text).map_err(|e| {
        let line = e.span().map(|s| ctx.line(s.start)).unwrap_or(1);
        Error::Parse {
            path: origin.to_string(),
            line,
            key: String::new(),
            message: e.message().trim().to_string(),
        }
    })?;
    let span = root.span();
    let root = Section::new(&ctx, "", root.get_ref(), span);
    build(&ctx, &root)
}

struct Ctx<'a> {
    text: &'a str,
    origin: &'a str,
}

impl Ctx<'_> {
    fn line(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())]
            .matches('\n')
            .count()
            + 1
    }

    fn err(&self, span: &Range<usize>, key: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.to_string(),
            line: self.line(span.start),
            key: key.to_string(),
            message: message.into(),
        }
    }
}

type Value<'i> = Spanned<DeValue<'i>>;

struct Section<'c, 'a, 'i> {
    ctx: &'c Ctx<'c>,
    path: String,
    table: &'a DeTable<'i>,
    span: Range<usize>,
    used: RefCell<HashSet<String>>,
}

impl<'c, 'a, 'i> Section<'c, 'a, 'i> {
    fn new(ctx: &'c Ctx<'c>, path: &str, table: &'a DeTable<'i>, span: Range<usize>) -> Self {
        Section {
            ctx,
            path: path.to_string(),
            table,
            span,
            used: RefCell::new(HashSet::new()),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn get(&self, k: &str) -> Option<&'a Value<'i>> {
        let v = self
            .table
            .iter()
            .find(|(key, _)| key.get_ref() == k)
            .map(|(_, v)| v);
        if v.is_some() {
            self.used.borrow_mut().insert(k.to_string());
        }
        v
    }

    fn err(&self, v: &Value<'_>, k: &str, msg: impl Into<String>) -> Error {
        self.ctx.err(&v.span(), &self.key(k), msg)
    }

    fn missing(&self, k: &str, msg: impl Into<String>) -> Error {
        self.ctx.err(&self.span, &self.key(k), msg)
    }

    fn quantity_of(&self, v: &Value<'_>, k: &str, dim: Dimension) -> Result<f64> {
        match v.get_ref() {
            DeValue::String(s) => parse_quantity(s, dim).map_err(|e| self.err(v, k, e.to_string())),
            _ => Err(self.err(
                v,
                k,
                format!(
                    "expected a quoted {dim} with unit, e.g. \"1 {}\"",
                    dim.si_unit()
                ),
            )),
        }
    }

    fn quantity(&self, k: &str, dim: Dimension) -> Result<Option<f64>> {
        self.get(k).map(|v| self.quantity_of(v, k, dim)).transpose()
    }

    fn quantity_or(&self, k: &str, dim: Dimension, default: f64) -> Result<f64> {
        Ok(self.quantity(k, dim)?.unwrap_or(default))
    }

    /// Quantity, or `"none"` for absent.
    fn optional_quantity(
        &self,
        k: &str,
        dim: Dimension,
        default: Option<f64>,
    ) -> Result<Option<f64>> {
        match self.get(k) {
            None => Ok(default),
            Some(v) if matches!(v.get_ref(), DeValue::String(s) if s.trim() == "none") => Ok(None),
            Some(v) => self.quantity_of(v, k, dim).map(Some),
        }
    }

    fn quantities(&self, k: &str, dim: Dimension) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(k) else {
            return Ok(None);
        };
        let DeValue::Array(items) = v.get_ref() else {
            return Err(self.err(v, k, "expected an array"));
        };
        items
            .iter()
            .map(|it| self.quantity_of(it, k, dim))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn number_of(&self, v: &Value<'_>, k: &str) -> Result<f64> {
        let x = match v.get_ref() {
            DeValue::Float(f) => f.as_str().replace('_', "").parse::<f64>().ok(),
            DeValue::Integer(i) => i64::from_str_radix(&i.as_str().replace('_', ""), i.radix())
                .ok()
                .map(|x| x as f64),
            DeValue::String(_) => {
                return Err(self.err(v, k, "expected a plain number without unit"))
            }
            _ => None,
        };
        x.filter(|x| x.is_finite())
            .ok_or_else(|| self.err(v, k, "expected a finite number"))
    }

    fn number(&self, k: &str) -> Result<Option<f64>> {
        self.get(k).map(|v| self.number_of(v, k)).transpose()
    }

    fn numbers(&self, k: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(k) else {
            return Ok(None);
        };
        let DeValue::Array(items) = v.get_ref() else {
            return Err(self.err(v, k, "expected an array"));
        };
        items
            .iter()
            .map(|it| self.number_of(it, k))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn integer(&self, k: &str) -> Result<Option<u64>> {
        let Some(v) = self.get(k) else {
            return Ok(None);
        };
        let parsed = match v.get_ref() {
            DeValue::Integer(i) => {
                u64::from_str_radix(&i.as_str().replace('_', ""), i.radix()).ok()
            }
            DeValue::String(s) => s.trim().parse::<u64>().ok(),
            _ => None,
        };
        parsed
            .map(Some)
            .ok_or_else(|| self.err(v, k, "expected a non-negative integer"))
    }

    fn boolean(&self, k: &str) -> Result<Option<bool>> {
        let Some(v) = self.get(k) else {
            return Ok(None);
        };
        match v.get_ref() {
            DeValue::Boolean(b) => Ok(Some(*b)),
            _ => Err(self.err(v, k, "expected true or false")),
        }
    }

    fn string(&self, k: &str) -> Result<Option<(String, &'a Value<'i>)>> {
        let Some(v) = self.get(k) else {
            return Ok(None);
        };
        match v.get_ref() {
            DeValue::String(s) => Ok(Some((s.to_string(), v))),
            _ => Err(self.err(v, k, "expected a string")),
        }
    }

    fn choice<T: Copy>(&self, k: &str, options: &[(&str, T)]) -> Result<Option<T>> {
        let Some((s, v)) = self.string(k)? else {
            return Ok(None);
        };
        options
            .iter()
            .find(|(name, _)| *name == s)
            .map(|(_, t)| Some(*t))
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.err(
                    v,
                    k,
                    format!("unknown value `{s}`, expected one of {}", names.join(", ")),
                )
            })
    }

    fn table(&self, k: &str) -> Result<Option<Section<'c, 'a, 'i>>> {
        let Some(v) = self.get(k) else {
            return Ok(None);
        };
        match v.get_ref() {
            DeValue::Table(t) => Ok(Some(Section::new(self.ctx, &self.key(k), t, v.span()))),
            _ => Err(self.err(v, k, "expected a table")),
        }
    }

    /// A single table or an array of tables.
    fn tables(&self, k: &str) -> Result<Vec<Section<'c, 'a, 'i>>> {
        let Some(v) = self.get(k) else {
            return Ok(Vec::new());
        };
        match v.get_ref() {
            DeValue::Table(t) => Ok(vec![Section::new(self.ctx, &self.key(k), t, v.span())]),
            DeValue::Array(items) => items
                .iter()
                .enumerate()
                .map(|(i, it)| match it.get_ref() {
                    DeValue::Table(t) => Ok(Section::new(
                        self.ctx,
                        &format!("{}[{i}]", self.key(k)),
                        t,
                        it.span(),
                    )),
                    _ => Err(self.err(it, k, "expected a table")),
                })
                .collect(),
            _ => Err(self.err(v, k, "expected a table or an array of tables")),
        }
    }

    /// Reject keys that were never looked up.
    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        for (key, _) in self.table.iter() {
            if !used.contains(key.get_ref().as_ref()) {
                return Err(self
                    .ctx
                    .err(&key.span(), &self.key(key.get_ref()), "unknown key"));
            }
        }
        Ok(())
    }

    fn wrap(&self, k: &str, e: Error) -> Error {
        let span = self
            .get(k)
            .map(|v| v.span())
            .unwrap_or_else(|| self.span.clone());
        match e {
            e @ Error::Parse { .. } => e,
            e => self.ctx.err(&span, &self.key(k), e.to_string()),
        }
    }
}

fn build(ctx: &Ctx<'_>, root: &Section<'_, '_, '_>) -> Result<ScenarioFile> {
    let seed = root
        .integer("seed")?
        .ok_or_else(|| root.missing("seed", "seed required"))?;

    // constants
    let mut constants = PhysicalConstants::rb87();
    let mut gravity = true;
    if let Some(c) = root.table("constants")? {
        if let Some(m) = c.choice(
            "moment",
            &[
                ("lande", MomentConvention::Lande),
                ("bohr-magneton", MomentConvention::BohrMagneton),
            ],
        )? {
            constants = constants.with_convention(m)?;
        }
        gravity = c.boolean("gravity")?.unwrap_or(true);
        c.finish()?;
    }

    // ring
    let mut ring = RingGeometry::default();
    if let Some(r) = root.table("ring")? {
        ring.radius = r.quantity_or("radius", Dimension::Length, ring.radius)?;
        ring.separation = r.quantity_or("separation", Dimension::Length, ring.separation)?;
        ring.current = r.quantity_or("current", Dimension::Current, ring.current)?;
        let tilt = r.quantity("tilt", Dimension::Angle)?;
        let axis = r.numbers("axis")?;
        let reference = r.numbers("reference")?;
        let center = r.quantities("center", Dimension::Length)?;
        let vec3 = |k: &str, v: Vec<f64>| -> Result<Vec3> {
            if v.len() != 3 {
                return Err(r.wrap(k, Error::invalid("expected three components")));
            }
            Ok(Vec3::new(v[0], v[1], v[2]))
        };
        let center = center
            .map(|c| vec3("center", c))
            .transpose()?
            .unwrap_or_else(Vec3::zeros);
        ring.frame = match (tilt, axis, reference) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(r.wrap(
                    "tilt",
                    Error::invalid("give either tilt or axis/reference, not both"),
                ));
            }
            (Some(a), None, None) => RingFrame::tilted(a).with_center(center),
            (None, Some(a), Some(b)) => {
                RingFrame::new(center, vec3("axis", a)?, vec3("reference", b)?)
                    .map_err(|e| r.wrap("axis", e))?
            }
            (None, None, None) => RingFrame::vertical().with_center(center),
            _ => return Err(r.wrap("axis", Error::invalid("axis and reference go together"))),
        };
        if let Some(j) = r.table("junction")? {
            let d = Junction::default();
            ring.junction = Some(Junction {
                ripple: j.number("ripple")?.unwrap_or(d.ripple),
                extent: j.quantity_or("extent", Dimension::Length, d.extent)?,
                location: j.quantity_or("location", Dimension::Angle, d.location)?,
            });
            j.finish()?;
        }
        ring.validate().map_err(|e| r.wrap("radius", e))?;
        r.finish()?;
    }

    // ramps: stage first, the rest needs the clouds
    let ramps = root.table("ramps")?;
    let stage = match &ramps {
        Some(s) => s
            .choice("stage", &[("ring", Stage::Ring), ("guide", Stage::Guide)])?
            .unwrap_or(Stage::Ring),
        None => Stage::Ring,
    };

    // guide
    let mut guide_current = if stage == Stage::Guide { 8.0 } else { 0.0 };
    let guide = match root.table("guide")? {
        Some(g) => {
            let d = GuideLayout::default();
            let layout = GuideLayout {
                separation: g.quantity_or("separation", Dimension::Length, d.separation)?,
                offset: g.quantity_or("offset", Dimension::Length, d.offset)?,
                fall_height: g.quantity_or("fall_height", Dimension::Length, d.fall_height)?,
                taper_separation: g.optional_quantity(
                    "taper_separation",
                    Dimension::Length,
                    d.taper_separation,
                )?,
                overlap: g.quantity_or("overlap", Dimension::Length, d.overlap)?,
                lead_length: g.quantity_or("lead_length", Dimension::Length, d.lead_length)?,
                arc_chords: g
                    .integer("arc_chords")?
                    .map(|v| v as usize)
                    .unwrap_or(d.arc_chords),
            };
            guide_current = g.quantity_or("current", Dimension::Current, guide_current)?;
            layout
                .validate(&ring)
                .map_err(|e| g.wrap("separation", e))?;
            g.finish()?;
            Some(layout)
        }
        None if stage == Stage::Guide => Some(GuideLayout::default()),
        None => None,
    };
    let fall_height = guide
        .as_ref()
        .map(|g| g.fall_height)
        .unwrap_or(GuideLayout::default().fall_height);
    let g_acc = if gravity { constants.g_grav() } else { 0.0 };

    // clouds
    let mut loads = Vec::new();
    for c in root.tables("cloud")? {
        let d = Load::default();
        let sigma = match c.quantities("sigma", Dimension::Length)? {
            Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
            Some(_) => return Err(c.wrap("sigma", Error::invalid("expected three lengths"))),
            None => d.sigma,
        };
        let default_speed = match stage {
            Stage::Ring => (2.0 * g_acc * fall_height).sqrt(),
            Stage::Guide => 0.0,
        };
        loads.push(Load {
            release: c.quantity_or("release", Dimension::Time, 0.0)?,
            n: c.integer("n")?.map(|v| v as usize).unwrap_or(d.n),
            sigma,
            t_longitudinal: c.quantity_or(
                "t_longitudinal",
                Dimension::Temperature,
                d.t_longitudinal,
            )?,
            t_transverse: c.quantity_or("t_transverse", Dimension::Temperature, d.t_transverse)?,
            speed: c.quantity_or("speed", Dimension::Speed, default_speed)?,
        });
        c.finish()?;
    }
    if loads.is_empty() {
        loads.push(Load {
            speed: if stage == Stage::Ring {
                (2.0 * g_acc * fall_height).sqrt()
            } else {
                0.0
            },
            ..Load::default()
        });
    }

    // integrator
    let mut dt = 1e-5;
    let mut t_end = DEFAULT_T_END;
    let mut escape_radius = None;
    let mut snapshots = Vec::new();
    if let Some(i) = root.table("integrator")? {
        dt = i.quantity_or("dt", Dimension::Time, dt)?;
        t_end = i.quantity_or("t_end", Dimension::Time, t_end)?;
        escape_radius = i.optional_quantity("escape_radius", Dimension::Length, None)?;
        snapshots = i
            .quantities("snapshots", Dimension::Time)?
            .unwrap_or_default();
        i.finish()?;
    }

    // losses
    let mut losses = LossModel::default();
    if let Some(l) = root.table("losses")? {
        losses.background_lifetime =
            l.optional_quantity("background_lifetime", Dimension::Time, None)?;
        let kind = l
            .choice(
                "majorana",
                &[("off", 0), ("loss-disk", 1), ("spin-oracle", 2)],
            )?
            .unwrap_or(0);
        let radius = l.quantity("loss_radius", Dimension::Length)?;
        let zone = l.number("spin_zone")?;
        losses.majorana = match kind {
            0 => MajoranaModel::Off,
            _ => {
                let radius = radius
                    .ok_or_else(|| l.missing("loss_radius", "required when majorana is enabled"))?;
                if kind == 1 {
                    MajoranaModel::LossDisk { radius }
                } else {
                    MajoranaModel::SpinOracle {
                        radius,
                        zone: zone.unwrap_or(4.0),
                    }
                }
            }
        };
        losses.junction = l.boolean("junction")?.unwrap_or(false);
        losses.scattered_light = l.number("scattered_light")?.unwrap_or(0.0);
        l.finish()?;
    }

    // probe
    let mut probe = ProbeConfig::default();
    let mut explicit_delays = false;
    if let Some(p) = root.table("probe")? {
        probe.azimuth = p.quantity_or("azimuth", Dimension::Angle, probe.azimuth)?;
        probe.window = p.quantity_or("window", Dimension::Length, probe.window)?;
        probe.duration = p.quantity_or("duration", Dimension::Time, probe.duration)?;
        probe.destructive = p.boolean("destructive")?.unwrap_or(false);
        probe.transverse_radius = p.quantity_or(
            "transverse_radius",
            Dimension::Length,
            probe.transverse_radius,
        )?;
        let delays = p.quantities("delays", Dimension::Time)?;
        let start = p.quantity("start", Dimension::Time)?;
        let stop = p.quantity("stop", Dimension::Time)?;
        let step = p.quantity("step", Dimension::Time)?;
        if let Some(d) = delays {
            if start.is_some() || stop.is_some() || step.is_some() {
                return Err(p.wrap(
                    "delays",
                    Error::invalid("give either delays or start/stop/step"),
                ));
            }
            probe.delays = d;
            explicit_delays = true;
        } else if start.is_some() || stop.is_some() || step.is_some() {
            let start = start.unwrap_or(0.0);
            let stop = stop.unwrap_or(t_end - probe.duration);
            let probe_base = probe.clone();
            let step = step.unwrap_or(1e-3);
            probe = probe_base
                .sweep(start, stop, step)
                .map_err(|e| p.wrap("start", e))?;
            explicit_delays = true;
        }
        p.finish()?;
    }
    if !explicit_delays {
        let stop = t_end - probe.duration;
        probe = probe
            .sweep(0.0, stop, 1e-3)
            .map_err(|e| root.wrap("probe", e))?;
    }

    // shaping
    let mut shaping = Vec::new();
    for s in root.tables("shaping")? {
        let t = s
            .quantity("t", Dimension::Time)?
            .ok_or_else(|| s.missing("t", "shaping pulse needs a time"))?;
        let fraction = s
            .number("fraction")?
            .ok_or_else(|| s.missing("fraction", "shaping pulse needs a fraction"))?;
        let mode = s
            .choice(
                "mode",
                &[("keep", ShapeMode::Keep), ("remove", ShapeMode::Remove)],
            )?
            .ok_or_else(|| s.missing("mode", "shaping pulse needs mode keep or remove"))?;
        shaping.push(ShapingPulse {
            t,
            window: ShapingWindow { fraction, mode },
        });
        s.finish()?;
    }

    let mut cfg = ScenarioConfig {
        constants,
        gravity,
        ring,
        guide,
        guide_current,
        stage,
        schedule: RampSchedule::constant(0.0, ring.current)?,
        transfer_time: 16e-3,
        loads,
        probe,
        losses,
        shaping,
        snapshots,
        seed,
        dt,
        t_end,
        escape_radius,
    };

    // ramps
    let mut explicit_schedule = None;
    if let Some(r) = &ramps {
        cfg.transfer_time = r.quantity_or("transfer_time", Dimension::Time, cfg.transfer_time)?;
        if let Some(v) = r.get("breakpoints") {
            let DeValue::Array(items) = v.get_ref() else {
                return Err(r.err(v, "breakpoints", "expected an array of tables"));
            };
            let mut bps = Vec::new();
            for (i, it) in items.iter().enumerate() {
                let DeValue::Table(t) = it.get_ref() else {
                    return Err(r.err(it, "breakpoints", "expected {{ t, guide, ring }}"));
                };
                let b = Section::new(ctx, &format!("{}[{i}]", r.key("breakpoints")), t, it.span());
                let need =
                    |k: &str, dim| b.quantity(k, dim)?.ok_or_else(|| b.missing(k, "required"));
                bps.push(Breakpoint {
                    t: need("t", Dimension::Time)?,
                    guide: need("guide", Dimension::Current)?,
                    ring: need("ring", Dimension::Current)?,
                });
                b.finish()?;
            }
            let mut s = RampSchedule::new(bps).map_err(|e| r.wrap("breakpoints", e))?;
            for (i, ev) in r.tables("events")?.iter().enumerate() {
                let t = ev
                    .quantity("t", Dimension::Time)?
                    .ok_or_else(|| ev.missing("t", "required"))?;
                let kind = ev
                    .choice("kind", EVENT_KINDS)?
                    .ok_or_else(|| ev.missing("kind", format!("event {i} needs a kind")))?;
                s.add_event(t, kind);
                ev.finish()?;
            }
            explicit_schedule = Some(s);
        }
        r.finish()?;
    }
    cfg.schedule = match explicit_schedule {
        Some(s) => s,
        None => cfg
            .automatic_schedule()
            .map_err(|e| root.wrap("ramps", e))?,
    };

    if let Some(m) = root.table("multiload")? {
        let delay = m
            .quantity("reload_delay", Dimension::Time)?
            .ok_or_else(|| m.missing("reload_delay", "required"))?;
        cfg = schedule_multi_load(&cfg, delay).map_err(|e| m.wrap("reload_delay", e))?;
        m.finish()?;
    }

    let mut output = OutputSpec::default();
    if let Some(o) = root.table("output")? {
        output.format = o.choice(
            "format",
            &[("csv", OutputFormat::Csv), ("json", OutputFormat::Json)],
        )?;
        output.directory = o.string("directory")?.map(|(s, _)| s);
        o.finish()?;
    }
    root.finish()?;
    cfg.validate().map_err(|e| root.wrap("seed", e))?;
    Ok(ScenarioFile {
        config: cfg,
        output,
    })
}

const EVENT_KINDS: &[(&str, EventKind)] = &[
    ("transfer-start", EventKind::TransferStart),
    ("transfer-end", EventKind::TransferEnd),
    ("dip-start", EventKind::DipStart),
    ("probe", EventKind::Probe),
    ("shaping", EventKind::Shaping),
    ("second-load", EventKind::SecondLoad),
];

fn q(v: f64, d: Dimension) -> String {
    format!("\"{}\"", format_si(v, d))
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn qlist(v: &[f64], d: Dimension) -> String {
    let items: Vec<String> = v.iter().map(|x| q(*x, d)).collect();
    format!("[{}]", items.join(", "))
}

/// Scenario text that parses back to exactly `cfg`. Fails for settings the
/// file format cannot express, such as non-default physical constants.
pub fn write_scenario(cfg: &ScenarioConfig, output: &OutputSpec) -> Result<String> {
    use Dimension::*;
    let moment = [
        ("lande", MomentConvention::Lande),
        ("bohr-magneton", MomentConvention::BohrMagneton),
    ]
    .into_iter()
    .find(|(_, m)| PhysicalConstants::rb87().with_convention(*m).ok() == Some(cfg.constants))
    .map(|(n, _)| n)
    .ok_or_else(|| {
        Error::invalid("constants other than the standard ⁸⁷Rb set cannot be written")
    })?;
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "seed = {}\n", cfg.seed);
    let _ = writeln!(
        w,
        "[constants]\nmoment = \"{moment}\"\ngravity = {}\n",
        cfg.gravity
    );

    let r = &cfg.ring;
    let f = &r.frame;
    let _ = writeln!(w, "[ring]");
    let _ = writeln!(w, "radius = {}", q(r.radius, Length));
    let _ = writeln!(w, "separation = {}", q(r.separation, Length));
    let _ = writeln!(w, "current = {}", q(r.current, Current));
    let _ = writeln!(w, "center = {}", qlist(f.center.as_slice(), Length));
    let _ = writeln!(
        w,
        "axis = [{}]",
        f.axis()
            .iter()
            .map(|v| num(*v))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(
        w,
        "reference = [{}]",
        f.reference()
            .iter()
            .map(|v| num(*v))
            .collect::<Vec<_>>()
            .join(", ")
    );
    if let Some(j) = &r.junction {
        let _ = writeln!(w, "\n[ring.junction]");
        let _ = writeln!(w, "ripple = {}", num(j.ripple));
        let _ = writeln!(w, "extent = {}", q(j.extent, Length));
        let _ = writeln!(w, "location = {}", q(j.location, Angle));
    }
    let _ = writeln!(w);

    if let Some(g) = &cfg.guide {
        let _ = writeln!(w, "[guide]");
        let _ = writeln!(w, "current = {}", q(cfg.guide_current, Current));
        let _ = writeln!(w, "separation = {}", q(g.separation, Length));
        let _ = writeln!(w, "offset = {}", q(g.offset, Length));
        let _ = writeln!(w, "fall_height = {}", q(g.fall_height, Length));
        match g.taper_separation {
            Some(t) => {
                let _ = writeln!(w, "taper_separation = {}", q(t, Length));
            }
            None => {
                let _ = writeln!(w, "taper_separation = \"none\"");
            }
        }
        let _ = writeln!(w, "overlap = {}", q(g.overlap, Length));
        let _ = writeln!(w, "lead_length = {}", q(g.lead_length, Length));
        let _ = writeln!(w, "arc_chords = {}\n", g.arc_chords);
    } else if cfg.guide_current != 0.0 {
        return Err(Error::invalid(
            "a guide current without a guide layout cannot be written",
        ));
    }

    let _ = writeln!(w, "[ramps]");
    let _ = writeln!(
        w,
        "stage = \"{}\"",
        if cfg.stage == Stage::Ring {
            "ring"
        } else {
            "guide"
        }
    );
    let _ = writeln!(w, "transfer_time = {}", q(cfg.transfer_time, Time));
    let _ = writeln!(w, "breakpoints = [");
    for b in cfg.schedule.breakpoints() {
        let _ = writeln!(
            w,
            "  {{ t = {}, guide = {}, ring = {} }},",
            q(b.t, Time),
            q(b.guide, Current),
            q(b.ring, Current)
        );
    }
    let _ = writeln!(w, "]");
    for e in &cfg.schedule.events {
        let kind = EVENT_KINDS
            .iter()
            .find(|(_, k)| *k == e.kind)
            .map(|(n, _)| *n)
            .unwrap_or("probe");
        let _ = writeln!(
            w,
            "\n[[ramps.events]]\nt = {}\nkind = \"{kind}\"",
            q(e.t, Time)
        );
    }
    let _ = writeln!(w);

    for l in &cfg.loads {
        let _ = writeln!(w, "[[cloud]]");
        let _ = writeln!(w, "n = {}", l.n);
        let _ = writeln!(w, "release = {}", q(l.release, Time));
        let _ = writeln!(w, "sigma = {}", qlist(&l.sigma, Length));
        let _ = writeln!(w, "t_longitudinal = {}", q(l.t_longitudinal, Temperature));
        let _ = writeln!(w, "t_transverse = {}", q(l.t_transverse, Temperature));
        let _ = writeln!(w, "speed = {}\n", q(l.speed, Speed));
    }

    let l = &cfg.losses;
    let _ = writeln!(w, "[losses]");
    match l.background_lifetime {
        Some(t) => {
            let _ = writeln!(w, "background_lifetime = {}", q(t, Time));
        }
        None => {
            let _ = writeln!(w, "background_lifetime = \"none\"");
        }
    }
    match l.majorana {
        MajoranaModel::Off => {
            let _ = writeln!(w, "majorana = \"off\"");
        }
        MajoranaModel::LossDisk { radius } => {
            let _ = writeln!(
                w,
                "majorana = \"loss-disk\"\nloss_radius = {}",
                q(radius, Length)
            );
        }
        MajoranaModel::SpinOracle { radius, zone } => {
            let _ = writeln!(
                w,
                "majorana = \"spin-oracle\"\nloss_radius = {}\nspin_zone = {}",
                q(radius, Length),
                num(zone)
            );
        }
    }
    let _ = writeln!(w, "junction = {}", l.junction);
    let _ = writeln!(w, "scattered_light = {}\n", num(l.scattered_light));

    let p = &cfg.probe;
    let _ = writeln!(w, "[probe]");
    let _ = writeln!(w, "azimuth = {}", q(p.azimuth, Angle));
    let _ = writeln!(w, "window = {}", q(p.window, Length));
    let _ = writeln!(w, "duration = {}", q(p.duration, Time));
    let _ = writeln!(w, "destructive = {}", p.destructive);
    let _ = writeln!(w, "transverse_radius = {}", q(p.transverse_radius, Length));
    let _ = writeln!(w, "delays = {}\n", qlist(&p.delays, Time));

    for sp in &cfg.shaping {
        let mode = match sp.window.mode {
            ShapeMode::Keep => "keep",
            ShapeMode::Remove => "remove",
        };
        let _ = writeln!(
            w,
            "[[shaping]]\nt = {}\nfraction = {}\nmode = \"{mode}\"\n",
            q(sp.t, Time),
            num(sp.window.fraction)
        );
    }

    let _ = writeln!(w, "[integrator]");
    let _ = writeln!(w, "dt = {}", q(cfg.dt, Time));
    let _ = writeln!(w, "t_end = {}", q(cfg.t_end, Time));
    if let Some(e) = cfg.escape_radius {
        let _ = writeln!(w, "escape_radius = {}", q(e, Length));
    }
    let _ = writeln!(w, "snapshots = {}", qlist(&cfg.snapshots, Time));

    if output.format.is_some() || output.directory.is_some() {
        let _ = writeln!(w, "\n[output]");
        if let Some(f) = output.format {
            let _ = writeln!(
                w,
                "format = \"{}\"",
                if f == OutputFormat::Csv {
                    "csv"
                } else {
                    "json"
                }
            );
        }
        if let Some(d) = &output.directory {
            let _ = writeln!(w, "directory = {}", toml::Value::String(d.clone()));
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        parse_scenario_str(text, "test.toml").map(|f| f.config)
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let c = parse("seed = 3\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.ring.separation, 840e-6);
        assert_eq!(c.ring.current, 8.0);
        assert_eq!(c.ring.radius, 0.01);
        assert!((c.loads[0].speed - 0.8857).abs() < 1e-4);
    }

    #[test]
    fn missing_seed() {
        let e = parse("[ring]\ncurrent = \"8 A\"\n").unwrap_err();
        assert!(e.to_string().contains("seed required"), "{e}");
    }

    #[test]
    fn wrong_unit_names_key_and_line() {
        let e = parse("seed = 1\n[ring]\ncurrent = \"8 G\"\n").unwrap_err();
        match e {
            Error::Parse {
                line, key, message, ..
            } => {
                assert_eq!(line, 3);
                assert_eq!(key, "ring.current");
                assert!(message.contains("current"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse("seed = 1\n[ring]\nradius = \"10 mm\"\ncolour = \"red\"\n").unwrap_err();
        assert!(
            matches!(e, Error::Parse { ref key, line: 4, .. } if key == "ring.colour"),
            "{e}"
        );
    }

    #[test]
    fn bare_number_rejected_for_quantity() {
        assert!(parse("seed = 1\n[ring]\nradius = 0.01\n").is_err());
    }

    #[test]
    fn non_monotone_schedule() {
        let text = "seed = 1\n[ramps]\nbreakpoints = [\n { t = \"0 s\", guide = \"0 A\", ring = \"8 A\" },\n { t = \"0 s\", guide = \"0 A\", ring = \"8 A\" },\n]\n";
        let e = parse(text).unwrap_err();
        assert!(
            matches!(e, Error::Parse { ref key, .. } if key == "ramps.breakpoints"),
            "{e}"
        );
    }

    #[test]
    fn syntax_error_has_line() {
        let e = parse("seed = 1\n[ring\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn round_trip_guide_stage_with_extras() {
        let text = r#"
seed = 99
[constants]
moment = "bohr-magneton"
[ring.junction]
ripple = 0.1
[ramps]
stage = "guide"
[cloud]
n = 50
[losses]
background_lifetime = "180 ms"
majorana = "spin-oracle"
loss_radius = "0.6 µm"
junction = true
scattered_light = 0.1
[[shaping]]
t = "200 ms"
fraction = 0.4
mode = "remove"
[multiload]
reload_delay = "200 ms"
[integrator]
t_end = "500 ms"
snapshots = ["250 ms"]
[output]
format = "json"
directory = "out dir"
"#;
        let f = parse_scenario_str(text, "x").unwrap();
        let out = write_scenario(&f.config, &f.output).unwrap();
        let g = parse_scenario_str(&out, "y").unwrap();
        assert_eq!(f, g);
        assert_eq!(f.config.hash(), g.config.hash());
        assert_eq!(out, write_scenario(&g.config, &g.output).unwrap());
    }

    #[test]
    fn round_trip_tilted_ring() {
        let text = r#"
seed = 18446744073709551615
[ring]
tilt = "90 deg"
radius = "12 mm"
[cloud]
n = 10
speed = "0.85 m/s"
[probe]
start = "35 ms"
step = "2 ms"
[integrator]
dt = "20 µs"
escape_radius = "600 µm"
"#;
        let f = parse_scenario_str(text, "x").unwrap();
        assert_eq!(f.config.seed, u64::MAX);
        let out = write_scenario(&f.config, &f.output).unwrap();
        assert_eq!(f, parse_scenario_str(&out, "y").unwrap());
    }
}
