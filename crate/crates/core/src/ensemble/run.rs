use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use super::apparatus::{Apparatus, GuideLayout};
use super::cloud::CloudSpec;
use super::probe::ProbeConfig;
use super::shaping::{azimuthal_offsets, shape_velocity, ShapeOutcome, ShapingWindow};
use crate::analysis::{robust_sigma, stats_from_sigma, DistributionStats};
use crate::dynamics::{
    hybrid_spin_step, local_gradient, min_norm_on_segment, AtomState, Breakpoint, ForceCache,
    LossCause, RampSchedule, Region, SpinConfig, SpinStep, SpinTracker, Status, Verlet,
};
use crate::magnetics::{FieldSource, Gravity, Junction, RingFieldTable, RingFrame, RingGeometry};
use crate::rng::atom_rng;
use crate::{Error, PhysicalConstants, Result, Vec3};

/// Where atoms start: released in the feed guide above the ring, or
/// injected directly onto the ring zero at azimuth zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Guide,
    Ring,
}

/// One cloud release. Axes are (along the guide or ring, radial, ring axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub release: f64,
    pub n: usize,
    pub sigma: [f64; 3],
    pub t_longitudinal: f64,
    pub t_transverse: f64,
    /// Mean speed along the direction of travel (m/s).
    pub speed: f64,
}

impl Default for Load {
    fn default() -> Self {
        Load {
            release: 0.0,
            n: 1000,
            sigma: [1e-3, 1e-4, 1e-4],
            t_longitudinal: 3e-6,
            t_transverse: 57e-6,
            speed: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum MajoranaModel {
    Off,
    /// Loss on entering `radius` around the local field zero.
    LossDisk {
        radius: f64,
    },
    /// Classical spin precession within `zone` loss radii, loss on a
    /// confirmed flip.
    SpinOracle {
        radius: f64,
        zone: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// Background-gas 1/e lifetime (s).
    pub background_lifetime: Option<f64>,
    pub majorana: MajoranaModel,
    pub junction: bool,
    /// Fraction of earlier clouds removed when a later cloud arrives.
    pub scattered_light: f64,
}

impl Default for LossModel {
    fn default() -> Self {
        LossModel {
            background_lifetime: None,
            majorana: MajoranaModel::Off,
            junction: false,
            scattered_light: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingPulse {
    pub t: f64,
    pub window: ShapingWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub constants: PhysicalConstants,
    pub gravity: bool,
    pub ring: RingGeometry,
    pub guide: Option<GuideLayout>,
    /// Guide current used for loading (A).
    pub guide_current: f64,
    pub stage: Stage,
    pub schedule: RampSchedule,
    /// Length of a guide-to-ring cross ramp (s).
    pub transfer_time: f64,
    pub loads: Vec<Load>,
    pub probe: ProbeConfig,
    pub losses: LossModel,
    pub shaping: Vec<ShapingPulse>,
    pub snapshots: Vec<f64>,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    /// Atoms farther than this from the ring zero circle (or outside the
    /// guide) are lost over the barrier. Defaults to the wire separation.
    pub escape_radius: Option<f64>,
}

impl ScenarioConfig {
    /// Atoms injected on the ring zero at `speed`, ring held at its current.
    pub fn ring_stage(seed: u64, n: usize, speed: f64, t_end: f64) -> Result<Self> {
        let ring = RingGeometry::default();
        Ok(ScenarioConfig {
            constants: PhysicalConstants::rb87(),
            gravity: true,
            ring,
            guide: None,
            guide_current: 0.0,
            stage: Stage::Ring,
            schedule: RampSchedule::constant(0.0, ring.current)?,
            transfer_time: 16e-3,
            loads: vec![Load {
                n,
                speed,
                ..Load::default()
            }],
            probe: ProbeConfig::default().sweep(0.0, t_end - 1e-3, 1e-3)?,
            losses: LossModel::default(),
            shaping: Vec::new(),
            snapshots: Vec::new(),
            seed,
            dt: 1e-5,
            t_end,
            escape_radius: None,
        })
    }

    /// Release in the guide above the ring, fall, and cross-ramp transfer
    /// starting when the cloud reaches the ring plane.
    pub fn guide_stage(seed: u64, n: usize, t_end: f64) -> Result<Self> {
        let mut cfg = Self::ring_stage(seed, n, 0.0, t_end)?;
        cfg.stage = Stage::Guide;
        cfg.guide = Some(GuideLayout::default());
        cfg.guide_current = 8.0;
        cfg.schedule = cfg.automatic_schedule()?;
        Ok(cfg)
    }

    /// Ring stage: ring held at its current. Guide stage: guide on until the
    /// first cloud reaches the ring, then a linear cross ramp.
    pub fn automatic_schedule(&self) -> Result<RampSchedule> {
        match self.stage {
            Stage::Ring => RampSchedule::constant(0.0, self.ring.current),
            Stage::Guide => {
                let load = self
                    .loads
                    .first()
                    .ok_or_else(|| Error::invalid("scenario needs at least one cloud"))?;
                let t_a = self.arrival_time(load)?;
                RampSchedule::new(vec![
                    Breakpoint {
                        t: 0.0,
                        guide: self.guide_current,
                        ring: 0.0,
                    },
                    Breakpoint {
                        t: t_a,
                        guide: self.guide_current,
                        ring: 0.0,
                    },
                    Breakpoint {
                        t: t_a + self.transfer_time,
                        guide: 0.0,
                        ring: self.ring.current,
                    },
                ])
            }
        }
    }

    pub fn gravity(&self) -> Gravity {
        if self.gravity {
            Gravity::standard(&self.constants)
        } else {
            Gravity::off()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ring.validate()?;
        if !(self.dt > 0.0) || !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::invalid("dt and t_end must be positive"));
        }
        if !(self.transfer_time > 0.0) {
            return Err(Error::invalid("transfer time must be positive"));
        }
        if self.loads.is_empty() {
            return Err(Error::invalid("scenario needs at least one cloud"));
        }
        let in_span = |t: f64| (0.0..=self.t_end).contains(&t);
        for l in &self.loads {
            if l.n == 0 {
                return Err(Error::invalid("cloud needs at least one atom"));
            }
            if !in_span(l.release) || !l.speed.is_finite() {
                return Err(Error::invalid(format!(
                    "cloud release at {} s outside [0, t_end]",
                    l.release
                )));
            }
        }
        if self.stage == Stage::Guide {
            let g = self
                .guide
                .as_ref()
                .ok_or_else(|| Error::invalid("guide stage needs a guide layout"))?;
            g.validate(&self.ring)?;
        }
        self.probe.validate()?;
        if !self
            .probe
            .delays
            .iter()
            .all(|&d| in_span(d) && d + self.probe.duration <= self.t_end)
        {
            return Err(Error::invalid("probe pulses must lie in [0, t_end]"));
        }
        if !self
            .shaping
            .iter()
            .map(|s| s.t)
            .chain(self.snapshots.iter().copied())
            .all(in_span)
        {
            return Err(Error::invalid(
                "shaping and snapshot times must lie in [0, t_end]",
            ));
        }
        let l = &self.losses;
        if matches!(l.background_lifetime, Some(t) if !(t > 0.0)) {
            return Err(Error::invalid("background lifetime must be positive"));
        }
        if !(0.0..=1.0).contains(&l.scattered_light) {
            return Err(Error::invalid("scattered-light fraction must be in [0, 1]"));
        }
        match l.majorana {
            MajoranaModel::LossDisk { radius } | MajoranaModel::SpinOracle { radius, .. }
                if !(radius >= 0.0) =>
            {
                return Err(Error::invalid("loss radius must be non-negative"));
            }
            MajoranaModel::SpinOracle { zone, .. } if !(zone >= 1.0) => {
                return Err(Error::invalid("spin zone must be at least one loss radius"));
            }
            _ => {}
        }
        if matches!(self.escape_radius, Some(r) if !(r > 0.0)) {
            return Err(Error::invalid("escape radius must be positive"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Time at which a cloud reaches azimuth zero of the ring.
    pub fn arrival_time(&self, load: &Load) -> Result<f64> {
        match self.stage {
            Stage::Ring => Ok(load.release),
            Stage::Guide => {
                let g = self
                    .guide
                    .as_ref()
                    .ok_or_else(|| Error::invalid("guide stage needs a guide layout"))?;
                let a = self
                    .gravity()
                    .acceleration
                    .dot(&self.ring.frame.tangent(0.0));
                let (h, v0) = (g.fall_height, load.speed);
                let dt = if a.abs() < 1e-12 {
                    if v0 <= 0.0 {
                        return Err(Error::invalid("cloud never reaches the ring"));
                    }
                    h / v0
                } else {
                    let disc = v0 * v0 + 2.0 * a * h;
                    if disc < 0.0 {
                        return Err(Error::invalid("cloud never reaches the ring"));
                    }
                    (disc.sqrt() - v0) / a
                };
                Ok(load.release + dt)
            }
        }
    }

    /// Full cloud specification of a load.
    pub fn cloud_spec(&self, load: &Load) -> Result<CloudSpec> {
        let f = &self.ring.frame;
        let along = f.tangent(0.0);
        let center = match self.stage {
            Stage::Ring => f.point(self.ring.zero_radius()?, 0.0, 0.0),
            Stage::Guide => self
                .guide
                .as_ref()
                .ok_or_else(|| Error::invalid("guide stage needs a guide layout"))?
                .release_point(&self.ring),
        };
        Ok(CloudSpec {
            n: load.n,
            center,
            longitudinal_axis: along,
            transverse_axis: f.radial(0.0),
            sigma: load.sigma,
            t_longitudinal: load.t_longitudinal,
            t_transverse: load.t_transverse,
            mean_velocity: along * load.speed,
        })
    }

    /// Ring with the junction attached when the junction loss is enabled.
    pub fn effective_ring(&self) -> RingGeometry {
        let mut ring = self.ring;
        if self.losses.junction && ring.junction.is_none() {
            ring.junction = Some(Junction::default());
        }
        ring
    }

    pub fn apparatus(&self) -> Result<Apparatus> {
        let ring = self.effective_ring();
        let table = Arc::new(RingFieldTable::for_ring(&ring)?);
        let guide = if self.stage == Stage::Guide {
            self.guide.as_ref()
        } else {
            None
        };
        Apparatus::with_table(table, guide, self.schedule.clone(), self.losses.junction)
    }
}

/// Passage through the half-plane of a monitored azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub monitor: u8,
    pub t: f64,
    /// Velocity component along the ring tangent (m/s).
    pub speed: f64,
    /// Distance from the ring zero circle (m).
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub load: usize,
    pub birth: f64,
    pub state: AtomState,
    pub crossings: Vec<Crossing>,
    /// (position, velocity) at each snapshot time while alive.
    pub snapshots: Vec<Option<(Vec3, Vec3)>>,
    /// Transverse energy at birth and at the end (J).
    pub transverse_energy: (f64, f64),
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub t: f64,
    pub born: usize,
    pub alive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub start: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(values: &[f64], start: f64, bin_width: f64, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        if bin_width > 0.0 {
            for v in values {
                let k = ((v - start) / bin_width).floor();
                if k >= 0.0 && (k as usize) < bins {
                    counts[k as usize] += 1;
                }
            }
        }
        Histogram {
            start,
            bin_width,
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub t: f64,
    pub alive: usize,
    /// Circular mean azimuth of the alive atoms (rad).
    pub centroid: f64,
    /// Robust arc-length spread (m).
    pub sigma_arc: Option<f64>,
    pub mean_speed: Option<f64>,
    /// Statistics of the gravity-corrected azimuthal speed.
    pub speed: Option<DistributionStats>,
    /// Arc-length positions about the centroid (m).
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub seed: u64,
    pub scenario_hash: String,
    pub n: usize,
    pub t_end: f64,
    pub alive: usize,
    pub losses: BTreeMap<String, usize>,
    pub survival: Vec<SurvivalPoint>,
    pub mean_entry_speed: Option<f64>,
    pub orbit_period: Option<f64>,
    pub snapshots: Vec<SnapshotSummary>,
    /// Transverse energy of the atoms alive at the end, in µK.
    pub transverse_energy: Histogram,
    pub mean_transverse_initial_uk: f64,
    pub mean_transverse_final_uk: Option<f64>,
    pub shaping: Vec<ShapeOutcome>,
    pub numeric_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub seed: u64,
    pub scenario_hash: String,
    pub t_end: f64,
    /// Monitored azimuths; crossing records refer to them by index.
    pub monitors: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub atoms: Vec<AtomRecord>,
    pub summary: Summary,
}

struct Monitor {
    tangent: Vec3,
    radial: Vec3,
}

struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    verlet: Verlet<'a, Apparatus>,
    bounds: Region,
    frame: RingFrame,
    r0: f64,
    monitors: Vec<Monitor>,
    spin: SpinConfig,
}

struct AtomRun {
    rec: AtomRecord,
    cache: Option<ForceCache>,
    rng: ChaCha8Rng,
    t_background: f64,
    sides: Vec<f64>,
    tracker: SpinTracker,
}

impl Runner<'_> {
    fn transverse_energy(&self, s: &AtomState, b: &Vec3) -> f64 {
        let (_, phi, _) = self.frame.to_cylindrical(&s.position);
        let t = self.frame.tangent(phi);
        let vp = s.velocity - t * t.dot(&s.velocity);
        let c = &self.cfg.constants;
        0.5 * c.mass() * vp.norm_squared() + c.mu_m() * b.norm()
    }

    fn sides(&self, p: &Vec3) -> Vec<f64> {
        let rel = p - self.frame.center;
        self.monitors.iter().map(|m| m.tangent.dot(&rel)).collect()
    }

    /// Integrate one atom up to `t_target`, applying per-step losses.
    fn advance(&self, a: &mut AtomRun, t_target: f64) {
        if a.rec.birth > t_target || !a.rec.state.is_alive() {
            return;
        }
        if let Err(e) = self.advance_inner(a, t_target) {
            let t = a.rec.state.t;
            a.rec.state.mark_lost(LossCause::NumericFailure, t);
            a.rec.failure = Some(e.to_string());
        }
    }

    fn advance_inner(&self, a: &mut AtomRun, t_target: f64) -> Result<()> {
        let cfg = self.cfg;
        let mut cache = match a.cache {
            Some(c) => c,
            None => {
                let c = self.verlet.prime(&a.rec.state)?;
                a.rec.transverse_energy.0 = self.transverse_energy(&a.rec.state, &c.b);
                c
            }
        };
        let s = &mut a.rec.state;
        let dt_max = cfg.dt;
        while s.t < t_target {
            let remaining = t_target - s.t;
            let dt = if remaining <= dt_max * (1.0 + 1e-9) {
                remaining
            } else {
                dt_max
            };
            let t_prev = s.t;
            let p_prev = s.position;
            let b_prev = cache.b;
            self.verlet.step(s, &mut cache, dt)?;
            if remaining <= dt_max * (1.0 + 1e-9) {
                s.t = t_target;
            }
            if s.t >= a.t_background {
                s.mark_lost(LossCause::BackgroundGas, a.t_background);
                break;
            }
            if !self.bounds.contains(&s.position) {
                let t = s.t;
                s.mark_lost(LossCause::OverBarrier, t);
                break;
            }
            match cfg.losses.majorana {
                MajoranaModel::Off => {}
                MajoranaModel::LossDisk { radius } => {
                    let bmin = min_norm_on_segment(&b_prev, &cache.b);
                    if bmin < local_gradient(&cache.j) * radius {
                        let t = s.t;
                        s.mark_lost(LossCause::Majorana, t);
                        break;
                    }
                }
                MajoranaModel::SpinOracle { radius, zone } => {
                    let bmin = min_norm_on_segment(&b_prev, &cache.b);
                    let explicit = bmin < local_gradient(&cache.j) * radius * zone;
                    let step = SpinStep {
                        p_prev,
                        p_new: s.position,
                        b_prev,
                        b_new: cache.b,
                        t_prev,
                        dt,
                    };
                    let src = self.verlet.source;
                    if let Some(ev) = hybrid_spin_step(
                        src,
                        &self.spin,
                        &mut s.spin,
                        &mut a.tracker,
                        &step,
                        explicit,
                    )? {
                        s.mark_lost(LossCause::Majorana, ev.t);
                        break;
                    }
                }
            }
            let rel = s.position - self.frame.center;
            for (k, m) in self.monitors.iter().enumerate() {
                let side = m.tangent.dot(&rel);
                let prev = a.sides[k];
                a.sides[k] = side;
                if prev < 0.0 && side >= 0.0 && m.radial.dot(&rel) > 0.0 {
                    let f = -prev / (side - prev);
                    let p = p_prev + (s.position - p_prev) * f;
                    let (rho, _, z) = self.frame.to_cylindrical(&p);
                    a.rec.crossings.push(Crossing {
                        monitor: k as u8,
                        t: t_prev + f * (s.t - t_prev),
                        speed: s.velocity.dot(&m.tangent),
                        offset: (rho - self.r0).hypot(z),
                    });
                }
            }
        }
        a.cache = Some(cache);
        Ok(())
    }
}

/// Run every cloud of `cfg` through its schedule.
///
/// Atoms are propagated in parallel between collective events (cloud
/// arrivals, shaping pulses, snapshots). Each atom draws from its own random
/// stream, so results do not depend on the number of worker threads.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let app = cfg.apparatus()?;
    let ring = cfg.effective_ring();
    let frame = ring.frame;
    let r0 = ring.zero_radius()?;
    let escape = cfg.escape_radius.unwrap_or(ring.separation);
    let torus = Region::Torus {
        frame,
        radius: r0,
        tube: escape,
    };
    let bounds = match (cfg.stage, &cfg.guide) {
        (Stage::Guide, Some(g)) => Region::Union(vec![torus, g.region(&ring)]),
        _ => torus,
    };
    let mut monitors_az = vec![cfg.probe.azimuth];
    if crate::magnetics::wrap_angle(cfg.probe.azimuth).abs() > 1e-12 {
        monitors_az.push(0.0);
    }
    let entry_monitor = monitors_az.len() - 1;
    let runner = Runner {
        cfg,
        verlet: Verlet::new(&app, cfg.constants, cfg.gravity()),
        bounds,
        frame,
        r0,
        monitors: monitors_az
            .iter()
            .map(|&a| Monitor {
                tangent: frame.tangent(a),
                radial: frame.radial(a),
            })
            .collect(),
        spin: SpinConfig::from_constants(&cfg.constants),
    };

    // sample all atoms up front; atom i uses stream i
    let mut owners = Vec::new();
    for (k, l) in cfg.loads.iter().enumerate() {
        owners.extend(std::iter::repeat_n(k, l.n));
    }
    let specs: Vec<CloudSpec> = cfg
        .loads
        .iter()
        .map(|l| cfg.cloud_spec(l))
        .collect::<Result<_>>()?;
    let mut atoms: Vec<AtomRun> = owners
        .par_iter()
        .enumerate()
        .map(|(i, &k)| -> Result<AtomRun> {
            let mut rng = atom_rng(cfg.seed, i as u64);
            let release = cfg.loads[k].release;
            let mut state = specs[k].sample_atom(&mut rng, &cfg.constants, Some(&app), release)?;
            if cfg.stage == Stage::Ring {
                state = bend_onto_ring(&state, &frame, r0, &app)?;
            }
            let t_background = match cfg.losses.background_lifetime {
                Some(tau) => release - tau * (1.0 - rng.random::<f64>()).ln(),
                None => f64::INFINITY,
            };
            let sides = runner.sides(&state.position);
            Ok(AtomRun {
                rec: AtomRecord {
                    load: k,
                    birth: release,
                    state,
                    crossings: Vec::new(),
                    snapshots: Vec::new(),
                    transverse_energy: (0.0, f64::NAN),
                    failure: None,
                },
                cache: None,
                rng,
                t_background,
                sides,
                tracker: SpinTracker::default(),
            })
        })
        .collect::<Result<_>>()?;

    // collective events
    #[derive(Clone, Copy)]
    enum Ev {
        Scatter(usize),
        Shape(usize),
        Snapshot(usize),
    }
    let mut events: Vec<(f64, u8, Ev)> = Vec::new();
    for (k, l) in cfg.loads.iter().enumerate().skip(1) {
        if cfg.losses.scattered_light > 0.0 {
            events.push((cfg.arrival_time(l)?.min(cfg.t_end), 0, Ev::Scatter(k)));
        }
    }
    for (k, s) in cfg.shaping.iter().enumerate() {
        events.push((s.t, 1, Ev::Shape(k)));
    }
    for (k, &t) in cfg.snapshots.iter().enumerate() {
        events.push((t, 2, Ev::Snapshot(k)));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut shaping_outcomes = Vec::new();
    for a in atoms.iter_mut() {
        a.rec.snapshots = vec![None; cfg.snapshots.len()];
    }
    for &(t, _, ev) in &events {
        atoms.par_iter_mut().for_each(|a| runner.advance(a, t));
        match ev {
            Ev::Scatter(k) => {
                for a in atoms.iter_mut() {
                    if a.rec.load < k && a.rec.birth <= t && a.rec.state.is_alive() {
                        let u: f64 = a.rng.random();
                        if u < cfg.losses.scattered_light {
                            a.rec.state.mark_lost(LossCause::ScatteredLight, t);
                        }
                    }
                }
            }
            Ev::Shape(k) => {
                let idx: Vec<usize> = (0..atoms.len())
                    .filter(|&i| atoms[i].rec.birth <= t && atoms[i].rec.state.is_alive())
                    .collect();
                let mut states: Vec<AtomState> = idx.iter().map(|&i| atoms[i].rec.state).collect();
                let out = shape_velocity(&mut states, &frame, r0, &cfg.shaping[k].window)?;
                for (&i, s) in idx.iter().zip(states) {
                    atoms[i].rec.state = s;
                }
                shaping_outcomes.push(out);
            }
            Ev::Snapshot(k) => {
                for a in atoms.iter_mut() {
                    if a.rec.birth <= t && a.rec.state.is_alive() {
                        a.rec.snapshots[k] = Some((a.rec.state.position, a.rec.state.velocity));
                    }
                }
            }
        }
    }
    atoms.par_iter_mut().for_each(|a| {
        runner.advance(a, cfg.t_end);
        if a.rec.state.is_alive() && a.rec.birth <= cfg.t_end {
            let b = app
                .field(&a.rec.state.position, a.rec.state.t)
                .unwrap_or_default();
            a.rec.transverse_energy.1 = runner.transverse_energy(&a.rec.state, &b);
        }
    });

    let records: Vec<AtomRecord> = atoms.into_iter().map(|a| a.rec).collect();
    let failures: Vec<&AtomRecord> = records.iter().filter(|r| r.failure.is_some()).collect();
    if failures.len() * 2 > records.len() {
        return Err(Error::Numeric {
            message: format!(
                "{} of {} trajectories failed",
                failures.len(),
                records.len()
            ),
            diagnostics: failures
                .iter()
                .take(5)
                .filter_map(|r| r.failure.clone())
                .collect(),
        });
    }
    let hash = cfg.hash();
    let summary = summarize(
        cfg,
        &records,
        &hash,
        &frame,
        r0,
        entry_monitor as u8,
        shaping_outcomes,
    )?;
    Ok(ScenarioResult {
        seed: cfg.seed,
        scenario_hash: hash,
        t_end: cfg.t_end,
        monitors: monitors_az,
        snapshot_times: cfg.snapshots.clone(),
        atoms: records,
        summary,
    })
}

/// Map a state sampled in the straight frame at azimuth zero onto the ring:
/// the longitudinal offset becomes arc length and the velocity turns with
/// the local tangent. The spin is re-aligned against the local field.
fn bend_onto_ring(
    s: &AtomState,
    frame: &RingFrame,
    r0: f64,
    source: &Apparatus,
) -> Result<AtomState> {
    let (t0, q0, a0) = (frame.tangent(0.0), frame.radial(0.0), frame.axis());
    let rel = s.position - frame.point(r0, 0.0, 0.0);
    let phi = rel.dot(&t0) / r0;
    let p = frame.point(r0 + rel.dot(&q0), phi, rel.dot(&a0));
    let v = frame.tangent(phi) * s.velocity.dot(&t0)
        + frame.radial(phi) * s.velocity.dot(&q0)
        + a0 * s.velocity.dot(&a0);
    let b = source.field(&p, s.t)?;
    let spin = if b.norm() > 0.0 {
        -b.normalize()
    } else {
        s.spin
    };
    AtomState::new(p, v, spin, s.t)
}

/// Azimuthal speed corrected to the height of azimuth zero on the circle of
/// radius `r0`, so that clouds in a vertical ring compare at one height.
pub fn reference_speed(frame: &RingFrame, r0: f64, gravity: &Gravity, p: &Vec3, v: &Vec3) -> f64 {
    let (_, phi, _) = frame.to_cylindrical(p);
    let vphi = v.dot(&frame.tangent(phi));
    let p0 = frame.point(r0, 0.0, 0.0);
    let v2 = vphi * vphi + 2.0 * gravity.acceleration.dot(&(p0 - p));
    v2.max(0.0).sqrt().copysign(vphi)
}

fn summarize(
    cfg: &ScenarioConfig,
    records: &[AtomRecord],
    hash: &str,
    frame: &RingFrame,
    r0: f64,
    entry: u8,
    shaping: Vec<ShapeOutcome>,
) -> Result<Summary> {
    let kb = cfg.constants.kb();
    let mut losses: BTreeMap<String, usize> = LossCause::ALL
        .iter()
        .map(|c| (c.as_str().to_string(), 0))
        .collect();
    let mut loss_times = Vec::new();
    for r in records {
        if let Status::Lost { cause, t } = r.state.status {
            *losses.get_mut(cause.as_str()).expect("all causes listed") += 1;
            loss_times.push(t);
        }
    }
    let alive = records.iter().filter(|r| r.state.is_alive()).count();
    let mut births: Vec<f64> = records.iter().map(|r| r.birth).collect();
    births.sort_by(f64::total_cmp);
    loss_times.sort_by(f64::total_cmp);
    let survival = (0..=100)
        .map(|i| {
            let t = cfg.t_end * i as f64 / 100.0;
            let born = births.partition_point(|&b| b <= t);
            let lost = loss_times.partition_point(|&x| x <= t);
            SurvivalPoint {
                t,
                born,
                alive: born - lost,
            }
        })
        .collect();

    let mut entry_speeds = Vec::new();
    let mut periods = Vec::new();
    for r in records {
        let mut prev: Option<f64> = None;
        for c in r.crossings.iter().filter(|c| c.monitor == entry) {
            if prev.is_none() {
                entry_speeds.push(c.speed);
            } else if let Some(p) = prev {
                periods.push(c.t - p);
            }
            prev = Some(c.t);
        }
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);

    let gravity = cfg.gravity();
    let mut snapshots = Vec::new();
    for (k, &t) in cfg.snapshots.iter().enumerate() {
        let states: Vec<AtomState> = records
            .iter()
            .filter_map(|r| r.snapshots[k])
            .map(|(p, v)| AtomState {
                position: p,
                velocity: v,
                spin: Vec3::z(),
                status: Status::Alive,
                t,
            })
            .collect();
        let (centroid, offsets) = azimuthal_offsets(&states, frame, r0);
        let speeds: Vec<f64> = states
            .iter()
            .map(|s| reference_speed(frame, r0, &gravity, &s.position, &s.velocity))
            .collect();
        let sigma_arc = if offsets.len() >= 2 {
            Some(robust_sigma(&offsets)?)
        } else {
            None
        };
        let vbar = mean(&speeds);
        let speed = match (speeds.len() >= 2, vbar) {
            (true, Some(vb)) => Some(stats_from_sigma(robust_sigma(&speeds)?, vb, &cfg.constants)),
            _ => None,
        };
        let histogram = match sigma_arc {
            Some(s) if s > 0.0 => Histogram::build(&offsets, -4.0 * s, 0.2 * s, 40),
            _ => Histogram::build(&[], 0.0, 0.0, 0),
        };
        snapshots.push(SnapshotSummary {
            t,
            alive: states.len(),
            centroid: if states.is_empty() { 0.0 } else { centroid },
            sigma_arc,
            mean_speed: vbar,
            speed,
            histogram,
        });
    }

    let e_init: Vec<f64> = records
        .iter()
        .map(|r| r.transverse_energy.0 / kb * 1e6)
        .collect();
    let e_final: Vec<f64> = records
        .iter()
        .filter(|r| r.state.is_alive() && r.transverse_energy.1.is_finite())
        .map(|r| r.transverse_energy.1 / kb * 1e6)
        .collect();
    let top = e_final.iter().copied().fold(0.0, f64::max);
    let width = if top > 0.0 {
        top / 40.0 * (1.0 + 1e-12)
    } else {
        1.0
    };
    Ok(Summary {
        version: crate::VERSION.to_string(),
        seed: cfg.seed,
        scenario_hash: hash.to_string(),
        n: records.len(),
        t_end: cfg.t_end,
        alive,
        losses,
        survival,
        mean_entry_speed: mean(&entry_speeds),
        orbit_period: mean(&periods),
        snapshots,
        transverse_energy: Histogram::build(&e_final, 0.0, width, 40),
        mean_transverse_initial_uk: mean(&e_init).unwrap_or(0.0),
        mean_transverse_final_uk: mean(&e_final),
        shaping,
        numeric_failures: records.iter().filter(|r| r.failure.is_some()).count(),
    })
}

/// Orbit period of the ring stage's configured geometry for an atom on the
/// zero circle entering at `v_entry`.
pub fn configured_orbit_period(cfg: &ScenarioConfig, v_entry: f64) -> Result<f64> {
    let ring = cfg.effective_ring();
    super::orbit::orbit_period(&ring.frame, ring.zero_radius()?, &cfg.gravity(), v_entry)
}

/// Circumference of the ring zero circle (m).
pub fn zero_circumference(cfg: &ScenarioConfig) -> Result<f64> {
    Ok(2.0 * PI * cfg.ring.zero_radius()?)
}
