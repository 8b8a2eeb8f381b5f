use super::run::{Load, ScenarioConfig, Stage};
use crate::dynamics::{build_transfer_ramp, Breakpoint, EventKind, RampSchedule, TransferMode};
use crate::magnetics::GuideGeometry;
use crate::{Error, Result};

/// Switch-on time of the guide before a guide-stage release (s).
const GUIDE_SWITCH_ON: f64 = 1e-3;

/// Add a second release of the first cloud `reload_delay` after it, with a
/// reload-mode ramp: the ring dips to 2 A while the second cloud arrives and
/// the cross ramp brings it back to full current. In the guide stage the
/// guide is switched on for the second fall.
pub fn schedule_multi_load(cfg: &ScenarioConfig, reload_delay: f64) -> Result<ScenarioConfig> {
    if !(reload_delay > cfg.transfer_time) {
        return Err(Error::invalid(format!(
            "reload delay {reload_delay} s must exceed the transfer time {} s",
            cfg.transfer_time
        )));
    }
    let first = *cfg
        .loads
        .first()
        .ok_or_else(|| Error::invalid("scenario has no first cloud"))?;
    let second = Load {
        release: first.release + reload_delay,
        ..first
    };
    let arrival = cfg.arrival_time(&second)?;
    let guide = GuideGeometry {
        current: cfg.guide_current,
        ..GuideGeometry::default()
    };
    let reload = build_transfer_ramp(
        &guide,
        &cfg.ring,
        arrival,
        cfg.transfer_time,
        TransferMode::reload_default(),
    )?;
    let mut bps: Vec<Breakpoint> = reload.breakpoints().to_vec();
    if cfg.stage == Stage::Guide {
        let ring = bps[0].ring;
        if !(second.release < bps[0].t) {
            return Err(Error::Schedule(
                "second cloud must be released before the ring dip".into(),
            ));
        }
        bps[0].guide = cfg.guide_current;
        bps.insert(
            0,
            Breakpoint {
                t: second.release,
                guide: cfg.guide_current,
                ring,
            },
        );
        bps.insert(
            0,
            Breakpoint {
                t: second.release - GUIDE_SWITCH_ON,
                guide: 0.0,
                ring,
            },
        );
    }
    let mut appended = RampSchedule::new(bps)?;
    for e in &reload.events {
        appended.add_event(e.t, e.kind);
    }
    appended.add_event(second.release, EventKind::SecondLoad);
    let mut out = cfg.clone();
    out.schedule.extend(&appended)?;
    out.loads.push(second);
    out.validate()?;
    Ok(out)
}
