use serde::{Deserialize, Serialize};

use crate::magnetics::{FieldSource, GuideGeometry, RingGeometry};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    pub guide: f64,
    pub ring: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    TransferStart,
    TransferEnd,
    DipStart,
    Probe,
    Shaping,
    SecondLoad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEvent {
    pub t: f64,
    pub kind: EventKind,
}

/// Piecewise-linear guide and ring currents. Before the first breakpoint and
/// after the last the end values are held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampSchedule {
    breakpoints: Vec<Breakpoint>,
    pub events: Vec<ScheduleEvent>,
}

impl RampSchedule {
    pub fn new(breakpoints: Vec<Breakpoint>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Schedule(
                "schedule needs at least one breakpoint".into(),
            ));
        }
        for b in &breakpoints {
            if !(b.t.is_finite() && b.guide.is_finite() && b.ring.is_finite())
                || b.guide < 0.0
                || b.ring < 0.0
            {
                return Err(Error::Schedule(format!(
                    "breakpoint at t = {} s has negative or non-finite values",
                    b.t
                )));
            }
        }
        for w in breakpoints.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::Schedule(format!(
                    "breakpoint times must be strictly increasing ({} s then {} s)",
                    w[0].t, w[1].t
                )));
            }
        }
        Ok(RampSchedule {
            breakpoints,
            events: Vec::new(),
        })
    }

    /// Constant currents for all time.
    pub fn constant(guide: f64, ring: f64) -> Result<Self> {
        Self::new(vec![Breakpoint {
            t: 0.0,
            guide,
            ring,
        }])
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0].t
    }

    pub fn end(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1].t
    }

    /// `(I_guide, I_ring)` at time `t`.
    pub fn currents(&self, t: f64) -> (f64, f64) {
        let bp = &self.breakpoints;
        if t <= bp[0].t {
            return (bp[0].guide, bp[0].ring);
        }
        let last = bp[bp.len() - 1];
        if t >= last.t {
            return (last.guide, last.ring);
        }
        let i = bp.partition_point(|b| b.t <= t) - 1;
        let (a, b) = (bp[i], bp[i + 1]);
        let f = (t - a.t) / (b.t - a.t);
        (
            a.guide + f * (b.guide - a.guide),
            a.ring + f * (b.ring - a.ring),
        )
    }

    /// Breakpoint times inside `(t0, t1)`; useful for stepping exactly onto kinks.
    pub fn kinks_between(&self, t0: f64, t1: f64) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints
            .iter()
            .map(|b| b.t)
            .filter(move |&t| t > t0 && t < t1)
    }

    pub fn add_event(&mut self, t: f64, kind: EventKind) {
        let i = self.events.partition_point(|e| e.t <= t);
        self.events.insert(i, ScheduleEvent { t, kind });
    }

    /// Append another schedule that starts after this one ends. The first
    /// appended breakpoint must continue from the current end values.
    pub fn extend(&mut self, other: &RampSchedule) -> Result<()> {
        let first = other.breakpoints[0];
        if first.t < self.end() {
            return Err(Error::Schedule(format!(
                "ramp starting at {} s overlaps the schedule ending at {} s",
                first.t,
                self.end()
            )));
        }
        if first.t == self.end() {
            let (g, r) = self.currents(self.end());
            if first.guide != g || first.ring != r {
                return Err(Error::Schedule(
                    "appended ramp would make the currents jump".into(),
                ));
            }
        } else {
            self.breakpoints.push(first);
        }
        self.breakpoints
            .extend(other.breakpoints.iter().skip(1).copied());
        for e in &other.events {
            self.add_event(e.t, e.kind);
        }
        Ok(())
    }

    /// Largest absolute current step between consecutive breakpoints per
    /// unit time; finite for every valid schedule.
    pub fn max_slew(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| {
                ((w[1].guide - w[0].guide)
                    .abs()
                    .max((w[1].ring - w[0].ring).abs()))
                    / (w[1].t - w[0].t)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferMode {
    Load,
    /// Ring already holds atoms: dip the ring to `dip_current` over
    /// `dip_ramp`, hold until the cross-ramp, then cross-ramp back up.
    Reload {
        dip_current: f64,
        dip_ramp: f64,
        dip_hold: f64,
    },
}

impl TransferMode {
    pub fn reload_default() -> Self {
        TransferMode::Reload {
            dip_current: 2.0,
            dip_ramp: 2e-3,
            dip_hold: 0.0,
        }
    }
}

/// Linear cross-ramp `I_guide: I -> 0`, `I_ring: 0 -> I` over `t_transfer`
/// beginning at `t_start`. In reload mode the ring first dips to a lower
/// current and the guide comes up with it.
pub fn build_transfer_ramp(
    guide: &GuideGeometry,
    ring: &RingGeometry,
    t_start: f64,
    t_transfer: f64,
    mode: TransferMode,
) -> Result<RampSchedule> {
    if !(t_transfer > 0.0) || !t_transfer.is_finite() {
        return Err(Error::invalid("transfer time must be positive"));
    }
    if !t_start.is_finite() {
        return Err(Error::invalid("transfer start must be finite"));
    }
    let (ig, ir) = (guide.current, ring.current);
    let mut bps = Vec::new();
    let mut sched_events = vec![];
    match mode {
        TransferMode::Load => {
            bps.push(Breakpoint {
                t: t_start,
                guide: ig,
                ring: 0.0,
            });
            bps.push(Breakpoint {
                t: t_start + t_transfer,
                guide: 0.0,
                ring: ir,
            });
        }
        TransferMode::Reload {
            dip_current,
            dip_ramp,
            dip_hold,
        } => {
            if !(dip_current >= 0.0) || !(dip_ramp > 0.0) || !(dip_hold >= 0.0) {
                return Err(Error::invalid(
                    "reload dip needs current >= 0, ramp > 0, hold >= 0",
                ));
            }
            let t0 = t_start - dip_ramp - dip_hold;
            bps.push(Breakpoint {
                t: t0,
                guide: 0.0,
                ring: ir,
            });
            bps.push(Breakpoint {
                t: t0 + dip_ramp,
                guide: ig,
                ring: dip_current,
            });
            if dip_hold > 0.0 {
                bps.push(Breakpoint {
                    t: t_start,
                    guide: ig,
                    ring: dip_current,
                });
            }
            bps.push(Breakpoint {
                t: t_start + t_transfer,
                guide: 0.0,
                ring: ir,
            });
            sched_events.push(ScheduleEvent {
                t: t0,
                kind: EventKind::DipStart,
            });
        }
    }
    let mut s = RampSchedule::new(bps)?;
    for e in sched_events {
        s.add_event(e.t, e.kind);
    }
    s.add_event(t_start, EventKind::TransferStart);
    s.add_event(t_start + t_transfer, EventKind::TransferEnd);
    Ok(s)
}

/// Follow the field zero of a time-dependent source through `times`,
/// starting from `start` and moving only within the plane spanned by `u`
/// and `w`. Fails if the zero jumps by more than `max_jump` between
/// consecutive times or no zero can be found.
pub fn track_zero<S: FieldSource + ?Sized>(
    source: &S,
    times: &[f64],
    start: Vec3,
    u: Vec3,
    w: Vec3,
    max_jump: f64,
) -> Result<Vec<(f64, Vec3)>> {
    let mut p = start;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let prev = p;
        let mut converged = false;
        for _ in 0..60 {
            let (b, j) = source.field_jacobian(&p, t)?;
            let m = nalgebra::Matrix2::new(
                u.dot(&(j * u)),
                u.dot(&(j * w)),
                w.dot(&(j * u)),
                w.dot(&(j * w)),
            );
            let rhs = nalgebra::Vector2::new(b.dot(&u), b.dot(&w));
            let step = m.try_inverse().ok_or_else(|| {
                Error::Geometry(format!(
                    "degenerate field Jacobian while tracking the zero at t = {t} s"
                ))
            })? * rhs;
            let mut dp = u * step.x + w * step.y;
            if dp.norm() > max_jump {
                dp *= max_jump / dp.norm();
            }
            p -= dp;
            if dp.norm() < 1e-13 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Geometry(format!(
                "trap zero lost at t = {t} s near {p:?}"
            )));
        }
        if !out.is_empty() && (p - prev).norm() > max_jump {
            return Err(Error::Geometry(format!(
                "trap zero jumped by {:e} m at t = {t} s",
                (p - prev).norm()
            )));
        }
        out.push((t, p));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_currents_at_midpoint() {
        let s = build_transfer_ramp(
            &GuideGeometry::default(),
            &RingGeometry::default(),
            0.0,
            16e-3,
            TransferMode::Load,
        )
        .unwrap();
        let (g, r) = s.currents(8e-3);
        assert!((g - 4.0).abs() < 1e-12 && (r - 4.0).abs() < 1e-12);
        assert_eq!(s.currents(-1.0), (8.0, 0.0));
        assert_eq!(s.currents(1.0), (0.0, 8.0));
    }

    #[test]
    fn reload_has_plateau() {
        let mode = TransferMode::Reload {
            dip_current: 2.0,
            dip_ramp: 2e-3,
            dip_hold: 5e-3,
        };
        let s = build_transfer_ramp(
            &GuideGeometry::default(),
            &RingGeometry::default(),
            0.3,
            16e-3,
            mode,
        )
        .unwrap();
        assert_eq!(s.currents(0.297).1, 2.0);
        assert_eq!(s.currents(0.299).1, 2.0);
        assert_eq!(s.currents(0.316).1, 8.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_transfer_ramp(
            &GuideGeometry::default(),
            &RingGeometry::default(),
            0.0,
            0.0,
            TransferMode::Load
        )
        .is_err());
        assert!(RampSchedule::new(vec![
            Breakpoint {
                t: 0.0,
                guide: 1.0,
                ring: 0.0
            },
            Breakpoint {
                t: 0.0,
                guide: 0.0,
                ring: 1.0
            }
        ])
        .is_err());
        assert!(RampSchedule::constant(-1.0, 0.0).is_err());
    }

    #[test]
    fn extend_detects_overlap() {
        let mut a = build_transfer_ramp(
            &GuideGeometry::default(),
            &RingGeometry::default(),
            0.0,
            0.016,
            TransferMode::Load,
        )
        .unwrap();
        let b = build_transfer_ramp(
            &GuideGeometry::default(),
            &RingGeometry::default(),
            0.01,
            0.016,
            TransferMode::reload_default(),
        )
        .unwrap();
        assert!(matches!(a.extend(&b), Err(Error::Schedule(_))));
        let c = build_transfer_ramp(
            &GuideGeometry::default(),
            &RingGeometry::default(),
            0.3,
            0.016,
            TransferMode::reload_default(),
        )
        .unwrap();
        a.extend(&c).unwrap();
        assert_eq!(a.currents(0.2), (0.0, 8.0));
        assert_eq!(a.currents(0.3), (8.0, 2.0));
        assert_eq!(a.currents(0.4), (0.0, 8.0));
    }
}
