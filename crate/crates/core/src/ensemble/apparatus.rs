use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::dynamics::{RampSchedule, Region};
use crate::magnetics::{
    field_exact_jacobian, FieldSource, JunctionModel, RingFieldTable, RingGeometry, WireElement,
};
use crate::{Error, Mat3, Result, Vec3};

/// Feed guide that brings atoms down to the ring.
///
/// A straight two-wire section runs along the ring tangent at azimuth zero
/// and ends at the ring plane a distance `offset` outside the ring wires. It
/// continues as an arc coaxial with the ring for `overlap` of arc length and
/// leaves radially through leads that are closed far from the atoms. The
/// wire pair is split along the ring axis like the ring itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuideLayout {
    /// Wire separation at the ring (m).
    pub separation: f64,
    /// Radial distance of the guide wires outside the ring wires (m).
    pub offset: f64,
    /// Height of the cloud release point above the ring plane entry (m).
    pub fall_height: f64,
    /// Wire separation at the release height; `None` keeps the guide uniform.
    pub taper_separation: Option<f64>,
    /// Arc length shared with the ring (m).
    pub overlap: f64,
    pub lead_length: f64,
    pub arc_chords: usize,
}

impl Default for GuideLayout {
    fn default() -> Self {
        GuideLayout {
            separation: 840e-6,
            offset: 420e-6,
            fall_height: 0.04,
            taper_separation: Some(4e-3),
            overlap: 0.015,
            lead_length: 0.2,
            arc_chords: 48,
        }
    }
}

impl GuideLayout {
    pub fn validate(&self, ring: &RingGeometry) -> Result<()> {
        let ok = self.separation > 0.0
            && self.offset > 0.0
            && self.fall_height > 0.0
            && self.overlap > 0.0
            && self.lead_length > 0.0
            && self.arc_chords >= 2
            && self.taper_separation.is_none_or(|s| s > 0.0);
        if !ok {
            return Err(Error::invalid("guide layout lengths must be positive"));
        }
        if self.overlap >= 0.5 * std::f64::consts::PI * (ring.radius + self.offset) {
            return Err(Error::Geometry(
                "guide overlap longer than a quarter of the ring".into(),
            ));
        }
        Ok(())
    }

    /// Radius of the guide arc.
    pub fn arc_radius(&self, ring: &RingGeometry) -> f64 {
        ring.radius + self.offset
    }

    /// Point where the falling cloud is released, on the guide axis.
    pub fn release_point(&self, ring: &RingGeometry) -> Vec3 {
        let f = &ring.frame;
        f.point(self.arc_radius(ring), 0.0, 0.0) - f.tangent(0.0) * self.fall_height
    }

    /// Azimuth at which the guide arc ends.
    pub fn overlap_angle(&self, ring: &RingGeometry) -> f64 {
        self.overlap / self.arc_radius(ring)
    }

    /// Closed wire loops, one per guide wire, for 1 A.
    pub fn wire_elements(&self, ring: &RingGeometry) -> Result<Vec<WireElement>> {
        self.validate(ring)?;
        let f = &ring.frame;
        let ra = self.arc_radius(ring);
        let down = f.tangent(0.0);
        let top_sep = self.taper_separation.unwrap_or(self.separation);
        let above = 0.25 * self.fall_height;
        let phi_end = self.overlap_angle(ring);
        let mut out = Vec::new();
        for sign in [1.0, -1.0] {
            let z = 0.5 * sign * self.separation;
            let z_top = 0.5 * sign * top_sep;
            let entry = f.point(ra, 0.0, z);
            let release = f.point(ra, 0.0, z_top) - down * self.fall_height;
            let top = release - down * above;
            let mut path = vec![top, release, entry];
            for k in 1..=self.arc_chords {
                path.push(f.point(ra, phi_end * k as f64 / self.arc_chords as f64, z));
            }
            let lead = f.point(ra + self.lead_length, phi_end, z);
            path.push(lead);
            path.push(top + f.radial(0.0) * self.lead_length);
            path.push(top);
            out.extend(
                path.windows(2)
                    .map(|w| WireElement::segment(w[0], w[1], 1.0)),
            );
        }
        Ok(out)
    }

    /// Region the guide wires confine atoms to before transfer.
    pub fn region(&self, ring: &RingGeometry) -> Region {
        let f = &ring.frame;
        let ra = self.arc_radius(ring);
        let top_sep = self.taper_separation.unwrap_or(self.separation);
        let release = f.point(ra, 0.0, 0.0) - f.tangent(0.0) * (1.25 * self.fall_height);
        let mut parts = vec![Region::Capsule {
            start: release,
            end: f.point(ra, 0.0, 0.0),
            radius: top_sep.max(self.separation),
        }];
        let n = 8;
        let phi_end = self.overlap_angle(ring);
        for k in 0..n {
            parts.push(Region::Capsule {
                start: f.point(ra, phi_end * k as f64 / n as f64, 0.0),
                end: f.point(ra, phi_end * (k + 1) as f64 / n as f64, 0.0),
                radius: self.separation + self.offset,
            });
        }
        Region::Union(parts)
    }
}

/// Ring plus optional feed guide driven by a current schedule.
///
/// Ring fields come from a tabulated cross-section; guide fields are summed
/// over its straight segments and only when the guide current is on. The
/// junction ripple, when enabled, multiplies the total field.
#[derive(Debug, Clone)]
pub struct Apparatus {
    ring: RingGeometry,
    table: Arc<RingFieldTable>,
    guide: Vec<WireElement>,
    schedule: RampSchedule,
    junction: Option<JunctionModel>,
}

impl Apparatus {
    pub fn new(
        ring: &RingGeometry,
        guide: Option<&GuideLayout>,
        schedule: RampSchedule,
        junction: bool,
    ) -> Result<Self> {
        ring.validate()?;
        let table = Arc::new(RingFieldTable::for_ring(ring)?);
        Self::with_table(table, guide, schedule, junction)
    }

    /// Reuse an existing ring table.
    pub fn with_table(
        table: Arc<RingFieldTable>,
        guide: Option<&GuideLayout>,
        schedule: RampSchedule,
        junction: bool,
    ) -> Result<Self> {
        let ring = *table.geometry();
        let guide = match guide {
            Some(g) => g.wire_elements(&ring)?,
            None => Vec::new(),
        };
        let junction = if junction {
            ring.junction_model()
        } else {
            None
        };
        Ok(Apparatus {
            ring,
            table,
            guide,
            schedule,
            junction,
        })
    }

    pub fn ring(&self) -> &RingGeometry {
        &self.ring
    }

    pub fn schedule(&self) -> &RampSchedule {
        &self.schedule
    }

    pub fn guide_elements(&self) -> &[WireElement] {
        &self.guide
    }
}

impl FieldSource for Apparatus {
    fn field(&self, p: &Vec3, t: f64) -> Result<Vec3> {
        Ok(self.field_jacobian(p, t)?.0)
    }

    fn field_jacobian(&self, p: &Vec3, t: f64) -> Result<(Vec3, Mat3)> {
        let (ig, ir) = self.schedule.currents(t);
        let mut b = Vec3::zeros();
        let mut j = Mat3::zeros();
        if ir != 0.0 {
            let (br, jr) = self.table.field_per_amp(p)?;
            b += br * ir;
            j += jr * ir;
        }
        if ig != 0.0 && !self.guide.is_empty() {
            let (bg, jg) = field_exact_jacobian(p, &self.guide, None)?;
            b += bg * ig;
            j += jg * ig;
        }
        Ok(match &self.junction {
            Some(jm) => jm.apply(p, b, j),
            None => (b, j),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetics::divergence_and_curl;

    #[test]
    fn guide_field_is_a_clean_quadrupole_above_the_ring() {
        let ring = RingGeometry::default();
        let layout = GuideLayout {
            taper_separation: None,
            ..GuideLayout::default()
        };
        let app = Apparatus::new(
            &ring,
            Some(&layout),
            RampSchedule::constant(8.0, 0.0).unwrap(),
            false,
        )
        .unwrap();
        // half way down the straight section the zero sits on the guide axis
        let p = layout.release_point(&ring) + ring.frame.tangent(0.0) * 0.02;
        let b = app.field(&p, 0.0).unwrap();
        assert!(b.norm() < 1e-4, "{b:?}");
        let (div, curl) =
            divergence_and_curl(&app, &(p + Vec3::new(1e-4, 0.0, 0.0)), 0.0, 1e-7).unwrap();
        assert!(div.abs() < 1e-3 && curl.norm() < 1e-3, "{div} {curl:?}");
    }

    #[test]
    fn ring_only_matches_closed_form() {
        let ring = RingGeometry::default();
        let app = Apparatus::new(
            &ring,
            None,
            RampSchedule::constant(0.0, 8.0).unwrap(),
            false,
        )
        .unwrap();
        let p = ring.frame.point(ring.radius + 1e-4, 1.0, 5e-5);
        let (b, _) = app.field_jacobian(&p, 0.3).unwrap();
        let (bx, _) = ring.field_jacobian(&p).unwrap();
        assert!((b - bx).norm() < 1e-6 * bx.norm());
    }
}
