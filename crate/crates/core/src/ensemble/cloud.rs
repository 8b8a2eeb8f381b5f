use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::AtomState;
use crate::magnetics::FieldSource;
use crate::rng::atom_rng;
use crate::{Error, PhysicalConstants, Result, Vec3};

/// Thermal cloud. Positions are Gaussian along the longitudinal axis, the
/// transverse axis and their cross product; velocities are Maxwellian with
/// the longitudinal temperature along the first axis and the transverse one
/// on the other two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    pub n: usize,
    pub center: Vec3,
    pub longitudinal_axis: Vec3,
    pub transverse_axis: Vec3,
    /// (longitudinal, transverse, second transverse) spreads (m).
    pub sigma: [f64; 3],
    pub t_longitudinal: f64,
    pub t_transverse: f64,
    pub mean_velocity: Vec3,
}

impl Default for CloudSpec {
    fn default() -> Self {
        CloudSpec {
            n: 1000,
            center: Vec3::zeros(),
            longitudinal_axis: Vec3::z(),
            transverse_axis: Vec3::x(),
            sigma: [0.0; 3],
            t_longitudinal: 3e-6,
            t_transverse: 57e-6,
            mean_velocity: Vec3::zeros(),
        }
    }
}

impl CloudSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("cloud needs at least one atom"));
        }
        if self.sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::invalid(
                "cloud position spreads must be non-negative",
            ));
        }
        if !(self.t_longitudinal >= 0.0) || !(self.t_transverse >= 0.0) {
            return Err(Error::invalid("cloud temperatures must be non-negative"));
        }
        let (l, t) = (self.longitudinal_axis, self.transverse_axis);
        if (l.norm() - 1.0).abs() > 1e-9 || (t.norm() - 1.0).abs() > 1e-9 || l.dot(&t).abs() > 1e-9
        {
            return Err(Error::invalid("cloud axes must be orthonormal"));
        }
        if !self
            .center
            .iter()
            .chain(self.mean_velocity.iter())
            .all(|c| c.is_finite())
        {
            return Err(Error::invalid("cloud centre and velocity must be finite"));
        }
        Ok(())
    }

    pub fn axes(&self) -> [Vec3; 3] {
        let l = self.longitudinal_axis;
        let t = self.transverse_axis;
        [l, t, l.cross(&t)]
    }

    /// Draw one atom. Spins start anti-aligned with the local field
    /// (weak-field seeking); without a usable field they point along
    /// minus the second transverse axis.
    pub fn sample_atom<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        constants: &PhysicalConstants,
        source: Option<&dyn FieldSource>,
        t0: f64,
    ) -> Result<AtomState> {
        let axes = self.axes();
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let sv_l = (constants.kb() * self.t_longitudinal / constants.mass()).sqrt();
        let sv_t = (constants.kb() * self.t_transverse / constants.mass()).sqrt();
        let mut p = self.center;
        let mut v = self.mean_velocity;
        for (k, axis) in axes.iter().enumerate() {
            p += axis * (self.sigma[k] * std.sample(rng));
        }
        for (k, axis) in axes.iter().enumerate() {
            let sv = if k == 0 { sv_l } else { sv_t };
            v += axis * (sv * std.sample(rng));
        }
        let spin = match source {
            Some(s) => {
                let b = s.field(&p, t0)?;
                if b.norm() > 0.0 {
                    -b.normalize()
                } else {
                    -axes[2]
                }
            }
            None => -axes[2],
        };
        AtomState::new(p, v, spin, t0)
    }
}

/// Sample `spec.n` atoms, atom `i` from random stream `i` of `seed`.
pub fn sample_cloud(
    spec: &CloudSpec,
    seed: u64,
    constants: &PhysicalConstants,
    source: Option<&dyn FieldSource>,
) -> Result<Vec<AtomState>> {
    spec.validate()?;
    (0..spec.n)
        .map(|i| spec.sample_atom(&mut atom_rng(seed, i as u64), constants, source, 0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cold_point_cloud() {
        let c = PhysicalConstants::rb87();
        let spec = CloudSpec {
            n: 10,
            center: Vec3::new(1.0, 2.0, 3.0),
            t_longitudinal: 0.0,
            t_transverse: 0.0,
            mean_velocity: Vec3::new(0.0, 0.0, -0.8),
            ..CloudSpec::default()
        };
        let atoms = sample_cloud(&spec, 5, &c, None).unwrap();
        assert!(atoms
            .iter()
            .all(|a| a.position == spec.center && a.velocity == spec.mean_velocity));
    }

    #[test]
    fn zero_atoms_rejected() {
        let c = PhysicalConstants::rb87();
        let spec = CloudSpec {
            n: 0,
            ..CloudSpec::default()
        };
        assert!(matches!(
            sample_cloud(&spec, 1, &c, None),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn deterministic() {
        let c = PhysicalConstants::rb87();
        let spec = CloudSpec {
            sigma: [1e-3, 1e-4, 1e-4],
            ..CloudSpec::default()
        };
        assert_eq!(
            sample_cloud(&spec, 9, &c, None).unwrap(),
            sample_cloud(&spec, 9, &c, None).unwrap()
        );
    }
}
