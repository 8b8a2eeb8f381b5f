//! Physical constants and the magnetic-moment convention.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Vacuum permeability (T m / A), CODATA 2018.
pub const MU0: f64 = 1.256_637_062_12e-6;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const KB: f64 = 1.380_649e-23;
pub const STANDARD_GRAVITY: f64 = 9.806_65;
/// Mass of a ⁸⁷Rb atom (kg).
pub const RB87_MASS: f64 = 1.443_16e-25;
pub const BOHR_MAGNETON: f64 = 9.274e-24;

/// How the effective moment `mu_m` is chosen.
///
/// `Lande` uses `|gF mF| muB` (muB/2 for the F=1, mF=-1 state). `BohrMagneton`
/// uses a full muB, which is what a 2.5 mK depth at 8 A / 840 µm implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentConvention {
    Lande,
    BohrMagneton,
    Explicit(f64),
}

/// Immutable set of constants shared by every physics routine.
///
/// The trapping potential convention is `U = +mu_m |B|` (weak-field seeker).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    mu0: f64,
    hbar: f64,
    kb: f64,
    g_grav: f64,
    mass: f64,
    mu_b: f64,
    g_f: f64,
    m_f: f64,
    convention: MomentConvention,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::rb87()
    }
}

impl PhysicalConstants {
    /// ⁸⁷Rb in F=1, mF=-1 with the Landé moment muB/2.
    pub fn rb87() -> Self {
        PhysicalConstants {
            mu0: MU0,
            hbar: HBAR,
            kb: KB,
            g_grav: STANDARD_GRAVITY,
            mass: RB87_MASS,
            mu_b: BOHR_MAGNETON,
            g_f: -0.5,
            m_f: -1.0,
            convention: MomentConvention::Lande,
        }
    }

    pub fn with_convention(mut self, convention: MomentConvention) -> Result<Self> {
        self.convention = convention;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        self.mass = mass;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gravity(mut self, g: f64) -> Result<Self> {
        self.g_grav = g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lande(mut self, g_f: f64, m_f: f64) -> Result<Self> {
        self.g_f = g_f;
        self.m_f = m_f;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("mu0", self.mu0),
            ("hbar", self.hbar),
            ("kB", self.kb),
            ("g_grav", self.g_grav),
            ("mass", self.mass),
            ("muB", self.mu_b),
            ("mu_m", self.mu_m()),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "constant {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn kb(&self) -> f64 {
        self.kb
    }
    pub fn g_grav(&self) -> f64 {
        self.g_grav
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn mu_b(&self) -> f64 {
        self.mu_b
    }
    pub fn g_f(&self) -> f64 {
        self.g_f
    }
    pub fn m_f(&self) -> f64 {
        self.m_f
    }
    pub fn convention(&self) -> MomentConvention {
        self.convention
    }

    /// Effective moment magnitude (J/T).
    pub fn mu_m(&self) -> f64 {
        match self.convention {
            MomentConvention::Lande => (self.g_f * self.m_f).abs() * self.mu_b,
            MomentConvention::BohrMagneton => self.mu_b,
            MomentConvention::Explicit(m) => m,
        }
    }

    /// 1-D thermal velocity spread sqrt(kB T / m).
    pub fn thermal_speed(&self, temperature: f64) -> f64 {
        (self.kb * temperature / self.mass).sqrt()
    }

    /// Temperature whose 1-D thermal spread is `sigma_v`.
    pub fn temperature_from_spread(&self, sigma_v: f64) -> f64 {
        self.mass * sigma_v * sigma_v / self.kb
    }
}
