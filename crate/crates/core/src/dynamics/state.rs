use serde::{Deserialize, Serialize};
use std::fmt;

use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossCause {
    Majorana,
    OverBarrier,
    BackgroundGas,
    RemovedByShaping,
    /// Light from a second loading cycle.
    ScatteredLight,
    /// Removed because its trajectory could not be integrated.
    NumericFailure,
    /// Counted and removed by a destructive probe.
    Probed,
}

impl LossCause {
    pub const ALL: [LossCause; 7] = [
        LossCause::Majorana,
        LossCause::OverBarrier,
        LossCause::BackgroundGas,
        LossCause::RemovedByShaping,
        LossCause::ScatteredLight,
        LossCause::NumericFailure,
        LossCause::Probed,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LossCause::Majorana => "majorana",
            LossCause::OverBarrier => "over-barrier",
            LossCause::BackgroundGas => "background-gas",
            LossCause::RemovedByShaping => "removed-by-shaping",
            LossCause::ScatteredLight => "scattered-light",
            LossCause::NumericFailure => "numeric-failure",
            LossCause::Probed => "probed",
        }
    }
}

impl fmt::Display for LossCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Alive,
    Lost { cause: LossCause, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Unit classical moment direction.
    pub spin: Vec3,
    pub status: Status,
    pub t: f64,
}

impl AtomState {
    pub fn new(position: Vec3, velocity: Vec3, spin: Vec3, t: f64) -> Result<Self> {
        let s = AtomState {
            position,
            velocity,
            spin: spin
                .try_normalize(0.0)
                .ok_or_else(|| Error::invalid("spin must be non-zero"))?,
            status: Status::Alive,
            t,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .position
            .iter()
            .chain(self.velocity.iter())
            .chain(self.spin.iter())
            .all(|c| c.is_finite());
        if !finite || !self.t.is_finite() {
            return Err(Error::invalid("atom state has non-finite components"));
        }
        if (self.spin.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("spin must be a unit vector"));
        }
        Ok(())
    }

    pub fn is_alive(&self) -> bool {
        matches!(self.status, Status::Alive)
    }

    pub fn loss_cause(&self) -> Option<LossCause> {
        match self.status {
            Status::Alive => None,
            Status::Lost { cause, .. } => Some(cause),
        }
    }

    /// One-way transition; a second loss keeps the first cause.
    pub fn mark_lost(&mut self, cause: LossCause, t: f64) {
        if self.is_alive() {
            self.status = Status::Lost { cause, t };
        }
    }

    pub fn status_label(&self) -> &'static str {
        match self.status {
            Status::Alive => "alive",
            Status::Lost { cause, .. } => cause.as_str(),
        }
    }
}
