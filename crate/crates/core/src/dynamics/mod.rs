//! Single-atom motion, classical spin precession and current schedules.

mod integrator;
mod majorana;
mod schedule;
mod spin;
mod state;

pub use integrator::{
    acceleration, integrate_trajectory, total_energy, ForceCache, IntegratorConfig, Region,
    StepRecord, Trajectory, Verlet,
};
pub use majorana::{
    exponential_lifetime, majorana_lifetime_estimate, LifetimeEstimate, MajoranaCloud,
    MajoranaMethod, TransverseForcing, TransverseProfile,
};
pub(crate) use majorana::{hybrid_spin_step, local_gradient, min_norm_on_segment, SpinStep};
pub use schedule::{
    build_transfer_ramp, track_zero, Breakpoint, EventKind, RampSchedule, ScheduleEvent,
    TransferMode,
};
pub use spin::{
    adiabaticity_ratio, precess_spin, rotate, straight_pass_flip_fraction, FlipEvent, SpinConfig,
    SpinHistory, SpinTracker, PASS_TILT,
};
pub use state::{AtomState, LossCause, Status};
