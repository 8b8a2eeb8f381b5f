//! Thermal clouds, whole-sequence Monte Carlo runs, the pulsed probe,
//! velocity shaping and repeated loading.

mod apparatus;
mod cloud;
mod multiload;
mod orbit;
mod probe;
mod run;
mod shaping;

pub use apparatus::{Apparatus, GuideLayout};
pub use cloud::{sample_cloud, CloudSpec};
pub use multiload::schedule_multi_load;
pub use orbit::{orbit_period, speed_at};
pub use probe::{probe_trace, ProbeConfig, ProbeTrace};
pub use run::{
    configured_orbit_period, reference_speed, run_scenario, zero_circumference, AtomRecord,
    Crossing, Histogram, Load, LossModel, MajoranaModel, ScenarioConfig, ScenarioResult,
    ShapingPulse, SnapshotSummary, Stage, Summary, SurvivalPoint,
};
pub use shaping::{azimuthal_offsets, shape_velocity, ShapeMode, ShapeOutcome, ShapingWindow};
