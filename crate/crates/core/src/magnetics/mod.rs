//! Magnetic fields of wire guides and the storage ring, trapping potentials
//! and static trap characterization.

mod elliptic;
mod fieldmap;
mod guide;
mod ring;
mod source;
mod trap;
mod wire;

pub use elliptic::complete_elliptic;
pub use fieldmap::{write_field_map, FieldMapGrid, FIELD_MAP_HEADER};
pub use guide::{
    field_quadrupole, quadrupole_gradient, GuideGeometry, QuadrupoleGuide, Taper, TwoWireGuide,
};
pub use ring::{loop_field, Junction, RingFieldTable, RingFrame, RingGeometry};
pub use source::{
    divergence_and_curl, fd_jacobian, norm_gradient, total_potential, FieldSource, Gravity,
    UniformField, B_REG, FD_STEP,
};
pub use trap::{characterize_trap, CrossSection, TrapCharacterization, TrapOptions};
pub use wire::{
    field_exact, field_exact_jacobian, wrap_angle, JunctionModel, WireElement, WireSet, WireShape,
    ARC_SEGMENTS,
};
