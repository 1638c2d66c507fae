//! Rotation groups: SO(2)/SO(3) elements, finite subgroups and sampled
//! rotation sets.

mod finite;
mod rotation;
mod sampling;

pub use finite::{FiniteRotationGroup, GroupName, SNAP_TOLERANCE};
pub use rotation::{Rot2, Rot3, Rotation};
pub use sampling::{euler_resolution, Provenance, RotationSet, SamplingMethod};
