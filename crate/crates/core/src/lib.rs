pub mod correlate;
pub mod encoder;
pub mod error;
pub mod field;
pub mod group;
pub mod harness;
pub mod harmonic;
pub mod oracle;
pub mod rep;
pub mod transporter;

pub use encoder::Encoder;
pub use error::{Error, Result};
pub use field::{FourierField, ScalarField, SteerableKernel};
pub use group::{FiniteRotationGroup, GroupName, Rot2, Rot3, Rotation, RotationSet, SamplingMethod};
pub use harmonic::{Coefficients, Fiber, FourierCoeffs2, FourierCoeffs3};
pub use rep::RepSpec;
pub use transporter::{Action, Config, Inference, Pipeline, PoseDistribution};
