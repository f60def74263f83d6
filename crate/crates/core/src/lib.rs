//! Parallel compressed-sensing MRI reconstruction.
//!
//! The crate models multi-coil Cartesian acquisitions (`y_l = U F S_l x + n_l`)
//! and reconstructs images with a half-quadratic-splitting solver that
//! alternates a prior-driven filtering step, a closed-form k-space
//! data-consistency step and a closed-form image update.

pub mod acquisition;
pub mod container;
pub mod error;
pub mod metrics;
pub mod phantom;
pub mod prior;
pub mod sampling;
pub mod sensitivity;
pub mod solver;
pub mod tensor;

#[cfg(test)]
mod test_util;

pub use acquisition::{MultiCoilKSpace, SensitivitySet};
pub use error::{Error, Result};
pub use metrics::Metrics;
pub use phantom::{CaseSpec, PhantomKind};
pub use prior::{ExternalDenoiser, PriorSpec};
pub use sampling::{MaskKind, MaskProtocol, Organ, SamplingMask};
pub use solver::{solve, ConsistencyWeight, SolverConfig, SolverState, StageParams};
pub use tensor::{fft2c, ifft2c, ComplexImage, KSpaceGrid, RealImage, Shape};
