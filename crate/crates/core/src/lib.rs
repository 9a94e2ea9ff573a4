//! Random walks, Green functions and Martin kernels on the dual of quantum SU(2).

pub mod blocks;
pub mod central;
pub mod error;
pub mod fusion;
pub mod martin;

pub use error::{Error, Result};
pub use fusion::{DeformationParams, IrrepLabel, WeightFunctional};
