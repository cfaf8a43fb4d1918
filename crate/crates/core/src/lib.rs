#![no_std]
#![doc = include_str!("../README.md")]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dialgebra;
pub mod error;
pub mod gaudin;
pub mod lie_core;
pub mod linalg;
pub mod multitime;
#[cfg(any(test, feature = "sampling"))]
pub mod sampling;
pub mod scalar;
pub mod toda_aks;
pub mod toda_cartan;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Matrix, RealMatrix};
pub use scalar::{Complex64, Scalar};
