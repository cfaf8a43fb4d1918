//! Verification harness, file formats and command-line driver for
//! [`coadjoint_core`].

pub mod cli;
pub mod config;
pub mod harness;
pub mod output;

pub use coadjoint_core as core;
