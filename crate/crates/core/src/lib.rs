//! Finite-volume Leray / Evolve-Filter flow solver and POD-Galerkin reduced
//! order models built on top of it.

pub mod config;
pub mod error;
pub mod fom;
pub mod fvops;
pub mod io;
pub mod lifting;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod pod;
pub mod rom_offline;
pub mod rom_online;
pub mod workflow;

pub use error::{Error, MeshError, Result, SolverError};
