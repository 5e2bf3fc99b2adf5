//! Three-dimensional pseudopotential lattice Boltzmann engine for liquid-vapor phase
//! change.
//!
//! The flow runs on a D3Q19 lattice with a moment-space (MRT) collision, a
//! Peng-Robinson equation of state entering through the pseudopotential force, and
//! exact-difference forcing. Temperature evolves either on a D3Q7 lattice that solves
//! the macroscopic energy equation with variable heat capacity, or with an explicit
//! finite-difference reference solver.
//!
//! [`sim::Simulation`] wires the pieces together for a [`config::CaseConfig`].

pub mod boundary;
pub mod config;
pub mod diagnostics;
pub mod eos;
pub mod error;
pub mod fdm;
pub mod flow;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod perf;
pub mod sim;
pub mod thermal;

pub use boundary::{BoundarySet, Face, FaceKind, FaceSpec};
pub use config::{CaseConfig, InitConfig, ThermalBackend};
pub use diagnostics::{d2_law_fit, droplet_diameter, jakob_number, sessile_contact_angle, D2Fit, SlabProfile};
pub use eos::{critical_point, maxwell_coexistence, pseudopotential, CoexistencePoint, EosParams};
pub use error::{Error, Result};
pub use grid::{EdgeKind, Grid, Padded};
pub use lattice::{d3q19_descriptor, d3q7_descriptor, LatticeDescriptor};
pub use sim::{run_case, Diagnostics, DiagnosticsRecord, FieldSet, RunSummary, Simulation};
