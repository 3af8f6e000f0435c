//! Exact simulation of bosons routed through a four-well star potential.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod lattice;
mod modes;
pub mod output;
pub mod protocols;
pub mod verify;

pub use error::{Error, Result};
