//! Bifurcation analysis of traveling waves in the Kerner-Konhauser traffic model.
//!
//! The crate covers the planar traveling-wave ODE ([`model`]), its critical
//! points and fold/cusp structure ([`equilibria`]), normal-form coefficients
//! ([`normalforms`]), continuation of Hopf curves and limit cycles
//! ([`continuation`]), and verification of cycles as traveling waves of the
//! PDE on a periodic road ([`pde`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod continuation;
pub mod equilibria;
pub mod error;
pub mod export;
pub mod model;
pub mod normalforms;
pub mod ode;
pub mod pde;
pub mod roots;

pub use error::{Error, Result};
pub use model::{ModelParams, PhasePoint, PhysicalConstants};
