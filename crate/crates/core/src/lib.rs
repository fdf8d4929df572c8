//! Numerical ingredients of the inner–outer gluing construction for the
//! energy-critical heat equation `u_t = Δu + |u|u` on R⁶.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubble;
pub mod cli;
pub mod error;
pub mod field;
pub mod glue;
pub mod interp;
pub mod kernel;
pub mod modulation;
pub mod pde;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
