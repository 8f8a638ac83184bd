//! Numerical symmetry reduction and reconstruction for invariant Lagrangian
//! systems on trivialized principal bundles.
//!
//! The engine integrates the reduced (Lagrange-Poincaré) equations on the
//! quotient of the velocity phase space by the symmetry group, and rebuilds
//! full trajectories through either the generalized mechanical connection or
//! the vertical lift of the principal connection. A direct full-space
//! integrator provides a third, connection-free route for cross-checks.
//!
//! Start with the runnable programs in `examples/`; each one drives a single
//! capability end to end. The `lpr` binary wraps the same machinery behind
//! `run`, `verify` and `list-scenarios` subcommands.

pub mod acceptance;
pub mod bundle;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod lagrangian;
pub mod lie_core;
pub mod numeric;
pub mod oracles;
pub mod reconstruction;
pub mod scenarios;

pub use error::{LprError, Result};
