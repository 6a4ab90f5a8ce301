//! Discrete multitime multiple recurrences `x(t + 1_a) = F_a(t, x(t))` on Z^m.
//!
//! - [`lattice`]: multi-indices, the componentwise order, monotone paths.
//! - [`statespace`]: state sets and exact step maps.
//! - [`autonomous`]: compatibility checks and closed-form evaluation.
//! - [`extension`]: inverses, evaluation on all of Z^m, backward extension.
//! - [`nonautonomous`]: time-dependent maps and the lift.
//! - [`closedforms`]: monoid-action, additive and commuting-matrix formulas.
//! - [`cli`]: config parsing and result documents for the `latticerec` binary.

pub mod autonomous;
pub mod cli;
pub mod closedforms;
pub mod error;
pub mod extension;
pub mod lattice;
pub mod nonautonomous;
pub mod statespace;

pub use error::{Error, Result};
