//! Multi-block Bregman ADMM for nonconvex composite problems.
//!
//! The crate is organized around a generic block-splitting engine
//! ([`engine`]) that minimizes a sum of block objectives subject to a
//! homogeneous linear coupling constraint, with a Bregman proximal term on
//! every block update. On top of it sit two concrete models ([`models`]):
//! low-rank + sparse + noise matrix decomposition with closed-form updates,
//! and block-split homogeneous linear systems. The [`diagnostics`] layer
//! certifies the solver's descent machinery numerically along a recorded
//! trace.

pub mod bregman;
pub mod cli;
pub mod datagen;
pub mod diagnostics;
pub mod engine;
mod error;
pub mod io;
pub mod models;
pub mod numerics;
pub mod prox;

pub use error::{Error, Result};
