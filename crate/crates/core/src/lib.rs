//! Numerical toolkit for the M-LXIX spin system and the surfaces it sweeps.
//!
//! The crate connects four descriptions of the same integrable system and
//! checks their equivalence by residuals and convergence studies:
//!
//! - [`spin`]: the spin evolution with its scalar fields `u`, `v`, and the
//!   orthonormal frame built from `S` and `S_x`;
//! - [`frame`]: the linear frame systems, their curvature-torsion
//!   compatibility conditions and the M-0 reduction;
//! - [`gc`]: Gauss-Codazzi data in curvature-line coordinates, fundamental
//!   forms, curvatures, and the change of variables to the frame system;
//! - [`lax`]: the 2x2 zero-curvature representation and eigenfunction transport.
//!
//! [`surface`] reconstructs and meshes the swept surface, [`numgrid`] holds
//! the shared discretisation, and [`cli`] drives everything from JSON configs.

// `!(x <= limit)` is how the guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convergence;
pub mod error;
pub mod frame;
pub mod gc;
pub mod io;
pub mod lax;
pub mod numgrid;
pub mod spin;
pub mod surface;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use numgrid::{Axis, Boundary, Grid1D, Grid2D};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Sign of `S . S`, which also fixes the signature of the frame matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Beta {
    Plus,
    Minus,
}

impl Beta {
    pub fn value(self) -> f64 {
        match self {
            Beta::Plus => 1.0,
            Beta::Minus => -1.0,
        }
    }
}

impl TryFrom<i32> for Beta {
    type Error = String;

    fn try_from(v: i32) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Beta::Plus),
            -1 => Ok(Beta::Minus),
            other => Err(format!("beta must be +1 or -1, got {other}")),
        }
    }
}

impl From<Beta> for i32 {
    fn from(b: Beta) -> i32 {
        match b {
            Beta::Plus => 1,
            Beta::Minus => -1,
        }
    }
}
