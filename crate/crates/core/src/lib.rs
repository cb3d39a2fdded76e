//! Exact finite-depth verification of a measure-zero Kakeya-type set
//! construction over `Z_l` and `F_l[[t]]`.
//!
//! The crate is `no_std` (it needs `alloc`). Modules:
//!
//! * [`ring`]: digit arithmetic with explicit working depth.
//! * [`phi`]: the enumerated locally constant matrix functions `r_j`, the
//!   digit projections `p_j`, and the series `phi(x) = sum r_k(x) p_k(x)`.
//! * [`families`]: surface families `f(x, y, w)` with analytic Jacobians.
//! * [`measure`]: exhaustive residue-cell hit sets and covering estimates.
//! * [`analysis`]: the six-term decomposition, bound certificates and
//!   differentiability defect scans.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;

pub mod analysis;
pub mod families;
pub mod measure;
pub mod phi;
pub mod ring;

pub use error::{Error, Result};
