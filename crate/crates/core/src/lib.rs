//! Numerical toolkit for Freidlin–Wentzell large deviations of stochastic
//! reaction-diffusion equations on the line,
//!
//! `du = (1/2) Δu dt + b(u) dt + sqrt(eps) sigma(u) W(dt, dx)`,
//!
//! driven by space-time white noise, with drifts as rough as `u log|u|`.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod control;
pub mod error;
pub mod grid;
pub mod gronwall;
pub mod heat_kernel;
pub mod ldp;
pub mod noise;
pub mod quadrature;
pub mod rate;
pub mod report;
pub mod rng;
pub mod scheme;
pub mod skeleton;
pub mod spde;
pub mod weights;

pub use coefficients::{builtin, CoefficientSet, H1Constants, Regime, ScalarMap};
pub use control::{builtin_control, int_map, ControlField};
pub use error::{Error, Result};
pub use grid::{Field, GridSpec, Trajectory};
pub use rate::{EndpointConstraint, OptimizerConfig, RateSolution};
pub use report::InequalityReport;
pub use scheme::ForcingFilter;
pub use skeleton::SkeletonOptions;
pub use spde::SolveConfig;
pub use weights::WeightParams;
