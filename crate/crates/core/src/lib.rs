//! Spectral simulation of rescaled mean curvature flow of radial graphs over
//! the round sphere, stable-manifold construction, and asymptotic analysis.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod flow;
pub mod manifold;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
