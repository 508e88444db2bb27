//! Pseudospectral solver and verification laboratory for the coupled pair
//!
//! ```text
//! a_t = a_x b + 1/2 ∂x G1*f1 + 1/2 G1*g1
//! c_t = c_x b + 1/2 ∂x G1*f2 + 1/2 G1*g2
//! 4b − b_xx = a_xx c_x − c_xx a_x + 3 a_x c − 3 a c_x
//! ```
//!
//! on a periodic truncation of the line, where `G1* = (1 − ∂xx)^{-1}` and
//! `G2* = (4 − ∂xx)^{-1}` are inverse Helmholtz operators realized as
//! convolutions with exponential kernels, `u = a − a_xx`, `w = c − c_xx`,
//! and `f1, f2, g1, g2` are cubic fluxes of `(a, c, b)`.
//!
//! The crate is organized around six concerns:
//!
//! - [`field`]: grid construction, sampling, differentiation, quadrature, norms
//! - [`kernels`]: the `G1`, `G2` convolutions with three interchangeable
//!   backends (Fourier symbol, linear-time recursive scan, O(n²) oracle)
//! - [`dynamics`]: right-hand-side assembly, elliptic recovery of `b`,
//!   RK4 time stepping and evolution control
//! - [`initdata`]: mollifiers, peaked-soliton profiles, admissible data
//! - [`diagnostics`]: conserved quantities, sign/slope monitors, growth
//!   envelopes, total variation, weak-form residuals
//! - [`config`] / [`run`]: reproducible run/study/diag orchestration used by
//!   the `tricam` command-line binary
//!
//! Everything downstream of initial data is deterministic: identical
//! configurations produce byte-identical diagnostics files.

// negated comparisons like `!(x > 0.0)` deliberately catch NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod initdata;
pub mod kernels;
pub mod rng;
pub mod run;
pub mod tolerances;

mod spectral;

pub use error::{Error, Result};
pub use field::{DerivativeBackend, Field, Grid1D};
pub use kernels::{ExpKernel, KernelBackend};
