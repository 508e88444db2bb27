//! Central tolerance constants used by the verification surface
//! (`tricam diag`, the study verdicts and the acceptance suite).
//!
//! Each threshold is tied to the numerical method that has to meet it, not
//! tuned after the fact.

/// Relative Helmholtz residual of the Fourier-symbol convolutions and the
/// kernel identities `D²(G1*f) = G1*f - f`, `D²(G2*f) = 4 G2*f - f`.
/// The symbol application is an exact inverse up to a handful of rounding
/// operations per mode.
pub const KERNEL_IDENTITY_REL: f64 = 1e-8;

/// Pairwise agreement of the three convolution backends on band-limited
/// fields at production resolution. The recursive scan's degree-5 cell
/// rule leaves `O((k dx)^6)` quadrature error, below 1e-8 for the mode
/// content the solver feeds it; 1e-7 adds an order of headroom.
pub const BACKEND_AGREEMENT_REL: f64 = 1e-7;

/// Agreement of the scan against the O(n²) oracle that evaluates the same
/// cell rule by brute force. Only summation order differs.
pub const SCAN_VS_ORACLE_REL: f64 = 1e-12;

/// Relative drift allowed in the conserved functionals H1 and H2 over a
/// production run (RK4 in time, spectral in space).
pub const CONSERVATION_DRIFT_REL: f64 = 1e-6;

/// Absolute gap between the two quadrature forms of H2. Discretely they
/// differ only by floating-point summation order.
pub const H2_FORM_GAP_ABS: f64 = 1e-8;

/// Sign floor: nodal minima of u and w may dip this far below zero,
/// relative to the sup norm, before the run is flagged.
pub const SIGN_FLOOR_REL: f64 = 1e-6;

/// Slope-domination excess: max(|a_x| - a) relative to sup a.
pub const SLOPE_EXCESS_REL: f64 = 1e-6;

/// Relative tolerance on the L1 identity `∫a = ∫u` (valid while u >= 0).
pub const L1_IDENTITY_REL: f64 = 1e-8;

/// Roundoff floor used when testing the hypothesis `u >= 0` itself: the
/// recomputed momentum carries one FFT roundtrip of noise, so exact
/// nonnegativity is unobservable.
pub const ROUNDOFF_SIGN_FLOOR_REL: f64 = 1e-12;

/// Relative elliptic residual `‖4b - b_xx - r‖_∞ / (1 + ‖r‖_∞)` of the
/// recovered b.
pub const ELLIPTIC_RESIDUAL_REL: f64 = 1e-8;

/// Agreement of the two algebraic groupings of the b-equation source.
pub const B_FORMS_REL: f64 = 1e-8;

/// Allowed deviation of the measured RK4 self-convergence order from 4.
pub const RK4_ORDER_TOL: f64 = 0.3;

/// Weak-form residual at the finest time-slice stride.
pub const WEAK_RESIDUAL_ABS: f64 = 1e-5;

/// Minimum acceptable decay order of the weak residual under time-slice
/// refinement (trapezoid in time is second order; smooth bumps usually do
/// much better).
pub const WEAK_RESIDUAL_MIN_ORDER: f64 = 1.7;

/// Exact algebraic identities (b = 0 for a = c, dc/dt = -da/dt) measured
/// relative to the field scale.
pub const ALGEBRAIC_IDENTITY_REL: f64 = 1e-12;

/// Swap/time-reversal consistency of evolve over T = 1.
pub const SWAP_REVERSAL_REL: f64 = 1e-6;

/// Growth-envelope slack: measured norms must stay below
/// `e^{t C_T} * norm(0) * (1 + slack)`.
pub const ENVELOPE_SLACK_REL: f64 = 1e-9;

/// Wall-time growth factor per grid doubling tolerated for the O(n)
/// recursive scan (an O(n log n) method lands near 2.3x at these sizes).
pub const SCAN_DOUBLING_FACTOR: f64 = 2.3;
