//! Right-hand-side assembly and time integration for the evolved pair
//! `(a, c)`.
//!
//! The hyperbolic form integrated here is
//!
//! ```text
//! a_t = a_x b + 1/2 ∂x G1*f1 + 1/2 G1*g1
//! c_t = c_x b + 1/2 ∂x G1*f2 + 1/2 G1*g2
//! 4b − b_xx = a_xx c_x − c_xx a_x + 3 a_x c − 3 a c_x
//! ```
//!
//! with the cubic fluxes
//!
//! ```text
//! f1 = a_x b_x + a_x² c_x + 3 a b − 3 a_x a c      g1 = b a_x + 3 a² c + 3 a a_x c_x
//! f2 = b_x c_x − a_x c_x² + 3 b c + 3 a c c_x      g2 = b c_x − 3 a c² − 3 a_x c c_x
//! ```
//!
//! `b` is recovered from the elliptic constraint at every stage rather than
//! evolved, keeping the state minimal and the constraint exact. Under the
//! swap `(a, c, b, t) -> (c, a, -b, -t)` the system maps onto itself
//! (`f1 <-> -f2`, `g1 <-> -g2`), which the test suite exercises as a
//! time-reversal check.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::kernels::{self, KernelBackend};

/// Evolved pair `(a, c)` at time `t`. Both fields share one grid and are
/// finite; the constraint field `b` is derived, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    t: f64,
    a: Field,
    c: Field,
}

impl State {
    pub fn new(t: f64, a: Field, c: Field) -> Result<Self> {
        if a.grid() != c.grid() {
            return Err(Error::GridMismatch);
        }
        a.ensure_finite("state a")?;
        c.ensure_finite("state c")?;
        Ok(Self { t, a, c })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn a(&self) -> &Field {
        &self.a
    }

    pub fn c(&self) -> &Field {
        &self.c
    }

    pub fn grid(&self) -> crate::field::Grid1D {
        self.a.grid()
    }

    /// Largest sup norm of the two components.
    pub fn sup_norm(&self) -> f64 {
        self.a.sup_norm().max(self.c.sup_norm())
    }

    /// Swap the two components (the discrete symmetry partner).
    pub fn swapped(&self) -> State {
        State {
            t: self.t,
            a: self.c.clone(),
            c: self.a.clone(),
        }
    }
}

/// Time derivative of a [`State`].
#[derive(Debug, Clone)]
pub struct Rhs {
    pub da_dt: Field,
    pub dc_dt: Field,
}

/// Knobs shared by the stepping and evolution entry points.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Convolution backend for every Helmholtz inversion.
    pub backend: KernelBackend,
    /// CFL number against the transport speed `sup|b|`.
    pub cfl: f64,
    /// Escalate CFL violations from a warning to a hard error.
    pub cfl_strict: bool,
    /// Step-size ceiling when the step is CFL-driven; keeps accuracy sane
    /// when `b` is nearly zero and the CFL bound alone would be enormous.
    pub dt_max: f64,
    /// Abort threshold on `sup|a|`, `sup|c|`.
    pub blowup_cap: f64,
    /// Apply the 2/3-rule filter to every pointwise product.
    pub dealias: bool,
    /// Observer stride (in accepted steps) used by [`evolve`].
    pub stride: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            backend: KernelBackend::FourierSymbol,
            cfl: 0.3,
            cfl_strict: false,
            dt_max: 0.02,
            blowup_cap: 1e6,
            dealias: false,
            stride: 10,
        }
    }
}

/// Step-size policy for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// Fixed magnitude; the final step is shortened to land on `t_end`.
    Fixed(f64),
    /// Per-step `dt = min(cfl dx / max(eps, sup|b|), dt_max)`.
    Cfl,
}

fn maybe_dealias(f: Field, opts: &SolverOptions) -> Result<Field> {
    if opts.dealias {
        f.dealias_two_thirds()
    } else {
        Ok(f)
    }
}

/// Elliptic source `a_xx c_x - c_xx a_x + 3 a_x c - 3 a c_x`.
pub(crate) fn elliptic_source(a: &Field, c: &Field) -> Result<Field> {
    let a_x = a.derivative()?;
    let c_x = c.derivative()?;
    let a_xx = a.second_derivative()?;
    let c_xx = c.second_derivative()?;
    Ok(elliptic_source_from(&a_x, &a_xx, c, &c_x, &c_xx, a))
}

fn elliptic_source_from(
    a_x: &Field,
    a_xx: &Field,
    c: &Field,
    c_x: &Field,
    c_xx: &Field,
    a: &Field,
) -> Field {
    let term1 = a_xx.zip_with(c_x, |p, q| p * q);
    let term2 = c_xx.zip_with(a_x, |p, q| p * q);
    let term3 = a_x.zip_with(c, |p, q| 3.0 * p * q);
    let term4 = a.zip_with(c_x, |p, q| 3.0 * p * q);
    term1
        .add_scaled(&term2, -1.0)
        .add_scaled(&term3, 1.0)
        .add_scaled(&term4, -1.0)
}

/// Recover `b` from `(a, c)` through `4b - b_xx = a_xx c_x - c_xx a_x
/// + 3 a_x c - 3 a c_x`.
pub fn recover_b(a: &Field, c: &Field, backend: KernelBackend) -> Result<Field> {
    let src = elliptic_source(a, c)?;
    src.ensure_finite("elliptic source")?;
    kernels::conv_g2(&src, backend)
}

/// Same constraint with the source regrouped through `u = a - a_xx`,
/// `w = c - c_xx`: `b = G2*(a_x w - c_x u + 2 a_x c - 2 a c_x)`.
/// Algebraically identical to [`recover_b`]; kept as a cross-check route.
pub fn recover_b_via_uw(a: &Field, c: &Field, backend: KernelBackend) -> Result<Field> {
    let a_x = a.derivative()?;
    let c_x = c.derivative()?;
    let u = compute_u(a)?;
    let w = compute_w(c)?;
    let term1 = a_x.zip_with(&w, |p, q| p * q);
    let term2 = c_x.zip_with(&u, |p, q| p * q);
    let term3 = a_x.zip_with(c, |p, q| 2.0 * p * q);
    let term4 = a.zip_with(&c_x, |p, q| 2.0 * p * q);
    let src = term1
        .add_scaled(&term2, -1.0)
        .add_scaled(&term3, 1.0)
        .add_scaled(&term4, -1.0);
    src.ensure_finite("elliptic source (u,w form)")?;
    kernels::conv_g2(&src, backend)
}

/// Momentum density `u = a - a_xx`.
pub fn compute_u(a: &Field) -> Result<Field> {
    let a_xx = a.second_derivative()?;
    Ok(a.add_scaled(&a_xx, -1.0))
}

/// Momentum density `w = c - c_xx`.
pub fn compute_w(c: &Field) -> Result<Field> {
    compute_u(c)
}

/// Fluxes `f1 = a_x b_x + a_x² c_x + 3 a b - 3 a_x a c` and
/// `g1 = b a_x + 3 a² c + 3 a a_x c_x`.
pub fn assemble_f1_g1(a: &Field, c: &Field, b: &Field) -> Result<(Field, Field)> {
    let a_x = a.derivative()?;
    let c_x = c.derivative()?;
    let b_x = b.derivative()?;
    Ok(assemble_f1_g1_from(a, &a_x, c, &c_x, b, &b_x))
}

fn assemble_f1_g1_from(
    a: &Field,
    a_x: &Field,
    c: &Field,
    c_x: &Field,
    b: &Field,
    b_x: &Field,
) -> (Field, Field) {
    let n = a.len();
    let mut f1 = vec![0.0f64; n];
    let mut g1 = vec![0.0f64; n];
    let (av, axv, cv, cxv, bv, bxv) = (
        a.values(),
        a_x.values(),
        c.values(),
        c_x.values(),
        b.values(),
        b_x.values(),
    );
    for i in 0..n {
        f1[i] = axv[i] * bxv[i] + axv[i] * axv[i] * cxv[i] + 3.0 * av[i] * bv[i]
            - 3.0 * axv[i] * av[i] * cv[i];
        g1[i] = bv[i] * axv[i] + 3.0 * av[i] * av[i] * cv[i] + 3.0 * av[i] * axv[i] * cxv[i];
    }
    (
        Field::from_values_unchecked(a.grid(), f1),
        Field::from_values_unchecked(a.grid(), g1),
    )
}

/// Fluxes `f2 = b_x c_x - a_x c_x² + 3 b c + 3 a c c_x` and
/// `g2 = b c_x - 3 a c² - 3 a_x c c_x`.
pub fn assemble_f2_g2(a: &Field, c: &Field, b: &Field) -> Result<(Field, Field)> {
    let a_x = a.derivative()?;
    let c_x = c.derivative()?;
    let b_x = b.derivative()?;
    Ok(assemble_f2_g2_from(a, &a_x, c, &c_x, b, &b_x))
}

fn assemble_f2_g2_from(
    a: &Field,
    a_x: &Field,
    c: &Field,
    c_x: &Field,
    b: &Field,
    b_x: &Field,
) -> (Field, Field) {
    let n = a.len();
    let mut f2 = vec![0.0f64; n];
    let mut g2 = vec![0.0f64; n];
    let (av, axv, cv, cxv, bv, bxv) = (
        a.values(),
        a_x.values(),
        c.values(),
        c_x.values(),
        b.values(),
        b_x.values(),
    );
    for i in 0..n {
        f2[i] = bxv[i] * cxv[i] - axv[i] * cxv[i] * cxv[i] + 3.0 * bv[i] * cv[i]
            + 3.0 * av[i] * cv[i] * cxv[i];
        g2[i] = bv[i] * cxv[i] - 3.0 * av[i] * cv[i] * cv[i] - 3.0 * axv[i] * cv[i] * cxv[i];
    }
    (
        Field::from_values_unchecked(a.grid(), f2),
        Field::from_values_unchecked(a.grid(), g2),
    )
}

/// Full right-hand side together with the recovered `b` (computed once).
pub fn rhs_with_b(s: &State, opts: &SolverOptions) -> Result<(Rhs, Field)> {
    let a = &s.a;
    let c = &s.c;
    let a_x = a.derivative()?;
    let c_x = c.derivative()?;
    let a_xx = a.second_derivative()?;
    let c_xx = c.second_derivative()?;

    let src = maybe_dealias(elliptic_source_from(&a_x, &a_xx, c, &c_x, &c_xx, a), opts)?;
    src.ensure_finite("elliptic source")?;
    let b = kernels::conv_g2(&src, opts.backend)?;
    let b_x = b.derivative()?;

    let (f1, g1) = assemble_f1_g1_from(a, &a_x, c, &c_x, &b, &b_x);
    let (f2, g2) = assemble_f2_g2_from(a, &a_x, c, &c_x, &b, &b_x);
    let f1 = maybe_dealias(f1, opts)?;
    let g1 = maybe_dealias(g1, opts)?;
    let f2 = maybe_dealias(f2, opts)?;
    let g2 = maybe_dealias(g2, opts)?;

    let conv_f1 = kernels::conv_g1_dx(&f1, opts.backend)?;
    let conv_g1_term = kernels::conv_g1(&g1, opts.backend)?;
    let conv_f2 = kernels::conv_g1_dx(&f2, opts.backend)?;
    let conv_g2_term = kernels::conv_g1(&g2, opts.backend)?;

    let transport_a = maybe_dealias(a_x.zip_with(&b, |p, q| p * q), opts)?;
    let transport_c = maybe_dealias(c_x.zip_with(&b, |p, q| p * q), opts)?;

    let da_dt = transport_a
        .add_scaled(&conv_f1, 0.5)
        .add_scaled(&conv_g1_term, 0.5);
    let dc_dt = transport_c
        .add_scaled(&conv_f2, 0.5)
        .add_scaled(&conv_g2_term, 0.5);
    da_dt.ensure_finite("da/dt")?;
    dc_dt.ensure_finite("dc/dt")?;
    Ok((Rhs { da_dt, dc_dt }, b))
}

/// Right-hand side of the evolution system.
pub fn rhs(s: &State, opts: &SolverOptions) -> Result<Rhs> {
    rhs_with_b(s, opts).map(|(r, _)| r)
}

fn advanced(s: &State, r: &Rhs, factor: f64, t: f64) -> State {
    State {
        t,
        a: s.a.add_scaled(&r.da_dt, factor),
        c: s.c.add_scaled(&r.dc_dt, factor),
    }
}

fn cfl_limit(s: &State, b: &Field, opts: &SolverOptions) -> f64 {
    opts.cfl * s.grid().dx() / b.sup_norm().max(1e-12)
}

fn rk4_remaining_stages(s: &State, dt: f64, k1: &Rhs, opts: &SolverOptions) -> Result<State> {
    let half = advanced(s, k1, dt / 2.0, s.t + dt / 2.0);
    let k2 = rhs(&half, opts)?;
    let half2 = advanced(s, &k2, dt / 2.0, s.t + dt / 2.0);
    let k3 = rhs(&half2, opts)?;
    let full = advanced(s, &k3, dt, s.t + dt);
    let k4 = rhs(&full, opts)?;

    let combine = |y0: &Field, s1: &Field, s2: &Field, s3: &Field, s4: &Field| {
        y0.add_scaled(s1, dt / 6.0)
            .add_scaled(s2, dt / 3.0)
            .add_scaled(s3, dt / 3.0)
            .add_scaled(s4, dt / 6.0)
    };
    let a = combine(&s.a, &k1.da_dt, &k2.da_dt, &k3.da_dt, &k4.da_dt);
    let c = combine(&s.c, &k1.dc_dt, &k2.dc_dt, &k3.dc_dt, &k4.dc_dt);
    a.ensure_finite("rk4 step (a)")?;
    c.ensure_finite("rk4 step (c)")?;
    Ok(State { t: s.t + dt, a, c })
}

/// One classical four-stage Runge-Kutta step.
///
/// Negative `dt` steps backwards, which the time-reversal checks rely on;
/// the CFL bound applies to `|dt|`.
pub fn step_rk4(s: &State, dt: f64, opts: &SolverOptions) -> Result<State> {
    let (k1, b) = rhs_with_b(s, opts)?;
    let limit = cfl_limit(s, &b, opts);
    if dt.abs() > limit {
        if opts.cfl_strict {
            return Err(Error::CflViolation {
                dt: dt.abs(),
                limit,
            });
        }
        eprintln!(
            "warning: dt = {:.3e} exceeds CFL bound {:.3e} at t = {:.6}",
            dt.abs(),
            limit,
            s.t
        );
    }
    rk4_remaining_stages(s, dt, &k1, opts)
}

/// March `s0` to `t_end`, invoking `observer` with each sampled state and
/// its recovered `b` (at the initial time, every `opts.stride` accepted
/// steps, and at `t_end`). The final step is shortened to land exactly on
/// `t_end`; `t_end` on either side of `s0.t` is accepted.
///
/// Fails with [`Error::BlowUp`] as soon as either component exceeds
/// `opts.blowup_cap` in sup norm or stops being finite.
pub fn evolve(
    s0: &State,
    t_end: f64,
    step: TimeStep,
    opts: &SolverOptions,
    mut observer: impl FnMut(&State, &Field),
) -> Result<State> {
    if let TimeStep::Fixed(dt) = step {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config {
                key: "dt".into(),
                message: format!("fixed time step must be positive and finite, got {dt}"),
            });
        }
    }
    let mut s = s0.clone();
    let dir = if t_end >= s0.t { 1.0 } else { -1.0 };
    let t_tol = 1e-12 * t_end.abs().max(1.0);
    let stride = opts.stride.max(1);

    let (mut k1, mut b) = rhs_with_b(&s, opts)?;
    observer(&s, &b);
    if (t_end - s.t).abs() <= t_tol {
        return Ok(s);
    }

    let mut steps_since_obs = 0usize;
    loop {
        let remaining = (t_end - s.t).abs();
        let mut dt_mag = match step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Cfl => cfl_limit(&s, &b, opts).min(opts.dt_max),
        };
        dt_mag = dt_mag.min(remaining);
        if matches!(step, TimeStep::Fixed(_)) {
            let limit = cfl_limit(&s, &b, opts);
            if dt_mag > limit {
                if opts.cfl_strict {
                    return Err(Error::CflViolation { dt: dt_mag, limit });
                }
                eprintln!(
                    "warning: dt = {dt_mag:.3e} exceeds CFL bound {limit:.3e} at t = {:.6}",
                    s.t
                );
            }
        }
        s = rk4_remaining_stages(&s, dir * dt_mag, &k1, opts)?;

        let sup = s.sup_norm();
        if !sup.is_finite() || sup > opts.blowup_cap {
            return Err(Error::BlowUp {
                t: s.t,
                sup,
                cap: opts.blowup_cap,
            });
        }

        let done = (t_end - s.t).abs() <= t_tol;
        if done {
            // land bit-exactly on the requested time
            s.t = t_end;
        }
        steps_since_obs += 1;

        let refresh = rhs_with_b(&s, opts)?;
        k1 = refresh.0;
        b = refresh.1;
        if done || steps_since_obs >= stride {
            observer(&s, &b);
            steps_since_obs = 0;
        }
        if done {
            return Ok(s);
        }
    }
}
