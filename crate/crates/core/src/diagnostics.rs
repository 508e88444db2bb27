//! Every monitored quantity the analysis bounds: the conserved functionals
//! `H1 = ∫(ac + a_x c_x)` and `H2 = ∫u c_x = -∫w a_x`, pointwise sign and
//! slope-domination checks, `L^p` growth envelopes with the explicit
//! Gronwall coefficient, `b`-field bounds, total variation, and the
//! weak-formulation residual.
//!
//! Everything here is a pure function of immutable snapshots; diagnostics
//! can run concurrently with the time loop.

use crate::dynamics::{self, State};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::initdata::standard_bump;
use crate::kernels::{self, KernelBackend};
use std::collections::BTreeMap;

/// One stored trajectory slice: the evolved state plus its recovered `b`.
#[derive(Debug, Clone)]
pub struct Sample {
    pub state: State,
    pub b: Field,
}

impl Sample {
    pub fn new(state: State, b: Field) -> Self {
        Self { state, b }
    }
}

/// Field selector for the norm table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FieldTag {
    A,
    C,
    B,
    U,
    W,
}

/// Exponent selector for the norm table (`LpEps` is `p = 1 + ε`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NormTag {
    L1,
    LpEps,
    L2,
    Sup,
}

/// One time-slice of all monitored quantities.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub h1: f64,
    pub h2_form1: f64,
    pub h2_form2: f64,
    pub min_u: f64,
    pub min_w: f64,
    pub slope_excess_a: f64,
    pub slope_excess_c: f64,
    /// `(field, p) -> norm` for all five fields and all four exponents.
    pub norms: BTreeMap<(FieldTag, NormTag), f64>,
    pub b_h1: f64,
    pub b_sup: f64,
    pub bx_sup: f64,
    /// Relative residual `‖4b - b_xx - r‖_∞ / (1 + ‖r‖_∞)`.
    pub elliptic_residual: f64,
    pub tv_ax: f64,
    pub tv_bx: f64,
}

/// Fixed CSV column order of the diagnostics table.
pub const CSV_HEADER: &str = "t,H1,H2_form1,H2_form2,min_u,min_w,slope_excess_a,slope_excess_c,\
l1_u,l1_w,lp_u,lp_w,l2_a,l2_c,sup_a,sup_c,b_h1,b_sup,bx_sup,elliptic_residual,tv_ax,tv_bx";

impl DiagnosticsRecord {
    /// Measure every monitored quantity of one sample. `epsilon` selects
    /// the `L^{1+ε}` exponent of the norm table.
    pub fn measure(sample: &Sample, epsilon: f64) -> Result<Self> {
        let state = &sample.state;
        let b = &sample.b;
        let a = state.a();
        let c = state.c();
        let a_x = a.derivative()?;
        let b_x = b.derivative()?;
        let u = dynamics::compute_u(a)?;
        let w = dynamics::compute_w(c)?;

        let h1 = conserved_h1(state)?;
        let (h2_form1, h2_form2) = conserved_h2(state)?;
        let ss = sign_and_slope(state)?;

        let p_eps = 1.0 + epsilon;
        let mut norms = BTreeMap::new();
        for (tag, field) in [
            (FieldTag::A, a),
            (FieldTag::C, c),
            (FieldTag::B, b),
            (FieldTag::U, &u),
            (FieldTag::W, &w),
        ] {
            norms.insert((tag, NormTag::L1), field.lp_norm(1.0)?);
            norms.insert((tag, NormTag::LpEps), field.lp_norm(p_eps)?);
            norms.insert((tag, NormTag::L2), field.lp_norm(2.0)?);
            norms.insert((tag, NormTag::Sup), field.sup_norm());
        }

        let bb = b_bounds(state, b)?;

        Ok(Self {
            t: state.t(),
            h1,
            h2_form1,
            h2_form2,
            min_u: ss.min_u,
            min_w: ss.min_w,
            slope_excess_a: ss.slope_excess_a,
            slope_excess_c: ss.slope_excess_c,
            norms,
            b_h1: bb.b_h1,
            b_sup: bb.b_sup,
            bx_sup: bb.bx_sup,
            elliptic_residual: bb.elliptic_residual,
            tv_ax: total_variation(&a_x),
            tv_bx: total_variation(&b_x),
        })
    }

    fn norm(&self, f: FieldTag, p: NormTag) -> f64 {
        self.norms[&(f, p)]
    }

    /// Serialize in the fixed [`CSV_HEADER`] column order.
    pub fn csv_row(&self) -> String {
        let cols = [
            self.t,
            self.h1,
            self.h2_form1,
            self.h2_form2,
            self.min_u,
            self.min_w,
            self.slope_excess_a,
            self.slope_excess_c,
            self.norm(FieldTag::U, NormTag::L1),
            self.norm(FieldTag::W, NormTag::L1),
            self.norm(FieldTag::U, NormTag::LpEps),
            self.norm(FieldTag::W, NormTag::LpEps),
            self.norm(FieldTag::A, NormTag::L2),
            self.norm(FieldTag::C, NormTag::L2),
            self.norm(FieldTag::A, NormTag::Sup),
            self.norm(FieldTag::C, NormTag::Sup),
            self.b_h1,
            self.b_sup,
            self.bx_sup,
            self.elliptic_residual,
            self.tv_ax,
            self.tv_bx,
        ];
        cols.iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `H1 = ∫(a c + a_x c_x)`.
pub fn conserved_h1(s: &State) -> Result<f64> {
    let a_x = s.a().derivative()?;
    let c_x = s.c().derivative()?;
    let integrand = s
        .a()
        .zip_with(s.c(), |p, q| p * q)
        .add_scaled(&a_x.zip_with(&c_x, |p, q| p * q), 1.0);
    integrand.integrate()
}

/// Both quadrature forms of `H2`: `(∫u c_x, -∫w a_x)`.
///
/// The two forms are related by integration by parts; with the spectral
/// derivative the discrete identity is exact, so their gap is a pure
/// roundoff meter.
pub fn conserved_h2(s: &State) -> Result<(f64, f64)> {
    let a_x = s.a().derivative()?;
    let c_x = s.c().derivative()?;
    let u = dynamics::compute_u(s.a())?;
    let w = dynamics::compute_w(s.c())?;
    let form1 = u.zip_with(&c_x, |p, q| p * q).integrate()?;
    let form2 = -w.zip_with(&a_x, |p, q| p * q).integrate()?;
    Ok((form1, form2))
}

/// Pointwise sign and slope-domination measurements.
#[derive(Debug, Clone, Copy)]
pub struct SignSlope {
    pub min_u: f64,
    pub min_w: f64,
    /// `max_x (|a_x| - a)`; nonpositive when the slope is dominated.
    pub slope_excess_a: f64,
    pub slope_excess_c: f64,
}

/// Measure the sign conditions `u, w >= 0` and the slope domination
/// `|a_x| <= a`, `|c_x| <= c`. Pure measurement; assertions live with the
/// callers.
pub fn sign_and_slope(s: &State) -> Result<SignSlope> {
    let u = dynamics::compute_u(s.a())?;
    let w = dynamics::compute_w(s.c())?;
    let a_x = s.a().derivative()?;
    let c_x = s.c().derivative()?;
    Ok(SignSlope {
        min_u: u.min_value(),
        min_w: w.min_value(),
        slope_excess_a: a_x.zip_with(s.a(), |dx, v| dx.abs() - v).max_value(),
        slope_excess_c: c_x.zip_with(s.c(), |dx, v| dx.abs() - v).max_value(),
    })
}

/// `b`-field bounds and the elliptic-constraint residual.
#[derive(Debug, Clone, Copy)]
pub struct BBounds {
    pub b_h1: f64,
    pub b_sup: f64,
    pub bx_sup: f64,
    /// `‖4b - b_xx - r‖_∞ / (1 + ‖r‖_∞)`.
    pub elliptic_residual: f64,
}

/// Measure `‖b‖_{H1}`, `‖b‖_∞`, `‖b_x‖_∞` and the relative residual of
/// `4b - b_xx = r` for a given recovered `b`.
pub fn b_bounds(s: &State, b: &Field) -> Result<BBounds> {
    let r = dynamics::elliptic_source(s.a(), s.c())?;
    let b_xx = b.second_derivative()?;
    let residual = b
        .scale(4.0)
        .add_scaled(&b_xx, -1.0)
        .add_scaled(&r, -1.0)
        .sup_norm();
    Ok(BBounds {
        b_h1: b.h1_norm()?,
        b_sup: b.sup_norm(),
        bx_sup: b.derivative()?.sup_norm(),
        elliptic_residual: residual / (1.0 + r.sup_norm()),
    })
}

/// Young's-inequality constant `‖G2‖_{H1}` measured once from the discrete
/// impulse response; `‖b‖_{H1} <= C ‖r‖_{L1}` then holds for every state.
pub fn young_h1_constant(grid: crate::field::Grid1D) -> Result<f64> {
    let mut spike = vec![0.0; grid.n()];
    spike[grid.n() / 2] = 1.0 / grid.dx();
    let delta = Field::new(grid, spike)?;
    let response = kernels::conv_g2(&delta, KernelBackend::FourierSymbol)?;
    response.h1_norm()
}

/// Selector for the momentum component a growth envelope tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumField {
    U,
    W,
}

/// Exponential Gronwall envelope `e^{t C_T} ‖·(0)‖_p` against the measured
/// norm series.
#[derive(Debug, Clone)]
pub struct GrowthEnvelope {
    /// Gronwall coefficient realized from the run's own sup-norms:
    /// `C_T = (3/2) max_t (‖b_x‖_∞ + ‖a_x c_x - a c‖_∞)`.
    pub c_t: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub envelope: Vec<f64>,
}

impl GrowthEnvelope {
    /// Worst signed margin `norm - envelope` over the series (negative
    /// when the envelope holds everywhere).
    pub fn max_violation(&self) -> f64 {
        self.norms
            .iter()
            .zip(&self.envelope)
            .map(|(n, e)| n - e)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when the measured series stays below the envelope with the
    /// given relative slack.
    pub fn holds(&self, slack: f64) -> bool {
        self.norms
            .iter()
            .zip(&self.envelope)
            .all(|(n, e)| *n <= e * (1.0 + slack))
    }
}

/// Build the growth envelope of `‖u(t)‖_p` (or `w`) over a stored
/// trajectory.
pub fn growth_envelope(
    samples: &[Sample],
    field: MomentumField,
    p: f64,
) -> Result<GrowthEnvelope> {
    if samples.len() < 2 {
        return Err(Error::TrajectoryTooShort {
            need: 2,
            got: samples.len(),
        });
    }
    let mut c_t = 0.0f64;
    let mut times = Vec::with_capacity(samples.len());
    let mut norms = Vec::with_capacity(samples.len());
    for sample in samples {
        let s = &sample.state;
        let a_x = s.a().derivative()?;
        let c_x = s.c().derivative()?;
        let cross = a_x
            .zip_with(&c_x, |p, q| p * q)
            .add_scaled(&s.a().zip_with(s.c(), |p, q| p * q), -1.0);
        let bx_sup = sample.b.derivative()?.sup_norm();
        c_t = c_t.max(1.5 * (bx_sup + cross.sup_norm()));

        let m = match field {
            MomentumField::U => dynamics::compute_u(s.a())?,
            MomentumField::W => dynamics::compute_w(s.c())?,
        };
        times.push(s.t());
        norms.push(m.lp_norm(p)?);
    }
    let t0 = times[0];
    let n0 = norms[0];
    let envelope = times.iter().map(|t| ((t - t0) * c_t).exp() * n0).collect();
    Ok(GrowthEnvelope {
        c_t,
        times,
        norms,
        envelope,
    })
}

/// Total variation `Σ |f(x_{i+1}) - f(x_i)|`, with the periodic wrap term
/// on periodic grids.
pub fn total_variation(f: &Field) -> f64 {
    let v = f.values();
    let n = v.len();
    let mut tv = 0.0;
    for i in 1..n {
        tv += (v[i] - v[i - 1]).abs();
    }
    if f.grid().is_periodic() {
        tv += (v[0] - v[n - 1]).abs();
    }
    tv
}

/// Smooth compactly supported space-time test function: tensor product of
/// two scaled copies of the standard bump, normalized to 1 at its center.
#[derive(Debug, Clone, Copy)]
pub struct SpaceTimeBump {
    pub t_center: f64,
    pub t_halfwidth: f64,
    pub x_center: f64,
    pub x_halfwidth: f64,
}

impl SpaceTimeBump {
    fn bump(s: f64) -> f64 {
        standard_bump(s) * std::f64::consts::E
    }

    /// `d/ds` of the normalized bump.
    fn bump_ds(s: f64) -> f64 {
        if s.abs() < 1.0 {
            let q = s * s - 1.0;
            Self::bump(s) * (-2.0 * s / (q * q))
        } else {
            0.0
        }
    }

    pub fn phi(&self, t: f64, x: f64) -> f64 {
        Self::bump((t - self.t_center) / self.t_halfwidth)
            * Self::bump((x - self.x_center) / self.x_halfwidth)
    }

    pub fn phi_t(&self, t: f64, x: f64) -> f64 {
        Self::bump_ds((t - self.t_center) / self.t_halfwidth) / self.t_halfwidth
            * Self::bump((x - self.x_center) / self.x_halfwidth)
    }

    pub fn phi_x(&self, t: f64, x: f64) -> f64 {
        Self::bump((t - self.t_center) / self.t_halfwidth)
            * Self::bump_ds((x - self.x_center) / self.x_halfwidth)
            / self.x_halfwidth
    }
}

/// Weak-formulation residuals `(R_a, R_c)` of a stored trajectory against
/// one test function:
///
/// ```text
/// R_a = ∫∫ (a φ_t + a_x b φ - 1/2 (G1*f1) φ_x + 1/2 (G1*g1) φ) dx dt
///       + ∫ a(t0) φ(t0, x) dx
/// ```
///
/// and the analogous expression with `(c, f2, g2)`. Space is integrated by
/// the periodic Riemann sum, time by the trapezoid rule over the stored
/// slices; passing a subsampled slice list realizes a time-refinement
/// study. The initial-data term is included whenever the trajectory
/// starts at `t = 0`; otherwise the bump must vanish below the first
/// stored time.
pub fn weak_residual(
    samples: &[Sample],
    bump: &SpaceTimeBump,
    backend: KernelBackend,
) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::TrajectoryTooShort {
            need: 2,
            got: samples.len(),
        });
    }
    let grid = samples[0].state.grid();
    let t0 = samples[0].state.t();
    let t1 = samples.last().unwrap().state.t();
    let starts_at_zero = t0.abs() <= 1e-12;

    if bump.t_halfwidth <= 0.0 || bump.x_halfwidth <= 0.0 {
        return Err(Error::InvalidParameter(
            "test-function half-widths must be positive".into(),
        ));
    }
    let t_lo = bump.t_center - bump.t_halfwidth;
    let t_hi = bump.t_center + bump.t_halfwidth;
    let x_lo = bump.x_center - bump.x_halfwidth;
    let x_hi = bump.x_center + bump.x_halfwidth;
    // support may extend below t = 0 (the data term covers it) but not
    // beyond the stored box in any other direction
    if t_hi > t1 + 1e-12
        || (!starts_at_zero && t_lo < t0 - 1e-12)
        || x_lo < grid.x_min()
        || x_hi > grid.x_max()
    {
        return Err(Error::UnsupportedTestFunction);
    }

    let dx = grid.dx();
    let mut f_a = Vec::with_capacity(samples.len());
    let mut f_c = Vec::with_capacity(samples.len());
    for sample in samples {
        let s = &sample.state;
        let t = s.t();
        // skip slices outside the bump's time support
        if t < t_lo || t > t_hi {
            f_a.push(0.0);
            f_c.push(0.0);
            continue;
        }
        let b = &sample.b;
        let a_x = s.a().derivative()?;
        let c_x = s.c().derivative()?;
        let (f1, g1) = dynamics::assemble_f1_g1(s.a(), s.c(), b)?;
        let (f2, g2) = dynamics::assemble_f2_g2(s.a(), s.c(), b)?;
        let conv_f1 = kernels::conv_g1(&f1, backend)?;
        let conv_g1_flux = kernels::conv_g1(&g1, backend)?;
        let conv_f2 = kernels::conv_g1(&f2, backend)?;
        let conv_g2_flux = kernels::conv_g1(&g2, backend)?;

        let mut acc_a = 0.0;
        let mut acc_c = 0.0;
        for (i, x) in grid.points().enumerate() {
            if x < x_lo || x > x_hi {
                continue;
            }
            let phi = bump.phi(t, x);
            let phi_t = bump.phi_t(t, x);
            let phi_x = bump.phi_x(t, x);
            acc_a += s.a().values()[i] * phi_t + a_x.values()[i] * b.values()[i] * phi
                - 0.5 * conv_f1.values()[i] * phi_x
                + 0.5 * conv_g1_flux.values()[i] * phi;
            acc_c += s.c().values()[i] * phi_t + c_x.values()[i] * b.values()[i] * phi
                - 0.5 * conv_f2.values()[i] * phi_x
                + 0.5 * conv_g2_flux.values()[i] * phi;
        }
        f_a.push(acc_a * dx);
        f_c.push(acc_c * dx);
    }

    // trapezoid over the stored slice times
    let mut r_a = 0.0;
    let mut r_c = 0.0;
    for j in 1..samples.len() {
        let dt = samples[j].state.t() - samples[j - 1].state.t();
        r_a += 0.5 * dt * (f_a[j] + f_a[j - 1]);
        r_c += 0.5 * dt * (f_c[j] + f_c[j - 1]);
    }

    if starts_at_zero {
        let s0 = &samples[0].state;
        let mut data_a = 0.0;
        let mut data_c = 0.0;
        for (i, x) in grid.points().enumerate() {
            let phi0 = bump.phi(t0, x);
            if phi0 != 0.0 {
                data_a += s0.a().values()[i] * phi0;
                data_c += s0.c().values()[i] * phi0;
            }
        }
        r_a += data_a * dx;
        r_c += data_c * dx;
    }
    Ok((r_a, r_c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{recover_b, State};
    use crate::field::Grid1D;
    use crate::initdata::{admissible_profiles, lift_pair, GaussSpec, Profile};
    use crate::rng::SplitMix64;
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::symmetric(20.0, 512).unwrap()
    }

    fn zero_state(g: Grid1D) -> State {
        State::new(0.0, Field::zeros(g), Field::zeros(g)).unwrap()
    }

    fn sample_of(s: &State) -> Sample {
        let b = recover_b(s.a(), s.c(), KernelBackend::FourierSymbol).unwrap();
        Sample::new(s.clone(), b)
    }

    #[test]
    fn h1_of_equal_cosines_is_two_pi() {
        let g = Grid1D::new(0.0, 2.0 * PI, 256, true).unwrap();
        let a = Field::from_fn(g, |x| x.cos()).unwrap();
        let s = State::new(0.0, a.clone(), a).unwrap();
        // cos² + sin² integrates to the period
        assert!((conserved_h1(&s).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert_eq!(conserved_h1(&zero_state(grid())).unwrap(), 0.0);
    }

    #[test]
    fn h2_forms_agree_discretely() {
        let g = grid();
        // equal components: both forms vanish identically
        let a = Field::from_fn(g, |x| (-0.3 * x * x).exp()).unwrap();
        let s = State::new(0.0, a.clone(), a).unwrap();
        let (f1, f2) = conserved_h2(&s).unwrap();
        assert!(f1.abs() < 1e-12 && f2.abs() < 1e-12);

        // a = 0 forces both to zero
        let s = State::new(0.0, Field::zeros(g), Field::from_fn(g, |x| x.sin()).unwrap())
            .unwrap();
        let (f1, f2) = conserved_h2(&s).unwrap();
        assert_eq!(f1, 0.0);
        assert_eq!(f2, 0.0);

        // random smooth pair: integration-by-parts identity to roundoff
        let mut rng = SplitMix64::new(3);
        for _ in 0..5 {
            let a = crate::testutil::random_smooth(g, &mut rng, 10);
            let c = crate::testutil::random_smooth(g, &mut rng, 10);
            let s = State::new(0.0, a, c).unwrap();
            let (f1, f2) = conserved_h2(&s).unwrap();
            assert!(
                (f1 - f2).abs() <= 1e-10 * (1.0 + f1.abs()),
                "gap {:.3e}",
                (f1 - f2).abs()
            );
        }
    }

    #[test]
    fn sign_and_slope_measurements() {
        let g = grid();
        let ss = sign_and_slope(&zero_state(g)).unwrap();
        assert_eq!(ss.min_u, 0.0);
        assert_eq!(ss.min_w, 0.0);
        assert_eq!(ss.slope_excess_a, 0.0);

        // lifted nonnegative bump: admissible, so no excess
        let u0 = Field::from_fn(g, |x| (-0.5 * x * x).exp()).unwrap();
        let (a0, c0) = lift_pair(&u0, &u0).unwrap();
        let s = State::new(0.0, a0, c0).unwrap();
        let ss = sign_and_slope(&s).unwrap();
        assert!(ss.min_u >= -1e-10);
        assert!(ss.slope_excess_a <= 1e-10);

        // sign-changing data is measured, not rejected
        let a = Field::from_fn(g, |x| (PI * x / 20.0).cos()).unwrap();
        let s = State::new(0.0, a.clone(), a).unwrap();
        let ss = sign_and_slope(&s).unwrap();
        assert!(ss.slope_excess_a > 0.0);
    }

    #[test]
    fn b_bounds_zero_for_equal_components() {
        let g = grid();
        let a = Field::from_fn(g, |x| (-0.2 * x * x).exp()).unwrap();
        let s = State::new(0.0, a.clone(), a).unwrap();
        let b = recover_b(s.a(), s.c(), KernelBackend::FourierSymbol).unwrap();
        let bb = b_bounds(&s, &b).unwrap();
        assert!(bb.b_h1 < 1e-13);
        assert!(bb.b_sup < 1e-14);
        assert!(bb.elliptic_residual < 1e-14);
    }

    #[test]
    fn elliptic_residual_small_for_fourier_backend() {
        let g = grid();
        let mut rng = SplitMix64::new(12);
        for _ in 0..5 {
            let a = crate::testutil::random_smooth(g, &mut rng, 12);
            let c = crate::testutil::random_smooth(g, &mut rng, 12);
            let s = State::new(0.0, a, c).unwrap();
            let b = recover_b(s.a(), s.c(), KernelBackend::FourierSymbol).unwrap();
            let bb = b_bounds(&s, &b).unwrap();
            assert!(bb.elliptic_residual <= 1e-8, "{:.3e}", bb.elliptic_residual);
        }
    }

    #[test]
    fn young_chain_bounds_b_h1() {
        let g = grid();
        let c_young = young_h1_constant(g).unwrap();
        let mut rng = SplitMix64::new(21);
        for _ in 0..5 {
            let a = crate::testutil::random_smooth(g, &mut rng, 10);
            let c = crate::testutil::random_smooth(g, &mut rng, 10);
            let s = State::new(0.0, a, c).unwrap();
            let b = recover_b(s.a(), s.c(), KernelBackend::FourierSymbol).unwrap();
            let r = dynamics::elliptic_source(s.a(), s.c()).unwrap();
            let bound = c_young * r.lp_norm(1.0).unwrap();
            let got = b.h1_norm().unwrap();
            assert!(got <= bound * (1.0 + 1e-6), "{got} vs bound {bound}");
        }
    }

    #[test]
    fn total_variation_examples() {
        let g = grid();
        assert_eq!(total_variation(&Field::from_fn(g, |_| 2.5).unwrap()), 0.0);

        // tent of height h: up h, down h
        let h = 1.7;
        let tent = Field::from_fn(g, |x| {
            let d = 1.0 - x.abs() / 10.0;
            h * d.max(0.0)
        })
        .unwrap();
        assert!((total_variation(&tent) - 2.0 * h).abs() < 1e-12);
    }

    #[test]
    fn growth_envelope_trivial_and_guards() {
        let g = grid();
        let s = zero_state(g);
        let samples = vec![sample_of(&s), {
            let mut s2 = sample_of(&s);
            s2.state = State::new(1.0, Field::zeros(g), Field::zeros(g)).unwrap();
            s2
        }];
        let env = growth_envelope(&samples, MomentumField::U, 1.0).unwrap();
        assert_eq!(env.c_t, 0.0);
        assert!(env.holds(0.0));

        assert!(matches!(
            growth_envelope(&samples[..1], MomentumField::U, 1.0),
            Err(Error::TrajectoryTooShort { .. })
        ));
    }

    #[test]
    fn weak_residual_zero_solution_and_guards() {
        let g = grid();
        let s0 = zero_state(g);
        let s1 = State::new(1.0, Field::zeros(g), Field::zeros(g)).unwrap();
        let samples = vec![sample_of(&s0), sample_of(&s1)];
        let bump = SpaceTimeBump {
            t_center: 0.5,
            t_halfwidth: 0.4,
            x_center: 0.0,
            x_halfwidth: 5.0,
        };
        let (ra, rc) = weak_residual(&samples, &bump, KernelBackend::FourierSymbol).unwrap();
        assert_eq!(ra, 0.0);
        assert_eq!(rc, 0.0);

        // support leaving the stored box is rejected
        let bad = SpaceTimeBump {
            t_center: 0.9,
            t_halfwidth: 0.4,
            x_center: 0.0,
            x_halfwidth: 5.0,
        };
        assert!(matches!(
            weak_residual(&samples, &bad, KernelBackend::FourierSymbol),
            Err(Error::UnsupportedTestFunction)
        ));
        let bad_x = SpaceTimeBump {
            t_center: 0.5,
            t_halfwidth: 0.3,
            x_center: 18.0,
            x_halfwidth: 5.0,
        };
        assert!(matches!(
            weak_residual(&samples, &bad_x, KernelBackend::FourierSymbol),
            Err(Error::UnsupportedTestFunction)
        ));
    }

    #[test]
    fn record_measures_and_serializes() {
        let g = grid();
        let profile = Profile::GaussianBump {
            u: GaussSpec {
                amplitude: 1.0,
                center: -2.0,
                sigma: 1.0,
            },
            w: GaussSpec {
                amplitude: 1.0,
                center: 2.0,
                sigma: 1.0,
            },
        };
        let (u0, w0) = admissible_profiles(&profile, g).unwrap();
        let (a0, c0) = lift_pair(&u0, &w0).unwrap();
        let s = State::new(0.0, a0, c0).unwrap();
        let rec = DiagnosticsRecord::measure(&sample_of(&s), 1.0).unwrap();

        assert_eq!(CSV_HEADER.split(',').count(), 22);
        let row = rec.csv_row();
        assert_eq!(row.split(',').count(), 22);
        // deterministic serialization
        assert_eq!(row, rec.csv_row());
        assert!(rec.norms.len() == 20);
        assert!(rec.elliptic_residual <= 1e-8);
        assert!(rec.min_u >= -1e-10);
        // u = G1-lift inverse: l1_u should equal the profile mass
        let l1_u = rec.norms[&(FieldTag::U, NormTag::L1)];
        assert!((l1_u - u0.lp_norm(1.0).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn bump_derivative_matches_finite_difference() {
        let bump = SpaceTimeBump {
            t_center: 1.0,
            t_halfwidth: 0.7,
            x_center: 2.0,
            x_halfwidth: 3.0,
        };
        let h = 1e-6;
        for (t, x) in [(0.8, 1.0), (1.2, 3.5), (0.5, 2.0)] {
            let fd_t = (bump.phi(t + h, x) - bump.phi(t - h, x)) / (2.0 * h);
            assert!((fd_t - bump.phi_t(t, x)).abs() < 1e-6);
            let fd_x = (bump.phi(t, x + h) - bump.phi(t, x - h)) / (2.0 * h);
            assert!((fd_x - bump.phi_x(t, x)).abs() < 1e-6);
        }
    }
}
