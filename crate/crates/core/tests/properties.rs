//! Property tests for the algebraic invariants of the field and kernel
//! layers: homogeneity and triangle structure of the norms, exactness of
//! the quadrature/derivative pairing, kernel positivity and the Young
//! bound, mass preservation under mollification.

// configs are built by mutating the default, field by field
#![allow(clippy::field_reassign_with_default)]

use proptest::prelude::*;
use tricam_core::diagnostics::total_variation;
use tricam_core::field::{Field, Grid1D};
use tricam_core::initdata::{mollify, MollifierIndex};
use tricam_core::kernels::{conv_g1, conv_g2, KernelBackend};

const N: usize = 256;

fn grid() -> Grid1D {
    Grid1D::symmetric(20.0, N).unwrap()
}

/// Random band-limited field from a coefficient vector.
fn field_from_coeffs(coeffs: &[(f64, f64)]) -> Field {
    let g = grid();
    let period = g.length();
    Field::from_fn(g, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, &(amp, phase))| {
                let k = 2.0 * std::f64::consts::PI * (m + 1) as f64 / period;
                amp / ((m + 1) * (m + 1)) as f64 * (k * x + phase).cos()
            })
            .sum()
    })
    .unwrap()
}

fn coeff_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, 0.0..std::f64::consts::TAU), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lp_norm_is_homogeneous(coeffs in coeff_strategy(), scale in -4.0..4.0f64, p in 1.0..4.0f64) {
        let f = field_from_coeffs(&coeffs);
        let lhs = f.scale(scale).lp_norm(p).unwrap();
        let rhs = scale.abs() * f.lp_norm(p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn lp_norm_triangle_inequality(c1 in coeff_strategy(), c2 in coeff_strategy(), p in 1.0..4.0f64) {
        let f = field_from_coeffs(&c1);
        let g = field_from_coeffs(&c2);
        let sum = f.add_scaled(&g, 1.0);
        prop_assert!(
            sum.lp_norm(p).unwrap()
                <= f.lp_norm(p).unwrap() + g.lp_norm(p).unwrap() + 1e-12
        );
    }

    #[test]
    fn integral_of_spectral_derivative_vanishes(coeffs in coeff_strategy()) {
        let f = field_from_coeffs(&coeffs);
        let d = f.derivative().unwrap();
        prop_assert!(d.integrate().unwrap().abs() <= 1e-10 * (1.0 + f.sup_norm()));
    }

    #[test]
    fn kernels_preserve_positivity_and_young_bound(
        amp in 0.1..2.0f64,
        center in -8.0..8.0f64,
        sigma in 0.5..2.0f64,
    ) {
        let g = grid();
        let f = Field::from_fn(g, |x| {
            let d = g.wrap_displacement(x - center);
            amp * (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .unwrap();
        for backend in [KernelBackend::FourierSymbol, KernelBackend::RecursiveScan] {
            let h1 = conv_g1(&f, backend).unwrap();
            let h2 = conv_g2(&f, backend).unwrap();
            prop_assert!(h1.min_value() >= -1e-12 * (1.0 + f.sup_norm()));
            prop_assert!(h2.min_value() >= -1e-12 * (1.0 + f.sup_norm()));
            // Young: sup |G1*f| <= sup G1 * ||f||_L1 = ||f||_L1 / 2
            let l1 = f.lp_norm(1.0).unwrap();
            prop_assert!(h1.sup_norm() <= 0.5 * l1 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn mollification_preserves_mass_and_positivity(
        amp in 0.1..2.0f64,
        center in -8.0..8.0f64,
        n in 1u32..6,
    ) {
        // 1024 nodes keep every index in the range resolvable (2/n >= 8 dx)
        let g = Grid1D::symmetric(20.0, 1024).unwrap();
        let f = Field::from_fn(g, |x| {
            let d = g.wrap_displacement(x - center);
            amp * (-0.5 * d * d).exp()
        })
        .unwrap();
        let m = mollify(&f, MollifierIndex::new(n).unwrap()).unwrap();
        prop_assert!(m.min_value() >= -1e-12);
        let gap = (m.integrate().unwrap() - f.integrate().unwrap()).abs();
        prop_assert!(gap <= 1e-10 * (1.0 + f.integrate().unwrap().abs()));
    }

    #[test]
    fn total_variation_is_subadditive(c1 in coeff_strategy(), c2 in coeff_strategy()) {
        let f = field_from_coeffs(&c1);
        let g = field_from_coeffs(&c2);
        let sum = f.add_scaled(&g, 1.0);
        prop_assert!(
            total_variation(&sum) <= total_variation(&f) + total_variation(&g) + 1e-10
        );
    }
}

/// Weak-residual behavior across a small mollification cascade: each
/// smooth member's residual stays below a fixed tolerance even as the
/// initial data sharpens.
#[test]
fn weak_residual_bounded_across_mollification_cascade() {
    use tricam_core::diagnostics::{weak_residual, Sample, SpaceTimeBump};
    use tricam_core::dynamics::{evolve, SolverOptions, State, TimeStep};
    use tricam_core::initdata::{admissible_profiles, lift_pair, Profile};

    let g = Grid1D::symmetric(20.0, 2048).unwrap();
    let bump = SpaceTimeBump {
        t_center: 0.5,
        t_halfwidth: 0.35,
        x_center: 0.0,
        x_halfwidth: 4.0,
    };
    let mut worst = 0.0f64;
    for moll in [2u32, 4, 8] {
        let profile = Profile::SmoothedPeakon {
            peaks_a: vec![(1.0, -2.0)],
            peaks_c: vec![(1.0, 2.0)],
            moll,
        };
        let (u0, w0) = admissible_profiles(&profile, g).unwrap();
        let (a0, c0) = lift_pair(&u0, &w0).unwrap();
        let s0 = State::new(0.0, a0, c0).unwrap();
        let mut opts = SolverOptions::default();
        opts.stride = 2;
        let mut samples = Vec::new();
        evolve(&s0, 1.0, TimeStep::Fixed(0.004), &opts, |s, b| {
            samples.push(Sample::new(s.clone(), b.clone()))
        })
        .unwrap();
        let (ra, rc) = weak_residual(&samples, &bump, KernelBackend::FourierSymbol).unwrap();
        worst = worst.max(ra.abs().max(rc.abs()));
    }
    assert!(worst < 1e-5, "worst residual {worst:.3e}");
}
