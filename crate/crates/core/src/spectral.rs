//! FFT plumbing shared by the derivative and convolution backends.
//!
//! Real data is transformed through a complex FFT; plans are cached per
//! thread inside the planner. All callers work with the full complex
//! spectrum in standard FFT ordering (mode j holds wavenumber
//! `2*pi*j/P` for `j <= n/2`, negative beyond).

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT of real samples (no normalization).
pub(crate) fn forward(values: &[f64]) -> Vec<Complex<f64>> {
    let n = values.len();
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(n);
        fft.process(&mut buf);
    });
    buf
}

/// Inverse DFT returning the real part, normalized by `1/n`.
pub(crate) fn inverse_real(mut spectrum: Vec<Complex<f64>>) -> Vec<f64> {
    let n = spectrum.len();
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_inverse(n);
        fft.process(&mut spectrum);
    });
    let scale = 1.0 / n as f64;
    spectrum.iter().map(|z| z.re * scale).collect()
}

/// Signed wavenumber of mode `j` on a ring of circumference `period`.
///
/// For even `n` the Nyquist mode is reported with positive sign; callers
/// that apply odd symbols (ik) must zero it to keep real output real.
pub(crate) fn wavenumber(j: usize, n: usize, period: f64) -> f64 {
    let m = if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    };
    2.0 * std::f64::consts::PI * m / period
}

/// True for the unpaired Nyquist mode (even `n` only).
pub(crate) fn is_nyquist(j: usize, n: usize) -> bool {
    n.is_multiple_of(2) && j == n / 2
}
