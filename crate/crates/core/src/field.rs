//! Uniform periodic grids and sampled scalar fields: differentiation,
//! quadrature and norms. Every other module builds on this substrate.
//!
//! The real line is truncated to `[x_min, x_max)` with periodic wrap; the
//! default production domain is `[-20, 20)`, wide enough that the
//! exponential kernels' periodization error (`~e^{-L}`) sits far below
//! every tolerance in the verification suite.

use crate::error::{Error, Result};
use crate::spectral;

/// Minimum admitted grid size. Below this the FD stencils and the spectral
/// representation are both meaningless.
pub const MIN_GRID_POINTS: usize = 16;

/// Uniform one-dimensional grid.
///
/// Nodes are `x_i = x_min + i dx` for `i in [0, n)`; under the periodic
/// convention the right endpoint is excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
    periodic: bool,
}

impl Grid1D {
    /// Build a grid on `[x_min, x_max)` with `n` nodes.
    pub fn new(x_min: f64, x_max: f64, n: usize, periodic: bool) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidExtent { x_min, x_max });
        }
        if n < MIN_GRID_POINTS {
            return Err(Error::TooFewPoints {
                n,
                min: MIN_GRID_POINTS,
            });
        }
        let dx = (x_max - x_min) / n as f64;
        Ok(Self {
            x_min,
            x_max,
            n,
            dx,
            periodic,
        })
    }

    /// Symmetric periodic grid on `[-l, l)`.
    pub fn symmetric(l: f64, n: usize) -> Result<Self> {
        Self::new(-l, l, n, true)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Domain length `x_max - x_min`.
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Node coordinate `x_i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// All node coordinates.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Signed displacement wrapped to the nearest image, in `[-P/2, P/2)`.
    pub fn wrap_displacement(&self, d: f64) -> f64 {
        let p = self.length();
        let mut r = (d / p - (d / p).round()) * p;
        if r >= p / 2.0 {
            r -= p;
        }
        r
    }

    /// Signed wavenumber of FFT mode `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        spectral::wavenumber(j, self.n, self.length())
    }
}

/// Differentiation backend.
///
/// Spectral differentiation is the default: the evolved fields are smooth
/// and periodic, so it is exact to roundoff on resolved modes. The
/// fourth-order centered stencil is kept as an independent cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeBackend {
    #[default]
    Spectral,
    CentralFd4,
}

/// Real samples of one scalar function on a [`Grid1D`].
///
/// Fields are immutable after construction; all operations are pure and
/// return fresh fields, so values can be shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    /// Wrap an existing value array, validating length and finiteness.
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                n: grid.n(),
            });
        }
        let f = Self { grid, values };
        f.ensure_finite("field construction")?;
        Ok(f)
    }

    /// The zero field.
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n()],
        }
    }

    /// Sample a function at the grid nodes.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.points().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Error out unless every entry is finite.
    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { context })
        }
    }

    pub(crate) fn from_values_unchecked(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    /// Apply a function entrywise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Combine two fields entrywise. Panics if the grids differ; callers
    /// mixing grids is a programming error, not a data error.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &Field, scale: f64) -> Field {
        self.zip_with(other, |a, b| a + scale * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// Largest absolute value.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Smallest entry.
    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Largest entry.
    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// First derivative with the default (spectral) backend.
    pub fn derivative(&self) -> Result<Field> {
        self.derivative_with(DerivativeBackend::Spectral)
    }

    /// First derivative with an explicit backend.
    pub fn derivative_with(&self, backend: DerivativeBackend) -> Result<Field> {
        self.ensure_finite("derivative input")?;
        if !self.grid.is_periodic() {
            return Err(Error::NonPeriodic {
                operation: "derivative",
            });
        }
        let out = match backend {
            DerivativeBackend::Spectral => {
                let n = self.grid.n();
                let period = self.grid.length();
                let mut spec = spectral::forward(&self.values);
                for (j, z) in spec.iter_mut().enumerate() {
                    // ik multiplier; the unpaired Nyquist mode carries no
                    // usable derivative information and is zeroed.
                    if spectral::is_nyquist(j, n) {
                        *z = rustfft::num_complex::Complex::new(0.0, 0.0);
                    } else {
                        let k = spectral::wavenumber(j, n, period);
                        *z = rustfft::num_complex::Complex::new(-z.im * k, z.re * k);
                    }
                }
                Field::from_values_unchecked(self.grid, spectral::inverse_real(spec))
            }
            DerivativeBackend::CentralFd4 => {
                let n = self.grid.n();
                let inv12h = 1.0 / (12.0 * self.grid.dx());
                let v = &self.values;
                let values = (0..n)
                    .map(|i| {
                        let m2 = v[(i + n - 2) % n];
                        let m1 = v[(i + n - 1) % n];
                        let p1 = v[(i + 1) % n];
                        let p2 = v[(i + 2) % n];
                        (-p2 + 8.0 * p1 - 8.0 * m1 + m2) * inv12h
                    })
                    .collect();
                Field::from_values_unchecked(self.grid, values)
            }
        };
        out.ensure_finite("derivative output")?;
        Ok(out)
    }

    /// Second derivative (spectral, `-k^2` multiplier).
    pub fn second_derivative(&self) -> Result<Field> {
        self.ensure_finite("second derivative input")?;
        if !self.grid.is_periodic() {
            return Err(Error::NonPeriodic {
                operation: "second derivative",
            });
        }
        let n = self.grid.n();
        let period = self.grid.length();
        let mut spec = spectral::forward(&self.values);
        for (j, z) in spec.iter_mut().enumerate() {
            let k = spectral::wavenumber(j, n, period);
            *z *= -k * k;
        }
        let out = Field::from_values_unchecked(self.grid, spectral::inverse_real(spec));
        out.ensure_finite("second derivative output")?;
        Ok(out)
    }

    /// Integral over the domain.
    ///
    /// Periodic grids use the plain Riemann sum, which is the trapezoid rule
    /// on a ring and spectrally accurate for smooth periodic integrands;
    /// non-periodic grids fall back to the composite trapezoid over the
    /// stored samples.
    pub fn integrate(&self) -> Result<f64> {
        self.ensure_finite("integrate input")?;
        let dx = self.grid.dx();
        if self.grid.is_periodic() {
            Ok(dx * self.values.iter().sum::<f64>())
        } else {
            let n = self.values.len();
            let inner: f64 = self.values[1..n - 1].iter().sum();
            Ok(dx * (inner + 0.5 * (self.values[0] + self.values[n - 1])))
        }
    }

    /// Discrete `L^p` norm; `p = f64::INFINITY` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        self.ensure_finite("lp_norm input")?;
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent { p });
        }
        if p.is_infinite() {
            return Ok(self.sup_norm());
        }
        let abs_p = self.map(|v| v.abs().powf(p));
        Ok(abs_p.integrate()?.powf(1.0 / p))
    }

    /// Discrete `H^1` norm, `(‖f‖_{L²}² + ‖f_x‖_{L²}²)^{1/2}`.
    pub fn h1_norm(&self) -> Result<f64> {
        let l2 = self.lp_norm(2.0)?;
        let d = self.derivative()?;
        let dl2 = d.lp_norm(2.0)?;
        Ok((l2 * l2 + dl2 * dl2).sqrt())
    }

    /// Zero every mode with `|k| > (2/3) k_max` (sharp 2/3-rule filter).
    ///
    /// Optional anti-aliasing knob for high-resolution studies of pointwise
    /// products; off by default.
    pub fn dealias_two_thirds(&self) -> Result<Field> {
        self.ensure_finite("dealias input")?;
        if !self.grid.is_periodic() {
            return Err(Error::NonPeriodic {
                operation: "dealias",
            });
        }
        let n = self.grid.n();
        let period = self.grid.length();
        let kmax = std::f64::consts::PI * n as f64 / period;
        let cutoff = 2.0 / 3.0 * kmax;
        let mut spec = spectral::forward(&self.values);
        for (j, z) in spec.iter_mut().enumerate() {
            if spectral::wavenumber(j, n, period).abs() > cutoff {
                *z = rustfft::num_complex::Complex::new(0.0, 0.0);
            }
        }
        Ok(Field::from_values_unchecked(
            self.grid,
            spectral::inverse_real(spec),
        ))
    }
}
