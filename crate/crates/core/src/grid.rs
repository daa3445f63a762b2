//! Uniform periodic grid on `[-L, L)` with Fourier-collocation calculus.
//!
//! The box stands in for the real line: profiles are expected to decay well
//! inside it, and [`Grid::boundary_mass`] measures how much of a field lives
//! in the outer tenth of the domain.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Argument(String),
    #[error("unsupported derivative order {0} (expected 1, 2 or 4)")]
    Order(u32),
    #[error("field has {got} samples but the grid has {expected}")]
    Length { expected: usize, got: usize },
    #[error("field sample {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
}

struct GridInner {
    half_length: f64,
    n_points: usize,
    dx: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Periodic grid with `n_points` samples at `x_j = -L + j·dx`.
///
/// Cloning is cheap: the FFT plans and wavenumber table are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.inner.half_length)
            .field("n_points", &self.inner.n_points)
            .field("dx", &self.inner.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.half_length == other.inner.half_length && self.inner.n_points == other.inner.n_points
    }
}

impl Grid {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self, GridError> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(GridError::Argument(format!("half_length must be positive and finite, got {half_length}")));
        }
        if n_points < 64 || !n_points.is_power_of_two() {
            return Err(GridError::Argument(format!("n_points must be a power of two >= 64, got {n_points}")));
        }
        let dk = PI / half_length;
        let wavenumbers = (0..n_points)
            .map(|j| {
                let m = if j < n_points / 2 { j as f64 } else { j as f64 - n_points as f64 };
                m * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            inner: Arc::new(GridInner {
                half_length,
                n_points,
                dx: 2.0 * half_length / n_points as f64,
                wavenumbers,
                forward: planner.plan_fft_forward(n_points),
                inverse: planner.plan_fft_inverse(n_points),
            }),
        })
    }

    pub fn half_length(&self) -> f64 {
        self.inner.half_length
    }

    pub fn n_points(&self) -> usize {
        self.inner.n_points
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Wavenumbers in FFT order; index `n/2` is the Nyquist mode.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    pub fn nyquist_index(&self) -> usize {
        self.inner.n_points / 2
    }

    /// Largest resolved wavenumber `π/dx`.
    pub fn k_max(&self) -> f64 {
        PI / self.inner.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.inner.half_length + j as f64 * self.inner.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.inner.n_points).map(|j| self.x(j))
    }

    /// Index of the grid point `x = 0`.
    pub fn origin_index(&self) -> usize {
        self.inner.n_points / 2
    }

    /// Samples `f` at the grid points.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.points().map(f).collect())
    }

    pub fn zeros(&self) -> Field {
        Field(vec![0.0; self.inner.n_points])
    }

    /// Checks length and finiteness of a field against this grid.
    pub fn check(&self, f: &Field) -> Result<(), GridError> {
        if f.len() != self.inner.n_points {
            return Err(GridError::Length { expected: self.inner.n_points, got: f.len() });
        }
        if let Some((index, &value)) = f.0.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { index, value });
        }
        Ok(())
    }

    /// Unnormalized forward DFT.
    pub fn to_spectral(&self, f: &Field) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.0.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.inner.forward.process(&mut buf);
        buf
    }

    /// Inverse of [`to_spectral`](Self::to_spectral), keeping the real part.
    pub fn from_spectral(&self, mut coeffs: Vec<Complex64>) -> Field {
        self.inner.inverse.process(&mut coeffs);
        let scale = 1.0 / self.inner.n_points as f64;
        Field(coeffs.into_iter().map(|c| c.re * scale).collect())
    }

    /// In-place inverse transform of a spectral buffer (real part, normalized)
    /// into `out`.
    pub fn from_spectral_into(&self, coeffs: &mut [Complex64], out: &mut Field) {
        self.inner.inverse.process(coeffs);
        let scale = 1.0 / self.inner.n_points as f64;
        for (o, c) in out.0.iter_mut().zip(coeffs.iter()) {
            *o = c.re * scale;
        }
    }

    /// In-place forward transform of a real field into `out`.
    pub fn to_spectral_into(&self, f: &Field, out: &mut [Complex64]) {
        for (o, &x) in out.iter_mut().zip(f.0.iter()) {
            *o = Complex64::new(x, 0.0);
        }
        self.inner.forward.process(out);
    }

    /// Unnormalized forward transform of a complex buffer, in place.
    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.inner.forward.process(buf);
    }

    /// Unnormalized inverse transform of a complex buffer, in place.
    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inner.inverse.process(buf);
    }

    /// Applies a real Fourier multiplier `m(k_j)`, indexed by mode.
    pub fn apply_multiplier(&self, f: &Field, multiplier: impl Fn(usize, f64) -> Complex64) -> Field {
        let mut coeffs = self.to_spectral(f);
        for (j, (c, &k)) in coeffs.iter_mut().zip(self.wavenumbers()).enumerate() {
            *c *= multiplier(j, k);
        }
        self.from_spectral(coeffs)
    }

    /// Spectral derivative of order 1, 2 or 4. The Nyquist mode is dropped for
    /// the odd order so real fields stay real.
    pub fn diff(&self, f: &Field, order: u32) -> Result<Field, GridError> {
        let nyq = self.nyquist_index();
        match order {
            1 => Ok(self.apply_multiplier(
                f,
                |j, k| {
                    if j == nyq {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, k)
                    }
                },
            )),
            2 => Ok(self.apply_multiplier(f, |_, k| Complex64::new(-k * k, 0.0))),
            4 => Ok(self.apply_multiplier(f, |_, k| Complex64::new(k.powi(4), 0.0))),
            other => Err(GridError::Order(other)),
        }
    }

    /// `dx · Σ f_j`, the trapezoid rule on a periodic grid.
    pub fn integrate(&self, f: &Field) -> f64 {
        self.inner.dx * f.0.iter().sum::<f64>()
    }

    /// `dx · Σ f_j g_j`.
    pub fn inner(&self, f: &Field, g: &Field) -> f64 {
        self.inner.dx * f.0.iter().zip(&g.0).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Discrete L² norm.
    pub fn l2_norm(&self, f: &Field) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// `f(· − τ)` by phase multiplication. The Nyquist coefficient is
    /// multiplied by `cos(k_N τ)`, which for `τ` a multiple of `dx` makes this
    /// an exact cyclic roll.
    pub fn shift(&self, f: &Field, tau: f64) -> Field {
        let nyq = self.nyquist_index();
        self.apply_multiplier(f, |j, k| {
            if j == nyq {
                Complex64::new((k * tau).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, -k * tau)
            }
        })
    }

    /// Cyclic roll by whole samples: `out[j] = f[j − m]`, i.e. a shift by `m·dx`.
    pub fn roll(&self, f: &Field, m: isize) -> Field {
        let n = self.inner.n_points as isize;
        let m = m.rem_euclid(n) as usize;
        let mut out = f.0.clone();
        out.rotate_right(m);
        Field(out)
    }

    /// Largest `|f|` on the outer 10% of the box (`|x| ≥ 0.9 L`).
    pub fn boundary_mass(&self, f: &Field) -> f64 {
        let cut = 0.9 * self.inner.half_length;
        self.points().zip(&f.0).filter(|(x, _)| x.abs() >= cut).map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }

    /// Elementwise map, e.g. applying `W'` to a displacement field.
    pub fn map(&self, f: &Field, op: impl Fn(f64) -> f64) -> Field {
        f.map(op)
    }
}

/// Real samples on a [`Grid`]; sample `j` lives at `x_j = -L + j·dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(pub(crate) Vec<f64>);

impl Field {
    pub fn from_vec(values: Vec<f64>) -> Self {
        Field(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Field {
        Field(self.0.iter().map(|&v| op(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.len(), other.len());
        Field(self.0.iter().zip(&other.0).map(|(&a, &b)| op(a, b)).collect())
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &Field) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += alpha * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the largest `|value|` (first one on ties).
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        for (j, v) in self.0.iter().enumerate() {
            if v.abs() > self.0[best].abs() {
                best = j;
            }
        }
        best
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl Index<usize> for Field {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

impl Add<&Field> for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub<&Field> for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<&Field> for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.map(|a| a * rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|a| -a)
    }
}
