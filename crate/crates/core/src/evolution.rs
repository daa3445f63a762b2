//! Time integration of `u_t = v`, `v_t = −u_xxxx − W'(u)` and the transport
//! and stability diagnostics built on it.
//!
//! The integrator is Strang splitting: half a step of the linear beam flow,
//! solved exactly mode by mode (`(û, v̂)` rotates with frequency `k²`), a
//! full kick `v ← v − dt·W'(u)`, then another half linear step. The scheme is
//! second order, symplectic and time reversible. The state stays in Fourier
//! space between kicks, so each step costs two transforms.
//!
//! The linear part is exact for every `dt`, but splitting resonances appear
//! once `dt·k²` reaches `π` for a resolved mode, so configurations must keep
//! `dt·k_max² ≤ π`. The default is `dt = 0.2·2π/k_max²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::functionals::{self, FieldState, FunctionalError};
use crate::grid::{Field, Grid};
use crate::minimizer::SolitonProfile;
use crate::potential::PotentialModel;

/// Evolution stops once `max |u|` exceeds this.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("solution blew up at t = {time} (max |u| = {max_abs:e})")]
    Instability { time: f64, max_abs: f64 },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    StrangSplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_final: f64,
    pub sample_stride: usize,
    pub integrator: Integrator,
}

impl EvolveConfig {
    /// Default step and sampling on `grid` for a run of length `t_final`.
    pub fn for_grid(grid: &Grid, t_final: f64) -> Self {
        Self { dt: default_dt(grid), t_final, sample_stride: 100, integrator: Integrator::StrangSplit }
    }

    pub fn validate(&self, grid: &Grid) -> Result<(), EvolutionError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(EvolutionError::Argument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(EvolutionError::Argument(format!(
                "t_final must be at least dt = {}, got {}",
                self.dt, self.t_final
            )));
        }
        if self.sample_stride == 0 {
            return Err(EvolutionError::Argument("sample_stride must be at least 1".into()));
        }
        check_dt(grid, self.dt)
    }

    /// Number of steps and the step actually used; the step is shortened so
    /// the run ends exactly at `t_final`.
    pub fn schedule(&self) -> (usize, f64) {
        let steps = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_final / steps as f64)
    }
}

/// Largest stable step: `π/k_max²`.
pub fn max_stable_dt(grid: &Grid) -> f64 {
    PI / (grid.k_max() * grid.k_max())
}

/// `0.2·2π/k_max²`.
pub fn default_dt(grid: &Grid) -> f64 {
    0.2 * 2.0 * PI / (grid.k_max() * grid.k_max())
}

fn check_dt(grid: &Grid, dt: f64) -> Result<(), EvolutionError> {
    let limit = max_stable_dt(grid);
    if !dt.is_finite() || dt == 0.0 || dt.abs() > limit * (1.0 + 1e-12) {
        return Err(EvolutionError::Argument(format!(
            "|dt| = {:e} must be nonzero and at most pi/k_max^2 = {limit:e}",
            dt.abs()
        )));
    }
    Ok(())
}

/// Exact propagator of the linear beam flow over a time `h`, per mode:
/// `û ← c·û + s·v̂`, `v̂ ← −r·û + c·v̂`.
struct Rotation {
    cos: Vec<f64>,
    sin_over_freq: Vec<f64>,
    freq_sin: Vec<f64>,
}

impl Rotation {
    fn new(grid: &Grid, h: f64) -> Self {
        let n = grid.n_points();
        let mut rot =
            Self { cos: Vec::with_capacity(n), sin_over_freq: Vec::with_capacity(n), freq_sin: Vec::with_capacity(n) };
        for &k in grid.wavenumbers() {
            let w = k * k;
            let (s, c) = (w * h).sin_cos();
            rot.cos.push(c);
            if w == 0.0 {
                rot.sin_over_freq.push(h);
                rot.freq_sin.push(0.0);
            } else {
                rot.sin_over_freq.push(s / w);
                rot.freq_sin.push(w * s);
            }
        }
        rot
    }

    fn apply(&self, uh: &mut [Complex64], vh: &mut [Complex64]) {
        for j in 0..uh.len() {
            let (u, v) = (uh[j], vh[j]);
            uh[j] = u * self.cos[j] + v * self.sin_over_freq[j];
            vh[j] = v * self.cos[j] - u * self.freq_sin[j];
        }
    }
}

/// Spectral state plus the scratch space for kicks.
struct Propagator<'a> {
    grid: &'a Grid,
    model: &'a PotentialModel,
    uh: Vec<Complex64>,
    vh: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl<'a> Propagator<'a> {
    fn new(state: &'a FieldState, model: &'a PotentialModel) -> Self {
        let grid = &state.grid;
        Self {
            grid,
            model,
            uh: grid.to_spectral(&state.u),
            vh: grid.to_spectral(&state.v),
            scratch: vec![Complex64::new(0.0, 0.0); grid.n_points()],
        }
    }

    /// `v̂ ← v̂ − dt·FFT(W'(u))`. Fails if `u` has blown up.
    fn kick(&mut self, dt: f64, time: f64) -> Result<(), EvolutionError> {
        self.scratch.copy_from_slice(&self.uh);
        self.grid.inverse_in_place(&mut self.scratch);
        let scale = 1.0 / self.grid.n_points() as f64;
        let mut max_abs: f64 = 0.0;
        for c in self.scratch.iter_mut() {
            let u = c.re * scale;
            max_abs = if u.is_nan() { f64::INFINITY } else { max_abs.max(u.abs()) };
            *c = Complex64::new(self.model.w_prime(u), 0.0);
        }
        if max_abs > BLOWUP_THRESHOLD {
            return Err(EvolutionError::Instability { time, max_abs });
        }
        self.grid.forward_in_place(&mut self.scratch);
        for (v, f) in self.vh.iter_mut().zip(&self.scratch) {
            *v -= f * dt;
        }
        Ok(())
    }

    fn state(&self) -> FieldState {
        FieldState {
            grid: self.grid.clone(),
            u: self.grid.from_spectral(self.uh.clone()),
            v: self.grid.from_spectral(self.vh.clone()),
        }
    }
}

/// One Strang step of length `dt` (negative `dt` steps backwards).
pub fn step(state: &FieldState, model: &PotentialModel, dt: f64) -> Result<FieldState, EvolutionError> {
    check_dt(&state.grid, dt)?;
    let half = Rotation::new(&state.grid, 0.5 * dt);
    let mut p = Propagator::new(state, model);
    half.apply(&mut p.uh, &mut p.vh);
    p.kick(dt, 0.5 * dt)?;
    half.apply(&mut p.uh, &mut p.vh);
    Ok(p.state())
}

/// Profile that diagnostics are measured against, with the invariants
/// `(e₀, p₀)` entering the Liapunov function.
#[derive(Debug, Clone)]
pub struct Reference {
    pub state: FieldState,
    pub energy: f64,
    pub momentum: f64,
}

impl Reference {
    pub fn new(state: FieldState, model: &PotentialModel) -> Result<Self, EvolutionError> {
        let energy = functionals::energy(&state, model)?;
        let momentum = functionals::momentum(&state)?;
        Ok(Self { state, energy, momentum })
    }

    pub fn from_profile(profile: &SolitonProfile) -> Self {
        Self {
            state: profile.state.clone(),
            energy: profile.invariants_at_min.energy,
            momentum: profile.invariants_at_min.momentum,
        }
    }
}

/// Sampled diagnostics of one trajectory.
#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub energy_series: Vec<f64>,
    pub momentum_series: Vec<f64>,
    /// Tracked translation `ξ(t)`, unwrapped across the periodic box.
    pub shift_series: Vec<f64>,
    pub shape_error_series: Vec<f64>,
    pub orbit_distance_series: Vec<f64>,
    pub liapunov_series: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    pub final_state: FieldState,
}

impl EvolutionRecord {
    pub const CSV_HEADER: &'static str = "t,E,C,xi,shape_err,orbit_dist,V";

    fn with_capacity(n: usize, dt: f64, steps: usize, final_state: FieldState) -> Self {
        Self {
            times: Vec::with_capacity(n),
            energy_series: Vec::with_capacity(n),
            momentum_series: Vec::with_capacity(n),
            shift_series: Vec::with_capacity(n),
            shape_error_series: Vec::with_capacity(n),
            orbit_distance_series: Vec::with_capacity(n),
            liapunov_series: Vec::with_capacity(n),
            dt,
            steps,
            final_state,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.times[i],
                self.energy_series[i],
                self.momentum_series[i],
                self.shift_series[i],
                self.shape_error_series[i],
                self.orbit_distance_series[i],
                self.liapunov_series[i],
            ));
        }
        out
    }

    /// `max_t |E(t) − E(0)| / |E(0)|`, or the absolute drift when `E(0) = 0`.
    pub fn energy_drift(&self) -> f64 {
        relative_spread(&self.energy_series)
    }

    /// `max_t |C(t) − C(0)|`.
    pub fn momentum_drift(&self) -> f64 {
        let c0 = self.momentum_series[0];
        self.momentum_series.iter().map(|c| (c - c0).abs()).fold(0.0, f64::max)
    }

    /// Least-squares slope of `ξ(t)`.
    pub fn mean_speed(&self) -> f64 {
        let n = self.len() as f64;
        if self.len() < 2 {
            return 0.0;
        }
        let tm = self.times.iter().sum::<f64>() / n;
        let xm = self.shift_series.iter().sum::<f64>() / n;
        let (mut num, mut den) = (0.0, 0.0);
        for (t, x) in self.times.iter().zip(&self.shift_series) {
            num += (t - tm) * (x - xm);
            den += (t - tm) * (t - tm);
        }
        num / den
    }

    pub fn max_shape_error(&self) -> f64 {
        self.shape_error_series.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_orbit_distance(&self) -> f64 {
        self.orbit_distance_series.iter().copied().fold(0.0, f64::max)
    }

    /// `max_t |V(t) − V(0)| / V(0)`; `None` when `V(0) = 0`.
    pub fn liapunov_spread(&self) -> Option<f64> {
        let v0 = self.liapunov_series[0];
        (v0 > 0.0).then(|| self.liapunov_series.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max) / v0)
    }
}

fn relative_spread(series: &[f64]) -> f64 {
    let x0 = series[0];
    let drift = series.iter().map(|x| (x - x0).abs()).fold(0.0, f64::max);
    if x0 != 0.0 {
        drift / x0.abs()
    } else {
        drift
    }
}

/// Integrates to `config.t_final`, sampling every `sample_stride` steps (and
/// at both ends). Diagnostics are measured against `reference`, or against
/// the initial state when none is given.
pub fn evolve(
    state: &FieldState,
    model: &PotentialModel,
    config: &EvolveConfig,
    reference: Option<&Reference>,
) -> Result<EvolutionRecord, EvolutionError> {
    let grid = &state.grid;
    config.validate(grid)?;
    if reference.is_some_and(|r| r.state.grid != *grid) {
        return Err(EvolutionError::Argument("reference lives on a different grid".into()));
    }
    let own;
    let reference = match reference {
        Some(r) => r,
        None => {
            own = Reference::new(state.clone(), model)?;
            &own
        }
    };
    let (steps, dt) = config.schedule();
    let samples = steps / config.sample_stride + 2;
    let mut record = EvolutionRecord::with_capacity(samples, dt, steps, state.clone());
    let mut sampler = Sampler::new(reference);

    let half = Rotation::new(grid, 0.5 * dt);
    let full = Rotation::new(grid, dt);
    let mut p = Propagator::new(state, model);
    sampler.sample(&mut record, 0.0, state, model)?;

    let mut done = 0;
    while done < steps {
        let chunk = config.sample_stride.min(steps - done);
        // Adjacent half rotations inside a chunk merge into full ones.
        half.apply(&mut p.uh, &mut p.vh);
        for i in 0..chunk {
            if i > 0 {
                full.apply(&mut p.uh, &mut p.vh);
            }
            p.kick(dt, (done + i) as f64 * dt + 0.5 * dt)?;
        }
        half.apply(&mut p.uh, &mut p.vh);
        done += chunk;
        let current = p.state();
        let t = if done == steps { config.t_final } else { done as f64 * dt };
        sampler.sample(&mut record, t, &current, model)?;
        if done == steps {
            record.final_state = current;
        }
    }
    Ok(record)
}

struct Sampler<'a> {
    reference: &'a Reference,
    u_norm: f64,
    x_norm: f64,
    last_shift: Option<f64>,
}

impl<'a> Sampler<'a> {
    fn new(reference: &'a Reference) -> Self {
        let g = &reference.state.grid;
        Self {
            reference,
            u_norm: g.l2_norm(&reference.state.u),
            x_norm: functionals::x_norm_sq(&reference.state).sqrt(),
            last_shift: None,
        }
    }

    fn sample(
        &mut self,
        record: &mut EvolutionRecord,
        t: f64,
        state: &FieldState,
        model: &PotentialModel,
    ) -> Result<(), EvolutionError> {
        let e = functionals::energy(state, model)?;
        let c = functionals::momentum(state)?;
        let reference = &self.reference.state;
        let (shift, shape) = if self.u_norm > 0.0 {
            let raw = track_shift(state, reference)?;
            let shift = match self.last_shift {
                Some(prev) => unwrap_near(raw, prev, 2.0 * state.grid.half_length()),
                None => raw,
            };
            self.last_shift = Some(shift);
            (shift, shape_error(state, reference))
        } else {
            (0.0, state.grid.l2_norm(&state.u))
        };
        let orbit =
            if self.x_norm > 0.0 { orbit_distance(state, reference) } else { functionals::x_norm_sq(state).sqrt() };
        let v = (e - self.reference.energy).powi(2) + (c - self.reference.momentum).powi(2);
        record.times.push(t);
        record.energy_series.push(e);
        record.momentum_series.push(c);
        record.shift_series.push(shift);
        record.shape_error_series.push(shape);
        record.orbit_distance_series.push(orbit);
        record.liapunov_series.push(v);
        Ok(())
    }
}

fn unwrap_near(raw: f64, previous: f64, period: f64) -> f64 {
    raw + ((previous - raw) / period).round() * period
}

/// A field pair and the Fourier weight `w(k)` of the norm pairing them.
type WeightedPair<'a> = (&'a Field, &'a Field, &'a dyn Fn(f64) -> f64);

/// Weighted cross-correlation of two fields over all shifts.
///
/// `corr(τ) = Σ_k w_k Re(conj(â_k)·b̂_k·e^{−ikτ})·dx/n` is the pairing of `a`
/// with `b(· − τ)` in the norm whose Fourier weight is `w_k`.
struct Correlation {
    coeffs: Vec<Complex64>,
    wavenumbers: Vec<f64>,
    nyquist: usize,
    dx: f64,
    n: usize,
    half_length: f64,
}

impl Correlation {
    fn new(grid: &Grid, pairs: &[WeightedPair]) -> Self {
        let n = grid.n_points();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (a, b, weight) in pairs {
            let ah = grid.to_spectral(a);
            let bh = grid.to_spectral(b);
            for (j, c) in coeffs.iter_mut().enumerate() {
                *c += ah[j].conj() * bh[j] * weight(grid.wavenumbers()[j]);
            }
        }
        Self {
            coeffs,
            wavenumbers: grid.wavenumbers().to_vec(),
            nyquist: grid.nyquist_index(),
            dx: grid.dx(),
            n,
            half_length: grid.half_length(),
        }
    }

    /// Values at the grid shifts `τ = m·dx`, `m = 0..n`.
    fn at_grid_shifts(&self, grid: &Grid) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        grid.forward_in_place(&mut buf);
        let scale = self.dx / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Value and first two derivatives at an arbitrary shift.
    fn eval(&self, tau: f64) -> (f64, f64, f64) {
        let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (j, (&c, &k)) in self.coeffs.iter().zip(&self.wavenumbers).enumerate() {
            if j == self.nyquist {
                let (s, co) = (k * tau).sin_cos();
                f += c.re * co;
                d1 -= c.re * k * s;
                d2 -= c.re * k * k * co;
            } else {
                let z = c * Complex64::from_polar(1.0, -k * tau);
                f += z.re;
                d1 += z.im * k;
                d2 -= z.re * k * k;
            }
        }
        let scale = self.dx / self.n as f64;
        (f * scale, d1 * scale, d2 * scale)
    }

    fn signed_shift(&self, m: usize) -> f64 {
        let tau = m as f64 * self.dx;
        if tau > self.half_length {
            tau - 2.0 * self.half_length
        } else {
            tau
        }
    }

    /// Shift maximizing the correlation: best grid shift, then Newton steps
    /// on the trigonometric interpolant, kept within one cell.
    fn argmax(&self, grid: &Grid) -> f64 {
        let values = self.at_grid_shifts(grid);
        let m = argmax(&values);
        let start = self.signed_shift(m);
        let mut tau = start;
        for _ in 0..20 {
            let (_, d1, d2) = self.eval(tau);
            if d2 >= 0.0 {
                break;
            }
            let next = (tau - d1 / d2).clamp(start - self.dx, start + self.dx);
            let moved = (next - tau).abs();
            tau = next;
            if moved < 1e-15 * self.half_length {
                break;
            }
        }
        tau
    }
}

fn argmax(values: &[f64]) -> usize {
    values.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best }).0
}

/// Weighted distance `‖a − b(· − τ)‖` computed from the Fourier coefficients
/// of the difference.
fn shifted_distance(grid: &Grid, pairs: &[WeightedPair], tau: f64) -> f64 {
    let nyq = grid.nyquist_index();
    let mut sum = 0.0;
    for (a, b, weight) in pairs {
        let ah = grid.to_spectral(a);
        let bh = grid.to_spectral(b);
        for (j, &k) in grid.wavenumbers().iter().enumerate() {
            let phase =
                if j == nyq { Complex64::new((k * tau).cos(), 0.0) } else { Complex64::from_polar(1.0, -k * tau) };
            sum += weight(k) * (ah[j] - bh[j] * phase).norm_sqr();
        }
    }
    (sum * grid.dx() / grid.n_points() as f64).sqrt()
}

fn unit(_: f64) -> f64 {
    1.0
}

fn h2_weight(k: f64) -> f64 {
    1.0 + k.powi(4)
}

/// Translation `τ` for which `u ≈ u_ref(· − τ)`: the maximizer of
/// `∫u(x)·u_ref(x − τ)dx` over grid shifts, refined by a parabola through the
/// peak and its neighbours. Returned in `(−L, L]`.
pub fn track_shift(state: &FieldState, reference: &FieldState) -> Result<f64, EvolutionError> {
    let g = &state.grid;
    if reference.u.is_zero() {
        return Err(EvolutionError::Argument("reference displacement is identically zero".into()));
    }
    let corr = Correlation::new(g, &[(&state.u, &reference.u, &unit)]);
    let values = corr.at_grid_shifts(g);
    let n = values.len();
    let m = argmax(&values);
    let (left, mid, right) = (values[(m + n - 1) % n], values[m], values[(m + 1) % n]);
    let curvature = left - 2.0 * mid + right;
    let offset = if curvature < 0.0 { 0.5 * (left - right) / curvature } else { 0.0 };
    let tau = corr.signed_shift(m) + offset * g.dx();
    let l = g.half_length();
    Ok(if tau > l {
        tau - 2.0 * l
    } else if tau <= -l {
        tau + 2.0 * l
    } else {
        tau
    })
}

/// `min_τ ‖u − u_ref(· − τ)‖ / ‖u_ref‖` (zero reference: `‖u‖`).
pub fn shape_error(state: &FieldState, reference: &FieldState) -> f64 {
    let g = &state.grid;
    let norm = g.l2_norm(&reference.u);
    if norm == 0.0 {
        return g.l2_norm(&state.u);
    }
    let pairs: [WeightedPair; 1] = [(&state.u, &reference.u, &unit)];
    let tau = Correlation::new(g, &pairs).argmax(g);
    shifted_distance(g, &pairs, tau) / norm
}

/// `min_τ ‖𝐮 − g_τ𝐮_ref‖` in the phase-space norm, with `g_τ` translating
/// both components.
pub fn orbit_distance(state: &FieldState, reference: &FieldState) -> f64 {
    let g = &state.grid;
    let pairs: [WeightedPair; 2] = [(&state.u, &reference.u, &h2_weight), (&state.v, &reference.v, &unit)];
    let tau = Correlation::new(g, &pairs).argmax(g);
    shifted_distance(g, &pairs, tau)
}

/// Seeded, zero-mean perturbation band-limited to the lowest quarter of the
/// modes (`0 < |m| ≤ n/8`), with phase-space norm `epsilon·‖𝐮‖`. The
/// displacement coefficients are damped by `(1 + k⁴)^{-1/2}` so both
/// components carry comparable norm. `stream` selects an independent
/// ChaCha stream for the same seed.
pub fn perturbation(state: &FieldState, epsilon: f64, seed: u64, stream: u64) -> Result<FieldState, EvolutionError> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(EvolutionError::Argument(format!("epsilon must be finite and non-negative, got {epsilon}")));
    }
    let g = &state.grid;
    let n = g.n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut uh = vec![Complex64::new(0.0, 0.0); n];
    let mut vh = vec![Complex64::new(0.0, 0.0); n];
    for m in 1..=n / 8 {
        let k = g.wavenumbers()[m];
        let damp = 1.0 / (1.0 + k.powi(4)).sqrt();
        let a = Complex64::new(draw(), draw()) * damp;
        let b = Complex64::new(draw(), draw());
        uh[m] = a;
        uh[n - m] = a.conj();
        vh[m] = b;
        vh[n - m] = b.conj();
    }
    let raw = FieldState { grid: g.clone(), u: g.from_spectral(uh), v: g.from_spectral(vh) };
    let target = epsilon * functionals::x_norm_sq(state).sqrt();
    let size = functionals::x_norm_sq(&raw).sqrt();
    Ok(raw.scaled(if size > 0.0 { target / size } else { 0.0 }))
}

/// Evolves the profile plus a perturbation of relative size `epsilon` and
/// records the distance to the profile's translation orbit and the
/// Liapunov function `(E − e₀)² + (C − p₀)²`.
pub fn stability_experiment(
    profile: &SolitonProfile,
    model: &PotentialModel,
    epsilon: f64,
    config: &EvolveConfig,
    seed: u64,
    stream: u64,
) -> Result<EvolutionRecord, EvolutionError> {
    let reference = Reference::from_profile(profile);
    let kick = perturbation(&profile.state, epsilon, seed, stream)?;
    let start = profile.state.add(&kick);
    evolve(&start, model, config, Some(&reference))
}
