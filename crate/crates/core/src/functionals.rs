//! Conserved quantities of the beam equation and the hylomorphy functional.
//!
//! For a phase-space point `𝐮 = (u, v)` (displacement and velocity):
//!
//! ```text
//! E(𝐮) = ½∫(v² + u_xx²) + ∫W(u)        energy
//! C(𝐮) = −∫v·u_x                        momentum
//! ‖𝐮‖² = ∫(v² + u_xx² + u²)             phase-space norm
//! J(𝐮) = E/|C| + δE                     hylomorphy functional
//! ```
//!
//! Gradients are returned as fields `g` such that the discrete pairing
//! `dx·Σ g_j φ_j` equals the directional derivative along `φ`.

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{Field, Grid, GridError};
use crate::potential::PotentialModel;

/// Below this `|C|`, `J` and the ratios built on `1/|C|` are undefined.
pub const MOMENTUM_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("non-finite value in {term}: {value}")]
    NonFinite { term: &'static str, value: f64 },
    #[error("momentum |C| = {0:e} is below the floor {MOMENTUM_FLOOR:e}; J is undefined")]
    DegenerateMomentum(f64),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// One point `(u, v)` of the discrete phase space `H² × L²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub u: Field,
    pub v: Field,
}

impl FieldState {
    pub fn new(grid: &Grid, u: Field, v: Field) -> Result<Self, FunctionalError> {
        grid.check(&u)?;
        grid.check(&v)?;
        Ok(Self { grid: grid.clone(), u, v })
    }

    pub fn zero(grid: &Grid) -> Self {
        Self { grid: grid.clone(), u: grid.zeros(), v: grid.zeros() }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { grid: self.grid.clone(), u: &self.u * t, v: &self.v * t }
    }

    /// `self + t·(du, dv)`.
    pub fn displaced(&self, t: f64, du: &Field, dv: &Field) -> Self {
        let mut out = self.clone();
        out.u.axpy(t, du);
        out.v.axpy(t, dv);
        out
    }

    pub fn add(&self, other: &FieldState) -> Self {
        Self { grid: self.grid.clone(), u: &self.u + &other.u, v: &self.v + &other.v }
    }

    pub fn sub(&self, other: &FieldState) -> Self {
        Self { grid: self.grid.clone(), u: &self.u - &other.u, v: &self.v - &other.v }
    }

    /// Translates both components: `(g_τ 𝐮)(x) = 𝐮(x − τ)`.
    pub fn shifted(&self, tau: f64) -> Self {
        Self { grid: self.grid.clone(), u: self.grid.shift(&self.u, tau), v: self.grid.shift(&self.v, tau) }
    }

    /// Exact translation by `m` grid cells.
    pub fn rolled(&self, m: isize) -> Self {
        Self { grid: self.grid.clone(), u: self.grid.roll(&self.u, m), v: self.grid.roll(&self.v, m) }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

fn finite(term: &'static str, value: f64) -> Result<f64, FunctionalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(FunctionalError::NonFinite { term, value })
    }
}

/// `E = ½∫(v² + u_xx²) + ∫W(u)`.
pub fn energy(state: &FieldState, model: &PotentialModel) -> Result<f64, FunctionalError> {
    let g = &state.grid;
    let uxx = g.diff(&state.u, 2)?;
    let kinetic = finite("kinetic term ½∫v²", 0.5 * g.inner(&state.v, &state.v))?;
    let bending = finite("bending term ½∫u_xx²", 0.5 * g.inner(&uxx, &uxx))?;
    let potential = finite("potential term ∫W(u)", g.integrate(&state.u.map(|s| model.w(s))))?;
    finite("energy", kinetic + bending + potential)
}

/// `C = −∫v·u_x`.
pub fn momentum(state: &FieldState) -> Result<f64, FunctionalError> {
    let g = &state.grid;
    let ux = g.diff(&state.u, 1)?;
    finite("momentum", -g.inner(&state.v, &ux))
}

/// `‖𝐮‖² = ∫(v² + u_xx² + u²)`.
pub fn x_norm_sq(state: &FieldState) -> f64 {
    let g = &state.grid;
    let uxx = g.diff(&state.u, 2).expect("order 2 is supported");
    g.inner(&state.v, &state.v) + g.inner(&uxx, &uxx) + g.inner(&state.u, &state.u)
}

fn checked_momentum(c: f64) -> Result<f64, FunctionalError> {
    if c.abs() < MOMENTUM_FLOOR {
        Err(FunctionalError::DegenerateMomentum(c))
    } else {
        Ok(c)
    }
}

/// `J_δ = E/|C| + δE`.
pub fn hylomorphic_j(state: &FieldState, model: &PotentialModel, delta: f64) -> Result<f64, FunctionalError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(FunctionalError::Argument(format!("delta must be positive, got {delta}")));
    }
    let c = checked_momentum(momentum(state)?)?;
    let e = energy(state, model)?;
    finite("J", e / (c.signum() * c) + delta * e)
}

/// `(δE/δu, δE/δv) = (u_xxxx + W'(u), v)`.
pub fn energy_gradient(state: &FieldState, model: &PotentialModel) -> (Field, Field) {
    let g = &state.grid;
    let u4 = g.diff(&state.u, 4).expect("order 4 is supported");
    let du = u4.zip_with(&state.u, |a, s| a + model.w_prime(s));
    (du, state.v.clone())
}

/// `(δC/δu, δC/δv) = (v_x, −u_x)`.
pub fn momentum_gradient(state: &FieldState) -> (Field, Field) {
    let g = &state.grid;
    let vx = g.diff(&state.v, 1).expect("order 1 is supported");
    let ux = g.diff(&state.u, 1).expect("order 1 is supported");
    (vx, -&ux)
}

/// Value and gradient of `J_δ` in one pass.
#[derive(Debug, Clone)]
pub struct JEvaluation {
    pub j: f64,
    pub energy: f64,
    pub momentum: f64,
    pub grad_u: Field,
    pub grad_v: Field,
}

/// `∇J = (1/|C| + δ)∇E − sign(C)·(E/C²)∇C`, together with `J`, `E`, `C`.
pub fn j_evaluate(state: &FieldState, model: &PotentialModel, delta: f64) -> Result<JEvaluation, FunctionalError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(FunctionalError::Argument(format!("delta must be positive, got {delta}")));
    }
    let c = checked_momentum(momentum(state)?)?;
    let e = energy(state, model)?;
    let abs_c = c.signum() * c;
    let a = 1.0 / abs_c + delta;
    let b = -c.signum() * e / (c * c);
    let (eu, ev) = energy_gradient(state, model);
    let (cu, cv) = momentum_gradient(state);
    Ok(JEvaluation {
        j: finite("J", e / abs_c + delta * e)?,
        energy: e,
        momentum: c,
        grad_u: eu.zip_with(&cu, |x, y| a * x + b * y),
        grad_v: ev.zip_with(&cv, |x, y| a * x + b * y),
    })
}

pub fn j_gradient(state: &FieldState, model: &PotentialModel, delta: f64) -> Result<(Field, Field), FunctionalError> {
    let ev = j_evaluate(state, model, delta)?;
    Ok((ev.grad_u, ev.grad_v))
}

/// `½‖𝐮‖² / |C|`; never below one.
pub fn lambda0_ratio(state: &FieldState) -> Result<f64, FunctionalError> {
    let c = checked_momentum(momentum(state)?)?;
    Ok(0.5 * x_norm_sq(state) / c.abs())
}

/// Energy, momentum, norm and `J_δ` of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantSet {
    pub energy: f64,
    pub momentum: f64,
    pub x_norm_sq: f64,
    pub j_value: f64,
    pub delta: f64,
}

impl InvariantSet {
    pub fn evaluate(state: &FieldState, model: &PotentialModel, delta: f64) -> Result<Self, FunctionalError> {
        Ok(Self {
            energy: energy(state, model)?,
            momentum: momentum(state)?,
            x_norm_sq: x_norm_sq(state),
            j_value: hylomorphic_j(state, model, delta)?,
            delta,
        })
    }
}

/// The compactly supported bump `U₀(y) = scale·exp(−1/(1 − (y/a)²))` on `|y| < a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    pub half_width: f64,
    pub scale: f64,
}

impl Default for BumpSpec {
    /// `a = 1`, scale `e` so that `U₀(0) = 1`.
    fn default() -> Self {
        Self { half_width: 1.0, scale: std::f64::consts::E }
    }
}

impl BumpSpec {
    pub fn validate(&self) -> Result<(), FunctionalError> {
        if !(self.half_width.is_finite() && self.half_width > 0.0 && self.scale.is_finite() && self.scale > 0.0) {
            return Err(FunctionalError::Argument(format!("bump needs positive half_width and scale, got {self:?}")));
        }
        Ok(())
    }

    pub fn value(&self, y: f64) -> f64 {
        let z = y / self.half_width;
        let g = 1.0 - z * z;
        if g <= 0.0 {
            0.0
        } else {
            self.scale * (-1.0 / g).exp()
        }
    }

    pub fn d1(&self, y: f64) -> f64 {
        let a = self.half_width;
        let z = y / a;
        let g = 1.0 - z * z;
        if g <= 0.0 {
            return 0.0;
        }
        self.value(y) * (-2.0 * z / a) / (g * g)
    }

    pub fn d2(&self, y: f64) -> f64 {
        let a = self.half_width;
        let z = y / a;
        let g = 1.0 - z * z;
        if g <= 0.0 {
            return 0.0;
        }
        let h = -2.0 * z / (a * g * g);
        let dh = -2.0 / (a * a * g * g) - 8.0 * z * z / (a * a * g * g * g);
        self.value(y) * (h * h + dh)
    }

    /// `∫U₀''² / ∫U₀'²` by composite Simpson on a fine grid of the support.
    /// Under the dilation `U(x) = U₀(x/λ)` this ratio scales as `λ⁻²`.
    pub fn base_derivative_ratio(&self) -> f64 {
        let a = self.half_width;
        let n = 20_000;
        let h = 2.0 * a / n as f64;
        let simpson = |f: &dyn Fn(f64) -> f64| {
            let mut s = f(-a) + f(a);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(-a + i as f64 * h);
            }
            s * h / 3.0
        };
        simpson(&|y| self.d2(y).powi(2)) / simpson(&|y| self.d1(y).powi(2))
    }
}

/// `u = R·U₀(x/λ)`, `v = −R·∂x[U₀(x/λ)]`; the sign of `v` gives `C > 0`.
pub fn scaled_bump_state(grid: &Grid, bump: &BumpSpec, r: f64, lambda: f64) -> Result<FieldState, FunctionalError> {
    bump.validate()?;
    if !(r.is_finite() && r >= 0.0 && lambda.is_finite() && lambda > 0.0) {
        return Err(FunctionalError::Argument(format!("need R >= 0 and lambda > 0, got R = {r}, lambda = {lambda}")));
    }
    let support = bump.half_width * lambda;
    if support >= grid.half_length() {
        return Err(FunctionalError::Argument(format!(
            "dilated bump support {support} (half_width {} x lambda {lambda}) does not fit the box half-length {}; \
             reduce lambda below {} or enlarge the grid",
            bump.half_width,
            grid.half_length(),
            grid.half_length() / bump.half_width
        )));
    }
    let u = grid.sample(|x| r * bump.value(x / lambda));
    let v = grid.sample(|x| -r * bump.d1(x / lambda) / lambda);
    FieldState::new(grid, u, v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub r: f64,
    pub lambda: f64,
    pub energy: f64,
    pub momentum: f64,
    /// `E/|C|`
    pub ratio: f64,
    /// `½‖𝐮‖²/|C|`
    pub lambda0_ratio: f64,
    /// `∫U_xx²/∫U_x²` measured on the grid.
    pub uu_ratio: f64,
    pub uu_ok: bool,
}

impl ScanRow {
    /// `J_δ` of this row's state.
    pub fn j_value(&self, delta: f64) -> f64 {
        self.ratio + delta * self.energy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioScanResult {
    pub best_ratio: f64,
    pub best_r: f64,
    pub best_lambda: f64,
    pub lambda0_floor: f64,
    /// `∫U₀''²/∫U₀'²` of the undilated bump.
    pub base_uu_ratio: f64,
    pub table: Vec<ScanRow>,
}

impl RatioScanResult {
    pub fn best_row(&self) -> &ScanRow {
        self.table
            .iter()
            .find(|r| r.r == self.best_r && r.lambda == self.best_lambda)
            .expect("best row comes from the table")
    }

    /// Row with the smallest `J_δ`, the natural starting point for minimization.
    pub fn best_row_for_delta(&self, delta: f64) -> &ScanRow {
        self.table
            .iter()
            .min_by(|a, b| a.j_value(delta).total_cmp(&b.j_value(delta)))
            .expect("scan tables are non-empty")
    }

    pub const CSV_HEADER: &'static str = "R,lambda,ratio,lambda0_ratio,uu_ok";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.table {
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e},{}\n",
                row.r, row.lambda, row.ratio, row.lambda0_ratio, row.uu_ok
            ));
        }
        out
    }
}

/// Evaluates `E/|C|` and `½‖𝐮‖²/|C|` over the scaled bumps `(R, λ)`.
/// Rows are computed in parallel and kept in `(R, λ)` input order.
pub fn scan_lambda_star(
    model: &PotentialModel,
    grid: &Grid,
    bump: &BumpSpec,
    r_values: &[f64],
    lambda_values: &[f64],
) -> Result<RatioScanResult, FunctionalError> {
    bump.validate()?;
    if r_values.is_empty() || lambda_values.is_empty() {
        return Err(FunctionalError::Argument("R and lambda lists must be non-empty".into()));
    }
    if let Some(bad) = r_values.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(FunctionalError::Argument(format!("R values must be positive, got {bad}")));
    }
    // Surface support overflow before spending time on the table.
    for &lambda in lambda_values {
        scaled_bump_state(grid, bump, 1.0, lambda)?;
    }
    let pairs: Vec<(f64, f64)> = r_values.iter().flat_map(|&r| lambda_values.iter().map(move |&l| (r, l))).collect();
    let table = pairs
        .par_iter()
        .map(|&(r, lambda)| {
            let state = scaled_bump_state(grid, bump, r, lambda)?;
            let e = energy(&state, model)?;
            let c = checked_momentum(momentum(&state)?)?;
            let ux = grid.diff(&state.u, 1)?;
            let uxx = grid.diff(&state.u, 2)?;
            let uu_ratio = grid.inner(&uxx, &uxx) / grid.inner(&ux, &ux);
            Ok(ScanRow {
                r,
                lambda,
                energy: e,
                momentum: c,
                ratio: e / c.abs(),
                lambda0_ratio: 0.5 * x_norm_sq(&state) / c.abs(),
                uu_ratio,
                uu_ok: uu_ratio < 0.5,
            })
        })
        .collect::<Result<Vec<_>, FunctionalError>>()?;

    let best = table.iter().min_by(|a, b| a.ratio.total_cmp(&b.ratio)).expect("non-empty table");
    Ok(RatioScanResult {
        best_ratio: best.ratio,
        best_r: best.r,
        best_lambda: best.lambda,
        lambda0_floor: table.iter().map(|r| r.lambda0_ratio).fold(f64::INFINITY, f64::min),
        base_uu_ratio: bump.base_derivative_ratio(),
        table,
    })
}
