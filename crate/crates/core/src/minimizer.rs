//! Minimization of `J_δ = E/|C| + δE` and the certificates attached to its
//! minimizers.
//!
//! The descent runs on the pair `(u, v)` with the gradient preconditioned by
//! the `H² × L²` Riesz map: the `u` component is divided mode by mode by
//! `1 + k⁴`. Step lengths come from Armijo backtracking (or a fixed step);
//! each line search starts from the Barzilai–Borwein secant step.
//! Every `recentre_every` iterations the iterate is translated so that the
//! peak of `|u|` sits at `x = 0`; this leaves `E`, `C` and `J` unchanged.
//!
//! At a minimizer `∇E = c∇C` with `c = E/(C + δC²)`, which gives
//! `v = −c·u_x` and the traveling-wave equation `u'''' + c²u'' + W'(u) = 0`.

use num_complex::Complex64;
use thiserror::Error;

use crate::functionals::{self, scaled_bump_state, BumpSpec, FieldState, FunctionalError, InvariantSet, JEvaluation};
use crate::grid::{Field, Grid};
use crate::potential::PotentialModel;

/// The iteration aborts once `C` falls below this value.
pub const MOMENTUM_COLLAPSE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Armijo backtracking: shrink by `shrink` until `J` drops by at least
    /// `sufficient_decrease · t · ⟨∇J, P⁻¹∇J⟩`.
    Backtracking { shrink: f64, sufficient_decrease: f64 },
    /// Constant step length.
    Fixed { step: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking { shrink: 0.5, sufficient_decrease: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeConfig {
    pub delta: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub initial_r: f64,
    pub initial_lambda: f64,
    pub bump: BumpSpec,
    pub recentre_every: usize,
    pub step_rule: StepRule,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            grad_tol: 1e-8,
            max_iters: 200_000,
            initial_r: 4.0,
            initial_lambda: 3.0,
            bump: BumpSpec::default(),
            recentre_every: 50,
            step_rule: StepRule::default(),
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<(), MinimizeError> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(MinimizeError::Argument(format!("{name} must be positive, got {x}")))
            }
        };
        positive("delta", self.delta)?;
        positive("grad_tol", self.grad_tol)?;
        positive("initial_R", self.initial_r)?;
        positive("initial_lambda", self.initial_lambda)?;
        if self.max_iters == 0 {
            return Err(MinimizeError::Argument("max_iters must be at least 1".into()));
        }
        if self.recentre_every == 0 {
            return Err(MinimizeError::Argument("recentre_every must be at least 1".into()));
        }
        match self.step_rule {
            StepRule::Backtracking { shrink, sufficient_decrease } => {
                if !(shrink > 0.0 && shrink < 1.0) {
                    return Err(MinimizeError::Argument(format!("shrink must lie in (0, 1), got {shrink}")));
                }
                if !(sufficient_decrease > 0.0 && sufficient_decrease < 0.5) {
                    return Err(MinimizeError::Argument(format!(
                        "sufficient_decrease must lie in (0, 0.5), got {sufficient_decrease}"
                    )));
                }
            }
            StepRule::Fixed { step } => positive("step", step)?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub j: f64,
    pub energy: f64,
    pub momentum: f64,
    pub grad_norm: f64,
    pub step: f64,
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str = "iter,J,E,C,grad_norm,step";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.iter, self.j, self.energy, self.momentum, self.grad_norm, self.step
        )
    }
}

/// A minimizer of `J_δ` with its certificates.
#[derive(Debug, Clone)]
pub struct SolitonProfile {
    pub state: FieldState,
    pub delta: f64,
    /// `c = E/(C + δC²)`
    pub speed: f64,
    /// Least-squares `c` in `v ≈ −c·u_x`.
    pub fitted_speed: f64,
    pub fit_misfit: f64,
    pub invariants_at_min: InvariantSet,
    /// `‖u'''' + c²u'' + W'(u)‖ / ‖W'(u)‖`
    pub el_residual_l2: f64,
    pub grad_norm_final: f64,
    pub iterations: usize,
    /// Largest `|u|`, `|v|` on the outer tenth of the box.
    pub boundary_mass: f64,
    pub history: Vec<IterationRecord>,
}

impl SolitonProfile {
    /// Builds the certificates for an arbitrary state (converged or not).
    pub fn certify(
        state: FieldState,
        model: &PotentialModel,
        delta: f64,
        grad_norm_final: f64,
        iterations: usize,
        history: Vec<IterationRecord>,
    ) -> Result<Self, MinimizeError> {
        let invariants = InvariantSet::evaluate(&state, model, delta)?;
        let speed = wave_speed(&state, model, delta)?;
        let (fitted_speed, fit_misfit) = fit_speed(&state).unwrap_or((0.0, f64::INFINITY));
        let el = el_residual(&state, model, speed);
        let g = &state.grid;
        let boundary_mass = g.boundary_mass(&state.u).max(g.boundary_mass(&state.v));
        Ok(Self {
            delta,
            speed,
            fitted_speed,
            fit_misfit,
            invariants_at_min: invariants,
            el_residual_l2: el,
            grad_norm_final,
            iterations,
            boundary_mass,
            history,
            state,
        })
    }

    pub fn peak(&self) -> f64 {
        self.state.u.max_abs()
    }
}

#[derive(Debug, Error)]
pub enum MinimizeError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NotConverged { iterations: usize, grad_norm: f64, last: Box<SolitonProfile> },
    #[error("momentum collapsed to {momentum:.3e} at iteration {iteration}; delta is outside the useful interval")]
    DegenerateMomentum { iteration: usize, momentum: f64 },
    #[error("line search stalled at iteration {iteration} (gradient norm {grad_norm:.3e})")]
    LineSearchFailed { iteration: usize, grad_norm: f64, last: Box<SolitonProfile> },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

impl MinimizeError {
    /// Non-convergence and momentum collapse are outcomes of the chosen `δ`,
    /// not bugs in the input.
    pub fn is_degenerate_or_nonconvergent(&self) -> bool {
        matches!(
            self,
            MinimizeError::NotConverged { .. }
                | MinimizeError::DegenerateMomentum { .. }
                | MinimizeError::LineSearchFailed { .. }
        )
    }
}

/// Scaled-bump starting state `(R·U₀(x/λ), −R·∂x[U₀(x/λ)])`.
pub fn initial_guess(grid: &Grid, bump: &BumpSpec, r: f64, lambda: f64) -> Result<FieldState, MinimizeError> {
    Ok(scaled_bump_state(grid, bump, r, lambda)?)
}

/// Translates the state so that the largest `|u|` sits at `x = 0`. Returns the
/// translated state and the applied shift `τ` (the result is `𝐮(x − τ)`).
pub fn recentre(state: &FieldState) -> Result<(FieldState, f64), MinimizeError> {
    if state.u.is_zero() {
        return Err(MinimizeError::Argument("cannot recentre a zero displacement".into()));
    }
    let g = &state.grid;
    let m = g.origin_index() as isize - state.u.argmax_abs() as isize;
    Ok((state.rolled(m), m as f64 * g.dx()))
}

/// `c = E/(C + δC²)`.
pub fn wave_speed(state: &FieldState, model: &PotentialModel, delta: f64) -> Result<f64, MinimizeError> {
    let c = functionals::momentum(state)?;
    if c <= 0.0 {
        return Err(MinimizeError::Argument(format!("wave speed needs positive momentum, got C = {c:e}")));
    }
    let e = functionals::energy(state, model)?;
    Ok(multiplier_speed(e, c, delta))
}

/// `E/(C + δC²)` from the invariants themselves.
pub fn multiplier_speed(energy: f64, momentum: f64, delta: f64) -> f64 {
    energy / (momentum + delta * momentum * momentum)
}

/// Least-squares speed `c = C/∫u_x²` in `v ≈ −c·u_x`, with the relative
/// misfit `‖v + c·u_x‖/‖v‖` (zero when `v` vanishes).
pub fn fit_speed(state: &FieldState) -> Result<(f64, f64), MinimizeError> {
    let g = &state.grid;
    let ux = g.diff(&state.u, 1).map_err(FunctionalError::from)?;
    let ux2 = g.inner(&ux, &ux);
    if ux2 <= 1e-300 {
        return Err(MinimizeError::Argument("u is flat; no speed can be fitted".into()));
    }
    let c = -g.inner(&state.v, &ux) / ux2;
    let vnorm = g.l2_norm(&state.v);
    let misfit = if vnorm > 0.0 { g.l2_norm(&state.v.zip_with(&ux, |v, d| v + c * d)) / vnorm } else { 0.0 };
    Ok((c, misfit))
}

/// `‖u'''' + c²u'' + W'(u)‖_{L²}`, divided by `‖W'(u)‖_{L²}` when that is nonzero.
pub fn el_residual(state: &FieldState, model: &PotentialModel, c: f64) -> f64 {
    let g = &state.grid;
    let u4 = g.diff(&state.u, 4).expect("order 4 is supported");
    let u2 = g.diff(&state.u, 2).expect("order 2 is supported");
    let force = state.u.map(|s| model.w_prime(s));
    let mut res = u4;
    res.axpy(c * c, &u2);
    res.axpy(1.0, &force);
    let r = g.l2_norm(&res);
    let f = g.l2_norm(&force);
    if f > 0.0 {
        r / f
    } else {
        r
    }
}

/// `H² × L²` preconditioning of a gradient pair: divides the `u` part by
/// `1 + k⁴` in Fourier space.
pub fn precondition(grid: &Grid, grad_u: &Field, grad_v: &Field) -> (Field, Field) {
    let pu = grid.apply_multiplier(grad_u, |_, k| Complex64::new(1.0 / (1.0 + k.powi(4)), 0.0));
    (pu, grad_v.clone())
}

struct Iterate {
    state: FieldState,
    eval: JEvaluation,
    pu: Field,
    pv: Field,
    grad_norm: f64,
    /// `⟨∇J, P⁻¹∇J⟩` in the quadrature pairing.
    slope: f64,
}

impl Iterate {
    fn new(state: FieldState, model: &PotentialModel, delta: f64) -> Result<Self, FunctionalError> {
        let eval = functionals::j_evaluate(&state, model, delta)?;
        let g = &state.grid;
        let (pu, pv) = precondition(g, &eval.grad_u, &eval.grad_v);
        let grad_norm = (g.inner(&pu, &pu) + g.inner(&pv, &pv)).sqrt();
        let slope = g.inner(&eval.grad_u, &pu) + g.inner(&eval.grad_v, &pv);
        Ok(Self { state, eval, pu, pv, grad_norm, slope })
    }

    fn trial(&self, t: f64, model: &PotentialModel, delta: f64) -> Result<Iterate, MinimizeError> {
        let next = self.state.displaced(-t, &self.pu, &self.pv);
        let c = functionals::momentum(&next)?;
        if c < MOMENTUM_COLLAPSE {
            return Err(MinimizeError::DegenerateMomentum { iteration: 0, momentum: c });
        }
        Ok(Iterate::new(next, model, delta)?)
    }

    fn record(&self, iter: usize, step: f64) -> IterationRecord {
        IterationRecord {
            iter,
            j: self.eval.j,
            energy: self.eval.energy,
            momentum: self.eval.momentum,
            grad_norm: self.grad_norm,
            step,
        }
    }
}

/// Minimizes `J_δ` from the scaled bump `(initial_r, initial_lambda)`.
pub fn minimize(config: &MinimizeConfig, model: &PotentialModel, grid: &Grid) -> Result<SolitonProfile, MinimizeError> {
    config.validate()?;
    let start = initial_guess(grid, &config.bump, config.initial_r, config.initial_lambda)?;
    minimize_from(start, config, model)
}

/// Minimizes `J_δ` from an arbitrary starting state with `C > 0`.
pub fn minimize_from(
    start: FieldState,
    config: &MinimizeConfig,
    model: &PotentialModel,
) -> Result<SolitonProfile, MinimizeError> {
    config.validate()?;
    let delta = config.delta;
    let c0 = functionals::momentum(&start)?;
    if c0.is_nan() || c0 <= MOMENTUM_COLLAPSE {
        return Err(MinimizeError::Argument(format!("the starting state needs positive momentum, got C = {c0:e}")));
    }
    let mut it = Iterate::new(start, model, delta)?;
    let mut history = Vec::new();
    // Initial trial step: the inverse of the leading curvature 1/|C| + δ.
    let mut step = 1.0 / (1.0 / it.eval.momentum.abs() + delta);
    let max_step = 1e6 * step.max(1.0);
    let mut iter = 0;

    loop {
        if it.grad_norm <= config.grad_tol {
            history.push(it.record(iter, 0.0));
            break;
        }
        if iter >= config.max_iters {
            history.push(it.record(iter, 0.0));
            let grad_norm = it.grad_norm;
            let last = SolitonProfile::certify(it.state, model, delta, grad_norm, iter, history)?;
            return Err(MinimizeError::NotConverged { iterations: iter, grad_norm, last: Box::new(last) });
        }

        let (next, taken) = match config.step_rule {
            StepRule::Fixed { step } => (with_iteration(it.trial(step, model, delta), iter)?, step),
            StepRule::Backtracking { shrink, sufficient_decrease } => {
                match line_search(&it, step, shrink, sufficient_decrease, model, delta, iter)? {
                    Some(found) => found,
                    None => {
                        history.push(it.record(iter, 0.0));
                        let grad_norm = it.grad_norm;
                        let last = SolitonProfile::certify(it.state, model, delta, grad_norm, iter, history)?;
                        return Err(MinimizeError::LineSearchFailed {
                            iteration: iter,
                            grad_norm,
                            last: Box::new(last),
                        });
                    }
                }
            }
        };
        history.push(it.record(iter, taken));
        if matches!(config.step_rule, StepRule::Backtracking { .. }) {
            step = next_trial_step(&it, &next, taken).min(max_step);
        }
        it = next;
        iter += 1;

        if iter % config.recentre_every == 0 {
            let (centred, _) = recentre(&it.state)?;
            it = Iterate::new(centred, model, delta)?;
        }
    }

    let (centred, _) = recentre(&it.state)?;
    SolitonProfile::certify(centred, model, delta, it.grad_norm, iter, history)
}

/// Barzilai–Borwein trial step in the preconditioned metric: the secant
/// curvature along the last step is `(φ'(0) − φ'(t))/t` with
/// `φ'(s) = −⟨∇J(x − s·p), p⟩`. Falls back to doubling when the curvature
/// is not positive.
fn next_trial_step(prev: &Iterate, next: &Iterate, taken: f64) -> f64 {
    let g = &prev.state.grid;
    let along = g.inner(&next.eval.grad_u, &prev.pu) + g.inner(&next.eval.grad_v, &prev.pv);
    let curvature = prev.slope - along;
    if curvature > 0.0 && curvature.is_finite() {
        taken * prev.slope / curvature
    } else {
        2.0 * taken
    }
}

fn with_iteration(r: Result<Iterate, MinimizeError>, iteration: usize) -> Result<Iterate, MinimizeError> {
    r.map_err(|e| match e {
        MinimizeError::DegenerateMomentum { momentum, .. } => MinimizeError::DegenerateMomentum { iteration, momentum },
        other => other,
    })
}

/// Armijo backtracking from `step`. When the predicted decrease drops to the
/// rounding level of `J`, a step is also accepted if `J` rose by no more than
/// rounding and the directional derivative at the trial point has not
/// overshot (`φ'(t) ≤ (1 − 2σ)·|φ'(0)|`).
fn line_search(
    it: &Iterate,
    mut step: f64,
    shrink: f64,
    sigma: f64,
    model: &PotentialModel,
    delta: f64,
    iteration: usize,
) -> Result<Option<(Iterate, f64)>, MinimizeError> {
    let j0 = it.eval.j;
    let noise = 64.0 * f64::EPSILON * j0.abs().max(1.0);
    for _ in 0..80 {
        match with_iteration(it.trial(step, model, delta), iteration) {
            Ok(next) => {
                let predicted = sigma * step * it.slope;
                if next.eval.j <= j0 - predicted {
                    return Ok(Some((next, step)));
                }
                if predicted < noise && next.eval.j <= j0 + noise {
                    let g = &it.state.grid;
                    let slope_at_trial = g.inner(&next.eval.grad_u, &it.pu) + g.inner(&next.eval.grad_v, &it.pv);
                    if slope_at_trial <= (1.0 - 2.0 * sigma) * it.slope {
                        return Ok(Some((next, step)));
                    }
                }
            }
            // Stepping too far can empty the momentum; a shorter step may not.
            Err(MinimizeError::DegenerateMomentum { .. }) if step > 1e-12 => {}
            Err(e) => return Err(e),
        }
        step *= shrink;
    }
    Ok(None)
}
