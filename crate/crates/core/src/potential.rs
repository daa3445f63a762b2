//! The nonlinearity `W` of the beam equation `u_tt + u_xxxx + W'(u) = 0`.
//!
//! Two suspension-bridge potentials are built in:
//!
//! * [`PotentialKind::BridgePiecewise`]: `W(s) = s²/2` for `s ≤ 1`, `s − 1/2` for `s ≥ 1`
//!   (cable spring plus gravity; only gravity once the cable goes slack),
//! * [`PotentialKind::BridgeSmooth`]: `W(s) = s − 1 + e^(−s)`.
//!
//! Every model carries the constants `(η, M, α)` of the three structural
//! assumptions (positivity, nondegeneracy at zero, hylomorphy) and
//! [`PotentialModel::check_assumptions`] verifies them by sampling.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Scalar function type used by custom potentials.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("potential evaluated at non-finite argument {0}")]
    Domain(f64),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("potential `{name}` violates its declared assumptions: {report}")]
    AssumptionsViolated { name: String, report: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    BridgePiecewise,
    BridgeSmooth,
    Custom,
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PotentialKind::BridgePiecewise => "bridge_piecewise",
            PotentialKind::BridgeSmooth => "bridge_smooth",
            PotentialKind::Custom => "custom",
        })
    }
}

/// Optional replacements for the assumption constants of a model.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConstantOverrides {
    pub eta: Option<f64>,
    pub hylomorphy_m: Option<f64>,
    pub hylomorphy_alpha: Option<f64>,
}

/// A potential `W` together with the constants of its structural assumptions.
///
/// Immutable once built; cloning shares the underlying closures.
#[derive(Clone)]
pub struct PotentialModel {
    kind: PotentialKind,
    name: String,
    eta: f64,
    hylomorphy_m: f64,
    hylomorphy_alpha: f64,
    w: ScalarFn,
    w_prime: ScalarFn,
    w_second_at_zero: f64,
}

impl fmt::Debug for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialModel")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .field("eta", &self.eta)
            .field("hylomorphy_m", &self.hylomorphy_m)
            .field("hylomorphy_alpha", &self.hylomorphy_alpha)
            .field("w_second_at_zero", &self.w_second_at_zero)
            .finish()
    }
}

fn piecewise_w(s: f64) -> f64 {
    if s <= 1.0 {
        0.5 * s * s
    } else {
        s - 0.5
    }
}

fn piecewise_w_prime(s: f64) -> f64 {
    if s <= 1.0 {
        s
    } else {
        1.0
    }
}

// s − 1 + e^(−s), written with expm1 so the O(s²) value near zero keeps full
// relative precision.
fn smooth_w(s: f64) -> f64 {
    (-s).exp_m1() + s
}

fn smooth_w_prime(s: f64) -> f64 {
    -(-s).exp_m1()
}

/// Richardson-extrapolated centered second difference of `w` at zero.
fn second_derivative_at_zero(w: &dyn Fn(f64) -> f64) -> f64 {
    let d2 = |h: f64| (w(h) - 2.0 * w(0.0) + w(-h)) / (h * h);
    let h = 1e-3;
    (4.0 * d2(0.5 * h) - d2(h)) / 3.0
}

impl PotentialModel {
    /// `W(s) = s²/2` for `s ≤ 1`, `s − 1/2` for `s ≥ 1`, with `η = 1/2, M = 1, α = 1`.
    pub fn bridge_piecewise() -> Self {
        Self {
            kind: PotentialKind::BridgePiecewise,
            name: "bridge_piecewise".into(),
            eta: 0.5,
            hylomorphy_m: 1.0,
            hylomorphy_alpha: 1.0,
            w: Arc::new(piecewise_w),
            w_prime: Arc::new(piecewise_w_prime),
            w_second_at_zero: second_derivative_at_zero(&piecewise_w),
        }
    }

    /// `W(s) = s − 1 + e^(−s)`, with `η = 0.1, M = 1, α = 1`.
    pub fn bridge_smooth() -> Self {
        Self {
            kind: PotentialKind::BridgeSmooth,
            name: "bridge_smooth".into(),
            eta: 0.1,
            hylomorphy_m: 1.0,
            hylomorphy_alpha: 1.0,
            w: Arc::new(smooth_w),
            w_prime: Arc::new(smooth_w_prime),
            w_second_at_zero: second_derivative_at_zero(&smooth_w),
        }
    }

    /// A built-in model with optional constant overrides, validated on the
    /// default sample range before it is returned.
    pub fn builtin(kind: PotentialKind, overrides: ConstantOverrides) -> Result<Self, PotentialError> {
        let base = match kind {
            PotentialKind::BridgePiecewise => Self::bridge_piecewise(),
            PotentialKind::BridgeSmooth => Self::bridge_smooth(),
            PotentialKind::Custom => {
                return Err(PotentialError::Argument("custom potentials are built with PotentialModel::custom".into()))
            }
        };
        let model = base.with_overrides(overrides)?;
        model.validated()
    }

    /// A custom potential. It is not validated here, so counterexamples can be
    /// built and reported on; call [`PotentialModel::validated`] to enforce the
    /// assumptions.
    pub fn custom(
        name: impl Into<String>,
        w: impl Fn(f64) -> f64 + Send + Sync + 'static,
        w_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        eta: f64,
        hylomorphy_m: f64,
        hylomorphy_alpha: f64,
    ) -> Result<Self, PotentialError> {
        check_constants(eta, hylomorphy_m, hylomorphy_alpha)?;
        let w: ScalarFn = Arc::new(w);
        let w_second_at_zero = second_derivative_at_zero(&*w);
        Ok(Self {
            kind: PotentialKind::Custom,
            name: name.into(),
            eta,
            hylomorphy_m,
            hylomorphy_alpha,
            w,
            w_prime: Arc::new(w_prime),
            w_second_at_zero,
        })
    }

    /// Replaces any of the assumption constants.
    pub fn with_overrides(mut self, overrides: ConstantOverrides) -> Result<Self, PotentialError> {
        self.eta = overrides.eta.unwrap_or(self.eta);
        self.hylomorphy_m = overrides.hylomorphy_m.unwrap_or(self.hylomorphy_m);
        self.hylomorphy_alpha = overrides.hylomorphy_alpha.unwrap_or(self.hylomorphy_alpha);
        check_constants(self.eta, self.hylomorphy_m, self.hylomorphy_alpha)?;
        Ok(self)
    }

    /// Runs [`check_assumptions`](Self::check_assumptions) on `[-5, 50]` and
    /// fails unless all three hold.
    pub fn validated(self) -> Result<Self, PotentialError> {
        let report = self.check_assumptions(-5.0, 50.0, 10_000)?;
        if report.all_ok() {
            Ok(self)
        } else {
            Err(PotentialError::AssumptionsViolated { name: self.name.clone(), report: report.to_string() })
        }
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn hylomorphy_m(&self) -> f64 {
        self.hylomorphy_m
    }

    pub fn hylomorphy_alpha(&self) -> f64 {
        self.hylomorphy_alpha
    }

    pub fn w_second_at_zero(&self) -> f64 {
        self.w_second_at_zero
    }

    /// `W(s)` without the finiteness check. Used in field-wide loops where the
    /// samples are already known to be finite.
    #[inline]
    pub fn w(&self, s: f64) -> f64 {
        (self.w)(s)
    }

    /// `W'(s)` without the finiteness check.
    #[inline]
    pub fn w_prime(&self, s: f64) -> f64 {
        (self.w_prime)(s)
    }

    pub fn evaluate(&self, s: f64) -> Result<f64, PotentialError> {
        finite(s)?;
        Ok(self.w(s))
    }

    pub fn derivative(&self, s: f64) -> Result<f64, PotentialError> {
        finite(s)?;
        Ok(self.w_prime(s))
    }

    /// `N(s) = W(s) − s²/2`.
    pub fn nonlinear_part(&self, s: f64) -> Result<f64, PotentialError> {
        finite(s)?;
        Ok(self.w(s) - 0.5 * s * s)
    }

    /// Samples the three assumptions on a uniform grid of `[s_min, s_max]`
    /// plus logarithmically spaced points `±10^-k` near zero.
    pub fn check_assumptions(
        &self,
        s_min: f64,
        s_max: f64,
        n_samples: usize,
    ) -> Result<AssumptionReport, PotentialError> {
        if !(s_min.is_finite() && s_max.is_finite()) || s_min >= s_max {
            return Err(PotentialError::Argument(format!("degenerate sample range [{s_min}, {s_max}]")));
        }
        if n_samples < 100 {
            return Err(PotentialError::Argument(format!("need at least 100 samples, got {n_samples}")));
        }

        let mut samples: Vec<f64> =
            (0..n_samples).map(|i| s_min + (s_max - s_min) * i as f64 / (n_samples - 1) as f64).collect();
        const LOG_POINTS: usize = 200;
        for i in 0..LOG_POINTS {
            // 10^-12 .. 10^0
            let mag = 10f64.powf(-12.0 + 12.0 * i as f64 / (LOG_POINTS - 1) as f64);
            for s in [mag, -mag] {
                if s >= s_min && s <= s_max {
                    samples.push(s);
                }
            }
        }
        if s_min <= 0.0 && s_max >= 0.0 {
            samples.push(0.0);
        }

        let mut positivity_margin = f64::INFINITY;
        let mut positivity_ok = true;
        let mut hylomorphy_margin = f64::NEG_INFINITY;
        let mut hylomorphy_ok = true;
        for &s in &samples {
            let w = self.w(s);
            let floor = self.eta * (s * s).min(1.0);
            positivity_margin = positivity_margin.min(w - floor);
            if w.is_nan() || w < floor * (1.0 - 1e-12) {
                positivity_ok = false;
            }
            if s >= 0.0 {
                let cap = self.hylomorphy_m * s.abs().powf(self.hylomorphy_alpha);
                hylomorphy_margin = hylomorphy_margin.max(w - cap);
                if w - cap > 1e-12 * cap.abs().max(1.0) {
                    hylomorphy_ok = false;
                }
            }
        }
        if hylomorphy_margin == f64::NEG_INFINITY {
            // No sample with s ≥ 0: nothing to check.
            hylomorphy_margin = 0.0;
        }
        if !(0.0..2.0).contains(&self.hylomorphy_alpha) {
            hylomorphy_ok = false;
        }

        let nondegeneracy_error = (self.w_second_at_zero - 1.0).abs();
        Ok(AssumptionReport {
            positivity_ok,
            positivity_margin,
            nondegeneracy_ok: nondegeneracy_error <= NONDEGENERACY_TOL,
            nondegeneracy_error,
            hylomorphy_ok,
            hylomorphy_margin,
            eta: self.eta,
            hylomorphy_m: self.hylomorphy_m,
            hylomorphy_alpha: self.hylomorphy_alpha,
            samples: format!(
                "{n_samples} uniform points on [{s_min}, {s_max}] plus ±10^-12..10^0 ({LOG_POINTS} log-spaced magnitudes)"
            ),
        })
    }
}

/// Tolerance on `|W''(0) − 1|` for the extrapolated second difference.
pub const NONDEGENERACY_TOL: f64 = 1e-8;

fn finite(s: f64) -> Result<(), PotentialError> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(PotentialError::Domain(s))
    }
}

fn check_constants(eta: f64, m: f64, alpha: f64) -> Result<(), PotentialError> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(PotentialError::Argument(format!("eta must be positive, got {eta}")));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(PotentialError::Argument(format!("M must be positive, got {m}")));
    }
    if !(alpha.is_finite() && (0.0..2.0).contains(&alpha)) {
        return Err(PotentialError::Argument(format!("alpha must lie in [0, 2), got {alpha}")));
    }
    Ok(())
}

/// Outcome of [`PotentialModel::check_assumptions`]. Margins are always
/// reported, including for failed checks.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub positivity_ok: bool,
    /// `min_s W(s) − η·min(s², 1)`.
    pub positivity_margin: f64,
    pub nondegeneracy_ok: bool,
    /// `|W''(0) − 1|`.
    pub nondegeneracy_error: f64,
    pub hylomorphy_ok: bool,
    /// `max_{s ≥ 0} W(s) − M|s|^α`.
    pub hylomorphy_margin: f64,
    pub eta: f64,
    pub hylomorphy_m: f64,
    pub hylomorphy_alpha: f64,
    pub samples: String,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.positivity_ok && self.nondegeneracy_ok && self.hylomorphy_ok
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "positivity    (eta = {}): {}  margin = {:.6e}",
            self.eta,
            verdict(self.positivity_ok),
            self.positivity_margin
        )?;
        writeln!(
            f,
            "nondegeneracy (W''(0) = 1): {}  |W''(0) - 1| = {:.3e}",
            verdict(self.nondegeneracy_ok),
            self.nondegeneracy_error
        )?;
        writeln!(
            f,
            "hylomorphy    (M = {}, alpha = {}): {}  margin = {:.6e}",
            self.hylomorphy_m,
            self.hylomorphy_alpha,
            verdict(self.hylomorphy_ok),
            self.hylomorphy_margin
        )?;
        write!(f, "samples: {}", self.samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic(m: f64, alpha: f64) -> PotentialModel {
        PotentialModel::custom("quartic", |s| s.powi(4), |s| 4.0 * s.powi(3), 0.1, m, alpha).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let pw = PotentialModel::bridge_piecewise();
        let sm = PotentialModel::bridge_smooth();
        assert_eq!(pw.evaluate(1.0).unwrap(), 0.5);
        assert_eq!(pw.evaluate(0.0).unwrap(), 0.0);
        assert_eq!(sm.evaluate(0.0).unwrap(), 0.0);
        assert!((sm.evaluate(1.0).unwrap() - 0.367_879_441_2).abs() < 1e-10);
        assert!((sm.evaluate(1.0).unwrap() - (1.0 - 1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(pw.evaluate(3.0).unwrap(), 2.5);
    }

    #[test]
    fn derivatives() {
        let pw = PotentialModel::bridge_piecewise();
        let sm = PotentialModel::bridge_smooth();
        assert_eq!(pw.derivative(2.0).unwrap(), 1.0);
        assert_eq!(pw.derivative(0.5).unwrap(), 0.5);
        assert_eq!(sm.derivative(0.0).unwrap(), 0.0);
        assert!((sm.derivative(2.0).unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        for m in [&pw, &sm] {
            assert_eq!(m.evaluate(0.0).unwrap(), 0.0);
            assert_eq!(m.derivative(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn nonlinear_remainder() {
        let pw = PotentialModel::bridge_piecewise();
        let sm = PotentialModel::bridge_smooth();
        assert_eq!(pw.nonlinear_part(0.7).unwrap(), 0.0);
        assert_eq!(pw.nonlinear_part(2.0).unwrap(), -0.5);
        assert_eq!(sm.nonlinear_part(0.0).unwrap(), 0.0);
        // N(s)/s² → 0
        for s in [1e-2, 1e-3, 1e-4] {
            assert!((sm.nonlinear_part(s).unwrap() / (s * s)).abs() < s);
        }
    }

    #[test]
    fn non_finite_input_is_a_domain_error() {
        let sm = PotentialModel::bridge_smooth();
        assert_eq!(sm.evaluate(f64::NAN).unwrap_err().to_string(), "potential evaluated at non-finite argument NaN");
        assert!(matches!(sm.derivative(f64::INFINITY), Err(PotentialError::Domain(_))));
        assert!(matches!(sm.nonlinear_part(f64::NEG_INFINITY), Err(PotentialError::Domain(_))));
    }

    #[test]
    fn piecewise_branches_join_smoothly() {
        let pw = PotentialModel::bridge_piecewise();
        let below = 1.0 - f64::EPSILON;
        let upper = |s: f64| s - 0.5;
        assert_eq!(piecewise_w(1.0), upper(1.0));
        assert_eq!(piecewise_w(1.0), 0.5 * 1.0 * 1.0);
        assert_eq!(piecewise_w_prime(1.0), 1.0);
        assert!((pw.w(below) - pw.w(1.0)).abs() < 1e-15);
        assert!((pw.w_prime(below) - pw.w_prime(1.0 + f64::EPSILON)).abs() < 1e-15);
    }

    #[test]
    fn second_difference_normalisation() {
        for model in [PotentialModel::bridge_piecewise(), PotentialModel::bridge_smooth()] {
            assert!((model.w_second_at_zero() - 1.0).abs() < 1e-10, "{model:?}");
            for h in [1e-3, 1e-4] {
                let d2 = (model.w(h) - 2.0 * model.w(0.0) + model.w(-h)) / (h * h);
                assert!((d2 - 1.0).abs() <= 10.0 * h * h, "h = {h}: {d2}");
            }
        }
    }

    #[test]
    fn builtins_pass_their_assumptions() {
        let sm = PotentialModel::bridge_smooth().check_assumptions(-5.0, 50.0, 10_000).unwrap();
        assert!(sm.all_ok(), "{sm}");
        assert_eq!((sm.eta, sm.hylomorphy_m, sm.hylomorphy_alpha), (0.1, 1.0, 1.0));
        let pw = PotentialModel::bridge_piecewise().check_assumptions(-5.0, 50.0, 10_000).unwrap();
        assert!(pw.all_ok(), "{pw}");
        assert_eq!((pw.eta, pw.hylomorphy_m, pw.hylomorphy_alpha), (0.5, 1.0, 1.0));
        // W1 is exactly η s² on [-1, 1].
        assert_eq!(pw.positivity_margin, 0.0);
    }

    #[test]
    fn quartic_fails_hylomorphy_for_every_alpha_below_two() {
        for alpha in [0.0, 0.5, 1.0, 1.5, 1.99] {
            for m in [1.0, 100.0] {
                let r = quartic(m, alpha).check_assumptions(-5.0, 50.0, 10_000).unwrap();
                assert!(!r.hylomorphy_ok, "alpha = {alpha}, M = {m}");
                assert!(r.hylomorphy_margin > 0.0 && r.hylomorphy_margin.is_finite());
                assert!(r.positivity_margin.is_finite());
            }
        }
    }

    #[test]
    fn bad_sample_ranges() {
        let sm = PotentialModel::bridge_smooth();
        assert!(matches!(sm.check_assumptions(1.0, 1.0, 1000), Err(PotentialError::Argument(_))));
        assert!(matches!(sm.check_assumptions(2.0, 1.0, 1000), Err(PotentialError::Argument(_))));
        assert!(matches!(sm.check_assumptions(-1.0, 1.0, 10), Err(PotentialError::Argument(_))));
    }

    #[test]
    fn overrides_are_validated() {
        let strict = ConstantOverrides { eta: Some(0.6), ..Default::default() };
        // W1 equals s²/2 near zero, so η = 0.6 cannot hold.
        assert!(matches!(
            PotentialModel::builtin(PotentialKind::BridgePiecewise, strict),
            Err(PotentialError::AssumptionsViolated { .. })
        ));
        let loose = ConstantOverrides { hylomorphy_m: Some(2.0), ..Default::default() };
        let m = PotentialModel::builtin(PotentialKind::BridgeSmooth, loose).unwrap();
        assert_eq!(m.hylomorphy_m(), 2.0);
        assert!(PotentialModel::bridge_smooth()
            .with_overrides(ConstantOverrides { hylomorphy_alpha: Some(2.0), ..Default::default() })
            .is_err());
    }

    #[test]
    fn positivity_on_random_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for model in [PotentialModel::bridge_piecewise(), PotentialModel::bridge_smooth()] {
            for _ in 0..100_000 {
                let s: f64 = rng.random_range(-10.0..10.0);
                let floor = model.eta() * (s * s).min(1.0);
                assert!(model.w(s) >= floor * (1.0 - 1e-12), "{} at {s}", model.name());
                let n = model.nonlinear_part(s).unwrap();
                assert!((model.w(s) - 0.5 * s * s - n).abs() <= 1e-15 * model.w(s).abs().max(1.0));
            }
        }
    }
}
