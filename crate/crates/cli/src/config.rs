//! TOML run configuration.
//!
//! Every section is optional and falls back to the defaults below; unknown
//! keys anywhere are rejected.
//!
//! ```toml
//! seed = 42
//! output_dir = "out"
//!
//! [potential]
//! kind = "bridge_smooth"      # bridge_piecewise | bridge_smooth | custom
//! custom_form = "quartic"     # custom only: quartic (W = s^4) | free (W = 0)
//! eta = 0.1                   # optional constant overrides
//! M = 1.0
//! alpha = 1.0
//!
//! [grid]
//! half_length = 40.0
//! n_points = 1024
//!
//! [scan]
//! R = [1.0, 10.0, 100.0]      # default: 30 log-spaced values in [1, 200]
//! lambda = [4.0, 8.0]         # default: 1, 2, ..., 36
//! bump_half_width = 1.0
//! bump_scale = 2.718281828459045
//!
//! [minimize]
//! delta = [0.02, 0.05, 0.1, 0.2, 0.5]
//! grad_tol = 1e-8
//! max_iters = 200000
//! initial_R = 22.3            # optional; both or neither, else taken from the scan
//! initial_lambda = 6.0
//! recentre_every = 50
//! step_rule = "backtracking"  # backtracking | fixed
//! shrink = 0.5
//! sufficient_decrease = 1e-4
//! fixed_step = 1e-3
//!
//! [evolve]
//! dt = 7.7e-4                 # default: 0.2 * 2pi / k_max^2
//! t_final = 20.0              # default: travel_distance / c
//! travel_distance = 20.0
//! sample_stride = 100
//! integrator = "strang_split"
//! epsilon = [1e-3, 1e-2]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use beam_soliton::evolution::{default_dt, Integrator};
use beam_soliton::minimizer::StepRule;
use beam_soliton::potential::ConstantOverrides;
use beam_soliton::{BumpSpec, EvolveConfig, Grid, MinimizeConfig, PotentialKind, PotentialModel};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub potential: PotentialSection,
    pub grid: GridSection,
    pub scan: ScanSection,
    pub minimize: MinimizeSection,
    pub evolve: EvolveSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            potential: PotentialSection::default(),
            grid: GridSection::default(),
            scan: ScanSection::default(),
            minimize: MinimizeSection::default(),
            evolve: EvolveSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    BridgePiecewise,
    BridgeSmooth,
    Custom,
}

/// Catalogue of custom potentials selectable without expression parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomForm {
    /// `W(s) = s⁴`.
    Quartic,
    /// `W ≡ 0`.
    Free,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub kind: KindName,
    pub custom_form: Option<CustomForm>,
    pub eta: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub alpha: Option<f64>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self { kind: KindName::BridgeSmooth, custom_form: None, eta: None, m: None, alpha: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub half_length: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { half_length: 40.0, n_points: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    pub bump_half_width: f64,
    pub bump_scale: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        let bump = BumpSpec::default();
        Self {
            r: (0..30).map(|i| 200f64.powf(i as f64 / 29.0)).collect(),
            lambda: (1..=36).map(f64::from).collect(),
            bump_half_width: bump.half_width,
            bump_scale: bump.scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRuleName {
    Backtracking,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeSection {
    pub delta: Vec<f64>,
    pub grad_tol: f64,
    pub max_iters: usize,
    #[serde(rename = "initial_R")]
    pub initial_r: Option<f64>,
    pub initial_lambda: Option<f64>,
    pub recentre_every: usize,
    pub step_rule: StepRuleName,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub fixed_step: f64,
}

impl Default for MinimizeSection {
    fn default() -> Self {
        let d = MinimizeConfig::default();
        let (shrink, sufficient_decrease) = match d.step_rule {
            StepRule::Backtracking { shrink, sufficient_decrease } => (shrink, sufficient_decrease),
            StepRule::Fixed { .. } => (0.5, 1e-4),
        };
        Self {
            delta: vec![0.02, 0.05, 0.1, 0.2, 0.5],
            grad_tol: d.grad_tol,
            max_iters: d.max_iters,
            initial_r: None,
            initial_lambda: None,
            recentre_every: d.recentre_every,
            step_rule: StepRuleName::Backtracking,
            shrink,
            sufficient_decrease,
            fixed_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorName {
    StrangSplit,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub travel_distance: f64,
    pub sample_stride: usize,
    pub integrator: IntegratorName,
    pub epsilon: Vec<f64>,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            dt: None,
            t_final: None,
            travel_distance: 20.0,
            sample_stride: 100,
            integrator: IntegratorName::StrangSplit,
            epsilon: vec![1e-3, 1e-2],
        }
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    /// Parses and validates a TOML document. Errors carry the line and column.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.potential;
        match (p.kind, p.custom_form) {
            (KindName::Custom, None) => {
                return Err(CliError::Config("potential.kind = \"custom\" needs potential.custom_form".into()))
            }
            (KindName::BridgePiecewise | KindName::BridgeSmooth, Some(_)) => {
                return Err(CliError::Config("potential.custom_form only applies to kind = \"custom\"".into()))
            }
            _ => {}
        }
        for (name, v) in [("potential.eta", p.eta), ("potential.M", p.m), ("potential.alpha", p.alpha)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        self.grid()?;

        let s = &self.scan;
        if s.r.is_empty() || s.lambda.is_empty() {
            return Err(CliError::Config("scan.R and scan.lambda must be non-empty".into()));
        }
        for &r in &s.r {
            positive("scan.R entries", r)?;
        }
        for &l in &s.lambda {
            positive("scan.lambda entries", l)?;
        }
        self.bump().validate().map_err(|e| CliError::Config(format!("scan bump: {e}")))?;

        let m = &self.minimize;
        if m.delta.is_empty() {
            return Err(CliError::Config("minimize.delta must list at least one value".into()));
        }
        for &d in &m.delta {
            positive("minimize.delta entries", d)?;
        }
        if m.initial_r.is_some() != m.initial_lambda.is_some() {
            return Err(CliError::Config(
                "give both minimize.initial_R and minimize.initial_lambda, or neither".into(),
            ));
        }
        self.minimize_config(m.delta[0], m.initial_r.unwrap_or(1.0), m.initial_lambda.unwrap_or(1.0))
            .validate()
            .map_err(|e| CliError::Config(format!("minimize: {e}")))?;

        let e = &self.evolve;
        if let Some(dt) = e.dt {
            positive("evolve.dt", dt)?;
        }
        if let Some(t) = e.t_final {
            positive("evolve.t_final", t)?;
        }
        positive("evolve.travel_distance", e.travel_distance)?;
        if e.sample_stride == 0 {
            return Err(CliError::Config("evolve.sample_stride must be at least 1".into()));
        }
        if let Some(bad) = e.epsilon.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(CliError::Config(format!("evolve.epsilon entries must be finite and >= 0, got {bad}")));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid.half_length, self.grid.n_points).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    /// The configured potential without enforcing its assumptions.
    pub fn potential_unchecked(&self) -> Result<PotentialModel, CliError> {
        let p = &self.potential;
        let overrides = ConstantOverrides { eta: p.eta, hylomorphy_m: p.m, hylomorphy_alpha: p.alpha };
        let base = match (p.kind, p.custom_form) {
            (KindName::BridgePiecewise, _) => PotentialModel::bridge_piecewise(),
            (KindName::BridgeSmooth, _) => PotentialModel::bridge_smooth(),
            (KindName::Custom, Some(CustomForm::Quartic)) => {
                PotentialModel::custom("quartic", |s| s.powi(4), |s| 4.0 * s.powi(3), 0.1, 1.0, 1.0)
                    .map_err(|e| CliError::Config(e.to_string()))?
            }
            (KindName::Custom, Some(CustomForm::Free)) => {
                PotentialModel::custom("free", |_| 0.0, |_| 0.0, 0.1, 1.0, 1.0)
                    .map_err(|e| CliError::Config(e.to_string()))?
            }
            (KindName::Custom, None) => {
                return Err(CliError::Config("potential.kind = \"custom\" needs potential.custom_form".into()))
            }
        };
        base.with_overrides(overrides).map_err(|e| CliError::Config(format!("potential: {e}")))
    }

    /// The configured potential, failing unless its assumptions hold.
    pub fn potential(&self) -> Result<PotentialModel, CliError> {
        let model = self.potential_unchecked()?;
        if model.kind() == PotentialKind::Custom {
            let report = model.check_assumptions(-5.0, 50.0, 10_000).map_err(|e| CliError::Config(e.to_string()))?;
            if !report.all_ok() {
                return Err(CliError::Certificate(format!(
                    "potential {} violates its assumptions:\n{report}",
                    model.name()
                )));
            }
            return Ok(model);
        }
        model.validated().map_err(|e| CliError::Certificate(e.to_string()))
    }

    pub fn bump(&self) -> BumpSpec {
        BumpSpec { half_width: self.scan.bump_half_width, scale: self.scan.bump_scale }
    }

    pub fn minimize_config(&self, delta: f64, initial_r: f64, initial_lambda: f64) -> MinimizeConfig {
        let m = &self.minimize;
        MinimizeConfig {
            delta,
            grad_tol: m.grad_tol,
            max_iters: m.max_iters,
            initial_r,
            initial_lambda,
            bump: self.bump(),
            recentre_every: m.recentre_every,
            step_rule: match m.step_rule {
                StepRuleName::Backtracking => {
                    StepRule::Backtracking { shrink: m.shrink, sufficient_decrease: m.sufficient_decrease }
                }
                StepRuleName::Fixed => StepRule::Fixed { step: m.fixed_step },
            },
        }
    }

    /// Time-stepping setup for a profile travelling at `speed`. Without an
    /// explicit `t_final` the horizon is `travel_distance / c`, or
    /// `travel_distance` itself when the profile does not move.
    pub fn evolve_config(&self, grid: &Grid, speed: f64) -> EvolveConfig {
        let e = &self.evolve;
        let t_final =
            e.t_final.unwrap_or(if speed.abs() > 0.0 { e.travel_distance / speed.abs() } else { e.travel_distance });
        EvolveConfig {
            dt: e.dt.unwrap_or_else(|| default_dt(grid)),
            t_final,
            sample_stride: e.sample_stride,
            integrator: match e.integrator {
                IntegratorName::StrangSplit => Integrator::StrangSplit,
            },
        }
    }
}
