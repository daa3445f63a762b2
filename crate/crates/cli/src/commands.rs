//! Subcommand drivers. Each writes its artifacts under `output_dir` and
//! returns the human-readable report together with the exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use beam_soliton::evolution::{self, EvolutionRecord, Reference};
use beam_soliton::functionals::{self, scan_lambda_star, FunctionalError};
use beam_soliton::minimizer::{self, IterationRecord, MinimizeError};
use beam_soliton::{FieldState, Grid, PotentialModel, RatioScanResult, SolitonProfile};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::snapshot::ProfileSnapshot;
use crate::CliError;

pub const EL_RESIDUAL_TOL: f64 = 1e-4;
pub const SPEED_AGREEMENT_TOL: f64 = 1e-3;
pub const BOUNDARY_MASS_TOL: f64 = 1e-6;
pub const DISTINCTNESS_TOL: f64 = 1e-6;
pub const SHAPE_ERROR_TOL: f64 = 1e-3;
pub const TRANSPORT_SPEED_TOL: f64 = 1e-2;
pub const ENERGY_DRIFT_TOL: f64 = 1e-6;
pub const MOMENTUM_DRIFT_TOL: f64 = 1e-8;
pub const ORBIT_RATIO_TOL: f64 = 5.0;
pub const LIAPUNOV_TOL: f64 = 1e-6;
/// Perturbations above this relative size are reported but never fail.
pub const SMALL_PERTURBATION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub report: String,
}

impl Outcome {
    fn new(ok: bool, report: String) -> Self {
        Self { code: if ok { 0 } else { 1 }, report }
    }
}

pub struct Context {
    pub config: RunConfig,
    pub verbose: bool,
}

impl Context {
    pub fn new(config: RunConfig, verbose: bool) -> Self {
        Self { config, verbose }
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        let dir = self.config.output_dir.as_path();
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out_dir()?.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.log(format!("wrote {}", path.display()));
        Ok(path)
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn check_potential(ctx: &Context) -> Result<Outcome, CliError> {
    let model = ctx.config.potential_unchecked()?;
    let report = model.check_assumptions(-5.0, 50.0, 10_000).map_err(usage)?;
    let mut text = format!("potential: {}\n{report}", model.name());
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let ok = report.all_ok();
    writeln!(text, "all assumptions: {}", verdict(ok)).unwrap();
    ctx.write("check_potential.txt", &text)?;
    Ok(Outcome::new(ok, text))
}

fn run_scan(ctx: &Context, model: &PotentialModel, grid: &Grid) -> Result<RatioScanResult, CliError> {
    let cfg = &ctx.config;
    ctx.log(format!("scanning {} x {} (R, lambda) pairs", cfg.scan.r.len(), cfg.scan.lambda.len()));
    scan_lambda_star(model, grid, &cfg.bump(), &cfg.scan.r, &cfg.scan.lambda).map_err(|e| match e {
        FunctionalError::Argument(msg) => CliError::Usage(msg),
        other => usage(other),
    })
}

pub fn lambda_bounds(ctx: &Context) -> Result<Outcome, CliError> {
    let model = ctx.config.potential()?;
    let grid = ctx.config.grid()?;
    let scan = run_scan(ctx, &model, &grid)?;
    ctx.write("lambda_bounds.csv", &scan.to_csv())?;
    let best = scan.best_row();
    let mut text = String::new();
    writeln!(text, "best E/|C| = {:.9} at R = {}, lambda = {}", scan.best_ratio, scan.best_r, scan.best_lambda)
        .unwrap();
    writeln!(text, "UU condition at the best row: {} (ratio {:.6e})", verdict(best.uu_ok), best.uu_ratio).unwrap();
    writeln!(text, "Lambda0 floor observed: {:.9}", scan.lambda0_floor).unwrap();
    if scan.best_ratio < 1.0 {
        writeln!(text, "best_ratio < 1: yes").unwrap();
    } else {
        writeln!(text, "best_ratio < 1: no; no certificate at these parameters").unwrap();
    }
    ctx.write("lambda_bounds.txt", &text)?;
    Ok(Outcome::new(true, text))
}

/// One named certificate check on a converged profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.value <= self.bound
    }
}

/// Gradient, EL residual, speed agreement and boundary mass checks.
pub fn soliton_checks(profile: &SolitonProfile, grad_tol: f64) -> Vec<Check> {
    let c = profile.speed;
    vec![
        Check { name: "grad_norm", value: profile.grad_norm_final, bound: grad_tol },
        Check { name: "el_residual", value: profile.el_residual_l2, bound: EL_RESIDUAL_TOL },
        Check {
            name: "speed_agreement",
            value: (c - profile.fitted_speed).abs() / c.abs(),
            bound: SPEED_AGREEMENT_TOL,
        },
        Check { name: "boundary_mass_rel", value: profile.boundary_mass / profile.peak(), bound: BOUNDARY_MASS_TOL },
    ]
}

/// `|E_a − E_b| / max(|E_a|, |E_b|)`.
pub fn relative_energy_gap(a: &SolitonProfile, b: &SolitonProfile) -> f64 {
    let (ea, eb) = (a.invariants_at_min.energy, b.invariants_at_min.energy);
    (ea - eb).abs() / ea.abs().max(eb.abs())
}

fn history_csv(history: &[IterationRecord]) -> String {
    let mut out = String::from(IterationRecord::CSV_HEADER);
    out.push('\n');
    for rec in history {
        out.push_str(&rec.csv_row());
        out.push('\n');
    }
    out
}

const SWEEP_HEADER: &str = "delta,status,iterations,J,E,C,speed,fitted_speed,el_residual,grad_norm,boundary_mass_rel";

fn sweep_row(delta: f64, status: &str, p: Option<&SolitonProfile>) -> String {
    match p {
        Some(p) => {
            let inv = &p.invariants_at_min;
            format!(
                "{delta},{status},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                p.iterations,
                inv.j_value,
                inv.energy,
                inv.momentum,
                p.speed,
                p.fitted_speed,
                p.el_residual_l2,
                p.grad_norm_final,
                p.boundary_mass / p.peak(),
            )
        }
        None => format!("{delta},{status},,,,,,,,,"),
    }
}

/// Minimizes `J_δ` for every configured `δ` in parallel. Converged profiles
/// get a snapshot each; failures are reported per `δ` and make the exit
/// code 1 without suppressing the other results.
pub fn find_soliton(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let model = cfg.potential()?;
    let grid = cfg.grid()?;
    let deltas = &cfg.minimize.delta;

    let starts: Vec<(f64, f64)> = match (cfg.minimize.initial_r, cfg.minimize.initial_lambda) {
        (Some(r), Some(l)) => vec![(r, l); deltas.len()],
        _ => {
            let scan = run_scan(ctx, &model, &grid)?;
            deltas
                .iter()
                .map(|&d| {
                    let row = scan.best_row_for_delta(d);
                    (row.r, row.lambda)
                })
                .collect()
        }
    };

    let results: Vec<Result<SolitonProfile, MinimizeError>> = deltas
        .par_iter()
        .zip(starts.par_iter())
        .map(|(&delta, &(r, lambda))| {
            ctx.log(format!("delta = {delta}: starting from R = {r}, lambda = {lambda}"));
            let res = minimizer::minimize(&cfg.minimize_config(delta, r, lambda), &model, &grid);
            ctx.log(format!("delta = {delta}: finished"));
            res
        })
        .collect();

    let mut text = String::new();
    let mut sweep = format!("{SWEEP_HEADER}\n");
    let mut converged: Vec<&SolitonProfile> = Vec::new();
    let mut all_ok = true;
    for (&delta, res) in deltas.iter().zip(&results) {
        match res {
            Ok(p) => {
                ProfileSnapshot::from_profile(p).save(&ctx.out_dir()?.join(format!("profile_delta_{delta}.json")))?;
                ctx.write(&format!("minimize_delta_{delta}.csv"), &history_csv(&p.history))?;
                let checks = soliton_checks(p, cfg.minimize.grad_tol);
                let ok = checks.iter().all(Check::ok);
                all_ok &= ok;
                let inv = &p.invariants_at_min;
                writeln!(text, "delta = {delta}: converged in {} iterations", p.iterations).unwrap();
                writeln!(text, "  E = {:.12e}  C = {:.12e}  J = {:.12e}", inv.energy, inv.momentum, inv.j_value)
                    .unwrap();
                writeln!(text, "  c = {:.12e}  fitted c = {:.12e}", p.speed, p.fitted_speed).unwrap();
                for ch in &checks {
                    writeln!(text, "  {:<18} {:.3e} (bound {:.0e}) {}", ch.name, ch.value, ch.bound, verdict(ch.ok()))
                        .unwrap();
                }
                sweep.push_str(&sweep_row(delta, if ok { "converged" } else { "certificate_failed" }, Some(p)));
                converged.push(p);
            }
            Err(e) if e.is_degenerate_or_nonconvergent() => {
                all_ok = false;
                writeln!(text, "delta = {delta}: degenerate or non-convergent: {e}").unwrap();
                let last = match e {
                    MinimizeError::NotConverged { last, .. } | MinimizeError::LineSearchFailed { last, .. } => {
                        ctx.write(&format!("minimize_delta_{delta}.csv"), &history_csv(&last.history))?;
                        let inv = &last.invariants_at_min;
                        writeln!(
                            text,
                            "  last iterate: E = {:.6e}  C = {:.6e}  J = {:.12e}",
                            inv.energy, inv.momentum, inv.j_value
                        )
                        .unwrap();
                        Some(&**last)
                    }
                    _ => None,
                };
                let status = match e {
                    MinimizeError::DegenerateMomentum { .. } => "degenerate",
                    MinimizeError::LineSearchFailed { .. } => "line_search_failed",
                    _ => "not_converged",
                };
                sweep.push_str(&sweep_row(delta, status, last));
            }
            Err(e) => return Err(usage(format!("delta = {delta}: {e}"))),
        }
        sweep.push('\n');
    }
    ctx.write("find_soliton.csv", &sweep)?;

    if converged.len() >= 2 {
        let mut table = String::from("delta_a,delta_b,relative_energy_gap\n");
        writeln!(text, "pairwise relative energy gaps (bound > {DISTINCTNESS_TOL:.0e}):").unwrap();
        for (i, a) in converged.iter().enumerate() {
            for b in &converged[i + 1..] {
                let gap = relative_energy_gap(a, b);
                let ok = gap > DISTINCTNESS_TOL;
                all_ok &= ok;
                writeln!(table, "{},{},{gap:.17e}", a.delta, b.delta).unwrap();
                writeln!(text, "  delta {} vs {}: {gap:.3e} {}", a.delta, b.delta, verdict(ok)).unwrap();
            }
        }
        ctx.write("distinctness.csv", &table)?;
    }
    writeln!(text, "{} of {} runs converged", converged.len(), deltas.len()).unwrap();
    ctx.write("find_soliton.txt", &text)?;
    Ok(Outcome::new(all_ok, text))
}

/// `(u, −c·∂x u)` from a stored profile.
pub fn travelling_state(state: &FieldState, speed: f64) -> Result<FieldState, CliError> {
    let g = &state.grid;
    let ux = g.diff(&state.u, 1).map_err(usage)?;
    FieldState::new(g, state.u.clone(), ux.map(|d| -speed * d)).map_err(usage)
}

/// Transport summary of one run against a profile moving at `speed`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSummary {
    pub measured_speed: f64,
    pub speed_error: f64,
    pub shape_error: f64,
    pub energy_drift: f64,
    /// `max |C(t) − C(0)| / ‖𝐮₀‖²`, or the absolute drift for a zero state.
    pub momentum_drift: f64,
}

impl TransportSummary {
    pub fn new(record: &EvolutionRecord, speed: f64, x_norm_sq: f64) -> Self {
        let measured_speed = record.mean_speed();
        let speed_error =
            if speed != 0.0 { (measured_speed - speed).abs() / speed.abs() } else { measured_speed.abs() };
        let dc = record.momentum_drift();
        Self {
            measured_speed,
            speed_error,
            shape_error: record.max_shape_error(),
            energy_drift: record.energy_drift(),
            momentum_drift: if x_norm_sq > 0.0 { dc / x_norm_sq } else { dc },
        }
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check { name: "speed_error", value: self.speed_error, bound: TRANSPORT_SPEED_TOL },
            Check { name: "shape_error", value: self.shape_error, bound: SHAPE_ERROR_TOL },
            Check { name: "energy_drift", value: self.energy_drift, bound: ENERGY_DRIFT_TOL },
            Check { name: "momentum_drift", value: self.momentum_drift, bound: MOMENTUM_DRIFT_TOL },
        ]
    }
}

fn load_snapshot(ctx: &Context, path: &Path, grid: &Grid) -> Result<(ProfileSnapshot, FieldState), CliError> {
    let snap = ProfileSnapshot::load(path)?;
    let state = snap.state_on(grid)?;
    ctx.log(format!("loaded {} (delta = {}, c = {})", path.display(), snap.delta, snap.speed));
    Ok((snap, state))
}

/// Evolves `(u, −c·∂x u)` from a snapshot and compares it with the
/// translated profile.
pub fn evolve(ctx: &Context, snapshot: &Path) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let model = cfg.potential()?;
    let grid = cfg.grid()?;
    let (snap, stored) = load_snapshot(ctx, snapshot, &grid)?;
    let start = travelling_state(&stored, snap.speed)?;
    let ecfg = cfg.evolve_config(&grid, snap.speed);
    let reference = Reference::new(start.clone(), &model)?;
    let record = evolution::evolve(&start, &model, &ecfg, Some(&reference))?;
    ctx.write("evolve.csv", &record.to_csv())?;

    let summary = TransportSummary::new(&record, snap.speed, functionals::x_norm_sq(&start));
    let checks = summary.checks();
    let ok = checks.iter().all(Check::ok);
    let mut text = String::new();
    writeln!(text, "t_final = {:.12e}, dt = {:.6e}, steps = {}", ecfg.t_final, record.dt, record.steps).unwrap();
    writeln!(text, "snapshot speed c = {:.12e}", snap.speed).unwrap();
    writeln!(text, "measured speed   = {:.12e}", summary.measured_speed).unwrap();
    for ch in &checks {
        writeln!(text, "{:<15} {:.3e} (bound {:.0e}) {}", ch.name, ch.value, ch.bound, verdict(ch.ok())).unwrap();
    }
    writeln!(text, "transport certificate: {}", verdict(ok)).unwrap();
    ctx.write("evolve.txt", &text)?;
    Ok(Outcome::new(ok, text))
}

/// Stability statistics of one perturbation size.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub epsilon: f64,
    pub sup_orbit_distance: f64,
    /// `sup_t orbit_distance / (ε‖𝐮_δ‖)`; `None` for the `ε = 0` baseline.
    pub ratio: Option<f64>,
    pub liapunov_spread: Option<f64>,
}

impl StabilityRow {
    pub fn new(epsilon: f64, record: &EvolutionRecord, profile_norm: f64) -> Self {
        let sup = record.max_orbit_distance();
        Self {
            epsilon,
            sup_orbit_distance: sup,
            ratio: (epsilon > 0.0).then(|| sup / (epsilon * profile_norm)),
            liapunov_spread: record.liapunov_spread(),
        }
    }

    pub fn verdict(&self) -> &'static str {
        match self.ratio {
            None => "baseline",
            Some(_) if self.epsilon > SMALL_PERTURBATION => "outside_small_perturbation_regime",
            Some(r) if r <= ORBIT_RATIO_TOL && self.liapunov_spread.is_none_or(|s| s <= LIAPUNOV_TOL) => "pass",
            Some(_) => "FAIL",
        }
    }
}

/// Runs one perturbed evolution per configured `ε`. Task `i` draws its noise
/// from stream `i` of the seeded generator.
pub fn stability(ctx: &Context, snapshot: &Path) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    if cfg.evolve.epsilon.is_empty() {
        return Err(CliError::Config("evolve.epsilon must list at least one value".into()));
    }
    let model = cfg.potential()?;
    let grid = cfg.grid()?;
    let (snap, state) = load_snapshot(ctx, snapshot, &grid)?;
    let profile = SolitonProfile::certify(state, &model, snap.delta, snap.grad_norm, 0, Vec::new())
        .map_err(|e| CliError::Usage(format!("snapshot is not a usable profile: {e}")))?;
    let ecfg = cfg.evolve_config(&grid, snap.speed);
    let norm = functionals::x_norm_sq(&profile.state).sqrt();

    let records: Vec<EvolutionRecord> = cfg
        .evolve
        .epsilon
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            ctx.log(format!("epsilon = {eps}: evolving"));
            evolution::stability_experiment(&profile, &model, eps, &ecfg, cfg.seed, i as u64)
        })
        .collect::<Result<_, _>>()?;

    let mut table = String::from("epsilon,sup_orbit_distance,ratio,liapunov_spread,verdict\n");
    let mut text = format!("t_final = {:.12e}, dt = {:.6e}, |u_delta| = {:.12e}\n", ecfg.t_final, records[0].dt, norm);
    let mut ok = true;
    for (&eps, record) in cfg.evolve.epsilon.iter().zip(&records) {
        ctx.write(&format!("stability_eps_{eps}.csv"), &record.to_csv())?;
        let row = StabilityRow::new(eps, record, norm);
        let verdict = row.verdict();
        ok &= verdict != "FAIL";
        let ratio = row.ratio.map_or("baseline".to_string(), |r| format!("{r:.17e}"));
        let spread = row.liapunov_spread.map_or(String::new(), |s| format!("{s:.17e}"));
        writeln!(table, "{eps},{:.17e},{ratio},{spread},{verdict}", row.sup_orbit_distance).unwrap();
        match row.ratio {
            None => writeln!(
                text,
                "epsilon = {eps}: transport-only baseline, sup orbit distance = {:.3e}",
                row.sup_orbit_distance
            ),
            Some(r) => writeln!(
                text,
                "epsilon = {eps}: sup orbit distance / (eps |u|) = {r:.4} (bound {ORBIT_RATIO_TOL}), Liapunov spread = {} -> {verdict}",
                row.liapunov_spread.map_or("n/a".to_string(), |s| format!("{s:.3e}")),
            ),
        }
        .unwrap();
    }
    writeln!(text, "stability certificate: {}", verdict(ok)).unwrap();
    ctx.write("stability.csv", &table)?;
    ctx.write("stability.txt", &text)?;
    Ok(Outcome::new(ok, text))
}
