use std::sync::OnceLock;

use beam_soliton::evolution::{evolve, stability_experiment, EvolveConfig, Reference};
use beam_soliton::functionals::{hylomorphic_j, scaled_bump_state, scan_lambda_star, x_norm_sq};
use beam_soliton::minimizer::{minimize, MinimizeConfig, SolitonProfile};
use beam_soliton::{BumpSpec, FieldState, Grid, PotentialModel, RatioScanResult};

fn grid() -> Grid {
    Grid::new(40.0, 1024).unwrap()
}

fn r_values() -> Vec<f64> {
    (0..30).map(|i| 200f64.powf(i as f64 / 29.0)).collect()
}

fn scan() -> &'static RatioScanResult {
    static S: OnceLock<RatioScanResult> = OnceLock::new();
    S.get_or_init(|| {
        let lambdas: Vec<f64> = (1..=36).map(f64::from).collect();
        scan_lambda_star(&PotentialModel::bridge_smooth(), &grid(), &BumpSpec::default(), &r_values(), &lambdas)
            .unwrap()
    })
}

fn profile() -> &'static SolitonProfile {
    static P: OnceLock<SolitonProfile> = OnceLock::new();
    P.get_or_init(|| {
        let delta = 0.001;
        let row = scan().best_row_for_delta(delta);
        let cfg = MinimizeConfig { delta, initial_r: row.r, initial_lambda: row.lambda, ..Default::default() };
        minimize(&cfg, &PotentialModel::bridge_smooth(), &grid()).unwrap()
    })
}

#[test]
fn scaled_bumps_certify_ratio_below_one() {
    let s = scan();
    assert!(s.best_ratio < 0.95, "{}", s.best_ratio);
    assert!(s.best_row().uu_ok);
    assert!(s.lambda0_floor >= 1.0 - 1e-9);
    assert!(s.table.iter().all(|r| r.lambda0_ratio >= 1.0 - 1e-9 && r.momentum > 0.0));
    for row in s.table.iter().filter(|r| r.lambda >= 8.0) {
        let predicted = s.base_uu_ratio / (row.lambda * row.lambda);
        assert!((row.uu_ratio - predicted).abs() <= 1e-6 * predicted, "lambda {}", row.lambda);
        assert_eq!(row.uu_ok, predicted < 0.5);
    }

    let delta = 0.1;
    let best = scaled_bump_state(&grid(), &BumpSpec::default(), s.best_r, s.best_lambda).unwrap();
    let j = hylomorphic_j(&best, &PotentialModel::bridge_smooth(), delta).unwrap();
    assert!(j < 1.0 + delta * s.best_row().energy);

    let csv = s.to_csv();
    assert!(csv.starts_with("R,lambda,ratio,lambda0_ratio,uu_ok\n"));
    assert_eq!(csv.lines().count(), s.table.len() + 1);
}

#[test]
fn small_amplitudes_give_no_certificate() {
    let r: Vec<f64> = vec![0.01, 0.05, 0.1];
    let lambdas: Vec<f64> = (1..=36).map(f64::from).collect();
    let s = scan_lambda_star(&PotentialModel::bridge_smooth(), &grid(), &BumpSpec::default(), &r, &lambdas).unwrap();
    assert!(s.best_ratio >= 1.0);
}

#[test]
fn profile_travels_rigidly() {
    let p = profile();
    let g = grid();
    let m = PotentialModel::bridge_smooth();
    let ux = g.diff(&p.state.u, 1).unwrap();
    let start = FieldState::new(&g, p.state.u.clone(), &ux * -p.speed).unwrap();
    let cfg = EvolveConfig::for_grid(&g, 20.0 / p.speed);
    let rec = evolve(&start, &m, &cfg, Some(&Reference::from_profile(p))).unwrap();
    assert!(rec.max_shape_error() <= 1e-3, "{:e}", rec.max_shape_error());
    assert!((rec.mean_speed() - p.speed).abs() <= 0.01 * p.speed);
    assert!(rec.energy_drift() <= 1e-6);
    assert!(rec.momentum_drift() <= 1e-8 * x_norm_sq(&start));
    // Travel distance 20 in a box of length 80: no wrap-around.
    let travelled = rec.shift_series.last().unwrap() - rec.shift_series[0];
    assert!((travelled - 20.0).abs() < 0.2, "{travelled}");
}

#[test]
fn perturbed_profile_stays_near_its_orbit() {
    let p = profile();
    let g = grid();
    let m = PotentialModel::bridge_smooth();
    let norm = x_norm_sq(&p.state).sqrt();
    let cfg = EvolveConfig::for_grid(&g, 20.0 / p.speed);

    let base = stability_experiment(p, &m, 0.0, &cfg, 3, 0).unwrap();
    assert!(base.max_orbit_distance() <= 1e-3 * norm);

    let eps = 1e-2;
    let rec = stability_experiment(p, &m, eps, &cfg, 3, 1).unwrap();
    assert!(rec.orbit_distance_series[0] > 0.5 * eps * norm);
    assert!(rec.max_orbit_distance() <= 5.0 * eps * norm);
    let spread = rec.liapunov_spread().expect("perturbation moves the invariants");
    assert!(spread <= 1e-6, "{spread:e}");
}
