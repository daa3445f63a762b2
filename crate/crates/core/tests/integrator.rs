use beam_soliton::evolution::{default_dt, evolve, step, EvolveConfig};
use beam_soliton::functionals::x_norm_sq;
use beam_soliton::{FieldState, Grid, PotentialModel};

fn grid() -> Grid {
    Grid::new(40.0, 1024).unwrap()
}

fn free() -> PotentialModel {
    PotentialModel::custom("free", |_| 0.0, |_| 0.0, 0.1, 1.0, 1.0).unwrap()
}

/// A localized, non-stationary state with both components active.
fn packet(g: &Grid, height: f64) -> FieldState {
    let u = g.sample(|x| height * (-x * x / 4.0).exp() * (0.9 * x).cos());
    let v = g.sample(|x| 0.8 * height * x * (-x * x / 5.0).exp());
    FieldState::new(g, u, v).unwrap()
}

fn distance(a: &FieldState, b: &FieldState) -> f64 {
    (&a.u - &b.u).max_abs().max((&a.v - &b.v).max_abs())
}

#[test]
fn free_modes_keep_their_oscillator_amplitude() {
    let g = grid();
    let s0 = packet(&g, 1.0);
    let dt = default_dt(&g);
    let amplitude = |s: &FieldState| -> Vec<f64> {
        let uh = g.to_spectral(&s.u);
        let vh = g.to_spectral(&s.v);
        g.wavenumbers()
            .iter()
            .zip(uh.iter().zip(&vh))
            .map(|(k, (u, v))| k.powi(4) * u.norm_sqr() + v.norm_sqr())
            .collect()
    };
    let total: f64 = amplitude(&s0).iter().sum();
    let mut s = s0;
    let mut before = amplitude(&s);
    for _ in 0..200 {
        s = step(&s, &free(), dt).unwrap();
        let after = amplitude(&s);
        let drift = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-12 * total, "{drift:e}");
        before = after;
    }
}

#[test]
fn linear_solution_is_exact() {
    let g = grid();
    let dt = default_dt(&g);
    for m in [1usize, 7, 40, 200] {
        let k = std::f64::consts::PI / g.half_length() * m as f64;
        let s0 = FieldState::new(&g, g.sample(|x| (k * x).sin()), g.zeros()).unwrap();
        let cfg = EvolveConfig { dt, t_final: 100.0 * dt, sample_stride: 100, ..EvolveConfig::for_grid(&g, 1.0) };
        let rec = evolve(&s0, &free(), &cfg, None).unwrap();
        let t = rec.times.last().copied().unwrap();
        let exact = g.sample(|x| (k * k * t).cos() * (k * x).sin());
        assert!((&rec.final_state.u - &exact).max_abs() <= 1e-8, "mode {m}");
    }
}

#[test]
fn steps_are_time_reversible() {
    let g = grid();
    let dt = default_dt(&g);
    for model in [PotentialModel::bridge_smooth(), PotentialModel::bridge_piecewise()] {
        let s0 = packet(&g, 3.0);
        let mut s = s0.clone();
        for _ in 0..300 {
            s = step(&s, &model, dt).unwrap();
        }
        assert!(distance(&s, &s0) > 1e-3);
        for _ in 0..300 {
            s = step(&s, &model, -dt).unwrap();
        }
        let scale = s0.u.max_abs().max(s0.v.max_abs());
        assert!(distance(&s, &s0) <= 1e-9 * scale, "{}: {:e}", model.name(), distance(&s, &s0));
    }
}

#[test]
fn evolution_commutes_with_translations() {
    let g = grid();
    let model = PotentialModel::bridge_smooth();
    let s0 = packet(&g, 3.0);
    let cfg = EvolveConfig { t_final: 0.5, ..EvolveConfig::for_grid(&g, 0.5) };
    for m in [1isize, 37, -200] {
        let a = evolve(&s0.rolled(m), &model, &cfg, None).unwrap().final_state;
        let b = evolve(&s0, &model, &cfg, None).unwrap().final_state.rolled(m);
        assert!(distance(&a, &b) <= 1e-9, "shift {m}: {:e}", distance(&a, &b));
    }
}

/// Energy drift over 10⁴ default steps, then the same horizon at dt/2.
fn drift_pair(model: &PotentialModel, height: f64) -> (f64, f64, f64) {
    let g = grid();
    let s0 = packet(&g, height);
    let dt = default_dt(&g);
    let cfg = EvolveConfig { dt, t_final: 1e4 * dt, sample_stride: 50, ..EvolveConfig::for_grid(&g, 1.0) };
    let coarse = evolve(&s0, model, &cfg, None).unwrap();
    let fine = evolve(&s0, model, &EvolveConfig { dt: 0.5 * dt, ..cfg }, None).unwrap();
    let norm2 = x_norm_sq(&s0);
    (coarse.energy_drift(), fine.energy_drift(), coarse.momentum_drift() / norm2)
}

#[test]
fn smooth_potential_conserves_to_second_order() {
    let (coarse, fine, dc) = drift_pair(&PotentialModel::bridge_smooth(), 4.0);
    assert!(coarse <= 1e-6, "{coarse:e}");
    assert!(dc <= 1e-8, "{dc:e}");
    assert!(coarse >= 3.0 * fine, "{coarse:e} vs {fine:e}");
}

#[test]
fn piecewise_potential_conserves_under_refinement() {
    let (coarse, fine, dc) = drift_pair(&PotentialModel::bridge_piecewise(), 4.0);
    assert!(coarse <= 1e-6, "{coarse:e}");
    // The kink of W' at s = 1 aliases, so ∫W'(u)·u_x no longer vanishes
    // exactly on the grid; C drifts at a resolution-limited rate.
    assert!(dc <= 1e-5, "{dc:e}");
    assert!(coarse >= 3.0 * fine, "{coarse:e} vs {fine:e}");
}
