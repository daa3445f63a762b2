//! Versioned JSON snapshot of a soliton profile.
//!
//! Scalars are stored as JSON numbers (shortest round-trip form); the fields
//! `u` and `v` are hex strings of little-endian `f64` bytes. The checksum is
//! the SHA-256 of the format version, the grid, every scalar's bits and the
//! raw field bytes, in declaration order.

use std::fs;
use std::path::Path;

use beam_soliton::{Field, FieldState, Grid, SolitonProfile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridInfo {
    pub half_length: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSnapshot {
    pub grid: GridInfo,
    pub delta: f64,
    pub speed: f64,
    pub fitted_speed: f64,
    pub energy: f64,
    pub momentum: f64,
    pub j_value: f64,
    pub el_residual: f64,
    pub grad_norm: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    format_version: u32,
    grid: GridInfo,
    delta: f64,
    speed: f64,
    fitted_speed: f64,
    energy: f64,
    momentum: f64,
    j_value: f64,
    el_residual: f64,
    grad_norm: f64,
    u: String,
    v: String,
    checksum: String,
}

fn encode(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|x| x.to_le_bytes()).collect()
}

fn decode(name: &str, text: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let bytes = hex::decode(text).map_err(|e| CliError::Load(format!("field {name}: {e}")))?;
    if bytes.len() != 8 * n {
        return Err(CliError::Load(format!(
            "field {name} holds {} bytes, expected {} for {n} points",
            bytes.len(),
            8 * n
        )));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

impl ProfileSnapshot {
    pub fn from_profile(profile: &SolitonProfile) -> Self {
        let inv = &profile.invariants_at_min;
        let g = &profile.state.grid;
        Self {
            grid: GridInfo { half_length: g.half_length(), n_points: g.n_points() },
            delta: profile.delta,
            speed: profile.speed,
            fitted_speed: profile.fitted_speed,
            energy: inv.energy,
            momentum: inv.momentum,
            j_value: inv.j_value,
            el_residual: profile.el_residual_l2,
            grad_norm: profile.grad_norm_final,
            u: profile.state.u.values().to_vec(),
            v: profile.state.v.values().to_vec(),
        }
    }

    /// The all-zero profile on `grid`.
    pub fn zero(grid: &Grid, delta: f64) -> Self {
        Self {
            grid: GridInfo { half_length: grid.half_length(), n_points: grid.n_points() },
            delta,
            speed: 0.0,
            fitted_speed: 0.0,
            energy: 0.0,
            momentum: 0.0,
            j_value: 0.0,
            el_residual: 0.0,
            grad_norm: 0.0,
            u: vec![0.0; grid.n_points()],
            v: vec![0.0; grid.n_points()],
        }
    }

    fn scalars(&self) -> [f64; 8] {
        [
            self.delta,
            self.speed,
            self.fitted_speed,
            self.energy,
            self.momentum,
            self.j_value,
            self.el_residual,
            self.grad_norm,
        ]
    }

    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(FORMAT_VERSION.to_le_bytes());
        h.update(self.grid.half_length.to_le_bytes());
        h.update((self.grid.n_points as u64).to_le_bytes());
        for s in self.scalars() {
            h.update(s.to_le_bytes());
        }
        h.update(encode(&self.u));
        h.update(encode(&self.v));
        hex::encode(h.finalize())
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        if let Some(bad) = self.scalars().iter().find(|s| !s.is_finite()) {
            return Err(CliError::Load(format!("cannot store non-finite scalar {bad}")));
        }
        let wire = Wire {
            format_version: FORMAT_VERSION,
            grid: self.grid,
            delta: self.delta,
            speed: self.speed,
            fitted_speed: self.fitted_speed,
            energy: self.energy,
            momentum: self.momentum,
            j_value: self.j_value,
            el_residual: self.el_residual,
            grad_norm: self.grad_norm,
            u: hex::encode(encode(&self.u)),
            v: hex::encode(encode(&self.v)),
            checksum: self.checksum(),
        };
        let mut text = serde_json::to_string_pretty(&wire).map_err(|e| CliError::Load(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let probe: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Load(format!("malformed snapshot: {e}")))?;
        match probe.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(CliError::Load(format!(
                    "unsupported snapshot format_version {v} (this build reads {FORMAT_VERSION})"
                )))
            }
            None => return Err(CliError::Load("snapshot has no integer format_version".into())),
        }
        let wire: Wire = serde_json::from_str(text).map_err(|e| CliError::Load(format!("malformed snapshot: {e}")))?;
        let n = wire.grid.n_points;
        let snap = Self {
            grid: wire.grid,
            delta: wire.delta,
            speed: wire.speed,
            fitted_speed: wire.fitted_speed,
            energy: wire.energy,
            momentum: wire.momentum,
            j_value: wire.j_value,
            el_residual: wire.el_residual,
            grad_norm: wire.grad_norm,
            u: decode("u", &wire.u, n)?,
            v: decode("v", &wire.v, n)?,
        };
        let actual = snap.checksum();
        if actual != wire.checksum {
            return Err(CliError::Load(format!("checksum mismatch: stored {}, computed {actual}", wire.checksum)));
        }
        Ok(snap)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json()?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Load(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Load(msg) => CliError::Load(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The stored state, after checking it lives on `grid`.
    pub fn state_on(&self, grid: &Grid) -> Result<FieldState, CliError> {
        if self.grid.n_points != grid.n_points() || self.grid.half_length != grid.half_length() {
            return Err(CliError::Usage(format!(
                "snapshot grid (L = {}, n = {}) does not match the configured grid (L = {}, n = {})",
                self.grid.half_length,
                self.grid.n_points,
                grid.half_length(),
                grid.n_points()
            )));
        }
        FieldState::new(grid, Field::from_vec(self.u.clone()), Field::from_vec(self.v.clone()))
            .map_err(|e| CliError::Load(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ProfileSnapshot {
        let g = Grid::new(10.0, 64).unwrap();
        let mut s = ProfileSnapshot::zero(&g, 0.1);
        for (i, x) in g.points().enumerate() {
            s.u[i] = (-x * x).exp() / 3.0;
            s.v[i] = -x * 1e-300;
        }
        s.u[5] = -0.0;
        s.speed = std::f64::consts::PI;
        s.energy = 1.0 / 7.0;
        s.el_residual = 5e-324;
        s
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let text = s.to_json().unwrap();
        let back = ProfileSnapshot::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.u), bits(&s.u));
        assert_eq!(bits(&back.v), bits(&s.v));
        assert_eq!(back.el_residual.to_bits(), s.el_residual.to_bits());
    }

    #[test]
    fn tampering_is_detected() {
        let text = sample().to_json().unwrap();
        let tampered = text.replacen("\"delta\": 0.1", "\"delta\": 0.2", 1);
        assert_ne!(tampered, text);
        let err = ProfileSnapshot::from_json(&tampered).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_versions_are_rejected() {
        let text = sample().to_json().unwrap().replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        let err = ProfileSnapshot::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("format_version 2"), "{err}");
    }

    #[test]
    fn short_payload_is_rejected() {
        let mut s = sample();
        s.u.pop();
        let err = ProfileSnapshot::from_json(&s.to_json().unwrap()).unwrap_err();
        assert!(err.to_string().contains("field u"), "{err}");
    }

    #[test]
    fn grid_mismatch_is_a_usage_error() {
        let s = sample();
        let other = Grid::new(10.0, 128).unwrap();
        assert_eq!(s.state_on(&other).unwrap_err().exit_code(), 2);
        let own = Grid::new(10.0, 64).unwrap();
        assert_eq!(s.state_on(&own).unwrap().u.values(), &s.u[..]);
    }
}
