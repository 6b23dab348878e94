//! Longitudinal road-load model: tractive force and wheel power over a cycle.

use serde::{Deserialize, Serialize};

use crate::cycle::{DriveCycle, DEFAULT_IDLE_SPEED};
use crate::error::{domain, validation, Result};

/// Vehicle road-load parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// Curb-equivalent vehicle mass, kg.
    pub mass: f64,
    /// Test mass including payload and trailer, kg.
    pub test_mass: f64,
    /// Rotating-inertia factor (inertial mass = mass * factor).
    pub inertia_factor: f64,
    /// Drag coefficient times frontal area, m^2.
    pub cd_af: f64,
    /// Rolling-resistance coefficient.
    pub crr: f64,
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Gravitational constant, N/kg.
    pub gravity: f64,
    /// Rolling resistance is applied only above this speed, m/s.
    pub idle_speed: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 2100.0,
            test_mass: 2800.0,
            inertia_factor: 1.04,
            cd_af: 0.75,
            crr: 0.009,
            air_density: 1.20,
            gravity: 9.81,
            idle_speed: DEFAULT_IDLE_SPEED,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.mass > 0.0, "mass must be positive"),
            (
                self.test_mass >= self.mass,
                "test mass must be at least the vehicle mass",
            ),
            (
                self.inertia_factor >= 1.0,
                "rotating-inertia factor must be >= 1",
            ),
            (self.cd_af > 0.0, "CdAf must be positive"),
            (self.crr > 0.0 && self.crr < 0.1, "Crr must lie in (0, 0.1)"),
            (self.air_density > 0.0, "air density must be positive"),
            (self.gravity > 0.0, "gravity must be positive"),
            (self.idle_speed >= 0.0, "idle speed must be nonnegative"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(validation(*msg)),
            None => Ok(()),
        }
    }
}

/// Force at the wheels needed to follow `v`/`accel` on `grade_deg`, N.
///
/// Field ranges are not re-validated so that loss-free parameterizations
/// (zero drag or rolling resistance) remain usable.
pub fn tractive_force(
    p: &VehicleParams,
    mass: f64,
    v: f64,
    accel: f64,
    grade_deg: f64,
) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(domain(format!("mass must be positive, got {mass}")));
    }
    if !(v >= 0.0) {
        return Err(domain(format!("speed must be nonnegative, got {v}")));
    }
    let inertial = mass * p.inertia_factor * accel;
    let grade = mass * p.gravity * grade_deg.to_radians().sin();
    let aero = 0.5 * p.air_density * p.cd_af * v * v;
    let rolling = if v > p.idle_speed {
        mass * p.gravity * p.crr
    } else {
        0.0
    };
    Ok(inertial + grade + aero + rolling)
}

/// Central-difference acceleration, one-sided at the ends, m/s^2.
pub fn accelerations(c: &DriveCycle) -> Vec<f64> {
    let s = c.samples();
    let n = s.len();
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (s[b].v - s[a].v) / (s[b].t - s[a].t)
        })
        .collect()
}

/// Per-sample wheel power `(t [s], P [kW])`; negative values are braking.
pub fn wheel_power_series(p: &VehicleParams, c: &DriveCycle, mass: f64) -> Result<Vec<(f64, f64)>> {
    if c.len() < 2 {
        return Err(validation("wheel power needs at least 2 samples"));
    }
    let acc = accelerations(c);
    c.samples()
        .iter()
        .zip(acc)
        .map(|(s, a)| {
            Ok((
                s.t,
                tractive_force(p, mass, s.v, a, s.grade)? * s.v / 1000.0,
            ))
        })
        .collect()
}
