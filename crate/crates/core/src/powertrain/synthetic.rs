//! Parameterized synthetic efficiency maps.
//!
//! These stand in for measured characterization data. Their shapes are smooth
//! bowls around a peak, clipped to a floor, and are labeled `synthetic`.

use serde::{Deserialize, Serialize};

use super::{rpm_to_rad_s, EfficiencyMap, GenSet, MotorDrive};
use crate::error::Result;

/// A bowl-shaped efficiency surface:
/// `peak - (peak - floor) * (ds^2 + dt^2)`, clipped at `floor`, where `ds` and
/// `dt` are offsets from the peak location scaled by `speed_scale` and
/// `torque_scale`. A nonzero `friction_torque` scales the bowl by
/// `T / (T + T_f)` relative to its value at the peak torque, which makes
/// light-load operation of a combustion engine as poor as it is in practice.
/// Nodes whose shaft power exceeds `power_limit_kw` are infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paraboloid {
    pub speed_axis: Vec<f64>,
    pub torque_axis: Vec<f64>,
    pub peak: f64,
    pub floor: f64,
    pub peak_speed: f64,
    pub peak_torque: f64,
    pub speed_scale: f64,
    pub torque_scale: f64,
    /// Nm.
    pub friction_torque: f64,
    pub power_limit_kw: Option<f64>,
}

impl Paraboloid {
    pub fn efficiency(&self, speed: f64, torque: f64) -> f64 {
        let ds = (speed - self.peak_speed) / self.speed_scale;
        let dt = (torque - self.peak_torque) / self.torque_scale;
        let bowl = (self.peak - (self.peak - self.floor) * (ds * ds + dt * dt)).max(self.floor);
        if self.friction_torque > 0.0 {
            let load = |t: f64| t.max(0.0) / (t.max(0.0) + self.friction_torque);
            (bowl * load(torque) / load(self.peak_torque)).min(self.peak)
        } else {
            bowl
        }
    }

    pub fn build(&self, label: &str) -> Result<EfficiencyMap> {
        EfficiencyMap::from_fn(
            format!("{label} (synthetic)"),
            self.speed_axis.clone(),
            self.torque_axis.clone(),
            |s, t| {
                let shaft_kw = t * rpm_to_rad_s(s) / 1000.0;
                match self.power_limit_kw {
                    Some(lim) if shaft_kw > lim => None,
                    _ => Some(self.efficiency(s, t)),
                }
            },
        )
    }
}

fn axis(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Traction motor: 94 % peak near mid speed and torque.
pub fn motor_params() -> Paraboloid {
    Paraboloid {
        speed_axis: axis(0.0, 10_000.0, 500.0),
        torque_axis: axis(0.0, 350.0, 25.0),
        peak: 94.0,
        floor: 70.0,
        peak_speed: 4500.0,
        peak_torque: 150.0,
        speed_scale: 7000.0,
        torque_scale: 320.0,
        friction_torque: 0.0,
        power_limit_kw: Some(150.0),
    }
}

/// Diesel engine: 36 % peak, falling off steeply at light load.
pub fn engine_params() -> Paraboloid {
    Paraboloid {
        speed_axis: axis(1000.0, 3400.0, 200.0),
        torque_axis: axis(10.0, 180.0, 10.0),
        peak: 36.0,
        floor: 15.0,
        peak_speed: 2600.0,
        peak_torque: 75.0,
        speed_scale: 2000.0,
        torque_scale: 130.0,
        friction_torque: 15.0,
        power_limit_kw: None,
    }
}

/// Generator: 92 % peak.
pub fn generator_params() -> Paraboloid {
    Paraboloid {
        speed_axis: axis(2500.0, 9500.0, 500.0),
        torque_axis: axis(0.0, 70.0, 5.0),
        peak: 92.0,
        floor: 70.0,
        peak_speed: 6500.0,
        peak_torque: 40.0,
        speed_scale: 7000.0,
        torque_scale: 90.0,
        friction_torque: 0.0,
        power_limit_kw: None,
    }
}

pub const DEFAULT_BELT_RATIO: f64 = 2.7;
pub const DEFAULT_GEAR_RATIO: f64 = 7.82;
pub const DEFAULT_WHEEL_RADIUS: f64 = 0.33;
pub const DEFAULT_MOTOR_PEAK_KW: f64 = 120.0;

pub fn default_motor_drive() -> Result<MotorDrive> {
    Ok(MotorDrive {
        map: motor_params().build("motor")?,
        gear_ratio: DEFAULT_GEAR_RATIO,
        wheel_radius: DEFAULT_WHEEL_RADIUS,
        peak_power: DEFAULT_MOTOR_PEAK_KW,
    })
}

pub fn default_genset() -> Result<GenSet> {
    GenSet::new(
        engine_params().build("engine")?,
        generator_params().build("generator")?,
        DEFAULT_BELT_RATIO,
        1.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_peaks() {
        let max = |m: &EfficiencyMap| m.nodes().filter_map(|n| n.2).fold(0.0, f64::max);
        assert!((max(&motor_params().build("m").unwrap()) - 94.0).abs() < 0.5);
        assert!((max(&engine_params().build("e").unwrap()) - 36.0).abs() < 0.5);
        assert!((max(&generator_params().build("g").unwrap()) - 92.0).abs() < 0.5);
        assert!(motor_params()
            .build("m")
            .unwrap()
            .label()
            .contains("synthetic"));
    }
}
