//! Vehicle bundle and the wheel-to-bus power chain shared by the rule-based
//! simulation and the demand builder.

use crate::cycle::DriveCycle;
use crate::dynamics::{wheel_power_series, VehicleParams};
use crate::error::{domain, Error, Result};
use crate::powertrain::{BatteryParams, MotorDrive};

#[derive(Debug, Clone, PartialEq)]
pub struct Powertrain {
    pub vehicle: VehicleParams,
    pub motor: MotorDrive,
    pub battery: BatteryParams,
}

impl Powertrain {
    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.battery.validate()
    }
}

/// Wheel and motor-electrical power at one cycle sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusSample {
    pub t: f64,
    pub v: f64,
    /// Calibrated wheel power, kW.
    pub wheel_kw: f64,
    /// Motor electrical power on the bus, kW; negative when regenerating.
    pub motor_kw: f64,
}

/// Wheel power at test mass, scaled by `calibration`, converted through the
/// motor map. Envelope violations report the offending sample index.
pub fn bus_series(pt: &Powertrain, c: &DriveCycle, calibration: f64) -> Result<Vec<BusSample>> {
    if !(calibration > 0.0) {
        return Err(domain(format!(
            "calibration must be positive, got {calibration}"
        )));
    }
    let wheel = wheel_power_series(&pt.vehicle, c, pt.vehicle.test_mass)?;
    wheel
        .iter()
        .zip(c.samples())
        .enumerate()
        .map(|(step, (&(t, kw), s))| {
            let wheel_kw = kw * calibration;
            let motor_kw =
                pt.motor
                    .electrical_power(s.v, wheel_kw)
                    .map_err(|e| Error::Envelope {
                        step,
                        msg: e.to_string(),
                    })?;
            Ok(BusSample {
                t,
                v: s.v,
                wheel_kw,
                motor_kw,
            })
        })
        .collect()
}
