//! Component models: efficiency relations and maps, gen-set merging, and the
//! internal-resistance battery.

mod battery;
mod map;
pub mod synthetic;

pub use battery::{
    battery_power, current_for_terminal_power, integrate_soc, BatteryParams, BatteryState,
    SocIntegration,
};
pub use map::{
    generator_point, load_characterization, load_map, load_map_str, map_from_characterization,
    map_lookup, merge_gen_set, rpm_to_rad_s, write_map, CharacterizationRow, EfficiencyMap,
    MachineKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Diesel lower heating value, kWh/g (42.6 MJ/kg).
pub const DIESEL_LHV_KWH_PER_G: f64 = 0.011833;

/// Motor efficiency from a characterization point, %.
pub fn motor_efficiency(torque: f64, speed_rpm: f64, volts: f64, amps: f64) -> Result<f64> {
    let electrical = volts * amps;
    if !(electrical > 0.0) {
        return Err(domain(format!(
            "electrical input must be positive, got {electrical} W"
        )));
    }
    let mechanical = torque * rpm_to_rad_s(speed_rpm);
    if mechanical < 0.0 {
        return Err(domain("motor point is not in the motoring quadrant"));
    }
    let eff = mechanical / electrical * 100.0;
    if eff > 100.0 {
        return Err(Error::Characterization(format!(
            "motor output {mechanical:.1} W exceeds input {electrical:.1} W"
        )));
    }
    Ok(eff)
}

/// Engine efficiency from brake-specific fuel consumption (g/kWh) and heating
/// value (kWh/g), %.
pub fn engine_efficiency(bsfc: f64, lhv: f64) -> Result<f64> {
    if !(bsfc > 0.0) || !(lhv > 0.0) {
        return Err(domain(format!(
            "BSFC and LHV must be positive, got {bsfc} and {lhv}"
        )));
    }
    Ok(100.0 / (bsfc * lhv))
}

/// Generator efficiency from a characterization point, %.
pub fn generator_efficiency(volts: f64, amps: f64, torque: f64, speed_rpm: f64) -> Result<f64> {
    let mechanical = torque * rpm_to_rad_s(speed_rpm);
    if !(mechanical > 0.0) {
        return Err(domain(format!(
            "mechanical input must be positive, got {mechanical} W"
        )));
    }
    let electrical = volts * amps;
    let eff = electrical / mechanical * 100.0;
    if eff > 100.0 {
        return Err(Error::Characterization(format!(
            "generator output {electrical:.1} W exceeds input {mechanical:.1} W"
        )));
    }
    Ok(eff)
}

/// A single gen-set operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSetPoint {
    /// rpm.
    pub engine_speed: f64,
    /// Nm.
    pub engine_torque: f64,
    /// Fuel-to-electric efficiency, %.
    pub combined_efficiency: f64,
    /// kW delivered to the bus.
    pub electrical_power: f64,
}

impl GenSetPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.combined_efficiency > 0.0 && self.combined_efficiency <= 100.0) {
            return Err(domain(format!(
                "gen-set efficiency {} outside (0, 100]",
                self.combined_efficiency
            )));
        }
        if !(self.electrical_power >= 0.0) {
            return Err(domain("gen-set electrical power must be nonnegative"));
        }
        Ok(())
    }
}

/// Engine, generator and belt coupling of the range extender.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSet {
    pub engine: EfficiencyMap,
    pub generator: EfficiencyMap,
    pub belt_ratio: f64,
    pub belt_efficiency: f64,
    pub merged: EfficiencyMap,
}

impl GenSet {
    pub fn new(
        engine: EfficiencyMap,
        generator: EfficiencyMap,
        belt_ratio: f64,
        belt_efficiency: f64,
    ) -> Result<Self> {
        let merged = merge_gen_set(&engine, &generator, belt_ratio, belt_efficiency)?;
        Ok(Self {
            engine,
            generator,
            belt_ratio,
            belt_efficiency,
            merged,
        })
    }

    /// Evaluates the operating point at an engine speed and torque.
    pub fn point(&self, engine_speed: f64, engine_torque: f64) -> Result<GenSetPoint> {
        let (gs, gt) = generator_point(
            engine_speed,
            engine_torque,
            self.belt_ratio,
            self.belt_efficiency,
        );
        let gen_eff = map_lookup(&self.generator, gs, gt)?;
        let eng_eff = map_lookup(&self.engine, engine_speed, engine_torque)?;
        let shaft_kw = engine_torque * rpm_to_rad_s(engine_speed) / 1000.0;
        Ok(GenSetPoint {
            engine_speed,
            engine_torque,
            combined_efficiency: eng_eff * gen_eff * self.belt_efficiency / 100.0,
            electrical_power: shaft_kw * self.belt_efficiency * gen_eff / 100.0,
        })
    }

    /// Finds the engine torque at `engine_speed` that delivers `electrical_kw`,
    /// by bisection over the feasible torque range.
    pub fn point_for_power(&self, engine_speed: f64, electrical_kw: f64) -> Result<GenSetPoint> {
        let axis = self.engine.torque_axis();
        let feasible: Vec<f64> = axis
            .iter()
            .copied()
            .filter(|&t| self.point(engine_speed, t).is_ok())
            .collect();
        let (Some(&lo_t), Some(&hi_t)) = (feasible.first(), feasible.last()) else {
            return Err(Error::Infeasible(format!(
                "no gen-set point at {engine_speed} rpm"
            )));
        };
        let power = |t: f64| self.point(engine_speed, t).map(|p| p.electrical_power);
        let (mut lo, mut hi) = (lo_t, hi_t);
        if electrical_kw < power(lo)? || electrical_kw > power(hi)? {
            return Err(Error::Infeasible(format!(
                "{electrical_kw} kW is outside the gen-set range at {engine_speed} rpm"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if power(mid)? < electrical_kw {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.point(engine_speed, 0.5 * (lo + hi))
    }
}

/// Electric traction drive: motor map behind a single-speed reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct MotorDrive {
    pub map: EfficiencyMap,
    pub gear_ratio: f64,
    pub wheel_radius: f64,
    /// Peak motor power, kW.
    pub peak_power: f64,
}

impl MotorDrive {
    pub fn motor_speed_rpm(&self, v: f64) -> f64 {
        v / self.wheel_radius * self.gear_ratio * 60.0 / (2.0 * std::f64::consts::PI)
    }

    /// Bus-side electrical power for a wheel power demand, kW. Motoring draws
    /// `P / eta`, regeneration returns `P * eta`. Braking beyond the motor's
    /// power or torque is left to the friction brakes.
    pub fn electrical_power(&self, v: f64, wheel_kw: f64) -> Result<f64> {
        if wheel_kw == 0.0 || v <= 0.0 {
            return Ok(0.0);
        }
        let wheel_kw = if wheel_kw < 0.0 {
            let torque_kw = self.map.max_torque() * rpm_to_rad_s(self.motor_speed_rpm(v)) / 1000.0;
            wheel_kw.max(-self.peak_power).max(-torque_kw)
        } else {
            wheel_kw
        };
        if wheel_kw > self.peak_power {
            return Err(domain(format!(
                "wheel power {wheel_kw:.2} kW exceeds motor peak {:.1} kW",
                self.peak_power
            )));
        }
        let rpm = self.motor_speed_rpm(v);
        let mut torque = wheel_kw.abs() * 1000.0 / rpm_to_rad_s(rpm);
        if wheel_kw < 0.0 {
            // clipped regen sits on the torque limit; keep rounding inside it
            torque = torque.min(self.map.max_torque());
        }
        let eff = map_lookup(&self.map, rpm, torque)? / 100.0;
        Ok(if wheel_kw > 0.0 {
            wheel_kw / eff
        } else {
            wheel_kw * eff
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn motor_efficiency_hand_value() {
        // 100 Nm * 314.159 rad/s = 31 415.9 W over 35 000 W
        let eff = motor_efficiency(100.0, 3000.0, 350.0, 100.0).unwrap();
        assert!((eff - 89.759_790_2).abs() < 1e-6, "{eff}");
        assert_eq!(motor_efficiency(0.0, 3000.0, 350.0, 100.0).unwrap(), 0.0);
        assert!(matches!(
            motor_efficiency(200.0, 3000.0, 350.0, 100.0),
            Err(Error::Characterization(_))
        ));
        assert!(matches!(
            motor_efficiency(100.0, 3000.0, 0.0, 100.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn engine_efficiency_hand_value() {
        let eff = engine_efficiency(240.0, DIESEL_LHV_KWH_PER_G).unwrap();
        assert!((eff - 35.212_259_5).abs() < 1e-6, "{eff}");
        assert!(
            (engine_efficiency(1.0 / DIESEL_LHV_KWH_PER_G, DIESEL_LHV_KWH_PER_G).unwrap() - 100.0)
                .abs()
                < 1e-12
        );
        let tiny = engine_efficiency(1e12, DIESEL_LHV_KWH_PER_G).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-6);
        assert!(engine_efficiency(0.0, 1.0).is_err());
        assert!(engine_efficiency(1.0, -1.0).is_err());
    }

    #[test]
    fn generator_efficiency_hand_value() {
        // 31 500 W out of 120 Nm * 314.159 rad/s = 37 699.1 W
        let eff = generator_efficiency(350.0, 90.0, 120.0, 3000.0).unwrap();
        assert!((eff - 83.556_35).abs() < 1e-4, "{eff}");
        assert_eq!(
            generator_efficiency(350.0, 0.0, 120.0, 3000.0).unwrap(),
            0.0
        );
        assert!(matches!(
            generator_efficiency(350.0, 200.0, 120.0, 3000.0),
            Err(Error::Characterization(_))
        ));
        assert!(matches!(
            generator_efficiency(350.0, 90.0, 0.0, 3000.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn genset_point_for_power_inverts() {
        let gs = synthetic::default_genset().unwrap();
        let p = gs.point_for_power(2800.0, 20.0).unwrap();
        assert!((p.electrical_power - 20.0).abs() < 1e-9);
        let direct = gs.point(2800.0, p.engine_torque).unwrap();
        assert!((direct.combined_efficiency - p.combined_efficiency).abs() < 1e-12);
        assert!(gs.point_for_power(2800.0, 500.0).is_err());
    }

    #[test]
    fn motor_drive_directions() {
        let drive = synthetic::default_motor_drive().unwrap();
        let up = drive.electrical_power(15.0, 20.0).unwrap();
        let down = drive.electrical_power(15.0, -20.0).unwrap();
        assert!(up > 20.0 && down > -20.0 && down < 0.0);
        assert_eq!(drive.electrical_power(0.0, 5.0).unwrap(), 0.0);
        assert!(drive.electrical_power(15.0, 500.0).is_err());
    }

    #[test]
    fn hard_braking_clips_at_torque_limit() {
        let drive = synthetic::default_motor_drive().unwrap();
        for v in [0.5, 1.3, 3.9, 7.7] {
            let limit = drive.map.max_torque() * rpm_to_rad_s(drive.motor_speed_rpm(v)) / 1000.0;
            let kw = drive.electrical_power(v, -200.0).unwrap();
            assert!(kw < 0.0 && kw >= -limit, "{v}: {kw}");
        }
    }
}
