//! Rule-based charge-depleting / charge-sustaining energy management.
//!
//! The controller depletes the pack until SOC reaches the charge-sustaining
//! trigger, then switches permanently to charge-sustaining operation, where a
//! single gen-set operating point is cycled with hysteresis between the trigger
//! and the top of the SOC window. Gen-set state changes are separated by a
//! minimum dwell in wall time, each start is followed by a warm-up during which
//! the generator motors the engine, and braking recharge current is clipped so
//! the total charging current stays under a bus limit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cycle::DriveCycle;
use crate::drive::{bus_series, Powertrain};
use crate::error::{validation, Error, Result};
use crate::powertrain::{current_for_terminal_power, BatteryState, GenSetPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    /// Top of the charge-sustaining window, %.
    pub soc_high: f64,
    /// Bottom of the charge-sustaining window, %.
    pub soc_low: f64,
    /// SOC at which charge sustaining starts and the gen-set is requested, %.
    pub cs_trigger: f64,
    /// Minimum time between gen-set state changes, s.
    pub min_dwell: f64,
    /// Time after each start during which the gen-set produces nothing, s.
    pub warmup: f64,
    /// Battery power drawn to motor the engine during warm-up, kW.
    pub cranking_kw: f64,
    pub genset_point: GenSetPoint,
    /// Limit on total charging current, A.
    pub regen_current_limit: f64,
    pub regen_enabled: bool,
    pub initial_soc: f64,
}

impl RuleConfig {
    pub fn new(genset_point: GenSetPoint, initial_soc: f64) -> Self {
        Self {
            soc_high: 17.0,
            soc_low: 12.0,
            cs_trigger: 14.0,
            min_dwell: 10.0,
            warmup: 20.0,
            cranking_kw: 2.0,
            genset_point,
            regen_current_limit: 150.0,
            regen_enabled: true,
            initial_soc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.soc_low < self.cs_trigger && self.cs_trigger < self.soc_high) {
            return Err(validation(
                "SOC window must satisfy soc_low < cs_trigger < soc_high",
            ));
        }
        if !(self.min_dwell >= 0.0 && self.warmup >= 0.0 && self.cranking_kw >= 0.0) {
            return Err(validation(
                "dwell, warm-up and cranking power must be nonnegative",
            ));
        }
        if !(self.regen_current_limit > 0.0) {
            return Err(validation("regen current limit must be positive"));
        }
        BatteryState::new(self.initial_soc)?;
        self.genset_point.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    ChargeDepleting,
    ChargeSustaining,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ChargeDepleting => "CD",
            Mode::ChargeSustaining => "CS",
        }
    }
}

/// State over one step `[t, t_next)`. `soc` is the value at `t`; the final
/// record of a trace carries the end-of-cycle SOC and no power flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub v: f64,
    pub mode: Mode,
    pub genset_on: bool,
    pub genset_warm: bool,
    pub wheel_kw: f64,
    pub motor_kw: f64,
    pub genset_kw: f64,
    pub cranking_kw: f64,
    pub current: f64,
    pub soc: f64,
    pub fuel_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub records: Vec<StepRecord>,
}

impl SimTrace {
    /// Times at which the gen-set switched on or off.
    pub fn genset_transitions(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .filter(|w| w[0].genset_on != w[1].genset_on)
            .map(|w| w[1].t)
            .collect()
    }

    pub fn cs_entry(&self) -> Option<&StepRecord> {
        self.records
            .iter()
            .find(|r| r.mode == Mode::ChargeSustaining)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t_s,v_mps,mode,genset_on,genset_warm,p_wheel_kw,p_motor_elec_kw,p_genset_elec_kw,i_batt_a,soc_pct,fuel_kwh\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:.3},{:.4},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.9}",
                r.t,
                r.v,
                r.mode.as_str(),
                r.genset_on as u8,
                r.genset_warm as u8,
                r.wheel_kw,
                r.motor_kw,
                r.genset_kw,
                r.current,
                r.soc,
                r.fuel_kwh
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    /// DC energy at the pack terminals per km over the charge-depleting part, Wh/km.
    pub ec_cd_dc: f64,
    /// Fuel energy per km over the charge-sustaining part, Wh/km.
    pub ec_cs_fuel: f64,
    pub cd_distance_km: f64,
    pub cs_distance_km: f64,
    pub cd_dc_kwh: f64,
    pub cs_fuel_kwh: f64,
    pub final_soc: f64,
    /// Time and SOC at which charge sustaining began.
    pub cs_entry: Option<(f64, f64)>,
}

fn per_km(kwh: f64, km: f64) -> f64 {
    if km > 0.0 {
        kwh * 1000.0 / km
    } else {
        0.0
    }
}

/// Runs the rule-based controller over `cycle`.
pub fn simulate_rule_based(
    cycle: &DriveCycle,
    pt: &Powertrain,
    cfg: &RuleConfig,
    calibration: f64,
) -> Result<(SimTrace, EnergyResult)> {
    cfg.validate()?;
    pt.validate()?;
    let bus = bus_series(pt, cycle, calibration)?;
    let battery = &pt.battery;
    let r_in = battery.internal_resistance;

    let mut soc = cfg.initial_soc;
    let mut mode = Mode::ChargeDepleting;
    let mut on = false;
    let mut last_change = f64::NEG_INFINITY;
    let mut started_at = f64::NEG_INFINITY;
    let mut records = Vec::with_capacity(bus.len());
    let (mut cd_km, mut cs_km, mut cd_kwh, mut cs_fuel) = (0.0, 0.0, 0.0, 0.0);
    let mut cs_entry = None;

    for (step, w) in bus.windows(2).enumerate() {
        let (now, next) = (w[0], w[1]);
        let dt = next.t - now.t;

        if mode == Mode::ChargeDepleting && soc <= cfg.cs_trigger {
            mode = Mode::ChargeSustaining;
            cs_entry = Some((now.t, soc));
        }
        if mode == Mode::ChargeSustaining {
            let want = if on {
                soc < cfg.soc_high
            } else {
                soc <= cfg.cs_trigger
            };
            if want != on && now.t - last_change >= cfg.min_dwell {
                on = want;
                last_change = now.t;
                if on {
                    started_at = now.t;
                }
            }
        }
        let warm = on && now.t - started_at >= cfg.warmup;
        let genset_kw = if warm {
            cfg.genset_point.electrical_power
        } else {
            0.0
        };
        let cranking_kw = if on && !warm { cfg.cranking_kw } else { 0.0 };

        let mut motor_kw = now.motor_kw;
        // at the window top in charge sustaining, braking goes to the friction brakes
        if !cfg.regen_enabled || (mode == Mode::ChargeSustaining && soc >= cfg.soc_high) {
            motor_kw = motor_kw.max(0.0);
        }
        let mut terminal_kw = motor_kw + cranking_kw - genset_kw;
        let voc = battery.voc(soc);
        if terminal_kw < 0.0 && motor_kw < 0.0 {
            let limit = cfg.regen_current_limit;
            let limit_kw = (-voc * limit - r_in * limit * limit) / 1000.0;
            if terminal_kw < limit_kw {
                // friction brakes absorb what the bus cannot take
                terminal_kw = limit_kw.min(cranking_kw - genset_kw);
                motor_kw = terminal_kw - cranking_kw + genset_kw;
            }
        }
        let current =
            current_for_terminal_power(battery, soc, terminal_kw).map_err(|e| Error::Envelope {
                step,
                msg: e.to_string(),
            })?;
        let fuel_kwh = if warm {
            genset_kw * dt / 3600.0 / (cfg.genset_point.combined_efficiency / 100.0)
        } else {
            0.0
        };

        records.push(StepRecord {
            t: now.t,
            v: now.v,
            mode,
            genset_on: on,
            genset_warm: warm,
            wheel_kw: now.wheel_kw,
            motor_kw,
            genset_kw,
            cranking_kw,
            current,
            soc,
            fuel_kwh,
        });

        let seg_km = 0.5 * (now.v + next.v) * dt / 1000.0;
        match mode {
            Mode::ChargeDepleting => {
                cd_km += seg_km;
                cd_kwh += terminal_kw * dt / 3600.0;
            }
            Mode::ChargeSustaining => {
                cs_km += seg_km;
                cs_fuel += fuel_kwh;
            }
        }

        soc += battery.soc_delta_for_energy(voc * current * dt);
        if soc <= 0.0 {
            return Err(Error::Infeasible(format!(
                "battery depleted at t = {} s in {} mode",
                next.t,
                mode.as_str()
            )));
        }
    }

    let last = bus[bus.len() - 1];
    records.push(StepRecord {
        t: last.t,
        v: last.v,
        mode,
        genset_on: on,
        genset_warm: on && last.t - started_at >= cfg.warmup,
        wheel_kw: last.wheel_kw,
        motor_kw: 0.0,
        genset_kw: 0.0,
        cranking_kw: 0.0,
        current: 0.0,
        soc,
        fuel_kwh: 0.0,
    });

    let result = EnergyResult {
        ec_cd_dc: per_km(cd_kwh, cd_km),
        ec_cs_fuel: per_km(cs_fuel, cs_km),
        cd_distance_km: cd_km,
        cs_distance_km: cs_km,
        cd_dc_kwh: cd_kwh,
        cs_fuel_kwh: cs_fuel,
        final_soc: soc,
        cs_entry,
    };
    Ok((SimTrace { records }, result))
}
