use serde::{Deserialize, Serialize};

use crate::cycle::DriveCycle;
use crate::drive::{bus_series, Powertrain};
use crate::error::{validation, Error, Result};
use crate::powertrain::current_for_terminal_power;

/// Per-interval SOC drain from driving, the exogenous input to the DP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    /// % per interval; negative when regeneration outweighs traction.
    pub drains: Vec<f64>,
    /// Interval length, s.
    pub dt: f64,
    pub distance_km: f64,
}

impl DemandProfile {
    pub fn new(drains: Vec<f64>, dt: f64, distance_km: f64) -> Result<Self> {
        if drains.is_empty() {
            return Err(validation("demand profile needs at least one interval"));
        }
        if drains.iter().any(|d| !d.is_finite()) {
            return Err(validation("demand profile contains a non-finite drain"));
        }
        Ok(Self {
            drains,
            dt,
            distance_km,
        })
    }

    pub fn len(&self) -> usize {
        self.drains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drains.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.drains.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandSettings {
    /// Decision interval, s.
    pub dt: f64,
    /// SOC at which open-circuit voltage is evaluated, %.
    pub reference_soc: f64,
    /// Charging current limit applied to regeneration, A.
    pub regen_current_limit: Option<f64>,
}

/// Turns a cycle into per-interval SOC drain: wheel power (times
/// `calibration`) through the motor map to the bus, then to chemistry energy
/// through the pack model. A trailing partial interval is folded into the last
/// full one.
pub fn build_demand(
    cycle: &DriveCycle,
    pt: &Powertrain,
    calibration: f64,
    settings: &DemandSettings,
) -> Result<DemandProfile> {
    pt.battery.validate()?;
    let dt = settings.dt;
    if !(dt > 0.0) {
        return Err(validation("decision interval must be positive"));
    }
    let duration = cycle.duration();
    if duration < dt {
        return Err(validation(format!(
            "cycle lasts {duration} s, shorter than one {dt} s interval"
        )));
    }
    let n = (duration / dt + 1e-9).floor() as usize;
    let battery = &pt.battery;
    let soc = settings.reference_soc;
    let voc = battery.voc(soc);
    let r_in = battery.internal_resistance;
    let bus = bus_series(pt, cycle, calibration)?;

    let mut joules = vec![0.0; n];
    for (step, w) in bus.windows(2).enumerate() {
        let (t0, t1) = (w[0].t, w[1].t);
        let mut terminal_kw = w[0].motor_kw;
        if let Some(limit) = settings.regen_current_limit {
            let limit_kw = (-voc * limit - r_in * limit * limit) / 1000.0;
            terminal_kw = terminal_kw.max(limit_kw);
        }
        let current =
            current_for_terminal_power(battery, soc, terminal_kw).map_err(|e| Error::Envelope {
                step,
                msg: e.to_string(),
            })?;
        let power_w = voc * current;
        // spread the step over the intervals it overlaps
        let mut a = t0;
        while a < t1 {
            let k = (a / dt + 1e-9).floor() as usize;
            let b = ((k + 1) as f64 * dt).min(t1);
            joules[k.min(n - 1)] += power_w * (b - a);
            a = b;
        }
    }
    let drains = joules
        .iter()
        .map(|&j| -battery.soc_delta_for_energy(j))
        .collect();
    DemandProfile::new(drains, dt, cycle.distance_km())
}
