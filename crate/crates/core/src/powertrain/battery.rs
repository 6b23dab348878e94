use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};

/// Internal-resistance pack model. Current is positive on discharge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryParams {
    /// Pack capacity, kWh.
    pub capacity_kwh: f64,
    /// Internal resistance, ohm.
    pub internal_resistance: f64,
    /// `(soc %, open-circuit volts)`, ascending in SOC.
    pub voc_curve: Vec<(f64, f64)>,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            capacity_kwh: 18.9,
            internal_resistance: 0.1,
            voc_curve: vec![(0.0, 340.0), (100.0, 340.0)],
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_kwh > 0.0) {
            return Err(validation("battery capacity must be positive"));
        }
        if !(self.internal_resistance >= 0.0) {
            return Err(validation("internal resistance must be nonnegative"));
        }
        if self.voc_curve.is_empty() {
            return Err(validation("open-circuit voltage curve is empty"));
        }
        if self.voc_curve.iter().any(|&(_, v)| !(v > 0.0)) {
            return Err(validation("open-circuit voltages must be positive"));
        }
        if self
            .voc_curve
            .windows(2)
            .any(|w| w[1].0 <= w[0].0 || w[1].1 < w[0].1)
        {
            return Err(validation(
                "open-circuit voltage curve must be strictly ascending in SOC and nondecreasing in volts",
            ));
        }
        Ok(())
    }

    /// Open-circuit voltage at `soc`, linear in the table and flat beyond its ends.
    pub fn voc(&self, soc: f64) -> f64 {
        let c = &self.voc_curve;
        if soc <= c[0].0 {
            return c[0].1;
        }
        if soc >= c[c.len() - 1].0 {
            return c[c.len() - 1].1;
        }
        let i = c.partition_point(|p| p.0 <= soc) - 1;
        let (s0, v0) = c[i];
        let (s1, v1) = c[i + 1];
        v0 + (v1 - v0) * (soc - s0) / (s1 - s0)
    }

    /// SOC change in % for a chemistry energy in joules (positive drawn).
    pub fn soc_delta_for_energy(&self, joules: f64) -> f64 {
        -joules / (3.6e6 * self.capacity_kwh) * 100.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    soc: f64,
}

impl BatteryState {
    pub fn new(soc: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&soc) {
            return Err(domain(format!("SOC {soc} outside [0, 100]")));
        }
        Ok(Self { soc })
    }

    pub fn soc(&self) -> f64 {
        self.soc
    }
}

/// Pack power `(R I^2 + Voc I) / 1000` in kW.
pub fn battery_power(b: &BatteryParams, soc: f64, current: f64) -> Result<f64> {
    BatteryState::new(soc)?;
    let r = b.internal_resistance;
    Ok((r * current * current + b.voc(soc) * current) / 1000.0)
}

/// Pack current delivering `terminal_kw` at the terminals, where terminal
/// power is `Voc I - R I^2`. Takes the root with smaller magnitude; errors when
/// the demand exceeds what the pack can deliver.
pub fn current_for_terminal_power(b: &BatteryParams, soc: f64, terminal_kw: f64) -> Result<f64> {
    let v = b.voc(soc);
    let r = b.internal_resistance;
    let p = terminal_kw * 1000.0;
    if r == 0.0 {
        return Ok(p / v);
    }
    let disc = v * v - 4.0 * r * p;
    if disc < 0.0 {
        return Err(Error::Infeasible(format!(
            "terminal demand {terminal_kw:.2} kW exceeds pack capability {:.2} kW",
            v * v / (4.0 * r) / 1000.0
        )));
    }
    // (v - sqrt(disc)) / 2r, written to avoid cancellation at small p
    Ok(2.0 * p / (v + disc.sqrt()))
}

/// Result of integrating a current series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocIntegration {
    pub soc: f64,
    /// True when the raw result left [0, 100] and was clamped.
    pub clamped: bool,
}

/// Integrates a `(t [s], I [A])` series from `start_soc` with the trapezoid
/// rule; discharge lowers SOC.
pub fn integrate_soc(
    b: &BatteryParams,
    start_soc: f64,
    current: &[(f64, f64)],
) -> Result<SocIntegration> {
    BatteryState::new(start_soc)?;
    let mut soc = start_soc;
    for w in current.windows(2) {
        let dt = w[1].0 - w[0].0;
        let v = b.voc(soc);
        soc += b.soc_delta_for_energy(0.5 * v * (w[0].1 + w[1].1) * dt);
    }
    let clamped = !(0.0..=100.0).contains(&soc);
    Ok(SocIntegration {
        soc: soc.clamp(0.0, 100.0),
        clamped,
    })
}
