//! Deterministic dynamic programming for the charge-sustaining phase.
//!
//! The state is SOC on a uniform grid, the decision is the SOC added by the
//! gen-set over one decision interval (zero included), and the stage cost is
//! the fuel energy spent. Cost-to-go is swept backward with linear
//! interpolation between grid states; the lower edge of the feasible region is
//! tracked exactly for each stage so states just above it are not lost to
//! interpolation against infeasible neighbors.

mod brute;
mod demand;
mod solve;
mod study;

pub use brute::{brute_force, BruteForce, BRUTE_FORCE_CAP};
pub use demand::{build_demand, DemandProfile, DemandSettings};
pub use solve::{rollout, solve, DpPolicy, Rollout};
pub use study::{decisions_from_genset, hysteresis_rollout, obd_study, ObdStudy, DEFAULT_DELTAS};

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Feasibility slack on SOC comparisons, %.
pub(crate) const SOC_TOL: f64 = 1e-9;

/// One gen-set decision: SOC added per interval and its fuel-to-charge efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// % per interval; zero is the null decision.
    pub delta_soc: f64,
    /// %.
    pub efficiency: f64,
    pub label: String,
}

impl Decision {
    pub fn null() -> Self {
        Self {
            delta_soc: 0.0,
            efficiency: 100.0,
            label: "a=0".into(),
        }
    }

    pub fn is_null(&self) -> bool {
        self.delta_soc == 0.0
    }
}

/// Requirement on the SOC at the end of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalRule {
    /// Final SOC at least the initial SOC.
    Sustain,
    /// Final SOC at least the bottom of the window.
    AboveSocMin,
    /// Final SOC at least the given level, %.
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Decision interval, s.
    pub dt: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Value-function grid spacing, %.
    pub grid_step: f64,
    pub decisions: Vec<Decision>,
    pub terminal: TerminalRule,
    pub initial_soc: f64,
    pub obd_enabled: bool,
    /// Energy drawn from the pack by one diagnostic event, kWh.
    pub obd_energy_per_event: f64,
    /// Pack capacity, kWh.
    pub capacity_kwh: f64,
    /// Gen-set electrical peak bounding every decision, kW.
    pub genset_max_kw: f64,
}

impl DpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(validation("decision interval must be positive"));
        }
        if !(self.soc_min < self.soc_max) || self.soc_min < 0.0 || self.soc_max > 100.0 {
            return Err(validation(
                "SOC window must satisfy 0 <= soc_min < soc_max <= 100",
            ));
        }
        if !(self.grid_step > 0.0) {
            return Err(validation("grid step must be positive"));
        }
        let cells = (self.soc_max - self.soc_min) / self.grid_step;
        if (cells - cells.round()).abs() > 1e-6 {
            return Err(validation(format!(
                "grid step {} does not divide the window [{}, {}]",
                self.grid_step, self.soc_min, self.soc_max
            )));
        }
        if !(self.capacity_kwh > 0.0) {
            return Err(validation("battery capacity must be positive"));
        }
        if !self.decisions.iter().any(Decision::is_null) {
            return Err(validation("decision set must contain the null decision"));
        }
        let bound = self.max_delta_bound();
        for d in &self.decisions {
            if !(d.delta_soc >= 0.0) {
                return Err(validation(format!(
                    "decision '{}' has a negative SOC change",
                    d.label
                )));
            }
            if !d.is_null() && !(d.efficiency > 0.0 && d.efficiency <= 100.0) {
                return Err(validation(format!(
                    "decision '{}' efficiency outside (0, 100]",
                    d.label
                )));
            }
            if d.delta_soc > bound + 1e-12 {
                return Err(validation(format!(
                    "decision '{}' adds {}% per interval, above the gen-set bound {bound:.4}%",
                    d.label, d.delta_soc
                )));
            }
        }
        if self.initial_soc < self.soc_min - SOC_TOL || self.initial_soc > self.soc_max + SOC_TOL {
            return Err(validation(format!(
                "initial SOC {} outside the window [{}, {}]",
                self.initial_soc, self.soc_min, self.soc_max
            )));
        }
        if !(self.obd_energy_per_event >= 0.0) {
            return Err(validation("diagnostic event energy must be nonnegative"));
        }
        if self.terminal_level() > self.soc_max + SOC_TOL {
            return Err(validation("terminal SOC requirement lies above the window"));
        }
        Ok(())
    }

    /// Largest SOC change the gen-set can add in one interval, %.
    pub fn max_delta_bound(&self) -> f64 {
        self.genset_max_kw * self.dt / (3600.0 * self.capacity_kwh) * 100.0
    }

    pub fn max_delta(&self) -> f64 {
        self.decisions
            .iter()
            .map(|d| d.delta_soc)
            .fold(0.0, f64::max)
    }

    /// SOC lost to one diagnostic event, %.
    pub fn obd_drain_per_event(&self) -> f64 {
        self.obd_energy_per_event / self.capacity_kwh * 100.0
    }

    /// SOC lost to diagnostics in an interval that uses `decision`, %.
    pub fn obd_drain(&self, decision: &Decision) -> f64 {
        if self.obd_enabled && decision.is_null() {
            self.obd_drain_per_event()
        } else {
            0.0
        }
    }

    /// Fuel energy for one interval under `decision`, kWh.
    pub fn stage_cost(&self, decision: &Decision) -> f64 {
        if decision.is_null() {
            0.0
        } else {
            decision.delta_soc / 100.0 * self.capacity_kwh / (decision.efficiency / 100.0)
        }
    }

    pub fn terminal_level(&self) -> f64 {
        match self.terminal {
            TerminalRule::Sustain => self.initial_soc,
            TerminalRule::AboveSocMin => self.soc_min,
            TerminalRule::AtLeast(level) => level,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.soc_max - self.soc_min) / self.grid_step).round() as usize;
        (0..=n)
            .map(|j| {
                if j == n {
                    self.soc_max
                } else {
                    self.soc_min + j as f64 * self.grid_step
                }
            })
            .collect()
    }

    /// SOC after one interval from `soc`, or `None` when it leaves the window.
    /// Net regeneration that would lift SOC past the window top is discarded.
    pub fn transition(&self, soc: f64, decision: &Decision, drain: f64) -> Option<f64> {
        let before_drive = soc + decision.delta_soc - self.obd_drain(decision);
        let mut next = before_drive - drain;
        if drain < 0.0 {
            next = next.min(before_drive.max(self.soc_max));
        }
        (next >= self.soc_min - SOC_TOL && next <= self.soc_max + SOC_TOL).then_some(next)
    }

    /// Only the null decision is allowed once the largest charge could reach the window top.
    pub fn charging_allowed(&self, soc: f64) -> bool {
        soc + self.max_delta() < self.soc_max
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// 12-17 % window, four decisions, illustrative efficiencies.
    pub(crate) fn reference_config() -> DpConfig {
        let mut decisions = vec![Decision::null()];
        for (delta, eff) in [(0.294, 30.0), (0.051, 22.0), (0.567, 31.0)] {
            decisions.push(Decision {
                delta_soc: delta,
                efficiency: eff,
                label: format!("b={delta}"),
            });
        }
        DpConfig {
            dt: 10.0,
            soc_min: 12.0,
            soc_max: 17.0,
            grid_step: 0.005,
            decisions,
            terminal: TerminalRule::Sustain,
            initial_soc: 14.0,
            obd_enabled: false,
            obd_energy_per_event: 0.00497,
            capacity_kwh: 18.9,
            genset_max_kw: 40.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::reference_config;

    #[test]
    fn reference_config_is_valid() {
        reference_config().validate().unwrap();
        assert_eq!(reference_config().grid().len(), 1001);
    }

    #[test]
    fn per_event_drain() {
        let cfg = reference_config();
        assert!((cfg.obd_drain_per_event() - 0.026_296_296).abs() < 1e-8);
        assert!((cfg.obd_drain_per_event() - 0.0263).abs() < 1e-4);
    }

    #[test]
    fn genset_bound_checked() {
        let mut cfg = reference_config();
        cfg.genset_max_kw = 37.0;
        // 37 kW over 10 s into 18.9 kWh is 0.5437 %, below 0.567 %
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn other_invalid_configs() {
        let mut cfg = reference_config();
        cfg.decisions.remove(0);
        assert!(cfg.validate().is_err());
        let mut cfg = reference_config();
        cfg.grid_step = 0.003;
        assert!(cfg.validate().is_err());
        let mut cfg = reference_config();
        cfg.initial_soc = 20.0;
        assert!(cfg.validate().is_err());
        let mut cfg = reference_config();
        cfg.decisions[1].delta_soc = -0.1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn transition_and_gating() {
        let cfg = reference_config();
        let b = &cfg.decisions[1];
        assert!((cfg.transition(14.0, b, 0.1).unwrap() - 14.194).abs() < 1e-12);
        assert_eq!(cfg.transition(12.05, &cfg.decisions[0], 0.1), None);
        // net regeneration stops at the window top
        assert_eq!(cfg.transition(16.95, &cfg.decisions[0], -0.2), Some(17.0));
        assert!(cfg.charging_allowed(16.0));
        assert!(!cfg.charging_allowed(16.5));
    }

    #[test]
    fn stage_cost_hand_value() {
        let cfg = reference_config();
        let cost = cfg.stage_cost(&cfg.decisions[1]);
        assert!((cost - 0.00294 * 18.9 / 0.30).abs() < 1e-12);
        assert_eq!(cfg.stage_cost(&cfg.decisions[0]), 0.0);
    }
}
