//! Energy accounting: charger-side conversion, utility-factor weighting of the
//! fuel and electric channels, and the model-to-test calibration factor.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cycle::CycleMetrics;
use crate::error::{domain, Result};

/// Charger-side energy for a DC quantity (Wh or Wh/km).
pub fn ac_from_dc(dc: f64, charging_efficiency: f64) -> Result<f64> {
    if !(charging_efficiency > 0.0 && charging_efficiency <= 1.0) {
        return Err(domain(format!(
            "charging efficiency {charging_efficiency} outside (0, 1]"
        )));
    }
    Ok(dc / charging_efficiency)
}

/// `ec_cd * uf + ec_cs * (1 - uf)`.
pub fn uf_weighted(ec_cd: f64, ec_cs: f64, uf: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&uf) {
        return Err(domain(format!("utility factor {uf} outside [0, 1]")));
    }
    if !(ec_cd >= 0.0 && ec_cs >= 0.0) {
        return Err(domain("energy consumption must be nonnegative"));
    }
    Ok(ec_cd * uf + ec_cs * (1.0 - uf))
}

/// Utility-factor weighted consumption, Wh/km. Electric energy is spent only
/// while charge depleting and fuel only while charge sustaining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UfReport {
    pub ec_cd_ac: f64,
    pub ec_cs_fuel: f64,
    pub uf: f64,
    pub ec_uf_weighted_electric: f64,
    pub ec_uf_weighted_fuel: f64,
    pub ec_uf_weighted_total: f64,
}

impl UfReport {
    pub fn new(ec_cd_ac: f64, ec_cs_fuel: f64, uf: f64) -> Result<Self> {
        let electric = uf_weighted(ec_cd_ac, 0.0, uf)?;
        let fuel = uf_weighted(0.0, ec_cs_fuel, uf)?;
        Ok(Self {
            ec_cd_ac,
            ec_cs_fuel,
            uf,
            ec_uf_weighted_electric: electric,
            ec_uf_weighted_fuel: fuel,
            ec_uf_weighted_total: electric + fuel,
        })
    }

    pub fn is_additive(&self) -> bool {
        let sum = self.ec_uf_weighted_electric + self.ec_uf_weighted_fuel;
        (self.ec_uf_weighted_total - sum).abs() <= 1e-9 * sum.abs().max(1.0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "utility_factor = {:.4}", self.uf);
        let _ = writeln!(out, "ec_cd_ac_wh_per_km = {:.2}", self.ec_cd_ac);
        let _ = writeln!(out, "ec_cs_fuel_wh_per_km = {:.2}", self.ec_cs_fuel);
        let _ = writeln!(
            out,
            "ec_uf_weighted_electric_wh_per_km = {:.2}",
            self.ec_uf_weighted_electric
        );
        let _ = writeln!(
            out,
            "ec_uf_weighted_fuel_wh_per_km = {:.2}",
            self.ec_uf_weighted_fuel
        );
        let _ = writeln!(
            out,
            "ec_uf_weighted_total_wh_per_km = {:.2}",
            self.ec_uf_weighted_total
        );
        out
    }

    pub const CSV_HEADER: &'static str =
        "uf,ec_cd_ac,ec_cs_fuel,ec_uf_weighted_electric,ec_uf_weighted_fuel,ec_uf_weighted_total";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.uf,
            self.ec_cd_ac,
            self.ec_cs_fuel,
            self.ec_uf_weighted_electric,
            self.ec_uf_weighted_fuel,
            self.ec_uf_weighted_total
        )
    }
}

/// Scale applied to simulated wheel energy so it matches the test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub energy_scale: f64,
    /// Test-to-model ratio of average positive power, reported only.
    pub power_ratio: f64,
    pub sim: CycleMetrics,
    pub test: CycleMetrics,
}

impl Calibration {
    /// %.
    pub fn energy_excess(&self) -> f64 {
        (self.energy_scale - 1.0) * 100.0
    }

    /// %.
    pub fn power_excess(&self) -> f64 {
        (self.power_ratio - 1.0) * 100.0
    }
}

pub fn calibration_factor(sim: &CycleMetrics, test: &CycleMetrics) -> Result<Calibration> {
    if !(sim.positive_propulsion_energy > 0.0) {
        return Err(domain(
            "simulated positive propulsion energy must be positive",
        ));
    }
    if !(test.positive_propulsion_energy > 0.0) {
        return Err(domain("test positive propulsion energy must be positive"));
    }
    let power_ratio = if sim.avg_positive_power > 0.0 {
        test.avg_positive_power / sim.avg_positive_power
    } else {
        f64::NAN
    };
    Ok(Calibration {
        energy_scale: test.positive_propulsion_energy / sim.positive_propulsion_energy,
        power_ratio,
        sim: *sim,
        test: *test,
    })
}
