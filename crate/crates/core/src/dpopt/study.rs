use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{rollout, solve, Decision, DemandProfile, DpConfig, Rollout};
use crate::error::{validation, Error, Result};
use crate::powertrain::GenSet;

/// Default nonzero SOC changes per 10 s interval, %.
pub const DEFAULT_DELTAS: [f64; 3] = [0.294, 0.051, 0.567];

/// Null decision plus one decision per SOC change, each evaluated on the
/// merged gen-set map at `engine_speed` for the electrical power that change
/// needs over `dt`.
pub fn decisions_from_genset(
    genset: &GenSet,
    engine_speed: f64,
    deltas: &[f64],
    dt: f64,
    capacity_kwh: f64,
) -> Result<Vec<Decision>> {
    let mut out = vec![Decision::null()];
    for &delta in deltas {
        if !(delta > 0.0) {
            return Err(validation(format!(
                "decision SOC change {delta} must be positive"
            )));
        }
        let kw = delta / 100.0 * capacity_kwh * 3600.0 / dt;
        let point = genset.point_for_power(engine_speed, kw)?;
        out.push(Decision {
            delta_soc: delta,
            efficiency: point.combined_efficiency,
            label: format!("b={delta}"),
        });
    }
    Ok(out)
}

/// Single-point hysteresis on the interval grid: decision `on` is switched in
/// once SOC falls to `trigger` and held until the window gating forbids
/// charging. Uses the same transition and cost as the DP.
pub fn hysteresis_rollout(
    demand: &DemandProfile,
    cfg: &DpConfig,
    on: usize,
    trigger: f64,
) -> Result<Rollout> {
    cfg.validate()?;
    let Some(on_decision) = cfg.decisions.get(on).filter(|d| !d.is_null()) else {
        return Err(validation(format!(
            "decision {on} is not a charging decision"
        )));
    };
    let null = cfg
        .decisions
        .iter()
        .position(Decision::is_null)
        .expect("validated config has a null decision");
    let mut soc = cfg.initial_soc;
    let mut running = false;
    let mut traj = vec![soc];
    let mut decisions = Vec::with_capacity(demand.len());
    let mut fuel = 0.0;
    let mut obd_events = 0;
    for (k, &drain) in demand.drains.iter().enumerate() {
        if running && !cfg.charging_allowed(soc) {
            running = false;
        } else if !running && soc <= trigger && cfg.charging_allowed(soc) {
            running = true;
        }
        let (i, d) = if running {
            (on, on_decision)
        } else {
            (null, &cfg.decisions[null])
        };
        let next = cfg.transition(soc, d, drain).ok_or_else(|| {
            Error::Infeasible(format!(
                "hysteresis leaves the SOC window at interval {k} from {soc:.4}"
            ))
        })?;
        if cfg.obd_enabled && d.is_null() {
            obd_events += 1;
        }
        fuel += cfg.stage_cost(d);
        decisions.push(i);
        traj.push(next);
        soc = next;
    }
    let cs_ec = if demand.distance_km > 0.0 {
        fuel * 1000.0 / demand.distance_km
    } else {
        0.0
    };
    Ok(Rollout {
        soc: traj,
        decisions,
        fuel_kwh: fuel,
        cs_ec,
        obd_events,
    })
}

/// Charge-sustaining consumption with and without diagnostic drain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObdStudy {
    /// Wh/km.
    pub ec_without: f64,
    /// Wh/km.
    pub ec_with: f64,
    /// Wh/km.
    pub increase: f64,
    /// %.
    pub percent_increase: f64,
    pub events: usize,
    /// SOC per event, %.
    pub drain_per_event: f64,
    pub without: Rollout,
    pub with: Rollout,
}

impl ObdStudy {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "cs_ec_without_obd_wh_per_km = {:.2}", self.ec_without);
        let _ = writeln!(out, "cs_ec_with_obd_wh_per_km = {:.2}", self.ec_with);
        let _ = writeln!(out, "increase_wh_per_km = {:.2}", self.increase);
        let _ = writeln!(out, "increase_percent = {:.2}", self.percent_increase);
        let _ = writeln!(out, "obd_events = {}", self.events);
        let _ = writeln!(
            out,
            "soc_drain_per_event_percent = {:.4}",
            self.drain_per_event
        );
        let _ = writeln!(out, "final_soc_without = {:.2}", self.without.final_soc());
        let _ = writeln!(out, "final_soc_with = {:.2}", self.with.final_soc());
        out.push_str("note = diagnostic events modeled as battery drain in intervals without gen-set output\n");
        out
    }
}

/// Solves and rolls out the same demand twice, diagnostics off then on.
pub fn obd_study(demand: &DemandProfile, cfg: &DpConfig) -> Result<ObdStudy> {
    let mut off = cfg.clone();
    off.obd_enabled = false;
    let mut on = cfg.clone();
    on.obd_enabled = true;
    let run = |c: &DpConfig, tag: &str| -> Result<Rollout> {
        let p = solve(demand, c).map_err(|e| match e {
            Error::Infeasible(m) => Error::Infeasible(format!("{tag} branch: {m}")),
            other => other,
        })?;
        rollout(&p, demand, c.initial_soc)
    };
    let without = run(&off, "without-diagnostics")?;
    let with = run(&on, "with-diagnostics")?;
    let increase = with.cs_ec - without.cs_ec;
    let percent_increase = if without.cs_ec > 0.0 {
        increase / without.cs_ec * 100.0
    } else {
        0.0
    };
    Ok(ObdStudy {
        ec_without: without.cs_ec,
        ec_with: with.cs_ec,
        increase,
        percent_increase,
        events: with.obd_events,
        drain_per_event: on.obd_drain_per_event(),
        without,
        with,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpopt::fixtures::reference_config;
    use crate::powertrain::synthetic::default_genset;

    fn demand(n: usize, level: f64) -> DemandProfile {
        let drains = (0..n)
            .map(|k| level * (1.0 + 0.5 * ((k as f64) * 0.9).sin()))
            .collect();
        DemandProfile::new(drains, 10.0, n as f64 * 0.15).unwrap()
    }

    #[test]
    fn genset_decisions() {
        let g = default_genset().unwrap();
        let d = decisions_from_genset(&g, 2800.0, &DEFAULT_DELTAS, 10.0, 18.9).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d[0].is_null());
        for x in &d[1..] {
            assert!(x.efficiency > 0.0 && x.efficiency < 40.0, "{x:?}");
        }
    }

    #[test]
    fn zero_penalty_no_increase() {
        let mut cfg = reference_config();
        cfg.grid_step = 0.01;
        cfg.obd_energy_per_event = 0.0;
        let s = obd_study(&demand(60, 0.15), &cfg).unwrap();
        assert_eq!(s.ec_with, s.ec_without);
        assert_eq!(s.percent_increase, 0.0);
    }

    #[test]
    fn penalty_never_helps() {
        let mut cfg = reference_config();
        cfg.grid_step = 0.01;
        // a cheap low-output point would run every interval to dodge the drain
        cfg.decisions[2].efficiency = 15.0;
        let s = obd_study(&demand(60, 0.15), &cfg).unwrap();
        assert!(s.ec_with >= s.ec_without - 1e-9);
        assert!(s.events > 0);
        assert!(s.to_text().contains("obd_events = "));
    }

    #[test]
    fn hysteresis_cycles_point() {
        let cfg = reference_config();
        let r = hysteresis_rollout(&demand(120, 0.15), &cfg, 1, 14.0).unwrap();
        assert!(r.genset_on_intervals() > 0);
        assert!(r.soc.iter().all(|&s| (12.0..=17.0).contains(&s)));
    }
}
