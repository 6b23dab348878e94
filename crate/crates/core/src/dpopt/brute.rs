use serde::{Deserialize, Serialize};

use super::{DemandProfile, DpConfig, SOC_TOL};
use crate::error::{Error, Result};

/// Largest number of decision sequences `brute_force` will enumerate.
pub const BRUTE_FORCE_CAP: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    /// kWh.
    pub cost_kwh: f64,
    /// Decision index per interval.
    pub sequence: Vec<usize>,
}

struct Search<'a> {
    cfg: &'a DpConfig,
    drains: &'a [f64],
    level: f64,
    top: f64,
    path: Vec<usize>,
    best: Option<(f64, usize, Vec<usize>)>,
}

impl Search<'_> {
    fn step(&self, soc: f64, i: usize, drain: f64) -> Option<f64> {
        let cfg = self.cfg;
        let u = cfg.decisions[i].delta_soc;
        if u > 0.0 && soc + self.top >= cfg.soc_max {
            return None;
        }
        let obd = if cfg.obd_enabled && u == 0.0 {
            cfg.obd_energy_per_event / cfg.capacity_kwh * 100.0
        } else {
            0.0
        };
        let charged = soc + u - obd;
        let mut next = charged - drain;
        if drain < 0.0 && next > cfg.soc_max {
            next = cfg.soc_max.max(charged);
        }
        if next < cfg.soc_min - SOC_TOL || next > cfg.soc_max + SOC_TOL {
            return None;
        }
        Some(next)
    }

    fn cost(&self, i: usize) -> f64 {
        let d = &self.cfg.decisions[i];
        if d.delta_soc == 0.0 {
            0.0
        } else {
            d.delta_soc * self.cfg.capacity_kwh / d.efficiency
        }
    }

    fn visit(&mut self, k: usize, soc: f64, cost: f64, on: usize) {
        if let Some((b, b_on, _)) = &self.best {
            if cost > *b + 1e-12 || (cost >= *b - 1e-12 && on >= *b_on) {
                return;
            }
        }
        if k == self.drains.len() {
            if soc >= self.level - SOC_TOL {
                let better = match &self.best {
                    None => true,
                    Some((b, b_on, _)) => cost < *b - 1e-12 || on < *b_on,
                };
                if better {
                    self.best = Some((cost, on, self.path.clone()));
                }
            }
            return;
        }
        for i in 0..self.cfg.decisions.len() {
            if let Some(next) = self.step(soc, i, self.drains[k]) {
                let gen_on = usize::from(self.cfg.decisions[i].delta_soc > 0.0);
                self.path.push(i);
                self.visit(k + 1, next, cost + self.cost(i), on + gen_on);
                self.path.pop();
            }
        }
    }
}

/// Exhaustive search over every decision sequence with exact SOC transitions.
/// Ties in cost go to the sequence with fewer gen-set-on intervals.
pub fn brute_force(demand: &DemandProfile, cfg: &DpConfig, initial_soc: f64) -> Result<BruteForce> {
    cfg.validate()?;
    let n = demand.len();
    let count = (cfg.decisions.len() as f64).powi(n as i32);
    if count > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge(format!(
            "{} decisions over {n} intervals is {count:.3e} sequences, above {BRUTE_FORCE_CAP:.0e}",
            cfg.decisions.len()
        )));
    }
    let mut search = Search {
        cfg,
        drains: &demand.drains,
        level: cfg.terminal_level().max(cfg.soc_min),
        top: cfg
            .decisions
            .iter()
            .map(|d| d.delta_soc)
            .fold(0.0, f64::max),
        path: Vec::with_capacity(n),
        best: None,
    };
    search.visit(0, initial_soc, 0.0, 0);
    search
        .best
        .map(|(cost_kwh, _, sequence)| BruteForce { cost_kwh, sequence })
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no decision sequence is feasible from SOC {initial_soc}"
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpopt::fixtures::reference_config;

    fn demand(drains: Vec<f64>) -> DemandProfile {
        DemandProfile::new(drains, 10.0, 1.0).unwrap()
    }

    #[test]
    fn zero_demand_zero_cost() {
        let b = brute_force(&demand(vec![0.0; 3]), &reference_config(), 14.0).unwrap();
        assert_eq!(b.cost_kwh, 0.0);
        assert_eq!(b.sequence, vec![0, 0, 0]);
    }

    #[test]
    fn single_feasible_decision() {
        let cfg = reference_config();
        // only the largest charge returns to 14 %
        let b = brute_force(&demand(vec![0.5]), &cfg, 14.0).unwrap();
        assert_eq!(b.sequence, vec![3]);
        assert!((b.cost_kwh - 0.00567 * 18.9 / 0.31).abs() < 1e-12);
    }

    #[test]
    fn cap_enforced() {
        let err = brute_force(&demand(vec![0.0; 12]), &reference_config(), 14.0).unwrap_err();
        assert!(matches!(err, Error::TooLarge(_)));
    }

    #[test]
    fn infeasible_reported() {
        let err = brute_force(&demand(vec![0.9, 0.9]), &reference_config(), 14.0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }
}
