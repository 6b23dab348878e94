use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DemandProfile, DpConfig, SOC_TOL};
use crate::error::{validation, Error, Result};

/// Optimal cost-to-go and decisions over the SOC grid for every interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpPolicy {
    config: DpConfig,
    drains: Vec<f64>,
    grid: Vec<f64>,
    /// `cost[k][j]`, kWh fuel; `k` runs to the horizon inclusive.
    cost: Vec<Vec<f64>>,
    /// `choice[k][j]`, index into the decision list.
    choice: Vec<Vec<Option<usize>>>,
    /// Lowest SOC with a finite cost-to-go at each stage, and that cost.
    boundary: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    /// SOC at every interval boundary, `len() + 1` entries.
    pub soc: Vec<f64>,
    /// Decision index per interval.
    pub decisions: Vec<usize>,
    /// kWh.
    pub fuel_kwh: f64,
    /// Fuel energy per distance, Wh/km.
    pub cs_ec: f64,
    /// Null intervals that ran a diagnostic event.
    pub obd_events: usize,
}

impl Rollout {
    pub fn genset_on_intervals(&self) -> usize {
        self.decisions.len() - self.null_intervals()
    }

    pub fn null_intervals(&self) -> usize {
        self.decisions.iter().filter(|&&i| i == 0).count()
    }

    pub fn final_soc(&self) -> f64 {
        *self.soc.last().expect("trajectory has an initial state")
    }
}

impl DpPolicy {
    pub fn config(&self) -> &DpConfig {
        &self.config
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn stages(&self) -> usize {
        self.drains.len()
    }

    /// Cost-to-go layer `k`, one value per grid state.
    pub fn cost_layer(&self, k: usize) -> &[f64] {
        &self.cost[k]
    }

    pub fn choice_layer(&self, k: usize) -> &[Option<usize>] {
        &self.choice[k]
    }

    /// Lowest feasible SOC at stage `k`.
    pub fn lower_boundary(&self, k: usize) -> f64 {
        self.boundary[k].0
    }

    /// Interpolated cost-to-go at stage `k`; infinite outside the feasible region.
    pub fn value_at(&self, k: usize, soc: f64) -> f64 {
        value_in_layer(
            &self.config,
            &self.grid,
            &self.cost[k],
            self.boundary[k],
            soc,
        )
    }

    /// Optimal cost from the configured initial SOC, kWh.
    pub fn optimal_cost(&self) -> f64 {
        self.value_at(0, self.config.initial_soc)
    }

    /// Decision minimizing stage cost plus interpolated cost-to-go at a continuous state.
    pub fn greedy_decision(&self, k: usize, soc: f64) -> Option<(usize, f64)> {
        bellman(&self.config, self.drains[k], soc, |next| {
            self.value_at(k + 1, next)
        })
    }

    /// Fuel actually spent following the greedy decisions from `(k, soc)` to the
    /// horizon, or `None` if that path dead-ends or misses the terminal level.
    pub fn greedy_cost(&self, k: usize, soc: f64) -> Option<f64> {
        let mut soc = soc;
        let mut fuel = 0.0;
        for j in k..self.stages() {
            let (i, _) = self.greedy_decision(j, soc)?;
            let d = &self.config.decisions[i];
            soc = self.config.transition(soc, d, self.drains[j])?;
            fuel += self.config.stage_cost(d);
        }
        self.value_at(self.stages(), soc)
            .is_finite()
            .then_some(fuel)
    }

    /// Cheapest fuel from `(k, soc)` over exhaustive choices for `depth` stages,
    /// each followed by the greedy continuation.
    fn continuation(&self, k: usize, soc: f64, depth: usize) -> Option<f64> {
        if depth == 0 || k == self.stages() {
            return self.greedy_cost(k, soc);
        }
        let cfg = &self.config;
        let charging = cfg.charging_allowed(soc);
        cfg.decisions
            .iter()
            .filter(|d| d.is_null() || charging)
            .filter_map(|d| {
                let next = cfg.transition(soc, d, self.drains[k])?;
                Some(cfg.stage_cost(d) + self.continuation(k + 1, next, depth - 1)?)
            })
            .min_by(f64::total_cmp)
    }

    /// Best decision at stage `k`, each candidate scored by its stage cost plus the
    /// fuel of a short exhaustive search and greedy continuation; falls back on the
    /// greedy choice.
    pub fn best_decision(&self, k: usize, soc: f64) -> Option<(usize, f64)> {
        let cfg = &self.config;
        let charging = cfg.charging_allowed(soc);
        let depth = if self.stages() - k <= TAIL_STAGES {
            TAIL_DEPTH
        } else {
            1
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, d) in cfg.decisions.iter().enumerate() {
            if !d.is_null() && !charging {
                continue;
            }
            let Some(next) = cfg.transition(soc, d, self.drains[k]) else {
                continue;
            };
            let Some(rest) = self.continuation(k + 1, next, depth - 1) else {
                continue;
            };
            let total = cfg.stage_cost(d) + rest;
            match best {
                Some((_, b)) if total >= b - 1e-12 * b.abs().max(1.0) => {}
                _ => best = Some((i, total)),
            }
        }
        best.or_else(|| self.greedy_decision(k, soc))
    }

    /// `k,soc_grid,decision_label,cost_to_go_kwh` rows for every stage and grid state.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,soc_grid,decision_label,cost_to_go_kwh\n");
        for k in 0..self.stages() {
            for (j, &soc) in self.grid.iter().enumerate() {
                let (label, cost) = match self.choice[k][j] {
                    Some(i) => (
                        self.config.decisions[i].label.as_str(),
                        format!("{:.9}", self.cost[k][j]),
                    ),
                    None => ("-", "inf".to_string()),
                };
                let _ = writeln!(out, "{k},{soc:.4},{label},{cost}");
            }
        }
        out
    }
}

/// Near the horizon the cost-to-go is a coarse staircase set by the terminal
/// level, so the rollout searches deeper there.
const TAIL_STAGES: usize = 32;
const TAIL_DEPTH: usize = 3;

fn value_in_layer(
    cfg: &DpConfig,
    grid: &[f64],
    layer: &[f64],
    boundary: (f64, f64),
    soc: f64,
) -> f64 {
    let (lo, lo_cost) = boundary;
    if !lo.is_finite() || soc < lo - SOC_TOL || soc > cfg.soc_max + SOC_TOL {
        return f64::INFINITY;
    }
    if soc <= lo {
        return lo_cost;
    }
    let last = grid.len() - 1;
    let soc = soc.min(cfg.soc_max);
    let j = (((soc - cfg.soc_min) / cfg.grid_step).floor() as usize).min(last - 1);
    let (mut x0, mut y0) = (grid[j], layer[j]);
    let (x1, y1) = (grid[j + 1], layer[j + 1]);
    if lo > x0 {
        x0 = lo;
        y0 = lo_cost;
    }
    if !y1.is_finite() {
        return if (soc - x0).abs() <= SOC_TOL {
            y0
        } else {
            f64::INFINITY
        };
    }
    if !y0.is_finite() {
        return if (x1 - soc).abs() <= SOC_TOL {
            y1
        } else {
            f64::INFINITY
        };
    }
    if x1 - x0 <= 0.0 {
        return y1;
    }
    let w = (soc - x0) / (x1 - x0);
    y0 + w * (y1 - y0)
}

/// Minimum over admissible decisions of stage cost plus successor value.
/// Ties keep the lowest decision index.
fn bellman(
    cfg: &DpConfig,
    drain: f64,
    soc: f64,
    next_value: impl Fn(f64) -> f64,
) -> Option<(usize, f64)> {
    let charging = cfg.charging_allowed(soc);
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in cfg.decisions.iter().enumerate() {
        if !d.is_null() && !charging {
            continue;
        }
        let Some(next) = cfg.transition(soc, d, drain) else {
            continue;
        };
        let total = cfg.stage_cost(d) + next_value(next);
        if !total.is_finite() {
            continue;
        }
        match best {
            Some((_, b)) if total >= b - 1e-12 * b.abs().max(1.0) => {}
            _ => best = Some((i, total)),
        }
    }
    best
}

/// Lowest SOC at stage `k` from which the successor region is reachable.
fn stage_boundary(cfg: &DpConfig, drain: f64, next_lo: f64) -> Option<f64> {
    let mut lo: Option<f64> = None;
    for d in &cfg.decisions {
        let s = (next_lo - d.delta_soc + cfg.obd_drain(d) + drain).max(cfg.soc_min);
        if s > cfg.soc_max + SOC_TOL || (!d.is_null() && !cfg.charging_allowed(s)) {
            continue;
        }
        if cfg.transition(s, d, drain).is_none() {
            continue;
        }
        lo = Some(lo.map_or(s, |l: f64| l.min(s)));
    }
    lo
}

/// Backward sweep over the SOC grid.
pub fn solve(demand: &DemandProfile, cfg: &DpConfig) -> Result<DpPolicy> {
    cfg.validate()?;
    if demand.is_empty() {
        return Err(validation("demand profile is empty"));
    }
    if (demand.dt - cfg.dt).abs() > 1e-9 {
        return Err(validation(format!(
            "demand interval {} s differs from the decision interval {} s",
            demand.dt, cfg.dt
        )));
    }
    let n = demand.len();
    let grid = cfg.grid();
    let mut cost = vec![Vec::new(); n + 1];
    let mut choice = vec![Vec::new(); n];
    let mut boundary = vec![(f64::INFINITY, f64::INFINITY); n + 1];

    let level = cfg.terminal_level().max(cfg.soc_min);
    cost[n] = grid
        .iter()
        .map(|&s| {
            if s >= level - SOC_TOL {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    boundary[n] = (level, 0.0);

    for k in (0..n).rev() {
        let drain = demand.drains[k];
        let next_layer = &cost[k + 1];
        let next_boundary = boundary[k + 1];
        let next_value = |s: f64| value_in_layer(cfg, &grid, next_layer, next_boundary, s);

        let lo = stage_boundary(cfg, drain, next_boundary.0).ok_or_else(|| {
            Error::Infeasible(format!(
                "no SOC in [{}, {}] can complete the horizon from interval {k}",
                cfg.soc_min, cfg.soc_max
            ))
        })?;
        let lo_cost = bellman(cfg, drain, lo, next_value).map_or(f64::INFINITY, |b| b.1);

        let cells: Vec<Option<(usize, f64)>> = grid
            .par_iter()
            .map(|&s| {
                if s < lo - SOC_TOL {
                    None
                } else {
                    bellman(cfg, drain, s, next_value)
                }
            })
            .collect();
        cost[k] = cells
            .iter()
            .map(|c| c.map_or(f64::INFINITY, |b| b.1))
            .collect();
        choice[k] = cells.iter().map(|c| c.map(|b| b.0)).collect();
        boundary[k] = (lo, lo_cost);
    }

    let policy = DpPolicy {
        config: cfg.clone(),
        drains: demand.drains.clone(),
        grid,
        cost,
        choice,
        boundary,
    };
    if !policy.optimal_cost().is_finite() {
        return Err(Error::Infeasible(format!(
            "initial SOC {} is below the lowest feasible start {:.4}",
            cfg.initial_soc,
            policy.lower_boundary(0)
        )));
    }
    Ok(policy)
}

/// Forward pass from `initial_soc`, choosing at each interval the decision that
/// minimizes stage cost plus interpolated cost-to-go at the actual state.
pub fn rollout(policy: &DpPolicy, demand: &DemandProfile, initial_soc: f64) -> Result<Rollout> {
    if demand.drains != policy.drains {
        return Err(validation("rollout demand differs from the solved demand"));
    }
    let cfg = &policy.config;
    let mut soc = initial_soc;
    let mut traj = vec![soc];
    let mut decisions = Vec::with_capacity(demand.len());
    let mut fuel = 0.0;
    let mut obd_events = 0;
    for (k, &drain) in demand.drains.iter().enumerate() {
        let (i, _) = policy.best_decision(k, soc).ok_or_else(|| {
            Error::Infeasible(format!(
                "no admissible decision at interval {k} from SOC {soc:.4}"
            ))
        })?;
        let d = &cfg.decisions[i];
        let next = cfg
            .transition(soc, d, drain)
            .expect("best decision has a feasible transition");
        if next < cfg.soc_min - cfg.grid_step || next > cfg.soc_max + cfg.grid_step {
            return Err(Error::Infeasible(format!(
                "rollout SOC {next:.4} leaves the window at interval {k}"
            )));
        }
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
