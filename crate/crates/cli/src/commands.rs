use std::fmt::Write as _;
use std::path::Path;

use hevopt::accounting::{ac_from_dc, UfReport};
use hevopt::cycle::{compute_metrics, repeat_cycle, DriveCycle};
use hevopt::dpopt::{build_demand, obd_study, rollout, solve, DpPolicy, ObdStudy, Rollout};
use hevopt::dynamics::wheel_power_series;
use hevopt::ems::{simulate_rule_based, EnergyResult, SimTrace};

use crate::error::{CliError, CliResult, Context};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Rule,
    Dp,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Rule => "rule",
            Strategy::Dp => "dp",
        }
    }
}

/// Named data files produced by a command, in emission order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|f| f.0 == name)
            .map(|f| f.1.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

fn full_cycle(s: &Scenario) -> CliResult<DriveCycle> {
    repeat_cycle(&s.cycle, s.laps).context(|| format!("{}: laps", s.path.display()))
}

/// Metrics of the uncalibrated wheel-power trace at test mass.
pub fn analyze(s: &Scenario) -> CliResult<Outputs> {
    let cycle = full_cycle(s)?;
    let vehicle = &s.powertrain.vehicle;
    let power =
        wheel_power_series(vehicle, &cycle, vehicle.test_mass).context(|| "wheel power".into())?;
    let m = compute_metrics(
        &power,
        &cycle.speeds(),
        cycle.distance_km(),
        vehicle.idle_speed,
    )
    .context(|| "cycle metrics".into())?;
    let mut text = String::new();
    let _ = writeln!(text, "scenario = {}", s.name);
    let _ = writeln!(text, "cycle = {}", cycle.name());
    let _ = writeln!(text, "distance_km = {:.3}", cycle.distance_km());
    let _ = writeln!(text, "duration_s = {:.1}", cycle.duration());
    let _ = writeln!(
        text,
        "positive_propulsion_energy_wh_per_km = {:.2}",
        m.positive_propulsion_energy
    );
    let _ = writeln!(text, "peak_power_kw = {:.2}", m.peak_power);
    let _ = writeln!(text, "avg_positive_power_kw = {:.2}", m.avg_positive_power);
    let _ = writeln!(text, "percent_idle = {:.2}", m.percent_idle);
    if let Some(cal) = &s.calibration {
        let _ = writeln!(text, "calibration_energy_scale = {:.5}", cal.energy_scale);
        let _ = writeln!(text, "energy_delta_percent = {:.2}", cal.energy_excess());
        let _ = writeln!(text, "avg_power_delta_percent = {:.2}", cal.power_excess());
    } else {
        let _ = writeln!(
            text,
            "calibration_energy_scale = {:.5}",
            s.calibration_scale
        );
    }
    let mut csv = String::from("t_s,v_mps,wheel_kw\n");
    for ((t, kw), v) in power.iter().zip(cycle.speeds()) {
        let _ = writeln!(csv, "{t:.3},{v:.4},{kw:.6}");
    }
    let mut out = Outputs::default();
    out.add("metrics.txt", text);
    out.add("wheel_power.csv", csv);
    Ok(out)
}

pub fn run_rule(s: &Scenario) -> CliResult<(SimTrace, EnergyResult)> {
    let cycle = full_cycle(s)?;
    simulate_rule_based(&cycle, &s.powertrain, &s.rule, s.calibration_scale)
        .context(|| "rule-based simulation".into())
}

/// Rule-based charge depletion followed by the optimal charge-sustaining policy.
#[derive(Debug, Clone)]
pub struct DpRun {
    pub energy: EnergyResult,
    pub rule_trace: SimTrace,
    /// Start of charge sustaining on the cycle clock, s, and the DP solution from there.
    pub cs: Option<(f64, DpPolicy, Rollout)>,
}

pub fn run_dp(s: &Scenario) -> CliResult<DpRun> {
    let cycle = full_cycle(s)?;
    let (trace, rule_energy) = run_rule(s)?;
    let Some((t0, soc0)) = rule_energy.cs_entry else {
        return Ok(DpRun {
            energy: rule_energy,
            rule_trace: trace,
            cs: None,
        });
    };
    let cs_cycle = cycle
        .slice_from(t0)
        .context(|| "charge-sustaining portion".into())?;
    if cs_cycle.duration() < s.dp.dt {
        return Ok(DpRun {
            energy: rule_energy,
            rule_trace: trace,
            cs: None,
        });
    }
    let demand = build_demand(&cs_cycle, &s.powertrain, s.calibration_scale, &s.demand)
        .context(|| "charge-sustaining demand".into())?;
    let mut cfg = s.dp.clone();
    cfg.initial_soc = soc0.clamp(cfg.soc_min, cfg.soc_max);
    let policy = solve(&demand, &cfg).context(|| "dynamic programming".into())?;
    let r = rollout(&policy, &demand, cfg.initial_soc).context(|| "rollout".into())?;
    let energy = EnergyResult {
        ec_cs_fuel: r.cs_ec,
        cs_fuel_kwh: r.fuel_kwh,
        cs_distance_km: demand.distance_km,
        final_soc: r.final_soc(),
        ..rule_energy
    };
    Ok(DpRun {
        energy,
        rule_trace: trace,
        cs: Some((t0, policy, r)),
    })
}

fn energy_text(s: &Scenario, strategy: Strategy, e: &EnergyResult) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "scenario = {}", s.name);
    let _ = writeln!(text, "strategy = {}", strategy.as_str());
    let _ = writeln!(text, "calibration_scale = {:.5}", s.calibration_scale);
    let _ = writeln!(text, "cd_distance_km = {:.3}", e.cd_distance_km);
    let _ = writeln!(text, "cs_distance_km = {:.3}", e.cs_distance_km);
    let _ = writeln!(text, "cd_dc_kwh = {:.4}", e.cd_dc_kwh);
    let _ = writeln!(text, "cs_fuel_kwh = {:.4}", e.cs_fuel_kwh);
    let _ = writeln!(text, "ec_cd_dc_wh_per_km = {:.2}", e.ec_cd_dc);
    let _ = writeln!(text, "ec_cs_fuel_wh_per_km = {:.2}", e.ec_cs_fuel);
    let _ = writeln!(text, "final_soc = {:.2}", e.final_soc);
    match e.cs_entry {
        Some((t, soc)) => {
            let _ = writeln!(text, "cs_entry_t_s = {t:.1}");
            let _ = writeln!(text, "cs_entry_soc = {soc:.3}");
        }
        None => text.push_str("cs_entry_t_s = none\n"),
    }
    text
}

pub fn simulate(s: &Scenario, strategy: Strategy, export_policy: bool) -> CliResult<Outputs> {
    let mut out = Outputs::default();
    match strategy {
        Strategy::Rule => {
            let (trace, energy) = run_rule(s)?;
            let mut plot = String::from("t_s,v_mps,soc_pct\n");
            for r in &trace.records {
                let _ = writeln!(plot, "{:.3},{:.4},{:.6}", r.t, r.v, r.soc);
            }
            out.add("energy.txt", energy_text(s, strategy, &energy));
            out.add("trace.csv", trace.to_csv());
            out.add("plot.csv", plot);
        }
        Strategy::Dp => {
            let run = run_dp(s)?;
            let cycle = full_cycle(s)?;
            let mut plot = String::from("t_s,v_mps,soc_pct\n");
            let mut traj = String::from("k,t_s,soc_pct,decision\n");
            let mut text = energy_text(s, strategy, &run.energy);
            let t_cs = run.cs.as_ref().map_or(f64::INFINITY, |c| c.0);
            for r in run.rule_trace.records.iter().take_while(|r| r.t < t_cs) {
                let _ = writeln!(plot, "{:.3},{:.4},{:.6}", r.t, r.v, r.soc);
            }
            if let Some((t0, policy, r)) = &run.cs {
                let cfg = policy.config();
                let speeds = cycle.samples();
                for (k, soc) in r.soc.iter().enumerate() {
                    let t = t0 + k as f64 * cfg.dt;
                    let v = speeds.iter().find(|x| x.t >= t - 1e-9).map_or(0.0, |x| x.v);
                    let _ = writeln!(plot, "{t:.3},{v:.4},{soc:.6}");
                    let label = r
                        .decisions
                        .get(k)
                        .map_or("end", |&i| cfg.decisions[i].label.as_str());
                    let _ = writeln!(traj, "{k},{t:.3},{soc:.6},{label}");
                }
                let _ = writeln!(text, "dp_optimal_cost_kwh = {:.4}", policy.optimal_cost());
                let _ = writeln!(text, "dp_genset_on_intervals = {}", r.genset_on_intervals());
                if export_policy {
                    out.add("policy.csv", policy.to_csv());
                }
            }
            out.files.insert(0, ("energy.txt".into(), text));
            out.add("dp_soc.csv", traj);
            out.add("plot.csv", plot);
        }
    }
    Ok(out)
}

fn uf_report(s: &Scenario, e: &EnergyResult) -> CliResult<UfReport> {
    let ac =
        ac_from_dc(e.ec_cd_dc, s.charging_efficiency).context(|| "charging efficiency".into())?;
    let r = UfReport::new(ac, e.ec_cs_fuel, s.uf).context(|| "utility-factor report".into())?;
    if !r.is_additive() {
        return Err(CliError::core(
            "utility-factor report",
            hevopt::Error::Validation("channel totals do not add up".into()),
        ));
    }
    Ok(r)
}

/// Side-by-side utility-factor weighted consumption for both strategies.
pub fn compare(s: &Scenario) -> CliResult<Outputs> {
    let (_, rule) = run_rule(s)?;
    let dp = run_dp(s)?.energy;
    let rows = [("rule", uf_report(s, &rule)?), ("dp", uf_report(s, &dp)?)];
    let mut text = String::new();
    let _ = writeln!(text, "scenario = {}", s.name);
    let _ = writeln!(text, "utility_factor = {:.4}", s.uf);
    let _ = writeln!(text, "charging_efficiency = {:.4}", s.charging_efficiency);
    let _ = writeln!(
        text,
        "{:<10}{:>14}{:>14}{:>14}",
        "strategy", "fuel_wh_km", "ac_elec_wh_km", "total_wh_km"
    );
    let mut csv = format!("strategy,{}\n", UfReport::CSV_HEADER);
    for (name, r) in &rows {
        let _ = writeln!(
            text,
            "{name:<10}{:>14.2}{:>14.2}{:>14.2}",
            r.ec_uf_weighted_fuel, r.ec_uf_weighted_electric, r.ec_uf_weighted_total
        );
        let _ = writeln!(csv, "{name},{}", r.csv_row());
    }
    let _ = writeln!(text, "rule_final_soc = {:.2}", rule.final_soc);
    let _ = writeln!(text, "dp_final_soc = {:.2}", dp.final_soc);
    let mut out = Outputs::default();
    out.add("compare.txt", text);
    out.add("compare.csv", csv);
    Ok(out)
}

/// Charge-sustaining optimum over the study laps with and without diagnostics.
pub fn run_obd(s: &Scenario) -> CliResult<ObdStudy> {
    let cycle = repeat_cycle(&s.cycle, s.obd_laps).context(|| "diagnostic study laps".into())?;
    let demand = build_demand(&cycle, &s.powertrain, s.calibration_scale, &s.demand)
        .context(|| "demand".into())?;
    let mut cfg = s.dp.clone();
    cfg.initial_soc = s.obd_initial_soc;
    obd_study(&demand, &cfg).context(|| "diagnostic study".into())
}

pub fn obd(s: &Scenario) -> CliResult<Outputs> {
    let study = run_obd(s)?;
    let mut text = format!("scenario = {}\n", s.name);
    text.push_str(&study.to_text());
    let mut csv = String::from("k,t_s,soc_without_pct,soc_with_pct\n");
    for (k, (a, b)) in study.without.soc.iter().zip(&study.with.soc).enumerate() {
        let _ = writeln!(csv, "{k},{:.1},{a:.6},{b:.6}", k as f64 * s.dp.dt);
    }
    let mut out = Outputs::default();
    out.add("obd.txt", text);
    out.add("obd_soc.csv", csv);
    Ok(out)
}
