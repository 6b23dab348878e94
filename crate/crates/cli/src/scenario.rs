//! Scenario files: one TOML document fully determines a run. Relative paths
//! resolve against the scenario file's directory.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use hevopt::accounting::{calibration_factor, Calibration};
use hevopt::cycle::{load_cycle, CycleMetrics, DriveCycle};
use hevopt::dpopt::{
    decisions_from_genset, DemandSettings, DpConfig, TerminalRule, DEFAULT_DELTAS,
};
use hevopt::drive::Powertrain;
use hevopt::dynamics::VehicleParams;
use hevopt::ems::RuleConfig;
use hevopt::powertrain::synthetic::{
    self, DEFAULT_BELT_RATIO, DEFAULT_GEAR_RATIO, DEFAULT_MOTOR_PEAK_KW, DEFAULT_WHEEL_RADIUS,
};
use hevopt::powertrain::{load_map, BatteryParams, EfficiencyMap, GenSet, MotorDrive};
use hevopt::synth::synthetic_cycle;

use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default = "one")]
    laps: usize,
    uf: f64,
    #[serde(default = "default_charging_efficiency")]
    charging_efficiency: f64,
    out: Option<PathBuf>,
    cycle: CycleSection,
    #[serde(default)]
    vehicle: VehicleParams,
    #[serde(default)]
    battery: BatteryParams,
    #[serde(default)]
    maps: MapsSection,
    rule: RuleSection,
    #[serde(default)]
    dp: DpSection,
    #[serde(default)]
    calibration: CalibrationSection,
    #[serde(default)]
    obd: ObdSection,
}

fn one() -> usize {
    1
}

fn default_charging_efficiency() -> f64 {
    0.83
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CycleSection {
    path: Option<PathBuf>,
    synthetic_seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MapsSection {
    motor: Option<PathBuf>,
    engine: Option<PathBuf>,
    generator: Option<PathBuf>,
    gear_ratio: f64,
    wheel_radius: f64,
    motor_peak_kw: f64,
    belt_ratio: f64,
    belt_efficiency: f64,
}

impl Default for MapsSection {
    fn default() -> Self {
        Self {
            motor: None,
            engine: None,
            generator: None,
            gear_ratio: DEFAULT_GEAR_RATIO,
            wheel_radius: DEFAULT_WHEEL_RADIUS,
            motor_peak_kw: DEFAULT_MOTOR_PEAK_KW,
            belt_ratio: DEFAULT_BELT_RATIO,
            belt_efficiency: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleSection {
    initial_soc: f64,
    #[serde(default = "d_soc_high")]
    soc_high: f64,
    #[serde(default = "d_soc_low")]
    soc_low: f64,
    #[serde(default = "d_trigger")]
    cs_trigger: f64,
    #[serde(default = "d_dwell")]
    min_dwell: f64,
    #[serde(default = "d_warmup")]
    warmup: f64,
    #[serde(default = "d_cranking")]
    cranking_kw: f64,
    #[serde(default = "d_current")]
    regen_current_limit: f64,
    #[serde(default = "d_true")]
    regen_enabled: bool,
    #[serde(default = "d_speed")]
    genset_speed_rpm: f64,
    /// Gen-set operating point as SOC per decision interval, %.
    #[serde(default = "d_rule_delta")]
    genset_delta_soc: f64,
}

fn d_soc_high() -> f64 {
    17.0
}
fn d_soc_low() -> f64 {
    12.0
}
fn d_trigger() -> f64 {
    14.0
}
fn d_dwell() -> f64 {
    10.0
}
fn d_warmup() -> f64 {
    20.0
}
fn d_cranking() -> f64 {
    2.0
}
fn d_current() -> f64 {
    150.0
}
fn d_true() -> bool {
    true
}
fn d_speed() -> f64 {
    2800.0
}
fn d_rule_delta() -> f64 {
    DEFAULT_DELTAS[0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DpSection {
    dt: f64,
    soc_min: f64,
    soc_max: f64,
    grid_step: f64,
    deltas: Vec<f64>,
    /// Optional per-delta efficiencies overriding the gen-set map, %.
    efficiencies: Option<Vec<f64>>,
    genset_speed_rpm: f64,
    genset_max_kw: f64,
    terminal: TerminalRule,
    obd_enabled: bool,
    obd_energy_per_event: f64,
    reference_soc: f64,
}

impl Default for DpSection {
    fn default() -> Self {
        Self {
            dt: 10.0,
            soc_min: 12.0,
            soc_max: 17.0,
            grid_step: 0.005,
            deltas: DEFAULT_DELTAS.to_vec(),
            efficiencies: None,
            genset_speed_rpm: 2800.0,
            genset_max_kw: 40.0,
            terminal: TerminalRule::Sustain,
            obd_enabled: false,
            obd_energy_per_event: 0.00497,
            reference_soc: 14.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationSection {
    scale: Option<f64>,
    sim: Option<CycleMetrics>,
    test: Option<CycleMetrics>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ObdSection {
    laps: usize,
    initial_soc: f64,
}

impl Default for ObdSection {
    fn default() -> Self {
        Self {
            laps: 1,
            initial_soc: 14.0,
        }
    }
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub path: PathBuf,
    /// One lap.
    pub cycle: DriveCycle,
    pub laps: usize,
    pub powertrain: Powertrain,
    pub genset: GenSet,
    pub rule: RuleConfig,
    pub dp: DpConfig,
    pub demand: DemandSettings,
    pub calibration_scale: f64,
    pub calibration: Option<Calibration>,
    pub uf: f64,
    pub charging_efficiency: f64,
    pub out: Option<PathBuf>,
    pub obd_laps: usize,
    pub obd_initial_soc: f64,
    pub maps_synthetic: bool,
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub grid_step: Option<f64>,
    pub seed: Option<u64>,
}

fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn load_map_file(path: &Path, label: &str) -> CliResult<EfficiencyMap> {
    load_map(label, open(path)?).context(|| path.display().to_string())
}

impl Scenario {
    pub fn load(path: &Path, overrides: Overrides) -> CliResult<Self> {
        let text = read_to_string(path)?;
        Self::parse(&text, path, overrides)
    }

    /// Parses scenario text; `path` locates relative file references.
    pub fn parse(text: &str, path: &Path, overrides: Overrides) -> CliResult<Self> {
        let bad = |msg: String| CliError::Scenario {
            path: path.to_path_buf(),
            msg,
        };
        let file: ScenarioFile = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let ctx = |what: &str| format!("{}: {what}", path.display());

        let cycle = match (&file.cycle.path, file.cycle.synthetic_seed) {
            (Some(p), None) => {
                let p = resolve(p);
                let name = p
                    .file_stem()
                    .map_or("cycle".into(), |s| s.to_string_lossy().into_owned());
                load_cycle(&name, open(&p)?).context(|| p.display().to_string())?
            }
            (None, Some(seed)) => {
                synthetic_cycle(overrides.seed.unwrap_or(seed)).context(|| ctx("cycle"))?
            }
            _ => {
                return Err(bad(
                    "[cycle] needs exactly one of 'path' or 'synthetic_seed'".into(),
                ))
            }
        };
        if file.laps == 0 {
            return Err(bad("laps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&file.uf) {
            return Err(bad(format!("uf {} outside [0, 1]", file.uf)));
        }
        if !(file.charging_efficiency > 0.0 && file.charging_efficiency <= 1.0) {
            return Err(bad(format!(
                "charging_efficiency {} outside (0, 1]",
                file.charging_efficiency
            )));
        }

        let m = &file.maps;
        let maps_synthetic = m.motor.is_none() && m.engine.is_none() && m.generator.is_none();
        let motor_map = match &m.motor {
            Some(p) => load_map_file(&resolve(p), "motor")?,
            None => synthetic::motor_params()
                .build("motor")
                .context(|| ctx("motor map"))?,
        };
        let engine_map = match &m.engine {
            Some(p) => load_map_file(&resolve(p), "engine")?,
            None => synthetic::engine_params()
                .build("engine")
                .context(|| ctx("engine map"))?,
        };
        let generator_map = match &m.generator {
            Some(p) => load_map_file(&resolve(p), "generator")?,
            None => synthetic::generator_params()
                .build("generator")
                .context(|| ctx("generator map"))?,
        };
        let genset = GenSet::new(engine_map, generator_map, m.belt_ratio, m.belt_efficiency)
            .context(|| ctx("gen-set maps"))?;
        let powertrain = Powertrain {
            vehicle: file.vehicle,
            motor: MotorDrive {
                map: motor_map,
                gear_ratio: m.gear_ratio,
                wheel_radius: m.wheel_radius,
                peak_power: m.motor_peak_kw,
            },
            battery: file.battery.clone(),
        };
        powertrain
            .validate()
            .context(|| ctx("vehicle or battery"))?;
        let capacity = powertrain.battery.capacity_kwh;

        let r = &file.rule;
        let d = &file.dp;
        let rule_kw = r.genset_delta_soc / 100.0 * capacity * 3600.0 / d.dt;
        let point = genset
            .point_for_power(r.genset_speed_rpm, rule_kw)
            .context(|| ctx("rule gen-set point"))?;
        let rule = RuleConfig {
            soc_high: r.soc_high,
            soc_low: r.soc_low,
            cs_trigger: r.cs_trigger,
            min_dwell: r.min_dwell,
            warmup: r.warmup,
            cranking_kw: r.cranking_kw,
            genset_point: point,
            regen_current_limit: r.regen_current_limit,
            regen_enabled: r.regen_enabled,
            initial_soc: r.initial_soc,
        };
        rule.validate().context(|| ctx("[rule]"))?;

        let mut decisions =
            decisions_from_genset(&genset, d.genset_speed_rpm, &d.deltas, d.dt, capacity)
                .context(|| ctx("[dp] decisions"))?;
        if let Some(effs) = &d.efficiencies {
            if effs.len() != d.deltas.len() {
                return Err(bad(format!(
                    "[dp] efficiencies has {} entries for {} deltas",
                    effs.len(),
                    d.deltas.len()
                )));
            }
            for (dec, &e) in decisions[1..].iter_mut().zip(effs) {
                dec.efficiency = e;
            }
        }
        let dp = DpConfig {
            dt: d.dt,
            soc_min: d.soc_min,
            soc_max: d.soc_max,
            grid_step: overrides.grid_step.unwrap_or(d.grid_step),
            decisions,
            terminal: d.terminal,
            initial_soc: r.cs_trigger.clamp(d.soc_min, d.soc_max),
            obd_enabled: d.obd_enabled,
            obd_energy_per_event: d.obd_energy_per_event,
            capacity_kwh: capacity,
            genset_max_kw: d.genset_max_kw,
        };
        dp.validate().context(|| ctx("[dp]"))?;

        let c = &file.calibration;
        let (calibration_scale, calibration) = match (c.scale, &c.sim, &c.test) {
            (Some(s), None, None) => {
                if !(s > 0.0) {
                    return Err(bad(format!("calibration scale {s} must be positive")));
                }
                (s, None)
            }
            (None, Some(sim), Some(test)) => {
                let cal = calibration_factor(sim, test).context(|| ctx("[calibration]"))?;
                (cal.energy_scale, Some(cal))
            }
            (None, None, None) => (1.0, None),
            _ => {
                return Err(bad(
                    "[calibration] takes either 'scale' or both 'sim' and 'test' metrics".into(),
                ))
            }
        };
        if file.obd.laps == 0 {
            return Err(bad("[obd] laps must be at least 1".into()));
        }

        Ok(Self {
            name: file.name,
            path: path.to_path_buf(),
            cycle,
            laps: file.laps,
            powertrain,
            genset,
            rule,
            demand: DemandSettings {
                dt: d.dt,
                reference_soc: d.reference_soc,
                regen_current_limit: r.regen_enabled.then_some(r.regen_current_limit),
            },
            dp,
            calibration_scale,
            calibration,
            uf: file.uf,
            charging_efficiency: file.charging_efficiency,
            out: file.out.as_deref().map(resolve),
            obd_laps: file.obd.laps,
            obd_initial_soc: file.obd.initial_soc,
            maps_synthetic,
        })
    }
}
