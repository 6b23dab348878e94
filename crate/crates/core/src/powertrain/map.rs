use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};

const RPM_TO_RAD_S: f64 = 2.0 * std::f64::consts::PI / 60.0;

/// Converts rpm to rad/s.
pub fn rpm_to_rad_s(rpm: f64) -> f64 {
    rpm * RPM_TO_RAD_S
}

/// Speed x torque efficiency grid. `None` marks a node outside the feasible envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMap {
    label: String,
    speed_axis: Vec<f64>,
    torque_axis: Vec<f64>,
    /// Row-major over (speed, torque).
    values: Vec<Option<f64>>,
}

fn check_axis(axis: &[f64], what: &str) -> Result<()> {
    if axis.len() < 2 {
        return Err(validation(format!("{what} axis needs at least 2 points")));
    }
    if axis.iter().any(|x| !x.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(validation(format!(
            "{what} axis must be finite and strictly ascending"
        )));
    }
    Ok(())
}

impl EfficiencyMap {
    pub fn new(
        label: impl Into<String>,
        speed_axis: Vec<f64>,
        torque_axis: Vec<f64>,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        check_axis(&speed_axis, "speed")?;
        check_axis(&torque_axis, "torque")?;
        if values.len() != speed_axis.len() * torque_axis.len() {
            return Err(validation(format!(
                "map needs {} values, got {}",
                speed_axis.len() * torque_axis.len(),
                values.len()
            )));
        }
        if let Some(bad) = values
            .iter()
            .flatten()
            .find(|v| !(**v > 0.0 && **v <= 100.0))
        {
            return Err(validation(format!("efficiency {bad} outside (0, 100]")));
        }
        Ok(Self {
            label: label.into(),
            speed_axis,
            torque_axis,
            values,
        })
    }

    /// Builds a map by evaluating `f(speed, torque)` at every node.
    pub fn from_fn(
        label: impl Into<String>,
        speed_axis: Vec<f64>,
        torque_axis: Vec<f64>,
        f: impl Fn(f64, f64) -> Option<f64>,
    ) -> Result<Self> {
        let values = speed_axis
            .iter()
            .flat_map(|&s| torque_axis.iter().map(move |&t| (s, t)))
            .map(|(s, t)| f(s, t))
            .collect();
        Self::new(label, speed_axis, torque_axis, values)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn speed_axis(&self) -> &[f64] {
        &self.speed_axis
    }

    pub fn torque_axis(&self) -> &[f64] {
        &self.torque_axis
    }

    pub fn node(&self, speed_idx: usize, torque_idx: usize) -> Option<f64> {
        self.values[speed_idx * self.torque_axis.len() + torque_idx]
    }

    /// Iterates `(speed, torque, value)` over every node.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, Option<f64>)> + '_ {
        let nt = self.torque_axis.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(k, v)| (self.speed_axis[k / nt], self.torque_axis[k % nt], *v))
    }

    pub fn feasible_count(&self) -> usize {
        self.values.iter().flatten().count()
    }

    pub fn contains(&self, speed: f64, torque: f64) -> bool {
        let (s, t) = (&self.speed_axis, &self.torque_axis);
        speed >= s[0] && speed <= s[s.len() - 1] && torque >= t[0] && torque <= t[t.len() - 1]
    }

    pub fn max_torque(&self) -> f64 {
        self.torque_axis[self.torque_axis.len() - 1]
    }

    pub fn max_speed(&self) -> f64 {
        self.speed_axis[self.speed_axis.len() - 1]
    }
}

/// Index of the cell `[axis[i], axis[i+1]]` holding `x` and the fractional position in it.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let i = axis
        .partition_point(|&a| a <= x)
        .saturating_sub(1)
        .min(axis.len() - 2);
    let frac = (x - axis[i]) / (axis[i + 1] - axis[i]);
    (i, frac)
}

/// Bilinear interpolation over the four nodes enclosing `(speed, torque)`.
/// Nodes carrying zero weight are not required to be feasible.
pub fn map_lookup(map: &EfficiencyMap, speed: f64, torque: f64) -> Result<f64> {
    if !map.contains(speed, torque) {
        return Err(Error::OutOfRange {
            label: map.label.clone(),
            speed,
            torque,
        });
    }
    let (i, a) = locate(&map.speed_axis, speed);
    let (j, b) = locate(&map.torque_axis, torque);
    let corners = [
        ((1.0 - a) * (1.0 - b), map.node(i, j)),
        (a * (1.0 - b), map.node(i + 1, j)),
        ((1.0 - a) * b, map.node(i, j + 1)),
        (a * b, map.node(i + 1, j + 1)),
    ];
    let mut acc = 0.0;
    for (w, v) in corners {
        if w == 0.0 {
            continue;
        }
        match v {
            Some(v) => acc += w * v,
            None => {
                return Err(Error::InfeasibleRegion {
                    label: map.label.clone(),
                    speed,
                    torque,
                })
            }
        }
    }
    Ok(acc)
}

/// Merges engine and generator maps into a fuel-to-electric gen-set map on the
/// engine's axes. The generator turns at `belt_ratio` times engine speed.
pub fn merge_gen_set(
    engine: &EfficiencyMap,
    generator: &EfficiencyMap,
    belt_ratio: f64,
    belt_efficiency: f64,
) -> Result<EfficiencyMap> {
    if !(belt_ratio > 0.0) {
        return Err(domain(format!(
            "belt ratio must be positive, got {belt_ratio}"
        )));
    }
    if !(belt_efficiency > 0.0 && belt_efficiency <= 1.0) {
        return Err(domain(format!(
            "belt efficiency must lie in (0, 1], got {belt_efficiency}"
        )));
    }
    let values: Vec<Option<f64>> = engine
        .nodes()
        .map(|(s, t, eng)| {
            let eng = eng?;
            let (gs, gt) = generator_point(s, t, belt_ratio, belt_efficiency);
            let gen = map_lookup(generator, gs, gt).ok()?;
            Some(eng * gen * belt_efficiency / 100.0)
        })
        .collect();
    if values.iter().all(Option::is_none) {
        return Err(Error::EmptyMap);
    }
    EfficiencyMap::new(
        format!("{}+{}", engine.label, generator.label),
        engine.speed_axis.clone(),
        engine.torque_axis.clone(),
        values,
    )
}

/// Generator speed and input torque for an engine operating point.
pub fn generator_point(
    engine_speed: f64,
    engine_torque: f64,
    belt_ratio: f64,
    belt_efficiency: f64,
) -> (f64, f64) {
    (
        engine_speed * belt_ratio,
        engine_torque * belt_efficiency / belt_ratio,
    )
}

/// Reads the matrix map format: first row is the torque axis (leading cell
/// ignored), first column the speed axis, body efficiencies in %, empty cell
/// means infeasible.
pub fn load_map<R: BufRead>(label: &str, source: R) -> Result<EfficiencyMap> {
    let mut torque_axis: Option<Vec<f64>> = None;
    let mut speed_axis = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid number '{s}'"),
            })
        };
        match &torque_axis {
            None => {
                let axis = cells[1..]
                    .iter()
                    .map(|c| parse(c))
                    .collect::<Result<Vec<_>>>()?;
                torque_axis = Some(axis);
            }
            Some(axis) => {
                if cells.len() != axis.len() + 1 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected {} cells, got {}", axis.len() + 1, cells.len()),
                    });
                }
                speed_axis.push(parse(cells[0])?);
                for c in &cells[1..] {
                    values.push(if c.is_empty() { None } else { Some(parse(c)?) });
                }
            }
        }
    }
    let torque_axis = torque_axis.ok_or(Error::Parse {
        line: 0,
        msg: "missing torque-axis row".into(),
    })?;
    EfficiencyMap::new(label, speed_axis, torque_axis, values)
}

pub fn load_map_str(label: &str, text: &str) -> Result<EfficiencyMap> {
    load_map(label, text.as_bytes())
}

/// Writes a map in the format `load_map` reads.
pub fn write_map(map: &EfficiencyMap) -> String {
    let mut out = String::from("rpm\\Nm");
    for t in &map.torque_axis {
        out.push_str(&format!(",{t}"));
    }
    out.push('\n');
    for (i, s) in map.speed_axis.iter().enumerate() {
        out.push_str(&format!("{s}"));
        for j in 0..map.torque_axis.len() {
            match map.node(i, j) {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Which efficiency relation converts a characterization row into a map node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MachineKind {
    /// Electrical in, mechanical out.
    Motor,
    /// Mechanical in, electrical out.
    Generator,
}

/// One row of `omega_rpm,T_Nm,V_volts,I_amps` characterization data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterizationRow {
    pub speed_rpm: f64,
    pub torque: f64,
    pub volts: f64,
    pub amps: f64,
}

pub fn load_characterization<R: BufRead>(source: R) -> Result<Vec<CharacterizationRow>> {
    let mut header_seen = false;
    let mut rows = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !header_seen {
            if cells != ["omega_rpm", "T_Nm", "V_volts", "I_amps"] {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected header 'omega_rpm,T_Nm,V_volts,I_amps'".into(),
                });
            }
            header_seen = true;
            continue;
        }
        if cells.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 4 fields, got {}", cells.len()),
            });
        }
        let mut f = [0.0; 4];
        for (k, c) in cells.iter().enumerate() {
            f[k] = c.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid number '{c}'"),
            })?;
        }
        rows.push(CharacterizationRow {
            speed_rpm: f[0],
            torque: f[1],
            volts: f[2],
            amps: f[3],
        });
    }
    Ok(rows)
}

/// Builds a map from characterization rows. Axes are the distinct speeds and
/// torques present; grid nodes without a row, or with zero efficiency, are
/// infeasible.
pub fn map_from_characterization(
    label: &str,
    kind: MachineKind,
    rows: &[CharacterizationRow],
) -> Result<EfficiencyMap> {
    let axis = |get: fn(&CharacterizationRow) -> f64| {
        let mut a: Vec<f64> = rows.iter().map(get).collect();
        a.sort_by(f64::total_cmp);
        a.dedup();
        a
    };
    let speed_axis = axis(|r| r.speed_rpm);
    let torque_axis = axis(|r| r.torque);
    let nt = torque_axis.len();
    let mut values = vec![None; speed_axis.len() * nt];
    for r in rows {
        let eff = match kind {
            MachineKind::Motor => super::motor_efficiency(r.torque, r.speed_rpm, r.volts, r.amps)?,
            MachineKind::Generator => {
                super::generator_efficiency(r.volts, r.amps, r.torque, r.speed_rpm)?
            }
        };
        let i = speed_axis.partition_point(|&s| s < r.speed_rpm);
        let j = torque_axis.partition_point(|&t| t < r.torque);
        let slot = &mut values[i * nt + j];
        if slot.is_some() {
            return Err(validation(format!(
                "duplicate characterization point ({}, {})",
                r.speed_rpm, r.torque
            )));
        }
        *slot = (eff > 0.0).then_some(eff);
    }
    EfficiencyMap::new(label, speed_axis, torque_axis, values)
}
