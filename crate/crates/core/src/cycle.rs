//! Drive-cycle ingestion, composition and wheel-level cycle metrics.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// Speed below which the vehicle is considered idle, m/s.
pub const DEFAULT_IDLE_SPEED: f64 = 0.1;

/// One logged point of a drive cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Time, s.
    pub t: f64,
    /// Vehicle speed, m/s.
    pub v: f64,
    /// Road grade, degrees.
    pub grade: f64,
}

impl Sample {
    pub fn new(t: f64, v: f64, grade: f64) -> Self {
        Self { t, v, grade }
    }
}

/// A validated, timestamped velocity/grade trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCycle {
    name: String,
    samples: Vec<Sample>,
    distance_km: f64,
}

impl DriveCycle {
    /// Builds a cycle, checking that time starts at zero and strictly increases,
    /// speeds are nonnegative and grades are finite.
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(validation(format!(
                "a drive cycle needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples[0].t != 0.0 {
            return Err(validation(format!(
                "first sample must be at t = 0, got {}",
                samples[0].t
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || !s.v.is_finite() || !s.grade.is_finite() {
                return Err(validation(format!("sample {i} has a non-finite field")));
            }
            if s.v < 0.0 {
                return Err(validation(format!("negative speed {} at sample {i}", s.v)));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(validation(format!(
                    "time not strictly increasing at sample {i} ({} after {})",
                    s.t,
                    samples[i - 1].t
                )));
            }
        }
        let distance_km = trapezoid_distance_m(&samples) / 1000.0;
        Ok(Self {
            name: name.into(),
            samples,
            distance_km,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn distance_km(&self) -> f64 {
        self.distance_km
    }

    /// Time of the last sample, s.
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.v).collect()
    }

    /// The portion of the cycle from `t_start` onward, with time rebased to zero.
    ///
    /// `t_start` must coincide with a sample time.
    pub fn slice_from(&self, t_start: f64) -> Result<DriveCycle> {
        let idx = self
            .samples
            .iter()
            .position(|s| s.t == t_start)
            .ok_or_else(|| validation(format!("no sample at t = {t_start}")))?;
        let samples = self.samples[idx..]
            .iter()
            .map(|s| Sample::new(s.t - t_start, s.v, s.grade))
            .collect();
        DriveCycle::new(format!("{}[{}..]", self.name, t_start), samples)
    }
}

fn trapezoid_distance_m(samples: &[Sample]) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (w[0].v + w[1].v) * (w[1].t - w[0].t))
        .sum()
}

/// Parses the comma-separated cycle format: header `t_s,v_mps[,grade_deg]`,
/// `#` comment lines and blank lines ignored.
pub fn load_cycle<R: BufRead>(name: &str, source: R) -> Result<DriveCycle> {
    let mut has_grade: Option<bool> = None;
    let mut samples = Vec::new();
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
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        match has_grade {
            None => {
                has_grade = Some(match fields.as_slice() {
                    ["t_s", "v_mps"] => false,
                    ["t_s", "v_mps", "grade_deg"] => true,
                    _ => {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!(
                                "expected header 't_s,v_mps[,grade_deg]', got '{trimmed}'"
                            ),
                        })
                    }
                });
            }
            Some(grade_col) => {
                let expected = if grade_col { 3 } else { 2 };
                if fields.len() != expected {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected {expected} fields, got {}", fields.len()),
                    });
                }
                let num = |s: &str, what: &str| -> Result<f64> {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("invalid {what} '{s}'"),
                    })
                };
                let t = num(fields[0], "time")?;
                let v = num(fields[1], "speed")?;
                let grade = if grade_col {
                    num(fields[2], "grade")?
                } else {
                    0.0
                };
                samples.push(Sample::new(t, v, grade));
            }
        }
    }
    if has_grade.is_none() {
        return Err(Error::Parse {
            line: 0,
            msg: "missing header row".into(),
        });
    }
    DriveCycle::new(name, samples)
}

pub fn load_cycle_str(name: &str, text: &str) -> Result<DriveCycle> {
    load_cycle(name, text.as_bytes())
}

/// Writes a cycle in the same format `load_cycle` reads.
pub fn write_cycle(c: &DriveCycle) -> String {
    let mut out = String::from("t_s,v_mps,grade_deg\n");
    for s in c.samples() {
        out.push_str(&format!("{},{},{}\n", s.t, s.v, s.grade));
    }
    out
}

/// Concatenates `n` laps of `c` end to end. Lap `k` is shifted by `k * duration`
/// and shares its first instant with the end of lap `k - 1`, so the cycle must
/// end in the state it starts in.
pub fn repeat_cycle(c: &DriveCycle, n: usize) -> Result<DriveCycle> {
    if n == 0 {
        return Err(Error::Domain("lap count must be at least 1".into()));
    }
    let samples = c.samples();
    let (first, last) = (samples[0], samples[samples.len() - 1]);
    if n > 1 && (first.v != last.v || first.grade != last.grade) {
        return Err(Error::Domain(format!(
            "cycle '{}' does not close (starts at {} m/s, ends at {} m/s); cannot repeat",
            c.name(),
            first.v,
            last.v
        )));
    }
    let duration = c.duration();
    let mut out = Vec::with_capacity(n * (samples.len() - 1) + 1);
    out.extend_from_slice(samples);
    for lap in 1..n {
        let offset = lap as f64 * duration;
        out.extend(
            samples[1..]
                .iter()
                .map(|s| Sample::new(s.t + offset, s.v, s.grade)),
        );
    }
    let name = if n == 1 {
        c.name().to_string()
    } else {
        format!("{}x{}", c.name(), n)
    };
    DriveCycle::new(name, out)
}

/// Wheel-level characterization of a driven cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleMetrics {
    /// Wh/km.
    pub positive_propulsion_energy: f64,
    /// kW.
    pub peak_power: f64,
    /// kW.
    pub avg_positive_power: f64,
    /// %.
    pub percent_idle: f64,
}

/// Dual-cell time weight of each sample: half of each adjacent interval.
pub(crate) fn sample_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { t[i] - t[i - 1] } else { 0.0 };
            let right = if i + 1 < n { t[i + 1] - t[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Computes wheel-level cycle metrics from a `(t [s], P [kW])` series and the
/// matching speeds.
pub fn compute_metrics(
    power: &[(f64, f64)],
    speeds: &[f64],
    distance_km: f64,
    idle_speed: f64,
) -> Result<CycleMetrics> {
    if power.len() != speeds.len() {
        return Err(validation(format!(
            "power series has {} samples but speed series has {}",
            power.len(),
            speeds.len()
        )));
    }
    if power.len() < 2 {
        return Err(validation("metrics need at least 2 samples"));
    }
    if !(distance_km > 0.0) {
        return Err(validation(format!(
            "distance must be positive, got {distance_km}"
        )));
    }
    if power.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(validation("power series time must strictly increase"));
    }

    // kW * s -> Wh
    let positive_kws: f64 = power
        .windows(2)
        .map(|w| 0.5 * (w[0].1.max(0.0) + w[1].1.max(0.0)) * (w[1].0 - w[0].0))
        .sum();
    let positive_propulsion_energy = positive_kws / 3.6 / distance_km;

    let peak_power = power.iter().map(|p| p.1).fold(0.0_f64, f64::max);

    let t: Vec<f64> = power.iter().map(|p| p.0).collect();
    let w = sample_weights(&t);
    let (mut pos_w, mut pos_wp, mut idle_w, mut total_w) = (0.0, 0.0, 0.0, 0.0);
    for ((&(_, p), &v), &wi) in power.iter().zip(speeds).zip(&w) {
        total_w += wi;
        if p > 0.0 {
            pos_w += wi;
            pos_wp += wi * p;
        }
        if v < idle_speed {
            idle_w += wi;
        }
    }
    let avg_positive_power = if pos_w > 0.0 { pos_wp / pos_w } else { 0.0 };
    let percent_idle = idle_w / total_w * 100.0;

    Ok(CycleMetrics {
        positive_propulsion_energy,
        peak_power,
        avg_positive_power,
        percent_idle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc(rows: &[(f64, f64)]) -> DriveCycle {
        DriveCycle::new(
            "t",
            rows.iter().map(|&(t, v)| Sample::new(t, v, 0.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_row_cycle_distance() {
        let c = load_cycle_str("x", "t_s,v_mps\n0,0\n1,10\n").unwrap();
        assert_eq!(c.len(), 2);
        assert!((c.distance_km() - 0.005).abs() < 1e-15);
        assert_eq!(c.samples()[1].grade, 0.0);
    }

    #[test]
    fn negative_speed_rejected() {
        let err = load_cycle_str("x", "t_s,v_mps\n0,0\n1,-1\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn non_increasing_time_rejected() {
        let err = load_cycle_str("x", "t_s,v_mps\n0,0\n1,1\n1,2\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = load_cycle_str("x", "# c\nt_s,v_mps,grade_deg\n0,0,0\n1,abc,0\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 4,
                msg: "invalid speed 'abc'".into()
            }
        );
        let err = load_cycle_str("x", "t_s,v_mps\n0,0\n1,2,3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn bad_header_and_empty_input() {
        assert!(matches!(
            load_cycle_str("x", "time,speed\n0,0\n").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(load_cycle_str("x", "# nothing\n").is_err());
        assert!(matches!(
            load_cycle_str("x", "t_s,v_mps\n0,0\n").unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn comments_and_grade_column() {
        let c = load_cycle_str(
            "g",
            "# hdr\nt_s,v_mps,grade_deg\n0,0,1.5\n# mid\n\n2,4,-2\n",
        )
        .unwrap();
        assert_eq!(c.samples()[0].grade, 1.5);
        assert_eq!(c.samples()[1].grade, -2.0);
        assert!((c.distance_km() - 0.004).abs() < 1e-15);
    }

    #[test]
    fn first_time_must_be_zero() {
        assert!(DriveCycle::new(
            "x",
            vec![Sample::new(1.0, 0.0, 0.0), Sample::new(2.0, 0.0, 0.0)]
        )
        .is_err());
    }

    #[test]
    fn repeat_identity_and_doubling() {
        let c = cyc(&[(0.0, 0.0), (1.0, 5.0), (3.0, 7.0), (4.0, 0.0)]);
        assert_eq!(repeat_cycle(&c, 1).unwrap().samples(), c.samples());
        let r = repeat_cycle(&c, 2).unwrap();
        assert_eq!(r.duration(), 2.0 * c.duration());
        assert_eq!(r.len(), 2 * c.len() - 1);
        assert!((r.distance_km() - 2.0 * c.distance_km()).abs() <= 1e-9 * c.distance_km());
    }

    #[test]
    fn repeat_zero_is_domain_error() {
        let c = cyc(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(repeat_cycle(&c, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn repeat_open_cycle_rejected() {
        let c = cyc(&[(0.0, 0.0), (1.0, 5.0)]);
        assert!(matches!(repeat_cycle(&c, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn slice_rebases_time() {
        let c = cyc(&[(0.0, 0.0), (1.0, 5.0), (2.0, 5.0), (3.0, 0.0)]);
        let s = c.slice_from(1.0).unwrap();
        assert_eq!(s.samples()[0], Sample::new(0.0, 5.0, 0.0));
        assert_eq!(s.duration(), 2.0);
        assert!(c.slice_from(1.5).is_err());
    }

    #[test]
    fn steady_cruise_metrics() {
        // 8.544 kW at 20 m/s for 100 s: 854.4 kJ = 237.333 Wh over 2 km
        let power: Vec<(f64, f64)> = (0..=100).map(|i| (i as f64, 8.544)).collect();
        let v = vec![20.0; 101];
        let m = compute_metrics(&power, &v, 2.0, DEFAULT_IDLE_SPEED).unwrap();
        assert!((m.positive_propulsion_energy - 854.4 / 3.6 / 2.0).abs() < 1e-9);
        assert!((m.positive_propulsion_energy - 118.67).abs() < 0.005);
        assert_eq!(m.peak_power, 8.544);
        assert!((m.avg_positive_power - 8.544).abs() < 1e-12);
        assert_eq!(m.percent_idle, 0.0);
    }

    #[test]
    fn idle_cycle_metrics() {
        let power: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.0)).collect();
        let m = compute_metrics(&power, &[0.0; 10], 1.0, DEFAULT_IDLE_SPEED).unwrap();
        assert_eq!(m.positive_propulsion_energy, 0.0);
        assert_eq!(m.peak_power, 0.0);
        assert_eq!(m.avg_positive_power, 0.0);
        assert_eq!(m.percent_idle, 100.0);
    }

    #[test]
    fn metrics_length_mismatch() {
        let power = vec![(0.0, 1.0), (1.0, 1.0)];
        assert!(matches!(
            compute_metrics(&power, &[1.0], 1.0, DEFAULT_IDLE_SPEED),
            Err(Error::Validation(_))
        ));
        assert!(compute_metrics(&power, &[1.0, 1.0], 0.0, DEFAULT_IDLE_SPEED).is_err());
    }

    #[test]
    fn idle_depends_only_on_speed() {
        let v = [0.0, 0.0, 3.0, 8.0, 0.05, 0.0];
        let p1: Vec<(f64, f64)> = v
            .iter()
            .enumerate()
            .map(|(i, _)| (i as f64, 1.0 + i as f64))
            .collect();
        let p2: Vec<(f64, f64)> = v
            .iter()
            .enumerate()
            .map(|(i, _)| (i as f64, -3.0 * i as f64))
            .collect();
        let a = compute_metrics(&p1, &v, 1.0, DEFAULT_IDLE_SPEED).unwrap();
        let b = compute_metrics(&p2, &v, 1.0, DEFAULT_IDLE_SPEED).unwrap();
        assert_eq!(a.percent_idle, b.percent_idle);
        // ends weigh half an interval: idle = 0.5 + 1 + 1 + 0.5 of 5 s
        assert!((a.percent_idle - 60.0).abs() < 1e-12);
    }
}
