//! Seeded synthetic drive cycles.
//!
//! A cycle is a chain of micro-trips (idle, ramp up, cruise with a slow
//! oscillation, ramp down to rest) grouped into urban, highway and aggressive
//! phases, roughly in the spirit of blended certification cycles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cycle::{DriveCycle, Sample};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroTrip {
    /// s at rest before moving.
    pub idle: f64,
    /// m/s.
    pub target: f64,
    /// m/s^2.
    pub accel: f64,
    /// s spent around `target`.
    pub cruise: f64,
    /// m/s amplitude of the cruise oscillation.
    pub wobble: f64,
    /// m/s^2, positive.
    pub decel: f64,
}

/// Acceleration ceiling `a * v` during ramps, m^2/s^3.
const SPECIFIC_POWER: f64 = 25.0;

/// Speed profile of consecutive micro-trips sampled at 1 Hz, ending at rest.
pub fn cycle_from_trips(name: &str, trips: &[MicroTrip], final_idle: f64) -> Result<DriveCycle> {
    let mut v = vec![0.0_f64];
    for trip in trips {
        v.extend(std::iter::repeat(0.0).take(trip.idle.round() as usize));
        let mut cur = 0.0;
        while cur < trip.target {
            let a = trip.accel.min(SPECIFIC_POWER / cur.max(1.0));
            cur = (cur + a).min(trip.target);
            v.push(cur);
        }
        let period = 60.0;
        for k in 1..=trip.cruise.round() as usize {
            let phase = 2.0 * std::f64::consts::PI * k as f64 / period;
            v.push((trip.target + trip.wobble * phase.sin()).max(0.0));
        }
        let mut cur = *v.last().unwrap_or(&0.0);
        while cur > 0.0 {
            cur = (cur - trip.decel).max(0.0);
            v.push(cur);
        }
    }
    v.extend(std::iter::repeat(0.0).take(final_idle.round() as usize));
    let samples = v
        .into_iter()
        .enumerate()
        .map(|(t, v)| Sample::new(t as f64, v, 0.0))
        .collect();
    DriveCycle::new(name, samples)
}

fn urban(rng: &mut ChaCha8Rng) -> MicroTrip {
    MicroTrip {
        idle: rng.gen_range(12.0..24.0),
        target: rng.gen_range(11.0..17.0),
        accel: rng.gen_range(1.2..1.9),
        cruise: rng.gen_range(25.0..55.0),
        wobble: rng.gen_range(0.5..1.5),
        decel: rng.gen_range(1.3..1.8),
    }
}

fn highway(rng: &mut ChaCha8Rng) -> MicroTrip {
    MicroTrip {
        idle: rng.gen_range(8.0..14.0),
        target: rng.gen_range(22.0..25.0),
        accel: rng.gen_range(0.9..1.3),
        cruise: rng.gen_range(260.0..320.0),
        wobble: rng.gen_range(1.0..2.0),
        decel: rng.gen_range(1.0..1.4),
    }
}

fn aggressive(rng: &mut ChaCha8Rng) -> MicroTrip {
    MicroTrip {
        idle: rng.gen_range(6.0..12.0),
        target: rng.gen_range(26.0..29.0),
        accel: rng.gen_range(1.8..2.2),
        cruise: rng.gen_range(70.0..110.0),
        wobble: rng.gen_range(2.0..3.5),
        decel: rng.gen_range(2.0..2.6),
    }
}

/// A blended cycle of roughly 22 km and 23 minutes whose details depend on `seed`.
pub fn synthetic_cycle(seed: u64) -> Result<DriveCycle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trips = Vec::new();
    trips.extend((0..3).map(|_| urban(&mut rng)));
    trips.push(highway(&mut rng));
    trips.extend((0..2).map(|_| aggressive(&mut rng)));
    trips.push(highway(&mut rng));
    trips.extend((0..3).map(|_| urban(&mut rng)));
    cycle_from_trips(&format!("synthetic-{seed}"), &trips, 10.0)
}

/// A short random cycle for property tests and randomized studies.
pub fn random_short_cycle(rng: &mut impl Rng, trips: usize) -> Result<DriveCycle> {
    let list: Vec<MicroTrip> = (0..trips)
        .map(|_| MicroTrip {
            idle: rng.gen_range(2.0..15.0),
            target: rng.gen_range(5.0..30.0),
            accel: rng.gen_range(0.6..2.2),
            cruise: rng.gen_range(5.0..120.0),
            wobble: rng.gen_range(0.0..2.0),
            decel: rng.gen_range(0.8..2.5),
        })
        .collect();
    cycle_from_trips("random", &list, 5.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_closed() {
        let a = synthetic_cycle(7).unwrap();
        let b = synthetic_cycle(7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synthetic_cycle(8).unwrap());
        let s = a.samples();
        assert_eq!(s[0].v, 0.0);
        assert_eq!(s[s.len() - 1].v, 0.0);
        assert!(
            a.distance_km() > 15.0 && a.distance_km() < 30.0,
            "{}",
            a.distance_km()
        );
    }
}
