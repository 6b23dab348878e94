use hevopt::drive::Powertrain;
use hevopt::dynamics::VehicleParams;
use hevopt::ems::{simulate_rule_based, Mode, RuleConfig, SimTrace};
use hevopt::powertrain::synthetic::{default_genset, default_motor_drive};
use hevopt::powertrain::BatteryParams;
use hevopt::synth::random_short_cycle;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn powertrain() -> Powertrain {
    Powertrain {
        vehicle: VehicleParams::default(),
        motor: default_motor_drive().unwrap(),
        battery: BatteryParams::default(),
    }
}

fn run(seed: u64, trips: usize, initial_soc: f64, regen: bool) -> SimTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cycle = random_short_cycle(&mut rng, trips).unwrap();
    let point = default_genset()
        .unwrap()
        .point_for_power(2800.0, 20.0)
        .unwrap();
    let mut cfg = RuleConfig::new(point, initial_soc);
    cfg.regen_enabled = regen;
    simulate_rule_based(&cycle, &powertrain(), &cfg, 1.0)
        .unwrap()
        .0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn genset_changes_respect_dwell(seed in 0u64..100_000, soc in 13.0f64..16.0) {
        let trace = run(seed, 8, soc, true);
        let t = trace.genset_transitions();
        for w in t.windows(2) {
            prop_assert!(w[1] - w[0] >= 10.0 - 1e-9, "{:?}", t);
        }
    }

    #[test]
    fn warmup_delivers_nothing(seed in 0u64..100_000, soc in 13.0f64..16.0) {
        let trace = run(seed, 8, soc, true);
        let recs = &trace.records;
        for (k, w) in recs.windows(2).enumerate() {
            if !w[0].genset_on && w[1].genset_on {
                let start = w[1].t;
                for r in recs[k + 1..].iter().take_while(|r| r.t < start + 20.0) {
                    prop_assert_eq!(r.genset_kw, 0.0);
                }
            }
        }
        if recs[0].genset_on {
            for r in recs.iter().take_while(|r| r.t < 20.0) {
                prop_assert_eq!(r.genset_kw, 0.0);
            }
        }
    }

    #[test]
    fn cs_hysteresis_holds(seed in 0u64..100_000, soc in 12.5f64..16.5) {
        let trace = run(seed, 10, soc, true);
        let recs = &trace.records;
        let q = recs.windows(2).map(|w| (w[1].soc - w[0].soc).abs()).fold(0.0, f64::max);
        for r in recs.iter().filter(|r| r.mode == Mode::ChargeSustaining) {
            if r.genset_on {
                prop_assert!(r.soc <= 17.0 + q + 1e-9, "on at {} s, SOC {} (q {})", r.t, r.soc, q);
            }
            if r.soc < 14.0 - q {
                prop_assert!(r.genset_on, "off at {} s, SOC {}", r.t, r.soc);
            }
        }
    }

    #[test]
    fn depletion_without_regen_is_monotone(seed in 0u64..100_000) {
        let trace = run(seed, 4, 80.0, false);
        for w in trace.records.windows(2) {
            prop_assert!(w[0].mode == Mode::ChargeDepleting);
            prop_assert!(w[1].soc <= w[0].soc);
            if w[0].motor_kw > 0.0 {
                prop_assert!(w[1].soc < w[0].soc);
            }
        }
    }

    /// Chemistry energy plus gen-set output equals bus load plus ohmic loss.
    #[test]
    fn energy_bookkeeping_closes(seed in 0u64..100_000, soc in 13.0f64..30.0) {
        let trace = run(seed, 8, soc, true);
        let b = BatteryParams::default();
        let (mut supply, mut demand) = (0.0, 0.0);
        for w in trace.records.windows(2) {
            let r = w[0];
            let dt = w[1].t - r.t;
            supply += (b.voc(r.soc) * r.current / 1000.0 + r.genset_kw) * dt;
            demand += (r.motor_kw + r.cranking_kw + b.internal_resistance * r.current * r.current / 1000.0) * dt;
        }
        let scale = supply.abs().max(demand.abs()).max(1.0);
        prop_assert!((supply - demand).abs() <= 1e-6 * scale, "{} vs {}", supply, demand);
    }
}

#[test]
fn exactly_one_mode_switch() {
    for seed in 0..20 {
        let trace = run(seed, 12, 15.0, true);
        let switches = trace
            .records
            .windows(2)
            .filter(|w| w[0].mode != w[1].mode)
            .count();
        assert!(switches <= 1);
        assert!(trace
            .records
            .windows(2)
            .all(|w| !(w[0].mode == Mode::ChargeSustaining && w[1].mode == Mode::ChargeDepleting)));
    }
}
