//! Regenerates the map and cycle files shipped under `scenarios/`.
//!
//! Usage: `cargo run -p hevopt --example write_assets -- <scenarios dir>`

use std::path::PathBuf;

use hevopt::cycle::write_cycle;
use hevopt::powertrain::synthetic::{engine_params, generator_params, motor_params};
use hevopt::powertrain::write_map;
use hevopt::synth::{cycle_from_trips, MicroTrip};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "scenarios".into()),
    );
    std::fs::create_dir_all(dir.join("maps"))?;
    std::fs::create_dir_all(dir.join("cycles"))?;
    for (name, params) in [
        ("motor", motor_params()),
        ("engine", engine_params()),
        ("generator", generator_params()),
    ] {
        std::fs::write(
            dir.join("maps").join(format!("{name}.csv")),
            write_map(&params.build(name)?),
        )?;
    }
    let trip = |idle, target, cruise| MicroTrip {
        idle,
        target,
        accel: 1.5,
        cruise,
        wobble: 1.0,
        decel: 1.5,
    };
    let short = cycle_from_trips(
        "short",
        &[
            trip(10.0, 14.0, 60.0),
            trip(15.0, 26.0, 240.0),
            trip(10.0, 12.0, 40.0),
        ],
        10.0,
    )?;
    std::fs::write(dir.join("cycles").join("short.csv"), write_cycle(&short))?;
    Ok(())
}
