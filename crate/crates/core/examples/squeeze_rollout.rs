//! Squeezing under a low slab. The crouching tripod lowers its body under
//! the 0.34 m ceiling and stands back up afterwards; the standing tripod
//! walks into the slab. Writes the crouching run's trace as CSV.
//!
//! ```text
//! cargo run --example squeeze_rollout -- [clearance]
//! ```

use hexloco::env::EpisodeConfig;
use hexloco::policy::{run_episode, CrouchTripodPolicy, TripodPolicy};
use hexloco::terrain::{TerrainFeatures, TerrainSpec, TunnelParams};
use hexloco::Task;

fn main() -> hexloco::Result<()> {
    let clearance: f64 = std::env::args().nth(1).map_or(Ok(0.34), |a| a.parse()).expect("clearance in metres");
    let config = EpisodeConfig {
        terrain: TerrainSpec::Tunnel(TunnelParams { clearance, ..TunnelParams::default() }),
        ..EpisodeConfig::for_task(Task::Squeeze)
    };

    let crouch = run_episode(config.clone(), &mut CrouchTripodPolicy::default())?;
    let stand = run_episode(config.clone(), &mut TripodPolicy::default())?;

    let (env, _) = hexloco::env::HexapodEnv::reset(config)?;
    let TerrainFeatures::Tunnel(slabs) = &env.terrain().features else { unreachable!() };
    let slab = &slabs[0];
    let front = env.geometry().front_offset();
    println!("slab from x = {:.2} to {:.2} m, clearance {clearance} m", slab.start_x, slab.end_x);

    let rows = crouch.trace.rows();
    let under: Vec<f64> = rows
        .iter()
        .filter(|r| r.position[0] + front > slab.start_x && r.position[0] - front < slab.end_x)
        .map(|r| r.base_height)
        .collect();
    let after: Vec<f64> = rows.iter().filter(|r| r.position[0] - front > slab.end_x).map(|r| r.base_height).collect();
    let lowest = under.iter().copied().fold(f64::INFINITY, f64::min);
    println!(
        "crouch-tripod: {} after {} steps, {} ceiling collisions, b under slab min {lowest:.3} m, b after exit {:.3} m",
        crouch.last.reason.unwrap(),
        crouch.last.info.step,
        crouch.ceiling_collisions,
        after.last().copied().unwrap_or(f64::NAN)
    );
    println!(
        "tripod:        {} after {} steps, {} ceiling collisions, first at {:.2} m walked",
        stand.last.reason.unwrap(),
        stand.last.info.step,
        stand.ceiling_collisions,
        stand.first_collision_at.unwrap_or(f64::NAN)
    );

    let path = std::env::temp_dir().join("hexloco-squeeze-trace.csv");
    crouch.trace.save(&path)?;
    println!("trace: {}", path.display());
    Ok(())
}
