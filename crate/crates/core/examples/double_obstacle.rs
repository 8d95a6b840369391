//! Two low slabs in a row: the crouching tripod ducks under the first,
//! rises in the gap and ducks again, so its body-height trace has two
//! valleys with a peak between them.
//!
//! ```text
//! cargo run --example double_obstacle -- [gap_m]
//! ```

use hexloco::env::EpisodeConfig;
use hexloco::policy::{run_episode, CrouchTripodPolicy};
use hexloco::terrain::{TerrainSpec, TunnelParams};
use hexloco::Task;

fn main() -> hexloco::Result<()> {
    let gap: f64 = std::env::args().nth(1).map_or(Ok(1.0), |a| a.parse()).expect("gap in metres");
    let config = EpisodeConfig {
        terrain: TerrainSpec::Tunnel(TunnelParams {
            clearance: 0.34,
            tunnel_length: 0.6,
            slab_count: 2,
            slab_gap: gap,
            ..TunnelParams::default()
        }),
        max_steps: 1500,
        ..EpisodeConfig::for_task(Task::Squeeze)
    };
    let ep = run_episode(config, &mut CrouchTripodPolicy::default())?;
    let b = ep.trace.base_heights();

    // collapse plateaus, then report the turning points
    let mut levels: Vec<(usize, f64)> = Vec::new();
    for (i, &v) in b.iter().enumerate() {
        if levels.last().is_none_or(|&(_, last)| (last - v).abs() > 1e-6) {
            levels.push((i, v));
        }
    }
    for w in levels.windows(3) {
        let (prev, (step, v), next) = (w[0].1, w[1], w[2].1);
        if v < prev && v < next {
            println!("valley b = {v:.3} m at step {step}");
        } else if v > prev && v > next {
            println!("peak   b = {v:.3} m at step {step}");
        }
    }
    println!("{} after {} steps, {} ceiling collisions", ep.last.reason.unwrap(), ep.last.info.step, ep.ceiling_collisions);
    let path = std::env::temp_dir().join("hexloco-double-slab.csv");
    ep.trace.save(&path)?;
    println!("trace: {}", path.display());
    Ok(())
}
