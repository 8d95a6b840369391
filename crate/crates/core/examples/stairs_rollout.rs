//! Walks the tripod gait up curriculum staircases and reports how many
//! risers it clears at each level.
//!
//! ```text
//! cargo run --example stairs_rollout -- [seed]
//! ```

use hexloco::env::EpisodeConfig;
use hexloco::policy::{run_episode, TripodPolicy};
use hexloco::terrain::stair_params_for_level;
use hexloco::terrain::CurriculumLevel;
use hexloco::Task;

fn main() -> hexloco::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |a| a.parse()).expect("integer seed");
    println!("level  riser  tread  risers cleared  outcome");
    for level in 0..=10 {
        let config = EpisodeConfig { level, seed, ..EpisodeConfig::for_task(Task::Stairs) };
        let nominal = stair_params_for_level(CurriculumLevel::new(level, config.total_levels)?);
        let ep = run_episode(config, &mut TripodPolicy::default())?;
        println!(
            "{level:>5}  {:.3}  {:.3}  {:>14}  {} at step {}",
            nominal.riser,
            nominal.tread,
            ep.last.info.stairs_completed,
            ep.last.reason.unwrap(),
            ep.last.info.step
        );
    }
    Ok(())
}
