//! Runs batched stair episodes with the curriculum attached: levels go up
//! when more than 70% of the last 50 episodes finished the course.
//!
//! ```text
//! cargo run --release --example curriculum -- [batch] [steps]
//! ```

use hexloco::env::{Curriculum, EpisodeConfig, VecEnv};
use hexloco::policy::{Policy, TripodPolicy};
use hexloco::robot::NUM_JOINTS;
use hexloco::terrain::CurriculumLevel;
use hexloco::Task;

fn main() -> hexloco::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let batch = args.next().unwrap_or(32);
    let steps = args.next().unwrap_or(3000);

    let config = EpisodeConfig { max_steps: 900, ..EpisodeConfig::for_task(Task::Stairs) };
    let start = CurriculumLevel::new(0, config.total_levels)?;
    let (envs, _) = VecEnv::new(config, batch, 1)?;
    let mut envs = envs.with_curriculum(Curriculum::new(start));
    let mut policy = TripodPolicy::default();

    let mut level = 0;
    let (mut finished, mut completed) = (0, 0);
    for step in 0..steps {
        let actions: Vec<[f64; NUM_JOINTS]> = envs.envs().iter().map(|e| policy.act(e)).collect();
        for r in envs.step(&actions)? {
            if r.done {
                finished += 1;
                completed += usize::from(r.reason == Some(hexloco::env::DoneReason::TaskComplete));
            }
        }
        let now = envs.curriculum().map_or(0, |c| c.level().level());
        if now != level {
            println!("step {step:>5}: promoted to level {now} after {finished} episodes ({completed} completed)");
            level = now;
        }
    }
    println!("final level {level}; {finished} episodes, {completed} completed");
    Ok(())
}
