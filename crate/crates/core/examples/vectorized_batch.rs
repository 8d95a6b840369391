//! Steps a batch of stair environments with random joint targets, reports
//! throughput and a checksum of the cumulative rewards. The checksum only
//! depends on the seed, not on how rayon schedules the batch.
//!
//! ```text
//! cargo run --release --example vectorized_batch -- [batch] [steps] [seed]
//! ```

use std::time::Instant;

use hexloco::env::{EpisodeConfig, ObservationSet, VecEnv};
use hexloco::policy::{Policy, RandomPolicy};
use hexloco::robot::NUM_JOINTS;
use hexloco::Task;

fn main() -> hexloco::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let batch = args.next().unwrap_or(256) as usize;
    let steps = args.next().unwrap_or(1000) as usize;
    let seed = args.next().unwrap_or(0);

    for observations in [ObservationSet::Teacher, ObservationSet::Student] {
        let config = EpisodeConfig { observations, ..EpisodeConfig::for_task(Task::Stairs) };
        let (mut envs, _) = VecEnv::new(config, batch, seed)?;
        let mut policies: Vec<RandomPolicy> = (0..batch as u64).map(|i| RandomPolicy::new(seed ^ (i << 20))).collect();
        let mut returns = vec![0.0f64; batch];
        let mut episodes = 0usize;
        let n = if observations.student() { steps / 10 } else { steps };
        let start = Instant::now();
        for _ in 0..n {
            let actions: Vec<[f64; NUM_JOINTS]> =
                envs.envs().iter().zip(&mut policies).map(|(env, p)| p.act(env)).collect();
            for (i, r) in envs.step(&actions)?.iter().enumerate() {
                returns[i] += r.reward.total;
                episodes += usize::from(r.done);
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        let checksum = returns.iter().fold(0u64, |h, r| h.rotate_left(5) ^ r.to_bits());
        println!(
            "{:?} observations: {batch} envs x {n} steps in {elapsed:.2} s = {:.0} steps/s, {episodes} episodes ended, checksum {checksum:016x}",
            observations,
            (batch * n) as f64 / elapsed
        );
    }
    Ok(())
}
