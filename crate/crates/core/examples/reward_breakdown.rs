//! Prints the shipped weight tables, then walks a tripod gait up the first
//! stairs and shows how each weighted term contributes to the reward.
//!
//! ```text
//! cargo run --example reward_breakdown -- [stairs|avoidance|squeeze|joist]
//! ```

use hexloco::env::{EpisodeConfig, HexapodEnv};
use hexloco::policy::{Policy, TripodPolicy};
use hexloco::reward::{write_breakdown_csv, RewardBreakdown, RewardConfig, Term};
use hexloco::Task;

fn main() -> hexloco::Result<()> {
    let task: Task = std::env::args().nth(1).unwrap_or_else(|| "stairs".into()).parse()?;

    println!("{:<22}{:>10}{:>12}{:>11}{:>10}", "term", "joist", "stairs", "avoidance", "squeeze");
    for term in Term::ALL {
        print!("{:<22}", term.id());
        for t in [Task::Joist, Task::Stairs, Task::Avoidance, Task::Squeeze] {
            let w = RewardConfig::for_task(t).weight(term);
            print!("{:>11}", if w == 0.0 { "-".to_string() } else { format!("{w:e}") });
        }
        println!();
    }

    let (mut env, _) = HexapodEnv::reset(EpisodeConfig { max_steps: 100, ..EpisodeConfig::for_task(task) })?;
    let mut policy = TripodPolicy::default();
    let mut rows: Vec<(usize, RewardBreakdown)> = Vec::new();
    loop {
        let action = policy.act(&env);
        let r = env.step(&action)?;
        rows.push((r.info.step, r.reward.clone()));
        if r.done {
            break;
        }
    }

    println!("\n{task}: sum of weighted terms over {} steps", rows.len());
    let mut total = 0.0;
    for (term, _) in env.reward_config().active() {
        let sum: f64 = rows.iter().map(|(_, b)| b.weighted(term)).sum();
        total += sum;
        println!("  {:<22}{sum:>14.4}", term.id());
    }
    println!("  {:<22}{total:>14.4}", "total");

    let path = std::env::temp_dir().join(format!("hexloco-{task}-rewards.csv"));
    let file = std::fs::File::create(&path)?;
    write_breakdown_csv(file, rows.iter().map(|(s, b)| (*s, b)))?;
    println!("per-step breakdown: {}", path.display());
    Ok(())
}
