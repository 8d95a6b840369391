//! Tunes the tripod gait on flat ground with the stairs reward table and
//! saves the best parameters and the per-generation history.
//!
//! ```text
//! cargo run --release --example optimize_gait -- [budget] [seed]
//! ```

use hexloco::policy::{optimize, save_params, GaitParams, Objective};

fn main() -> hexloco::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let budget = args.next().unwrap_or(300) as usize;
    let seed = args.next().unwrap_or(7);

    let objective = Objective::flat_stairs();
    let result = optimize(&objective, &GaitParams::default(), budget, seed)?;
    for row in result.history.iter().step_by((result.history.len() / 10).max(1)) {
        println!("gen {:>4}  evals {:>5}  best {:>10.2}  mean {:>10.2}", row.generation, row.evaluations, row.best, row.mean);
    }
    println!(
        "initial {:.2} -> best {:.2} ({:+.0}%)",
        result.initial_return,
        result.best_return,
        100.0 * (result.best_return / result.initial_return - 1.0)
    );
    println!("{:#?}", result.best);

    let dir = std::env::temp_dir();
    save_params(&result.best, dir.join("hexloco-gait.toml"))?;
    result.save_history(dir.join("hexloco-es-history.csv"))?;
    println!("saved {} and history", dir.join("hexloco-gait.toml").display());
    Ok(())
}
