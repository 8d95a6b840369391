//! Evolution-strategy search over tripod gait parameters.
//!
//! A weighted-recombination `(mu/mu_w, lambda)`-ES with an isotropic step size
//! adapted by cumulative step-size adaptation. The search runs in the unit
//! cube; [`PARAM_BOUNDS`] maps it onto gait parameters. Candidates are scored
//! on the same episode seeds, so differences in return come from the
//! parameters alone.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{GaitParams, Policy, TripodPolicy};
use crate::env::{splitmix64, EpisodeConfig, HexapodEnv};
use crate::reward::csv_err;
use crate::terrain::TerrainSpec;
use crate::{Result, Task};

const DIM: usize = 6;

/// Search range per parameter: frequency, coxa amplitude, femur lift, tibia
/// amplitude, crouch, turn bias. Every point of the box passes
/// [`GaitParams::validate`] for the default robot.
pub const PARAM_BOUNDS: [(f64, f64); DIM] = [(0.3, 2.0), (0.0, 0.6), (0.0, 0.8), (0.0, 0.5), (0.0, 0.55), (-0.2, 0.2)];

/// Return awarded to parameters that fail validation.
const INVALID_RETURN: f64 = -1e9;

fn to_unit(p: &GaitParams) -> [f64; DIM] {
    let v = [p.frequency, p.coxa_amplitude, p.femur_lift, p.tibia_amplitude, p.crouch, p.turn_bias];
    std::array::from_fn(|k| {
        let (lo, hi) = PARAM_BOUNDS[k];
        ((v[k] - lo) / (hi - lo)).clamp(0.0, 1.0)
    })
}

fn from_unit(u: &[f64; DIM]) -> GaitParams {
    let v: [f64; DIM] = std::array::from_fn(|k| {
        let (lo, hi) = PARAM_BOUNDS[k];
        lo + u[k].clamp(0.0, 1.0) * (hi - lo)
    });
    GaitParams {
        frequency: v[0],
        coxa_amplitude: v[1],
        femur_lift: v[2],
        tibia_amplitude: v[3],
        crouch: v[4],
        turn_bias: v[5],
    }
}

/// Mean episodic return of a tripod gait under one episode config.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub config: EpisodeConfig,
    pub episodes: usize,
    /// Step cap per episode.
    pub steps: usize,
}

impl Objective {
    /// Straight-line walking on flat ground, scored with the stairs table.
    pub fn flat_stairs() -> Self {
        Self {
            config: EpisodeConfig {
                task: Task::Stairs,
                terrain: TerrainSpec::Flat { length: 12.0, halfwidth: 1.0 },
                ..EpisodeConfig::default()
            },
            episodes: 3,
            steps: 200,
        }
    }

    pub fn evaluate(&self, params: &GaitParams) -> Result<f64> {
        if params.validate(&self.config.geometry).is_err() {
            return Ok(INVALID_RETURN);
        }
        let mut total = 0.0;
        for e in 0..self.episodes.max(1) {
            let cfg = EpisodeConfig {
                seed: splitmix64(self.config.seed.wrapping_add(e as u64)),
                max_steps: self.steps,
                ..self.config.clone()
            };
            let (mut env, _) = HexapodEnv::reset(cfg)?;
            let mut policy = TripodPolicy::new(*params);
            loop {
                let action = policy.act(&env);
                let r = env.step(&action)?;
                total += r.reward.total;
                if r.done {
                    break;
                }
            }
        }
        Ok(total / self.episodes.max(1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub generation: usize,
    /// Evaluations spent so far.
    pub evaluations: usize,
    /// Best return seen so far.
    pub best: f64,
    /// Mean return of this generation's candidates.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best: GaitParams,
    pub best_return: f64,
    pub initial_return: f64,
    pub history: Vec<HistoryRow>,
}

/// Maximises `objective` from `init` using at most `budget` evaluations.
/// Generation 0 is the evaluation of `init` itself.
pub fn optimize(objective: &Objective, init: &GaitParams, budget: usize, seed: u64) -> Result<OptimizeResult> {
    let budget = budget.max(1);
    let n = DIM as f64;
    let lambda = 4 + (3.0 * n.ln()).floor() as usize;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let sum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * ((mu_eff - 1.0) / (n + 1.0)).sqrt().max(1.0) - 2.0 + c_sigma;
    let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = to_unit(init);
    let mut sigma = 0.2;
    let mut path = [0.0; DIM];

    let initial_return = objective.evaluate(init)?;
    let mut best = (*init, initial_return);
    let mut history = vec![HistoryRow { generation: 0, evaluations: 1, best: initial_return, mean: initial_return }];
    let mut used = 1;

    while used < budget {
        let count = lambda.min(budget - used);
        // draw steps, then clip candidates into the cube and re-express the step
        let mut steps: Vec<[f64; DIM]> = Vec::with_capacity(count);
        let mut points: Vec<[f64; DIM]> = Vec::with_capacity(count);
        for _ in 0..count {
            let z: [f64; DIM] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let x: [f64; DIM] = std::array::from_fn(|k| (mean[k] + sigma * z[k]).clamp(0.0, 1.0));
            steps.push(std::array::from_fn(|k| (x[k] - mean[k]) / sigma));
            points.push(x);
        }
        let scores: Vec<f64> = points.par_iter().map(|x| objective.evaluate(&from_unit(x))).collect::<Result<_>>()?;
        used += count;

        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        if scores[order[0]] > best.1 {
            best = (from_unit(&points[order[0]]), scores[order[0]]);
        }
        let gen_mean = scores.iter().sum::<f64>() / count as f64;
        history.push(HistoryRow { generation: history.len(), evaluations: used, best: best.1, mean: gen_mean });

        let parents = mu.min(count);
        let wsum: f64 = weights[..parents].iter().sum();
        let mut step = [0.0; DIM];
        for (rank, &i) in order[..parents].iter().enumerate() {
            for k in 0..DIM {
                step[k] += weights[rank] / wsum * steps[i][k];
            }
        }
        for k in 0..DIM {
            mean[k] = (mean[k] + sigma * step[k]).clamp(0.0, 1.0);
            path[k] = (1.0 - c_sigma) * path[k] + (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt() * step[k];
        }
        let norm = path.iter().map(|v| v * v).sum::<f64>().sqrt();
        sigma = (sigma * ((c_sigma / d_sigma) * (norm / chi_n - 1.0)).exp()).clamp(1e-3, 0.5);
    }

    Ok(OptimizeResult { best: best.0, best_return: best.1, initial_return, history })
}

/// Writes `generation,evaluations,best,mean` rows.
pub fn write_history_csv(history: &[HistoryRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["generation", "evaluations", "best", "mean"]).map_err(csv_err)?;
    for row in history {
        w.write_record([
            row.generation.to_string(),
            row.evaluations.to_string(),
            row.best.to_string(),
            row.mean.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

impl OptimizeResult {
    pub fn save_history(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        write_history_csv(&self.history, std::io::BufWriter::new(file))
    }
}
