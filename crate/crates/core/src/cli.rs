//! Command-line front end: `gen-terrain`, `rollout`, `train` and `serve`.
//!
//! Every flag may also come from a TOML file given with `--config`; flags
//! win over the file. Exit codes: 0 success, 1 task failure, 2 usage or
//! configuration error.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::env::{DoneReason, EpisodeConfig, HexapodEnv, ObservationSet, TraceRecorder};
use crate::heightmap::write_hxm;
use crate::policy::{optimize, save_params, GaitParams, Objective, PolicyKind};
use crate::terrain::{
    build_terrain, capped_obstacle_density, obstacle_density_for_level, stair_params_for_level, Terrain, TerrainFeatures, TerrainSpec,
};
use crate::{server, Error, Result, Task};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TASK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hexloco", version, about = "Hexapod locomotion environments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a curriculum terrain and write it as an .hxm file.
    GenTerrain(GenTerrainArgs),
    /// Run one episode with a scripted policy and write its trace.
    Rollout(RolloutArgs),
    /// Optimise tripod gait parameters with an evolution strategy.
    Train(TrainArgs),
    /// Serve environments over TCP until `quit` is read on stdin.
    Serve(ServeArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// joist, stairs, avoidance or squeeze
    #[arg(long)]
    pub task: Option<Task>,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub total_levels: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file supplying defaults for any flag plus an `[episode]` table.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenTerrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    /// tripod, crouch-tripod, random or params-file
    #[arg(long)]
    pub policy: Option<String>,
    /// Gait parameter file for `--policy params-file`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Trace CSV path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Directory receiving depth frames as 16-bit PGM.
    #[arg(long)]
    pub depth_dump: Option<PathBuf>,
    /// Dump every n-th depth frame.
    #[arg(long)]
    pub depth_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Total objective evaluations.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Steps per evaluation episode.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Evaluate on a flat course instead of the curriculum terrain.
    #[arg(long)]
    pub flat: bool,
    /// Output directory for `params.toml` and `history.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub task: Option<Task>,
    pub level: Option<u32>,
    pub total_levels: Option<u32>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub policy: Option<String>,
    pub params: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub depth_dump: Option<PathBuf>,
    pub depth_every: Option<usize>,
    pub budget: Option<usize>,
    pub episodes: Option<usize>,
    pub port: Option<u16>,
    pub host: Option<String>,
    /// Any episode setting, such as `tilt_limit` or a custom `terrain`.
    pub episode: Option<EpisodeConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Episode config with file values, then flags, applied.
    fn episode(&self, common: &CommonArgs) -> EpisodeConfig {
        let mut c = self.episode.clone().unwrap_or_default();
        if let Some(t) = common.task.or(self.task) {
            c.task = t;
        }
        if let Some(l) = common.level.or(self.level) {
            c.level = l;
        }
        if let Some(t) = common.total_levels.or(self.total_levels) {
            c.total_levels = t;
        }
        if let Some(s) = common.seed.or(self.seed) {
            c.seed = s;
        }
        c
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) | Error::Config(_) | Error::InvalidParams(_) => EXIT_USAGE,
                _ => EXIT_TASK_FAILED,
            }
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::GenTerrain(a) => gen_terrain(a, out),
        Command::Rollout(a) => rollout(a, out),
        Command::Train(a) => train(a, out),
        Command::Serve(a) => serve(a, out),
    }
}

fn gen_terrain(args: GenTerrainArgs, out: &mut dyn Write) -> Result<i32> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let config = file.episode(&args.common);
    config.validate()?;
    let path = args.out.or(file.out).ok_or_else(|| Error::Usage("gen-terrain needs --out <file>".into()))?;
    let level = config.curriculum_level()?;
    let terrain = build_terrain(config.task, &config.terrain, level, &config.curriculum, config.seed)?;

    let mut bytes = Vec::new();
    write_hxm(&terrain.field, &mut bytes)?;
    std::fs::write(&path, bytes)?;

    let f = &terrain.field;
    writeln!(
        out,
        "{} level {}/{} seed {}: {} x {} cells of {} m",
        config.task,
        config.level,
        config.total_levels,
        config.seed,
        f.rows(),
        f.cols(),
        f.cell_size()
    )?;
    writeln!(out, "{}", describe(&config, &terrain))?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(EXIT_OK)
}

/// One-line summary of the generated course.
pub fn describe(config: &EpisodeConfig, terrain: &Terrain) -> String {
    match &terrain.features {
        TerrainFeatures::Flat => "flat course".to_string(),
        TerrainFeatures::Stairs(s) => {
            let nominal = match (&config.terrain, config.curriculum_level()) {
                (TerrainSpec::Stairs(p), _) => Some(p.clone()),
                (_, Ok(level)) => Some(stair_params_for_level(level)),
                (_, Err(_)) => None,
            };
            let (tread, jitter) = nominal.map_or((f64::NAN, 0.0), |p| (p.tread, p.tread_jitter_fraction));
            format!(
                "stairs: riser {} m, tread {} m (jitter {}%), {} risers",
                s.riser,
                tread,
                jitter * 100.0,
                s.riser_x.len()
            )
        }
        TerrainFeatures::Obstacles(obs) => {
            let density = match (&config.terrain, config.curriculum_level()) {
                (TerrainSpec::Obstacles { density, .. }, _) => *density,
                (_, Ok(level)) if config.curriculum.cap_density => {
                    capped_obstacle_density(level, config.curriculum.density_final)
                }
                (_, Ok(level)) => obstacle_density_for_level(level, config.curriculum.density_final),
                (_, Err(_)) => f64::NAN,
            };
            format!("obstacles: density {density} per m^2, {} placed", obs.len())
        }
        TerrainFeatures::Tunnel(slabs) => {
            let clearance = slabs.iter().map(|s| s.clearance).fold(f64::INFINITY, f64::min);
            format!("tunnel: clearance {clearance} m, {} slab(s)", slabs.len())
        }
        TerrainFeatures::Joists { start, end, spacing } => {
            format!("joists: spacing {spacing} m from x = {start} to {end}")
        }
    }
}

fn rollout(args: RolloutArgs, out: &mut dyn Write) -> Result<i32> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let mut config = file.episode(&args.common);
    if let Some(steps) = args.steps.or(file.steps) {
        config.max_steps = steps;
    }
    let depth_dir = args.depth_dump.or(file.depth_dump);
    let every = args.depth_every.or(file.depth_every).unwrap_or(10).max(1);
    if depth_dir.is_some() {
        config.observations = ObservationSet::Both;
    }
    let policy_name = args.policy.or(file.policy).unwrap_or_else(|| "tripod".into());
    let params = args.params.or(file.params);
    let mut policy = PolicyKind::parse(&policy_name, params.as_deref())?.build(config.seed)?;
    if let Some(dir) = &depth_dir {
        std::fs::create_dir_all(dir)?;
    }

    let (mut env, first) = HexapodEnv::reset(config)?;
    let mut trace = TraceRecorder::new();
    trace.record(&env, &first);
    let mut collisions = 0usize;
    let mut ret = 0.0;
    let last = loop {
        let action = policy.act(&env);
        let result = env.step(&action)?;
        trace.record(&env, &result);
        ret += result.reward.total;
        collisions += usize::from(result.info.ceiling_collision);
        if let (Some(dir), Some(s)) = (&depth_dir, &result.student) {
            if result.info.step % every == 0 {
                s.depth.save_pgm(dir.join(format!("depth_{:05}.pgm", result.info.step)))?;
            }
        }
        if result.done {
            break result;
        }
    };
    if let Some(path) = args.trace.or(file.trace) {
        trace.save(&path)?;
        writeln!(out, "trace: {}", path.display())?;
    }
    let reason = last.reason.unwrap_or(DoneReason::Timeout);
    writeln!(
        out,
        "{} steps, {}: distance {:.3} m, return {:.4}, stairs completed {}, ceiling collisions {}",
        last.info.step, reason, last.info.distance, ret, last.info.stairs_completed, collisions
    )?;
    Ok(if reason == DoneReason::TaskComplete { EXIT_OK } else { EXIT_TASK_FAILED })
}

fn train(args: TrainArgs, out: &mut dyn Write) -> Result<i32> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let mut config = file.episode(&args.common);
    if args.flat {
        config.terrain = TerrainSpec::Flat { length: 12.0, halfwidth: 1.0 };
    }
    config.validate()?;
    let budget = args.budget.or(file.budget).unwrap_or(200);
    if budget == 0 {
        return Err(Error::Usage("--budget must be at least 1".into()));
    }
    let dir = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("train-out"));
    let seed = config.seed;
    let objective = Objective {
        config,
        episodes: args.episodes.or(file.episodes).unwrap_or(3).max(1),
        steps: args.steps.or(file.steps).unwrap_or(200).max(1),
    };
    let result = optimize(&objective, &GaitParams::default(), budget, seed)?;
    std::fs::create_dir_all(&dir)?;
    save_params(&result.best, dir.join("params.toml"))?;
    result.save_history(dir.join("history.csv"))?;
    writeln!(out, "initial return {:.6}", result.initial_return)?;
    writeln!(out, "best return    {:.6}", result.best_return)?;
    writeln!(out, "{} generations, outputs in {}", result.history.len(), dir.display())?;
    Ok(EXIT_OK)
}

fn serve(args: ServeArgs, out: &mut dyn Write) -> Result<i32> {
    let file = FileConfig::load(args.config.as_deref())?;
    let port = args.port.or(file.port).unwrap_or(server::DEFAULT_PORT);
    let host = args.host.or(file.host).unwrap_or_else(|| "127.0.0.1".into());
    let handle = server::serve((host.as_str(), port)).map_err(|e| Error::Usage(format!("cannot bind {host}:{port}: {e}")))?;
    writeln!(out, "listening on {} (type quit to stop)", handle.local_addr())?;
    out.flush()?;
    let stop = handle.stop_flag();
    std::thread::spawn(move || {
        for line in std::io::stdin().lock().lines() {
            match line {
                Ok(l) if matches!(l.trim(), "quit" | "stop" | "exit") => break,
                Ok(_) => continue,
                // a closed stdin does not stop a backgrounded server
                Err(_) => return,
            }
        }
        stop.store(true, Ordering::SeqCst);
    });
    handle.wait();
    writeln!(out, "server stopped")?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run(std::iter::once("hexloco").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&["serve", "--port", "70000"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["rollout", "--task", "swim"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["rollout", "--policy", "ppo"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["gen-terrain"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["bogus"]).0, EXIT_USAGE);
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "task = \"squeeze\"\nlevel = 2\nseed = 5\n[episode]\nmax_steps = 77\n").unwrap();
        let file = FileConfig::load(Some(&cfg)).unwrap();
        let common = CommonArgs { level: Some(9), ..CommonArgs::default() };
        let e = file.episode(&common);
        assert_eq!((e.task, e.level, e.seed, e.max_steps), (Task::Squeeze, 9, 5, 77));
        std::fs::write(&cfg, "speed = 3\n").unwrap();
        assert!(matches!(FileConfig::load(Some(&cfg)), Err(Error::Config(_))));
    }
}
