//! Generates every task's curriculum terrain at the easiest and hardest
//! level and writes each one as an `.hxm` file.
//!
//! ```text
//! cargo run --example terrain_gallery -- [out_dir]
//! ```

use std::path::PathBuf;

use hexloco::heightmap::{read_hxm, write_hxm};
use hexloco::terrain::{
    build_terrain, obstacle_density_for_level, stair_params_for_level, tunnel_clearance_for_level, CurriculumLevel,
    CurriculumSettings, TerrainFeatures, TerrainSpec, DEFAULT_TOTAL_LEVELS,
};
use hexloco::Task;

fn main() -> hexloco::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hexloco-gallery"));
    std::fs::create_dir_all(&out)?;
    let settings = CurriculumSettings::default();

    println!("level  riser   tread   tunnel  density");
    for l in 0..=DEFAULT_TOTAL_LEVELS {
        let lvl = CurriculumLevel::new(l, DEFAULT_TOTAL_LEVELS)?;
        let stairs = stair_params_for_level(lvl);
        println!(
            "{l:>5}  {:.4}  {:.4}  {:.2}    {:.3}",
            stairs.riser,
            stairs.tread,
            tunnel_clearance_for_level(lvl),
            obstacle_density_for_level(lvl, settings.density_final)
        );
    }

    for task in [Task::Stairs, Task::Avoidance, Task::Squeeze, Task::Joist] {
        for l in [0, DEFAULT_TOTAL_LEVELS] {
            let lvl = CurriculumLevel::new(l, DEFAULT_TOTAL_LEVELS)?;
            let terrain = build_terrain(task, &TerrainSpec::Curriculum, lvl, &settings, 42)?;
            let path = out.join(format!("{task}_{l:02}.hxm"));
            let mut bytes = Vec::new();
            write_hxm(&terrain.field, &mut bytes)?;
            std::fs::write(&path, &bytes)?;
            // heights are stored as f32, so compare the re-encoded bytes
            let mut again = Vec::new();
            write_hxm(&read_hxm(bytes.as_slice())?, &mut again)?;
            assert_eq!(again, bytes);

            let f = &terrain.field;
            let highest = f.floor_values().iter().copied().fold(f64::MIN, f64::max);
            let detail = match &terrain.features {
                TerrainFeatures::Stairs(s) => format!("{} risers, top at {:.3} m", s.riser_x.len(), s.height_after(s.riser_x.len())),
                TerrainFeatures::Obstacles(o) => format!("{} obstacles", o.len()),
                TerrainFeatures::Tunnel(slabs) => format!("{} slab(s), clearance {} m", slabs.len(), slabs[0].clearance),
                TerrainFeatures::Joists { spacing, .. } => format!("joists every {spacing} m"),
                TerrainFeatures::Flat => "flat".into(),
            };
            println!(
                "{:>9} level {l:>2}: {} x {} cells, max floor {highest:.3} m, {detail} -> {}",
                task.to_string(),
                f.rows(),
                f.cols(),
                path.display()
            );
        }
    }
    Ok(())
}
