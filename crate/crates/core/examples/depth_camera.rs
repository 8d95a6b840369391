//! Renders depth images: a frontal wall checked against the analytic
//! ray-plane distance, then the view from the start of a tunnel course.
//! Both frames are written as 16-bit PGM (millimetres).
//!
//! ```text
//! cargo run --example depth_camera -- [out_dir]
//! ```

use std::path::PathBuf;

use hexloco::heightmap::LayeredHeightField;
use hexloco::robot::BaseState;
use hexloco::sensing::{camera_pose, render_depth, CameraModel, SensorProfile};
use hexloco::terrain::{build_terrain, CurriculumLevel, CurriculumSettings, TerrainSpec};
use hexloco::Task;
use nalgebra::Vector3;

fn main() -> hexloco::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hexloco-depth"));
    std::fs::create_dir_all(&out)?;
    let camera = CameraModel { tilt: 0.0, ..CameraModel::default() };
    let base = BaseState::at(Vector3::new(0.0, 0.0, 0.37), 0.0);
    let (eye, _) = camera_pose(&camera, &base);

    // a 2 m tall wall whose face sits exactly 1 m ahead of the lens
    let (cell, rows, cols, k) = (0.02, 201, 200, 100);
    let origin = [eye.x + 1.0 - (k as f64 - 0.5) * cell, -2.0];
    let floor: Vec<f64> = (0..rows * cols).map(|i| if i % cols >= k { 2.0 } else { 0.0 }).collect();
    let wall = LayeredHeightField::new(rows, cols, cell, origin, floor)?;
    let img = render_depth(&camera, &base, &wall);
    let (cu, cv) = (camera.width / 2, camera.height / 2);
    println!("{}x{} image, centre pixel {:.4} m (wall at 1.0000 m)", img.width, img.height, img.get(cu, cv));
    println!("top-left {:.4} m, bottom row centre {:.4} m (floor)", img.get(0, 0), img.get(cu, camera.height - 1));
    img.save_pgm(out.join("wall.pgm"))?;

    let lvl = CurriculumLevel::new(0, 10)?;
    let tunnel = build_terrain(Task::Squeeze, &TerrainSpec::Curriculum, lvl, &CurriculumSettings::default(), 0)?;
    let cam = SensorProfile::for_task(Task::Squeeze).camera;
    let at = BaseState::at(Vector3::new(tunnel.spawn_front_x - 0.15, 0.0, 0.37), 0.0);
    let view = render_depth(&cam, &at, &tunnel.field);
    let nearest = view.data.iter().copied().fold(f32::INFINITY, f32::min);
    let hits = view.data.iter().filter(|&&d| (d as f64) < cam.far).count();
    println!("tunnel view: nearest return {nearest:.3} m, {hits} of {} pixels inside range", view.data.len());
    view.save_pgm(out.join("tunnel.pgm"))?;
    println!("frames written to {}", out.display());
    Ok(())
}
