//! Evaluates the obstacle-avoidance and squeeze functionals on a few
//! hand-built patches to show how position and height change the score.
//!
//! ```text
//! cargo run --example height_functionals
//! ```

use hexloco::heightmap::{HeightPatch, PatchLayer};
use hexloco::reward::{avoidance_functional, squeeze_functional};

fn patch(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64, layer: PatchLayer) -> HeightPatch {
    let values = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
    HeightPatch::from_values(rows, cols, values, layer).expect("valid patch")
}

fn main() {
    let (rows, cols) = (20, 12);
    println!("avoidance functional on a {rows}x{cols} patch with one 0.2 m block:");
    for (label, r, c) in [("far, edge", 0, 0), ("far, centre", 0, 6), ("near, edge", 19, 0), ("near, centre", 19, 6)] {
        let p = patch(rows, cols, |i, j| if i == r && j == c { 0.2 } else { 0.0 }, PatchLayer::FloorOnly);
        println!("  {label:<13} {:.4}", avoidance_functional(&p));
    }
    let full = patch(rows, cols, |_, _| 0.2, PatchLayer::FloorOnly);
    println!("  fully blocked {:.4}", avoidance_functional(&full));

    println!("\nsqueeze functional under a 0.34 m ceiling covering the near half:");
    let ceiling = patch(16, 12, |i, _| if i >= 8 { 0.34 } else { 0.0 }, PatchLayer::SqueezeComposite);
    for b in [0.37, 0.35, 0.34, 0.32, 0.30] {
        println!("  b = {b:.2} m: {:+.4}", squeeze_functional(&ceiling, b));
    }
}
