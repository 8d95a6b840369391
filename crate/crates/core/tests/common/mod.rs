//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code it checks.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// Parses a fixture weight: `m^e` or `m^{e}` means `m x 10^e`, built by
/// handing `"{m}e{e}"` to the float parser so no arithmetic rounding occurs.
pub fn fixture_weight(text: &str) -> f64 {
    match text.split_once('^') {
        Some((m, e)) => {
            let e = e.trim_start_matches('{').trim_end_matches('}');
            format!("{m}e{e}").parse().unwrap_or_else(|_| panic!("bad weight {text}"))
        }
        None => text.parse().unwrap_or_else(|_| panic!("bad weight {text}")),
    }
}

/// `task -> term -> weight` from the checked-in fixture.
pub fn fixture_table() -> BTreeMap<String, BTreeMap<String, f64>> {
    let text = include_str!("../fixtures/reward_weights.txt");
    let tasks = ["joist", "stairs", "avoidance", "squeeze"];
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cols.len(), 5, "fixture line {line:?}");
        for (task, w) in tasks.iter().zip(&cols[1..]) {
            out.entry(task.to_string()).or_default().insert(cols[0].to_string(), fixture_weight(w));
        }
    }
    out
}

fn lateral_weight(j: usize, n: usize) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let from_edge = j.min(n - 1 - j) as f64;
    1.0 + 2.0 * from_edge / (n - 1) as f64
}

fn forward_weight(i: usize, m: usize) -> f64 {
    if m == 1 {
        return 1.0;
    }
    1.0 + i as f64 / (m - 1) as f64
}

/// Brute-force avoidance score of a row-major `m x n` patch (row 0 far).
pub fn avoidance_oracle(values: &[f64], m: usize, n: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let occupied = if values[i * n + j] > 0.0 { 1.0 } else { 0.0 };
            total += occupied * lateral_weight(j, n) * forward_weight(i, m);
        }
    }
    total
}

/// Brute-force squeeze score of a row-major `m x n` patch at base height `b`.
pub fn squeeze_oracle(values: &[f64], m: usize, n: usize, b: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let h = values[i * n + j];
            let cell = if h - b > 0.0 { 1.0 } else { -2.0 * (h - b).abs() };
            total += cell * forward_weight(i, m);
        }
    }
    total
}

/// Ray-plane oracle for a level camera at `eye_x` looking along `+x` at the
/// plane `x = wall_x`: returns `(range, axial_depth)` for pixel `(u, v)`.
pub fn wall_depth(u: usize, v: usize, width: usize, height: usize, hfov: f64, eye_x: f64, wall_x: f64) -> (f64, f64) {
    let f = 0.5 * width as f64 / (0.5 * hfov).tan();
    let left = (0.5 * width as f64 - (u as f64 + 0.5)) / f;
    let up = (0.5 * height as f64 - (v as f64 + 0.5)) / f;
    let norm = (1.0 + left * left + up * up).sqrt();
    let dir_x = 1.0 / norm;
    let range = (wall_x - eye_x) / dir_x;
    (range, range * dir_x)
}

/// Indices of strict turning points after merging equal neighbours:
/// `(index, value, is_minimum)`.
pub fn turning_points(trace: &[f64], tol: f64) -> Vec<(usize, f64, bool)> {
    let mut levels: Vec<(usize, f64)> = Vec::new();
    for (i, &v) in trace.iter().enumerate() {
        match levels.last() {
            Some(&(_, last)) if (last - v).abs() <= tol => {}
            _ => levels.push((i, v)),
        }
    }
    levels
        .windows(3)
        .filter_map(|w| {
            let (a, (i, b), c) = (w[0].1, w[1], w[2].1);
            if b < a && b < c {
                Some((i, b, true))
            } else if b > a && b > c {
                Some((i, b, false))
            } else {
                None
            }
        })
        .collect()
}
