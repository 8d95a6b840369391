//! The command-line front end, driven in-process and as a subprocess.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use hexloco::cli::run;
use hexloco::heightmap::read_hxm;
use hexloco::server::Client;

fn hexloco(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("hexloco").chain(args.iter().copied());
    let code = run(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn gen_terrain_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.hxm");
    let b = dir.path().join("b.hxm");
    for path in [&a, &b] {
        let (code, text) =
            hexloco(&["gen-terrain", "--task", "stairs", "--level", "0", "--seed", "11", "--out", path.to_str().unwrap()]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains("riser 0.045 m, tread 0.3 m"), "{text}");
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let field = read_hxm(bytes.as_slice()).unwrap();
    assert!(field.rows() > 0 && field.cols() > 0);
}

#[test]
fn gen_terrain_reports_the_hardest_tunnel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.hxm");
    let (code, text) = hexloco(&["gen-terrain", "--task", "squeeze", "--level", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("clearance 0.31 m"), "{text}");
    assert!(read_hxm(std::fs::File::open(&out).unwrap()).unwrap().has_ceiling());
}

#[test]
fn tripod_climbs_the_easiest_stairs() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let (code, text) =
        hexloco(&["rollout", "--task", "stairs", "--level", "0", "--policy", "tripod", "--trace", trace.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let completed: usize = text.split("stairs completed ").nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(completed >= 1, "{text}");
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("step,x,y,z"));
    assert!(csv.lines().count() > 10);
}

#[test]
fn crouching_gait_gets_through_the_tunnel() {
    let (code, text) = hexloco(&["rollout", "--task", "squeeze", "--level", "4", "--policy", "crouch-tripod"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("ceiling collisions 0"), "{text}");
}

#[test]
fn random_policy_writes_depth_frames() {
    let dir = tempfile::tempdir().unwrap();
    let depth = dir.path().join("depth");
    let (code, text) = hexloco(&[
        "rollout",
        "--task",
        "avoidance",
        "--policy",
        "random",
        "--steps",
        "20",
        "--depth-dump",
        depth.to_str().unwrap(),
        "--depth-every",
        "5",
    ]);
    assert!(code == 0 || code == 1, "{text}");
    let frames = std::fs::read_dir(&depth).unwrap().count();
    assert!(frames >= 1, "{frames} frames");
}

#[test]
fn train_writes_history_and_params() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, text) = hexloco(&["train", "--budget", "1", "--steps", "30", "--episodes", "1", "--flat", "--out", out]);
    assert_eq!(code, 0, "{text}");
    let history = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2, "{history}");
    assert!(dir.path().join("params.toml").exists());
}

#[test]
fn bad_input_exits_with_usage_code() {
    assert_eq!(hexloco(&["rollout", "--task", "swimming"]).0, 2);
    assert_eq!(hexloco(&["fly"]).0, 2);
    assert_eq!(hexloco(&["rollout", "--config", "/nonexistent/hexloco.toml"]).0, 2);
    assert_eq!(hexloco(&["rollout", "--policy", "moonwalk"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(hexloco(&["gen-terrain", "--config", cfg.to_str().unwrap()]).0, 2);
}

#[test]
fn serve_answers_and_quits_on_request() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hexloco"))
        .args(["serve", "--port", "0"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let banner = lines.next().unwrap().unwrap();
    let addr = banner.strip_prefix("listening on ").unwrap().split(' ').next().unwrap().to_string();

    let mut client = Client::connect(addr.as_str()).unwrap();
    assert_eq!(client.hello().unwrap().num_joints, 18);
    client.close().unwrap();

    writeln!(child.stdin.as_mut().unwrap(), "quit").unwrap();
    let status = child.wait().unwrap();
    assert!(status.success());
    assert_eq!(lines.next().unwrap().unwrap(), "server stopped");
}
