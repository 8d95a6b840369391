//! Talking to a live server over loopback.

use hexloco::env::ObservationSet;
use hexloco::robot::NUM_JOINTS;
use hexloco::server::protocol::{code, Configure, Message, Obs};
use hexloco::server::{serve, Client, ServerHandle};
use hexloco::{Error, Task};

fn configure(task: Task, observations: ObservationSet, batch: u32, seed: u64) -> Configure {
    Configure { task, observations, level: 0, total_levels: 10, batch, seed, max_steps: 200, overrides: String::new() }
}

fn start() -> ServerHandle {
    serve("127.0.0.1:0").unwrap()
}

fn steps(client: &mut Client, batch: usize, n: usize) -> Vec<Obs> {
    let actions = vec![0.1f32; batch * NUM_JOINTS];
    (0..n).map(|_| client.step(&actions).unwrap()).collect()
}

#[test]
fn student_observations_carry_full_depth_images() {
    let server = start();
    let mut c = Client::connect(server.local_addr()).unwrap();
    let ack = c.hello().unwrap();
    let reply = c.configure(configure(Task::Stairs, ObservationSet::Student, 4, 7)).unwrap();
    assert_eq!((reply.batch, reply.depth_width, reply.depth_height), (4, 320, 240));
    let obs = c.reset().unwrap();
    assert!(obs.teacher.is_none());
    let student = obs.student.unwrap();
    assert_eq!(student.depth.len(), 4 * 320 * 240);
    assert_eq!(student.vectors.len(), 4 * ack.student_len as usize);
    assert!(student.depth.iter().all(|d| d.is_finite() && *d >= 0.0));
    c.close().unwrap();
    server.shutdown();
}

#[test]
fn sessions_do_not_share_state() {
    let server = start();
    let addr = server.local_addr();
    let solo = {
        let mut c = Client::connect(addr).unwrap();
        c.configure(configure(Task::Avoidance, ObservationSet::Teacher, 3, 5)).unwrap();
        c.reset().unwrap();
        steps(&mut c, 3, 30)
    };

    let mut a = Client::connect(addr).unwrap();
    let mut b = Client::connect(addr).unwrap();
    a.configure(configure(Task::Avoidance, ObservationSet::Teacher, 3, 5)).unwrap();
    b.configure(configure(Task::Squeeze, ObservationSet::Teacher, 2, 9)).unwrap();
    a.reset().unwrap();
    b.reset().unwrap();
    let mut interleaved = Vec::new();
    for _ in 0..30 {
        interleaved.extend(steps(&mut a, 3, 1));
        steps(&mut b, 2, 1);
    }
    assert_eq!(interleaved, solo);
    server.shutdown();
}

#[test]
fn overrides_reach_the_episode() {
    let server = start();
    let mut c = Client::connect(server.local_addr()).unwrap();
    let plain = {
        c.configure(configure(Task::Stairs, ObservationSet::Teacher, 1, 1)).unwrap();
        c.reset().unwrap().teacher.unwrap()
    };
    let mut cfg = configure(Task::Stairs, ObservationSet::Teacher, 1, 1);
    cfg.overrides = "patch_cell = 0.1\nmax_steps = 3\n".into();
    cfg.max_steps = 5;
    c.configure(cfg).unwrap();
    let coarse = c.reset().unwrap().teacher.unwrap();
    assert!(coarse.patch_rows < plain.patch_rows && coarse.patch_cols < plain.patch_cols);
    // the header's own fields win over the overrides
    let done: Vec<u8> = steps(&mut c, 1, 5).iter().map(|o| o.done[0]).collect();
    assert_eq!(done, [0, 0, 0, 0, 1]);

    let mut bad = configure(Task::Stairs, ObservationSet::Teacher, 1, 1);
    bad.overrides = "no_such_setting = true\n".into();
    match c.configure(bad) {
        Err(Error::Protocol { code: c, .. }) => assert_eq!(c, code::BAD_CONFIG),
        other => panic!("expected a config error, got {other:?}"),
    }
    server.shutdown();
}

#[test]
fn errors_keep_the_session_usable() {
    let server = start();
    let mut c = Client::connect(server.local_addr()).unwrap();
    c.configure(configure(Task::Joist, ObservationSet::Teacher, 2, 3)).unwrap();
    c.reset().unwrap();
    match c.step(&[0.0; 5]) {
        Err(Error::Protocol { code: c, .. }) => assert_eq!(c, code::SHAPE),
        other => panic!("expected a shape error, got {other:?}"),
    }
    match c.configure(configure(Task::Joist, ObservationSet::Teacher, 0, 3)) {
        Err(Error::Protocol { code: c, .. }) => assert_eq!(c, code::BAD_CONFIG),
        other => panic!("expected a config error, got {other:?}"),
    }
    let obs = steps(&mut c, 2, 1).remove(0);
    assert_eq!(obs.rewards.len(), 2);
    c.close().unwrap();
    server.shutdown();
}

#[test]
fn malformed_frame_closes_only_that_connection() {
    let server = start();
    let mut healthy = Client::connect(server.local_addr()).unwrap();
    healthy.configure(configure(Task::Stairs, ObservationSet::Teacher, 1, 2)).unwrap();

    let mut broken = Client::connect(server.local_addr()).unwrap();
    broken.send_raw(&[0, 0, 0, 2, 0x01, 0x01]).unwrap();
    assert!(matches!(broken.receive().unwrap(), Some(Message::Error { code: code::MALFORMED, .. })));
    assert!(broken.receive().unwrap().is_none());

    healthy.reset().unwrap();
    assert_eq!(steps(&mut healthy, 1, 2).len(), 2);
    server.shutdown();
}
