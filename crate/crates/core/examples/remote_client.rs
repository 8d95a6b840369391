//! Starts the environment server on an ephemeral loopback port and drives
//! it with the bundled client, as an external trainer would.
//!
//! ```text
//! cargo run --example remote_client -- [steps]
//! ```

use hexloco::env::ObservationSet;
use hexloco::policy::{tripod_gait, GaitParams};
use hexloco::robot::RobotGeometry;
use hexloco::server::protocol::Configure;
use hexloco::server::{serve, Client};
use hexloco::Task;

fn main() -> hexloco::Result<()> {
    let steps: usize = std::env::args().nth(1).map_or(Ok(100), |a| a.parse()).expect("step count");
    let server = serve("127.0.0.1:0")?;
    println!("server on {}", server.local_addr());

    let mut client = Client::connect(server.local_addr())?;
    let hello = client.hello()?;
    println!("protocol v{}, {} joints, depth {}x{}", hello.version, hello.num_joints, hello.depth_width, hello.depth_height);

    let batch = 4;
    let configured = client.configure(Configure {
        task: Task::Stairs,
        observations: ObservationSet::Both,
        level: 0,
        total_levels: 10,
        batch,
        seed: 7,
        max_steps: 200,
        overrides: String::new(),
    })?;
    println!("configured {} envs, patch {}x{}", configured.batch, configured.patch_rows, configured.patch_cols);

    let first = client.reset()?;
    let student = first.student.as_ref().expect("student block requested");
    println!("reset: {} depth values per env", student.depth.len() / batch as usize);

    // the client runs the tripod gait itself, clocked by the env time step
    let (geometry, dt) = (RobotGeometry::default(), 0.05);
    let mut returns = vec![0.0f32; batch as usize];
    let mut done = 0;
    for k in 0..steps {
        let targets = tripod_gait(&GaitParams::default(), &geometry, k as f64 * dt);
        let actions: Vec<f32> = (0..batch).flat_map(|_| targets.map(|a| a as f32)).collect();
        let obs = client.step(&actions)?;
        for (r, x) in returns.iter_mut().zip(&obs.rewards) {
            *r += x;
        }
        done += obs.done.iter().filter(|&&d| d != 0).count();
    }
    println!("{done} episodes ended");
    println!("returns after {steps} steps: {returns:?}");

    // a frame with a zero length is malformed: the server answers and hangs up
    let mut rogue = Client::connect(server.local_addr())?;
    rogue.send_raw(&[0, 0, 0, 0])?;
    println!("malformed frame -> {:?}", rogue.receive()?);

    client.close()?;
    server.shutdown();
    Ok(())
}
