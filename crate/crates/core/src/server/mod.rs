//! TCP server exposing batched environments to out-of-process learners.
//!
//! Each connection owns one [`VecEnv`]. Requests are answered strictly in
//! order, so a given request sequence always yields the same reply bytes.

mod client;
pub mod protocol;

pub use client::Client;

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use protocol::{code, read_frame, write_message, Configure, Configured, HelloAck, Message, Obs, StudentBlock, TeacherBlock};

use crate::env::{EpisodeConfig, StepResult, VecEnv};
use crate::robot::NUM_JOINTS;
use crate::sensing::{SensorProfile, DEPTH_HEIGHT, DEPTH_WIDTH, PROPRIO_LEN, STUDENT_VEC_LEN};
use crate::{Error, Result};

pub const DEFAULT_PORT: u16 = 7777;
/// Largest batch a single connection may request.
pub const MAX_BATCH: u32 = 1024;

const POLL: Duration = Duration::from_millis(20);

/// A running server. Dropping the handle leaves it running; call
/// [`ServerHandle::shutdown`] to stop it.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops the accept loop and waits for every session thread to finish.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    /// A flag that stops the server when set.
    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }
}

/// Binds `addr` and serves connections on background threads.
pub fn serve(addr: impl ToSocketAddrs) -> Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let thread = std::thread::spawn(move || accept_loop(listener, flag));
    Ok(ServerHandle { addr, stop, thread: Some(thread) })
}

fn accept_loop(listener: TcpListener, stop: Arc<AtomicBool>) {
    let mut sessions: Vec<JoinHandle<()>> = Vec::new();
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let flag = stop.clone();
                sessions.push(std::thread::spawn(move || {
                    let _ = run_session(stream, flag);
                }));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => std::thread::sleep(POLL),
            Err(_) => std::thread::sleep(POLL),
        }
        sessions.retain(|h| !h.is_finished());
    }
    for h in sessions {
        let _ = h.join();
    }
}

/// Blocking reads that give up once the stop flag is raised.
struct StoppableStream {
    stream: TcpStream,
    stop: Arc<AtomicBool>,
}

impl Read for StoppableStream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        loop {
            match self.stream.read(buf) {
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                    if self.stop.load(Ordering::SeqCst) {
                        return Err(io::Error::new(io::ErrorKind::ConnectionAborted, "server shutting down"));
                    }
                }
                other => return other,
            }
        }
    }
}

fn run_session(stream: TcpStream, stop: Arc<AtomicBool>) -> Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(POLL * 5))?;
    stream.set_nodelay(true)?;
    let mut writer = io::BufWriter::new(stream.try_clone()?);
    let mut reader = StoppableStream { stream, stop };
    let mut session = Session::default();
    loop {
        let frame = match read_frame(&mut reader, protocol::MAX_REQUEST_LEN) {
            Ok(Some(f)) => f,
            Ok(None) => return Ok(()),
            Err(Error::Protocol { code, message }) => {
                write_message(&mut writer, &Message::Error { code, message })?;
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let (reply, keep_open) = session.handle(frame.0, &frame.1);
        write_message(&mut writer, &reply)?;
        writer.flush()?;
        if !keep_open {
            return Ok(());
        }
    }
}

/// Per-connection protocol state machine, independent of the transport.
#[derive(Default)]
pub struct Session {
    configure: Option<Configure>,
    envs: Option<VecEnv>,
}

impl Session {
    /// Answers one request frame. The flag is false when the connection
    /// should close after the reply.
    pub fn handle(&mut self, kind: u8, payload: &[u8]) -> (Message, bool) {
        let request = match Message::decode(kind, payload) {
            Ok(m) => m,
            Err(Error::Protocol { code, message }) => {
                return (Message::Error { code, message }, code != code::MALFORMED);
            }
            Err(e) => return (Message::Error { code: code::MALFORMED, message: e.to_string() }, false),
        };
        match self.dispatch(request) {
            Ok(reply) => {
                let open = reply != Message::CloseAck;
                (reply, open)
            }
            Err(Error::Protocol { code, message }) => (Message::Error { code, message }, code != code::MALFORMED),
            Err(e) => (Message::Error { code: code::BAD_CONFIG, message: e.to_string() }, true),
        }
    }

    fn dispatch(&mut self, request: Message) -> Result<Message> {
        match request {
            Message::Hello { version } => {
                if version != protocol::PROTOCOL_VERSION {
                    return Err(Error::Protocol {
                        code: code::VERSION,
                        message: format!("server speaks version {}, client sent {version}", protocol::PROTOCOL_VERSION),
                    });
                }
                Ok(Message::HelloAck(HelloAck {
                    version: protocol::PROTOCOL_VERSION,
                    num_joints: NUM_JOINTS as u16,
                    proprio_len: PROPRIO_LEN as u16,
                    student_len: STUDENT_VEC_LEN as u16,
                    depth_width: DEPTH_WIDTH as u16,
                    depth_height: DEPTH_HEIGHT as u16,
                }))
            }
            Message::Configure(c) => {
                let (envs, _) = build(&c)?;
                let profile = SensorProfile::with_cell(c.task, envs.config().patch_cell);
                let reply = Configured {
                    batch: c.batch,
                    patch_rows: profile.patch.rows() as u16,
                    patch_cols: profile.patch.cols() as u16,
                    depth_width: profile.camera.width as u16,
                    depth_height: profile.camera.height as u16,
                };
                self.envs = Some(envs);
                self.configure = Some(c);
                Ok(Message::Configured(reply))
            }
            Message::Reset => {
                let c = self.configure.as_ref().ok_or_else(not_configured)?;
                let (envs, first) = build(c)?;
                self.envs = Some(envs);
                Ok(Message::Obs(encode_results(&first, c.observations.teacher(), c.observations.student())))
            }
            Message::Step { actions } => {
                let c = self.configure.as_ref().ok_or_else(not_configured)?;
                let envs = self.envs.as_mut().ok_or_else(not_configured)?;
                let expected = envs.len() * NUM_JOINTS;
                if actions.len() != expected {
                    return Err(Error::Protocol {
                        code: code::SHAPE,
                        message: format!("expected {expected} action values, got {}", actions.len()),
                    });
                }
                let batch: Vec<[f64; NUM_JOINTS]> = actions
                    .chunks_exact(NUM_JOINTS)
                    .map(|a| std::array::from_fn(|j| a[j] as f64))
                    .collect();
                let results = envs.step(&batch)?;
                Ok(Message::Obs(encode_results(&results, c.observations.teacher(), c.observations.student())))
            }
            Message::Close => Ok(Message::CloseAck),
            other => Err(Error::Protocol {
                code: code::UNKNOWN_TYPE,
                message: format!("message type 0x{:02x} is server-to-client only", other.kind()),
            }),
        }
    }
}

fn not_configured() -> Error {
    Error::Protocol { code: code::NOT_CONFIGURED, message: "send CONFIGURE first".into() }
}

fn bad_config(e: impl std::fmt::Display) -> Error {
    Error::Protocol { code: code::BAD_CONFIG, message: e.to_string() }
}

fn build(c: &Configure) -> Result<(VecEnv, Vec<StepResult>)> {
    if c.batch == 0 || c.batch > MAX_BATCH {
        return Err(bad_config(format!("batch {} outside 1..={MAX_BATCH}", c.batch)));
    }
    let base: EpisodeConfig = toml::from_str(&c.overrides).map_err(|e| bad_config(format!("overrides: {e}")))?;
    let config = EpisodeConfig {
        task: c.task,
        level: c.level,
        total_levels: c.total_levels,
        seed: c.seed,
        max_steps: c.max_steps as usize,
        observations: c.observations,
        ..base
    };
    config.validate().map_err(bad_config)?;
    VecEnv::new(config, c.batch as usize, c.seed).map_err(bad_config)
}

/// Packs step results into an OBS message.
pub fn encode_results(results: &[StepResult], teacher: bool, student: bool) -> Obs {
    let mut obs = Obs {
        rewards: results.iter().map(|r| r.reward.total as f32).collect(),
        done: results.iter().map(|r| u8::from(r.done)).collect(),
        reasons: results.iter().map(|r| r.reason.map_or(0, |d| d.code())).collect(),
        teacher: None,
        student: None,
    };
    if teacher {
        let mut block = TeacherBlock { patch_rows: 0, patch_cols: 0, proprio_len: PROPRIO_LEN as u16, patches: Vec::new(), proprio: Vec::new() };
        for t in results.iter().filter_map(|r| r.teacher.as_ref()) {
            block.patch_rows = t.patch.rows() as u16;
            block.patch_cols = t.patch.cols() as u16;
            block.patches.extend(t.patch.values().iter().map(|&v| v as f32));
            block.proprio.extend(t.proprio().iter().map(|&v| v as f32));
        }
        obs.teacher = Some(block);
    }
    if student {
        let mut block = StudentBlock {
            depth_width: 0,
            depth_height: 0,
            vector_len: STUDENT_VEC_LEN as u16,
            depth: Vec::new(),
            vectors: Vec::new(),
        };
        for s in results.iter().filter_map(|r| r.student.as_ref()) {
            block.depth_width = s.depth.width as u16;
            block.depth_height = s.depth.height as u16;
            block.depth.extend_from_slice(&s.depth.data);
            block.vectors.extend(s.vector().iter().map(|&v| v as f32));
        }
        obs.student = Some(block);
    }
    obs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ObservationSet;
    use crate::Task;

    fn configure(batch: u32) -> Message {
        Message::Configure(Configure {
            task: Task::Stairs,
            observations: ObservationSet::Teacher,
            level: 0,
            total_levels: 10,
            batch,
            seed: 3,
            max_steps: 50,
            overrides: String::new(),
        })
    }

    fn send(s: &mut Session, m: &Message) -> (Message, bool) {
        s.handle(m.kind(), &m.encode_payload())
    }

    fn error_code(m: &Message) -> u16 {
        match m {
            Message::Error { code, .. } => *code,
            other => panic!("expected error, got {other:?}"),
        }
    }

    #[test]
    fn step_before_configure_is_rejected() {
        let mut s = Session::default();
        let (reply, open) = send(&mut s, &Message::Step { actions: vec![0.0; 18] });
        assert_eq!(error_code(&reply), code::NOT_CONFIGURED);
        assert!(open);
    }

    #[test]
    fn wrong_version_and_shapes() {
        let mut s = Session::default();
        assert_eq!(error_code(&send(&mut s, &Message::Hello { version: 9 }).0), code::VERSION);
        assert!(matches!(send(&mut s, &configure(2)).0, Message::Configured(Configured { batch: 2, patch_rows: 16, patch_cols: 12, .. })));
        assert_eq!(error_code(&send(&mut s, &Message::Step { actions: vec![0.0; 18] }).0), code::SHAPE);
        assert_eq!(error_code(&send(&mut s, &configure(0)).0), code::BAD_CONFIG);
        let (reply, open) = s.handle(0x02, &[0]);
        assert_eq!(error_code(&reply), code::MALFORMED);
        assert!(!open);
    }

    #[test]
    fn reset_then_step_reports_batch() {
        let mut s = Session::default();
        send(&mut s, &configure(3));
        let Message::Obs(first) = send(&mut s, &Message::Reset).0 else { panic!() };
        assert_eq!(first.rewards.len(), 3);
        let t = first.teacher.unwrap();
        assert_eq!(t.patches.len(), 3 * 16 * 12);
        assert_eq!(t.proprio.len(), 3 * PROPRIO_LEN);
        assert!(first.student.is_none());
        let Message::Obs(next) = send(&mut s, &Message::Step { actions: vec![0.0; 54] }).0 else { panic!() };
        assert_eq!(next.done, [0, 0, 0]);
        assert_eq!(send(&mut s, &Message::Close), (Message::CloseAck, false));
    }
}
