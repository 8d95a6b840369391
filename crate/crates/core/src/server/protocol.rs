//! Message framing and codecs.
//!
//! A frame is a big-endian `u32` length (payload bytes + 1), a one-byte
//! message type, then the payload. Every number inside a payload is
//! little-endian. See `docs/protocol.md` for byte-level examples.

use std::io::{Read, Write};

use crate::env::ObservationSet;
use crate::{Error, Result, Task};

pub const PROTOCOL_VERSION: u16 = 1;

/// Largest frame a server accepts from a client.
pub const MAX_REQUEST_LEN: usize = 1 << 20;
/// Largest frame a client accepts from a server.
pub const MAX_REPLY_LEN: usize = 1 << 30;

pub mod msg {
    pub const HELLO: u8 = 0x01;
    pub const CONFIGURE: u8 = 0x02;
    pub const RESET: u8 = 0x03;
    pub const STEP: u8 = 0x04;
    pub const CLOSE: u8 = 0x05;
    pub const HELLO_ACK: u8 = 0x81;
    pub const CONFIGURED: u8 = 0x82;
    pub const OBS: u8 = 0x84;
    pub const CLOSE_ACK: u8 = 0x85;
    pub const ERROR: u8 = 0xFF;
}

pub mod code {
    /// Unparseable frame; the server closes the connection after replying.
    pub const MALFORMED: u16 = 1;
    pub const NOT_CONFIGURED: u16 = 2;
    pub const BAD_CONFIG: u16 = 3;
    pub const SHAPE: u16 = 4;
    pub const UNKNOWN_TYPE: u16 = 5;
    pub const VERSION: u16 = 6;
}

fn protocol(code: u16, message: impl Into<String>) -> Error {
    Error::Protocol { code, message: message.into() }
}

fn malformed(message: impl Into<String>) -> Error {
    protocol(code::MALFORMED, message)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelloAck {
    pub version: u16,
    pub num_joints: u16,
    pub proprio_len: u16,
    pub student_len: u16,
    pub depth_width: u16,
    pub depth_height: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configure {
    pub task: Task,
    pub observations: ObservationSet,
    pub level: u32,
    pub total_levels: u32,
    pub batch: u32,
    pub seed: u64,
    pub max_steps: u32,
    /// Optional TOML overriding any other episode setting.
    pub overrides: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configured {
    pub batch: u32,
    pub patch_rows: u16,
    pub patch_cols: u16,
    pub depth_width: u16,
    pub depth_height: u16,
}

/// Teacher arrays, env-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherBlock {
    pub patch_rows: u16,
    pub patch_cols: u16,
    pub proprio_len: u16,
    pub patches: Vec<f32>,
    pub proprio: Vec<f32>,
}

/// Student arrays, env-major; depth images row-major, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentBlock {
    pub depth_width: u16,
    pub depth_height: u16,
    pub vector_len: u16,
    pub depth: Vec<f32>,
    pub vectors: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obs {
    pub rewards: Vec<f32>,
    pub done: Vec<u8>,
    /// Done-reason codes, 0 while running.
    pub reasons: Vec<u8>,
    pub teacher: Option<TeacherBlock>,
    pub student: Option<StudentBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello { version: u16 },
    HelloAck(HelloAck),
    Configure(Configure),
    Configured(Configured),
    Reset,
    /// `batch x 18` joint targets, env-major.
    Step { actions: Vec<f32> },
    Obs(Obs),
    Close,
    CloseAck,
    Error { code: u16, message: String },
}

impl Message {
    pub fn kind(&self) -> u8 {
        match self {
            Message::Hello { .. } => msg::HELLO,
            Message::HelloAck(_) => msg::HELLO_ACK,
            Message::Configure(_) => msg::CONFIGURE,
            Message::Configured(_) => msg::CONFIGURED,
            Message::Reset => msg::RESET,
            Message::Step { .. } => msg::STEP,
            Message::Obs(_) => msg::OBS,
            Message::Close => msg::CLOSE,
            Message::CloseAck => msg::CLOSE_ACK,
            Message::Error { .. } => msg::ERROR,
        }
    }

    pub fn encode_payload(&self) -> Vec<u8> {
        let mut w = Vec::new();
        match self {
            Message::Hello { version } => put_u16(&mut w, *version),
            Message::HelloAck(a) => {
                for v in [a.version, a.num_joints, a.proprio_len, a.student_len, a.depth_width, a.depth_height] {
                    put_u16(&mut w, v);
                }
            }
            Message::Configure(c) => {
                w.push(c.task.code());
                w.push(c.observations.code());
                put_u32(&mut w, c.level);
                put_u32(&mut w, c.total_levels);
                put_u32(&mut w, c.batch);
                w.extend_from_slice(&c.seed.to_le_bytes());
                put_u32(&mut w, c.max_steps);
                w.extend_from_slice(c.overrides.as_bytes());
            }
            Message::Configured(c) => {
                put_u32(&mut w, c.batch);
                for v in [c.patch_rows, c.patch_cols, c.depth_width, c.depth_height] {
                    put_u16(&mut w, v);
                }
            }
            Message::Reset | Message::Close | Message::CloseAck => {}
            Message::Step { actions } => put_f32s(&mut w, actions),
            Message::Obs(o) => encode_obs(&mut w, o),
            Message::Error { code, message } => {
                put_u16(&mut w, *code);
                let bytes = message.as_bytes();
                let n = bytes.len().min(u16::MAX as usize);
                put_u16(&mut w, n as u16);
                w.extend_from_slice(&bytes[..n]);
            }
        }
        w
    }

    /// Whole frame, header included.
    pub fn encode(&self) -> Vec<u8> {
        let payload = self.encode_payload();
        let mut out = Vec::with_capacity(payload.len() + 5);
        out.extend_from_slice(&((payload.len() + 1) as u32).to_be_bytes());
        out.push(self.kind());
        out.extend_from_slice(&payload);
        out
    }

    pub fn decode(kind: u8, payload: &[u8]) -> Result<Message> {
        let mut r = Reader { buf: payload, pos: 0 };
        let m = match kind {
            msg::HELLO => Message::Hello { version: r.u16()? },
            msg::HELLO_ACK => Message::HelloAck(HelloAck {
                version: r.u16()?,
                num_joints: r.u16()?,
                proprio_len: r.u16()?,
                student_len: r.u16()?,
                depth_width: r.u16()?,
                depth_height: r.u16()?,
            }),
            msg::CONFIGURE => {
                let task = Task::from_code(r.u8()?).ok_or_else(|| protocol(code::BAD_CONFIG, "unknown task code"))?;
                let observations = ObservationSet::from_code(r.u8()?)
                    .ok_or_else(|| protocol(code::BAD_CONFIG, "unknown observation set code"))?;
                let (level, total_levels, batch) = (r.u32()?, r.u32()?, r.u32()?);
                let seed = r.u64()?;
                let max_steps = r.u32()?;
                let overrides = std::str::from_utf8(r.rest())
                    .map_err(|_| malformed("configure overrides are not UTF-8"))?
                    .to_string();
                Message::Configure(Configure { task, observations, level, total_levels, batch, seed, max_steps, overrides })
            }
            msg::CONFIGURED => Message::Configured(Configured {
                batch: r.u32()?,
                patch_rows: r.u16()?,
                patch_cols: r.u16()?,
                depth_width: r.u16()?,
                depth_height: r.u16()?,
            }),
            msg::RESET => Message::Reset,
            msg::CLOSE => Message::Close,
            msg::CLOSE_ACK => Message::CloseAck,
            msg::STEP => {
                if payload.len() % 4 != 0 {
                    return Err(protocol(code::SHAPE, "step payload is not a whole number of f32"));
                }
                Message::Step { actions: r.f32s(payload.len() / 4)? }
            }
            msg::OBS => Message::Obs(decode_obs(&mut r)?),
            msg::ERROR => {
                let code = r.u16()?;
                let n = r.u16()? as usize;
                let message = String::from_utf8_lossy(r.take(n)?).into_owned();
                Message::Error { code, message }
            }
            other => return Err(protocol(code::UNKNOWN_TYPE, format!("unknown message type 0x{other:02x}"))),
        };
        if !r.rest().is_empty() {
            return Err(malformed(format!("{} trailing bytes", r.rest().len())));
        }
        Ok(m)
    }
}

fn encode_obs(w: &mut Vec<u8>, o: &Obs) {
    put_u32(w, o.rewards.len() as u32);
    let flags = u8::from(o.teacher.is_some()) | (u8::from(o.student.is_some()) << 1);
    w.push(flags);
    let (pr, pc, pl) = o.teacher.as_ref().map_or((0, 0, 0), |t| (t.patch_rows, t.patch_cols, t.proprio_len));
    let (dw, dh, sl) = o.student.as_ref().map_or((0, 0, 0), |s| (s.depth_width, s.depth_height, s.vector_len));
    for v in [pr, pc, pl, dw, dh, sl] {
        put_u16(w, v);
    }
    put_f32s(w, &o.rewards);
    w.extend_from_slice(&o.done);
    w.extend_from_slice(&o.reasons);
    if let Some(t) = &o.teacher {
        put_f32s(w, &t.patches);
        put_f32s(w, &t.proprio);
    }
    if let Some(s) = &o.student {
        put_f32s(w, &s.depth);
        put_f32s(w, &s.vectors);
    }
}

fn decode_obs(r: &mut Reader) -> Result<Obs> {
    let batch = r.u32()? as usize;
    let flags = r.u8()?;
    let (pr, pc, pl, dw, dh, sl) = (r.u16()?, r.u16()?, r.u16()?, r.u16()?, r.u16()?, r.u16()?);
    let rewards = r.f32s(batch)?;
    let done = r.take(batch)?.to_vec();
    let reasons = r.take(batch)?.to_vec();
    let teacher = if flags & 1 != 0 {
        Some(TeacherBlock {
            patch_rows: pr,
            patch_cols: pc,
            proprio_len: pl,
            patches: r.f32s(batch * pr as usize * pc as usize)?,
            proprio: r.f32s(batch * pl as usize)?,
        })
    } else {
        None
    };
    let student = if flags & 2 != 0 {
        Some(StudentBlock {
            depth_width: dw,
            depth_height: dh,
            vector_len: sl,
            depth: r.f32s(batch * dw as usize * dh as usize)?,
            vectors: r.f32s(batch * sl as usize)?,
        })
    } else {
        None
    };
    Ok(Obs { rewards, done, reasons, teacher, student })
}

fn put_u16(w: &mut Vec<u8>, v: u16) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(w: &mut Vec<u8>, v: u32) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_f32s(w: &mut Vec<u8>, values: &[f32]) {
    w.reserve(values.len() * 4);
    for v in values {
        w.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| malformed("payload too short"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| malformed("array too long"))?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

/// Reads one frame. `Ok(None)` on a clean end of stream before the header.
pub fn read_frame(r: &mut impl Read, max_len: usize) -> Result<Option<(u8, Vec<u8>)>> {
    let mut header = [0u8; 4];
    match r.read_exact(&mut header) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(header) as usize;
    if len == 0 || len > max_len {
        return Err(malformed(format!("frame length {len} outside 1..={max_len}")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    let kind = body[0];
    body.remove(0);
    Ok(Some((kind, body)))
}

pub fn write_message(w: &mut impl Write, m: &Message) -> Result<()> {
    w.write_all(&m.encode())?;
    w.flush()?;
    Ok(())
}
