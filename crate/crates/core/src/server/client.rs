//! Blocking client for the environment server.

use std::io::{BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};

use super::protocol::{read_frame, write_message, Configure, Configured, HelloAck, Message, Obs, MAX_REPLY_LEN, PROTOCOL_VERSION};
use crate::{Error, Result};

pub struct Client {
    reader: TcpStream,
    writer: BufWriter<TcpStream>,
    /// Raw bytes of every reply received so far, when recording.
    transcript: Option<Vec<u8>>,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self { writer: BufWriter::new(stream.try_clone()?), reader: stream, transcript: None })
    }

    /// Starts keeping a copy of every reply frame.
    pub fn record(&mut self) {
        self.transcript = Some(Vec::new());
    }

    pub fn transcript(&self) -> Option<&[u8]> {
        self.transcript.as_deref()
    }

    /// Sends raw bytes, bypassing the encoder.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.writer.write_all(bytes)?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn send(&mut self, m: &Message) -> Result<()> {
        write_message(&mut self.writer, m)
    }

    /// Next reply, or `None` once the server has closed the connection.
    pub fn receive(&mut self) -> Result<Option<Message>> {
        let Some((kind, payload)) = read_frame(&mut self.reader, MAX_REPLY_LEN)? else {
            return Ok(None);
        };
        if let Some(t) = &mut self.transcript {
            t.extend_from_slice(&((payload.len() + 1) as u32).to_be_bytes());
            t.push(kind);
            t.extend_from_slice(&payload);
        }
        Message::decode(kind, &payload).map(Some)
    }

    pub fn request(&mut self, m: &Message) -> Result<Message> {
        self.send(m)?;
        match self.receive()? {
            Some(Message::Error { code, message }) => Err(Error::Protocol { code, message }),
            Some(reply) => Ok(reply),
            None => Err(Error::Format("server closed the connection".into())),
        }
    }

    pub fn hello(&mut self) -> Result<HelloAck> {
        match self.request(&Message::Hello { version: PROTOCOL_VERSION })? {
            Message::HelloAck(a) => Ok(a),
            other => Err(unexpected(&other)),
        }
    }

    pub fn configure(&mut self, c: Configure) -> Result<Configured> {
        match self.request(&Message::Configure(c))? {
            Message::Configured(a) => Ok(a),
            other => Err(unexpected(&other)),
        }
    }

    pub fn reset(&mut self) -> Result<Obs> {
        match self.request(&Message::Reset)? {
            Message::Obs(o) => Ok(o),
            other => Err(unexpected(&other)),
        }
    }

    /// `actions` holds `batch x 18` joint targets, env-major.
    pub fn step(&mut self, actions: &[f32]) -> Result<Obs> {
        match self.request(&Message::Step { actions: actions.to_vec() })? {
            Message::Obs(o) => Ok(o),
            other => Err(unexpected(&other)),
        }
    }

    pub fn close(mut self) -> Result<()> {
        match self.request(&Message::Close)? {
            Message::CloseAck => Ok(()),
            other => Err(unexpected(&other)),
        }
    }
}

fn unexpected(m: &Message) -> Error {
    Error::Format(format!("unexpected reply type 0x{:02x}", m.kind()))
}
