//! Length-prefixed binary messages over any duplex byte stream.
//!
//! Header (16 bytes, little-endian): `magic u32 | version u16 | msg_type u16 | body_len u64`.

use std::io::{Read, Write};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use super::ProtocolError;

pub const MAGIC: u32 = u32::from_le_bytes(*b"SINF");
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
/// Refuse bodies above this size (1 GiB).
pub const MAX_BODY: u64 = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u16)]
pub enum MsgType {
    Hello = 1,
    Architecture = 2,
    Keys = 3,
    Garbled = 4,
    Ciphertexts = 5,
    OtChoice = 6,
    OtResponse = 7,
    Shares = 8,
    Error = 9,
}

impl MsgType {
    pub fn from_u16(v: u16) -> Option<Self> {
        use MsgType::*;
        [
            Hello,
            Architecture,
            Keys,
            Garbled,
            Ciphertexts,
            OtChoice,
            OtResponse,
            Shares,
            Error,
        ]
        .into_iter()
        .find(|t| *t as u16 == v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Offline,
    Online,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub dir: Direction,
    pub msg_type: MsgType,
    pub phase: Phase,
    /// Header plus body.
    pub bytes: u64,
    /// Ciphertexts carried (for bandwidth accounting).
    pub ciphertexts: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<Entry>,
}

impl Transcript {
    pub fn bytes(&self, phase: Phase) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.phase == phase)
            .map(|e| e.bytes)
            .sum()
    }

    pub fn ciphertexts(&self, phase: Phase) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.phase == phase)
            .map(|e| e.ciphertexts as u64)
            .sum()
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
            .collect()
    }
}

/// A framed, accounted connection.
pub struct Channel<S> {
    stream: S,
    pub transcript: Transcript,
    pub phase: Phase,
}

impl<S: Read + Write> Channel<S> {
    pub fn new(stream: S) -> Self {
        Self {
            stream,
            transcript: Transcript::default(),
            phase: Phase::Offline,
        }
    }

    pub fn send(
        &mut self,
        ty: MsgType,
        body: &[u8],
        ciphertexts: u32,
    ) -> Result<(), ProtocolError> {
        let mut buf = Vec::with_capacity(HEADER_LEN + body.len());
        buf.extend(MAGIC.to_le_bytes());
        buf.extend(VERSION.to_le_bytes());
        buf.extend((ty as u16).to_le_bytes());
        buf.extend((body.len() as u64).to_le_bytes());
        buf.extend_from_slice(body);
        self.stream.write_all(&buf)?;
        self.stream.flush()?;
        self.transcript.entries.push(Entry {
            dir: Direction::Sent,
            msg_type: ty,
            phase: self.phase,
            bytes: buf.len() as u64,
            ciphertexts,
        });
        Ok(())
    }

    /// Receive the next message, which must be of type `expect`. A peer error
    /// message becomes [`ProtocolError::Remote`].
    pub fn recv(&mut self, expect: MsgType) -> Result<Vec<u8>, ProtocolError> {
        let mut h = [0u8; HEADER_LEN];
        self.stream.read_exact(&mut h)?;
        let magic = u32::from_le_bytes(h[0..4].try_into().unwrap());
        let version = u16::from_le_bytes(h[4..6].try_into().unwrap());
        let ty = u16::from_le_bytes(h[6..8].try_into().unwrap());
        let len = u64::from_le_bytes(h[8..16].try_into().unwrap());
        if magic != MAGIC {
            return Err(ProtocolError::Wire(format!("bad magic {magic:#010x}")));
        }
        if version != VERSION {
            return Err(ProtocolError::Version {
                ours: VERSION,
                theirs: version,
            });
        }
        if len > MAX_BODY {
            return Err(ProtocolError::Wire(format!("message of {len} bytes")));
        }
        let mut body = vec![0u8; len as usize];
        self.stream.read_exact(&mut body)?;
        let ty = MsgType::from_u16(ty)
            .ok_or_else(|| ProtocolError::Wire(format!("unknown message type {ty}")))?;
        let ciphertexts = if ty == MsgType::Ciphertexts && body.len() >= 4 {
            u32::from_le_bytes(body[..4].try_into().unwrap())
        } else {
            0
        };
        self.transcript.entries.push(Entry {
            dir: Direction::Received,
            msg_type: ty,
            phase: self.phase,
            bytes: (HEADER_LEN + body.len()) as u64,
            ciphertexts,
        });
        if ty == MsgType::Error {
            return Err(ProtocolError::Remote(
                String::from_utf8_lossy(&body).into_owned(),
            ));
        }
        if ty != expect {
            return Err(ProtocolError::Wire(format!(
                "expected {expect:?}, got {ty:?}"
            )));
        }
        Ok(body)
    }

    /// Best-effort error notification to the peer.
    pub fn send_error(&mut self, msg: &str) {
        let _ = self.send(MsgType::Error, msg.as_bytes(), 0);
    }

    pub fn into_inner(self) -> (S, Transcript) {
        (self.stream, self.transcript)
    }
}

/// One end of an in-process duplex pipe.
pub struct PipeEnd {
    tx: mpsc::Sender<Vec<u8>>,
    rx: mpsc::Receiver<Vec<u8>>,
    buf: Vec<u8>,
    pos: usize,
}

pub fn pipe() -> (PipeEnd, PipeEnd) {
    let (t1, r1) = mpsc::channel();
    let (t2, r2) = mpsc::channel();
    (
        PipeEnd {
            tx: t1,
            rx: r2,
            buf: Vec::new(),
            pos: 0,
        },
        PipeEnd {
            tx: t2,
            rx: r1,
            buf: Vec::new(),
            pos: 0,
        },
    )
}

impl Read for PipeEnd {
    fn read(&mut self, out: &mut [u8]) -> std::io::Result<usize> {
        if self.pos == self.buf.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.buf = chunk;
                    self.pos = 0;
                }
                Err(_) => return Ok(0),
            }
        }
        let n = out.len().min(self.buf.len() - self.pos);
        out[..n].copy_from_slice(&self.buf[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

impl Write for PipeEnd {
    fn write(&mut self, data: &[u8]) -> std::io::Result<usize> {
        self.tx
            .send(data.to_vec())
            .map_err(|_| std::io::Error::new(std::io::ErrorKind::BrokenPipe, "peer hung up"))?;
        Ok(data.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Body encoding helpers.
#[derive(Default)]
pub struct Writer(pub Vec<u8>);

impl Writer {
    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.0.extend(v.to_le_bytes());
        self
    }

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.0.extend(v.to_le_bytes());
        self
    }

    pub fn raw(&mut self, b: &[u8]) -> &mut Self {
        self.0.extend_from_slice(b);
        self
    }

    /// `u32` length prefix, then the bytes.
    pub fn blob(&mut self, b: &[u8]) -> &mut Self {
        self.u32(b.len() as u32).raw(b)
    }
}

pub struct Reader<'a>(pub &'a [u8]);

impl<'a> Reader<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        if self.0.len() < n {
            return Err(ProtocolError::Wire(format!(
                "message truncated: need {n} bytes, have {}",
                self.0.len()
            )));
        }
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        Ok(a)
    }

    pub fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u128(&mut self) -> Result<u128, ProtocolError> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    pub fn blob(&mut self) -> Result<&'a [u8], ProtocolError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn finish(&self) -> Result<(), ProtocolError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(ProtocolError::Wire(format!(
                "{} trailing bytes",
                self.0.len()
            )))
        }
    }
}
