//! Length-prefixed frames.
//!
//! ```text
//! +----------------+-----+-------------+
//! | length: u32 BE | tag | payload ... |
//! +----------------+-----+-------------+
//!                  \---- length -----/
//! ```
//!
//! | tag  | frame       | payload                          |
//! |------|-------------|----------------------------------|
//! | 0x00 | VALUE       | codec output                     |
//! | 0x01 | LABEL_LEFT  | empty                            |
//! | 0x02 | LABEL_RIGHT | empty                            |
//! | 0x03 | CLOSE       | empty                            |
//! | 0x04 | CANCEL      | empty                            |
//! | 0x05 | HELLO       | UTF-8 rendering of the peer shape the sender expects |

use std::io::{self, Read, Write};

pub const TAG_VALUE: u8 = 0x00;
pub const TAG_LABEL_LEFT: u8 = 0x01;
pub const TAG_LABEL_RIGHT: u8 = 0x02;
pub const TAG_CLOSE: u8 = 0x03;
pub const TAG_CANCEL: u8 = 0x04;
pub const TAG_HELLO: u8 = 0x05;

/// Largest accepted body (tag included).
pub const MAX_BODY: usize = 16 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Value(Vec<u8>),
    LabelLeft,
    LabelRight,
    Close,
    Cancel,
    Hello(String),
}

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("frame body of {0} bytes exceeds the limit")]
    TooLarge(usize),
    #[error("empty frame body")]
    Empty,
    #[error("unknown frame tag {0:#04x}")]
    UnknownTag(u8),
    #[error("unexpected payload on a {0} frame")]
    UnexpectedPayload(&'static str),
    #[error("hello payload is not UTF-8")]
    BadHello,
}

impl Frame {
    pub fn tag(&self) -> u8 {
        match self {
            Frame::Value(_) => TAG_VALUE,
            Frame::LabelLeft => TAG_LABEL_LEFT,
            Frame::LabelRight => TAG_LABEL_RIGHT,
            Frame::Close => TAG_CLOSE,
            Frame::Cancel => TAG_CANCEL,
            Frame::Hello(_) => TAG_HELLO,
        }
    }

    fn payload(&self) -> &[u8] {
        match self {
            Frame::Value(b) => b,
            Frame::Hello(s) => s.as_bytes(),
            _ => &[],
        }
    }

    /// The complete wire encoding, length prefix included.
    pub fn to_bytes(&self) -> Result<Vec<u8>, FrameError> {
        let payload = self.payload();
        let len = payload.len() + 1;
        if len > MAX_BODY {
            return Err(FrameError::TooLarge(len));
        }
        let mut out = Vec::with_capacity(4 + len);
        out.extend_from_slice(&(len as u32).to_be_bytes());
        out.push(self.tag());
        out.extend_from_slice(payload);
        Ok(out)
    }

    /// Decodes a frame body (tag and payload).
    pub fn from_body(body: &[u8]) -> Result<Frame, FrameError> {
        let (&tag, payload) = body.split_first().ok_or(FrameError::Empty)?;
        let bare = |frame: Frame, name| {
            if payload.is_empty() {
                Ok(frame)
            } else {
                Err(FrameError::UnexpectedPayload(name))
            }
        };
        match tag {
            TAG_VALUE => Ok(Frame::Value(payload.to_vec())),
            TAG_LABEL_LEFT => bare(Frame::LabelLeft, "LABEL_LEFT"),
            TAG_LABEL_RIGHT => bare(Frame::LabelRight, "LABEL_RIGHT"),
            TAG_CLOSE => bare(Frame::Close, "CLOSE"),
            TAG_CANCEL => bare(Frame::Cancel, "CANCEL"),
            TAG_HELLO => String::from_utf8(payload.to_vec())
                .map(Frame::Hello)
                .map_err(|_| FrameError::BadHello),
            other => Err(FrameError::UnknownTag(other)),
        }
    }
}

pub fn write_frame(w: &mut impl Write, frame: &Frame) -> Result<(), FrameError> {
    w.write_all(&frame.to_bytes()?)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame; `Ok(None)` on a clean end of stream between frames.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Frame>, FrameError> {
    let mut len = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match r.read(&mut len[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_BODY {
        return Err(FrameError::TooLarge(len));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    Frame::from_body(&body).map(Some)
}
