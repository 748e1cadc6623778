//! Wire frames: `51 49 | version | type | u32 BE length | payload`.

use std::io::{self, Read, Write};

use qid_core::protocols::{FrameType, Message, MessageError};
use thiserror::Error;

pub const MAGIC: [u8; 2] = [0x51, 0x49];
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 8;
pub const MAX_PAYLOAD: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("truncated frame: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown frame type {0}")]
    UnknownType(u8),
    #[error("payload of {0} bytes exceeds the limit")]
    Oversize(usize),
    #[error(transparent)]
    Message(#[from] MessageError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub frame_type: FrameType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(frame_type: FrameType, payload: Vec<u8>) -> Self {
        Self { frame_type, payload }
    }

    pub fn from_message(m: &Message) -> Self {
        Self { frame_type: m.frame_type(), payload: m.payload() }
    }

    /// `n` is the session's qubit count.
    pub fn to_message(&self, n: usize) -> Result<Message, FrameError> {
        Ok(Message::decode(self.frame_type as u8, &self.payload, n)?)
    }
}

pub fn encode_frame(f: &Frame) -> Result<Vec<u8>, FrameError> {
    if f.payload.len() > MAX_PAYLOAD {
        return Err(FrameError::Oversize(f.payload.len()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + f.payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(f.frame_type as u8);
    out.extend_from_slice(&(f.payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&f.payload);
    Ok(out)
}

/// Checks a full header and returns the frame type and payload length.
fn parse_header(h: &[u8; HEADER_LEN]) -> Result<(FrameType, usize), FrameError> {
    if h[..2] != MAGIC {
        return Err(FrameError::BadMagic([h[0], h[1]]));
    }
    if h[2] != VERSION {
        return Err(FrameError::BadVersion(h[2]));
    }
    let ty = FrameType::from_u8(h[3]).ok_or(FrameError::UnknownType(h[3]))?;
    let len = u32::from_be_bytes([h[4], h[5], h[6], h[7]]) as usize;
    if len > MAX_PAYLOAD {
        return Err(FrameError::Oversize(len));
    }
    Ok((ty, len))
}

/// Decodes one frame from the front of `bytes`; returns it with the number
/// of bytes used.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
    if bytes.len() >= 2 && bytes[..2] != MAGIC {
        return Err(FrameError::BadMagic([bytes[0], bytes[1]]));
    }
    let header: &[u8; HEADER_LEN] = bytes
        .get(..HEADER_LEN)
        .and_then(|h| h.try_into().ok())
        .ok_or(FrameError::Truncated { need: HEADER_LEN, have: bytes.len() })?;
    let (ty, len) = parse_header(header)?;
    let end = HEADER_LEN + len;
    if bytes.len() < end {
        return Err(FrameError::Truncated { need: end, have: bytes.len() });
    }
    Ok((Frame::new(ty, bytes[HEADER_LEN..end].to_vec()), end))
}

/// Reads one frame. The magic is read and checked before anything else, so
/// a stream that is not speaking this protocol loses only two bytes.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Frame, FrameError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header[..2])?;
    if header[..2] != MAGIC {
        return Err(FrameError::BadMagic([header[0], header[1]]));
    }
    r.read_exact(&mut header[2..])?;
    let (ty, len) = parse_header(&header)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Frame::new(ty, payload))
}

pub fn write_frame<W: Write>(w: &mut W, f: &Frame) -> Result<(), FrameError> {
    w.write_all(&encode_frame(f)?)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use qid_core::bits::{Bases, Bits};
    use qid_core::qchannel::{ChannelConfig, Source};

    #[test]
    fn header_layout() {
        let f = Frame::new(FrameType::Z, vec![0xaa, 0xbb]);
        let bytes = encode_frame(&f).unwrap();
        assert_eq!(bytes, [0x51, 0x49, 1, 4, 0, 0, 0, 2, 0xaa, 0xbb]);
        assert_eq!(decode_frame(&bytes).unwrap(), (f, 10));
    }

    #[test]
    fn qubit_payload_size() {
        let mut src = Source::new(&ChannelConfig::noiseless(1));
        let batch = src.prepare(&Bits::zeros(8), &Bases::from_bits(Bits::ones(8))).unwrap();
        let f = Frame::from_message(&Message::Qubits(batch));
        assert_eq!(f.payload.len(), 3);
        assert_eq!(f.to_message(8).unwrap().frame_type(), FrameType::Qubits);
    }

    #[test]
    fn typed_errors() {
        let good = encode_frame(&Frame::new(FrameType::G, vec![1, 2, 3])).unwrap();
        assert!(matches!(decode_frame(&good[..5]), Err(FrameError::Truncated { need: 8, have: 5 })));
        assert!(matches!(decode_frame(&good[..9]), Err(FrameError::Truncated { need: 11, have: 9 })));
        let mut bad = good.clone();
        bad[0] = 0x50;
        assert!(matches!(decode_frame(&bad), Err(FrameError::BadMagic([0x50, 0x49]))));
        let mut bad = good.clone();
        bad[2] = 2;
        assert!(matches!(decode_frame(&bad), Err(FrameError::BadVersion(2))));
        for t in [0u8, 11, 255] {
            let mut bad = good.clone();
            bad[3] = t;
            assert!(matches!(decode_frame(&bad), Err(FrameError::UnknownType(x)) if x == t));
        }
        let mut bad = good.clone();
        bad[4..8].copy_from_slice(&((MAX_PAYLOAD + 1) as u32).to_be_bytes());
        assert!(matches!(decode_frame(&bad), Err(FrameError::Oversize(_))));
        let huge = Frame::new(FrameType::G, vec![0; MAX_PAYLOAD + 1]);
        assert!(matches!(encode_frame(&huge), Err(FrameError::Oversize(_))));
    }

    #[test]
    fn bad_magic_consumes_only_the_probe() {
        let data = [0u8, 1, 2, 3, 4, 5, 6, 7, 8, 9];
        let mut cur = io::Cursor::new(&data[..]);
        assert!(matches!(read_frame(&mut cur), Err(FrameError::BadMagic(_))));
        assert_eq!(cur.position(), 2);
    }

    #[test]
    fn stream_of_frames() {
        let frames =
            [Frame::new(FrameType::ThetaF, vec![9; 40]), Frame::new(FrameType::Abort, vec![]), Frame::new(FrameType::Z, vec![1])];
        let mut buf = Vec::new();
        for f in &frames {
            write_frame(&mut buf, f).unwrap();
        }
        let mut cur = io::Cursor::new(buf);
        for f in &frames {
            assert_eq!(&read_frame(&mut cur).unwrap(), f);
        }
        assert!(matches!(read_frame(&mut cur), Err(FrameError::Io(_))));
    }
}
