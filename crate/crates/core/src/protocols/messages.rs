//! Protocol messages and their payload encoding.
//!
//! Every classical payload is a list of parts in the canonical encoding of
//! [`encode_parts`]. The qubit payload is the simulator's own packing.

use serde::Serialize;

use crate::bits::{Bases, Bits};
use crate::galois::{decode_parts, encode_parts};
use crate::qchannel::QubitBatch;

/// Frame type codes shared with the wire layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
#[repr(u8)]
pub enum FrameType {
    Qubits = 1,
    ThetaF = 2,
    G = 3,
    Z = 4,
    ThetaJSF = 5,
    TG = 6,
    TestZTag = 7,
    Decision = 8,
    OtpW = 9,
    Abort = 10,
}

impl FrameType {
    pub fn from_u8(v: u8) -> Option<Self> {
        use FrameType::*;
        Some(match v {
            1 => Qubits,
            2 => ThetaF,
            3 => G,
            4 => Z,
            5 => ThetaJSF,
            6 => TG,
            7 => TestZTag,
            8 => Decision,
            9 => OtpW,
            10 => Abort,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        use FrameType::*;
        match self {
            Qubits => "QUBITS",
            ThetaF => "THETA_F",
            G => "G",
            Z => "Z",
            ThetaJSF => "THETA_J_S_F",
            TG => "T_G",
            TestZTag => "TEST_Z_TAG",
            Decision => "DECISION",
            OtpW => "OTP_W",
            Abort => "ABORT",
        }
    }
}

/// Why a session ended the way it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reason {
    Ok,
    MacFail,
    TestMismatch,
    ZMismatch,
    DecodeFail,
    ProtocolViolation,
    Aborted,
}

impl Reason {
    pub const ALL: [Reason; 7] = [
        Reason::Ok,
        Reason::MacFail,
        Reason::TestMismatch,
        Reason::ZMismatch,
        Reason::DecodeFail,
        Reason::ProtocolViolation,
        Reason::Aborted,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Reason::Ok => "OK",
            Reason::MacFail => "MAC_FAIL",
            Reason::TestMismatch => "TEST_MISMATCH",
            Reason::ZMismatch => "Z_MISMATCH",
            Reason::DecodeFail => "DECODE_FAIL",
            Reason::ProtocolViolation => "PROTOCOL_VIOLATION",
            Reason::Aborted => "ABORTED",
        }
    }
}

/// A verdict with its reason; `accept` holds exactly when the reason is `Ok`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Decision {
    reason: Reason,
}

impl Decision {
    pub const ACCEPT: Decision = Decision { reason: Reason::Ok };

    pub fn reject(reason: Reason) -> Self {
        assert!(reason != Reason::Ok, "a rejection needs a failure reason");
        Self { reason }
    }

    pub fn from_reason(reason: Reason) -> Self {
        Self { reason }
    }

    pub fn accepted(&self) -> bool {
        self.reason == Reason::Ok
    }

    pub fn reason(&self) -> Reason {
        self.reason
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Qubits(QubitBatch),
    ThetaF { theta: Bases, f: Bits },
    G { a: Bits, b: Bits },
    Z { z: Bits },
    /// `h` is the extraction key, present in key-distribution mode only.
    ThetaJSF { theta: Bases, j: u64, s: Bits, f: Bits, h: Option<Bits> },
    /// `t` is the test set as an `n`-bit mask.
    TG { t: Bits, a: Bits, b: Bits },
    TestZTag { test: Bits, z: Bits, tag: Bits },
    /// `announce` carries the flip set in mutual mode and is empty otherwise.
    Decision { decision: Decision, announce: Bits },
    OtpW { c: Bits },
    Abort,
}

/// A position set as consecutive 32-bit indices; the empty set is empty.
pub fn encode_positions(positions: &[usize]) -> Bits {
    let mut out = Bits::new();
    for &p in positions {
        out.extend_from(&Bits::from_u64(p as u64, 32));
    }
    out
}

pub fn decode_positions(bits: &Bits) -> Option<Vec<usize>> {
    if bits.len() % 32 != 0 {
        return None;
    }
    Some((0..bits.len() / 32).map(|k| bits.slice(32 * k, 32 * k + 32).to_u64() as usize).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MessageError {
    #[error("unknown frame type {0}")]
    UnknownType(u8),
    #[error("malformed {0} payload")]
    Malformed(&'static str),
}

impl Message {
    pub fn frame_type(&self) -> FrameType {
        match self {
            Message::Qubits(_) => FrameType::Qubits,
            Message::ThetaF { .. } => FrameType::ThetaF,
            Message::G { .. } => FrameType::G,
            Message::Z { .. } => FrameType::Z,
            Message::ThetaJSF { .. } => FrameType::ThetaJSF,
            Message::TG { .. } => FrameType::TG,
            Message::TestZTag { .. } => FrameType::TestZTag,
            Message::Decision { .. } => FrameType::Decision,
            Message::OtpW { .. } => FrameType::OtpW,
            Message::Abort => FrameType::Abort,
        }
    }

    pub fn payload(&self) -> Vec<u8> {
        match self {
            Message::Qubits(b) => b.to_wire(),
            Message::ThetaF { theta, f } => encode_parts(&[theta.as_bits(), f]),
            Message::G { a, b } => encode_parts(&[a, b]),
            Message::Z { z } => encode_parts(&[z]),
            Message::ThetaJSF { theta, j, s, f, h } => {
                let j = Bits::from_u64(*j, 64);
                let mut parts = vec![theta.as_bits(), &j, s, f];
                if let Some(h) = h {
                    parts.push(h);
                }
                encode_parts(&parts)
            }
            Message::TG { t, a, b } => encode_parts(&[t, a, b]),
            Message::TestZTag { test, z, tag } => encode_parts(&[test, z, tag]),
            Message::Decision { decision, announce } => {
                let code = Bits::from_u64(decision.reason().code() as u64, 8);
                encode_parts(&[&code, announce])
            }
            Message::OtpW { c } => encode_parts(&[c]),
            Message::Abort => Vec::new(),
        }
    }

    /// Parses a payload. `n` is the session's qubit count, needed to unpack
    /// the qubit frame; field widths are checked by the receiving role.
    pub fn decode(frame_type: u8, payload: &[u8], n: usize) -> Result<Message, MessageError> {
        let ty = FrameType::from_u8(frame_type).ok_or(MessageError::UnknownType(frame_type))?;
        let name = ty.name();
        if ty == FrameType::Qubits {
            return QubitBatch::from_wire(payload, n)
                .map(Message::Qubits)
                .map_err(|_| MessageError::Malformed(name));
        }
        if ty == FrameType::Abort {
            return if payload.is_empty() { Ok(Message::Abort) } else { Err(MessageError::Malformed(name)) };
        }
        let mut parts = decode_parts(payload).map_err(|_| MessageError::Malformed(name))?;
        let want = match ty {
            FrameType::ThetaF | FrameType::G | FrameType::Decision => 2..=2,
            FrameType::Z | FrameType::OtpW => 1..=1,
            FrameType::ThetaJSF => 4..=5,
            FrameType::TG | FrameType::TestZTag => 3..=3,
            FrameType::Qubits | FrameType::Abort => unreachable!(),
        };
        if !want.contains(&parts.len()) {
            return Err(MessageError::Malformed(name));
        }
        let mut next = || parts.remove(0);
        Ok(match ty {
            FrameType::ThetaF => Message::ThetaF { theta: Bases::from_bits(next()), f: next() },
            FrameType::G => Message::G { a: next(), b: next() },
            FrameType::Z => Message::Z { z: next() },
            FrameType::ThetaJSF => {
                let theta = Bases::from_bits(next());
                let j = next();
                if j.len() != 64 {
                    return Err(MessageError::Malformed(name));
                }
                let (s, f) = (next(), next());
                let h = if parts.is_empty() { None } else { Some(parts.remove(0)) };
                Message::ThetaJSF { theta, j: j.to_u64(), s, f, h }
            }
            FrameType::TG => Message::TG { t: next(), a: next(), b: next() },
            FrameType::TestZTag => Message::TestZTag { test: next(), z: next(), tag: next() },
            FrameType::Decision => {
                let code = next();
                let reason = (code.len() == 8)
                    .then(|| Reason::from_code(code.to_u64() as u8))
                    .flatten()
                    .ok_or(MessageError::Malformed(name))?;
                Message::Decision { decision: Decision::from_reason(reason), announce: next() }
            }
            FrameType::OtpW => Message::OtpW { c: next() },
            FrameType::Qubits | FrameType::Abort => unreachable!(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qchannel::{ChannelConfig, Source};

    fn b(s: &str) -> Bits {
        Bits::parse(s).unwrap()
    }

    fn samples() -> Vec<Message> {
        let cfg = ChannelConfig::new(0.0, 0.5, 1).unwrap();
        let batch = Source::new(&cfg).prepare(&b("10110"), &Bases::parse("+x+xx").unwrap()).unwrap();
        vec![
            Message::Qubits(batch),
            Message::ThetaF { theta: Bases::parse("+x+xx").unwrap(), f: b("01101") },
            Message::G { a: b("1010"), b: b("11") },
            Message::Z { z: b("01") },
            Message::ThetaJSF { theta: Bases::parse("x++x+").unwrap(), j: u64::MAX - 3, s: b(""), f: b("11111"), h: None },
            Message::ThetaJSF { theta: Bases::parse("x++x+").unwrap(), j: 9, s: b("1"), f: b("00000"), h: Some(b("10001")) },
            Message::TG { t: b("10010"), a: b("0110"), b: b("10") },
            Message::TestZTag { test: b("10"), z: b("00"), tag: b("111") },
            Message::Decision { decision: Decision::reject(Reason::TestMismatch), announce: b("") },
            Message::Decision { decision: Decision::ACCEPT, announce: b("0001") },
            Message::OtpW { c: b("101") },
            Message::Abort,
        ]
    }

    #[test]
    fn payload_round_trip() {
        for msg in samples() {
            let back = Message::decode(msg.frame_type() as u8, &msg.payload(), 5).unwrap();
            assert_eq!(back, msg);
        }
    }

    #[test]
    fn reason_codes_round_trip() {
        for r in Reason::ALL {
            assert_eq!(Reason::from_code(r.code()), Some(r));
        }
        assert_eq!(Reason::from_code(7), None);
        assert!(Decision::ACCEPT.accepted());
        assert!(!Decision::reject(Reason::Aborted).accepted());
    }

    #[test]
    fn malformed_payloads_rejected() {
        assert_eq!(Message::decode(0, &[], 5), Err(MessageError::UnknownType(0)));
        assert_eq!(Message::decode(11, &[], 5), Err(MessageError::UnknownType(11)));
        assert!(Message::decode(10, &[1], 5).is_err());
        let z = Message::Z { z: b("01") }.payload();
        assert!(Message::decode(FrameType::G as u8, &z, 5).is_err());
        assert!(Message::decode(FrameType::Z as u8, &z[..z.len() - 1], 5).is_err());
        let bad_reason = encode_parts(&[&Bits::from_u64(42, 8), &Bits::new()]);
        assert!(Message::decode(FrameType::Decision as u8, &bad_reason, 5).is_err());
    }
}
