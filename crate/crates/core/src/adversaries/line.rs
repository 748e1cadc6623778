//! The attacker sitting on the line between user and server.

use std::sync::Arc;

use rand::Rng;

use super::{AdversaryError, BasesRule, Positions, Strategy};
use crate::bits::Basis;
use crate::galois::{decode_parts, encode_parts};
use crate::protocols::{Direction, FrameType, Interceptor, Message, SessionParams};
use crate::qchannel::{ChannelConfig, ChannelEvent, Role, Tap};
use crate::rng::{self, StreamRng};

/// Flips bit `bit` of part `field` of a classical payload. Length prefixes
/// are left alone, so the result always parses as the same list of parts.
pub fn flip_content_bit(frame: FrameType, payload: &[u8], field: usize, bit: usize) -> Result<Vec<u8>, AdversaryError> {
    if matches!(frame, FrameType::Qubits | FrameType::Abort) {
        return Err(AdversaryError::Unsupported(format!("bit flips on {} frames", frame.name())));
    }
    let mut parts = decode_parts(payload)?;
    let target = parts
        .get_mut(field)
        .filter(|p| bit < p.len())
        .ok_or_else(|| AdversaryError::Unsupported(format!("{} has no bit {bit} in field {field}", frame.name())))?;
    target.flip(bit);
    Ok(encode_parts(&parts.iter().collect::<Vec<_>>()))
}

/// An [`Interceptor`] carrying out one strategy. Line-level strategies are
/// intercept-resend, blocking and bit flips; the others leave the line
/// honest.
#[derive(Debug)]
pub struct AttackLine {
    strategy: Strategy,
    n: usize,
    plan: Vec<(usize, Basis)>,
    tap: Tap,
    fired: bool,
    observed: Vec<bool>,
    failed: Option<String>,
}

impl AttackLine {
    pub fn new(
        strategy: &Strategy,
        params: &Arc<SessionParams>,
        channel: &ChannelConfig,
        seed: u64,
    ) -> Result<Self, AdversaryError> {
        let n = params.n();
        let tap_cfg = ChannelConfig { seed: rng::child_seed(seed, "tap", 0), ..*channel };
        let mut plan = Vec::new();
        match strategy {
            Strategy::InterceptResend { positions, bases } => {
                let pos: Vec<usize> = match positions {
                    Positions::All => (0..n).collect(),
                    Positions::FirstDifference => {
                        let cw = params.basis_code.codewords();
                        vec![(0..n).find(|&i| cw[0].get(i) != cw[1].get(i)).ok_or_else(|| {
                            AdversaryError::Unsupported("codewords 1 and 2 agree everywhere".into())
                        })?]
                    }
                    Positions::List(v) => v.clone(),
                };
                if let Some(&p) = pos.iter().find(|&&p| p >= n) {
                    return Err(AdversaryError::Unsupported(format!("position {p} outside 0..{n}")));
                }
                let mut r: StreamRng = rng::stream(seed, "attack-bases", 0);
                plan = pos
                    .into_iter()
                    .map(|p| match bases {
                        BasesRule::Fixed(b) => (p, *b),
                        BasesRule::Random => (p, Basis::from_bit(r.random())),
                    })
                    .collect();
            }
            Strategy::BitFlip { frame: FrameType::Qubits | FrameType::Abort, .. } => {
                return Err(AdversaryError::Unsupported("bit flips need a classical frame".into()));
            }
            _ => {}
        }
        Ok(Self {
            strategy: strategy.clone(),
            n,
            plan,
            tap: Tap::new(&tap_cfg, Role::Adversary)?,
            fired: false,
            observed: Vec::new(),
            failed: None,
        })
    }

    /// Whether the strategy found its target frame.
    pub fn fired(&self) -> bool {
        self.fired
    }

    /// Outcomes of the attacker's own measurements.
    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    /// The positions and bases intercepted.
    pub fn plan(&self) -> &[(usize, Basis)] {
        &self.plan
    }

    /// Set when a tampered frame no longer parsed or the tap refused; the
    /// frame was then dropped.
    pub fn failure(&self) -> Option<&str> {
        self.failed.as_deref()
    }
}

impl Interceptor for AttackLine {
    fn intercept(&mut self, dir: Direction, msg: Message) -> Vec<(Direction, Message)> {
        let ft = msg.frame_type();
        match (&self.strategy, msg) {
            (Strategy::InterceptResend { .. }, Message::Qubits(mut batch)) if !self.fired => {
                self.fired = true;
                match self.tap.intercept_resend(&mut batch, &self.plan) {
                    Ok(v) => self.observed = v,
                    Err(e) => self.failed = Some(e.to_string()),
                }
                vec![(dir, Message::Qubits(batch))]
            }
            (Strategy::BlockAbort(target), _) if *target == ft && !self.fired => {
                self.fired = true;
                Vec::new()
            }
            (Strategy::BitFlip { frame, field, bit }, msg) if *frame == ft && !self.fired => {
                self.fired = true;
                let tampered = flip_content_bit(ft, &msg.payload(), *field, *bit)
                    .and_then(|p| Message::decode(ft as u8, &p, self.n).map_err(|e| AdversaryError::Parse(e.to_string())));
                match tampered {
                    Ok(m) => vec![(dir, m)],
                    Err(e) => {
                        self.failed = Some(e.to_string());
                        Vec::new()
                    }
                }
            }
            (_, msg) => vec![(dir, msg)],
        }
    }

    fn drain_events(&mut self) -> Vec<ChannelEvent> {
        self.tap.drain_events()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bits;
    use crate::protocols::{run_session, Credentials, Mode, ProtocolConfig, Reason};

    fn qid(n: usize, m: u64, l: usize) -> (Arc<SessionParams>, Arc<Credentials>) {
        let p = SessionParams::build(ProtocolConfig::new(Mode::Qid, n, m, l)).unwrap();
        (Arc::new(p), Arc::new(Credentials::new(1, None)))
    }

    #[test]
    fn content_flip_keeps_framing() {
        let z = Bits::parse("1010").unwrap();
        let payload = Message::Z { z: z.clone() }.payload();
        let flipped = flip_content_bit(FrameType::Z, &payload, 0, 1).unwrap();
        assert_eq!(flipped.len(), payload.len());
        assert_eq!(Message::decode(4, &flipped, 8).unwrap(), Message::Z { z: Bits::parse("1110").unwrap() });
        assert!(flip_content_bit(FrameType::Z, &payload, 0, 4).is_err());
        assert!(flip_content_bit(FrameType::Z, &payload, 1, 0).is_err());
        assert!(flip_content_bit(FrameType::Qubits, &payload, 0, 0).is_err());
    }

    #[test]
    fn line_strategies() {
        let (p, c) = qid(32, 4, 8);
        let ch = ChannelConfig::noiseless(0);
        let mut flip = AttackLine::new(&Strategy::BitFlip { frame: FrameType::Z, field: 0, bit: 3 }, &p, &ch, 1).unwrap();
        let out = run_session(&p, &c, &c, &ch, 1, &mut flip);
        assert!(flip.fired());
        assert_eq!(out.server.reason(), Reason::ZMismatch);

        let mut block = AttackLine::new(&Strategy::BlockAbort(FrameType::G), &p, &ch, 1).unwrap();
        let out = run_session(&p, &c, &c, &ch, 1, &mut block);
        assert_eq!(out.server.reason(), Reason::Aborted);
        assert_eq!(out.user.decision.map(|d| d.reason()), Some(Reason::Aborted));

        let ir = Strategy::InterceptResend { positions: Positions::List(vec![0, 1, 2]), bases: BasesRule::Random };
        let mut tap = AttackLine::new(&ir, &p, &ch, 1).unwrap();
        let out = run_session(&p, &c, &c, &ch, 1, &mut tap);
        assert_eq!(tap.observed().len(), 3);
        assert!(out.transcript.to_jsonl(true).contains("intercepted"));

        let bad = Strategy::InterceptResend { positions: Positions::List(vec![32]), bases: BasesRule::Random };
        assert!(AttackLine::new(&bad, &p, &ch, 1).is_err());
        let qflip = Strategy::BitFlip { frame: FrameType::Qubits, field: 0, bit: 0 };
        assert!(AttackLine::new(&qflip, &p, &ch, 1).is_err());
    }

    #[test]
    fn first_difference_targets_the_codewords() {
        let (p, _) = qid(16, 2, 4);
        let s = Strategy::InterceptResend { positions: Positions::FirstDifference, bases: BasesRule::Fixed(Basis::Rectilinear) };
        let line = AttackLine::new(&s, &p, &ChannelConfig::noiseless(0), 0).unwrap();
        let (pos, _) = line.plan()[0];
        let cw = p.basis_code.codewords();
        assert_ne!(cw[0].get(pos), cw[1].get(pos));
        assert!((0..pos).all(|i| cw[0].get(i) == cw[1].get(i)));
    }
}
