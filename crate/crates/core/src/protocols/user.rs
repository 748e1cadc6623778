//! The user's side: steps 1, 3 and 5.

use std::sync::Arc;

use rand::Rng;

use super::messages::{decode_positions, Decision, Message, Reason};
use super::recover::test_positions;
use super::{Credentials, MacFields, Mode, SessionParams};
use crate::bits::{Bases, Bits};
use crate::codes::{syndrome, Syndrome};
use crate::galois::{index_bits, mac_tag, uhf_f_eval, uhf_g_eval, UhfF, UhfG};
use crate::qchannel::{ChannelConfig, Source};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Start,
    AwaitG,
    AwaitDecision,
    AwaitOtp,
    Done,
}

/// What the user ends a session with.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserOutcome {
    /// The server's announced decision, if one arrived.
    pub server_decision: Option<Decision>,
    /// The user's own verdict: the server's decision in one-way modes, the
    /// flip-set check in mutual mode, the pad check in key-distribution mode.
    pub decision: Option<Decision>,
    pub sk: Option<Bits>,
}

#[derive(Debug)]
pub struct UserSession {
    params: Arc<SessionParams>,
    creds: Arc<Credentials>,
    rng: StreamRng,
    flip_rng: StreamRng,
    source: Source,
    phase: Phase,
    x: Bits,
    theta: Bases,
    x_iw: Bits,
    f: Option<UhfF>,
    h: Option<UhfF>,
    j: u64,
    s_flat: Bits,
    flips: Bits,
    outcome: UserOutcome,
}

impl UserSession {
    pub fn new(params: Arc<SessionParams>, creds: Arc<Credentials>, seed: u64, channel: &ChannelConfig) -> Self {
        Self {
            params,
            creds,
            rng: rng::stream(seed, "user", 0),
            flip_rng: rng::stream(seed, "user-flips", 0),
            source: Source::new(channel),
            phase: Phase::Start,
            x: Bits::new(),
            theta: Bases::default(),
            x_iw: Bits::new(),
            f: None,
            h: None,
            j: 0,
            s_flat: Bits::new(),
            flips: Bits::new(),
            outcome: UserOutcome::default(),
        }
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn outcome(&self) -> &UserOutcome {
        &self.outcome
    }

    pub fn source_mut(&mut self) -> &mut Source {
        &mut self.source
    }

    /// The user's raw values `(x, theta)`, for oracles that recompute
    /// protocol values.
    pub fn secrets(&self) -> (&Bits, &Bases) {
        (&self.x, &self.theta)
    }

    /// The flips applied to `z` in mutual mode.
    pub fn flips(&self) -> &Bits {
        &self.flips
    }

    /// Steps 1 and 3: prepare the qubits, then announce the bases and hashes.
    pub fn start(&mut self) -> Vec<Message> {
        if self.phase != Phase::Start {
            return self.violation();
        }
        let p = self.params.clone();
        let n = p.n();
        self.x = Bits::random(&mut self.rng, n);
        self.theta = Bases::random(&mut self.rng, n);
        let batch = match self.source.prepare(&self.x, &self.theta) {
            Ok(b) => b,
            Err(_) => return self.violation(),
        };
        let f = UhfF::random(p.f_field(), p.l(), &mut self.rng).expect("l <= n checked");
        let codeword = p.basis_code.codewords()[(self.creds.w() - 1) as usize].clone();
        self.x_iw = self.x.restrict(&self.theta.agreement(&codeword));
        let second = if p.mode().reconciles() {
            self.j = self.rng.random();
            let s: Syndrome = syndrome(&p.family, self.j, &self.x_iw);
            self.s_flat = s.to_bits();
            if p.mode() == Mode::Qkd {
                self.h = Some(UhfF::random(p.f_field(), p.extract_len(), &mut self.rng).expect("checked"));
            }
            Message::ThetaJSF {
                theta: self.theta.clone(),
                j: self.j,
                s: self.s_flat.clone(),
                f: f.key_bits(),
                h: self.h.as_ref().map(|h| h.key_bits()),
            }
        } else {
            Message::ThetaF { theta: self.theta.clone(), f: f.key_bits() }
        };
        self.f = Some(f);
        self.phase = Phase::AwaitG;
        vec![Message::Qubits(batch), second]
    }

    /// Handles one incoming message. Anything unexpected ends the session.
    pub fn next(&mut self, msg: Message) -> Vec<Message> {
        if self.phase == Phase::Done {
            return Vec::new();
        }
        let auth = self.params.mode().authenticated();
        match (self.phase, msg) {
            (_, Message::Abort) => {
                self.finish(Decision::reject(Reason::Aborted));
                Vec::new()
            }
            (Phase::AwaitG, Message::G { a, b }) if !auth => self.answer_g(a, b),
            (Phase::AwaitG, Message::TG { t, a, b }) if auth => self.answer_tg(t, a, b),
            (Phase::AwaitDecision, Message::Decision { decision, announce }) => {
                self.on_decision(decision, announce)
            }
            (Phase::AwaitOtp, Message::OtpW { c }) => self.on_otp(c),
            _ => self.violation(),
        }
    }

    /// Wire entry point: a payload that does not parse is a protocol
    /// violation like any other unexpected message.
    pub fn next_frame(&mut self, frame_type: u8, payload: &[u8]) -> Vec<Message> {
        match Message::decode(frame_type, payload, self.params.n()) {
            Ok(m) => self.next(m),
            Err(_) => self.violation(),
        }
    }

    /// Ends an unfinished session as aborted (transport loss or timeout).
    pub fn abort(&mut self) {
        if self.phase != Phase::Done {
            self.finish(Decision::reject(Reason::Aborted));
        }
    }

    fn g_from(&self, a: Bits, b: Bits) -> Option<UhfG> {
        let p = &self.params;
        if a.len() != p.g_field_degree() || b.len() != p.l() {
            return None;
        }
        let field = UhfG::field(p.m(), p.l()).ok()?;
        UhfG::new(field.element(&a).ok()?, b, p.m()).ok()
    }

    fn z(&self, g: &UhfG) -> Bits {
        let f = self.f.as_ref().expect("set in start");
        let fx = uhf_f_eval(f, &self.x_iw).expect("|x_Iw| <= n");
        fx.xor(&uhf_g_eval(g, self.creds.w()).expect("w checked"))
    }

    /// Step 5 of Q-ID: `z = f(x|I_w) xor g(w)`, noisy in mutual mode.
    fn answer_g(&mut self, a: Bits, b: Bits) -> Vec<Message> {
        let Some(g) = self.g_from(a, b) else {
            return self.violation();
        };
        let mut z = self.z(&g);
        if self.params.mode() == Mode::Mutual {
            let p = self.params.config.flip_prob;
            let l = self.params.l();
            self.flips = if p > 0.0 {
                (0..l).map(|_| self.flip_rng.random::<f64>() < p).collect()
            } else {
                Bits::zeros(l)
            };
            z = z.xor(&self.flips);
        }
        self.phase = Phase::AwaitDecision;
        vec![Message::Z { z }]
    }

    /// Step 5 of Q-ID+: test bits, `z` and the tag.
    fn answer_tg(&mut self, t: Bits, a: Bits, b: Bits) -> Vec<Message> {
        let p = self.params.clone();
        if t.len() != p.n() || t.weight() != p.l() {
            return self.violation();
        }
        let (a_bits, b_bits) = (a.clone(), b.clone());
        let Some(g) = self.g_from(a, b) else {
            return self.violation();
        };
        let test = self.x.restrict(&test_positions(&t));
        let z = self.z(&g);
        let f_bits = self.f.as_ref().expect("set").key_bits();
        let h_bits = self.h.as_ref().map(|h| h.key_bits());
        let fields = MacFields {
            theta: &self.theta,
            j: self.j,
            s: &self.s_flat,
            f: &f_bits,
            h: h_bits.as_ref(),
            g_a: &a_bits,
            g_b: &b_bits,
            t: &t,
            test: &test,
            z: &z,
            x_iw: &self.x_iw,
        };
        let k = self.creds.k().expect("credentials checked");
        let tag = mac_tag(k, &fields.message()).expect("MAC field sized for the message");
        self.phase = Phase::AwaitDecision;
        vec![Message::TestZTag { test, z, tag }]
    }

    fn on_decision(&mut self, decision: Decision, announce: Bits) -> Vec<Message> {
        self.outcome.server_decision = Some(decision);
        if !decision.accepted() {
            if !announce.is_empty() {
                return self.violation();
            }
            self.finish(decision);
            return Vec::new();
        }
        match self.params.mode() {
            Mode::Mutual => {
                let truth: Vec<usize> = (0..self.flips.len()).filter(|&i| self.flips.get(i)).collect();
                let verdict = match decode_positions(&announce) {
                    Some(claimed) if claimed == truth => Decision::ACCEPT,
                    Some(_) => Decision::reject(Reason::ZMismatch),
                    None => return self.violation(),
                };
                self.finish(verdict);
            }
            Mode::Qkd if announce.is_empty() => self.phase = Phase::AwaitOtp,
            _ if announce.is_empty() => self.finish(decision),
            _ => return self.violation(),
        }
        Vec::new()
    }

    /// Confirmation in key-distribution mode: the pad must decrypt to `w`.
    fn on_otp(&mut self, c: Bits) -> Vec<Message> {
        let ib = index_bits(self.params.m());
        if c.len() != ib {
            return self.violation();
        }
        let h = self.h.as_ref().expect("set in start");
        let sk = uhf_f_eval(h, &self.x_iw).expect("|x_Iw| <= n");
        let w_bits = Bits::from_u64(self.creds.w() - 1, ib);
        if c.xor(&sk.prefix(ib)) == w_bits {
            self.outcome.sk = Some(sk.slice(ib, sk.len()));
            self.finish(Decision::ACCEPT);
        } else {
            self.finish(Decision::reject(Reason::ZMismatch));
        }
        Vec::new()
    }

    fn finish(&mut self, d: Decision) {
        self.outcome.decision = Some(d);
        self.phase = Phase::Done;
    }

    fn violation(&mut self) -> Vec<Message> {
        if self.phase == Phase::Done {
            return Vec::new();
        }
        self.finish(Decision::reject(Reason::ProtocolViolation));
        vec![Message::Abort]
    }
}
