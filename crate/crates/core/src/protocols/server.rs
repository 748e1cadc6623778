//! The server's side: steps 2, 4 and 6.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::messages::{encode_positions, Decision, Message, Reason};
use super::recover::{qidplus_recover, test_agreement};
use super::{Credentials, MacFields, Mode, SessionParams};
use crate::bits::{Bases, Basis, Bits};
use crate::codes::{decode_with_syndrome, Syndrome};
use crate::galois::{index_bits, mac_verify, uhf_f_eval, uhf_g_eval, UhfF, UhfG};
use crate::qchannel::{ChannelConfig, Detector};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    AwaitQubits,
    AwaitTheta,
    AwaitZ,
    Done,
}

#[derive(Debug)]
pub struct ServerSession {
    params: Arc<SessionParams>,
    creds: Arc<Credentials>,
    rng: StreamRng,
    detector: Detector,
    phase: Phase,
    codeword: Bases,
    c: Bases,
    t: Vec<usize>,
    t_mask: Bits,
    x_prime: Bits,
    theta: Bases,
    f: Option<UhfF>,
    h: Option<UhfF>,
    j: u64,
    s_flat: Bits,
    s: Option<Syndrome>,
    g: Option<UhfG>,
    decision: Option<Decision>,
    sk: Option<Bits>,
}

impl ServerSession {
    pub fn new(params: Arc<SessionParams>, creds: Arc<Credentials>, seed: u64, channel: &ChannelConfig) -> Self {
        let codeword = params.basis_code.codewords()[(creds.w() - 1) as usize].clone();
        Self {
            params,
            creds,
            rng: rng::stream(seed, "server", 0),
            detector: Detector::new(channel),
            phase: Phase::AwaitQubits,
            c: codeword.clone(),
            codeword,
            t: Vec::new(),
            t_mask: Bits::new(),
            x_prime: Bits::new(),
            theta: Bases::default(),
            f: None,
            h: None,
            j: 0,
            s_flat: Bits::new(),
            s: None,
            g: None,
            decision: None,
            sk: None,
        }
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn decision(&self) -> Option<Decision> {
        self.decision
    }

    /// The extracted key after an accepted key-distribution session.
    pub fn sk(&self) -> Option<&Bits> {
        self.sk.as_ref()
    }

    pub fn detector_mut(&mut self) -> &mut Detector {
        &mut self.detector
    }

    /// The measurement outcome `x'` and the bases it was taken in.
    pub fn measurement(&self) -> (&Bits, &Bases) {
        (&self.x_prime, &self.c)
    }

    /// The test set `T`, ascending.
    pub fn test_set(&self) -> &[usize] {
        &self.t
    }

    pub fn next(&mut self, msg: Message) -> Vec<Message> {
        if self.phase == Phase::Done {
            return Vec::new();
        }
        let mode = self.params.mode();
        match (self.phase, msg) {
            (_, Message::Abort) => {
                self.finish(Decision::reject(Reason::Aborted));
                Vec::new()
            }
            (Phase::AwaitQubits, Message::Qubits(batch)) => self.measure(batch),
            (Phase::AwaitTheta, Message::ThetaF { theta, f }) if !mode.reconciles() => {
                self.on_theta(theta, f, None, None)
            }
            (Phase::AwaitTheta, Message::ThetaJSF { theta, j, s, f, h }) if mode.reconciles() => {
                self.on_theta(theta, f, Some((j, s)), h)
            }
            (Phase::AwaitZ, Message::Z { z }) if !mode.authenticated() => self.decide_qid(z),
            (Phase::AwaitZ, Message::TestZTag { test, z, tag }) if mode.authenticated() => {
                self.decide_qidplus(test, z, tag)
            }
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

    /// Ends an unfinished session as aborted.
    pub fn abort(&mut self) {
        if self.phase != Phase::Done {
            self.finish(Decision::reject(Reason::Aborted));
        }
    }

    /// Step 2. In the authenticated modes `T` is drawn first and the bases on
    /// `T` are replaced by fresh random ones.
    fn measure(&mut self, mut batch: crate::qchannel::QubitBatch) -> Vec<Message> {
        let n = self.params.n();
        if batch.len() != n {
            return self.violation();
        }
        if self.params.mode().authenticated() {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut self.rng);
            self.t = order[..self.params.l()].to_vec();
            self.t.sort_unstable();
            self.t_mask = Bits::zeros(n);
            for &i in &self.t {
                self.t_mask.set(i, true);
                self.c.set(i, Basis::from_bit(self.rng.random()));
            }
        }
        if self.detector.transmit(&mut batch).is_err() {
            return self.violation();
        }
        match self.detector.measure(&mut batch, &self.c) {
            Ok(x) => self.x_prime = x,
            Err(_) => return self.violation(),
        }
        self.phase = Phase::AwaitTheta;
        Vec::new()
    }

    /// Step 4: check the announced values, then pick `g` (and send `T`).
    fn on_theta(&mut self, theta: Bases, f: Bits, js: Option<(u64, Bits)>, h: Option<Bits>) -> Vec<Message> {
        let p = self.params.clone();
        let n = p.n();
        if theta.len() != n || f.len() != n || h.is_some() != (p.mode() == Mode::Qkd) {
            return self.violation();
        }
        let Ok(fe) = p.f_field().element(&f) else {
            return self.violation();
        };
        self.f = Some(UhfF::new(fe, p.l()).expect("l <= n"));
        if let Some(h) = h {
            if h.len() != n {
                return self.violation();
            }
            let he = p.f_field().element(&h).expect("width checked");
            self.h = Some(UhfF::new(he, p.extract_len()).expect("checked"));
        }
        if let Some((j, s)) = js {
            match Syndrome::from_bits(&s, p.family.syndrome_len()) {
                Some(parsed) if parsed.tail.len() <= n => {
                    self.j = j;
                    self.s = Some(parsed);
                    self.s_flat = s;
                }
                _ => return self.violation(),
            }
        }
        self.theta = theta;
        let g = UhfG::random(p.m(), p.l(), &mut self.rng).expect("field available");
        let (a, b) = (g.a().to_bits(), g.b().clone());
        self.g = Some(g);
        self.phase = Phase::AwaitZ;
        if p.mode().authenticated() {
            vec![Message::TG { t: self.t_mask.clone(), a, b }]
        } else {
            vec![Message::G { a, b }]
        }
    }

    fn z_prime(&self, x_iw: &Bits) -> Bits {
        let f = self.f.as_ref().expect("set in step 4");
        let g = self.g.as_ref().expect("set in step 4");
        uhf_f_eval(f, x_iw).expect("|x_Iw| <= n").xor(&uhf_g_eval(g, self.creds.w()).expect("w checked"))
    }

    /// Step 6 of Q-ID and its noisy and mutual variants.
    fn decide_qid(&mut self, z: Bits) -> Vec<Message> {
        let p = self.params.clone();
        if z.len() != p.l() {
            return self.violation();
        }
        let iw = self.theta.agreement(&self.codeword);
        let raw = self.x_prime.restrict(&iw);
        let x_iw = match &self.s {
            Some(s) => match decode_with_syndrome(&p.family, self.j, &raw, s) {
                Some(y) => y,
                None => return self.conclude(Decision::reject(Reason::DecodeFail), Bits::new()),
            },
            None => raw,
        };
        let z_prime = self.z_prime(&x_iw);
        if p.mode() == Mode::Mutual {
            let diff = z.xor(&z_prime);
            if diff.weight() as f64 <= p.config.closeness * p.l() as f64 {
                let flips: Vec<usize> = (0..diff.len()).filter(|&i| diff.get(i)).collect();
                return self.conclude(Decision::ACCEPT, encode_positions(&flips));
            }
            return self.conclude(Decision::reject(Reason::ZMismatch), Bits::new());
        }
        let d = if z == z_prime { Decision::ACCEPT } else { Decision::reject(Reason::ZMismatch) };
        self.conclude(d, Bits::new())
    }

    /// Step 6 of Q-ID+: recover, then conditions (1), (2), (3) in order.
    fn decide_qidplus(&mut self, test: Bits, z: Bits, tag: Bits) -> Vec<Message> {
        let p = self.params.clone();
        let l = p.l();
        if test.len() != l || z.len() != l || tag.len() != l {
            return self.violation();
        }
        let s = self.s.as_ref().expect("set in step 4");
        let Some(x_iw) = qidplus_recover(
            &self.x_prime,
            &test,
            &self.t,
            &self.theta,
            &self.codeword,
            &self.c,
            &p.family,
            self.j,
            s,
        ) else {
            return self.conclude(Decision::reject(Reason::DecodeFail), Bits::new());
        };
        let g = self.g.as_ref().expect("set in step 4");
        let (a, b) = (g.a().to_bits(), g.b().clone());
        let f_bits = self.f.as_ref().expect("set").key_bits();
        let h_bits = self.h.as_ref().map(|h| h.key_bits());
        let fields = MacFields {
            theta: &self.theta,
            j: self.j,
            s: &self.s_flat,
            f: &f_bits,
            h: h_bits.as_ref(),
            g_a: &a,
            g_b: &b,
            t: &self.t_mask,
            test: &test,
            z: &z,
            x_iw: &x_iw,
        };
        let k = self.creds.k().expect("credentials checked");
        if !mac_verify(k, &fields.message(), &tag).unwrap_or(false) {
            return self.conclude(Decision::reject(Reason::MacFail), Bits::new());
        }
        let test_prime = self.x_prime.restrict(&self.t);
        let tolerance = if p.config.phi > 0.0 { p.config.delta_tolerance } else { 0.0 };
        if !test_agreement(&test, &test_prime, &self.t, &self.theta, &self.c).passes(tolerance) {
            return self.conclude(Decision::reject(Reason::TestMismatch), Bits::new());
        }
        if z != self.z_prime(&x_iw) {
            return self.conclude(Decision::reject(Reason::ZMismatch), Bits::new());
        }
        let mut out = self.conclude(Decision::ACCEPT, Bits::new());
        if let Some(h) = &self.h {
            let ib = index_bits(p.m());
            let sk = uhf_f_eval(h, &x_iw).expect("|x_Iw| <= n");
            let c = Bits::from_u64(self.creds.w() - 1, ib).xor(&sk.prefix(ib));
            self.sk = Some(sk.slice(ib, sk.len()));
            out.push(Message::OtpW { c });
        }
        out
    }

    fn conclude(&mut self, d: Decision, announce: Bits) -> Vec<Message> {
        self.finish(d);
        vec![Message::Decision { decision: d, announce }]
    }

    fn finish(&mut self, d: Decision) {
        self.decision = Some(d);
        self.phase = Phase::Done;
    }

    fn violation(&mut self) -> Vec<Message> {
        if self.phase == Phase::Done {
            return Vec::new();
        }
        self.conclude(Decision::reject(Reason::ProtocolViolation), Bits::new())
    }
}
