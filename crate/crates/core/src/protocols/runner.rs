//! In-memory session runner with an adversary hook, and the transcript.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::messages::{Decision, FrameType, Message, Reason};
use super::server::ServerSession;
use super::user::{UserOutcome, UserSession};
use super::{Credentials, SessionParams};
use crate::bits::{Bases, Bits};
use crate::qchannel::{ChannelConfig, ChannelEvent};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToServer,
    ToUser,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Direction::ToServer => Direction::ToUser,
            Direction::ToUser => Direction::ToServer,
        }
    }
}

/// Whatever sits on the line between user and server. Every message passes
/// through [`intercept`](Interceptor::intercept); the returned messages are
/// delivered in order, each to the side its direction names.
pub trait Interceptor {
    fn intercept(&mut self, dir: Direction, msg: Message) -> Vec<(Direction, Message)>;

    /// Channel events caused by the interceptor, for the transcript.
    fn drain_events(&mut self) -> Vec<ChannelEvent> {
        Vec::new()
    }
}

impl<F> Interceptor for F
where
    F: FnMut(Direction, Message) -> Vec<(Direction, Message)>,
{
    fn intercept(&mut self, dir: Direction, msg: Message) -> Vec<(Direction, Message)> {
        self(dir, msg)
    }
}

/// The honest line.
#[derive(Debug, Default, Clone, Copy)]
pub struct Forward;

impl Interceptor for Forward {
    fn intercept(&mut self, dir: Direction, msg: Message) -> Vec<(Direction, Message)> {
        vec![(dir, msg)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TranscriptEntry {
    Sent { direction: Direction, frame: FrameType, payload: Vec<u8> },
    Delivered { direction: Direction, frame: FrameType, payload: Vec<u8> },
    Channel(ChannelEvent),
}

/// Append-only session log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn push(&mut self, e: TranscriptEntry) {
        self.entries.push(e);
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    /// Payloads delivered to one side, in order.
    pub fn delivered(&self, to: Direction) -> impl Iterator<Item = (FrameType, &[u8])> {
        self.entries.iter().filter_map(move |e| match e {
            TranscriptEntry::Delivered { direction, frame, payload } if *direction == to => {
                Some((*frame, payload.as_slice()))
            }
            _ => None,
        })
    }

    /// One JSON object per line. Qubit payloads and hidden channel values
    /// are left out unless `reveal` is set.
    pub fn to_jsonl(&self, reveal: bool) -> String {
        let mut out = String::new();
        for (seq, e) in self.entries.iter().enumerate() {
            let v = match e {
                TranscriptEntry::Sent { direction, frame, payload }
                | TranscriptEntry::Delivered { direction, frame, payload } => {
                    let event = if matches!(e, TranscriptEntry::Sent { .. }) { "sent" } else { "delivered" };
                    let digest: String = Sha256::digest(payload)[..16].iter().map(|b| format!("{b:02x}")).collect();
                    let hidden = *frame == FrameType::Qubits && !reveal;
                    json!({
                        "seq": seq,
                        "event": event,
                        "direction": direction,
                        "frame": frame.name(),
                        "len": payload.len(),
                        "digest": digest,
                        "payload": (!hidden).then(|| payload.iter().map(|b| format!("{b:02x}")).collect::<String>()),
                    })
                    .to_string()
                }
                TranscriptEntry::Channel(ev) => {
                    let inner: serde_json::Value = serde_json::from_str(&ev.to_json(reveal)).expect("valid json");
                    json!({ "seq": seq, "event": "channel", "channel": inner }).to_string()
                }
            };
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

/// Simulator-side values of one run, for oracles and audits. Not visible to
/// any protocol role other than their owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Internals {
    pub x: Bits,
    pub theta: Bases,
    pub x_prime: Bits,
    pub server_bases: Bases,
    pub test_set: Vec<usize>,
    pub flips: Bits,
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub server: Decision,
    pub user: UserOutcome,
    pub sk_server: Option<Bits>,
    pub transcript: Transcript,
    pub internals: Internals,
}

impl SessionOutcome {
    pub fn accepted(&self) -> bool {
        self.server.accepted()
    }
}

/// Runs one session to completion. `seed` fixes every random choice of both
/// parties and of the channel; the channel's own seed field is ignored.
/// Parties left waiting when the line falls silent end as aborted.
pub fn run_session(
    params: &Arc<SessionParams>,
    user_creds: &Arc<Credentials>,
    server_creds: &Arc<Credentials>,
    channel: &ChannelConfig,
    seed: u64,
    line: &mut dyn Interceptor,
) -> SessionOutcome {
    let ch = ChannelConfig { seed: rng::child_seed(seed, "channel", 0), ..*channel };
    let mut user = UserSession::new(params.clone(), user_creds.clone(), seed, &ch);
    let mut server = ServerSession::new(params.clone(), server_creds.clone(), seed, &ch);
    let mut transcript = Transcript::default();
    let mut queue: VecDeque<(Direction, Message)> = VecDeque::new();

    let first = user.start();
    flush_events(&mut transcript, &mut user, &mut server, line);
    for m in first {
        log(&mut transcript, true, Direction::ToServer, &m);
        queue.push_back((Direction::ToServer, m));
    }
    while let Some((dir, msg)) = queue.pop_front() {
        let delivered = line.intercept(dir, msg);
        flush_events(&mut transcript, &mut user, &mut server, line);
        for (to, m) in delivered {
            log(&mut transcript, false, to, &m);
            let out = match to {
                Direction::ToServer => server.next(m),
                Direction::ToUser => user.next(m),
            };
            flush_events(&mut transcript, &mut user, &mut server, line);
            for o in out {
                log(&mut transcript, true, to.reverse(), &o);
                queue.push_back((to.reverse(), o));
            }
        }
    }
    user.abort();
    server.abort();

    let (x, theta) = user.secrets();
    let (x_prime, c) = server.measurement();
    let internals = Internals {
        x: x.clone(),
        theta: theta.clone(),
        x_prime: x_prime.clone(),
        server_bases: c.clone(),
        test_set: server.test_set().to_vec(),
        flips: user.flips().clone(),
    };
    let decision = server.decision().expect("aborted at the latest");
    SessionOutcome {
        server: decision,
        user: user.outcome().clone(),
        sk_server: if decision.accepted() { server.sk().cloned() } else { None },
        transcript,
        internals,
    }
}

fn log(t: &mut Transcript, sent: bool, direction: Direction, m: &Message) {
    let (frame, payload) = (m.frame_type(), m.payload());
    t.push(if sent {
        TranscriptEntry::Sent { direction, frame, payload }
    } else {
        TranscriptEntry::Delivered { direction, frame, payload }
    });
}

fn flush_events(t: &mut Transcript, user: &mut UserSession, server: &mut ServerSession, line: &mut dyn Interceptor) {
    let events = user
        .source_mut()
        .drain_events()
        .into_iter()
        .chain(line.drain_events())
        .chain(server.detector_mut().drain_events());
    for e in events {
        t.push(TranscriptEntry::Channel(e));
    }
}

/// Key-distribution session: `(sk_user, sk_server, server decision)`.
/// The server's key is present only if it accepted, the user's only if the
/// pad confirmation also checked out.
pub fn qkd_run(
    params: &Arc<SessionParams>,
    user_creds: &Arc<Credentials>,
    server_creds: &Arc<Credentials>,
    channel: &ChannelConfig,
    seed: u64,
    line: &mut dyn Interceptor,
) -> (Option<Bits>, Option<Bits>, Decision) {
    let out = run_session(params, user_creds, server_creds, channel, seed, line);
    let sk_user = out.user.decision.filter(|d| d.accepted()).and(out.user.sk);
    (sk_user, out.sk_server, out.server)
}

/// Mutual identification: `(server decision, user decision)`.
pub fn mutual_qid_run(
    params: &Arc<SessionParams>,
    user_creds: &Arc<Credentials>,
    server_creds: &Arc<Credentials>,
    channel: &ChannelConfig,
    seed: u64,
    line: &mut dyn Interceptor,
) -> (Decision, Decision) {
    let out = run_session(params, user_creds, server_creds, channel, seed, line);
    let user = out.user.decision.unwrap_or(Decision::reject(Reason::Aborted));
    (out.server, user)
}
