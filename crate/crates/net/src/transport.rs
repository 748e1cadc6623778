//! Framed links (TCP or in-memory pipe) and the two party loops.

use std::io::{self, BufReader, BufWriter, ErrorKind};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, SyncSender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use qid_core::bits::Bits;
use qid_core::protocols::{
    Credentials, Decision, Direction, Message, Reason, ServerSession, SessionParams, Transcript, TranscriptEntry,
    UserSession,
};
use qid_core::qchannel::ChannelConfig;
use qid_core::rng;
use thiserror::Error;

use crate::frame::{decode_frame, encode_frame, read_frame, write_frame, Frame, FrameError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("timed out waiting for the peer")]
    Timeout,
    #[error("connection closed")]
    Closed,
    #[error(transparent)]
    Frame(FrameError),
    #[error("io: {0}")]
    Io(io::Error),
}

impl From<FrameError> for TransportError {
    fn from(e: FrameError) -> Self {
        match e {
            FrameError::Io(e) => e.into(),
            e => TransportError::Frame(e),
        }
    }
}

impl From<io::Error> for TransportError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            ErrorKind::TimedOut | ErrorKind::WouldBlock => TransportError::Timeout,
            ErrorKind::UnexpectedEof | ErrorKind::ConnectionReset | ErrorKind::BrokenPipe => TransportError::Closed,
            _ => TransportError::Io(e),
        }
    }
}

pub trait FrameRead: Send {
    fn recv(&mut self) -> Result<Frame, TransportError>;
}

pub trait FrameWrite: Send {
    fn send(&mut self, f: &Frame) -> Result<(), TransportError>;
    /// Tells the peer nothing more is coming.
    fn close(&mut self) {}
}

struct TcpReader(BufReader<TcpStream>);
struct TcpWriter(BufWriter<TcpStream>);

impl FrameRead for TcpReader {
    fn recv(&mut self) -> Result<Frame, TransportError> {
        Ok(read_frame(&mut self.0)?)
    }
}

impl FrameWrite for TcpWriter {
    fn send(&mut self, f: &Frame) -> Result<(), TransportError> {
        Ok(write_frame(&mut self.0, f)?)
    }

    fn close(&mut self) {
        let _ = self.0.get_ref().shutdown(Shutdown::Write);
    }
}

/// Frames travel through the pipe as encoded bytes, so both transports
/// exercise the codec.
struct PipeReader {
    rx: Receiver<Vec<u8>>,
    timeout: Option<Duration>,
}

struct PipeWriter(Option<SyncSender<Vec<u8>>>);

impl FrameRead for PipeReader {
    fn recv(&mut self) -> Result<Frame, TransportError> {
        let bytes = match self.timeout {
            Some(t) => self.rx.recv_timeout(t).map_err(|e| match e {
                RecvTimeoutError::Timeout => TransportError::Timeout,
                RecvTimeoutError::Disconnected => TransportError::Closed,
            })?,
            None => self.rx.recv().map_err(|_| TransportError::Closed)?,
        };
        let (f, used) = decode_frame(&bytes)?;
        debug_assert_eq!(used, bytes.len());
        Ok(f)
    }
}

impl FrameWrite for PipeWriter {
    fn send(&mut self, f: &Frame) -> Result<(), TransportError> {
        let tx = self.0.as_ref().ok_or(TransportError::Closed)?;
        tx.send(encode_frame(f)?).map_err(|_| TransportError::Closed)
    }

    fn close(&mut self) {
        self.0 = None;
    }
}

/// One end of a framed, bidirectional connection.
pub struct Link {
    pub reader: Box<dyn FrameRead>,
    pub writer: Box<dyn FrameWrite>,
}

impl Link {
    /// `timeout` bounds every read: one protocol phase.
    pub fn tcp(stream: TcpStream, timeout: Option<Duration>) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(timeout)?;
        stream.set_write_timeout(timeout)?;
        let r = stream.try_clone()?;
        Ok(Self { reader: Box::new(TcpReader(BufReader::new(r))), writer: Box::new(TcpWriter(BufWriter::new(stream))) })
    }

    /// Two connected in-memory ends.
    pub fn pipe(timeout: Option<Duration>) -> (Self, Self) {
        let (atx, arx) = mpsc::sync_channel(64);
        let (btx, brx) = mpsc::sync_channel(64);
        let a = Self {
            reader: Box::new(PipeReader { rx: brx, timeout }),
            writer: Box::new(PipeWriter(Some(atx))),
        };
        let b = Self {
            reader: Box::new(PipeReader { rx: arx, timeout }),
            writer: Box::new(PipeWriter(Some(btx))),
        };
        (a, b)
    }

    pub fn send(&mut self, f: &Frame) -> Result<(), TransportError> {
        self.writer.send(f)
    }

    pub fn recv(&mut self) -> Result<Frame, TransportError> {
        self.reader.recv()
    }

    pub fn close(&mut self) {
        self.writer.close();
    }
}

/// Connects, retrying until `deadline` so a peer may start a little later.
pub fn connect(addr: &str, timeout: Duration) -> io::Result<TcpStream> {
    let deadline = Instant::now() + timeout;
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => return Err(e),
            Err(_) => thread::sleep(Duration::from_millis(20)),
        }
    }
}

pub fn bind(addr: &str) -> io::Result<(TcpListener, SocketAddr)> {
    let l = TcpListener::bind(addr)?;
    let a = l.local_addr()?;
    Ok((l, a))
}

/// What one party saw and decided.
#[derive(Debug, Clone)]
pub struct PartyReport {
    pub decision: Decision,
    /// The announced decision as the user received it (user side only).
    pub server_decision: Option<Decision>,
    pub sk: Option<Bits>,
    /// Sent and received frames plus the party's own channel events.
    pub transcript: Transcript,
    pub transport_error: Option<String>,
}

impl PartyReport {
    pub fn received(&self) -> Vec<Frame> {
        self.transcript
            .entries()
            .iter()
            .filter_map(|e| match e {
                TranscriptEntry::Delivered { frame, payload, .. } => Some(Frame::new(*frame, payload.clone())),
                _ => None,
            })
            .collect()
    }
}

fn record(t: &mut Transcript, sent: bool, direction: Direction, f: &Frame) {
    let (frame, payload) = (f.frame_type, f.payload.clone());
    t.push(if sent {
        TranscriptEntry::Sent { direction, frame, payload }
    } else {
        TranscriptEntry::Delivered { direction, frame, payload }
    });
}

fn send_all(link: &mut Link, t: &mut Transcript, dir: Direction, out: Vec<Message>) -> Result<(), TransportError> {
    for m in out {
        let f = Frame::from_message(&m);
        record(t, true, dir, &f);
        link.send(&f)?;
    }
    Ok(())
}

/// Channel seed derivation shared with the in-memory runner, so a networked
/// session reproduces an in-memory one.
fn session_channel(channel: &ChannelConfig, seed: u64) -> ChannelConfig {
    ChannelConfig { seed: rng::child_seed(seed, "channel", 0), ..*channel }
}

/// Runs the user's state machine over `link` until it finishes. A transport
/// failure aborts the session and sends a best-effort ABORT.
pub fn run_user(
    link: &mut Link,
    params: &Arc<SessionParams>,
    creds: &Arc<Credentials>,
    channel: &ChannelConfig,
    seed: u64,
) -> PartyReport {
    let mut user = UserSession::new(params.clone(), creds.clone(), seed, &session_channel(channel, seed));
    let mut t = Transcript::default();
    let first = user.start();
    let mut err = send_all(link, &mut t, Direction::ToServer, first).err();
    while err.is_none() && !user.is_done() {
        match link.recv() {
            Ok(f) => {
                record(&mut t, false, Direction::ToUser, &f);
                let out = user.next_frame(f.frame_type as u8, &f.payload);
                err = send_all(link, &mut t, Direction::ToServer, out).err();
            }
            Err(e) => err = Some(e),
        }
    }
    if err.is_some() && !user.is_done() {
        user.abort();
        let _ = link.send(&Frame::from_message(&Message::Abort));
    }
    link.close();
    for e in user.source_mut().drain_events() {
        t.push(TranscriptEntry::Channel(e));
    }
    let out = user.outcome().clone();
    PartyReport {
        decision: out.decision.unwrap_or(Decision::reject(Reason::Aborted)),
        server_decision: out.server_decision,
        sk: out.decision.filter(|d| d.accepted()).and(out.sk),
        transcript: t,
        transport_error: err.map(|e| e.to_string()),
    }
}

/// Runs the server's state machine over `link` until it decides.
pub fn run_server(
    link: &mut Link,
    params: &Arc<SessionParams>,
    creds: &Arc<Credentials>,
    channel: &ChannelConfig,
    seed: u64,
) -> PartyReport {
    let mut server = ServerSession::new(params.clone(), creds.clone(), seed, &session_channel(channel, seed));
    let mut t = Transcript::default();
    let mut err = None;
    while err.is_none() && !server.is_done() {
        match link.recv() {
            Ok(f) => {
                record(&mut t, false, Direction::ToServer, &f);
                let out = server.next_frame(f.frame_type as u8, &f.payload);
                err = send_all(link, &mut t, Direction::ToUser, out).err();
            }
            Err(e) => err = Some(e),
        }
    }
    if err.is_some() && !server.is_done() {
        server.abort();
        let _ = link.send(&Frame::from_message(&Message::Abort));
    }
    link.close();
    for e in server.detector_mut().drain_events() {
        t.push(TranscriptEntry::Channel(e));
    }
    let decision = server.decision().expect("aborted at the latest");
    PartyReport {
        decision,
        server_decision: None,
        sk: if decision.accepted() { server.sk().cloned() } else { None },
        transcript: t,
        transport_error: err.map(|e| e.to_string()),
    }
}

/// A full session over TCP on the loopback interface: the server listens on
/// an ephemeral port and the user connects to it.
pub fn loopback_session(
    params: &Arc<SessionParams>,
    user_creds: &Arc<Credentials>,
    server_creds: &Arc<Credentials>,
    channel: &ChannelConfig,
    seed: u64,
    timeout: Duration,
) -> io::Result<(PartyReport, PartyReport)> {
    let (listener, addr) = bind("127.0.0.1:0")?;
    let (p, c, ch) = (params.clone(), server_creds.clone(), *channel);
    let server = thread::spawn(move || -> io::Result<PartyReport> {
        let (s, _) = listener.accept()?;
        let mut link = Link::tcp(s, Some(timeout))?;
        Ok(run_server(&mut link, &p, &c, &ch, seed))
    });
    let mut link = Link::tcp(connect(&addr.to_string(), timeout)?, Some(timeout))?;
    let user = run_user(&mut link, params, user_creds, channel, seed);
    let server = server.join().expect("server thread")?;
    Ok((user, server))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qid_core::protocols::{run_session, Forward, Mode, ProtocolConfig};

    fn setup(mode: Mode) -> (Arc<SessionParams>, Arc<Credentials>) {
        let mut c = ProtocolConfig::new(mode, 32, 4, 8);
        if mode.reconciles() {
            c.phi = 0.01;
            c.delta_tolerance = 0.05;
        }
        let p = SessionParams::build(c).unwrap();
        let k = p.random_mac_key(&mut rng::stream(1, "k", 0)).ok().filter(|_| mode.authenticated());
        (Arc::new(p), Arc::new(Credentials::new(2, k)))
    }

    #[test]
    fn pipe_session_matches_in_memory() {
        for mode in [Mode::Qid, Mode::QidPlus] {
            let (p, c) = setup(mode);
            let ch = ChannelConfig::noiseless(0);
            let (mut a, mut b) = Link::pipe(Some(DEFAULT_TIMEOUT));
            let (p2, c2) = (p.clone(), c.clone());
            let h = thread::spawn(move || run_server(&mut b, &p2, &c2, &ch, 9));
            let user = run_user(&mut a, &p, &c, &ch, 9);
            let server = h.join().unwrap();
            assert!(user.decision.accepted() && server.decision.accepted());
            let mem = run_session(&p, &c, &c, &ch, 9, &mut Forward);
            let want = |d| mem.transcript.delivered(d).map(|(t, b)| Frame::new(t, b.to_vec())).collect::<Vec<_>>();
            assert_eq!(server.received(), want(Direction::ToServer));
            assert_eq!(user.received(), want(Direction::ToUser));
        }
    }

    #[test]
    fn silent_peer_times_out_to_abort() {
        let (p, c) = setup(Mode::Qid);
        let (mut a, _b) = Link::pipe(Some(Duration::from_millis(50)));
        let user = run_user(&mut a, &p, &c, &ChannelConfig::noiseless(0), 1);
        assert_eq!(user.decision.reason(), Reason::Aborted);
        assert!(user.transport_error.unwrap().contains("timed out"));
    }

    #[test]
    fn garbage_from_peer_aborts() {
        let (p, c) = setup(Mode::Qid);
        let (mut a, mut b) = Link::pipe(Some(DEFAULT_TIMEOUT));
        b.send(&Frame::new(qid_core::protocols::FrameType::Z, vec![1, 2, 3])).unwrap();
        let server = run_server(&mut a, &p, &c, &ChannelConfig::noiseless(0), 1);
        assert_eq!(server.decision.reason(), Reason::ProtocolViolation);
        assert_eq!(b.recv().unwrap().frame_type, qid_core::protocols::FrameType::Decision);
    }
}
