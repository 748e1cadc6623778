//! Man-in-the-middle proxy. Each direction runs a reader loop and a writer
//! loop joined by a bounded queue; every frame passes through one shared
//! [`AttackLine`].

use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;

use qid_core::adversaries::AttackLine;
use qid_core::protocols::{Direction, FrameType, Interceptor};

use crate::frame::Frame;
use crate::transport::{FrameRead, FrameWrite, Link};

const QUEUE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProxyEntry {
    pub direction: Direction,
    pub frame_type: FrameType,
    /// What was forwarded in place of the frame; empty if it was dropped.
    pub forwarded: Vec<Frame>,
    pub tampered: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ProxyReport {
    pub entries: Vec<ProxyEntry>,
    pub failure: Option<String>,
}

impl ProxyReport {
    pub fn dropped(&self) -> usize {
        self.entries.iter().filter(|e| e.forwarded.is_empty()).count()
    }

    pub fn tampered(&self) -> usize {
        self.entries.iter().filter(|e| e.tampered).count()
    }
}

/// Frames the line cannot parse are forwarded untouched: the receiving
/// party is the one to reject them.
fn apply(line: &Mutex<AttackLine>, n: usize, dir: Direction, f: Frame) -> ProxyEntry {
    let frame_type = f.frame_type;
    let forwarded = match f.to_message(n) {
        Ok(m) => line
            .lock()
            .expect("line lock")
            .intercept(dir, m)
            .into_iter()
            .map(|(_, m)| Frame::from_message(&m))
            .collect(),
        Err(_) => vec![f.clone()],
    };
    let tampered = forwarded.len() != 1 || forwarded[0] != f;
    ProxyEntry { direction: dir, frame_type, forwarded, tampered }
}

fn pump(
    mut from: Box<dyn FrameRead>,
    mut to: Box<dyn FrameWrite>,
    dir: Direction,
    line: Arc<Mutex<AttackLine>>,
    n: usize,
) -> thread::JoinHandle<Vec<ProxyEntry>> {
    let (tx, rx) = mpsc::sync_channel::<Frame>(QUEUE);
    let writer = thread::spawn(move || {
        for f in rx {
            if to.send(&f).is_err() {
                break;
            }
        }
        to.close();
    });
    thread::spawn(move || {
        let mut log = Vec::new();
        while let Ok(f) = from.recv() {
            let entry = apply(&line, n, dir, f);
            let out = entry.forwarded.clone();
            log.push(entry);
            if out.into_iter().any(|f| tx.send(f).is_err()) {
                break;
            }
        }
        drop(tx);
        writer.join().expect("proxy writer");
        log
    })
}

/// Relays one session between `user` and `server` until both sides hang
/// up. `n` is the session's qubit count.
pub fn run_proxy(user: Link, server: Link, line: AttackLine, n: usize) -> ProxyReport {
    let line = Arc::new(Mutex::new(line));
    let up = pump(user.reader, server.writer, Direction::ToServer, line.clone(), n);
    let down = pump(server.reader, user.writer, Direction::ToUser, line.clone(), n);
    let mut entries = up.join().expect("proxy loop");
    entries.extend(down.join().expect("proxy loop"));
    let failure = line.lock().expect("line lock").failure().map(str::to_string);
    ProxyReport { entries, failure }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{run_server, run_user, DEFAULT_TIMEOUT};
    use qid_core::adversaries::Strategy;
    use qid_core::protocols::{Credentials, Mode, ProtocolConfig, Reason, SessionParams};
    use qid_core::qchannel::ChannelConfig;

    #[test]
    fn honest_proxy_is_transparent() {
        let p = Arc::new(SessionParams::build(ProtocolConfig::new(Mode::Qid, 32, 4, 8)).unwrap());
        let c = Arc::new(Credentials::new(3, None));
        let ch = ChannelConfig::noiseless(0);
        let run = |proxied: bool| {
            let (mut u, pu) = Link::pipe(Some(DEFAULT_TIMEOUT));
            let (ps, mut s) = Link::pipe(Some(DEFAULT_TIMEOUT));
            let (p2, c2) = (p.clone(), c.clone());
            let srv = thread::spawn(move || run_server(&mut s, &p2, &c2, &ch, 4));
            let prx = proxied.then(|| {
                let line = AttackLine::new(&Strategy::Honest, &p, &ch, 4).unwrap();
                thread::spawn(move || run_proxy(pu, ps, line, 32))
            });
            let user = run_user(&mut u, &p, &c, &ch, 4);
            (user, srv.join().unwrap(), prx.map(|h| h.join().unwrap()))
        };
        let (u1, s1, rep) = run(true);
        let rep = rep.unwrap();
        assert!(u1.decision.accepted() && s1.decision.accepted());
        assert_eq!(rep.tampered(), 0);
        assert_eq!(rep.entries.len(), 5);
        // a direct connection sees the same frames
        let (mut u, mut s) = Link::pipe(Some(DEFAULT_TIMEOUT));
        let (p2, c2) = (p.clone(), c.clone());
        let srv = thread::spawn(move || run_server(&mut s, &p2, &c2, &ch, 4));
        let u2 = run_user(&mut u, &p, &c, &ch, 4);
        let s2 = srv.join().unwrap();
        assert_eq!(u1.received(), u2.received());
        assert_eq!(s1.received(), s2.received());
        assert_eq!(s2.decision.reason(), Reason::Ok);
    }
}
