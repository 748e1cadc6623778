use std::io::Cursor;
use std::sync::Arc;

use proptest::prelude::*;
use qid_core::protocols::{
    run_session, Credentials, Direction, Forward, FrameType, Message, Mode, ProtocolConfig, ServerSession,
    SessionParams, UserSession,
};
use qid_core::qchannel::ChannelConfig;
use qid_core::rng;
use qid_net::frame::{decode_frame, encode_frame, read_frame, Frame, HEADER_LEN};

fn frame_type() -> impl Strategy<Value = FrameType> {
    (1u8..=10).prop_map(|t| FrameType::from_u8(t).unwrap())
}

fn session(mode: Mode) -> (Arc<SessionParams>, Arc<Credentials>) {
    let mut c = ProtocolConfig::new(mode, 32, 4, 8);
    if mode.reconciles() {
        c.phi = 0.01;
        c.delta_tolerance = 0.1;
    }
    let p = SessionParams::build(c).unwrap();
    let k = mode.authenticated().then(|| p.random_mac_key(&mut rng::stream(2, "key", 0)).unwrap());
    (Arc::new(p), Arc::new(Credentials::new(1, k)))
}

fn mode() -> impl Strategy<Value = Mode> {
    prop::sample::select(vec![Mode::Qid, Mode::QidNoisy, Mode::QidPlus])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn frame_round_trip(t in frame_type(), payload in prop::collection::vec(any::<u8>(), 0..300)) {
        let f = Frame::new(t, payload);
        let bytes = encode_frame(&f).unwrap();
        prop_assert_eq!(bytes.len(), HEADER_LEN + f.payload.len());
        let (back, used) = decode_frame(&bytes).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(read_frame(&mut Cursor::new(&bytes)).unwrap(), f);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..64), n in 1usize..64) {
        if let Ok((f, used)) = decode_frame(&bytes) {
            prop_assert!(used <= bytes.len());
            let _ = f.to_message(n);
        }
        let _ = read_frame(&mut Cursor::new(&bytes));
        for t in 0..=11u8 {
            let _ = Message::decode(t, &bytes, n);
        }
    }

    #[test]
    fn framed_garbage_never_panics(t in 1u8..=10, payload in prop::collection::vec(any::<u8>(), 0..64)) {
        let mut bytes = vec![0x51, 0x49, 1, t];
        bytes.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&payload);
        let (f, _) = decode_frame(&bytes).unwrap();
        let _ = f.to_message(32);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn state_machines_survive_arbitrary_frames(
        m in mode(),
        frames in prop::collection::vec((0u8..=11, prop::collection::vec(any::<u8>(), 0..40)), 0..8),
        seed in any::<u64>(),
    ) {
        let (p, c) = session(m);
        let ch = ChannelConfig::noiseless(seed);
        let mut server = ServerSession::new(p.clone(), c.clone(), seed, &ch);
        let mut user = UserSession::new(p, c, seed, &ch);
        let _ = user.start();
        for (t, payload) in &frames {
            let was_done = server.is_done();
            let before = server.decision();
            let _ = server.next_frame(*t, payload);
            let _ = user.next_frame(*t, payload);
            if was_done {
                prop_assert_eq!(server.decision(), before);
            }
        }
        server.abort();
        user.abort();
        prop_assert!(server.is_done() && user.is_done());
    }

    #[test]
    fn mutated_honest_frames_never_panic(m in mode(), seed in any::<u64>(), which in any::<usize>(), byte in any::<usize>(), xor in 1u8..) {
        let (p, c) = session(m);
        let ch = ChannelConfig::new(0.01, 0.0, seed).unwrap();
        let honest = run_session(&p, &c, &c, &ch, seed, &mut Forward);
        let mut frames: Vec<(FrameType, Vec<u8>)> =
            honest.transcript.delivered(Direction::ToServer).map(|(t, b)| (t, b.to_vec())).collect();
        let k = which % frames.len();
        if !frames[k].1.is_empty() {
            let i = byte % frames[k].1.len();
            frames[k].1[i] ^= xor;
        }
        let mut server = ServerSession::new(p, c, seed, &ch);
        for (t, b) in &frames {
            let _ = server.next_frame(*t as u8, b);
        }
        prop_assert!(server.is_done());
    }
}
