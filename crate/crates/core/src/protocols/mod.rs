//! Q-ID, Q-ID+, their noisy, mutual and key-distribution variants as
//! message-driven state machines, plus an in-memory session runner.

mod messages;
mod recover;
mod runner;
mod server;
mod user;


use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::{Bases, Bits};
use crate::codes::{build_basis_code, gv_feasible, BasisCode, CodeError, SyndromeFamily};
use crate::galois::{index_bits, FieldSpec, GaloisError, MacKey, UhfG};

pub use messages::{decode_positions, encode_positions, Decision, FrameType, Message, MessageError, Reason};
pub use recover::{in_test_set, qidplus_recover, test_agreement, test_positions, TestCheck};
pub use runner::{
    mutual_qid_run, qkd_run, run_session, Direction, Forward, Interceptor, Internals, SessionOutcome, Transcript,
    TranscriptEntry,
};
pub use server::ServerSession;
pub use user::{UserOutcome, UserSession};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error("mode {0} needs an authentication key")]
    MissingKey(Mode),
    #[error("authentication key has field degree {got}, session expects {want}")]
    KeyWidth { got: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Qid,
    QidNoisy,
    #[serde(rename = "qidplus")]
    QidPlus,
    Qkd,
    Mutual,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Qid, Mode::QidNoisy, Mode::QidPlus, Mode::Qkd, Mode::Mutual];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Qid => "qid",
            Mode::QidNoisy => "qid-noisy",
            Mode::QidPlus => "qidplus",
            Mode::Qkd => "qkd",
            Mode::Mutual => "mutual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Modes running the authenticated Q-ID+ flow.
    pub fn authenticated(self) -> bool {
        matches!(self, Mode::QidPlus | Mode::Qkd)
    }

    /// Modes sending a syndrome of `x|I_w`.
    pub fn reconciles(self) -> bool {
        matches!(self, Mode::QidNoisy | Mode::QidPlus | Mode::Qkd)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Plain protocol settings; [`SessionParams::build`] turns them into the
/// objects a session runs on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub mode: Mode,
    pub n: usize,
    pub m: u64,
    pub l: usize,
    /// Minimum distance asked of the basis code; `None` uses the
    /// Gilbert-Varshamov estimate.
    pub target_d: Option<usize>,
    pub code_seed: u64,
    /// Channel error rate the server should expect. Zero selects exact
    /// comparison of test bits.
    pub phi: f64,
    /// Error fraction the syndrome code corrects and the test comparison
    /// tolerates.
    pub delta_tolerance: f64,
    pub family_seed: u64,
    /// Secret-key bits output in key-distribution mode.
    pub sk_len: usize,
    pub flip_prob: f64,
    pub closeness: f64,
}

impl ProtocolConfig {
    pub fn new(mode: Mode, n: usize, m: u64, l: usize) -> Self {
        Self {
            mode,
            n,
            m,
            l,
            target_d: None,
            code_seed: 0,
            phi: 0.0,
            delta_tolerance: 0.0,
            family_seed: 0,
            sk_len: 0,
            flip_prob: 0.0,
            closeness: 0.0,
        }
    }
}

/// Everything both parties agree on before a session: sizes, the basis code,
/// the syndrome family and the hash fields.
#[derive(Debug, Clone)]
pub struct SessionParams {
    pub config: ProtocolConfig,
    pub basis_code: Arc<BasisCode>,
    pub family: Arc<SyndromeFamily>,
    f_field: FieldSpec,
    mac_field: Option<FieldSpec>,
}

impl SessionParams {
    /// Validates `config` and builds the basis code from its seed.
    pub fn build(config: ProtocolConfig) -> Result<Self, ProtocolError> {
        let target = match config.target_d {
            Some(d) => d,
            None => gv_feasible(config.n, config.m)?,
        };
        let code = build_basis_code(config.m, config.n, target, config.code_seed)?;
        Self::with_code(config, Arc::new(code))
    }

    pub fn with_code(config: ProtocolConfig, basis_code: Arc<BasisCode>) -> Result<Self, ProtocolError> {
        let c = &config;
        let bad = |msg: String| Err(ProtocolError::Params(msg));
        if c.n == 0 || c.l == 0 {
            return bad("n and l must be positive".into());
        }
        if c.m < 2 {
            return bad(format!("need at least two passwords, got m = {}", c.m));
        }
        if basis_code.m() != c.m || basis_code.n() != c.n {
            return bad(format!(
                "basis code has m = {}, n = {}; session has m = {}, n = {}",
                basis_code.m(),
                basis_code.n(),
                c.m,
                c.n
            ));
        }
        if c.l > c.n {
            return bad(format!("l = {} exceeds n = {}", c.l, c.n));
        }
        for (name, p) in [("phi", c.phi), ("delta_tolerance", c.delta_tolerance)] {
            if !(0.0..0.5).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1/2)"));
            }
        }
        if c.mode == Mode::Mutual {
            if !(0.0..0.5).contains(&c.flip_prob) {
                return bad(format!("flip probability {} outside [0, 1/2)", c.flip_prob));
            }
            if !(c.flip_prob..0.5).contains(&c.closeness) {
                return bad(format!("closeness threshold {} outside [flip_prob, 1/2)", c.closeness));
            }
        }
        if c.mode == Mode::Qkd {
            if c.sk_len == 0 {
                return bad("key-distribution mode needs sk_len > 0".into());
            }
            if index_bits(c.m) + c.sk_len > c.n {
                return bad(format!("extraction length {} exceeds n", index_bits(c.m) + c.sk_len));
            }
        }
        let delta = if c.mode.reconciles() { c.delta_tolerance } else { 0.0 };
        let family = Arc::new(SyndromeFamily::for_params(c.n / 2, delta, c.family_seed));
        let f_field = FieldSpec::new(c.n)?;
        let mut params = Self { config, basis_code, family, f_field, mac_field: None };
        if params.config.mode.authenticated() {
            params.mac_field = Some(FieldSpec::new(params.mac_field_degree())?);
        }
        Ok(params)
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn m(&self) -> u64 {
        self.config.m
    }

    pub fn l(&self) -> usize {
        self.config.l
    }

    pub fn f_field(&self) -> &FieldSpec {
        &self.f_field
    }

    pub fn g_field_degree(&self) -> usize {
        UhfG::field_degree(self.config.m, self.config.l)
    }

    pub fn mac_field(&self) -> Option<&FieldSpec> {
        self.mac_field.as_ref()
    }

    /// Length of the key-distribution extraction: the one-time pad for `w`
    /// followed by the output key.
    pub fn extract_len(&self) -> usize {
        index_bits(self.config.m) + self.config.sk_len
    }

    /// Upper bound on the bit length of the authenticated message.
    pub fn mac_message_bits(&self) -> usize {
        let c = &self.config;
        let n = c.n;
        let half = n / 2;
        let syndrome = 32 + self.family.syndrome_len() + n.saturating_sub(half);
        let mut lens = vec![n, 64, syndrome, n, self.g_field_degree(), c.l, n, c.l, c.l, n];
        if c.mode == Mode::Qkd {
            lens.push(n);
        }
        lens.iter().map(|len| 32 + 8 * len.div_ceil(8)).sum()
    }

    /// MAC field degree: the next power of two holding the longest
    /// authenticated message, at least 64.
    pub fn mac_field_degree(&self) -> usize {
        self.mac_message_bits().next_power_of_two().max(64)
    }

    /// Draws a fresh authentication key sized for these parameters.
    pub fn random_mac_key<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<MacKey, ProtocolError> {
        let field = match &self.mac_field {
            Some(f) => f.clone(),
            None => FieldSpec::new(self.mac_field_degree())?,
        };
        Ok(MacKey::random(&field, self.config.l, rng)?)
    }
}

/// Long-lived secrets of one party: the password index `w` and, for the
/// authenticated modes, the MAC key `k`. Sessions only ever read them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credentials {
    w: u64,
    k: Option<MacKey>,
}

impl Credentials {
    pub fn new(w: u64, k: Option<MacKey>) -> Self {
        Self { w, k }
    }

    pub fn w(&self) -> u64 {
        self.w
    }

    pub fn k(&self) -> Option<&MacKey> {
        self.k.as_ref()
    }

    /// Checks the credentials fit a session.
    pub fn check(&self, params: &SessionParams) -> Result<(), ProtocolError> {
        if self.w == 0 || self.w > params.m() {
            return Err(ProtocolError::Params(format!("password index {} outside 1..={}", self.w, params.m())));
        }
        if params.mode().authenticated() {
            let k = self.k.as_ref().ok_or(ProtocolError::MissingKey(params.mode()))?;
            let want = params.mac_field_degree();
            if k.field_degree() != want || k.tag_len() != params.l() {
                return Err(ProtocolError::KeyWidth { got: k.field_degree(), want });
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical encoding of `(w, alpha, beta)`.
    pub fn digest(&self) -> String {
        let w = Bits::from_u64(self.w, 64);
        let (alpha, beta) = match &self.k {
            Some(k) => (k.alpha.to_bits(), k.beta.clone()),
            None => (Bits::new(), Bits::new()),
        };
        let bytes = crate::galois::encode_parts(&[&w, &alpha, &beta]);
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The fields covered by the Q-ID+ tag, in protocol order.
pub struct MacFields<'a> {
    pub theta: &'a Bases,
    pub j: u64,
    pub s: &'a Bits,
    pub f: &'a Bits,
    pub h: Option<&'a Bits>,
    pub g_a: &'a Bits,
    pub g_b: &'a Bits,
    pub t: &'a Bits,
    pub test: &'a Bits,
    pub z: &'a Bits,
    pub x_iw: &'a Bits,
}

impl MacFields<'_> {
    /// Canonical encoding as a bit string, ready for the MAC.
    pub fn message(&self) -> Bits {
        let j = Bits::from_u64(self.j, 64);
        let mut parts: Vec<&Bits> = vec![self.theta.as_bits(), &j, self.s, self.f];
        if let Some(h) = self.h {
            parts.push(h);
        }
        parts.extend([self.g_a, self.g_b, self.t, self.test, self.z, self.x_iw]);
        let bytes = crate::galois::encode_parts(&parts);
        Bits::from_bytes(&bytes, 8 * bytes.len()).expect("whole bytes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn params_validation() {
        let ok = ProtocolConfig::new(Mode::Qid, 16, 4, 8);
        assert!(SessionParams::build(ok.clone()).is_ok());
        for bad in [
            ProtocolConfig { l: 0, ..ok.clone() },
            ProtocolConfig { l: 17, ..ok.clone() },
            ProtocolConfig { phi: 0.6, ..ok.clone() },
            ProtocolConfig { mode: Mode::Mutual, flip_prob: 0.2, closeness: 0.1, ..ok.clone() },
            ProtocolConfig { mode: Mode::Qkd, sk_len: 0, ..ok.clone() },
            ProtocolConfig { mode: Mode::Qkd, sk_len: 15, ..ok.clone() },
        ] {
            assert!(SessionParams::build(bad).is_err());
        }
        let code = Arc::new(build_basis_code(4, 16, 2, 0).unwrap());
        assert!(SessionParams::with_code(ProtocolConfig::new(Mode::Qid, 16, 8, 8), code).is_err());
    }

    #[test]
    fn mac_field_covers_messages() {
        for (n, l) in [(16usize, 8usize), (64, 16), (512, 64), (1024, 256)] {
            let mut cfg = ProtocolConfig::new(Mode::Qkd, n, 4, l);
            cfg.delta_tolerance = 0.05;
            cfg.sk_len = l.min(n / 4);
            let p = SessionParams::build(cfg).unwrap();
            assert!(p.mac_field_degree() >= p.mac_message_bits());
            assert!(p.mac_field_degree().is_power_of_two());
        }
    }

    #[test]
    fn credential_checks_and_digest() {
        let p = SessionParams::build(ProtocolConfig::new(Mode::QidPlus, 16, 4, 8)).unwrap();
        let k = p.random_mac_key(&mut rng::stream(1, "k", 0)).unwrap();
        assert!(Credentials::new(2, Some(k.clone())).check(&p).is_ok());
        assert!(Credentials::new(2, None).check(&p).is_err());
        assert!(Credentials::new(5, Some(k.clone())).check(&p).is_err());
        let a = Credentials::new(2, Some(k.clone()));
        assert_eq!(a.digest(), a.clone().digest());
        assert_ne!(a.digest(), Credentials::new(3, Some(k)).digest());
        assert_eq!(a.digest().len(), 64);
    }
}
