//! Run configuration (flat `key = value` files, overridden by flags) and the
//! on-disk key store.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use qid_core::analysis::bounds::impersonation_epsilon;
use qid_core::bits::Bits;
use qid_core::galois::{FieldSpec, MacKey};
use qid_core::protocols::{Credentials, Mode, ProtocolConfig, SessionParams};
use qid_core::qchannel::ChannelConfig;
use qid_core::rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("bad value for {key}: '{value}'")]
    Value { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("key store: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub mode: Mode,
    pub n: usize,
    pub m: u64,
    pub l: usize,
    pub lambda: f64,
    pub q: f64,
    pub phi: f64,
    pub eta: f64,
    pub delta_tolerance: f64,
    pub seed: u64,
    pub endpoint: String,
    /// Where a proxy forwards to.
    pub upstream: String,
    pub key_store: Option<PathBuf>,
    /// The password index used when no key store exists yet.
    pub w: u64,
    pub sk_len: usize,
    pub flip_prob: f64,
    pub closeness: f64,
    pub target_d: Option<usize>,
    pub code_seed: u64,
    pub family_seed: u64,
    pub timeout_ms: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            mode: Mode::Qid,
            n: 64,
            m: 4,
            l: 16,
            lambda: 0.1,
            q: 0.0,
            phi: 0.0,
            eta: 0.0,
            delta_tolerance: 0.0,
            seed: 0,
            endpoint: "127.0.0.1:7411".into(),
            upstream: "127.0.0.1:7412".into(),
            key_store: None,
            w: 1,
            sk_len: 16,
            flip_prob: 0.0,
            closeness: 0.0,
            target_d: None,
            code_seed: 0,
            family_seed: 0,
            timeout_ms: 5000,
        }
    }
}

pub const KEYS: [&str; 21] = [
    "mode",
    "n",
    "m",
    "l",
    "lambda",
    "q",
    "phi",
    "eta",
    "delta_tolerance",
    "seed",
    "endpoint",
    "upstream",
    "key_store",
    "w",
    "sk_len",
    "flip_prob",
    "closeness",
    "target_d",
    "code_seed",
    "family_seed",
    "timeout_ms",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value { key: key.into(), value: value.into() })
}

impl Config {
    /// Sets one key from its text form. Dashes and underscores are
    /// interchangeable in key names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let k = key.trim().replace('-', "_");
        let v = value.trim();
        match k.as_str() {
            "mode" => {
                self.mode = Mode::parse(v).ok_or_else(|| ConfigError::Value { key: k.clone(), value: v.into() })?
            }
            "n" => self.n = parse(&k, v)?,
            "m" => self.m = parse(&k, v)?,
            "l" => self.l = parse(&k, v)?,
            "lambda" => self.lambda = parse(&k, v)?,
            "q" => self.q = parse(&k, v)?,
            "phi" => self.phi = parse(&k, v)?,
            "eta" => self.eta = parse(&k, v)?,
            "delta_tolerance" => self.delta_tolerance = parse(&k, v)?,
            "seed" => self.seed = parse(&k, v)?,
            "endpoint" => self.endpoint = v.into(),
            "upstream" => self.upstream = v.into(),
            "key_store" => self.key_store = Some(PathBuf::from(v)),
            "w" => self.w = parse(&k, v)?,
            "sk_len" => self.sk_len = parse(&k, v)?,
            "flip_prob" => self.flip_prob = parse(&k, v)?,
            "closeness" => self.closeness = parse(&k, v)?,
            "target_d" => self.target_d = Some(parse(&k, v)?),
            "code_seed" => self.code_seed = parse(&k, v)?,
            "family_seed" => self.family_seed = parse(&k, v)?,
            "timeout_ms" => self.timeout_ms = parse(&k, v)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, msg: format!("expected key = value, got '{line}'") })?;
            self.set(k, v).map_err(|e| ConfigError::Syntax { line: i + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(&fs::read_to_string(path)?)?;
        Ok(c)
    }

    /// Flat text that [`apply_text`](Self::apply_text) reads back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let v = serde_json::to_value(self).expect("plain data");
        for k in KEYS {
            match &v[k] {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => out.push_str(&format!("{k} = {s}\n")),
                other => out.push_str(&format!("{k} = {other}\n")),
            }
        }
        out
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        let mut c = ProtocolConfig::new(self.mode, self.n, self.m, self.l);
        c.phi = self.phi;
        c.delta_tolerance = self.delta_tolerance;
        c.sk_len = self.sk_len;
        c.flip_prob = self.flip_prob;
        c.closeness = self.closeness;
        c.target_d = self.target_d;
        c.code_seed = self.code_seed;
        c.family_seed = self.family_seed;
        c
    }

    /// Structural checks plus building the session objects. Refuses to
    /// start on any failure.
    pub fn validate(&self) -> Result<SessionParams, ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.lambda > 0.0 && self.lambda < 0.25) {
            return bad(format!("lambda = {} outside (0, 1/4)", self.lambda));
        }
        if !(self.q >= 0.0) {
            return bad(format!("q = {} must be nonnegative", self.q));
        }
        if self.w == 0 || self.w > self.m {
            return bad(format!("w = {} outside 1..={}", self.w, self.m));
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be positive".into());
        }
        self.channel()?;
        SessionParams::build(self.protocol_config()).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn channel(&self) -> Result<ChannelConfig, ConfigError> {
        ChannelConfig::new(self.phi, self.eta, self.seed).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Asymptotic feasibility, reported rather than enforced.
    pub fn warnings(&self) -> Vec<String> {
        match impersonation_epsilon(self.n, self.m, self.q, self.lambda) {
            Ok(r) if r.feasible => Vec::new(),
            Ok(r) => r.flags.iter().map(|f| format!("bound calculator: {f}")).collect(),
            Err(e) => vec![format!("bound calculator: {e}")],
        }
    }
}

/// Long-lived secrets on disk: `(w, k)` and keys from key-distribution runs.
/// Bit strings are stored as `0`/`1` text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyStore {
    pub w: u64,
    pub mac_degree: Option<usize>,
    pub alpha: Option<String>,
    pub beta: Option<String>,
    #[serde(default)]
    pub keys: Vec<String>,
}

impl KeyStore {
    /// Fresh credentials for these parameters, derived from `seed`.
    pub fn generate(params: &SessionParams, w: u64, seed: u64) -> Result<Self, ConfigError> {
        let k = if params.mode().authenticated() {
            Some(
                params
                    .random_mac_key(&mut rng::stream(seed, "mac-key", 0))
                    .map_err(|e| ConfigError::Store(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self {
            w,
            mac_degree: k.as_ref().map(MacKey::field_degree),
            alpha: k.as_ref().map(|k| k.alpha.to_bits().to_string()),
            beta: k.as_ref().map(|k| k.beta.to_string()),
            keys: Vec::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| ConfigError::Store(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_string_pretty(self).expect("plain data"))?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Loads the store at `path`, creating it when it does not exist.
    pub fn open(path: &Path, params: &SessionParams, w: u64, seed: u64) -> Result<Self, ConfigError> {
        if path.exists() {
            Self::load(path)
        } else {
            let s = Self::generate(params, w, seed)?;
            s.save(path)?;
            Ok(s)
        }
    }

    pub fn credentials(&self) -> Result<Credentials, ConfigError> {
        let err = |m: &str| ConfigError::Store(m.into());
        let k = match (self.mac_degree, &self.alpha, &self.beta) {
            (Some(d), Some(a), Some(b)) => {
                let field = FieldSpec::new(d).map_err(|e| ConfigError::Store(e.to_string()))?;
                let alpha = Bits::parse(a).ok_or_else(|| err("alpha is not a bit string"))?;
                let beta = Bits::parse(b).ok_or_else(|| err("beta is not a bit string"))?;
                let alpha = field.element(&alpha).map_err(|e| ConfigError::Store(e.to_string()))?;
                Some(MacKey::new(alpha, beta).map_err(|e| ConfigError::Store(e.to_string()))?)
            }
            (None, None, None) => None,
            _ => return Err(err("incomplete authentication key")),
        };
        Ok(Credentials::new(self.w, k))
    }

    pub fn digest(&self) -> Result<String, ConfigError> {
        Ok(self.credentials()?.digest())
    }
}
