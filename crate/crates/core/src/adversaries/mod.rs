//! Attack strategies and the Monte-Carlo experiments run against them.
//!
//! Results of these experiments are consistent with the security
//! definitions for the strategies implemented here; they do not establish
//! them for arbitrary attackers.

mod experiments;
mod line;
mod sj;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bits::Basis;
use crate::galois::GaloisError;
use crate::protocols::{FrameType, Mode, ProtocolError};
use crate::qchannel::ChannelError;

pub use experiments::{
    default_schedule, run_dishonest_server_experiment, run_impersonation_experiment, run_mitm_experiment,
    run_reuse_experiment, ScheduleEntry,
};
pub use line::{flip_content_bit, AttackLine};
pub use sj::{sj_distinctness_audit, sj_exhaustive, SjExhaustive};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cannot parse attack '{0}'")]
    Parse(String),
}

/// Whose password the attacker claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Guess {
    /// The true password (test harness only).
    Correct,
    /// A fixed index.
    Fixed(u64),
    /// Uniform over the wrong indices, fresh per trial.
    UniformWrong,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Positions {
    All,
    /// The first position where the codewords of passwords 1 and 2 differ.
    FirstDifference,
    List(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasesRule {
    Fixed(Basis),
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Honest,
    GuessUser(Guess),
    GuessServer(Guess),
    InterceptResend { positions: Positions, bases: BasesRule },
    /// Drops the first frame of this type.
    BlockAbort(FrameType),
    /// Replays the user's side of an earlier honest session.
    Replay,
    /// Flips one bit of one field of the first frame of this type.
    BitFlip { frame: FrameType, field: usize, bit: usize },
}

impl Strategy {
    /// Parses the command-line form:
    /// `honest`, `guess-user[:right|wrong|W]`, `guess-server[:right|wrong|W]`,
    /// `intercept-resend[:all|first-diff|P,P..][:plus|cross|random]`,
    /// `block:FRAME`, `replay`, `bitflip:FRAME[:FIELD[:BIT]]`.
    pub fn parse(s: &str) -> Result<Self, AdversaryError> {
        let err = || AdversaryError::Parse(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let guess = |p: Option<&&str>| -> Result<Guess, AdversaryError> {
            Ok(match p.copied() {
                None | Some("wrong") => Guess::UniformWrong,
                Some("right") => Guess::Correct,
                Some(v) => Guess::Fixed(v.parse().map_err(|_| err())?),
            })
        };
        let frame = |p: Option<&&str>| -> Result<FrameType, AdversaryError> {
            let name = p.ok_or_else(err)?.to_ascii_uppercase();
            (1..=10)
                .filter_map(FrameType::from_u8)
                .find(|f| f.name() == name)
                .ok_or_else(err)
        };
        let num = |p: Option<&&str>| -> Result<usize, AdversaryError> {
            p.map_or(Ok(0), |v| v.parse().map_err(|_| err()))
        };
        Ok(match parts[0] {
            "honest" if parts.len() == 1 => Strategy::Honest,
            "guess-user" if parts.len() <= 2 => Strategy::GuessUser(guess(parts.get(1))?),
            "guess-server" if parts.len() <= 2 => Strategy::GuessServer(guess(parts.get(1))?),
            "intercept-resend" if parts.len() <= 3 => {
                let positions = match parts.get(1).copied() {
                    None | Some("all") => Positions::All,
                    Some("first-diff") => Positions::FirstDifference,
                    Some(list) => Positions::List(
                        list.split(',').map(|p| p.parse().map_err(|_| err())).collect::<Result<_, _>>()?,
                    ),
                };
                let bases = match parts.get(2).copied() {
                    None | Some("random") => BasesRule::Random,
                    Some("plus") => BasesRule::Fixed(Basis::Rectilinear),
                    Some("cross") => BasesRule::Fixed(Basis::Diagonal),
                    _ => return Err(err()),
                };
                Strategy::InterceptResend { positions, bases }
            }
            "block" if parts.len() == 2 => Strategy::BlockAbort(frame(parts.get(1))?),
            "replay" if parts.len() == 1 => Strategy::Replay,
            "bitflip" if (2..=4).contains(&parts.len()) => {
                Strategy::BitFlip { frame: frame(parts.get(1))?, field: num(parts.get(2))?, bit: num(parts.get(3))? }
            }
            _ => return Err(err()),
        })
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let guess = |g: &Guess| match g {
            Guess::Correct => "right".to_string(),
            Guess::Fixed(w) => w.to_string(),
            Guess::UniformWrong => "wrong".to_string(),
        };
        match self {
            Strategy::Honest => write!(f, "honest"),
            Strategy::GuessUser(g) => write!(f, "guess-user:{}", guess(g)),
            Strategy::GuessServer(g) => write!(f, "guess-server:{}", guess(g)),
            Strategy::InterceptResend { positions, bases } => {
                let p = match positions {
                    Positions::All => "all".to_string(),
                    Positions::FirstDifference => "first-diff".to_string(),
                    Positions::List(v) => v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","),
                };
                let b = match bases {
                    BasesRule::Fixed(Basis::Rectilinear) => "plus",
                    BasesRule::Fixed(Basis::Diagonal) => "cross",
                    BasesRule::Random => "random",
                };
                write!(f, "intercept-resend:{p}:{b}")
            }
            Strategy::BlockAbort(t) => write!(f, "block:{}", t.name()),
            Strategy::Replay => write!(f, "replay"),
            Strategy::BitFlip { frame, field, bit } => write!(f, "bitflip:{}:{field}:{bit}", frame.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackSpec {
    pub strategy: Strategy,
    pub trials: usize,
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(strategy: Strategy, trials: usize, seed: u64) -> Self {
        Self { strategy, trials, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorRow {
    pub w: u64,
    pub trials: usize,
    pub accepts: usize,
    /// `P(w | accept)` and `P(w | reject)` as observed.
    pub given_accept: f64,
    pub given_reject: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub attack: String,
    pub mode: Mode,
    pub seed: u64,
    pub trials: usize,
    pub accepts: usize,
    /// Trials the honest side noticed: rejections and aborts.
    pub detections: usize,
    pub acceptance: f64,
    /// Clopper-Pearson 99% interval of the acceptance rate.
    pub ci99: (f64, f64),
    pub reasons: BTreeMap<String, usize>,
    pub posterior: Vec<PosteriorRow>,
    pub posterior_deviation: Option<f64>,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    fn new(experiment: &str, attack: &Strategy, mode: Mode, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            attack: attack.to_string(),
            mode,
            seed,
            trials: 0,
            accepts: 0,
            detections: 0,
            acceptance: 0.0,
            ci99: (0.0, 1.0),
            reasons: BTreeMap::new(),
            posterior: Vec::new(),
            posterior_deviation: None,
            bound: None,
            within_bound: None,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn set_counts(&mut self, trials: usize, accepts: usize, detections: usize) {
        self.trials = trials;
        self.accepts = accepts;
        self.detections = detections;
        self.acceptance = if trials == 0 { 0.0 } else { accepts as f64 / trials as f64 };
        self.ci99 = stats::clopper_pearson(accepts, trials, stats::CONFIDENCE);
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

/// Runs `f` on every trial index across the available cores; results come
/// back in index order, so the outcome does not depend on scheduling.
pub(crate) fn par_trials<T: Send>(trials: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(trials).max(1);
    let mut slots: Vec<Option<T>> = (0..trials).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let f = &f;
                s.spawn(move || (t..trials).step_by(threads).map(|i| (i, f(i))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (i, v) in h.join().expect("trial panicked") {
                slots[i] = Some(v);
            }
        }
    });
    slots.into_iter().map(|v| v.expect("every index ran")).collect()
}
