//! Prepare-and-measure channel simulator.
//!
//! Every state prepared and every measurement made by the honest roles and by
//! the implemented attacks is a BB84 product state measured in one of the two
//! bases, so a qubit is represented by a classical record. The hidden fields
//! are private to this module: the only ways to learn about them are
//! [`Detector::measure`], [`Tap::intercept_resend`] and
//! [`Tap::leak_multipulse`].
//!
//! Channel noise is drawn when a qubit is first measured in its own basis,
//! which keeps intercept-then-resend compositions in physical order.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bits::{Bases, Basis, Bits};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("bit and basis strings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("probability {0} outside [0, 1)")]
    Probability(f64),
    #[error("batch already transmitted")]
    AlreadyTransmitted,
    #[error("batch has not been delivered")]
    NotDelivered,
    #[error("batch already measured")]
    AlreadyMeasured,
    #[error("batch is no longer in flight")]
    NotInFlight,
    #[error("position {0} outside the batch")]
    Position(usize),
    #[error("tap operations are reserved to the adversary role")]
    HonestTap,
    #[error("malformed qubit payload")]
    Payload,
}

/// Physical parameters of the channel and the seed of its randomness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelConfig {
    pub phi: f64,
    pub eta: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(phi: f64, eta: f64, seed: u64) -> Result<Self, ChannelError> {
        for p in [phi, eta] {
            if !(0.0..1.0).contains(&p) {
                return Err(ChannelError::Probability(p));
            }
        }
        Ok(Self { phi, eta, seed })
    }

    pub fn noiseless(seed: u64) -> Self {
        Self { phi: 0.0, eta: 0.0, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimQubit {
    bit: bool,
    basis: Basis,
    multipulse: bool,
    noise_spent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchState {
    InFlight,
    Delivered,
    Consumed,
}

/// The qubits of one protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitBatch {
    qubits: Vec<SimQubit>,
    state: BatchState,
}

impl QubitBatch {
    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn state(&self) -> BatchState {
        self.state
    }

    /// Wire form: three bits per qubit (value, basis, multipulse flag),
    /// packed MSB-first. This carries the hidden simulation state in clear
    /// and is only meant for the simulator's own transport.
    pub fn to_wire(&self) -> Vec<u8> {
        let bits: Bits = self
            .qubits
            .iter()
            .flat_map(|q| [q.bit, q.basis.bit(), q.multipulse])
            .collect();
        bits.to_bytes()
    }

    /// Inverse of [`to_wire`](Self::to_wire) for a batch of `n` qubits. The
    /// padding bits of the last byte must be zero.
    pub fn from_wire(bytes: &[u8], n: usize) -> Result<Self, ChannelError> {
        if bytes.len() != (3 * n).div_ceil(8) {
            return Err(ChannelError::Payload);
        }
        let bits = Bits::from_bytes(bytes, 3 * n).ok_or(ChannelError::Payload)?;
        if bits.to_bytes() != bytes {
            return Err(ChannelError::Payload);
        }
        let qubits = (0..n)
            .map(|i| SimQubit {
                bit: bits.get(3 * i),
                basis: Basis::from_bit(bits.get(3 * i + 1)),
                multipulse: bits.get(3 * i + 2),
                noise_spent: false,
            })
            .collect();
        Ok(Self { qubits, state: BatchState::InFlight })
    }
}

/// One channel event, for the transcript.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ChannelEvent {
    Prepared { n: usize, multipulse: usize, x: Option<String>, theta: Option<String> },
    Transmitted { n: usize },
    Measured { n: usize, bases: String },
    Intercepted { positions: Vec<usize>, bases: String, observed: Option<String> },
    Leaked { positions: Vec<usize>, values: Option<Vec<(usize, bool, char)>> },
}

impl ChannelEvent {
    /// JSON text with hidden values removed unless `reveal` is set.
    pub fn to_json(&self, reveal: bool) -> String {
        let mut e = self.clone();
        if !reveal {
            match &mut e {
                ChannelEvent::Prepared { x, theta, .. } => {
                    *x = None;
                    *theta = None;
                }
                ChannelEvent::Intercepted { observed, .. } => *observed = None,
                ChannelEvent::Leaked { values, .. } => *values = None,
                _ => {}
            }
        }
        serde_json::to_string(&e).expect("event serializes")
    }
}

fn bits_string(b: &Bits) -> String {
    b.to_string()
}

/// Sender side: prepares batches and marks multi-photon pulses.
#[derive(Debug)]
pub struct Source {
    eta: f64,
    rng: StreamRng,
    events: Vec<ChannelEvent>,
}

impl Source {
    pub fn new(cfg: &ChannelConfig) -> Self {
        Self { eta: cfg.eta, rng: rng::stream(cfg.seed, "channel-source", 0), events: Vec::new() }
    }

    pub fn prepare(&mut self, x: &Bits, theta: &Bases) -> Result<QubitBatch, ChannelError> {
        if x.len() != theta.len() {
            return Err(ChannelError::LengthMismatch(x.len(), theta.len()));
        }
        let qubits: Vec<SimQubit> = x
            .iter()
            .zip(theta.iter())
            .map(|(bit, basis)| SimQubit {
                bit,
                basis,
                multipulse: self.eta > 0.0 && self.rng.random::<f64>() < self.eta,
                noise_spent: false,
            })
            .collect();
        self.events.push(ChannelEvent::Prepared {
            n: qubits.len(),
            multipulse: qubits.iter().filter(|q| q.multipulse).count(),
            x: Some(bits_string(x)),
            theta: Some(theta.to_string()),
        });
        Ok(QubitBatch { qubits, state: BatchState::InFlight })
    }

    pub fn drain_events(&mut self) -> Vec<ChannelEvent> {
        std::mem::take(&mut self.events)
    }
}

/// Receiver side: delivery, noise and measurement.
#[derive(Debug)]
pub struct Detector {
    phi: f64,
    noise: StreamRng,
    outcomes: StreamRng,
    events: Vec<ChannelEvent>,
}

impl Detector {
    pub fn new(cfg: &ChannelConfig) -> Self {
        Self {
            phi: cfg.phi,
            noise: rng::stream(cfg.seed, "channel-noise", 0),
            outcomes: rng::stream(cfg.seed, "channel-outcome", 0),
            events: Vec::new(),
        }
    }

    /// Hands an in-flight batch to the receiver.
    pub fn transmit(&mut self, batch: &mut QubitBatch) -> Result<(), ChannelError> {
        if batch.state != BatchState::InFlight {
            return Err(ChannelError::AlreadyTransmitted);
        }
        batch.state = BatchState::Delivered;
        self.events.push(ChannelEvent::Transmitted { n: batch.len() });
        Ok(())
    }

    /// Measures every qubit; a matching basis yields the stored bit (flipped
    /// with probability `phi` if noise has not been drawn yet), a mismatched
    /// one a fresh uniform bit.
    pub fn measure(&mut self, batch: &mut QubitBatch, bases: &Bases) -> Result<Bits, ChannelError> {
        match batch.state {
            BatchState::InFlight => return Err(ChannelError::NotDelivered),
            BatchState::Consumed => return Err(ChannelError::AlreadyMeasured),
            BatchState::Delivered => {}
        }
        if bases.len() != batch.len() {
            return Err(ChannelError::LengthMismatch(batch.len(), bases.len()));
        }
        let out = batch
            .qubits
            .iter_mut()
            .zip(bases.iter())
            .map(|(q, b)| measure_one(q, b, self.phi, &mut self.noise, &mut self.outcomes))
            .collect();
        batch.state = BatchState::Consumed;
        self.events.push(ChannelEvent::Measured { n: batch.len(), bases: bases.to_string() });
        Ok(out)
    }

    pub fn drain_events(&mut self) -> Vec<ChannelEvent> {
        std::mem::take(&mut self.events)
    }
}

fn measure_one(q: &mut SimQubit, basis: Basis, phi: f64, noise: &mut StreamRng, outcomes: &mut StreamRng) -> bool {
    if basis == q.basis {
        if !q.noise_spent {
            q.noise_spent = true;
            if phi > 0.0 && noise.random::<f64>() < phi {
                q.bit = !q.bit;
            }
        }
        q.bit
    } else {
        outcomes.random::<bool>()
    }
}

/// Which party a component acts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Server,
    Adversary,
}

/// Adversary access to batches in flight.
#[derive(Debug)]
pub struct Tap {
    phi: f64,
    noise: StreamRng,
    outcomes: StreamRng,
    events: Vec<ChannelEvent>,
}

impl Tap {
    pub fn new(cfg: &ChannelConfig, role: Role) -> Result<Self, ChannelError> {
        if role != Role::Adversary {
            return Err(ChannelError::HonestTap);
        }
        Ok(Self {
            phi: cfg.phi,
            noise: rng::stream(cfg.seed, "tap-noise", 0),
            outcomes: rng::stream(cfg.seed, "tap-outcome", 0),
            events: Vec::new(),
        })
    }

    /// Measures the listed positions in the given bases and re-prepares each
    /// in the attacker's basis with the observed value.
    pub fn intercept_resend(
        &mut self,
        batch: &mut QubitBatch,
        plan: &[(usize, Basis)],
    ) -> Result<Vec<bool>, ChannelError> {
        if batch.state != BatchState::InFlight {
            return Err(ChannelError::NotInFlight);
        }
        if let Some(&(p, _)) = plan.iter().find(|(p, _)| *p >= batch.len()) {
            return Err(ChannelError::Position(p));
        }
        if plan.is_empty() {
            return Ok(Vec::new());
        }
        let mut observed = Vec::with_capacity(plan.len());
        for &(p, basis) in plan {
            let q = &mut batch.qubits[p];
            let v = measure_one(q, basis, self.phi, &mut self.noise, &mut self.outcomes);
            q.bit = v;
            q.basis = basis;
            observed.push(v);
        }
        self.events.push(ChannelEvent::Intercepted {
            positions: plan.iter().map(|&(p, _)| p).collect(),
            bases: plan.iter().map(|&(_, b)| b.symbol()).collect(),
            observed: Some(observed.iter().map(|&b| if b { '1' } else { '0' }).collect()),
        });
        Ok(observed)
    }

    /// Intercepts every position.
    pub fn intercept_all(&mut self, batch: &mut QubitBatch, bases: &Bases) -> Result<Bits, ChannelError> {
        if bases.len() != batch.len() {
            return Err(ChannelError::LengthMismatch(batch.len(), bases.len()));
        }
        let plan: Vec<(usize, Basis)> = bases.iter().enumerate().collect();
        Ok(Bits::from_bools(self.intercept_resend(batch, &plan)?))
    }

    /// The `(i, x_i, theta_i)` of every multi-photon position.
    pub fn leak_multipulse(&mut self, batch: &QubitBatch) -> Result<Vec<(usize, bool, Basis)>, ChannelError> {
        if batch.state == BatchState::Consumed {
            return Err(ChannelError::NotInFlight);
        }
        let leaked: Vec<(usize, bool, Basis)> = batch
            .qubits
            .iter()
            .enumerate()
            .filter(|(_, q)| q.multipulse)
            .map(|(i, q)| (i, q.bit, q.basis))
            .collect();
        self.events.push(ChannelEvent::Leaked {
            positions: leaked.iter().map(|l| l.0).collect(),
            values: Some(leaked.iter().map(|&(i, b, t)| (i, b, t.symbol())).collect()),
        });
        Ok(leaked)
    }

    pub fn drain_events(&mut self) -> Vec<ChannelEvent> {
        std::mem::take(&mut self.events)
    }
}
