//! Indexed families of syndrome functions `{syn_j}`.
//!
//! Words shorter than the family length `n'` are zero-padded; for longer
//! words the syndrome covers the first `n'` bits and the rest travels
//! verbatim.

use std::sync::Arc;

use rand::seq::SliceRandom;

use super::bch::Bch;
use super::linear::{LinearCode, TABLE_MAX_N};
use crate::bits::Bits;
use crate::rng;

#[derive(Clone, Debug)]
enum Kind {
    Trivial,
    /// Seeded random `[n', k']` codes, one per index.
    Random { k: usize },
    /// One shortened BCH code under a seeded coordinate permutation per index.
    Bch(Arc<Bch>),
    /// The base code is too small to carry data; syndromes disclose the word.
    Identity,
    /// A single code regardless of index.
    Fixed(LinearCode),
}

#[derive(Clone, Debug)]
pub struct SyndromeFamily {
    n: usize,
    seed: u64,
    kind: Kind,
}

/// A syndrome of the first `n'` bits plus any verbatim tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Syndrome {
    pub bits: Bits,
    pub tail: Bits,
}

impl Syndrome {
    /// Flat form used on the wire and under the MAC: a 32-bit tail length,
    /// then the syndrome bits, then the tail.
    pub fn to_bits(&self) -> Bits {
        let mut out = Bits::from_u64(self.tail.len() as u64, 32);
        out.extend_from(&self.bits);
        out.extend_from(&self.tail);
        out
    }

    pub fn from_bits(bits: &Bits, syndrome_len: usize) -> Option<Self> {
        if bits.len() < 32 {
            return None;
        }
        let tail_len = bits.prefix(32).to_u64() as usize;
        if bits.len() != 32 + syndrome_len + tail_len {
            return None;
        }
        Some(Self {
            bits: bits.slice(32, 32 + syndrome_len),
            tail: bits.slice(32 + syndrome_len, bits.len()),
        })
    }
}

impl SyndromeFamily {
    /// Family for length `n'` tolerating an error fraction `delta`:
    /// `delta = 0` gives the empty syndrome; `n' <= 20` gives random
    /// `[n', ceil(n'/2)]` codes decoded by table; longer lengths use BCH codes
    /// correcting `ceil(delta * n')` errors.
    pub fn for_params(n: usize, delta: f64, seed: u64) -> Self {
        let kind = if delta <= 0.0 || n == 0 {
            Kind::Trivial
        } else if n <= TABLE_MAX_N {
            Kind::Random { k: n.div_ceil(2) }
        } else {
            let t = ((delta * n as f64).ceil() as usize).max(1);
            match Bch::new(n, t) {
                Some(b) => Kind::Bch(Arc::new(b)),
                None => Kind::Identity,
            }
        };
        Self { n, seed, kind }
    }

    pub fn random_linear(n: usize, k: usize, seed: u64) -> Self {
        assert!(n <= TABLE_MAX_N && k <= n);
        Self { n, seed, kind: Kind::Random { k } }
    }

    pub fn bch(n: usize, t: usize, seed: u64) -> Option<Self> {
        Bch::new(n, t).map(|b| Self { n, seed, kind: Kind::Bch(Arc::new(b)) })
    }

    pub fn fixed(code: LinearCode) -> Self {
        Self { n: code.n(), seed: 0, kind: Kind::Fixed(code) }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.kind, Kind::Trivial)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Syndrome length (`n' - k'`), identical for every index.
    pub fn syndrome_len(&self) -> usize {
        match &self.kind {
            Kind::Trivial => 0,
            Kind::Random { k } => self.n - k,
            Kind::Bch(b) => b.redundancy(),
            Kind::Identity => self.n,
            Kind::Fixed(c) => c.redundancy(),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Trivial => format!("trivial n'={}", self.n),
            Kind::Random { k } => format!("random-linear [{}, {}] seed={}", self.n, k, self.seed),
            Kind::Bch(b) => format!("bch n'={} t={} r={} seed={}", self.n, b.radius(), b.redundancy(), self.seed),
            Kind::Identity => format!("identity n'={}", self.n),
            Kind::Fixed(c) => format!("fixed [{}, {}, {}]", c.n(), c.k(), c.distance()),
        }
    }

    /// The code `C_j`. Deterministic in `(seed, j)`.
    pub fn code(&self, j: u64) -> LinearCode {
        match &self.kind {
            Kind::Trivial => LinearCode::trivial(self.n),
            Kind::Identity => LinearCode::identity(self.n),
            Kind::Fixed(c) => c.clone(),
            Kind::Random { k } => {
                let mut r = rng::stream(self.seed, "syndrome-family", j);
                LinearCode::random(self.n, *k, &mut r).expect("parameters checked")
            }
            Kind::Bch(b) => {
                let mut r = rng::stream(self.seed, "syndrome-family", j);
                let mut perm: Vec<usize> = (0..self.n).collect();
                perm.shuffle(&mut r);
                LinearCode::from_bch(b.clone(), Arc::new(perm))
            }
        }
    }
}

/// The trivial family corrects nothing, so it sends nothing: no syndrome
/// bits and no tail, whatever the length of `y`.
pub fn syndrome(family: &SyndromeFamily, j: u64, y: &Bits) -> Syndrome {
    if family.is_trivial() {
        return Syndrome { bits: Bits::new(), tail: Bits::new() };
    }
    syndrome_with(&family.code(j), y)
}

pub(crate) fn syndrome_with(code: &LinearCode, y: &Bits) -> Syndrome {
    let n = code.n();
    if y.len() <= n {
        Syndrome { bits: code.syndrome(&y.padded(n)).expect("padded"), tail: Bits::new() }
    } else {
        Syndrome {
            bits: code.syndrome(&y.prefix(n)).expect("prefix"),
            tail: y.slice(n, y.len()),
        }
    }
}

/// Recovers `y` from a noisy copy and its syndrome. Returns `None` when the
/// decoder fails or the result contradicts the padding/tail conventions.
pub fn decode_with_syndrome(family: &SyndromeFamily, j: u64, y_noisy: &Bits, s: &Syndrome) -> Option<Bits> {
    if family.is_trivial() {
        return (s.bits.is_empty() && s.tail.is_empty()).then(|| y_noisy.clone());
    }
    decode_with(&family.code(j), y_noisy, s)
}

pub(crate) fn decode_with(code: &LinearCode, y_noisy: &Bits, s: &Syndrome) -> Option<Bits> {
    let n = code.n();
    let len = y_noisy.len();
    if len <= n {
        if !s.tail.is_empty() {
            return None;
        }
        let word = code.decode(&y_noisy.padded(n), &s.bits)?;
        if word.iter().skip(len).any(|b| b) {
            return None;
        }
        Some(word.prefix(len))
    } else {
        if s.tail.len() != len - n {
            return None;
        }
        let mut word = code.decode(&y_noisy.prefix(n), &s.bits)?;
        word.extend_from(&s.tail);
        Some(word)
    }
}
