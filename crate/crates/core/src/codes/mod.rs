//! The basis code mapping passwords to basis strings, and the syndrome code
//! family used for error reconciliation.

mod bch;
mod family;
mod linear;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::analysis::h_inverse;
use crate::bits::{Bases, Bits};
use crate::rng;

pub use family::{decode_with_syndrome, syndrome, Syndrome, SyndromeFamily};
pub use linear::{hamming_7_4, LinearCode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("need at least two codewords, got {0}")]
    TooFewWords(u64),
    #[error("n = {n} is too short for m = {m} codewords")]
    TooShort { n: usize, m: u64 },
    #[error("target distance {target} exceeds length {n}")]
    TargetTooLarge { target: usize, n: usize },
    #[error("search budget exhausted after {attempts} draws; best distance reached {best}")]
    SearchExhausted { attempts: u64, best: usize },
    #[error("password index {w} outside 1..={m}")]
    IndexOutOfRange { w: u64, m: u64 },
    #[error("codewords must be distinct and of equal length")]
    InvalidCodewords,
    #[error("parity-check matrix is malformed: {0}")]
    ParityCheck(String),
    #[error("code description could not be parsed: {0}")]
    Parse(String),
    #[error("bit string of length {got} where {want} was expected")]
    Length { got: usize, want: usize },
}

/// An encoding of `m` passwords as basis strings of length `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisCode {
    n: usize,
    codewords: Vec<Bases>,
    d: usize,
}

impl BasisCode {
    /// Builds a code from explicit codewords; the minimum distance is computed
    /// exhaustively.
    pub fn from_codewords(codewords: Vec<Bases>) -> Result<Self, CodeError> {
        if codewords.len() < 2 {
            return Err(CodeError::TooFewWords(codewords.len() as u64));
        }
        let n = codewords[0].len();
        if codewords.iter().any(|c| c.len() != n) {
            return Err(CodeError::InvalidCodewords);
        }
        let d = min_distance(&codewords);
        if d == 0 {
            return Err(CodeError::InvalidCodewords);
        }
        Ok(Self { n, codewords, d })
    }

    pub fn m(&self) -> u64 {
        self.codewords.len() as u64
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn codewords(&self) -> &[Bases] {
        &self.codewords
    }

    /// Recomputes the minimum distance from scratch.
    pub fn verify_distance(&self) -> usize {
        min_distance(&self.codewords)
    }

    /// Text form: header `basis-code n m d` then one codeword per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("basis-code {} {} {}\n", self.n, self.m(), self.d);
        for c in &self.codewords {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses [`to_text`](Self::to_text) output; the distance is recomputed
    /// and must match the header.
    pub fn from_text(text: &str) -> Result<Self, CodeError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| CodeError::Parse("empty input".into()))?
            .split_whitespace()
            .collect();
        if header.len() != 4 || header[0] != "basis-code" {
            return Err(CodeError::Parse("bad header".into()));
        }
        let nums: Vec<usize> = header[1..]
            .iter()
            .map(|t| t.parse().map_err(|_| CodeError::Parse(format!("bad number {t}"))))
            .collect::<Result<_, _>>()?;
        let words = lines
            .map(|l| Bases::parse(l.trim()).ok_or_else(|| CodeError::Parse(format!("bad codeword {l}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let code = Self::from_codewords(words)?;
        if code.n != nums[0] || code.m() as usize != nums[1] || code.d != nums[2] {
            return Err(CodeError::Parse("header disagrees with codewords".into()));
        }
        Ok(code)
    }
}

fn min_distance(words: &[Bases]) -> usize {
    let mut d = usize::MAX;
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            d = d.min(a.hamming(b));
        }
    }
    d
}

/// Largest distance justified by the Gilbert-Varshamov rate,
/// `floor(n * h^-1(1 - log2(m) / n))`.
pub fn gv_feasible(n: usize, m: u64) -> Result<usize, CodeError> {
    if m < 2 {
        return Err(CodeError::TooFewWords(m));
    }
    let log_m = (m as f64).log2();
    if log_m > n as f64 {
        return Err(CodeError::TooShort { n, m });
    }
    let mu = h_inverse((1.0 - log_m / n as f64).max(0.0)).expect("target in range");
    Ok((n as f64 * mu).floor() as usize)
}

/// Seeded greedy search: the first codeword is all-`+`, every later draw is
/// kept when it is at distance at least `target_d` from all kept words.
/// Lengths up to 20 draw from a seeded permutation of all `2^n` strings, so
/// the search is exhaustive; longer codes draw uniformly.
pub fn build_basis_code(m: u64, n: usize, target_d: usize, seed: u64) -> Result<BasisCode, CodeError> {
    if m < 2 {
        return Err(CodeError::TooFewWords(m));
    }
    if n < 64 && m > 1u64 << n {
        return Err(CodeError::TooShort { n, m });
    }
    if target_d > n {
        return Err(CodeError::TargetTooLarge { target: target_d, n });
    }
    let target = target_d.max(1);
    let mut rng = rng::stream(seed, "basis-code", m ^ ((n as u64) << 32));
    let mut words: Vec<Bits> = vec![Bits::zeros(n)];
    let mut best = 0usize;
    let mut attempts = 0u64;

    let accept = |cand: Bits, words: &mut Vec<Bits>, best: &mut usize| {
        let dist = words.iter().map(|w| w.hamming(&cand)).min().unwrap();
        if dist >= target {
            words.push(cand);
        } else {
            *best = (*best).max(dist);
        }
    };

    if n <= 20 {
        let mut order: Vec<u64> = (1..1u64 << n).collect();
        order.shuffle(&mut rng);
        for v in order {
            if words.len() as u64 == m {
                break;
            }
            attempts += 1;
            accept(Bits::from_u64(v, n), &mut words, &mut best);
        }
    } else {
        let budget = m.saturating_mul(1000).saturating_add(100_000);
        while (words.len() as u64) < m && attempts < budget {
            attempts += 1;
            let cand = Bits::from_bools((0..n).map(|_| rng.random::<bool>()).collect());
            accept(cand, &mut words, &mut best);
        }
    }
    if (words.len() as u64) < m {
        return Err(CodeError::SearchExhausted { attempts, best });
    }
    BasisCode::from_codewords(words.into_iter().map(Bases::from_bits).collect())
}

/// Codeword of password `w` (1-based).
pub fn encode_basis(code: &BasisCode, w: u64) -> Result<&Bases, CodeError> {
    if w == 0 || w > code.m() {
        return Err(CodeError::IndexOutOfRange { w, m: code.m() });
    }
    Ok(&code.codewords[(w - 1) as usize])
}

/// `I_w`: positions (0-based, ascending) where `theta` agrees with `c(w)`.
pub fn agreement_set(code: &BasisCode, theta: &Bases, w: u64) -> Result<Vec<usize>, CodeError> {
    let c = encode_basis(code, w)?;
    if theta.len() != code.n {
        return Err(CodeError::Length { got: theta.len(), want: code.n });
    }
    Ok(theta.agreement(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bases(s: &str) -> Bases {
        Bases::parse(s).unwrap()
    }

    #[test]
    fn repetition_code_for_two_words() {
        let c = build_basis_code(2, 4, 4, 1).unwrap();
        assert_eq!(c.codewords()[0].to_string(), "++++");
        assert_eq!(c.codewords()[1].to_string(), "xxxx");
        assert_eq!(c.d(), 4);
    }

    #[test]
    fn explicit_candidates_distance() {
        let words = ["00000000", "11111111", "01010101", "10101010"]
            .iter()
            .map(|s| Bases::from_bits(Bits::parse(s).unwrap()))
            .collect();
        let c = BasisCode::from_codewords(words).unwrap();
        assert_eq!(c.d(), 4);
        assert_eq!(c.verify_distance(), 4);
    }

    #[test]
    fn target_beyond_length_is_error() {
        assert_eq!(
            build_basis_code(2, 4, 5, 0),
            Err(CodeError::TargetTooLarge { target: 5, n: 4 })
        );
    }

    #[test]
    fn impossible_target_reports_best() {
        // 5 words of length 4 pairwise at distance >= 3 do not exist.
        match build_basis_code(5, 4, 3, 0) {
            Err(CodeError::SearchExhausted { best, .. }) => assert_eq!(best, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn search_is_deterministic() {
        let a = build_basis_code(16, 64, 20, 9).unwrap();
        let b = build_basis_code(16, 64, 20, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.d() >= 20);
        let c = build_basis_code(16, 64, 20, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn agreement_example() {
        let code = BasisCode::from_codewords(vec![bases("++xx"), bases("x+x+")]).unwrap();
        assert_eq!(agreement_set(&code, &bases("+x+x"), 1).unwrap(), vec![0, 3]);
        assert_eq!(agreement_set(&code, &bases("x+x+"), 2).unwrap(), vec![0, 1, 2, 3]);
        assert!(encode_basis(&code, 0).is_err());
        assert!(encode_basis(&code, 3).is_err());
    }

    #[test]
    fn gv_values() {
        assert_eq!(gv_feasible(8, 256).unwrap(), 0);
        assert_eq!(gv_feasible(20, 1 << 10).unwrap(), (20.0 * h_inverse(0.5).unwrap()).floor() as usize);
        assert_eq!(gv_feasible(20, 1 << 10).unwrap(), 2);
        let mu = h_inverse(0.99).unwrap();
        assert!((crate::analysis::binary_entropy(mu) - 0.99).abs() < 1e-6);
        assert_eq!(gv_feasible(100, 2).unwrap(), (100.0 * mu).floor() as usize);
        assert!(gv_feasible(4, 17).is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = build_basis_code(8, 32, 10, 3).unwrap();
        let back = BasisCode::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        let tampered = c.to_text().replacen("basis-code 32 8", "basis-code 32 9", 1);
        assert!(BasisCode::from_text(&tampered).is_err());
    }
}
