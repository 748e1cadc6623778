//! Bit strings and basis strings.
//!
//! Every bit string in the crate is read MSB-first: index 0 is the first
//! (most significant) bit. Packing to bytes follows the same order and pads
//! the last byte with zeros.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// An owned string of bits, index 0 first.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Parses a string of `0`/`1` characters; other characters are rejected.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }

    /// The `len` low-order bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        Self((0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1).collect())
    }

    /// Interprets the bits as an unsigned integer, first bit most significant.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len() <= 64, "bit string too long for u64");
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        Self((0..len).map(|_| rng.random::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend_from(&mut self, other: &Bits) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Positionwise XOR. Panics on length mismatch.
    pub fn xor(&self, other: &Bits) -> Bits {
        assert_eq!(self.len(), other.len(), "xor of unequal-length bit strings");
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    pub fn hamming(&self, other: &Bits) -> usize {
        assert_eq!(self.len(), other.len(), "distance of unequal-length bit strings");
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// The substring at the given positions, in the order given.
    pub fn restrict(&self, positions: &[usize]) -> Bits {
        Bits(positions.iter().map(|&i| self.0[i]).collect())
    }

    /// First `len` bits.
    pub fn prefix(&self, len: usize) -> Bits {
        Bits(self.0[..len].to_vec())
    }

    pub fn slice(&self, start: usize, end: usize) -> Bits {
        Bits(self.0[start..end].to_vec())
    }

    /// Right-pads with zeros up to `len`; a no-op when already that long.
    pub fn padded(&self, len: usize) -> Bits {
        let mut v = self.0.clone();
        if v.len() < len {
            v.resize(len, false);
        }
        Bits(v)
    }

    pub fn concat(parts: &[&Bits]) -> Bits {
        Bits(parts.iter().flat_map(|p| p.0.iter().copied()).collect())
    }

    /// Packs MSB-first into `ceil(len / 8)` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len().div_ceil(8)];
        for (i, &b) in self.0.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    /// Reads `len` bits MSB-first from `bytes`. Returns `None` if too short.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Bits> {
        if bytes.len() * 8 < len {
            return None;
        }
        Some(Bits(
            (0..len).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect(),
        ))
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Bits `[i*64, i*64+64)` of the string packed as little-endian 64-bit
    /// limbs where bit 0 of limb 0 is the *last* bit of the string. This is the
    /// polynomial view used by the field engine: string index `k` is the
    /// coefficient of `x^(len-1-k)`.
    pub(crate) fn to_limbs(&self, width: usize) -> Vec<u64> {
        debug_assert!(self.len() <= width);
        let mut limbs = vec![0u64; width.div_ceil(64).max(1)];
        for (k, &b) in self.0.iter().enumerate() {
            if b {
                let deg = width - 1 - k;
                limbs[deg / 64] |= 1u64 << (deg % 64);
            }
        }
        limbs
    }

    pub(crate) fn from_limbs(limbs: &[u64], width: usize) -> Bits {
        Bits(
            (0..width)
                .map(|k| {
                    let deg = width - 1 - k;
                    limbs[deg / 64] >> (deg % 64) & 1 == 1
                })
                .collect(),
        )
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }
}

/// One of the two conjugate BB84 bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Computational basis `{|0>, |1>}`.
    Rectilinear,
    /// Diagonal basis `{|0>_x, |1>_x}`.
    Diagonal,
}

impl Basis {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }

    pub fn bit(self) -> bool {
        self == Basis::Diagonal
    }

    pub fn other(self) -> Self {
        match self {
            Basis::Rectilinear => Basis::Diagonal,
            Basis::Diagonal => Basis::Rectilinear,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Basis::Rectilinear => '+',
            Basis::Diagonal => 'x',
        }
    }
}

/// A string over `{+, x}`; `+` is stored as 0 and `x` as 1.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Bases(Bits);

impl Bases {
    pub fn from_bits(bits: Bits) -> Self {
        Self(bits)
    }

    pub fn uniform(basis: Basis, len: usize) -> Self {
        Self(if basis.bit() { Bits::ones(len) } else { Bits::zeros(len) })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        Self(Bits::random(rng, len))
    }

    /// Parses `+`/`x` (also `×`) symbols.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Some(false),
                'x' | 'X' | '×' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(|v| Self(Bits::from_bools(v)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Basis {
        Basis::from_bit(self.0.get(i))
    }

    pub fn set(&mut self, i: usize, basis: Basis) {
        self.0.set(i, basis.bit());
    }

    pub fn iter(&self) -> impl Iterator<Item = Basis> + '_ {
        self.0.iter().map(Basis::from_bit)
    }

    pub fn as_bits(&self) -> &Bits {
        &self.0
    }

    pub fn complement(&self) -> Bases {
        Bases(self.0.iter().map(|b| !b).collect())
    }

    /// Positions where the two basis strings agree, ascending.
    pub fn agreement(&self, other: &Bases) -> Vec<usize> {
        assert_eq!(self.len(), other.len(), "basis strings of unequal length");
        (0..self.len()).filter(|&i| self.0.get(i) == other.0.get(i)).collect()
    }

    pub fn hamming(&self, other: &Bases) -> usize {
        self.0.hamming(&other.0)
    }
}

impl fmt::Debug for Bases {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bases({self})")
    }
}

impl fmt::Display for Bases {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            write!(f, "{}", b.symbol())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_packing_is_msb_first() {
        let b = Bits::parse("1000000001").unwrap();
        assert_eq!(b.to_bytes(), vec![0x80, 0x40]);
        assert_eq!(Bits::from_bytes(&[0x80, 0x40], 10).unwrap(), b);
        assert!(Bits::from_bytes(&[0x80], 10).is_none());
    }

    #[test]
    fn u64_round_trip() {
        let b = Bits::from_u64(0b101, 5);
        assert_eq!(b.to_string(), "00101");
        assert_eq!(b.to_u64(), 5);
    }

    #[test]
    fn limbs_put_first_bit_highest() {
        let b = Bits::parse("100").unwrap();
        assert_eq!(b.to_limbs(3), vec![0b100]);
        assert_eq!(Bits::from_limbs(&[0b011], 3).to_string(), "011");
        // shorter strings are read as if right-padded
        assert_eq!(Bits::parse("1").unwrap().to_limbs(3), vec![0b100]);
    }

    #[test]
    fn agreement_positions() {
        let theta = Bases::parse("+x+x").unwrap();
        let code = Bases::parse("++xx").unwrap();
        assert_eq!(theta.agreement(&code), vec![0, 3]);
        assert_eq!(theta.agreement(&theta), vec![0, 1, 2, 3]);
    }
}
