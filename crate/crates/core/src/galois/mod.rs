//! Arithmetic in GF(2^N) over a polynomial basis, plus the hash families and
//! the extractor MAC built on it.
//!
//! Field elements are written MSB-first: the first bit of an element's bit
//! string is the coefficient of `x^(N-1)`. Truncating to the "first l bits"
//! keeps the `l` highest-degree coefficients.

mod hash;
mod poly;
mod table;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use thiserror::Error;

use crate::bits::Bits;
use poly::Reducer;

pub use hash::{
    decode_parts, embed_index, encode_parts, index_bits, mac_tag, mac_verify, uhf_f_eval,
    uhf_g_eval, MacKey, UhfF, UhfG,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaloisError {
    #[error("operands belong to different fields (degree {0} vs {1})")]
    FieldMismatch(usize, usize),
    #[error("bit string of length {got} does not fit a field of degree {degree}")]
    Width { got: usize, degree: usize },
    #[error("modulus of degree {0} is reducible")]
    Reducible(usize),
    #[error("field degree must be at least 1")]
    ZeroDegree,
    #[error("input of {got} bits exceeds the {max}-bit domain")]
    InputTooLong { got: usize, max: usize },
    #[error("index {w} outside 1..={m}")]
    IndexOutOfRange { w: u64, m: u64 },
    #[error("output length {l} exceeds field degree {degree}")]
    OutputTooLong { l: usize, degree: usize },
    #[error("malformed encoding: {0}")]
    Encoding(&'static str),
}

/// The field GF(2^N) with a fixed irreducible modulus. Cheap to clone.
#[derive(Clone)]
pub struct FieldSpec(Arc<Reducer>);

impl FieldSpec {
    /// GF(2^N) under the lexicographically smallest irreducible modulus of
    /// degree `N`.
    pub fn new(degree: usize) -> Result<Self, GaloisError> {
        if degree == 0 {
            return Err(GaloisError::ZeroDegree);
        }
        static CACHE: OnceLock<Mutex<HashMap<usize, FieldSpec>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(f) = cache.lock().unwrap().get(&degree) {
            return Ok(f.clone());
        }
        let low = match table::lookup(degree) {
            Some(low) => {
                let spec = Self::from_low(degree, low);
                let ok = if degree <= 64 {
                    poly::is_irreducible_ben_or(&spec.0)
                } else {
                    poly::is_irreducible_rabin(&spec.0)
                };
                assert!(ok, "tabulated modulus of degree {degree} failed verification");
                low
            }
            None => smallest_irreducible(degree),
        };
        let spec = Self::from_low(degree, low);
        cache.lock().unwrap().insert(degree, spec.clone());
        Ok(spec)
    }

    /// GF(2^N) with an explicit modulus given as `N + 1` bits, leading
    /// coefficient first. The modulus is checked for irreducibility.
    pub fn with_modulus(modulus: &Bits) -> Result<Self, GaloisError> {
        let len = modulus.len();
        if len < 2 || !modulus.get(0) {
            return Err(GaloisError::Width { got: len, degree: len.saturating_sub(1) });
        }
        let degree = len - 1;
        let limbs = modulus.to_limbs(len);
        let red = Reducer::new(degree, limbs);
        let ok = if degree <= 64 {
            poly::is_irreducible_ben_or(&red)
        } else {
            poly::is_irreducible_rabin(&red)
        };
        if !ok {
            return Err(GaloisError::Reducible(degree));
        }
        Ok(Self(Arc::new(red)))
    }

    fn from_low(degree: usize, low: u64) -> Self {
        let mut m = vec![0u64; degree / 64 + 1];
        poly::toggle(&mut m, degree);
        m[0] ^= low;
        Self(Arc::new(Reducer::new(degree, m)))
    }

    pub fn degree(&self) -> usize {
        self.0.degree
    }

    /// The modulus as `N + 1` bits, leading coefficient first.
    pub fn modulus(&self) -> Bits {
        Bits::from_limbs(&self.0.modulus, self.degree() + 1)
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { field: self.clone(), limbs: vec![0; self.0.limbs()] }
    }

    pub fn one(&self) -> FieldElement {
        let mut e = self.zero();
        e.limbs[0] = 1;
        e
    }

    /// Element whose bit string is `bits` right-padded with zeros to `N`.
    pub fn element(&self, bits: &Bits) -> Result<FieldElement, GaloisError> {
        if bits.len() > self.degree() {
            return Err(GaloisError::Width { got: bits.len(), degree: self.degree() });
        }
        Ok(FieldElement { field: self.clone(), limbs: bits.to_limbs(self.degree()) })
    }

    /// Element with polynomial coefficients given by the low bits of `value`
    /// (bit `k` is the coefficient of `x^k`).
    pub fn from_u64(&self, value: u64) -> FieldElement {
        let mut e = self.zero();
        e.limbs[0] = value;
        let n = self.degree();
        if n < 64 {
            e.limbs[0] &= (1u64 << n) - 1;
        }
        e
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let bits = Bits::random(rng, self.degree());
        self.element(&bits).expect("width matches")
    }

    /// All `2^N` elements in counting order. Only sensible for small `N`.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        assert!(self.degree() <= 24, "refusing to enumerate a field of degree {}", self.degree());
        (0..1u64 << self.degree()).map(|v| self.from_u64(v))
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.modulus == other.0.modulus
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{})", self.degree())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: FieldSpec,
    limbs: Vec<u64>,
}

impl FieldElement {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&w| w == 0)
    }

    /// The `N`-bit string, highest-degree coefficient first.
    pub fn to_bits(&self) -> Bits {
        Bits::from_limbs(&self.limbs, self.field.degree())
    }

    /// Low 64 coefficients as an integer (bit `k` = coefficient of `x^k`).
    pub fn low_u64(&self) -> u64 {
        self.limbs[0]
    }

    /// The first `l` bits of the element. For `l > N` the result is
    /// right-padded with zeros.
    pub fn truncate(&self, l: usize) -> Bits {
        let bits = self.to_bits();
        if l <= bits.len() {
            bits.prefix(l)
        } else {
            bits.padded(l)
        }
    }

    fn check(&self, other: &FieldElement) -> Result<(), GaloisError> {
        if self.field != other.field {
            return Err(GaloisError::FieldMismatch(self.field.degree(), other.field.degree()));
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement, GaloisError> {
        self.check(other)?;
        let limbs = self.limbs.iter().zip(&other.limbs).map(|(a, b)| a ^ b).collect();
        Ok(FieldElement { field: self.field.clone(), limbs })
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement, GaloisError> {
        self.check(other)?;
        Ok(FieldElement {
            field: self.field.clone(),
            limbs: self.field.0.mulmod(&self.limbs, &other.limbs),
        })
    }

    pub fn square(&self) -> FieldElement {
        FieldElement { field: self.field.clone(), limbs: self.field.0.sqrmod(&self.limbs) }
    }

    /// Multiplicative inverse as `a^(2^N - 2)`; `None` for zero.
    pub fn inverse(&self) -> Option<FieldElement> {
        if self.is_zero() {
            return None;
        }
        // a^(2^N-2) = prod_{i=1}^{N-1} a^(2^i)
        let mut acc = self.field.one();
        let mut p = self.clone();
        for _ in 1..self.field.degree() {
            p = p.square();
            acc = acc.mul(&p).expect("same field");
        }
        Some(acc)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@GF(2^{})", self.to_bits(), self.field.degree())
    }
}

/// Field product; fails when the operands live in different fields.
pub fn gf_mul(a: &FieldElement, b: &FieldElement) -> Result<FieldElement, GaloisError> {
    a.mul(b)
}

/// Irreducible polynomials of degree <= 16 as integers (bit k = x^k), used to
/// sieve candidates before the full test.
fn small_irreducibles() -> &'static [u32] {
    static SMALL: OnceLock<Vec<u32>> = OnceLock::new();
    SMALL.get_or_init(|| {
        let mut out: Vec<u32> = Vec::new();
        for deg in 1..=16u32 {
            for low in 0..(1u32 << deg) {
                let p = (1u32 << deg) | low;
                let divisible = out.iter().any(|&q| {
                    let dq = 31 - q.leading_zeros();
                    dq * 2 <= deg && small_rem(p as u64, q) == 0
                });
                if !divisible {
                    out.push(p);
                }
            }
        }
        out
    })
}

fn small_rem(mut a: u64, m: u32) -> u64 {
    let dm = 31 - m.leading_zeros();
    while a != 0 {
        let da = 63 - a.leading_zeros();
        if da < dm {
            break;
        }
        a ^= (m as u64) << (da - dm);
    }
    a
}

fn small_mulmod(a: u64, b: u64, m: u32) -> u64 {
    small_rem(poly::clmul64(a, b) as u64, m)
}

/// `x^e mod m` for a small modulus.
fn small_xpow(e: usize, m: u32) -> u64 {
    let mut result = small_rem(1, m);
    let mut base = small_rem(2, m);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = small_mulmod(result, base, m);
        }
        base = small_mulmod(base, base, m);
        e >>= 1;
    }
    result
}

/// Lexicographically smallest irreducible `x^N + r(x)`, returned as `r`
/// (bit k = coefficient of x^k). Candidates are scanned in increasing `r`;
/// only odd-weight polynomials with constant term 1 can be irreducible.
pub(crate) fn smallest_irreducible(degree: usize) -> u64 {
    assert!(degree >= 1);
    if degree == 1 {
        return 0; // x itself
    }
    let sieve: Vec<(u32, u64)> = small_irreducibles()
        .iter()
        .filter(|&&q| ((31 - q.leading_zeros()) as usize) * 2 <= degree)
        .map(|&q| (q, small_xpow(degree, q)))
        .collect();
    let mut r: u64 = 1;
    loop {
        if r.count_ones() % 2 == 0 {
            let has_small_factor = sieve.iter().any(|&(q, xn)| xn ^ small_rem(r, q) == 0);
            if !has_small_factor {
                let spec = FieldSpec::from_low(degree, r);
                let ok = if degree <= 32 {
                    poly::is_irreducible_ben_or(&spec.0)
                } else {
                    poly::is_irreducible_rabin(&spec.0)
                };
                if ok {
                    return r;
                }
            }
        }
        r += 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf8() -> FieldSpec {
        FieldSpec::with_modulus(&Bits::parse("1011").unwrap()).unwrap()
    }

    fn el(f: &FieldSpec, s: &str) -> FieldElement {
        f.element(&Bits::parse(s).unwrap()).unwrap()
    }

    #[test]
    fn hand_reduction_in_gf8() {
        let f = gf8();
        // x * x^2 = x^3 = x + 1
        let p = gf_mul(&el(&f, "010"), &el(&f, "100")).unwrap();
        assert_eq!(p.to_bits().to_string(), "011");
    }

    #[test]
    fn identity_and_zero() {
        let f = gf8();
        for a in f.elements() {
            assert_eq!(gf_mul(&a, &f.one()).unwrap(), a);
            assert!(gf_mul(&f.zero(), &a).unwrap().is_zero());
        }
    }

    #[test]
    fn default_gf8_modulus_is_x3_x_1() {
        assert_eq!(FieldSpec::new(3).unwrap().modulus().to_string(), "1011");
        assert_eq!(FieldSpec::new(8).unwrap().modulus().to_string(), "100011011");
    }

    #[test]
    fn mismatched_fields_error() {
        let a = FieldSpec::new(3).unwrap().one();
        let b = FieldSpec::new(4).unwrap().one();
        assert_eq!(gf_mul(&a, &b), Err(GaloisError::FieldMismatch(3, 4)));
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^2 + 1 = (x + 1)^2
        let r = FieldSpec::with_modulus(&Bits::parse("101").unwrap());
        assert!(matches!(r, Err(GaloisError::Reducible(2))));
    }

    #[test]
    fn field_axioms_exhaustive_small_degrees() {
        // The product table is filled through the element API, then every
        // axiom is checked over all pairs and triples.
        for n in 1..=8usize {
            let f = FieldSpec::new(n).unwrap();
            let size = 1usize << n;
            let all: Vec<_> = f.elements().collect();
            let mut mul = vec![0usize; size * size];
            for a in 0..size {
                for b in 0..size {
                    mul[a * size + b] = all[a].mul(&all[b]).unwrap().low_u64() as usize;
                }
            }
            let m = |a: usize, b: usize| mul[a * size + b];
            for a in 0..size {
                if a != 0 {
                    let inv = all[a].inverse().unwrap().low_u64() as usize;
                    assert_eq!(m(a, inv), 1);
                    assert_eq!((0..size).filter(|&b| m(a, b) == 1).count(), 1);
                }
                for b in 0..size {
                    assert_eq!(m(a, b), m(b, a));
                    for c in 0..size {
                        assert_eq!(m(a, m(b, c)), m(m(a, b), c));
                        assert_eq!(m(a, b ^ c), m(a, b) ^ m(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn multiplicative_group_is_cyclic_of_full_order() {
        // In GF(2^N)* every nonzero a satisfies a^(2^N - 1) = 1; N = 7, 8.
        for n in [7usize, 8] {
            let f = FieldSpec::new(n).unwrap();
            for a in f.elements().skip(1) {
                let mut p = a.clone();
                for _ in 0..n {
                    p = p.square();
                }
                assert_eq!(p, a);
            }
        }
    }

    #[test]
    fn table_matches_search_for_small_degrees() {
        for n in 2..=20 {
            assert_eq!(table::lookup(n), Some(smallest_irreducible(n)), "degree {n}");
        }
    }

    #[test]
    fn large_field_inverse_round_trip() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [65usize, 128, 200] {
            let f = FieldSpec::new(n).unwrap();
            let a = f.random(&mut rng);
            let b = f.random(&mut rng);
            let c = f.random(&mut rng);
            assert_eq!(a.mul(&a.inverse().unwrap()).unwrap(), f.one());
            assert_eq!(
                a.mul(&b.add(&c).unwrap()).unwrap(),
                a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
            );
        }
    }
}
