//! Keyed hash families over the field engine.
//!
//! * `F`: `f_a(y) = [a * y]_l`, with `y` zero-padded to the field width.
//! * `G`: `g_{a,b}(w) = [a * embed(w)]_l XOR b`.
//! * extractor MAC: `tag = [alpha * msg]_l XOR beta`.
//!
//! `[.]_l` keeps the first `l` bits of an element.

use rand::Rng;

use super::{FieldElement, FieldSpec, GaloisError};
use crate::bits::Bits;

/// A member of the universal-2 family `F` from `{0,1}^{<=n}` to `{0,1}^l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UhfF {
    key: FieldElement,
    out_len: usize,
}

impl UhfF {
    pub fn new(key: FieldElement, out_len: usize) -> Result<Self, GaloisError> {
        let degree = key.field().degree();
        if out_len > degree {
            return Err(GaloisError::OutputTooLong { l: out_len, degree });
        }
        Ok(Self { key, out_len })
    }

    pub fn random<R: Rng + ?Sized>(
        field: &FieldSpec,
        out_len: usize,
        rng: &mut R,
    ) -> Result<Self, GaloisError> {
        Self::new(field.random(rng), out_len)
    }

    /// Input width `n`.
    pub fn domain_bits(&self) -> usize {
        self.key.field().degree()
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    pub fn key(&self) -> &FieldElement {
        &self.key
    }

    /// Key bits, for transmission and MAC coverage.
    pub fn key_bits(&self) -> Bits {
        self.key.to_bits()
    }
}

pub fn uhf_f_eval(f: &UhfF, y: &Bits) -> Result<Bits, GaloisError> {
    let n = f.domain_bits();
    if y.len() > n {
        return Err(GaloisError::InputTooLong { got: y.len(), max: n });
    }
    let y = f.key.field().element(y)?;
    Ok(f.key.mul(&y)?.truncate(f.out_len))
}

/// Embeds a password index `w` in `1..=m` as the field element whose bit
/// string is `w - 1` written big-endian.
pub fn embed_index(field: &FieldSpec, w: u64, m: u64) -> Result<FieldElement, GaloisError> {
    if w == 0 || w > m {
        return Err(GaloisError::IndexOutOfRange { w, m });
    }
    Ok(field.from_u64(w - 1))
}

/// A member of the strongly universal-2 family `G` from `{1..m}` to `{0,1}^l`.
///
/// The key field has degree `max(l, ceil(log2 m))`: a narrower field could not
/// make the output pair uniform when `l` exceeds the index width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UhfG {
    a: FieldElement,
    b: Bits,
    m: u64,
}

impl UhfG {
    pub fn field_degree(m: u64, out_len: usize) -> usize {
        index_bits(m).max(out_len).max(1)
    }

    pub fn field(m: u64, out_len: usize) -> Result<FieldSpec, GaloisError> {
        FieldSpec::new(Self::field_degree(m, out_len))
    }

    pub fn new(a: FieldElement, b: Bits, m: u64) -> Result<Self, GaloisError> {
        let want = Self::field_degree(m, b.len());
        let degree = a.field().degree();
        if degree != want {
            return Err(GaloisError::Width { got: degree, degree: want });
        }
        Ok(Self { a, b, m })
    }

    pub fn random<R: Rng + ?Sized>(m: u64, out_len: usize, rng: &mut R) -> Result<Self, GaloisError> {
        let field = Self::field(m, out_len)?;
        let a = field.random(rng);
        let b = Bits::random(rng, out_len);
        Self::new(a, b, m)
    }

    pub fn out_len(&self) -> usize {
        self.b.len()
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn a(&self) -> &FieldElement {
        &self.a
    }

    pub fn b(&self) -> &Bits {
        &self.b
    }
}

/// `ceil(log2 m)`, with `m = 1` taking zero bits.
pub fn index_bits(m: u64) -> usize {
    if m <= 1 {
        0
    } else {
        (64 - (m - 1).leading_zeros()) as usize
    }
}

pub fn uhf_g_eval(g: &UhfG, w: u64) -> Result<Bits, GaloisError> {
    let e = embed_index(g.a.field(), w, g.m)?;
    let t = g.a.mul(&e)?.truncate(g.b.len());
    Ok(t.xor(&g.b))
}

/// Key of the extractor MAC: `alpha` in GF(2^N_mac), `beta` of tag length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacKey {
    pub alpha: FieldElement,
    pub beta: Bits,
}

impl MacKey {
    pub fn new(alpha: FieldElement, beta: Bits) -> Result<Self, GaloisError> {
        let degree = alpha.field().degree();
        if beta.len() > degree {
            return Err(GaloisError::OutputTooLong { l: beta.len(), degree });
        }
        Ok(Self { alpha, beta })
    }

    pub fn random<R: Rng + ?Sized>(
        field: &FieldSpec,
        tag_len: usize,
        rng: &mut R,
    ) -> Result<Self, GaloisError> {
        let alpha = field.random(rng);
        Self::new(alpha, Bits::random(rng, tag_len))
    }

    pub fn tag_len(&self) -> usize {
        self.beta.len()
    }

    pub fn field_degree(&self) -> usize {
        self.alpha.field().degree()
    }
}

/// Tag of a message bit string. Shorter messages are zero-padded to the field
/// width, so callers must only feed messages from a prefix-free encoding
/// (such as [`encode_parts`]).
pub fn mac_tag(k: &MacKey, message: &Bits) -> Result<Bits, GaloisError> {
    let max = k.field_degree();
    if message.len() > max {
        return Err(GaloisError::InputTooLong { got: message.len(), max });
    }
    let x = k.alpha.field().element(message)?;
    Ok(k.alpha.mul(&x)?.truncate(k.tag_len()).xor(&k.beta))
}

pub fn mac_verify(k: &MacKey, message: &Bits, tag: &Bits) -> Result<bool, GaloisError> {
    let expect = mac_tag(k, message)?;
    Ok(expect == *tag)
}

/// Canonical encoding of a list of bit strings: each part is a 4-byte
/// big-endian bit length followed by the bits packed MSB-first into whole
/// bytes.
pub fn encode_parts(parts: &[&Bits]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(&(p.len() as u32).to_be_bytes());
        out.extend_from_slice(&p.to_bytes());
    }
    out
}

pub fn decode_parts(mut bytes: &[u8]) -> Result<Vec<Bits>, GaloisError> {
    let mut parts = Vec::new();
    while !bytes.is_empty() {
        if bytes.len() < 4 {
            return Err(GaloisError::Encoding("truncated length prefix"));
        }
        let len = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
        bytes = &bytes[4..];
        let nbytes = len.div_ceil(8);
        if bytes.len() < nbytes {
            return Err(GaloisError::Encoding("truncated part"));
        }
        let part = Bits::from_bytes(&bytes[..nbytes], len).expect("length checked");
        if part.to_bytes() != bytes[..nbytes] {
            return Err(GaloisError::Encoding("nonzero padding bits"));
        }
        parts.push(part);
        bytes = &bytes[nbytes..];
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn field(bits: &str) -> FieldSpec {
        FieldSpec::with_modulus(&Bits::parse(bits).unwrap()).unwrap()
    }

    fn b(s: &str) -> Bits {
        Bits::parse(s).unwrap()
    }

    #[test]
    fn zero_key_f_is_constant() {
        let gf = FieldSpec::new(6).unwrap();
        let f = UhfF::new(gf.zero(), 4).unwrap();
        assert_eq!(uhf_f_eval(&f, &b("101101")).unwrap(), b("0000"));
        assert_eq!(uhf_f_eval(&f, &b("1")).unwrap(), b("0000"));
    }

    #[test]
    fn f_padding_convention() {
        let gf = FieldSpec::new(8).unwrap();
        let f = UhfF::new(gf.from_u64(0x5b), 3).unwrap();
        assert_eq!(
            uhf_f_eval(&f, &b("1011")).unwrap(),
            uhf_f_eval(&f, &b("10110000")).unwrap()
        );
        assert!(matches!(
            uhf_f_eval(&f, &b("101100001")),
            Err(GaloisError::InputTooLong { got: 9, max: 8 })
        ));
    }

    #[test]
    fn f_universal_exhaustive_gf16() {
        let gf = FieldSpec::new(4).unwrap();
        let keys: Vec<_> = gf.elements().collect();
        let inputs: Vec<Bits> = (0..16u64).map(|v| Bits::from_u64(v, 4)).collect();
        let mut worst = 0usize;
        for (i, y) in inputs.iter().enumerate() {
            for y2 in &inputs[i + 1..] {
                let coll = keys
                    .iter()
                    .filter(|a| {
                        let f = UhfF::new((*a).clone(), 2).unwrap();
                        uhf_f_eval(&f, y).unwrap() == uhf_f_eval(&f, y2).unwrap()
                    })
                    .count();
                worst = worst.max(coll);
            }
        }
        // at most 16 / 4 keys collide
        assert!(worst <= 4, "worst collision count {worst}");
    }

    #[test]
    fn g_zero_key_is_mask() {
        let gf = UhfG::field(4, 3).unwrap();
        let g = UhfG::new(gf.zero(), b("101"), 4).unwrap();
        for w in 1..=4 {
            assert_eq!(uhf_g_eval(&g, w).unwrap(), b("101"));
        }
        assert!(matches!(uhf_g_eval(&g, 0), Err(GaloisError::IndexOutOfRange { .. })));
        assert!(matches!(uhf_g_eval(&g, 5), Err(GaloisError::IndexOutOfRange { .. })));
    }

    #[test]
    fn g_strongly_universal_exhaustive() {
        for m in 2..=8u64 {
            for l in 1..=4usize {
                let gf = UhfG::field(m, l).unwrap();
                for w in 1..=m {
                    for w2 in (w + 1)..=m {
                        let mut counts: HashMap<(Bits, Bits), usize> = HashMap::new();
                        let mut total = 0;
                        for a in gf.elements() {
                            for bv in 0..(1u64 << l) {
                                let g = UhfG::new(a.clone(), Bits::from_u64(bv, l), m).unwrap();
                                let pair = (uhf_g_eval(&g, w).unwrap(), uhf_g_eval(&g, w2).unwrap());
                                *counts.entry(pair).or_default() += 1;
                                total += 1;
                            }
                        }
                        let cells = 1usize << (2 * l);
                        assert_eq!(counts.len(), cells, "m={m} l={l}");
                        assert!(counts.values().all(|&c| c * cells == total), "m={m} l={l}");
                    }
                }
            }
        }
    }

    #[test]
    fn g_m4_l2_joint_is_uniform_on_16_pairs() {
        let gf = UhfG::field(4, 2).unwrap();
        let mut counts: HashMap<(Bits, Bits), usize> = HashMap::new();
        for a in gf.elements() {
            for bv in 0..4 {
                let g = UhfG::new(a.clone(), Bits::from_u64(bv, 2), 4).unwrap();
                let pair = (uhf_g_eval(&g, 1).unwrap(), uhf_g_eval(&g, 2).unwrap());
                assert_eq!(uhf_g_eval(&g, 1).unwrap(), pair.0);
                *counts.entry(pair).or_default() += 1;
            }
        }
        assert_eq!(counts.len(), 16);
        assert!(counts.values().all(|&c| c == 1));
    }

    #[test]
    fn mac_hand_example() {
        let gf = field("1011");
        let k = MacKey::new(gf.element(&b("010")).unwrap(), b("10")).unwrap();
        assert_eq!(mac_tag(&k, &b("100")).unwrap(), b("11"));
        assert!(mac_verify(&k, &b("100"), &b("11")).unwrap());
        assert!(!mac_verify(&k, &b("100"), &b("01")).unwrap());
        assert!(!mac_verify(&k, &b("100"), &b("10")).unwrap());
        assert!(matches!(mac_tag(&k, &b("1000")), Err(GaloisError::InputTooLong { .. })));
    }

    #[test]
    fn mac_zero_alpha_tags_beta() {
        let gf = FieldSpec::new(16).unwrap();
        let k = MacKey::new(gf.zero(), b("0110")).unwrap();
        for v in [0u64, 1, 77, 65535] {
            assert_eq!(mac_tag(&k, &Bits::from_u64(v, 16)).unwrap(), b("0110"));
        }
    }

    fn all_keys(gf: &FieldSpec, l: usize) -> Vec<MacKey> {
        gf.elements()
            .flat_map(|a| (0..1u64 << l).map(move |bv| MacKey::new(a.clone(), Bits::from_u64(bv, l)).unwrap()))
            .collect()
    }

    #[test]
    fn mac_forgery_exhaustive() {
        let gf = FieldSpec::new(4).unwrap();
        let keys = all_keys(&gf, 2);
        assert_eq!(keys.len(), 64);
        let msgs: Vec<Bits> = (0..16u64).map(|v| Bits::from_u64(v, 4)).collect();
        let tags: Vec<Bits> = (0..4u64).map(|v| Bits::from_u64(v, 2)).collect();
        let table: Vec<Vec<Bits>> = keys
            .iter()
            .map(|k| msgs.iter().map(|m| mac_tag(k, m).unwrap()).collect())
            .collect();
        for (i, _) in msgs.iter().enumerate() {
            for t in &tags {
                let consistent: Vec<usize> = (0..keys.len()).filter(|&k| table[k][i] == *t).collect();
                assert_eq!(consistent.len(), 16);
                for (j, _) in msgs.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    for t2 in &tags {
                        let both = consistent.iter().filter(|&&k| table[k][j] == *t2).count();
                        // Pr[tag' | tag] <= 2^-2
                        assert!(both * 4 <= consistent.len());
                    }
                }
            }
        }
    }

    #[test]
    fn mac_single_bit_flip_rejected_for_nonzero_alpha() {
        let gf = FieldSpec::new(4).unwrap();
        for k in all_keys(&gf, 2) {
            for v in 0..16u64 {
                let m = Bits::from_u64(v, 4);
                let t = mac_tag(&k, &m).unwrap();
                for i in 0..4 {
                    let mut m2 = m.clone();
                    m2.flip(i);
                    let accepted = mac_verify(&k, &m2, &t).unwrap();
                    if k.alpha.is_zero() {
                        assert!(accepted);
                    }
                }
            }
        }
        // Accepting keys per (message, flipped message) pair: alpha*(x^i) must
        // truncate to zero, which happens for 2^(4-2) alphas (including 0).
        for v in 0..16u64 {
            let m = Bits::from_u64(v, 4);
            for i in 0..4 {
                let mut m2 = m.clone();
                m2.flip(i);
                let fooled = all_keys(&gf, 2)
                    .iter()
                    .filter(|k| mac_verify(k, &m2, &mac_tag(k, &m).unwrap()).unwrap())
                    .count();
                assert!(fooled <= (1 << (4 - 2)) * 4);
            }
        }
    }

    #[test]
    fn encoding_round_trip_and_rejects() {
        let parts = [b("1"), b(""), b("0101010101"), Bits::zeros(64)];
        let refs: Vec<&Bits> = parts.iter().collect();
        let enc = encode_parts(&refs);
        assert_eq!(decode_parts(&enc).unwrap(), parts.to_vec());
        assert!(decode_parts(&enc[..enc.len() - 1]).is_err());
        assert!(decode_parts(&[0, 0, 0]).is_err());
        // one-bit part with a stray padding bit set
        assert!(decode_parts(&[0, 0, 0, 1, 0xc0]).is_err());
    }

    #[test]
    fn index_bits_values() {
        assert_eq!(index_bits(1), 0);
        assert_eq!(index_bits(2), 1);
        assert_eq!(index_bits(4), 2);
        assert_eq!(index_bits(5), 3);
        assert_eq!(index_bits(256), 8);
    }
}
