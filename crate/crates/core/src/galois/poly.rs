//! Dense polynomials over GF(2) stored as little-endian `u64` limbs
//! (bit `k` of limb `i` is the coefficient of `x^(64 i + k)`).

/// Carry-less 64x64 -> 128 bit product, 4-bit windowed.
#[inline]
pub(crate) fn clmul64(a: u64, b: u64) -> u128 {
    let mut table = [0u128; 16];
    let a = a as u128;
    table[1] = a;
    for i in 2..16 {
        table[i] = if i % 2 == 0 { table[i / 2] << 1 } else { table[i - 1] ^ a };
    }
    let mut acc = 0u128;
    for k in (0..16).rev() {
        acc = (acc << 4) ^ table[((b >> (4 * k)) & 0xf) as usize];
    }
    acc
}

pub(crate) fn degree(p: &[u64]) -> Option<usize> {
    p.iter()
        .rposition(|&w| w != 0)
        .map(|i| 64 * i + 63 - p[i].leading_zeros() as usize)
}

pub(crate) fn is_one(p: &[u64]) -> bool {
    !p.is_empty() && p[0] == 1 && p[1..].iter().all(|&w| w == 0)
}

#[inline]
pub(crate) fn bit(p: &[u64], k: usize) -> bool {
    p.get(k / 64).is_some_and(|w| w >> (k % 64) & 1 == 1)
}

#[inline]
pub(crate) fn toggle(p: &mut [u64], k: usize) {
    p[k / 64] ^= 1 << (k % 64);
}

pub(crate) fn mul(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            if y == 0 {
                continue;
            }
            let p = clmul64(x, y);
            out[i + j] ^= p as u64;
            out[i + j + 1] ^= (p >> 64) as u64;
        }
    }
    out
}

/// Squaring spreads each bit `k` to bit `2k`.
pub(crate) fn square(a: &[u64]) -> Vec<u64> {
    fn spread(w: u32) -> u64 {
        let mut x = w as u64;
        x = (x | (x << 16)) & 0x0000_ffff_0000_ffff;
        x = (x | (x << 8)) & 0x00ff_00ff_00ff_00ff;
        x = (x | (x << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
        x = (x | (x << 2)) & 0x3333_3333_3333_3333;
        x = (x | (x << 1)) & 0x5555_5555_5555_5555;
        x
    }
    let mut out = vec![0u64; 2 * a.len()];
    for (i, &w) in a.iter().enumerate() {
        out[2 * i] = spread(w as u32);
        out[2 * i + 1] = spread((w >> 32) as u32);
    }
    out
}

/// XORs `b * x^shift` into `a`, growing `a` if needed.
pub(crate) fn xor_shifted(a: &mut Vec<u64>, b: &[u64], shift: usize) {
    let limb = shift / 64;
    let off = shift % 64;
    let need = limb + b.len() + 1;
    if a.len() < need {
        a.resize(need, 0);
    }
    for (i, &w) in b.iter().enumerate() {
        if w == 0 {
            continue;
        }
        a[limb + i] ^= w << off;
        if off != 0 {
            a[limb + i + 1] ^= w >> (64 - off);
        }
    }
}

/// Remainder of `a` modulo a nonzero `m` (schoolbook long division).
pub(crate) fn rem(a: &[u64], m: &[u64]) -> Vec<u64> {
    let dm = degree(m).expect("division by zero polynomial");
    let mut r = a.to_vec();
    while let Some(dr) = degree(&r) {
        if dr < dm {
            break;
        }
        xor_shifted(&mut r, m, dr - dm);
    }
    r.truncate(dm / 64 + 1);
    r
}

pub(crate) fn gcd(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    while degree(&b).is_some() {
        let r = rem(&a, &b);
        a = b;
        b = r;
    }
    a
}

/// Reduction context for a fixed modulus `x^N + r(x)`.
#[derive(Debug, Clone)]
pub(crate) struct Reducer {
    pub degree: usize,
    /// Full modulus including the leading term.
    pub modulus: Vec<u64>,
    /// Exponents of the nonzero terms of `r`, ascending.
    terms: Vec<usize>,
    limbs: usize,
}

impl Reducer {
    pub fn new(degree: usize, modulus: Vec<u64>) -> Self {
        debug_assert_eq!(self::degree(&modulus), Some(degree));
        let terms = (0..degree).filter(|&k| bit(&modulus, k)).collect();
        Self {
            degree,
            modulus,
            terms,
            limbs: degree.div_ceil(64).max(1),
        }
    }

    pub fn limbs(&self) -> usize {
        self.limbs
    }

    /// Reduces `p` in place and returns it truncated to the field width.
    pub fn reduce(&self, mut p: Vec<u64>) -> Vec<u64> {
        let n = self.degree;
        let top_term = self.terms.last().copied().unwrap_or(0);
        let Some(mut top) = degree(&p) else {
            return vec![0; self.limbs];
        };
        if top_term + 64 <= n {
            // Word-at-a-time folding: a 64-bit chunk above x^N lands strictly
            // below the chunk itself because deg r <= N - 64.
            while top >= n {
                let lo = n.max(top.saturating_sub(63));
                let len = top - lo + 1;
                let chunk = extract(&p, lo, len);
                clear(&mut p, lo, len);
                for &e in &self.terms {
                    xor_bits(&mut p, lo - n + e, chunk, len);
                }
                match degree(&p) {
                    Some(d) => top = d,
                    None => break,
                }
            }
        } else {
            while top >= n {
                toggle(&mut p, top);
                for &e in &self.terms {
                    toggle(&mut p, top - n + e);
                }
                match degree(&p) {
                    Some(d) => top = d,
                    None => break,
                }
            }
        }
        p.resize(self.limbs, 0);
        p
    }

    pub fn mulmod(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        self.reduce(mul(a, b))
    }

    pub fn sqrmod(&self, a: &[u64]) -> Vec<u64> {
        self.reduce(square(a))
    }

    /// `x mod f` as a field-width vector.
    pub fn x(&self) -> Vec<u64> {
        let mut v = vec![0u64; self.limbs];
        if self.degree > 1 {
            v[0] = 2;
            v
        } else {
            // degree 1: x = r (mod x + r)
            self.reduce(vec![2])
        }
    }
}

fn extract(p: &[u64], lo: usize, len: usize) -> u64 {
    debug_assert!(len <= 64 && len > 0);
    let i = lo / 64;
    let off = lo % 64;
    let mut v = p.get(i).copied().unwrap_or(0) >> off;
    if off != 0 && off + len > 64 {
        v |= p.get(i + 1).copied().unwrap_or(0) << (64 - off);
    }
    if len < 64 {
        v &= (1u64 << len) - 1;
    }
    v
}

fn clear(p: &mut [u64], lo: usize, len: usize) {
    let v = extract(p, lo, len);
    xor_bits(p, lo, v, len);
}

fn xor_bits(p: &mut [u64], lo: usize, v: u64, len: usize) {
    let _ = len;
    let i = lo / 64;
    let off = lo % 64;
    p[i] ^= v << off;
    if off != 0 {
        let hi = v >> (64 - off);
        if hi != 0 {
            p[i + 1] ^= hi;
        }
    }
}

/// Ben-Or: `f` of degree `N` is irreducible iff `gcd(f, x^(2^i) - x) = 1`
/// for every `1 <= i <= N/2`, i.e. it has no factor of any degree up to `N/2`.
/// `limit` caps the factor degrees examined (used as a sieve).
pub(crate) fn no_small_factors(red: &Reducer, limit: usize) -> bool {
    let x = red.x();
    let mut u = x.clone();
    for _ in 1..=limit.min(red.degree / 2) {
        u = red.sqrmod(&u);
        let mut diff = u.clone();
        for (d, s) in diff.iter_mut().zip(&x) {
            *d ^= s;
        }
        if !is_one(&gcd(&red.modulus, &diff)) {
            return false;
        }
    }
    true
}

pub(crate) fn is_irreducible_ben_or(red: &Reducer) -> bool {
    if red.degree == 1 {
        return true;
    }
    no_small_factors(red, red.degree / 2)
}

/// Rabin: irreducible iff `x^(2^N) = x mod f` and `gcd(f, x^(2^(N/p)) - x) = 1`
/// for every prime `p | N`.
pub(crate) fn is_irreducible_rabin(red: &Reducer) -> bool {
    let n = red.degree;
    if n == 1 {
        return true;
    }
    let x = red.x();
    let mut primes = Vec::new();
    let mut k = n;
    let mut p = 2;
    while p * p <= k {
        if k % p == 0 {
            primes.push(p);
            while k % p == 0 {
                k /= p;
            }
        }
        p += 1;
    }
    if k > 1 {
        primes.push(k);
    }
    let mut checkpoints: Vec<usize> = primes.iter().map(|p| n / p).collect();
    checkpoints.sort_unstable();
    let mut u = x.clone();
    let mut done = 0;
    for i in 1..=n {
        u = red.sqrmod(&u);
        while done < checkpoints.len() && checkpoints[done] == i {
            let mut diff = u.clone();
            for (d, s) in diff.iter_mut().zip(&x) {
                *d ^= s;
            }
            if !is_one(&gcd(&red.modulus, &diff)) {
                return false;
            }
            done += 1;
        }
    }
    u == x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slow_clmul(a: u64, b: u64) -> u128 {
        (0..64).filter(|i| b >> i & 1 == 1).fold(0u128, |acc, i| acc ^ ((a as u128) << i))
    }

    #[test]
    fn windowed_clmul_matches_bitwise() {
        let samples = [0u64, 1, 2, 3, 0xdead_beef, u64::MAX, 0x8000_0000_0000_0001];
        for &a in &samples {
            for &b in &samples {
                assert_eq!(clmul64(a, b), slow_clmul(a, b));
            }
        }
    }

    #[test]
    fn square_matches_mul() {
        let a = vec![0x1234_5678_9abc_def0u64, 0x0fed_cba9];
        assert_eq!(square(&a), mul(&a, &a));
    }

    #[test]
    fn word_and_bit_reduction_agree() {
        // x^130 + x^3 + 1 takes the word path; compare against long division.
        let mut m = vec![0u64; 3];
        toggle(&mut m, 130);
        toggle(&mut m, 3);
        toggle(&mut m, 0);
        let red = Reducer::new(130, m.clone());
        let a = vec![u64::MAX, 0x1234_5678_9abc_def0, 0x3];
        let b = vec![0xfeed_face_cafe_beef, u64::MAX, 0x2];
        let prod = mul(&a, &b);
        let mut expect = rem(&prod, &m);
        expect.resize(3, 0);
        assert_eq!(red.reduce(prod), expect);
    }

    #[test]
    fn irreducibility_small_cases() {
        // x^2 + x + 1 irreducible, x^2 + 1 = (x+1)^2 not.
        assert!(is_irreducible_ben_or(&Reducer::new(2, vec![0b111])));
        assert!(!is_irreducible_ben_or(&Reducer::new(2, vec![0b101])));
        // x^4 + x^3 + x^2 + x + 1 irreducible; x^4 + x^2 + 1 = (x^2+x+1)^2 not.
        assert!(is_irreducible_rabin(&Reducer::new(4, vec![0b11111])));
        assert!(!is_irreducible_rabin(&Reducer::new(4, vec![0b10101])));
    }
}
