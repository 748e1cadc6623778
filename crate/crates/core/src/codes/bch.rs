//! Shortened narrow-sense binary BCH codes.
//!
//! A word `y` of length `n` is the polynomial `sum y_i x^i`; its syndrome is
//! `y(x) mod g(x)` where `g` is the generator of the length `2^M - 1` code
//! with designed distance `2t + 1`. Decoding uses Berlekamp-Massey on the
//! power-sum syndromes and a Chien search over the `n` live positions.

use crate::bits::Bits;
use crate::galois::FieldSpec;

/// GF(2^M) for small `M` with log/antilog tables over a primitive element.
#[derive(Debug)]
struct SmallField {
    order: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl SmallField {
    fn new(m: usize) -> Self {
        assert!((2..=16).contains(&m));
        let modulus = FieldSpec::new(m).expect("degree >= 1").modulus();
        let f: u32 = modulus.iter().fold(0, |a, b| (a << 1) | b as u32);
        let order = (1usize << m) - 1;
        let mul = |a: u32, b: u32| -> u32 {
            let mut acc = 0u32;
            for i in 0..m {
                if b >> i & 1 == 1 {
                    acc ^= a << i;
                }
            }
            for d in (m..2 * m).rev() {
                if acc >> d & 1 == 1 {
                    acc ^= f << (d - m);
                }
            }
            acc
        };
        // smallest primitive element: its powers visit every nonzero element
        for g in 2u32.. {
            let mut exp = vec![0u16; 2 * order];
            let mut log = vec![0u16; order + 1];
            let mut x = 1u32;
            let mut primitive = true;
            for i in 0..order {
                if i > 0 && x == 1 {
                    primitive = false;
                    break;
                }
                exp[i] = x as u16;
                log[x as usize] = i as u16;
                x = mul(x, g);
            }
            if primitive {
                for i in order..2 * order {
                    exp[i] = exp[i - order];
                }
                return Self { order, exp, log };
            }
        }
        unreachable!()
    }

    fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    fn div(&self, a: u16, b: u16) -> u16 {
        assert!(b != 0);
        if a == 0 {
            0
        } else {
            let e = self.log[a as usize] as usize + self.order - self.log[b as usize] as usize;
            self.exp[e % self.order]
        }
    }

    fn alpha_pow(&self, e: usize) -> u16 {
        self.exp[e % self.order]
    }
}

#[derive(Debug)]
pub(crate) struct Bch {
    n: usize,
    t: usize,
    field: SmallField,
    /// Generator polynomial, bit `k` = coefficient of `x^k`.
    generator: Vec<bool>,
}

impl Bch {
    /// Shortened BCH code of length `n` correcting `t` errors, or `None` when
    /// the generator would leave no message bits.
    pub fn new(n: usize, t: usize) -> Option<Self> {
        assert!(n >= 1 && t >= 1);
        let mut m = 2;
        while (1usize << m) - 1 < n {
            m += 1;
        }
        let field = SmallField::new(m);
        let order = field.order;
        let mut covered = vec![false; order];
        let mut generator = vec![true];
        for i in (1..2 * t).step_by(2) {
            let i = i % order;
            if covered[i] {
                continue;
            }
            // cyclotomic coset of i and its minimal polynomial
            let mut coset = Vec::new();
            let mut j = i;
            while !covered[j] {
                covered[j] = true;
                coset.push(j);
                j = (2 * j) % order;
            }
            let mut minpoly: Vec<u16> = vec![1];
            for &c in &coset {
                let root = field.alpha_pow(c);
                let mut next = vec![0u16; minpoly.len() + 1];
                for (k, &a) in minpoly.iter().enumerate() {
                    next[k + 1] ^= a;
                    next[k] ^= field.mul(a, root);
                }
                minpoly = next;
            }
            debug_assert!(minpoly.iter().all(|&c| c <= 1));
            let mp: Vec<bool> = minpoly.iter().map(|&c| c == 1).collect();
            generator = poly_mul(&generator, &mp);
        }
        let redundancy = generator.len() - 1;
        if redundancy >= n {
            return None;
        }
        Some(Self { n, t, field, generator })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> usize {
        self.t
    }

    pub fn redundancy(&self) -> usize {
        self.generator.len() - 1
    }

    /// Parity-check columns `x^i mod g`, packed little-endian.
    pub fn columns(&self) -> Vec<Vec<u64>> {
        let r = self.redundancy();
        let limbs = r.div_ceil(64).max(1);
        let mut cur = vec![false; r];
        cur[0] = true;
        let mut out = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let mut packed = vec![0u64; limbs];
            for (k, &b) in cur.iter().enumerate() {
                if b {
                    packed[k / 64] |= 1 << (k % 64);
                }
            }
            out.push(packed);
            // multiply by x and reduce
            let carry = cur[r - 1];
            for k in (1..r).rev() {
                cur[k] = cur[k - 1];
            }
            cur[0] = false;
            if carry {
                for k in 0..r {
                    cur[k] ^= self.generator[k];
                }
            }
        }
        out
    }

    /// Positions (in base order) of the error pattern whose syndrome is
    /// `diff`, or `None` if more than `t` errors are indicated.
    pub fn error_positions(&self, diff: &Bits) -> Option<Vec<usize>> {
        let f = &self.field;
        let two_t = 2 * self.t;
        // S_i = diff(alpha^i), since g(alpha^i) = 0 for i <= 2t
        let syn: Vec<u16> = (1..=two_t)
            .map(|i| {
                diff.iter()
                    .enumerate()
                    .filter(|(_, b)| *b)
                    .fold(0u16, |acc, (k, _)| acc ^ f.alpha_pow(i * k))
            })
            .collect();
        if syn.iter().all(|&s| s == 0) {
            return Some(Vec::new());
        }
        // Berlekamp-Massey
        let mut c: Vec<u16> = vec![1];
        let mut b: Vec<u16> = vec![1];
        let mut l = 0usize;
        let mut shift = 1usize;
        let mut bd = 1u16;
        for k in 0..two_t {
            let mut d = syn[k];
            for i in 1..=l.min(c.len() - 1) {
                d ^= f.mul(c[i], syn[k - i]);
            }
            if d == 0 {
                shift += 1;
                continue;
            }
            let coef = f.div(d, bd);
            let mut next = c.clone();
            if next.len() < b.len() + shift {
                next.resize(b.len() + shift, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                next[i + shift] ^= f.mul(coef, bi);
            }
            if 2 * l <= k {
                b = c;
                l = k + 1 - l;
                bd = d;
                shift = 1;
            } else {
                shift += 1;
            }
            c = next;
        }
        while c.len() > 1 && *c.last().unwrap() == 0 {
            c.pop();
        }
        if l > self.t || c.len() - 1 != l {
            return None;
        }
        // Chien search: position p is in error iff Lambda(alpha^-p) = 0
        let order = f.order;
        let mut found = Vec::new();
        for p in 0..self.n {
            let inv = (order - p % order) % order;
            let mut acc = 0u16;
            for (i, &ci) in c.iter().enumerate() {
                acc ^= f.mul(ci, f.alpha_pow(inv * i));
            }
            if acc == 0 {
                found.push(p);
            }
        }
        (found.len() == l).then_some(found)
    }
}

fn poly_mul(a: &[bool], b: &[bool]) -> Vec<bool> {
    let mut out = vec![false; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] ^= y;
            }
        }
    }
    out
}
