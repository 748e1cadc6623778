//! Binary linear codes given by parity checks, with syndrome decoding.

use std::sync::Arc;

use rand::Rng;

use super::bch::Bch;
use super::CodeError;
use crate::bits::Bits;

/// Largest length handled by the exhaustive syndrome table.
pub const TABLE_MAX_N: usize = 20;

#[derive(Clone, Debug)]
enum Decoder {
    /// No redundancy: the syndrome is empty and decoding returns its input.
    Trivial,
    /// `k = 0`: the syndrome is the word itself.
    Identity,
    /// Coset-leader table indexed by syndrome value.
    Table(Arc<Vec<u32>>),
    /// Shortened BCH code; `perm[i]` is the base position of input position `i`.
    Bch { bch: Arc<Bch>, perm: Arc<Vec<usize>> },
}

/// An `[n, k]` binary code described by its parity-check columns.
#[derive(Clone, Debug)]
pub struct LinearCode {
    n: usize,
    k: usize,
    /// Column `i` of the parity-check matrix, bit `j` = row `j`.
    columns: Arc<Vec<Vec<u64>>>,
    distance: usize,
    distance_exact: bool,
    radius: usize,
    decoder: Decoder,
}

impl PartialEq for LinearCode {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.columns == other.columns
    }
}

fn limb_count(r: usize) -> usize {
    r.div_ceil(64).max(1)
}

fn rank(rows: &[Vec<u64>], n: usize) -> usize {
    let mut rows = rows.to_vec();
    let mut rank = 0;
    for col in 0..n {
        let (li, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][li] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][li] & bit != 0 {
                let pivot = rows[rank].clone();
                for (a, b) in rows[r].iter_mut().zip(&pivot) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
    }
    rank
}

impl LinearCode {
    /// Code with no parity checks.
    pub fn trivial(n: usize) -> Self {
        Self {
            n,
            k: n,
            columns: Arc::new(vec![vec![0]; n]),
            distance: 1,
            distance_exact: true,
            radius: 0,
            decoder: Decoder::Trivial,
        }
    }

    /// Code with `k = 0`; the syndrome discloses the word.
    pub fn identity(n: usize) -> Self {
        let r = n;
        let columns = (0..n)
            .map(|i| {
                let mut c = vec![0u64; limb_count(r)];
                c[i / 64] |= 1 << (i % 64);
                c
            })
            .collect();
        Self {
            n,
            k: 0,
            columns: Arc::new(columns),
            distance: n.max(1),
            distance_exact: true,
            radius: n,
            decoder: Decoder::Identity,
        }
    }

    /// From explicit parity-check rows (each of length `n`). The rows must
    /// have full rank; the distance and decoding table are computed
    /// exhaustively, so `n` is limited to [`TABLE_MAX_N`].
    pub fn from_parity_check(rows: &[Bits]) -> Result<Self, CodeError> {
        let r = rows.len();
        let n = rows.first().map(|x| x.len()).unwrap_or(0);
        if n == 0 || rows.iter().any(|x| x.len() != n) {
            return Err(CodeError::ParityCheck("rows must be nonempty and of equal length".into()));
        }
        if n > TABLE_MAX_N {
            return Err(CodeError::ParityCheck(format!("table decoding needs n <= {TABLE_MAX_N}")));
        }
        let packed: Vec<Vec<u64>> = rows
            .iter()
            .map(|row| {
                let mut v = vec![0u64; limb_count(n)];
                for (i, b) in row.iter().enumerate() {
                    if b {
                        v[i / 64] |= 1 << (i % 64);
                    }
                }
                v
            })
            .collect();
        if rank(&packed, n) != r {
            return Err(CodeError::ParityCheck("rows are linearly dependent".into()));
        }
        let columns: Vec<Vec<u64>> = (0..n)
            .map(|i| {
                let mut c = vec![0u64; limb_count(r)];
                for (j, row) in rows.iter().enumerate() {
                    if row.get(i) {
                        c[j / 64] |= 1 << (j % 64);
                    }
                }
                c
            })
            .collect();
        Ok(Self::with_table(n, r, columns))
    }

    /// A uniformly random `[n, k]` code of full-rank parity check.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self, CodeError> {
        if k > n || n > TABLE_MAX_N {
            return Err(CodeError::ParityCheck(format!("cannot draw a random [{n},{k}] code")));
        }
        if k == n {
            return Ok(Self::trivial(n));
        }
        let r = n - k;
        loop {
            let rows: Vec<Bits> = (0..r).map(|_| Bits::random(rng, n)).collect();
            if let Ok(code) = Self::from_parity_check(&rows) {
                return Ok(code);
            }
        }
    }

    fn with_table(n: usize, r: usize, columns: Vec<Vec<u64>>) -> Self {
        let cols: Vec<u32> = columns.iter().map(|c| c[0] as u32).collect();
        let size = 1usize << r;
        let mut leader = vec![u32::MAX; size];
        let mut leader_w = vec![u32::MAX; size];
        let mut d = usize::MAX;
        // Gray-code walk over all 2^n words, tracking syndromes incrementally.
        let mut word = 0u32;
        let mut syn = 0u32;
        leader[0] = 0;
        leader_w[0] = 0;
        for step in 1u32..(1u32 << n) {
            let bit = step.trailing_zeros() as usize;
            word ^= 1 << bit;
            syn ^= cols[bit];
            let w = word.count_ones();
            if syn == 0 {
                d = d.min(w as usize);
            }
            if w < leader_w[syn as usize] {
                leader_w[syn as usize] = w;
                leader[syn as usize] = word;
            }
        }
        let distance = if d == usize::MAX { n + 1 } else { d };
        let radius = (distance - 1) / 2;
        Self {
            n,
            k: n - r,
            columns: Arc::new(columns),
            distance,
            distance_exact: true,
            radius,
            decoder: Decoder::Table(Arc::new(leader)),
        }
    }

    pub(super) fn from_bch(bch: Arc<Bch>, perm: Arc<Vec<usize>>) -> Self {
        let base = bch.columns();
        let columns = perm.iter().map(|&p| base[p].clone()).collect();
        Self {
            n: bch.len(),
            k: bch.len() - bch.redundancy(),
            columns: Arc::new(columns),
            distance: 2 * bch.radius() + 1,
            distance_exact: false,
            radius: bch.radius(),
            decoder: Decoder::Bch { bch, perm },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Minimum distance; exact for table-decoded codes, the designed distance
    /// otherwise (see [`distance_is_exact`](Self::distance_is_exact)).
    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn distance_is_exact(&self) -> bool {
        self.distance_exact
    }

    /// Number of errors the decoder is guaranteed to correct.
    pub fn decode_radius(&self) -> usize {
        self.radius
    }

    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    /// `H y` for a word of length exactly `n`.
    pub fn syndrome(&self, y: &Bits) -> Result<Bits, CodeError> {
        if y.len() != self.n {
            return Err(CodeError::Length { got: y.len(), want: self.n });
        }
        Ok(self.syndrome_unchecked(y))
    }

    fn syndrome_unchecked(&self, y: &Bits) -> Bits {
        let r = self.redundancy();
        let mut acc = vec![0u64; limb_count(r)];
        for (i, b) in y.iter().enumerate() {
            if b {
                for (a, c) in acc.iter_mut().zip(&self.columns[i]) {
                    *a ^= c;
                }
            }
        }
        (0..r).map(|j| acc[j / 64] >> (j % 64) & 1 == 1).collect()
    }

    /// The word within `decode_radius` of `y_noisy` whose syndrome is `s`,
    /// or `None` when the decoder finds none.
    pub fn decode(&self, y_noisy: &Bits, s: &Bits) -> Option<Bits> {
        if y_noisy.len() != self.n || s.len() != self.redundancy() {
            return None;
        }
        match &self.decoder {
            Decoder::Trivial => Some(y_noisy.clone()),
            Decoder::Identity => Some(s.clone()),
            Decoder::Table(leader) => {
                let diff = self.syndrome_unchecked(y_noisy).xor(s);
                let idx = diff.iter().enumerate().fold(0usize, |a, (j, b)| a | (b as usize) << j);
                let e = leader[idx];
                if e == u32::MAX || e.count_ones() as usize > self.radius {
                    return None;
                }
                let mut y = y_noisy.clone();
                for i in 0..self.n {
                    if e >> i & 1 == 1 {
                        y.flip(i);
                    }
                }
                Some(y)
            }
            Decoder::Bch { bch, perm } => {
                let diff = self.syndrome_unchecked(y_noisy).xor(s);
                let positions = bch.error_positions(&diff)?;
                let mut inv = vec![0usize; self.n];
                for (i, &p) in perm.iter().enumerate() {
                    inv[p] = i;
                }
                let mut y = y_noisy.clone();
                for p in positions {
                    y.flip(inv[p]);
                }
                (self.syndrome_unchecked(&y) == *s).then_some(y)
            }
        }
    }

    /// The parity-check matrix as `n - k` rows of length `n`.
    pub fn parity_check(&self) -> Vec<Bits> {
        (0..self.redundancy())
            .map(|j| (0..self.n).map(|i| self.columns[i][j / 64] >> (j % 64) & 1 == 1).collect())
            .collect()
    }

    /// Text form: `linear-code n k d` header, then one hex row per line
    /// (each row packed MSB-first).
    pub fn to_text(&self) -> String {
        let mut s = format!("linear-code {} {} {}\n", self.n, self.k, self.distance);
        for row in self.parity_check() {
            s.push_str(&row.to_hex());
            s.push('\n');
        }
        s
    }

    /// Parses [`to_text`](Self::to_text); the distance is recomputed and must
    /// match. Only table-decodable lengths can be loaded.
    pub fn from_text(text: &str) -> Result<Self, CodeError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| CodeError::Parse("empty input".into()))?
            .split_whitespace()
            .collect();
        if header.len() != 4 || header[0] != "linear-code" {
            return Err(CodeError::Parse("bad header".into()));
        }
        let nums: Vec<usize> = header[1..]
            .iter()
            .map(|t| t.parse().map_err(|_| CodeError::Parse(format!("bad number {t}"))))
            .collect::<Result<_, _>>()?;
        let (n, k, d) = (nums[0], nums[1], nums[2]);
        let rows = lines
            .map(|l| {
                let bytes = (0..l.len())
                    .step_by(2)
                    .map(|i| l.get(i..i + 2).and_then(|h| u8::from_str_radix(h, 16).ok()))
                    .collect::<Option<Vec<u8>>>()
                    .ok_or_else(|| CodeError::Parse(format!("bad hex row {l}")))?;
                Bits::from_bytes(&bytes, n).ok_or_else(|| CodeError::Parse("short row".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let code = if rows.is_empty() { Self::trivial(n) } else { Self::from_parity_check(&rows)? };
        if code.k != k || code.distance != d {
            return Err(CodeError::Parse("header disagrees with matrix".into()));
        }
        Ok(code)
    }

    /// All error patterns of weight `<= radius` decode back, checked over
    /// every such pattern and a set of codeword cosets. Exhaustive use only.
    pub fn verify_radius_exhaustive(&self) -> bool {
        let n = self.n;
        assert!(n <= TABLE_MAX_N);
        let zero = Bits::zeros(n);
        let s0 = self.syndrome_unchecked(&zero);
        let mut ok = true;
        for e in 0u32..(1u32 << n) {
            if e.count_ones() as usize > self.radius {
                continue;
            }
            let noisy: Bits = (0..n).map(|i| e >> i & 1 == 1).collect();
            ok &= self.decode(&noisy, &s0).as_ref() == Some(&zero);
        }
        ok
    }
}

/// Hamming(7,4) parity check with column `i` equal to `i + 1` in binary.
pub fn hamming_7_4() -> LinearCode {
    let rows: Vec<Bits> = (0..3)
        .map(|j| (1..=7u32).map(|c| c >> (2 - j) & 1 == 1).collect())
        .collect();
    LinearCode::from_parity_check(&rows).expect("valid Hamming matrix")
}

/// Counts how many distinct syndromes occur; used by tests as a rank check.
#[cfg(test)]
fn syndrome_count(code: &LinearCode) -> usize {
    let n = code.n();
    let mut seen = std::collections::HashMap::new();
    for v in 0u32..(1u32 << n) {
        let y: Bits = (0..n).map(|i| v >> i & 1 == 1).collect();
        *seen.entry(code.syndrome(&y).unwrap()).or_insert(0) += 1;
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn hamming_parameters() {
        let h = hamming_7_4();
        assert_eq!((h.n(), h.k(), h.distance(), h.decode_radius()), (7, 4, 3, 1));
        assert_eq!(syndrome_count(&h), 8);
    }

    #[test]
    fn hamming_unit_errors_give_columns() {
        let h = hamming_7_4();
        let rows = h.parity_check();
        for i in 0..7 {
            let mut e = Bits::zeros(7);
            e.set(i, true);
            let col: Bits = rows.iter().map(|r| r.get(i)).collect();
            assert_eq!(h.syndrome(&e).unwrap(), col);
        }
    }

    #[test]
    fn hamming_single_errors_all_cosets() {
        let h = hamming_7_4();
        for v in 0u32..128 {
            let y: Bits = (0..7).map(|i| v >> i & 1 == 1).collect();
            let s = h.syndrome(&y).unwrap();
            assert_eq!(h.decode(&y, &s), Some(y.clone()));
            for i in 0..7 {
                let mut noisy = y.clone();
                noisy.flip(i);
                assert_eq!(h.decode(&noisy, &s), Some(y.clone()));
            }
        }
    }

    #[test]
    fn hamming_double_errors_never_yield_true_word() {
        // Beyond the radius the decoder lands on a different word; the
        // downstream hash comparison is what catches it.
        let h = hamming_7_4();
        let y = Bits::parse("1011001").unwrap();
        let s = h.syndrome(&y).unwrap();
        let mut patterns = 0;
        for i in 0..7 {
            for j in (i + 1)..7 {
                let mut noisy = y.clone();
                noisy.flip(i);
                noisy.flip(j);
                let out = h.decode(&noisy, &s);
                assert_ne!(out, Some(y.clone()));
                if let Some(w) = out {
                    assert_eq!(h.syndrome(&w).unwrap(), s);
                    assert!(w.hamming(&y) > h.decode_radius());
                }
                patterns += 1;
            }
        }
        assert_eq!(patterns, 21);
    }

    #[test]
    fn random_codes_decode_within_radius() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [6usize, 10, 14] {
            let c = LinearCode::random(n, n / 2, &mut rng).unwrap();
            assert!(c.verify_radius_exhaustive(), "n={n}");
        }
    }

    #[test]
    fn dependent_rows_rejected() {
        let rows = vec![Bits::parse("1100").unwrap(), Bits::parse("1100").unwrap()];
        assert!(LinearCode::from_parity_check(&rows).is_err());
    }

    #[test]
    fn text_round_trip() {
        let h = hamming_7_4();
        let back = LinearCode::from_text(&h.to_text()).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.distance(), 3);
    }
}
