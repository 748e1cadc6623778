//! Server-side recovery of `x|I_w` and the test-bit comparison.

use crate::bits::{Bases, Bits};
use crate::codes::{decode_with_syndrome, Syndrome, SyndromeFamily};

/// Ascending positions set in an `n`-bit mask.
pub fn test_positions(mask: &Bits) -> Vec<usize> {
    (0..mask.len()).filter(|&i| mask.get(i)).collect()
}

/// Returns `true` if `i` is one of the ascending positions `t`.
pub fn in_test_set(t: &[usize], i: usize) -> bool {
    t.binary_search(&i).is_ok()
}

/// Recovers `x|I_w` from the server's outcome `x_prime`.
///
/// `codeword` is `c(w)`, `c` the bases actually used (randomised on `t`).
/// Positions of `I_w` inside `t` that were measured in the wrong basis are
/// taken from `test`; the result is then decoded against the syndrome.
#[allow(clippy::too_many_arguments)]
pub fn qidplus_recover(
    x_prime: &Bits,
    test: &Bits,
    t: &[usize],
    theta: &Bases,
    codeword: &Bases,
    c: &Bases,
    family: &SyndromeFamily,
    j: u64,
    s: &Syndrome,
) -> Option<Bits> {
    if test.len() != t.len() || x_prime.len() != theta.len() {
        return None;
    }
    let iw = theta.agreement(codeword);
    let y: Bits = iw
        .iter()
        .map(|&i| match t.binary_search(&i) {
            Ok(k) if c.get(i) != theta.get(i) => test.get(k),
            _ => x_prime.get(i),
        })
        .collect();
    decode_with_syndrome(family, j, &y, s)
}

/// Comparison of `test` with `test'` on `V = {i in T : theta_i = c_i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestCheck {
    pub compared: usize,
    pub mismatches: usize,
}

impl TestCheck {
    /// Exact agreement when `tolerance` is zero, otherwise a mismatch
    /// fraction of at most `tolerance`.
    pub fn passes(&self, tolerance: f64) -> bool {
        if tolerance <= 0.0 || self.compared == 0 {
            self.mismatches == 0
        } else {
            self.mismatches as f64 <= tolerance * self.compared as f64
        }
    }
}

/// `test` and `test'` are both indexed by the ascending positions `t`.
pub fn test_agreement(test: &Bits, test_prime: &Bits, t: &[usize], theta: &Bases, c: &Bases) -> TestCheck {
    let mut out = TestCheck { compared: 0, mismatches: 0 };
    for (k, &i) in t.iter().enumerate() {
        if theta.get(i) == c.get(i) {
            out.compared += 1;
            if test.get(k) != test_prime.get(k) {
                out.mismatches += 1;
            }
        }
    }
    out
}
