//! Exact binomial intervals and the posterior statistics of the audits.

use std::collections::BTreeMap;

use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

pub const CONFIDENCE: f64 = 0.99;

/// Two-sided Clopper-Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let tail = (1.0 - confidence) / 2.0;
    let (k, n) = (k as f64, n as f64);
    let lo = if k == 0.0 { 0.0 } else { Beta::new(k, n - k + 1.0).expect("positive shapes").inverse_cdf(tail) };
    let hi = if k == n { 1.0 } else { Beta::new(k + 1.0, n - k).expect("positive shapes").inverse_cdf(1.0 - tail) };
    (lo, hi)
}

/// Smallest `k` with `Pr[Bin(n, p) <= k] >= confidence`.
pub fn binomial_quantile(n: usize, p: f64, confidence: f64) -> usize {
    let p = p.clamp(0.0, 1.0);
    if n == 0 || p == 0.0 {
        return 0;
    }
    let b = Binomial::new(p, n as u64).expect("valid probability");
    // bisection on the CDF, which is monotone in k
    let (mut lo, mut hi) = (0u64, n as u64);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if b.cdf(mid) >= confidence {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo as usize
}

/// `k` successes out of `n` are consistent with a success rate of at most
/// `bound`: `k` does not exceed the exact binomial quantile at `confidence`.
pub fn within_binomial_bound(k: usize, n: usize, bound: f64, confidence: f64) -> bool {
    k <= binomial_quantile(n, bound, confidence)
}

/// Empirical joint counts of a secret `w` and an observed outcome.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JointCounts {
    counts: BTreeMap<(u64, u64), usize>,
    total: usize,
}

impl JointCounts {
    pub fn add(&mut self, w: u64, outcome: u64) {
        *self.counts.entry((w, outcome)).or_default() += 1;
        self.total += 1;
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn count(&self, w: u64, outcome: u64) -> usize {
        self.counts.get(&(w, outcome)).copied().unwrap_or(0)
    }

    fn secrets(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.counts.keys().map(|k| k.0).collect();
        v.dedup();
        v
    }

    fn outcomes(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.counts.keys().map(|k| k.1).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn w_count(&self, w: u64) -> usize {
        self.counts.iter().filter(|(k, _)| k.0 == w).map(|(_, c)| c).sum()
    }

    fn o_count(&self, o: u64) -> usize {
        self.counts.iter().filter(|(k, _)| k.1 == o).map(|(_, c)| c).sum()
    }

    /// `sum_o P(o) * TV(P(w | o), prior)`: how far, on average, seeing the
    /// outcome moves the attacker's belief about `w` away from `prior`.
    pub fn posterior_deviation(&self, prior: &BTreeMap<u64, f64>) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let mut dev = 0.0;
        for o in self.outcomes() {
            let no = self.o_count(o) as f64;
            let tv: f64 = prior.iter().map(|(&w, &p)| (self.count(w, o) as f64 / no - p).abs()).sum::<f64>() / 2.0;
            dev += no / self.total as f64 * tv;
        }
        dev
    }

    /// Largest `TV(P(o | w), P(o))` over the secrets seen.
    pub fn max_conditional_tv(&self) -> f64 {
        let outcomes = self.outcomes();
        let mut worst = 0.0f64;
        for w in self.secrets() {
            let nw = self.w_count(w) as f64;
            let tv: f64 = outcomes
                .iter()
                .map(|&o| (self.count(w, o) as f64 / nw - self.o_count(o) as f64 / self.total as f64).abs())
                .sum::<f64>()
                / 2.0;
            worst = worst.max(tv);
        }
        worst
    }
}

/// Uniform law on `1..=m`.
pub fn uniform_prior(m: u64) -> BTreeMap<u64, f64> {
    (1..=m).map(|w| (w, 1.0 / m as f64)).collect()
}
