//! Exact (smooth) min-entropy of small joint distributions, the
//! entropy-splitting witness, and min-entropy of basis measurements.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Largest product alphabet a [`JointDistribution`] may have.
pub const MAX_ATOMS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error("no target variables")]
    EmptyTarget,
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("duplicate variable {0}")]
    DuplicateVariable(String),
    #[error("product alphabet {0} exceeds 2^20")]
    TooLarge(usize),
    #[error("expected {want} probabilities, got {got}")]
    Shape { got: usize, want: usize },
    #[error("probabilities must be nonnegative and sum to 1 (sum {0})")]
    NotNormalised(f64),
    #[error("smoothing parameter must lie in [0, 1), got {0}")]
    Epsilon(f64),
    #[error("state vector has norm {0}, not 1")]
    Unnormalised(f64),
    #[error("state vector length {0} is not 2^n for 1 <= n <= 5")]
    StateSize(usize),
}

/// A dense probability table over named finite variables. The last
/// variable varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    names: Vec<String>,
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(vars: &[(&str, usize)], probs: Vec<f64>) -> Result<Self, EntropyError> {
        let mut names: Vec<String> = Vec::with_capacity(vars.len());
        for (name, _) in vars {
            if names.iter().any(|n| n == name) {
                return Err(EntropyError::DuplicateVariable(name.to_string()));
            }
            names.push(name.to_string());
        }
        let sizes: Vec<usize> = vars.iter().map(|v| v.1).collect();
        let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).unwrap_or(usize::MAX);
        if total > MAX_ATOMS {
            return Err(EntropyError::TooLarge(total));
        }
        if probs.len() != total {
            return Err(EntropyError::Shape { got: probs.len(), want: total });
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(EntropyError::NotNormalised(sum));
        }
        Ok(Self { names, sizes, probs })
    }

    /// Builds the table from a weight function and normalises it.
    pub fn from_weights(vars: &[(&str, usize)], weight: impl Fn(&[usize]) -> f64) -> Result<Self, EntropyError> {
        let sizes: Vec<usize> = vars.iter().map(|v| v.1).collect();
        let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).unwrap_or(usize::MAX);
        if total > MAX_ATOMS {
            return Err(EntropyError::TooLarge(total));
        }
        let mut w: Vec<f64> = (0..total).map(|i| weight(&unrank(i, &sizes))).collect();
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) || w.iter().any(|&p| !(p >= 0.0)) {
            return Err(EntropyError::NotNormalised(sum));
        }
        w.iter_mut().for_each(|p| *p /= sum);
        Self::new(vars, w)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn var(&self, name: &str) -> Result<usize, EntropyError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| EntropyError::UnknownVariable(name.to_string()))
    }

    pub fn size_of(&self, name: &str) -> Result<usize, EntropyError> {
        Ok(self.sizes[self.var(name)?])
    }

    /// The values of every variable at atom `i`.
    pub fn assignment(&self, i: usize) -> Vec<usize> {
        unrank(i, &self.sizes)
    }

    pub fn prob(&self, values: &[usize]) -> f64 {
        self.probs[rank(values, &self.sizes)]
    }

    /// Marginal on `keep`, in that order.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointDistribution, EntropyError> {
        let idx = self.indices(keep)?;
        let sizes: Vec<usize> = idx.iter().map(|&k| self.sizes[k]).collect();
        let mut probs = vec![0.0; sizes.iter().product()];
        for (i, &p) in self.probs.iter().enumerate() {
            let a = unrank(i, &self.sizes);
            let sub: Vec<usize> = idx.iter().map(|&k| a[k]).collect();
            probs[rank(&sub, &sizes)] += p;
        }
        let vars: Vec<(&str, usize)> = keep.iter().copied().zip(sizes.iter().copied()).collect();
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        JointDistribution::new(&vars, probs)
    }

    fn indices(&self, names: &[&str]) -> Result<Vec<usize>, EntropyError> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let k = self.var(n)?;
            if out.contains(&k) {
                return Err(EntropyError::DuplicateVariable(n.to_string()));
            }
            out.push(k);
        }
        Ok(out)
    }

    /// `P(target, given)` arranged as one column per value of `given`.
    pub fn columns(&self, target: &[&str], given: &[&str]) -> Result<Vec<Vec<f64>>, EntropyError> {
        if target.is_empty() {
            return Err(EntropyError::EmptyTarget);
        }
        let t = self.indices(target)?;
        let g = self.indices(given)?;
        if let Some(k) = t.iter().find(|k| g.contains(k)) {
            return Err(EntropyError::DuplicateVariable(self.names[*k].clone()));
        }
        let ts: Vec<usize> = t.iter().map(|&k| self.sizes[k]).collect();
        let gs: Vec<usize> = g.iter().map(|&k| self.sizes[k]).collect();
        let mut cols = vec![vec![0.0; ts.iter().product()]; gs.iter().product()];
        for (i, &p) in self.probs.iter().enumerate() {
            let a = unrank(i, &self.sizes);
            let x: Vec<usize> = t.iter().map(|&k| a[k]).collect();
            let y: Vec<usize> = g.iter().map(|&k| a[k]).collect();
            cols[rank(&y, &gs)][rank(&x, &ts)] += p;
        }
        Ok(cols)
    }
}

fn unrank(mut i: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        out[k] = i % sizes[k];
        i /= sizes[k];
    }
    out
}

fn rank(values: &[usize], sizes: &[usize]) -> usize {
    values.iter().zip(sizes).fold(0, |acc, (&v, &s)| acc * s + v)
}

/// `-log2 sum_y max_x P(x, y)`.
pub fn hmin(dist: &JointDistribution, target: &[&str], given: &[&str]) -> Result<f64, EntropyError> {
    let cols = dist.columns(target, given)?;
    Ok(-guess_probability(&cols).log2())
}

pub fn guess_probability(cols: &[Vec<f64>]) -> f64 {
    cols.iter().map(|c| c.iter().copied().fold(0.0, f64::max)).sum()
}

/// Smooth min-entropy: the best `H_min(X E | Y)` over events of probability
/// at least `1 - eps`.
pub fn hmin_smooth(dist: &JointDistribution, target: &[&str], given: &[&str], eps: f64) -> Result<f64, EntropyError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(EntropyError::Epsilon(eps));
    }
    let cols = dist.columns(target, given)?;
    Ok(-smoothed_guess(&cols, eps).log2())
}

/// Least achievable `sum_y max_x P(x, y, E)` after removing at most `eps`
/// of probability mass.
///
/// Lowering column `y` to level `c` costs `sum_x max(0, P(x,y) - c)`, a
/// convex piecewise-linear function whose slope is the number of entries at
/// or above the level. Mass therefore always goes to the column with the
/// fewest entries at its top.
pub fn smoothed_guess(cols: &[Vec<f64>], eps: f64) -> f64 {
    struct Col {
        vals: Vec<f64>,
        level: f64,
        k: usize,
    }
    let mut state: Vec<Col> = cols
        .iter()
        .map(|c| {
            let mut vals: Vec<f64> = c.iter().copied().filter(|&p| p > 0.0).collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            let level = vals.first().copied().unwrap_or(0.0);
            let k = vals.iter().take_while(|&&v| v >= level).count();
            Col { vals, level, k }
        })
        .collect();
    let mut budget = eps;
    while budget > 0.0 {
        let Some(c) = state.iter_mut().filter(|c| c.level > 0.0).min_by_key(|c| c.k) else {
            break;
        };
        let next = c.vals.get(c.k).copied().unwrap_or(0.0);
        let cost = c.k as f64 * (c.level - next);
        if cost <= budget {
            budget -= cost;
            c.level = next;
            c.k += c.vals[c.k..].iter().take_while(|&&v| v >= next && next > 0.0).count();
        } else {
            c.level -= budget / c.k as f64;
            budget = 0.0;
        }
    }
    state.iter().map(|c| c.level).sum()
}

/// Grid search over how much mass each column gives up; each column's
/// level for a given removal is found by bisection.
pub fn grid_smoothed_guess(cols: &[Vec<f64>], eps: f64, step: f64) -> f64 {
    fn level(col: &[f64], removed: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, col.iter().copied().fold(0.0, f64::max));
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let cost: f64 = col.iter().map(|&v| (v - mid).max(0.0)).sum();
            if cost > removed {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
    fn rec(cols: &[Vec<f64>], left: f64, step: f64) -> f64 {
        match cols {
            [] => 0.0,
            [c] => level(c, left),
            [c, rest @ ..] => {
                let mut best = f64::INFINITY;
                let mut r = 0.0;
                while r <= left + 1e-12 {
                    best = best.min(level(c, r) + rec(rest, left - r, step));
                    r += step;
                }
                best
            }
        }
    }
    rec(cols, eps, step)
}

/// `V` of the splitting construction, one entry per atom of `dist` (values
/// `1..=m`): the first `j < m` whose `P(x_j | z)` reaches `2^(-alpha/2)`
/// while all earlier ones stay below it, and `m` otherwise.
pub fn split_witness(dist: &JointDistribution, xs: &[&str], z: &[&str], alpha: f64) -> Result<Vec<usize>, EntropyError> {
    let m = xs.len();
    if m == 0 {
        return Err(EntropyError::EmptyTarget);
    }
    let thr = (-alpha / 2.0).exp2();
    let x_idx: Vec<usize> = xs.iter().map(|n| dist.var(n)).collect::<Result<_, _>>()?;
    let z_idx: Vec<usize> = z.iter().map(|n| dist.var(n)).collect::<Result<_, _>>()?;
    // P(x_j, z) and P(z) tables
    let pz = dist.marginal(z)?;
    let pxz: Vec<JointDistribution> = xs
        .iter()
        .map(|x| {
            let mut keep = vec![*x];
            keep.extend_from_slice(z);
            dist.marginal(&keep)
        })
        .collect::<Result<_, _>>()?;
    let mut v = Vec::with_capacity(dist.len());
    for i in 0..dist.len() {
        let a = dist.assignment(i);
        let zv: Vec<usize> = z_idx.iter().map(|&k| a[k]).collect();
        let p_z = if z.is_empty() { 1.0 } else { pz.prob(&zv) };
        let mut choice = m;
        for j in 0..m.saturating_sub(1) {
            let mut key = vec![a[x_idx[j]]];
            key.extend_from_slice(&zv);
            let cond = if p_z > 0.0 { pxz[j].prob(&key) / p_z } else { 0.0 };
            if cond >= thr * (1.0 - 1e-12) {
                choice = j + 1;
                break;
            }
        }
        v.push(choice);
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SplitOutcome {
    /// The bound was evaluated.
    Checked { holds: bool, value: f64, bound: f64, margin: f64 },
    /// A precondition failed; nothing about the bound is claimed.
    NotApplicable(String),
}

/// Evaluates the splitting bound on an exact distribution: with `V` from
/// [`split_witness`] and an independent `W` with law `w`, checks
/// `H_min^(2 m eps)(X_W | V W Z, V != W) >= alpha/2 - log2 m - 1`.
pub fn verify_entropy_splitting(
    dist: &JointDistribution,
    xs: &[&str],
    z: &[&str],
    alpha: f64,
    eps: f64,
    w: &[f64],
) -> Result<SplitOutcome, EntropyError> {
    let m = xs.len();
    if m < 2 {
        return Ok(SplitOutcome::NotApplicable("need at least two variables".into()));
    }
    if w.len() != m || w.iter().any(|&p| !(p >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Ok(SplitOutcome::NotApplicable("W must be a distribution on 1..m".into()));
    }
    if w.iter().copied().fold(0.0, f64::max) > 0.5 + 1e-12 {
        return Ok(SplitOutcome::NotApplicable("H_min(W) < 1".into()));
    }
    if 2.0 * m as f64 * eps >= 1.0 {
        return Ok(SplitOutcome::NotApplicable("2 m eps >= 1".into()));
    }
    for i in 0..m {
        for j in i + 1..m {
            let h = hmin_smooth(dist, &[xs[i], xs[j]], z, eps)?;
            if h < alpha - 1e-9 {
                return Ok(SplitOutcome::NotApplicable(format!(
                    "pairwise smooth min-entropy of ({}, {}) is {h:.6} < alpha",
                    xs[i], xs[j]
                )));
            }
        }
    }
    let v = split_witness(dist, xs, z, alpha)?;
    let x_idx: Vec<usize> = xs.iter().map(|n| dist.var(n)).collect::<Result<_, _>>()?;
    let z_idx: Vec<usize> = z.iter().map(|n| dist.var(n)).collect::<Result<_, _>>()?;
    let x_size = x_idx.iter().map(|&k| dist.sizes()[k]).max().unwrap_or(1);
    let z_size: usize = z_idx.iter().map(|&k| dist.sizes()[k]).product();
    let z_sizes: Vec<usize> = z_idx.iter().map(|&k| dist.sizes()[k]).collect();
    // joint of (X_W, V, W, Z) on V != W
    let mut probs = vec![0.0; x_size * m * m * z_size];
    for i in 0..dist.len() {
        let p = dist.probs()[i];
        if p == 0.0 {
            continue;
        }
        let a = dist.assignment(i);
        let zv: Vec<usize> = z_idx.iter().map(|&k| a[k]).collect();
        let zr = rank(&zv, &z_sizes);
        let vv = v[i] - 1;
        for (wi, &pw) in w.iter().enumerate() {
            if wi == vv || pw == 0.0 {
                continue;
            }
            let x = a[x_idx[wi]];
            probs[((x * m + vv) * m + wi) * z_size + zr] += p * pw;
        }
    }
    let p_neq: f64 = probs.iter().sum();
    if p_neq <= 0.0 {
        return Ok(SplitOutcome::NotApplicable("P[V != W] = 0".into()));
    }
    probs.iter_mut().for_each(|p| *p /= p_neq);
    let cond = JointDistribution::new(&[("XW", x_size), ("V", m), ("W", m), ("Z", z_size)], probs)?;
    let value = hmin_smooth(&cond, &["XW"], &["V", "W", "Z"], 2.0 * m as f64 * eps)?;
    let bound = alpha / 2.0 - (m as f64).log2() - 1.0;
    Ok(SplitOutcome::Checked { holds: value >= bound - 1e-9, value, bound, margin: value - bound })
}

/// `P(x, theta)` for measuring an `n`-qubit pure state in every basis
/// `theta` with `theta` uniform; one column per basis.
pub fn measurement_columns(state: &[Complex64]) -> Result<Vec<Vec<f64>>, EntropyError> {
    let dim = state.len();
    if !dim.is_power_of_two() || dim < 2 || dim > 32 {
        return Err(EntropyError::StateSize(dim));
    }
    let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(EntropyError::Unnormalised(norm));
    }
    let n = dim.trailing_zeros() as usize;
    let mut cols = Vec::with_capacity(dim);
    for theta in 0..dim {
        let mut amp = state.to_vec();
        for q in 0..n {
            // qubit q is bit (n - 1 - q) of the index, MSB first
            if theta >> (n - 1 - q) & 1 == 1 {
                hadamard(&mut amp, n - 1 - q);
            }
        }
        cols.push(amp.iter().map(|a| a.norm_sqr() / dim as f64).collect());
    }
    Ok(cols)
}

fn hadamard(amp: &mut [Complex64], bit: usize) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mask = 1 << bit;
    for i in 0..amp.len() {
        if i & mask == 0 {
            let (a, b) = (amp[i], amp[i | mask]);
            amp[i] = (a + b) * s;
            amp[i | mask] = (a - b) * s;
        }
    }
}

/// `(H_min(X | Theta), H_min^eps(X | Theta))` for a measurement of `state`
/// in a uniformly random basis.
pub fn exact_measurement_entropy(state: &[Complex64], eps: f64) -> Result<(f64, f64), EntropyError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(EntropyError::Epsilon(eps));
    }
    let cols = measurement_columns(state)?;
    Ok((-guess_probability(&cols).log2(), -smoothed_guess(&cols, eps).log2()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn single(p: &[f64]) -> JointDistribution {
        JointDistribution::new(&[("X", p.len())], p.to_vec()).unwrap()
    }


    #[test]
    fn min_entropy_examples() {
        let u = JointDistribution::new(&[("X", 8)], vec![0.125; 8]).unwrap();
        assert!((hmin(&u, &["X"], &[]).unwrap() - 3.0).abs() < 1e-12);
        let same = JointDistribution::from_weights(&[("X", 4), ("Y", 4)], |a| (a[0] == a[1]) as u8 as f64).unwrap();
        assert!(hmin(&same, &["X"], &["Y"]).unwrap().abs() < 1e-12);
        let d = single(&[0.5, 0.3, 0.2]);
        assert!((hmin(&d, &["X"], &[]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(hmin(&d, &[], &[]), Err(EntropyError::EmptyTarget));
    }

    #[test]
    fn smoothing_examples() {
        let d = single(&[0.5, 0.3, 0.2]);
        assert_eq!(hmin_smooth(&d, &["X"], &[], 0.0).unwrap(), hmin(&d, &["X"], &[]).unwrap());
        let h1 = hmin_smooth(&d, &["X"], &[], 0.1).unwrap();
        assert!((h1 - 1.321928094887362).abs() < 1e-12, "{h1}");
        let h2 = hmin_smooth(&d, &["X"], &[], 0.2).unwrap();
        assert!((h2 - 1.736965594166206).abs() < 1e-12, "{h2}");
        // past the 0.3 tie both atoms come down together
        let h3 = hmin_smooth(&d, &["X"], &[], 0.3).unwrap();
        assert!((h3 + 0.25f64.log2()).abs() < 1e-12);
        assert!(hmin_smooth(&d, &["X"], &[], 1.0).is_err());
    }

    #[test]
    fn water_filling_matches_grid_search() {
        let mut rng = crate::rng::stream(5, "smooth-grid", 0);
        for _ in 0..60 {
            let ncols = rng.random_range(1..=2);
            let rows = rng.random_range(1..=6 / ncols);
            let mut w: Vec<f64> = (0..ncols * rows).map(|_| rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|p| *p /= s);
            let cols: Vec<Vec<f64>> = w.chunks(rows).map(|c| c.to_vec()).collect();
            for k in 0..=5 {
                let eps = k as f64 * 0.05;
                let exact = smoothed_guess(&cols, eps);
                let grid = grid_smoothed_guess(&cols, eps, 1e-3);
                // the grid can only do worse, by at most one step
                assert!(grid >= exact - 1e-9, "{grid} < {exact}");
                assert!(grid - exact <= 1e-3 + 1e-9, "{grid} vs {exact}");
            }
        }
    }

    #[test]
    fn smoothing_monotone_in_eps() {
        let d = JointDistribution::from_weights(&[("X", 3), ("Y", 2)], |a| 1.0 + (a[0] * 3 + a[1]) as f64).unwrap();
        let mut prev = hmin(&d, &["X"], &["Y"]).unwrap();
        for k in 1..100 {
            let h = hmin_smooth(&d, &["X"], &["Y"], k as f64 / 100.0).unwrap();
            assert!(h >= prev - 1e-12);
            prev = h;
        }
    }

    #[test]
    fn marginals_and_columns() {
        let d = JointDistribution::from_weights(&[("A", 2), ("B", 3)], |a| (a[0] + 2 * a[1] + 1) as f64).unwrap();
        let b = d.marginal(&["B"]).unwrap();
        let total: f64 = (1..=2).map(|a| a as f64).sum::<f64>() + (3..=4).map(|a| a as f64).sum::<f64>() + 11.0;
        assert!((b.prob(&[0]) - 3.0 / total).abs() < 1e-12);
        let cols = d.columns(&["A"], &["B"]).unwrap();
        assert_eq!(cols.len(), 3);
        assert!((cols[2][1] - 6.0 / total).abs() < 1e-12);
        assert!(JointDistribution::new(&[("X", 2)], vec![0.7, 0.2]).is_err());
        assert!(JointDistribution::new(&[("X", 1 << 11), ("Y", 1 << 10)], vec![]).is_err());
    }

    fn correlated_pair() -> JointDistribution {
        // X1 = X2 uniform on {0,1}^2
        JointDistribution::from_weights(&[("X1", 4), ("X2", 4)], |a| (a[0] == a[1]) as u8 as f64).unwrap()
    }

    #[test]
    fn witness_on_correlated_pair() {
        let d = correlated_pair();
        let v = split_witness(&d, &["X1", "X2"], &[], 2.0).unwrap();
        assert!(v.iter().all(|&j| j == 2));
        let out = verify_entropy_splitting(&d, &["X1", "X2"], &[], 2.0, 0.0, &[0.5, 0.5]).unwrap();
        match out {
            SplitOutcome::Checked { holds, value, bound, .. } => {
                assert!(holds);
                assert_eq!(bound, -1.0);
                assert!((value - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn witness_picks_heavy_atom_and_depends_on_order() {
        let d = JointDistribution::from_weights(&[("X1", 2), ("X2", 2)], |a| match (a[0], a[1]) {
            (0, _) => 0.45,
            (1, 0) => 0.1,
            _ => 0.0,
        })
        .unwrap();
        let v = split_witness(&d, &["X1", "X2"], &[], 2.0).unwrap();
        // P(X1 = 0) = 0.9 is heavy, X1 = 1 is not
        assert_eq!(v, vec![1, 1, 2, 2]);
        // scanning X2 first: P(X2 = 0) = 0.55 is heavy, P(X2 = 1) = 0.45 is not
        let swapped = split_witness(&d, &["X2", "X1"], &[], 2.0).unwrap();
        assert_eq!(swapped, vec![1, 2, 1, 2]);
    }

    #[test]
    fn splitting_preconditions_reported() {
        let d = correlated_pair();
        let too_high = verify_entropy_splitting(&d, &["X1", "X2"], &[], 3.0, 0.0, &[0.5, 0.5]).unwrap();
        assert!(matches!(too_high, SplitOutcome::NotApplicable(_)));
        let skewed = verify_entropy_splitting(&d, &["X1", "X2"], &[], 2.0, 0.0, &[0.9, 0.1]).unwrap();
        assert!(matches!(skewed, SplitOutcome::NotApplicable(_)));
    }

    #[test]
    fn product_state_measurement_entropy() {
        let zero = |n: usize| {
            let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
            v[0] = Complex64::new(1.0, 0.0);
            v
        };
        let (h, _) = exact_measurement_entropy(&zero(2), 0.0).unwrap();
        assert!((h - 2.0 * (4.0f64 / 3.0).log2()).abs() < 1e-12, "{h}");
        assert!((h - 0.8300749985576876).abs() < 1e-12);
        let plus: Vec<Complex64> = vec![Complex64::new(0.5, 0.0); 4];
        let (hp, _) = exact_measurement_entropy(&plus, 0.0).unwrap();
        assert!((hp - h).abs() < 1e-12);
        assert!(exact_measurement_entropy(&[Complex64::new(1.0, 0.0); 2], 0.0).is_err());
        assert!(exact_measurement_entropy(&zero(6), 0.0).is_err());
    }
}
