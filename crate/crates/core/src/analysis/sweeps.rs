//! Randomized and exhaustive sweeps over the analysis oracles. Every sweep
//! yields one row per checked instance; a row with `ok == false` is a
//! violation or a broken precondition.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::bounds::{pa_bound, sigma, uncertainty_bound};
use super::entropy::{
    grid_smoothed_guess, hmin_smooth, measurement_columns, smoothed_guess, verify_entropy_splitting,
    JointDistribution, SplitOutcome,
};
use super::pa::{pa_exact_distance, PaFamily};
use super::quantum::{haar_state, haar_unitary, markov_decompose_check, trace_distance, CqState, DensityMatrix};
use crate::rng;

pub const GRID_STEP: f64 = 1e-3;
pub const MATRIX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep: String,
    pub instance: usize,
    pub inputs: String,
    pub value: f64,
    pub bound: f64,
    /// Distance to the bound on the safe side; negative means violated.
    pub margin: f64,
    pub ok: bool,
}

impl SweepRow {
    fn at_least(sweep: &str, instance: usize, inputs: String, value: f64, bound: f64, tol: f64) -> Self {
        let margin = value - bound;
        Self { sweep: sweep.into(), instance, inputs, value, bound, margin, ok: margin >= -tol }
    }

    fn at_most(sweep: &str, instance: usize, inputs: String, value: f64, bound: f64, tol: f64) -> Self {
        let margin = bound - value;
        Self { sweep: sweep.into(), instance, inputs, value, bound, margin, ok: margin >= -tol }
    }

    fn failed(sweep: &str, instance: usize, inputs: String) -> Self {
        Self { sweep: sweep.into(), instance, inputs, value: f64::NAN, bound: f64::NAN, margin: f64::NAN, ok: false }
    }
}

/// Instance counts per sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SweepPlan {
    pub water_filling: usize,
    pub splitting: usize,
    pub boundary: usize,
    pub uncertainty: usize,
    pub pa: usize,
    pub metric: usize,
    pub markov: usize,
    pub sigma_points: usize,
}

impl SweepPlan {
    pub fn full() -> Self {
        Self {
            water_filling: 200,
            splitting: 1000,
            boundary: 100,
            uncertainty: 1000,
            pa: 100,
            metric: 100,
            markov: 100,
            sigma_points: 1000,
        }
    }

    pub fn quick() -> Self {
        Self {
            water_filling: 40,
            splitting: 200,
            boundary: 40,
            uncertainty: 200,
            pa: 30,
            metric: 30,
            markov: 30,
            sigma_points: 1000,
        }
    }
}

pub fn run_all(plan: &SweepPlan, seed: u64) -> Vec<SweepRow> {
    let mut rows = water_filling_sweep(plan.water_filling, seed);
    rows.extend(splitting_sweep(plan.splitting, seed));
    rows.extend(boundary_splitting_sweep(plan.boundary, seed));
    rows.extend(uncertainty_sweep(plan.uncertainty, seed));
    rows.extend(pa_sweep(plan.pa, seed));
    rows.extend(trace_metric_sweep(plan.metric, seed));
    rows.extend(markov_sweep(plan.markov, seed));
    rows.extend(monotonicity_sweep(plan.sigma_points));
    rows
}

/// Per-sweep `(name, rows, failures)`, in first-seen order.
pub fn summarize(rows: &[SweepRow]) -> Vec<(String, usize, usize)> {
    let mut out: Vec<(String, usize, usize)> = Vec::new();
    for r in rows {
        let i = match out.iter().position(|(s, _, _)| *s == r.sweep) {
            Some(i) => i,
            None => {
                out.push((r.sweep.clone(), 0, 0));
                out.len() - 1
            }
        };
        out[i].1 += 1;
        out[i].2 += usize::from(!r.ok);
    }
    out
}

/// Dirichlet(1) weights, optionally sharpened by a power so some draws are
/// far from uniform.
fn dirichlet<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let power = [1.0, 1.0, 2.0, 4.0][rng.random_range(0..4)];
    let mut w: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1).powf(power)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|p| *p /= s);
    w
}

fn fmt_cols(cols: &[Vec<f64>]) -> String {
    cols.iter()
        .map(|c| c.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("|")
}

/// Water-filling against the grid oracle on tables of at most 6 entries,
/// at `eps` in `{0, 0.05, .., 0.25}`.
pub fn water_filling_sweep(count: usize, seed: u64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for i in 0..count {
        let mut r = rng::stream(seed, "sweep-water-filling", i as u64);
        let ncols = r.random_range(1..=2usize);
        let height = r.random_range(1..=6 / ncols);
        let w = dirichlet(&mut r, ncols * height);
        let cols: Vec<Vec<f64>> = w.chunks(height).map(|c| c.to_vec()).collect();
        let mut prev = f64::INFINITY;
        for k in 0..=5 {
            let eps = k as f64 * 0.05;
            let exact = smoothed_guess(&cols, eps);
            let grid = grid_smoothed_guess(&cols, eps, GRID_STEP);
            let inputs = format!("cols={} eps={eps:.2}", fmt_cols(&cols));
            // the grid optimum is feasible, so never better, and at most one
            // step worse per free column
            let slack = (ncols - 1) as f64 * GRID_STEP;
            let mut row = SweepRow::at_least("water-filling", i, inputs, grid, exact, 1e-9);
            row.ok &= grid - exact <= slack + 1e-9 && exact <= prev + 1e-12;
            prev = exact;
            rows.push(row);
        }
    }
    rows
}

fn var_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("X{j}")).collect()
}

/// Splitting bound on random joint laws of `X_1..X_m` and `Z`, with `alpha`
/// set to the smallest pairwise smooth min-entropy and `W` uniform. Where
/// the smoothing budget is positive the pairwise smoothing is also
/// cross-checked against the grid oracle.
pub fn splitting_sweep(count: usize, seed: u64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for i in 0..count {
        let mut r = rng::stream(seed, "sweep-splitting", i as u64);
        let m = 2 + i % 2;
        let eps = if (i / 2) % 2 == 0 { 0.0 } else { 0.05 };
        let sizes: Vec<usize> = (0..m).map(|_| r.random_range(2..=4)).collect();
        let zsize = r.random_range(1..=2usize);
        let names = var_names(m);
        let mut vars: Vec<(&str, usize)> = names.iter().map(String::as_str).zip(sizes.iter().copied()).collect();
        vars.push(("Z", zsize));
        let atoms: usize = sizes.iter().product::<usize>() * zsize;
        let dist = JointDistribution::new(&vars, dirichlet(&mut r, atoms)).expect("normalised weights");
        let xs: Vec<&str> = names.iter().map(String::as_str).collect();
        let inputs = format!("m={m} sizes={sizes:?} z={zsize} eps={eps}");

        let mut alpha = f64::INFINITY;
        for a in 0..m {
            for b in a + 1..m {
                let h = hmin_smooth(&dist, &[xs[a], xs[b]], &["Z"], eps).expect("valid");
                alpha = alpha.min(h);
                if eps > 0.0 {
                    let cols = dist.columns(&[xs[a], xs[b]], &["Z"]).expect("valid");
                    let exact = smoothed_guess(&cols, eps);
                    let grid = grid_smoothed_guess(&cols, eps, GRID_STEP);
                    let slack = (cols.len() - 1) as f64 * GRID_STEP;
                    let mut row =
                        SweepRow::at_least("splitting-grid", i, format!("{inputs} pair=({a},{b})"), grid, exact, 1e-9);
                    row.ok &= grid - exact <= slack + 1e-9;
                    rows.push(row);
                }
            }
        }
        let w = vec![1.0 / m as f64; m];
        let inputs = format!("{inputs} alpha={alpha:.6}");
        rows.push(split_row("splitting", i, inputs, &dist, &xs, alpha, eps, &w));
    }
    rows
}

#[allow(clippy::too_many_arguments)]
fn split_row(
    sweep: &str,
    i: usize,
    inputs: String,
    dist: &JointDistribution,
    xs: &[&str],
    alpha: f64,
    eps: f64,
    w: &[f64],
) -> SweepRow {
    match verify_entropy_splitting(dist, xs, &["Z"], alpha, eps, w) {
        Ok(SplitOutcome::Checked { value, bound, .. }) => SweepRow::at_least(sweep, i, inputs, value, bound, 1e-9),
        Ok(SplitOutcome::NotApplicable(why)) => SweepRow::failed(sweep, i, format!("{inputs} not-applicable: {why}")),
        Err(e) => SweepRow::failed(sweep, i, format!("{inputs} error: {e}")),
    }
}

/// Laws whose heaviest atoms sit exactly on the witness threshold: the
/// `X_j` are i.i.d. with marginal `q` and `alpha = -2 log2 max q`, so every
/// atom carrying the maximum meets `2^(-alpha/2)` with equality. Half the
/// instances use a uniform `q`, where every atom is on the threshold.
pub fn boundary_splitting_sweep(count: usize, seed: u64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for i in 0..count {
        let mut r = rng::stream(seed, "sweep-boundary", i as u64);
        let m = 2 + i % 2;
        let eps = if (i / 2) % 2 == 0 { 0.0 } else { 0.05 };
        let a = r.random_range(2..=4usize);
        let q = if (i / 4) % 2 == 0 { vec![1.0 / a as f64; a] } else { dirichlet(&mut r, a) };
        let qmax = q.iter().copied().fold(0.0, f64::max);
        let names = var_names(m);
        let mut vars: Vec<(&str, usize)> = names.iter().map(|s| (s.as_str(), a)).collect();
        vars.push(("Z", 1));
        let dist = JointDistribution::from_weights(&vars, |v| v[..m].iter().map(|&x| q[x]).product()).expect("product law");
        let xs: Vec<&str> = names.iter().map(String::as_str).collect();
        let alpha = -2.0 * qmax.log2();
        let on_threshold = q.iter().filter(|&&p| (p - qmax).abs() <= 1e-15).count();
        let inputs = format!("m={m} q={q:?} eps={eps} alpha={alpha:.6} atoms-on-threshold={on_threshold}");
        let w = vec![1.0 / m as f64; m];
        rows.push(split_row("splitting-boundary", i, inputs, &dist, &xs, alpha, eps, &w));
    }
    rows
}

const LAMBDAS: [f64; 6] = [0.01, 0.05, 0.1, 0.15, 0.2, 0.25];

/// Uncertainty bound against the exact measurement oracle on Haar-random
/// states of 1 to 4 qubits. At these sizes the smoothing parameter is close
/// to 1, so the check is valid but weak.
pub fn uncertainty_sweep(count: usize, seed: u64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for i in 0..count {
        let mut r = rng::stream(seed, "sweep-uncertainty", i as u64);
        let n = 1 + i % 4;
        let psi: Vec<Complex64> = haar_state(&mut r, 1 << n);
        let cols = measurement_columns(&psi).expect("normalised");
        for lambda in LAMBDAS {
            let (bound, eps) = uncertainty_bound(n, lambda).expect("positive lambda");
            let value = -smoothed_guess(&cols, eps).log2();
            let inputs = format!("n={n} lambda={lambda} eps={eps:.9} regime=weak");
            rows.push(SweepRow::at_least("uncertainty", i, inputs, value, bound, 1e-9));
        }
    }
    rows
}

/// Exact hashed-output distance against the leftover-hash bound on random
/// sources with side information.
pub fn pa_sweep(count: usize, seed: u64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for i in 0..count {
        let mut r = rng::stream(seed, "sweep-pa", i as u64);
        let n = r.random_range(2..=5usize);
        let l = r.random_range(1..=n);
        // the mask-only member is not universal, so the bound need not hold for it
        let family = match i % 2 {
            0 => PaFamily::Multiply { n },
            _ => PaFamily::MultiplyMasked { n },
        };
        let zsize = r.random_range(1..=3usize);
        let xsize = r.random_range(2..=1usize << n);
        let dist = JointDistribution::new(&[("X", xsize), ("Z", zsize)], dirichlet(&mut r, xsize * zsize))
            .expect("normalised weights");
        let inputs = format!("family={family:?} l={l} |X|={xsize} |Z|={zsize}");
        rows.push(match pa_exact_distance(&dist, "X", &["Z"], family, l) {
            Ok(rep) => SweepRow::at_most("pa", i, format!("{inputs} hmin={:.6}", rep.hmin), rep.distance, rep.bound, 1e-12),
            Err(e) => SweepRow::failed("pa", i, format!("{inputs} error: {e}")),
        });
    }
    rows
}

/// Symmetry, triangle inequality and unitary invariance of the trace
/// distance on random states of dimension 2 to 8.
pub fn trace_metric_sweep(count: usize, seed: u64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for i in 0..count {
        let mut r = rng::stream(seed, "sweep-trace", i as u64);
        let dim = 2 + i % 7;
        let state = |r: &mut rng::StreamRng| {
            let rank = r.random_range(1..=dim);
            DensityMatrix::random(r, dim, rank)
        };
        let (a, b, c) = (state(&mut r), state(&mut r), state(&mut r));
        let d = |x: &DensityMatrix, y: &DensityMatrix| trace_distance(x, y).expect("same dimension");
        let inputs = format!("dim={dim}");
        let ab = d(&a, &b);
        rows.push(SweepRow::at_most("trace-symmetry", i, inputs.clone(), (ab - d(&b, &a)).abs(), 0.0, MATRIX_TOL));
        rows.push(SweepRow::at_most("trace-triangle", i, inputs.clone(), ab, d(&a, &c) + d(&c, &b), MATRIX_TOL));
        let u = haar_unitary(&mut r, dim);
        let moved = d(&a.conjugate(&u).expect("unitary"), &b.conjugate(&u).expect("unitary"));
        rows.push(SweepRow::at_most("trace-unitary", i, inputs, (moved - ab).abs(), 0.0, MATRIX_TOL));
    }
    rows
}

/// Both decomposition identities: an event independent of `(X, Y)` (convex
/// split and squared split) and an event correlated with `X` (squared split
/// only).
pub fn markov_sweep(count: usize, seed: u64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for i in 0..count {
        let mut r = rng::stream(seed, "sweep-markov", i as u64);
        let nx = r.random_range(2..=3usize);
        let ny = r.random_range(2..=3usize);
        let dim = r.random_range(2..=4usize);
        let pxy = dirichlet(&mut r, nx * ny);
        let rho: Vec<DensityMatrix> = (0..ny)
            .map(|_| {
                let rank = r.random_range(1..=dim);
                DensityMatrix::random(&mut r, dim, rank)
            })
            .collect();
        let inputs = format!("nx={nx} ny={ny} dim={dim}");

        let p = r.random_range(0.05..0.95);
        let s = CqState::markov(nx, ny, pxy.clone(), &rho, &vec![p; nx * ny]).expect("valid state");
        let rep = markov_decompose_check(&s);
        let dev = rep.convex_split_deviation.unwrap_or(f64::INFINITY);
        rows.push(SweepRow::at_most("markov-convex", i, format!("{inputs} p={p:.4}"), dev, 0.0, MATRIX_TOL));
        rows.push(tau_row(i, format!("{inputs} independent"), &rep));

        let event: Vec<f64> = (0..nx * ny).map(|_| r.random::<f64>()).collect();
        let s = CqState::markov(nx, ny, pxy, &rho, &event).expect("valid state");
        rows.push(tau_row(i, format!("{inputs} correlated"), &markov_decompose_check(&s)));
    }
    rows
}

fn tau_row(i: usize, inputs: String, rep: &super::quantum::MarkovReport) -> SweepRow {
    let mut row = SweepRow::at_least(
        "markov-tau",
        i,
        format!("{inputs} trace={:.12}", rep.tau_trace),
        rep.tau_min_eigenvalue,
        0.0,
        MATRIX_TOL,
    );
    row.ok &= rep.squared_split_holds;
    row
}

/// `sigma` strictly increasing on `(0, 1/4]` and the hashing bound
/// decreasing in the min-entropy, on evenly spaced points.
pub fn monotonicity_sweep(points: usize) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    let lam = |k: usize| 0.25 * k as f64 / points as f64;
    for k in 2..=points {
        let (a, b) = (sigma(lam(k - 1)).expect("positive"), sigma(lam(k)).expect("positive"));
        let mut row = SweepRow::at_least("sigma-monotone", k, format!("lambda={:.6}", lam(k)), b - a, 0.0, 0.0);
        row.ok &= b > a;
        rows.push(row);
    }
    for k in 1..=100 {
        let h = k as f64 * 0.5;
        let (a, b) = (pa_bound(h - 0.5, 0.0, 0.0, 8.0), pa_bound(h, 0.0, 0.0, 8.0));
        rows.push(SweepRow::at_most("pa-bound-monotone", k, format!("hmin={h}"), b, a, 0.0));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_clean(rows: &[SweepRow]) {
        assert!(!rows.is_empty());
        let bad: Vec<_> = rows.iter().filter(|r| !r.ok).take(5).collect();
        assert!(bad.is_empty(), "{bad:#?}");
    }

    #[test]
    fn small_sweeps_pass() {
        assert_clean(&water_filling_sweep(10, 1));
        assert_clean(&splitting_sweep(40, 1));
        assert_clean(&boundary_splitting_sweep(16, 1));
        assert_clean(&uncertainty_sweep(20, 1));
        assert_clean(&pa_sweep(15, 1));
        assert_clean(&trace_metric_sweep(14, 1));
        assert_clean(&markov_sweep(10, 1));
        assert_clean(&monotonicity_sweep(1000));
    }

    #[test]
    fn boundary_atoms_reach_the_threshold() {
        let rows = boundary_splitting_sweep(8, 2);
        // uniform marginals put every atom on the threshold
        assert!(rows.iter().any(|r| r.inputs.contains("atoms-on-threshold=4")
            || r.inputs.contains("atoms-on-threshold=3")
            || r.inputs.contains("atoms-on-threshold=2")));
    }

    #[test]
    fn sweeps_are_reproducible() {
        assert_eq!(splitting_sweep(6, 9), splitting_sweep(6, 9));
        assert_ne!(splitting_sweep(6, 9), splitting_sweep(6, 10));
    }

    #[test]
    fn summary_counts_failures() {
        let mut rows = pa_sweep(3, 1);
        rows[1].ok = false;
        assert_eq!(summarize(&rows), vec![("pa".to_string(), 3, 1)]);
    }
}
