//! Small density matrices: trace distance and the conditional-independence
//! decomposition check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("matrix is {rows}x{cols}, expected square of dimension 1..=64")]
    Shape { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    Trace(f64),
    #[error("smallest eigenvalue {0:e} is negative")]
    NotPositive(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid classical part: {0}")]
    Classical(String),
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    // Hermitian by construction; symmetrise against rounding first
    let h = (m + m.adjoint()) * c(0.5);
    h.symmetric_eigenvalues().iter().copied().collect()
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A validated density matrix: Hermitian within 1e-10, unit trace within
/// 1e-10, no eigenvalue below -1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self, QuantumError> {
        let (rows, cols) = m.shape();
        if rows != cols || rows == 0 || rows > MAX_DIM {
            return Err(QuantumError::Shape { rows, cols });
        }
        let dev = hermitian_deviation(&m);
        if dev > 1e-10 {
            return Err(QuantumError::NotHermitian(dev));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(QuantumError::Trace(tr));
        }
        let min = eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(QuantumError::NotPositive(min));
        }
        Ok(Self(m))
    }

    /// `|psi><psi|` for a normalised vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self, QuantumError> {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint())
    }

    pub fn diagonal(p: &[f64]) -> Result<Self, QuantumError> {
        let d: Vec<Complex64> = p.iter().map(|&x| c(x)).collect();
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigenvalues(&self.0).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Random state: `G G^dagger / tr` with `G` complex Gaussian of the given
    /// rank.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Self {
        use rand_distr::StandardNormal;
        let g = DMatrix::from_fn(dim, rank.max(1), |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &g * g.adjoint();
        let tr = m.trace();
        Self::new(m / tr).expect("Gram matrices are states")
    }
}

/// Haar-random pure state of dimension `dim`.
pub fn haar_state<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    use rand_distr::StandardNormal;
    let v: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<Complex64> {
    use rand_distr::StandardNormal;
    let g = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let (q, r) = g.qr().unpack();
    let phases = DMatrix::from_diagonal(&r.diagonal().map(|d| if d.norm() > 0.0 { d / d.norm() } else { c(1.0) }));
    q * phases
}

impl DensityMatrix {
    /// `U rho U^dagger`.
    pub fn conjugate(&self, u: &DMatrix<Complex64>) -> Result<Self, QuantumError> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(QuantumError::DimensionMismatch(u.nrows(), self.dim()));
        }
        Self::new(u * &self.0 * u.adjoint())
    }
}

/// `1/2 tr |rho - sigma|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, QuantumError> {
    if rho.dim() != sigma.dim() {
        return Err(QuantumError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    Ok(0.5 * eigenvalues(&(&rho.0 - &sigma.0)).iter().map(|l| l.abs()).sum::<f64>())
}

/// One branch of `E`'s state at a classical atom `(x, y)`: with probability
/// `weight` (within the atom) `E` is `rho`, and the event occurs with
/// probability `event` in that branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub rho: DensityMatrix,
    pub event: f64,
}

/// A classical-classical-quantum state `sum P(x,y) |x><x| (x) |y><y| (x)
/// rho_E^{x,y}`, together with an event whose probability may depend on
/// `x`, `y` and a hidden branch of `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqState {
    nx: usize,
    ny: usize,
    pxy: Vec<f64>,
    branches: Vec<Vec<Branch>>,
    dim: usize,
}

impl CqState {
    /// The general form; `branches[x * ny + y]` describes atom `(x, y)`.
    pub fn new(nx: usize, ny: usize, pxy: Vec<f64>, branches: Vec<Vec<Branch>>) -> Result<Self, QuantumError> {
        if pxy.len() != nx * ny || branches.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(QuantumError::Classical("table sizes do not match nx * ny".into()));
        }
        let sum: f64 = pxy.iter().sum();
        if pxy.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(QuantumError::Classical(format!("P_XY sums to {sum}")));
        }
        let dim = branches.iter().flatten().map(|b| b.rho.dim()).next().unwrap_or(1);
        for atom in &branches {
            let w: f64 = atom.iter().map(|b| b.weight).sum();
            if atom.is_empty() || (w - 1.0).abs() > 1e-12 || atom.iter().any(|b| !(b.weight >= 0.0)) {
                return Err(QuantumError::Classical("branch weights must sum to 1".into()));
            }
            for b in atom {
                if b.rho.dim() != dim {
                    return Err(QuantumError::DimensionMismatch(b.rho.dim(), dim));
                }
                if !(0.0..=1.0).contains(&b.event) {
                    return Err(QuantumError::Classical(format!("event probability {}", b.event)));
                }
            }
        }
        if dim > 16 {
            return Err(QuantumError::Shape { rows: dim, cols: dim });
        }
        Ok(Self { nx, ny, pxy, branches, dim })
    }

    /// `E` depends on `y` only and the event on `(x, y)` only:
    /// `event[x * ny + y] = P(event | x, y)`.
    pub fn markov(nx: usize, ny: usize, pxy: Vec<f64>, rho_y: &[DensityMatrix], event: &[f64]) -> Result<Self, QuantumError> {
        if rho_y.len() != ny || event.len() != nx * ny {
            return Err(QuantumError::Classical("need one matrix per y and one event entry per (x, y)".into()));
        }
        let branches = (0..nx * ny)
            .map(|i| vec![Branch { weight: 1.0, rho: rho_y[i % ny].clone(), event: event[i] }])
            .collect();
        Self::new(nx, ny, pxy, branches)
    }

    /// Block `(x, y)` of `rho_{X<->Y<->E}` restricted to the event (`Some(true)`),
    /// its complement (`Some(false)`) or unconditioned (`None`), each
    /// normalised; also returns the probability of the conditioning.
    fn markov_blocks(&self, cond: Option<bool>) -> (f64, Vec<DMatrix<Complex64>>) {
        let d = self.dim;
        let keep = |b: &Branch| match cond {
            None => 1.0,
            Some(true) => b.event,
            Some(false) => 1.0 - b.event,
        };
        // P(x, y, cond) and the unnormalised E state per y
        let mut pxy_c = vec![0.0; self.nx * self.ny];
        let mut e_y = vec![DMatrix::<Complex64>::zeros(d, d); self.ny];
        for (i, atom) in self.branches.iter().enumerate() {
            for b in atom {
                let w = self.pxy[i] * b.weight * keep(b);
                pxy_c[i] += w;
                e_y[i % self.ny] += b.rho.matrix() * c(w);
            }
        }
        let p: f64 = pxy_c.iter().sum();
        for (y, e) in e_y.iter_mut().enumerate() {
            let py: f64 = (0..self.nx).map(|x| pxy_c[x * self.ny + y]).sum();
            if py > 0.0 {
                *e /= c(py);
            }
        }
        let blocks = (0..self.nx * self.ny)
            .map(|i| if p > 0.0 { &e_y[i % self.ny] * c(pxy_c[i] / p) } else { DMatrix::zeros(d, d) })
            .collect();
        (p, blocks)
    }

    /// Whether the event probability is the same at every `(x, y)`.
    pub fn event_independent_of_xy(&self) -> bool {
        let per_atom: Vec<f64> = self
            .branches
            .iter()
            .zip(&self.pxy)
            .filter(|(_, &p)| p > 0.0)
            .map(|(atom, _)| atom.iter().map(|b| b.weight * b.event).sum())
            .collect();
        per_atom.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovReport {
    pub p_event: f64,
    /// Smallest eigenvalue of `tau` from the `P[E]^2` split (0 when `P[E] = 1`
    /// and the two states coincide).
    pub tau_min_eigenvalue: f64,
    pub tau_trace: f64,
    pub squared_split_holds: bool,
    pub event_independent: bool,
    /// Largest entrywise deviation of the convex split, when the event is
    /// independent of `(X, Y)`.
    pub convex_split_deviation: Option<f64>,
    pub convex_split_holds: Option<bool>,
}

/// Checks `rho = P[E]^2 rho_{|E} + (1 - P[E]^2) tau` for a valid `tau`, and,
/// when the event is independent of `(X, Y)`, the split
/// `rho = P[E] rho_{|E} + P[not E] rho_{|not E}`, all within 1e-9.
pub fn markov_decompose_check(state: &CqState) -> MarkovReport {
    let (_, rho) = state.markov_blocks(None);
    let (p, rho_e) = state.markov_blocks(Some(true));
    let (pbar, rho_ne) = state.markov_blocks(Some(false));
    let q = 1.0 - p * p;

    let mut min_eig = f64::INFINITY;
    let mut trace = 0.0;
    if q > 1e-12 {
        for (a, b) in rho.iter().zip(&rho_e) {
            let tau = (a - b * c(p * p)) / c(q);
            trace += tau.trace().re;
            min_eig = min_eig.min(eigenvalues(&tau).into_iter().fold(f64::INFINITY, f64::min));
        }
    } else {
        // P[E] = 1: tau is free and the identity needs the states to agree
        let dev = rho.iter().zip(&rho_e).map(|(a, b)| max_abs(&(a - b))).fold(0.0, f64::max);
        min_eig = if dev <= 1e-9 { 0.0 } else { -dev };
        trace = 1.0;
    }
    let squared_split_holds = min_eig >= -1e-9 && (trace - 1.0).abs() <= 1e-9;

    let independent = state.event_independent_of_xy();
    let convex_split_deviation = independent.then(|| {
        rho.iter()
            .zip(rho_e.iter().zip(&rho_ne))
            .map(|(a, (e, ne))| max_abs(&(a - e * c(p) - ne * c(pbar))))
            .fold(0.0, f64::max)
    });
    MarkovReport {
        p_event: p,
        tau_min_eigenvalue: min_eig,
        tau_trace: trace,
        squared_split_holds,
        event_independent: independent,
        convex_split_holds: convex_split_deviation.map(|d| d <= 1e-9),
        convex_split_deviation,
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
