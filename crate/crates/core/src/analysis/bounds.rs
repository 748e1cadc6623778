//! Closed-form security bounds and their parameter choices.

use serde::Serialize;
use std::f64::consts::LOG2_E;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("lambda must be positive, got {0}")]
    Lambda(f64),
    #[error("lambda must lie in (0, 1/4), got {0}")]
    LambdaRange(f64),
    #[error("m = {m} exceeds 2^{n}")]
    TooManyPasswords { n: usize, m: u64 },
    #[error("need m >= 2, got {0}")]
    TooFewPasswords(u64),
    #[error("binary entropy target {0} outside [0, 1]")]
    EntropyTarget(f64),
}

/// `h(p) = -p log p - (1-p) log(1-p)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Inverse of `h` restricted to `(0, 1/2]`, by 200 rounds of bisection.
/// `h_inverse(0) = 0`.
pub fn h_inverse(y: f64) -> Result<f64, BoundError> {
    if !(0.0..=1.0).contains(&y) {
        return Err(BoundError::EntropyTarget(y));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `sigma(lambda) = lambda^2 log2(e) / (32 (2 - log2 lambda)^2)`.
pub fn sigma(lambda: f64) -> Result<f64, BoundError> {
    if lambda <= 0.0 || lambda.is_nan() {
        return Err(BoundError::Lambda(lambda));
    }
    let t = 2.0 - lambda.log2();
    Ok(lambda * lambda * LOG2_E / (32.0 * t * t))
}

/// Entropy lower bound `(1/2 - 2 lambda) n` and its smoothing
/// `2^(-sigma(lambda) n)` for a measurement in a uniformly random basis.
pub fn uncertainty_bound(n: usize, lambda: f64) -> Result<(f64, f64), BoundError> {
    let s = sigma(lambda)?;
    Ok(((0.5 - 2.0 * lambda) * n as f64, (-s * n as f64).exp2()))
}

/// `1/2 * 2^(-(H - q - l)/2) + 2 eps`.
pub fn pa_bound(hmin_eps: f64, eps: f64, q: f64, l: f64) -> f64 {
    0.5 * (-(hmin_eps - q - l) / 2.0).exp2() + 2.0 * eps
}

/// Impersonation bound for a dishonest user, `m^2 / 2^l`.
pub fn guess_bound(m: u64, l: usize) -> f64 {
    (m as f64).powi(2) * (-(l as f64)).exp2()
}

/// One term of a bound: the exponent argument `a` of `2^(-a)` (or of
/// `negl(a)`), and its value when the constant is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub argument: f64,
    pub value: Option<f64>,
}

impl Term {
    fn exact(name: &str, argument: f64, scale: f64) -> Self {
        Self { name: name.into(), argument, value: Some(scale * (-argument).exp2()) }
    }

    fn negl(name: &str, argument: f64) -> Self {
        Self { name: name.into(), argument, value: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundInputs {
    pub n: usize,
    pub m: u64,
    pub q: f64,
    pub lambda: f64,
    pub d: Option<f64>,
    pub l: Option<f64>,
    pub phi: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub formula: String,
    pub inputs: BoundInputs,
    pub mu: f64,
    pub sigma: f64,
    pub d: f64,
    pub l: f64,
    pub terms: Vec<Term>,
    pub feasible: bool,
    pub flags: Vec<String>,
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    /// Sum of the terms with known constants.
    pub fn epsilon(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter(|t| !t.name.starts_with("aux:"))
            .map(|t| t.value)
            .sum()
    }
}

fn check(n: usize, m: u64, lambda: f64) -> Result<(f64, f64), BoundError> {
    if !(lambda > 0.0 && lambda < 0.25) {
        return Err(BoundError::LambdaRange(lambda));
    }
    if m < 2 {
        return Err(BoundError::TooFewPasswords(m));
    }
    let log_m = (m as f64).log2();
    if log_m > n as f64 {
        return Err(BoundError::TooManyPasswords { n, m });
    }
    let mu = h_inverse(1.0 - log_m / n as f64)?;
    Ok((log_m, mu))
}

/// Impersonation security of Q-ID with the GV-rate distance
/// `d = n mu - 1` and the balancing choice
/// `l = ((1/4 - lambda) d + 3 log m - q - 1) / 3`.
pub fn impersonation_epsilon(n: usize, m: u64, q: f64, lambda: f64) -> Result<BoundReport, BoundError> {
    let (log_m, mu) = check(n, m, lambda)?;
    let s = sigma(lambda)?;
    let nmu = n as f64 * mu;
    let d = nmu - 1.0;
    let l = ((0.25 - lambda) * d + 3.0 * log_m - q - 1.0) / 3.0;

    let a1 = ((0.25 - lambda) * nmu - 3.0 * log_m - q - 2.0) / 3.0;
    let a2 = s * nmu - log_m - 4.0;
    let mut terms = vec![Term::exact("pa", a1, 1.0), Term::exact("uncertainty", a2, 1.0)];

    // user security at (d, l), statement form and proof form
    let user_stmt = ((0.25 - lambda) * d - log_m - q - l - 1.0) / 2.0;
    let user_unc = s * d - log_m - 3.0;
    let user_proof = (d / 4.0 - lambda * d - log_m - 1.0 - q - l) / 2.0;
    terms.push(Term::exact("aux:user_pa", user_stmt, 1.0));
    terms.push(Term::exact("aux:user_uncertainty", user_unc, 1.0));
    terms.push(Term::exact("aux:user_pa_proof_form", user_proof, 1.0));
    // server security m^2 / 2^l
    terms.push(Term::exact("aux:server_guess", l - 2.0 * log_m, 1.0));

    let feasible = a1 > 0.0 && a2 > 0.0 && l >= 1.0;
    let mut flags = Vec::new();
    if !feasible {
        flags.push("infeasible: nonpositive exponent argument or l < 1".into());
    }
    Ok(BoundReport {
        formula: "impersonation_epsilon".into(),
        inputs: BoundInputs { n, m, q, lambda, d: None, l: None, phi: None, eta: None },
        mu,
        sigma: s,
        d,
        l,
        terms,
        feasible,
        flags,
    })
}

/// Q-ID+ security: default `l = floor(((1/4 - lambda) d + log m - 2q) / 4)`.
/// The overall bound is only known up to `negl(.)`, so the report lists
/// arguments rather than values.
pub fn qidplus_epsilon(
    n: usize,
    m: u64,
    q: f64,
    lambda: f64,
    l_override: Option<f64>,
) -> Result<BoundReport, BoundError> {
    let (log_m, mu) = check(n, m, lambda)?;
    let s = sigma(lambda)?;
    let nmu = n as f64 * mu;
    let d = nmu - 1.0;
    let l_default = (((0.25 - lambda) * d + log_m - 2.0 * q) / 4.0).floor();
    let l = l_override.unwrap_or(l_default);

    let t = (0.25 - lambda) * d - log_m - 3.0 * l;
    let terms = vec![
        Term::negl("theorem_pa", (0.25 - lambda) * nmu - 7.0 * log_m - 2.0 * q),
        Term::negl("theorem_uncertainty", s * nmu - log_m),
        Term::negl("mitm_pa", (0.25 - lambda) * d - log_m - 2.0 * q - 3.0 * l),
        Term::negl("mitm_uncertainty", s * d - log_m),
        Term::negl("mitm_l", l),
        Term::exact("syndrome", (t - 2.0 * q) / 4.0, 1.0),
    ];
    let feasible = terms.iter().all(|t| t.argument > 0.0);
    let mut flags = vec![
        "syndrome term conditional on the bias assumption for the code family".to_string(),
        "negl terms report exponent arguments only; constants unspecified".to_string(),
    ];
    if !feasible {
        flags.push("infeasible: nonpositive exponent argument".into());
    }
    Ok(BoundReport {
        formula: "qidplus_epsilon".into(),
        inputs: BoundInputs { n, m, q, lambda, d: None, l: l_override, phi: None, eta: None },
        mu,
        sigma: s,
        d,
        l,
        terms,
        feasible,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_inverse_anchors() {
        assert!((h_inverse(1.0).unwrap() - 0.5).abs() < 1e-12);
        let h_quarter = 2.0 - 0.75 * 3f64.log2();
        assert!((binary_entropy(0.25) - h_quarter).abs() < 1e-12);
        assert!((h_inverse(h_quarter).unwrap() - 0.25).abs() < 1e-9);
        let half = h_inverse(0.5).unwrap();
        assert!((half - 0.11003).abs() < 1e-4);
        assert!((binary_entropy(half) - 0.5).abs() < 1e-9);
        assert_eq!(h_inverse(0.0).unwrap(), 0.0);
        assert!(h_inverse(1.5).is_err());
    }

    #[test]
    fn sigma_point_value() {
        // lambda = 0.1: log2(0.1) = -3.321928..., (2 + 3.3219)^2 = 28.3229
        let expect = 0.01 * LOG2_E / (32.0 * (2.0 + 10f64.log2()).powi(2));
        assert!((sigma(0.1).unwrap() - expect).abs() < 1e-18);
        // independent evaluation: 1.5917928723886814e-05
        assert!((sigma(0.1).unwrap() - 1.5917928723886814e-05).abs() < 1e-18);
        assert!((sigma(0.1).unwrap() / 1.5919e-5 - 1.0).abs() < 1e-4);
        assert!(sigma(0.0).is_err());
    }

    #[test]
    fn sigma_increasing_on_quarter_interval() {
        let mut prev = 0.0;
        for i in 1..=1000 {
            let s = sigma(0.25 * i as f64 / 1000.0).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn uncertainty_at_quarter_is_zero() {
        for n in [1, 10, 1000] {
            assert_eq!(uncertainty_bound(n, 0.25).unwrap().0, 0.0);
        }
    }

    #[test]
    fn pa_bound_anchors() {
        assert!((pa_bound(12.0, 0.0, 4.0, 8.0) - 0.5).abs() < 1e-15);
        assert!((pa_bound(0.0, 0.0, 0.0, 1.0) - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for h in 0..100 {
            let b = pa_bound(h as f64, 0.01, 2.0, 3.0);
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn guess_bound_m8_l16() {
        assert_eq!(guess_bound(8, 16), (-10f64).exp2());
    }

    #[test]
    fn qidplus_default_l_is_floor() {
        let r = qidplus_epsilon(10_000, 256, 100.0, 0.01, None).unwrap();
        let expect = (((0.25 - 0.01) * r.d + 8.0 - 200.0) / 4.0).floor();
        assert_eq!(r.l, expect);
        let full = qidplus_epsilon(10_000, 256, 10_000.0, 0.01, None).unwrap();
        assert!(!full.feasible);
        assert!(full.terms.iter().filter(|t| t.name != "theorem_uncertainty" && t.name != "mitm_uncertainty").all(|t| t.argument < 0.0));
    }

    #[test]
    fn reports_are_reproducible() {
        let a = impersonation_epsilon(4096, 16, 10.0, 0.1).unwrap();
        let b = impersonation_epsilon(4096, 16, 10.0, 0.1).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
