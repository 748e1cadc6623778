//! Exact distance from uniform of hashed outputs, by enumeration.

use serde::Serialize;
use thiserror::Error;

use super::bounds::pa_bound;
use super::entropy::{hmin_smooth, EntropyError, JointDistribution};
use crate::bits::Bits;
use crate::galois::{FieldSpec, GaloisError};

/// Enumeration budget: `|X| * |keys| * 2^l`.
pub const PA_MAX_WORK: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PaError {
    #[error("enumeration of {0} cases exceeds 2^24")]
    TooLarge(u64),
    #[error("output length {l} exceeds input length {n}")]
    OutputTooLong { l: usize, n: usize },
    #[error("alphabet of {size} values does not fit in {n} bits")]
    Alphabet { size: usize, n: usize },
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Galois(#[from] GaloisError),
}

/// Hash families over `n`-bit inputs with `l`-bit outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PaFamily {
    /// `trunc_l(a * x)` over GF(2^n), `a` uniform.
    Multiply { n: usize },
    /// `trunc_l(a * x) xor b`.
    MultiplyMasked { n: usize },
    /// `trunc_l(x) xor b`; the degenerate member with `a` fixed to the identity.
    MaskOnly { n: usize },
}

impl PaFamily {
    pub fn input_bits(self) -> usize {
        match self {
            PaFamily::Multiply { n } | PaFamily::MultiplyMasked { n } | PaFamily::MaskOnly { n } => n,
        }
    }

    pub fn key_count(self, l: usize) -> u64 {
        match self {
            PaFamily::Multiply { n } => 1 << n,
            PaFamily::MultiplyMasked { n } => 1 << (n + l),
            PaFamily::MaskOnly { .. } => 1 << l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaReport {
    pub distance: f64,
    pub hmin: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Exact `delta((F(X), F, Z), (U, F, Z))` with `F` uniform over the family,
/// `X` the values of variable `x` read as `n`-bit integers and `Z` the
/// variables `z`. Compared against the leftover-hash bound at `q = 0`,
/// `eps = 0`.
pub fn pa_exact_distance(
    dist: &JointDistribution,
    x: &str,
    z: &[&str],
    family: PaFamily,
    l: usize,
) -> Result<PaReport, PaError> {
    let n = family.input_bits();
    if l > n {
        return Err(PaError::OutputTooLong { l, n });
    }
    let cols = dist.columns(&[x], z)?;
    let xs = cols.first().map_or(0, |c| c.len());
    if n < 64 && xs > 1usize << n {
        return Err(PaError::Alphabet { size: xs, n });
    }
    let work = (xs as u64).saturating_mul(family.key_count(l)).saturating_mul(1 << l);
    if work > PA_MAX_WORK {
        return Err(PaError::TooLarge(work));
    }
    let outputs = 1usize << l;
    let uniform = 1.0 / outputs as f64;
    let field = FieldSpec::new(n)?;
    let inputs: Vec<Bits> = (0..xs).map(|v| Bits::from_u64(v as u64, n)).collect();

    // per key: the map x -> output without mask; the mask permutes outputs
    // and so does not change the per-key distance unless it is the only key
    let base_maps: Vec<Vec<usize>> = match family {
        PaFamily::Multiply { .. } | PaFamily::MultiplyMasked { .. } => field
            .elements()
            .map(|a| {
                inputs
                    .iter()
                    .map(|xv| {
                        let e = field.element(xv).expect("width n");
                        a.mul(&e).expect("same field").truncate(l).to_u64() as usize
                    })
                    .collect()
            })
            .collect(),
        PaFamily::MaskOnly { .. } => vec![inputs.iter().map(|xv| xv.prefix(l).to_u64() as usize).collect()],
    };
    let masks = match family {
        PaFamily::Multiply { .. } => 1,
        PaFamily::MultiplyMasked { .. } | PaFamily::MaskOnly { .. } => outputs,
    };

    let mut total = 0.0;
    let mut hist = vec![0.0; outputs];
    for map in &base_maps {
        for b in 0..masks {
            let mut d = 0.0;
            for col in &cols {
                let pz: f64 = col.iter().sum();
                hist.iter_mut().for_each(|h| *h = 0.0);
                for (xv, &p) in col.iter().enumerate() {
                    hist[map[xv] ^ b] += p;
                }
                d += hist.iter().map(|&h| (h - pz * uniform).abs()).sum::<f64>();
            }
            total += 0.5 * d;
        }
    }
    let distance = total / (base_maps.len() * masks) as f64;
    let hmin = hmin_smooth(dist, &[x], z, 0.0)?;
    let bound = pa_bound(hmin, 0.0, 0.0, l as f64);
    Ok(PaReport { distance, hmin, bound, holds: distance <= bound + 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> JointDistribution {
        JointDistribution::new(&[("X", 1 << n)], vec![1.0 / (1 << n) as f64; 1 << n]).unwrap()
    }

    fn point(n: usize, v: usize) -> JointDistribution {
        JointDistribution::from_weights(&[("X", 1 << n)], |a| (a[0] == v) as u8 as f64).unwrap()
    }

    #[test]
    fn uniform_source() {
        for n in 1..=5 {
            for l in 1..=n {
                let r = pa_exact_distance(&uniform(n), "X", &[], PaFamily::MaskOnly { n }, l).unwrap();
                assert!(r.distance.abs() < 1e-12);
                // only the zero multiplier is bad: 2^-n (1 - 2^-l)
                let want = (-(n as f64)).exp2() * (1.0 - (-(l as f64)).exp2());
                for fam in [PaFamily::Multiply { n }, PaFamily::MultiplyMasked { n }] {
                    let r = pa_exact_distance(&uniform(n), "X", &[], fam, l).unwrap();
                    assert!((r.distance - want).abs() < 1e-12, "{fam:?} l={l}: {}", r.distance);
                    assert!(r.holds);
                }
            }
        }
    }

    #[test]
    fn deterministic_source() {
        let r = pa_exact_distance(&point(3, 5), "X", &[], PaFamily::MultiplyMasked { n: 3 }, 1).unwrap();
        assert!((r.distance - 0.5).abs() < 1e-12);
        assert!((r.bound - 0.5 * 2f64.sqrt()).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn side_information_counts() {
        // Z reveals X entirely
        let d = JointDistribution::from_weights(&[("X", 8), ("Z", 8)], |a| (a[0] == a[1]) as u8 as f64).unwrap();
        let r = pa_exact_distance(&d, "X", &["Z"], PaFamily::MaskOnly { n: 3 }, 2).unwrap();
        assert!((r.distance - 0.75).abs() < 1e-12);
        assert_eq!(r.hmin, 0.0);
    }

    #[test]
    fn limits() {
        assert!(matches!(
            pa_exact_distance(&uniform(3), "X", &[], PaFamily::Multiply { n: 3 }, 4),
            Err(PaError::OutputTooLong { .. })
        ));
        assert!(matches!(
            pa_exact_distance(&uniform(4), "X", &[], PaFamily::Multiply { n: 3 }, 1),
            Err(PaError::Alphabet { .. })
        ));
        assert!(matches!(
            pa_exact_distance(&uniform(10), "X", &[], PaFamily::MultiplyMasked { n: 10 }, 4),
            Err(PaError::TooLarge(_))
        ));
    }
}
