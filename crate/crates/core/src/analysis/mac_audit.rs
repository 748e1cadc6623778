//! Exhaustive audits of the extractor MAC at toy field sizes.

use serde::Serialize;

use super::bounds::pa_bound;
use crate::bits::Bits;
use crate::galois::{mac_tag, FieldSpec, GaloisError, MacKey};

/// Largest field the audits will enumerate.
pub const MAC_AUDIT_MAX_DEGREE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForgeryReport {
    pub field_degree: usize,
    pub tag_len: usize,
    pub keys: usize,
    /// Best `Pr[tag' on msg' | tag on msg]` over all `msg != msg'` and tags.
    pub substitution: f64,
    /// Best `Pr[tag on msg]` with nothing observed.
    pub impersonation: f64,
    pub bound: f64,
    /// Most keys fooled by a single flipped message bit with the tag kept.
    pub bit_flip_keys: usize,
    /// `2^(N - l)` times the number of masks: keys whose multiplier sends the
    /// flip into the truncated-away bits.
    pub bit_flip_allowance: usize,
    pub holds: bool,
}

/// Enumerates every key `(alpha, beta)` of the MAC over GF(2^`degree`) with
/// `tag_len`-bit tags and every full-width message.
pub fn mac_forgery_audit(degree: usize, tag_len: usize) -> Result<ForgeryReport, GaloisError> {
    if degree > 6 {
        return Err(GaloisError::InputTooLong { got: degree, max: 6 });
    }
    let gf = FieldSpec::new(degree)?;
    let keys: Vec<MacKey> = gf
        .elements()
        .flat_map(|a| (0..1u64 << tag_len).map(move |b| (a.clone(), b)))
        .map(|(a, b)| MacKey::new(a, Bits::from_u64(b, tag_len)))
        .collect::<Result<_, _>>()?;
    let msgs: Vec<Bits> = (0..1u64 << degree).map(|v| Bits::from_u64(v, degree)).collect();
    let table: Vec<Vec<u64>> = keys
        .iter()
        .map(|k| msgs.iter().map(|m| mac_tag(k, m).map(|t| t.to_u64())).collect())
        .collect::<Result<_, _>>()?;
    let tags = 1usize << tag_len;

    let mut substitution = 0.0f64;
    let mut impersonation = 0.0f64;
    for i in 0..msgs.len() {
        for t in 0..tags as u64 {
            let consistent: Vec<usize> = (0..keys.len()).filter(|&k| table[k][i] == t).collect();
            impersonation = impersonation.max(consistent.len() as f64 / keys.len() as f64);
            if consistent.is_empty() {
                continue;
            }
            for j in (0..msgs.len()).filter(|&j| j != i) {
                let mut hits = vec![0usize; tags];
                for &k in &consistent {
                    hits[table[k][j] as usize] += 1;
                }
                let best = hits.into_iter().max().unwrap_or(0);
                substitution = substitution.max(best as f64 / consistent.len() as f64);
            }
        }
    }

    let mut bit_flip_keys = 0;
    for i in 0..msgs.len() {
        for bit in 0..degree {
            let j = i ^ (1 << bit);
            let fooled = (0..keys.len()).filter(|&k| table[k][i] == table[k][j]).count();
            bit_flip_keys = bit_flip_keys.max(fooled);
        }
    }
    let bit_flip_allowance = (1usize << (degree - tag_len)) * tags;
    let bound = (-(tag_len as f64)).exp2();
    Ok(ForgeryReport {
        field_degree: degree,
        tag_len,
        keys: keys.len(),
        substitution,
        impersonation,
        bound,
        bit_flip_keys,
        bit_flip_allowance,
        holds: substitution <= bound && impersonation <= bound && bit_flip_keys <= bit_flip_allowance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractorReport {
    pub source_bits: usize,
    pub field_degree: usize,
    pub tag_len: usize,
    pub distance: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Exact distance of `(tag, key)` from `(uniform, key)` for a message
/// uniform on the `2^t` field elements whose leading `degree - t` bits are
/// zero. The mask `beta` only permutes tag values, so the distance is the
/// average over `alpha` alone; it is computed from integer counts.
pub fn mac_extractor_audit(source_bits: usize, degree: usize, tag_len: usize) -> Result<ExtractorReport, GaloisError> {
    if degree > MAC_AUDIT_MAX_DEGREE {
        return Err(GaloisError::InputTooLong { got: degree, max: MAC_AUDIT_MAX_DEGREE });
    }
    if source_bits > degree {
        return Err(GaloisError::InputTooLong { got: source_bits, max: degree });
    }
    if tag_len > degree {
        return Err(GaloisError::OutputTooLong { l: tag_len, degree });
    }
    let gf = FieldSpec::new(degree)?;
    let xs: Vec<Bits> = (0..1u64 << source_bits).map(|v| Bits::from_u64(v, degree)).collect();
    let zero_mask = Bits::zeros(tag_len);
    let tags = 1usize << tag_len;
    // sum over alpha of sum_t |count_t * 2^l - 2^t|, later scaled
    let mut total: u128 = 0;
    let mut counts = vec![0i64; tags];
    for alpha in gf.elements() {
        let k = MacKey::new(alpha, zero_mask.clone())?;
        counts.iter_mut().for_each(|c| *c = 0);
        for x in &xs {
            counts[mac_tag(&k, x)?.to_u64() as usize] += 1;
        }
        let target = 1i64 << source_bits;
        total += counts.iter().map(|&c| (c * tags as i64 - target).unsigned_abs() as u128).sum::<u128>();
    }
    // distance = 1/2 * avg_alpha sum_t |c_t / 2^t - 2^-l|
    let denom = 2.0 * (1u128 << degree) as f64 * (1u128 << source_bits) as f64 * tags as f64;
    let distance = total as f64 / denom;
    let bound = pa_bound(source_bits as f64, 0.0, 0.0, tag_len as f64);
    Ok(ExtractorReport { source_bits, field_degree: degree, tag_len, distance, bound, holds: distance <= bound })
}

/// Extractor audit for every `t <= max_t`, `l <= t`, with the field either
/// exactly `t` bits wide or one bit wider (capped at the audit limit).
pub fn mac_extractor_sweep(max_t: usize) -> Result<Vec<ExtractorReport>, GaloisError> {
    let mut out = Vec::new();
    for t in 1..=max_t.min(MAC_AUDIT_MAX_DEGREE) {
        let mut degrees = vec![t];
        if t < MAC_AUDIT_MAX_DEGREE {
            degrees.push(t + 1);
        }
        for &n in &degrees {
            for l in 1..=t {
                out.push(mac_extractor_audit(t, n, l)?);
            }
        }
    }
    Ok(out)
}
