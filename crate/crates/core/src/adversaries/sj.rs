//! Pairwise distinctness of the candidate responses
//! `S_j = f(x|I_j) xor g(j)`, one per password index.

use std::sync::Arc;

use super::stats::JointCounts;
use super::{par_trials, AdversaryError, ExperimentReport, Strategy};
use crate::bits::{Bases, Bits};
use crate::galois::{uhf_f_eval, uhf_g_eval, FieldElement, UhfF, UhfG};
use crate::protocols::{run_session, Credentials, Direction, Forward, Message, SessionOutcome, SessionParams};
use crate::qchannel::ChannelConfig;
use crate::rng;

/// `S_1, .., S_m` for the given string, bases and hash keys.
pub(crate) fn s_values(params: &SessionParams, x: &Bits, theta: &Bases, f: &UhfF, g: &UhfG) -> Vec<Bits> {
    params
        .basis_code
        .codewords()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let fx = uhf_f_eval(f, &x.restrict(&theta.agreement(c))).expect("restriction fits the domain");
            fx.xor(&uhf_g_eval(g, j as u64 + 1).expect("index in range"))
        })
        .collect()
}

pub(crate) fn has_collision(s: &[Bits]) -> bool {
    (0..s.len()).any(|i| (i + 1..s.len()).any(|j| s[i] == s[j]))
}

/// The classical values of a Q-ID style run as the server received them.
pub(crate) struct QidView {
    pub theta: Bases,
    pub f: UhfF,
    pub g: UhfG,
    pub z: Bits,
}

pub(crate) fn qid_view(params: &SessionParams, out: &SessionOutcome) -> Option<QidView> {
    let n = params.n();
    let decoded = |dir| {
        out.transcript
            .delivered(dir)
            .filter_map(move |(ft, p)| Message::decode(ft as u8, p, n).ok())
            .collect::<Vec<_>>()
    };
    let (mut theta_f, mut z, mut g) = (None, None, None);
    for m in decoded(Direction::ToServer) {
        match m {
            Message::ThetaF { theta, f } => theta_f = Some((theta, f)),
            Message::ThetaJSF { theta, f, .. } => theta_f = Some((theta, f)),
            Message::Z { z: v } => z = Some(v),
            Message::TestZTag { z: v, .. } => z = Some(v),
            _ => {}
        }
    }
    for m in decoded(Direction::ToUser) {
        match m {
            Message::G { a, b } | Message::TG { a, b, .. } => g = Some((a, b)),
            _ => {}
        }
    }
    let (theta, f) = theta_f?;
    let (a, b) = g?;
    let f = UhfF::new(params.f_field().element(&f).ok()?, params.l()).ok()?;
    let gf = UhfG::field(params.m(), params.l()).ok()?;
    let g = UhfG::new(gf.element(&a).ok()?, b, params.m()).ok()?;
    Some(QidView { theta, f, g, z: z? })
}

fn zero_multiplier(g: &UhfG) -> UhfG {
    let zero: FieldElement = g.a().field().zero();
    UhfG::new(zero, g.b().clone(), g.m()).expect("same shape")
}

/// Monte-Carlo audit over honest sessions: how often two of the `S_j`
/// coincide, against `m^2 / 2^(l+1)` plus three standard deviations. With
/// `degenerate_g` the multiplier of `g` is forced to zero, leaving only the
/// mask, and the report carries that caveat.
pub fn sj_distinctness_audit(
    params: &Arc<SessionParams>,
    trials: usize,
    seed: u64,
    degenerate_g: bool,
) -> Result<ExperimentReport, AdversaryError> {
    let key = super::experiments::honest_key(params, seed)?;
    let channel = ChannelConfig::noiseless(0);
    let results = par_trials(trials, |i| {
        let ts = rng::child_seed(seed, "trial", i as u64);
        let w = 1 + rng::child_seed(ts, "w", 0) % params.m();
        let creds = Arc::new(Credentials::new(w, key.clone()));
        let out = run_session(params, &creds, &creds, &channel, ts, &mut Forward);
        let view = qid_view(params, &out)?;
        let g = if degenerate_g { zero_multiplier(&view.g) } else { view.g };
        Some((w, has_collision(&s_values(params, &out.internals.x, &out.internals.theta, &view.f, &g))))
    });
    let mut report = ExperimentReport::new("sj-distinctness", &Strategy::Honest, params.mode(), seed);
    let mut counts = JointCounts::default();
    let mut collisions = 0;
    for (w, hit) in results.iter().flatten() {
        counts.add(*w, u64::from(*hit));
        collisions += usize::from(*hit);
    }
    let ran = counts.total();
    report.set_counts(ran, collisions, collisions);
    let m = params.m() as f64;
    let bound = m * m * (-(params.l() as f64 + 1.0)).exp2();
    let sigma = (bound * (1.0 - bound) / ran.max(1) as f64).sqrt();
    report.bound = Some(bound);
    report.within_bound = Some(report.acceptance <= bound + 3.0 * sigma);
    report.metrics.insert("collision_frequency".into(), report.acceptance);
    report.metrics.insert("sigma".into(), sigma);
    report.metrics.insert("skipped".into(), (trials - ran) as f64);
    report.notes.push("accepts counts trials with a collision among the S_j".into());
    if degenerate_g {
        report.notes.push("degenerate g key (a = 0): S_i and S_j collide whenever the f parts do".into());
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SjExhaustive {
    pub cases: u64,
    pub collisions: u64,
    pub probability: f64,
    /// `m (m-1) / 2 * 2^-l`.
    pub pairwise_bound: f64,
    pub degenerate_g: bool,
}

/// Exact collision probability of the `S_j` over every `x`, every `theta`
/// and every key of `f` and `g` (or only `a = 0` keys of `g`).
pub fn sj_exhaustive(params: &SessionParams, degenerate_g: bool) -> Result<SjExhaustive, AdversaryError> {
    let (n, l, m) = (params.n(), params.l(), params.m());
    let gf = UhfG::field(m, l)?;
    let g_mults: Vec<FieldElement> = if degenerate_g { vec![gf.zero()] } else { gf.elements().collect() };
    let cases = (1u64 << (3 * n)) * g_mults.len() as u64 * (1u64 << l);
    if n > 6 || cases > 1 << 24 {
        return Err(AdversaryError::Unsupported(format!("{cases} cases is too many to enumerate")));
    }
    let f_keys: Vec<UhfF> = params.f_field().elements().map(|a| UhfF::new(a, l)).collect::<Result<_, _>>()?;
    let g_keys: Vec<UhfG> = g_mults
        .iter()
        .flat_map(|a| (0..1u64 << l).map(move |b| (a.clone(), Bits::from_u64(b, l))))
        .map(|(a, b)| UhfG::new(a, b, m))
        .collect::<Result<_, _>>()?;
    let mut collisions = 0;
    for xv in 0..1u64 << n {
        let x = Bits::from_u64(xv, n);
        for tv in 0..1u64 << n {
            let theta = Bases::from_bits(Bits::from_u64(tv, n));
            for f in &f_keys {
                for g in &g_keys {
                    collisions += u64::from(has_collision(&s_values(params, &x, &theta, f, g)));
                }
            }
        }
    }
    Ok(SjExhaustive {
        cases,
        collisions,
        probability: collisions as f64 / cases as f64,
        pairwise_bound: (m * (m - 1)) as f64 / 2.0 * (-(l as f64)).exp2(),
        degenerate_g,
    })
}
