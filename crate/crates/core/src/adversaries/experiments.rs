//! Monte-Carlo experiments: a dishonest user, a dishonest server, an
//! attacker on the line, and long schedules that reuse one set of
//! credentials.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::sj::{qid_view, s_values};
use super::stats::{uniform_prior, within_binomial_bound, JointCounts, CONFIDENCE};
use super::{par_trials, AdversaryError, AttackLine, AttackSpec, ExperimentReport, Guess, PosteriorRow, Strategy};
use crate::analysis::bounds::guess_bound;
use crate::bits::Bits;
use crate::galois::{uhf_f_eval, uhf_g_eval, MacKey};
use crate::protocols::{
    run_session, Credentials, Decision, Direction, FrameType, Forward, Mode, Reason, ServerSession,
    SessionOutcome, SessionParams,
};
use crate::qchannel::ChannelConfig;
use crate::rng;

/// The long-lived key both honest parties hold, if the mode uses one.
pub(crate) fn honest_key(params: &SessionParams, seed: u64) -> Result<Option<MacKey>, AdversaryError> {
    if !params.mode().authenticated() {
        return Ok(None);
    }
    Ok(Some(params.random_mac_key(&mut rng::stream(seed, "mac-key", 0))?))
}

/// A key drawn by someone who does not know the honest one.
fn foreign_key(params: &SessionParams, ts: u64) -> Result<Option<MacKey>, AdversaryError> {
    if !params.mode().authenticated() {
        return Ok(None);
    }
    Ok(Some(params.random_mac_key(&mut rng::stream(ts, "attacker-key", 0))?))
}

fn trial_w(params: &SessionParams, ts: u64) -> u64 {
    1 + rng::child_seed(ts, "w", 0) % params.m()
}

fn guess_for(guess: Guess, w: u64, m: u64, ts: u64) -> u64 {
    match guess {
        Guess::Correct => w,
        Guess::Fixed(v) => v,
        Guess::UniformWrong => {
            let r = 1 + rng::child_seed(ts, "guess", 0) % (m - 1);
            if r < w {
                r
            } else {
                r + 1
            }
        }
    }
}

fn check_guess(guess: Guess, m: u64) -> Result<(), AdversaryError> {
    match guess {
        Guess::Fixed(v) if v == 0 || v > m => Err(AdversaryError::Unsupported(format!("guess {v} outside 1..={m}"))),
        Guess::UniformWrong if m < 2 => Err(AdversaryError::Unsupported("a wrong guess needs m >= 2".into())),
        _ => Ok(()),
    }
}

fn posterior_rows(counts: &JointCounts, m: u64) -> Vec<PosteriorRow> {
    let acc: usize = (1..=m).map(|w| counts.count(w, 1)).sum();
    let rej = counts.total() - acc;
    let share = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };
    (1..=m)
        .map(|w| {
            let (a, r) = (counts.count(w, 1), counts.count(w, 0));
            PosteriorRow { w, trials: a + r, accepts: a, given_accept: share(a, acc), given_reject: share(r, rej) }
        })
        .collect()
}

fn tally_reasons(report: &mut ExperimentReport, reasons: impl IntoIterator<Item = Reason>) {
    for r in reasons {
        *report.reasons.entry(r.name().to_string()).or_default() += 1;
    }
}

/// A user who does not know `w` (and, in the authenticated modes, not `k`)
/// claims `w'`. `Honest` and `GuessUser(Correct)` hand the user the real
/// credentials.
pub fn run_impersonation_experiment(
    params: &Arc<SessionParams>,
    attack: &AttackSpec,
    channel: &ChannelConfig,
) -> Result<ExperimentReport, AdversaryError> {
    let guess = match attack.strategy {
        Strategy::Honest => Guess::Correct,
        Strategy::GuessUser(g) => g,
        ref s => return Err(AdversaryError::Unsupported(format!("{s} is not a user strategy"))),
    };
    let m = params.m();
    check_guess(guess, m)?;
    let key = honest_key(params, attack.seed)?;
    let results = par_trials(attack.trials, |i| -> Result<_, AdversaryError> {
        let ts = rng::child_seed(attack.seed, "trial", i as u64);
        let w = trial_w(params, ts);
        let w_user = guess_for(guess, w, m, ts);
        let user_key = if guess == Guess::Correct { key.clone() } else { foreign_key(params, ts)? };
        let server = Arc::new(Credentials::new(w, key.clone()));
        let user = Arc::new(Credentials::new(w_user, user_key));
        let out = run_session(params, &user, &server, channel, ts, &mut Forward);
        Ok((w, w_user, out.server))
    });

    let mut report = ExperimentReport::new("impersonation", &attack.strategy, params.mode(), attack.seed);
    let mut counts = JointCounts::default();
    let (mut wrong, mut wrong_acc, mut matched, mut matched_acc) = (0usize, 0usize, 0usize, 0usize);
    for r in results {
        let (w, w_user, d) = r?;
        counts.add(w, u64::from(d.accepted()));
        tally_reasons(&mut report, [d.reason()]);
        if w_user == w {
            matched += 1;
            matched_acc += usize::from(d.accepted());
        } else {
            wrong += 1;
            wrong_acc += usize::from(d.accepted());
        }
    }
    let accepts = wrong_acc + matched_acc;
    report.set_counts(attack.trials, accepts, attack.trials - accepts);
    report.posterior = posterior_rows(&counts, m);
    let bound = guess_bound(m, params.l());
    report.bound = Some(bound);
    if wrong > 0 {
        report.within_bound = Some(within_binomial_bound(wrong_acc, wrong, bound, CONFIDENCE));
    }
    report.metrics.insert("wrong_trials".into(), wrong as f64);
    report.metrics.insert("wrong_accepts".into(), wrong_acc as f64);
    report.metrics.insert("matched_trials".into(), matched as f64);
    report.metrics.insert("matched_accepts".into(), matched_acc as f64);
    if wrong > 0 {
        report.metrics.insert("wrong_acceptance".into(), wrong_acc as f64 / wrong as f64);
    }
    if matched > 0 {
        report.metrics.insert("matched_acceptance".into(), matched_acc as f64 / matched as f64);
    }
    report.notes.push("bound applies to trials with a wrong guess".into());
    Ok(report)
}

/// What a non-authenticated server holding `w'` can compute from the run:
/// `z xor (f(x'|I_w') xor g(w'))`.
fn server_view_diff(params: &SessionParams, out: &SessionOutcome, w_server: u64) -> Option<Bits> {
    let view = qid_view(params, out)?;
    let cw = &params.basis_code.codewords()[(w_server - 1) as usize];
    let mine = out.internals.x_prime.restrict(&view.theta.agreement(cw));
    let z_own = uhf_f_eval(&view.f, &mine).ok()?.xor(&uhf_g_eval(&view.g, w_server).ok()?);
    Some(view.z.xor(&z_own))
}

/// The server claims `w'`, measures in its codeword and watches the honest
/// user's answers. Two statistics are audited over the trials with
/// `w' != w`: one the server can compute (whether `z` matches its own `z'`,
/// else the first bit of the difference) and one it cannot (the index `j`
/// with `S_j(x) = z`, using the user's `x`). The report's deviation is the
/// worst conditional total variation of the visible statistic.
pub fn run_dishonest_server_experiment(
    params: &Arc<SessionParams>,
    attack: &AttackSpec,
    channel: &ChannelConfig,
) -> Result<ExperimentReport, AdversaryError> {
    let Strategy::GuessServer(guess) = attack.strategy else {
        return Err(AdversaryError::Unsupported(format!("{} is not a server strategy", attack.strategy)));
    };
    if params.mode() != Mode::Qid {
        return Err(AdversaryError::Unsupported("the server audit reads plain Q-ID runs".into()));
    }
    let m = params.m();
    check_guess(guess, m)?;
    let results = par_trials(attack.trials, |i| {
        let ts = rng::child_seed(attack.seed, "trial", i as u64);
        let w = trial_w(params, ts);
        let w_server = guess_for(guess, w, m, ts);
        let user = Arc::new(Credentials::new(w, None));
        let server = Arc::new(Credentials::new(w_server, None));
        let out = run_session(params, &user, &server, channel, ts, &mut Forward);
        let diff = server_view_diff(params, &out, w_server);
        let view = qid_view(params, &out);
        let raw = view.map(|v| {
            let s = s_values(params, &out.internals.x, &out.internals.theta, &v.f, &v.g);
            s.iter().position(|s| *s == v.z).map_or(0, |j| j as u64 + 1)
        });
        (w, w_server, out.server, diff, raw)
    });

    let mut report = ExperimentReport::new("dishonest-server", &attack.strategy, params.mode(), attack.seed);
    let (mut visible, mut raw_counts, mut all) = (JointCounts::default(), JointCounts::default(), JointCounts::default());
    let (mut matched, mut matched_equal, mut false_matches) = (0usize, 0usize, 0usize);
    for (w, w_server, d, diff, raw) in &results {
        all.add(*w, u64::from(d.accepted()));
        tally_reasons(&mut report, [d.reason()]);
        let Some(diff) = diff else { continue };
        let equal = diff.weight() == 0;
        if w_server == w {
            matched += 1;
            matched_equal += usize::from(equal);
            continue;
        }
        false_matches += usize::from(equal);
        let stat = if equal { 2 } else { u64::from(diff.get(0)) };
        visible.add(*w, stat);
        if let Some(j) = raw {
            raw_counts.add(*w, *j);
        }
    }
    let accepts = results.iter().filter(|r| r.2.accepted()).count();
    report.set_counts(attack.trials, accepts, attack.trials - accepts);
    report.posterior = posterior_rows(&all, m);
    let tv = visible.max_conditional_tv();
    report.posterior_deviation = Some(tv);
    report.bound = Some(0.02);
    report.within_bound = (visible.total() > 0).then_some(tv <= 0.02);
    report.metrics.insert("visible_tv".into(), tv);
    report.metrics.insert("raw_tv".into(), raw_counts.max_conditional_tv());
    report.metrics.insert("audited_trials".into(), visible.total() as f64);
    report.metrics.insert("matched_trials".into(), matched as f64);
    report.metrics.insert("matched_z_equal".into(), matched_equal as f64);
    report.metrics.insert("false_matches".into(), false_matches as f64);
    report.notes.push("visible statistic: z against the server's own z' for its guess".into());
    report.notes.push("raw statistic uses the user's x, which no protocol role sees".into());
    report.notes.push("consistent with, not a proof of, the server-side guarantee for this strategy".into());
    Ok(report)
}

/// Replays the user's side of an earlier honest session (same `w`, same
/// key) to a fresh server.
fn replay_trial(
    params: &Arc<SessionParams>,
    creds: &Arc<Credentials>,
    channel: &ChannelConfig,
    ts: u64,
) -> Decision {
    let recorded = run_session(params, creds, creds, channel, rng::child_seed(ts, "recorded", 0), &mut Forward);
    let ch = ChannelConfig { seed: rng::child_seed(ts, "channel", 0), ..*channel };
    let mut server = ServerSession::new(params.clone(), creds.clone(), ts, &ch);
    for (ft, payload) in recorded.transcript.delivered(Direction::ToServer) {
        server.next_frame(ft as u8, payload);
        if server.is_done() {
            break;
        }
    }
    server.abort();
    server.decision().expect("aborted at the latest")
}

struct MitmTrial {
    w: u64,
    server: Decision,
    user: Option<Decision>,
    rerun: Option<bool>,
    fired: bool,
}

/// An attacker on the line between honest parties sharing `w` (and `k`).
/// Its view is the server's accept/reject announcement; the deviation is
/// `sum_o P(o) TV(P(w|o), uniform)`.
pub fn run_mitm_experiment(
    params: &Arc<SessionParams>,
    attack: &AttackSpec,
    channel: &ChannelConfig,
) -> Result<ExperimentReport, AdversaryError> {
    let s = &attack.strategy;
    if !matches!(
        s,
        Strategy::InterceptResend { .. } | Strategy::BitFlip { .. } | Strategy::BlockAbort(_) | Strategy::Replay
    ) {
        return Err(AdversaryError::Unsupported(format!("{s} is not a line strategy")));
    }
    // configuration errors surface once, not per trial
    AttackLine::new(s, params, channel, attack.seed)?;
    let key = honest_key(params, attack.seed)?;
    let results = par_trials(attack.trials, |i| -> Result<MitmTrial, AdversaryError> {
        let ts = rng::child_seed(attack.seed, "trial", i as u64);
        let w = trial_w(params, ts);
        let creds = Arc::new(Credentials::new(w, key.clone()));
        if *s == Strategy::Replay {
            let d = replay_trial(params, &creds, channel, ts);
            return Ok(MitmTrial { w, server: d, user: None, rerun: None, fired: true });
        }
        let mut line = AttackLine::new(s, params, channel, ts)?;
        let out = run_session(params, &creds, &creds, channel, ts, &mut line);
        let rerun = matches!(s, Strategy::BlockAbort(_)).then(|| {
            run_session(params, &creds, &creds, channel, rng::child_seed(ts, "rerun", 0), &mut Forward).accepted()
        });
        Ok(MitmTrial { w, server: out.server, user: out.user.decision, rerun, fired: line.fired() })
    });

    let mut report = ExperimentReport::new("mitm", s, params.mode(), attack.seed);
    let mut counts = JointCounts::default();
    let (mut accepts, mut both_terminal, mut reruns, mut rerun_ok, mut fired) = (0, 0, 0, 0, 0);
    for r in results {
        let t = r?;
        counts.add(t.w, u64::from(t.server.accepted()));
        accepts += usize::from(t.server.accepted());
        tally_reasons(&mut report, [t.server.reason()]);
        both_terminal += usize::from(t.user.is_some());
        fired += usize::from(t.fired);
        if let Some(ok) = t.rerun {
            reruns += 1;
            rerun_ok += usize::from(ok);
        }
    }
    let trials = attack.trials;
    report.set_counts(trials, accepts, trials - accepts);
    report.posterior = posterior_rows(&counts, params.m());
    report.posterior_deviation = Some(counts.posterior_deviation(&uniform_prior(params.m())));
    report.metrics.insert("sigma".into(), (0.25 / trials.max(1) as f64).sqrt());
    report.metrics.insert("rejection".into(), 1.0 - report.acceptance);
    report.metrics.insert("fired".into(), fired as f64);
    if *s == Strategy::Replay {
        let bound = (-(params.l() as f64)).exp2();
        report.bound = Some(bound);
        report.within_bound = Some(within_binomial_bound(accepts, trials, bound, CONFIDENCE));
    } else {
        report.metrics.insert("both_terminal".into(), both_terminal as f64);
    }
    if reruns > 0 {
        report.metrics.insert("rerun_acceptance".into(), rerun_ok as f64 / reruns as f64);
        let digest = Credentials::new(1, key.clone()).digest();
        let unchanged = Credentials::new(1, key).digest() == digest;
        report.metrics.insert("digest_unchanged".into(), f64::from(u8::from(unchanged)));
    }
    report.notes.push("attacker view: the server's announced decision".into());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleEntry {
    Honest,
    Attack(Strategy),
}

/// `k` sessions: even slots honest, odd slots cycling through a bit flip on
/// `z`, full intercept-resend, blocking `g`, a wrong-password user and a
/// replay.
pub fn default_schedule(k: usize, mode: Mode) -> Vec<ScheduleEntry> {
    let (z_flip, g_frame) = if mode.authenticated() {
        (Strategy::BitFlip { frame: FrameType::TestZTag, field: 1, bit: 0 }, FrameType::TG)
    } else {
        (Strategy::BitFlip { frame: FrameType::Z, field: 0, bit: 0 }, FrameType::G)
    };
    let attacks = [
        z_flip,
        Strategy::InterceptResend { positions: super::Positions::All, bases: super::BasesRule::Random },
        Strategy::BlockAbort(g_frame),
        Strategy::GuessUser(Guess::UniformWrong),
        Strategy::Replay,
    ];
    (0..k)
        .map(|i| if i % 2 == 0 { ScheduleEntry::Honest } else { ScheduleEntry::Attack(attacks[(i / 2) % attacks.len()].clone()) })
        .collect()
}

/// Runs the schedule in order with one fixed `(w, k)`. The honest sessions
/// must all accept, the credential digest must never change, and in
/// key-distribution mode the keys of successful sessions must be pairwise
/// distinct.
pub fn run_reuse_experiment(
    params: &Arc<SessionParams>,
    schedule: &[ScheduleEntry],
    channel: &ChannelConfig,
    seed: u64,
) -> Result<ExperimentReport, AdversaryError> {
    let m = params.m();
    let w = 1 + rng::child_seed(seed, "w", 0) % m;
    let creds = Arc::new(Credentials::new(w, honest_key(params, seed)?));
    let digest = creds.digest();
    let mut report = ExperimentReport::new("reuse", &Strategy::Honest, params.mode(), seed);
    report.attack = "schedule".into();
    let (mut honest, mut honest_ok, mut attacked, mut attacked_failed, mut digest_changes) = (0, 0, 0, 0, 0);
    let mut keys: Vec<Bits> = Vec::new();
    let mut accepts = 0;
    for (i, entry) in schedule.iter().enumerate() {
        let ts = rng::child_seed(seed, "session", i as u64);
        let decision = match entry {
            ScheduleEntry::Honest => {
                let out = run_session(params, &creds, &creds, channel, ts, &mut Forward);
                honest += 1;
                honest_ok += usize::from(out.accepted());
                if let (Some(sk), Some(d)) = (&out.sk_server, out.user.decision) {
                    if d.accepted() && out.user.sk.as_ref() == Some(sk) {
                        keys.push(sk.clone());
                    }
                }
                out.server
            }
            ScheduleEntry::Attack(s) => {
                attacked += 1;
                let d = match s {
                    Strategy::Replay => replay_trial(params, &creds, channel, ts),
                    Strategy::GuessUser(g) => {
                        check_guess(*g, m)?;
                        let user = Arc::new(Credentials::new(guess_for(*g, w, m, ts), foreign_key(params, ts)?));
                        run_session(params, &user, &creds, channel, ts, &mut Forward).server
                    }
                    Strategy::Honest => run_session(params, &creds, &creds, channel, ts, &mut Forward).server,
                    Strategy::GuessServer(_) => {
                        return Err(AdversaryError::Unsupported("server guesses do not fit a schedule".into()))
                    }
                    _ => {
                        let mut line = AttackLine::new(s, params, channel, ts)?;
                        run_session(params, &creds, &creds, channel, ts, &mut line).server
                    }
                };
                attacked_failed += usize::from(!d.accepted());
                d
            }
        };
        accepts += usize::from(decision.accepted());
        tally_reasons(&mut report, [decision.reason()]);
        digest_changes += usize::from(creds.digest() != digest);
    }
    report.set_counts(schedule.len(), accepts, schedule.len() - accepts);
    let distinct = keys.iter().map(Bits::to_hex).collect::<BTreeSet<_>>().len();
    report.within_bound = Some(honest_ok == honest && digest_changes == 0 && distinct == keys.len());
    report.metrics.insert("honest_sessions".into(), honest as f64);
    report.metrics.insert("honest_accepts".into(), honest_ok as f64);
    report.metrics.insert("attacked_sessions".into(), attacked as f64);
    report.metrics.insert("attacked_failures".into(), attacked_failed as f64);
    report.metrics.insert("digest_changes".into(), digest_changes as f64);
    report.metrics.insert("keys".into(), keys.len() as f64);
    report.metrics.insert("distinct_keys".into(), distinct as f64);
    report.notes.push(format!("credential digest {digest}"));
    Ok(report)
}
