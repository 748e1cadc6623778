//! Command-line front end. Exit codes: 0 success, 1 reject or violated
//! check, 2 usage or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qid_core::adversaries::{
    default_schedule, run_dishonest_server_experiment, run_impersonation_experiment, run_mitm_experiment,
    run_reuse_experiment, sj_distinctness_audit, sj_exhaustive, AttackLine, AttackSpec, ExperimentReport, Strategy,
};
use qid_core::analysis::bounds::{impersonation_epsilon, qidplus_epsilon};
use qid_core::analysis::{mac_extractor_sweep, mac_forgery_audit, run_sweeps, summarize, SweepPlan};
use qid_core::protocols::{run_session, Credentials, Forward, Mode, ProtocolConfig, SessionParams};
use qid_core::rng;
use serde_json::json;

use crate::config::{Config, ConfigError, KeyStore};
use crate::proxy::run_proxy;
use crate::transport::{self, Link, PartyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qid", version, about = "Password identification over a simulated BB84 channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Every configuration key as a flag; flags win over the config file.
#[derive(Debug, Args, Default)]
struct ConfigFlags {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    l: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    delta_tolerance: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    upstream: Option<String>,
    #[arg(long)]
    key_store: Option<String>,
    #[arg(long)]
    w: Option<String>,
    #[arg(long)]
    sk_len: Option<String>,
    #[arg(long)]
    flip_prob: Option<String>,
    #[arg(long)]
    closeness: Option<String>,
    #[arg(long)]
    target_d: Option<String>,
    #[arg(long)]
    code_seed: Option<String>,
    #[arg(long)]
    family_seed: Option<String>,
    #[arg(long)]
    timeout_ms: Option<String>,
}

impl ConfigFlags {
    fn resolve(&self) -> Result<Config, ConfigError> {
        let mut c = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        let flags = [
            ("mode", &self.mode),
            ("n", &self.n),
            ("m", &self.m),
            ("l", &self.l),
            ("lambda", &self.lambda),
            ("q", &self.q),
            ("phi", &self.phi),
            ("eta", &self.eta),
            ("delta_tolerance", &self.delta_tolerance),
            ("seed", &self.seed),
            ("endpoint", &self.endpoint),
            ("upstream", &self.upstream),
            ("key_store", &self.key_store),
            ("w", &self.w),
            ("sk_len", &self.sk_len),
            ("flip_prob", &self.flip_prob),
            ("closeness", &self.closeness),
            ("target_d", &self.target_d),
            ("code_seed", &self.code_seed),
            ("family_seed", &self.family_seed),
            ("timeout_ms", &self.timeout_ms),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, v)?;
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Role {
    /// Both parties in this process, no transport.
    Local,
    /// Both parties in this process over TCP on 127.0.0.1.
    Loopback,
    User,
    Server,
    Proxy,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bound calculators for the configured sizes.
    Params {
        #[command(flatten)]
        cfg: ConfigFlags,
    },
    /// One honest session, in memory or over the network.
    Run {
        #[command(flatten)]
        cfg: ConfigFlags,
        #[arg(long, value_enum, default_value = "local")]
        role: Role,
        /// Strategy applied by a proxy.
        #[arg(long, default_value = "honest")]
        attack: String,
        /// Write the JSON-lines transcript here.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Include qubit payloads and hidden channel values.
        #[arg(long)]
        reveal: bool,
    },
    /// A Monte-Carlo attack experiment.
    Attack {
        #[command(flatten)]
        cfg: ConfigFlags,
        /// Strategy text, or `reuse` for a reuse schedule of `--trials` sessions.
        #[arg(long)]
        attack: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// A key-distribution session; the key is appended to the key store.
    Qkd {
        #[command(flatten)]
        cfg: ConfigFlags,
        #[arg(long)]
        loopback: bool,
    },
    /// The analysis sweeps and exhaustive MAC audits.
    VerifyLemmas {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Distinctness of the candidate responses and the MAC forgery audit.
    Audit {
        #[command(flatten)]
        cfg: ConfigFlags,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// A failure carrying its exit code.
struct Fail(i32, String);

impl From<ConfigError> for Fail {
    fn from(e: ConfigError) -> Self {
        Fail(EXIT_USAGE, e.to_string())
    }
}

fn io_fail(e: impl std::fmt::Display) -> Fail {
    Fail(EXIT_REJECT, e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Results go to `out`, diagnostics to stderr.
pub fn run(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(out, "{e}");
            return code;
        }
    };
    let result = match cli.command {
        Command::Params { cfg } => params(&cfg, out),
        Command::Run { cfg, role, attack, transcript, reveal } => {
            run_cmd(&cfg, role, &attack, transcript.as_deref(), reveal, out)
        }
        Command::Attack { cfg, attack, trials, json, csv } => {
            attack_cmd(&cfg, &attack, trials, json.as_deref(), csv.as_deref(), out)
        }
        Command::Qkd { cfg, loopback } => qkd(&cfg, loopback, out),
        Command::VerifyLemmas { quick, seed, csv } => verify(quick, seed, csv.as_deref(), out),
        Command::Audit { cfg, trials, csv } => audit(&cfg, trials, csv.as_deref(), out),
    };
    match result {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn emit(out: &mut dyn Write, s: &str) -> Result<(), Fail> {
    writeln!(out, "{s}").map_err(io_fail)
}

fn params(flags: &ConfigFlags, out: &mut dyn Write) -> Result<i32, Fail> {
    let c = flags.resolve()?;
    let usage = |e: qid_core::analysis::bounds::BoundError| Fail(EXIT_USAGE, e.to_string());
    let imp = impersonation_epsilon(c.n, c.m, c.q, c.lambda).map_err(usage)?;
    let plus = qidplus_epsilon(c.n, c.m, c.q, c.lambda, None).map_err(usage)?;
    emit(out, &imp.to_json())?;
    emit(out, &plus.to_json())?;
    Ok(EXIT_OK)
}

fn credentials(c: &Config, p: &SessionParams) -> Result<Arc<Credentials>, Fail> {
    let store = match &c.key_store {
        Some(path) => KeyStore::open(path, p, c.w, rng::child_seed(c.seed, "credentials", 0))?,
        None => KeyStore::generate(p, c.w, rng::child_seed(c.seed, "credentials", 0))?,
    };
    let creds = store.credentials()?;
    creds.check(p).map_err(|e| Fail(EXIT_USAGE, e.to_string()))?;
    Ok(Arc::new(creds))
}

fn setup(flags: &ConfigFlags) -> Result<(Config, Arc<SessionParams>), Fail> {
    let c = flags.resolve()?;
    let p = c.validate()?;
    for w in c.warnings() {
        eprintln!("warning: {w}");
    }
    Ok((c, Arc::new(p)))
}

fn party_json(side: &str, r: &PartyReport) -> serde_json::Value {
    json!({
        "side": side,
        "accepted": r.decision.accepted(),
        "reason": r.decision.reason().name(),
        "frames_received": r.received().len(),
        "transport_error": r.transport_error,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    std::fs::write(path, text).map_err(io_fail)
}

fn run_cmd(
    flags: &ConfigFlags,
    role: Role,
    attack: &str,
    transcript: Option<&Path>,
    reveal: bool,
    out: &mut dyn Write,
) -> Result<i32, Fail> {
    let (c, p) = setup(flags)?;
    let ch = c.channel()?;
    let creds = credentials(&c, &p)?;
    let timeout = c.timeout();
    let code = |ok: bool| if ok { EXIT_OK } else { EXIT_REJECT };
    match role {
        Role::Local => {
            let o = run_session(&p, &creds, &creds, &ch, c.seed, &mut Forward);
            let jsonl = o.transcript.to_jsonl(reveal);
            if let Some(t) = transcript {
                write_file(t, &jsonl)?;
            }
            let user = o.user.decision.map(|d| d.reason().name());
            emit(out, &json!({ "mode": c.mode, "accepted": o.accepted(), "reason": o.server.reason().name(), "user": user }).to_string())?;
            Ok(code(o.accepted()))
        }
        Role::Loopback => {
            let (u, s) = transport::loopback_session(&p, &creds, &creds, &ch, c.seed, timeout).map_err(io_fail)?;
            if let Some(t) = transcript {
                write_file(t, &s.transcript.to_jsonl(reveal))?;
            }
            emit(out, &party_json("user", &u).to_string())?;
            emit(out, &party_json("server", &s).to_string())?;
            Ok(code(u.decision.accepted() && s.decision.accepted()))
        }
        Role::User => {
            let stream = transport::connect(&c.endpoint, timeout).map_err(io_fail)?;
            let mut link = Link::tcp(stream, Some(timeout)).map_err(io_fail)?;
            let r = transport::run_user(&mut link, &p, &creds, &ch, c.seed);
            if let Some(t) = transcript {
                write_file(t, &r.transcript.to_jsonl(reveal))?;
            }
            emit(out, &party_json("user", &r).to_string())?;
            Ok(code(r.decision.accepted()))
        }
        Role::Server => {
            let (listener, addr) = transport::bind(&c.endpoint).map_err(io_fail)?;
            eprintln!("listening on {addr}");
            let (stream, _) = listener.accept().map_err(io_fail)?;
            let mut link = Link::tcp(stream, Some(timeout)).map_err(io_fail)?;
            let r = transport::run_server(&mut link, &p, &creds, &ch, c.seed);
            if let Some(t) = transcript {
                write_file(t, &r.transcript.to_jsonl(reveal))?;
            }
            emit(out, &party_json("server", &r).to_string())?;
            Ok(code(r.decision.accepted()))
        }
        Role::Proxy => {
            let strategy = Strategy::parse(attack).map_err(|e| Fail(EXIT_USAGE, e.to_string()))?;
            let line = AttackLine::new(&strategy, &p, &ch, c.seed).map_err(|e| Fail(EXIT_USAGE, e.to_string()))?;
            let (listener, addr) = transport::bind(&c.endpoint).map_err(io_fail)?;
            eprintln!("proxy listening on {addr}, forwarding to {}", c.upstream);
            let (user, _) = listener.accept().map_err(io_fail)?;
            let server = transport::connect(&c.upstream, timeout).map_err(io_fail)?;
            // the proxy outlives both parties' phase timeouts
            let slack = Some(timeout * 3);
            let rep = run_proxy(
                Link::tcp(user, slack).map_err(io_fail)?,
                Link::tcp(server, slack).map_err(io_fail)?,
                line,
                p.n(),
            );
            let frames: Vec<_> = rep
                .entries
                .iter()
                .map(|e| json!({ "direction": e.direction, "frame": e.frame_type.name(), "forwarded": e.forwarded.len(), "tampered": e.tampered }))
                .collect();
            emit(out, &json!({ "attack": strategy.to_string(), "frames": frames, "failure": rep.failure }).to_string())?;
            Ok(EXIT_OK)
        }
    }
}

fn write_report(r: &ExperimentReport, json: Option<&Path>, csv: Option<&Path>) -> Result<(), Fail> {
    if let Some(p) = json {
        write_file(p, &r.to_json())?;
    }
    if let Some(p) = csv {
        let mut w = csv::Writer::from_path(p).map_err(io_fail)?;
        for row in &r.posterior {
            w.serialize(row).map_err(io_fail)?;
        }
        w.flush().map_err(io_fail)?;
    }
    Ok(())
}

fn attack_cmd(
    flags: &ConfigFlags,
    attack: &str,
    trials: usize,
    json_out: Option<&Path>,
    csv_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Fail> {
    let (c, p) = setup(flags)?;
    let ch = c.channel()?;
    let adv = |e: qid_core::adversaries::AdversaryError| Fail(EXIT_USAGE, e.to_string());
    let report = if attack == "reuse" {
        run_reuse_experiment(&p, &default_schedule(trials, c.mode), &ch, c.seed).map_err(adv)?
    } else {
        let strategy = Strategy::parse(attack).map_err(adv)?;
        let spec = AttackSpec::new(strategy.clone(), trials, c.seed);
        match strategy {
            Strategy::Honest | Strategy::GuessUser(_) => run_impersonation_experiment(&p, &spec, &ch),
            Strategy::GuessServer(_) => run_dishonest_server_experiment(&p, &spec, &ch),
            _ => run_mitm_experiment(&p, &spec, &ch),
        }
        .map_err(adv)?
    };
    write_report(&report, json_out, csv_out)?;
    emit(out, &report.to_json())?;
    Ok(if report.within_bound == Some(false) { EXIT_REJECT } else { EXIT_OK })
}

fn qkd(flags: &ConfigFlags, loopback: bool, out: &mut dyn Write) -> Result<i32, Fail> {
    let mut c = flags.resolve()?;
    c.mode = Mode::Qkd;
    let p = Arc::new(c.validate()?);
    let ch = c.channel()?;
    let creds = credentials(&c, &p)?;
    let (sk_user, sk_server) = if loopback {
        let (u, s) = transport::loopback_session(&p, &creds, &creds, &ch, c.seed, c.timeout()).map_err(io_fail)?;
        (u.sk, s.sk)
    } else {
        let o = run_session(&p, &creds, &creds, &ch, c.seed, &mut Forward);
        (o.user.decision.filter(|d| d.accepted()).and(o.user.sk), o.sk_server)
    };
    let agreed = matches!((&sk_user, &sk_server), (Some(a), Some(b)) if a == b);
    if agreed {
        if let Some(path) = &c.key_store {
            let mut store = KeyStore::load(path)?;
            store.keys.push(sk_server.as_ref().expect("agreed").to_string());
            store.save(path)?;
        }
    }
    emit(out, &json!({ "agreed": agreed, "sk": sk_server.map(|k| k.to_hex()), "digest": creds.digest() }).to_string())?;
    Ok(if agreed { EXIT_OK } else { EXIT_REJECT })
}

fn verify(quick: bool, seed: u64, csv_out: Option<&Path>, out: &mut dyn Write) -> Result<i32, Fail> {
    let start = Instant::now();
    let plan = if quick { SweepPlan::quick() } else { SweepPlan::full() };
    let rows = run_sweeps(&plan, seed);
    let mut failures = 0;
    for (name, count, bad) in summarize(&rows) {
        failures += bad;
        emit(out, &format!("{:<20} {count:>6} rows {bad:>4} failed", name))?;
    }
    let max_t = if quick { 6 } else { 10 };
    let ext = mac_extractor_sweep(max_t).map_err(io_fail)?;
    let ext_bad = ext.iter().filter(|r| !r.holds).count();
    emit(out, &format!("{:<20} {:>6} rows {ext_bad:>4} failed", "mac-extractor", ext.len()))?;
    let forge = mac_forgery_audit(4, 2).map_err(io_fail)?;
    emit(out, &format!("{:<20} {:>6} rows {:>4} failed", "mac-forgery", 1, usize::from(!forge.holds)))?;
    failures += ext_bad + usize::from(!forge.holds);
    if let Some(p) = csv_out {
        let mut w = csv::Writer::from_path(p).map_err(io_fail)?;
        for r in &rows {
            w.serialize(r).map_err(io_fail)?;
        }
        w.flush().map_err(io_fail)?;
    }
    emit(out, &format!("{} checks, {failures} failed, {:.1}s", rows.len() + ext.len() + 1, start.elapsed().as_secs_f64()))?;
    Ok(if failures == 0 { EXIT_OK } else { EXIT_REJECT })
}

fn audit(flags: &ConfigFlags, trials: usize, csv_out: Option<&Path>, out: &mut dyn Write) -> Result<i32, Fail> {
    let (c, p) = setup(flags)?;
    let adv = |e: qid_core::adversaries::AdversaryError| Fail(EXIT_REJECT, e.to_string());
    let sj = sj_distinctness_audit(&p, trials, c.seed, false).map_err(adv)?;
    let micro = SessionParams::build(ProtocolConfig::new(Mode::Qid, 4, 2, 1)).map_err(io_fail)?;
    let exact = sj_exhaustive(&micro, false).map_err(adv)?;
    let forge = mac_forgery_audit(4, 2).map_err(io_fail)?;
    let exact_ok = exact.probability <= exact.pairwise_bound;
    let rows = [
        ("sj-distinctness", sj.acceptance, sj.bound.unwrap_or(f64::NAN), sj.within_bound == Some(true)),
        ("sj-exhaustive", exact.probability, exact.pairwise_bound, exact_ok),
        ("mac-substitution", forge.substitution, forge.bound, forge.substitution <= forge.bound),
        ("mac-impersonation", forge.impersonation, forge.bound, forge.impersonation <= forge.bound),
        ("mac-bit-flip-keys", forge.bit_flip_keys as f64, forge.bit_flip_allowance as f64, forge.bit_flip_keys <= forge.bit_flip_allowance),
    ];
    let mut w = csv_out.map(csv::Writer::from_path).transpose().map_err(io_fail)?;
    if let Some(w) = w.as_mut() {
        w.write_record(["check", "value", "bound", "ok"]).map_err(io_fail)?;
    }
    for (name, value, bound, ok) in rows {
        emit(out, &format!("{name:<20} {value:<14.6e} bound {bound:<14.6e} {}", if ok { "ok" } else { "FAILED" }))?;
        if let Some(w) = w.as_mut() {
            w.write_record([name.to_string(), value.to_string(), bound.to_string(), ok.to_string()]).map_err(io_fail)?;
        }
    }
    if let Some(mut w) = w {
        w.flush().map_err(io_fail)?;
    }
    Ok(if rows.iter().all(|r| r.3) { EXIT_OK } else { EXIT_REJECT })
}
