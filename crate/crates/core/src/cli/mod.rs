//! The `latticerec` command line: `check`, `eval`, `trace`, `paths` and `extend`.
//!
//! Every invocation prints one JSON document to stdout, errors included.
//! Exit codes: 0 ok, 1 incompatible or paths disagree, 2 verdict only
//! sampled, 3 usage, 4 config parse, 5 evaluation error.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::autonomous::{AutonomousSystem, CompatStatus, EvalOptions, Grid};
use crate::closedforms::{
    eval_matrix_system, eval_monoid, IntegerAdditive, MonoidActionSystem, PositiveRationalMul,
};
use crate::extension::{backward_extension_pair, eval_anywhere_traced, BackwardExtension};
use crate::lattice::MultiIndex;
use crate::nonautonomous::NonAutonomousSystem;
use crate::statespace::{
    FiniteMonoid, Matrix, MatrixRule, Residue, Rule, State, StateSpace, Translate,
};
use crate::Error;

pub use config::{parse_config, BuiltSystem, ConfigError, Kind, SystemConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INCOMPATIBLE: i32 = 1;
pub const EXIT_SAMPLED: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_PARSE: i32 = 4;
pub const EXIT_EVAL: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "latticerec",
    version,
    about = "Exact multitime recurrences on Z^m"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the maps commute (timed systems: over a window of times).
    Check(CheckArgs),
    /// Evaluate x(t) from x(t0) = x0.
    Eval(EvalArgs),
    /// Fill every state of the box [t0, corner].
    Trace(TraceArgs),
    /// Walk every monotone path from t0 to t and compare the endpoints.
    Paths(PathsArgs),
    /// Extend x(t0) = x0 one step back along an axis (finite autonomous systems).
    Extend(ExtendArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON system config; read from stdin when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's path cap.
    #[arg(long)]
    path_cap: Option<usize>,
    /// Override the config's volume cap.
    #[arg(long)]
    volume_cap: Option<u64>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Lower corner of the time window for timed systems (default t1).
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    /// Upper corner of the time window for timed systems (default t0 + 3 in every axis).
    #[arg(long, allow_hyphen_values = true)]
    corner: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Initial time, comma-separated (default 0 or t1).
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    /// Initial state.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Target time, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    t: String,
    /// Permit targets that are not >= t0 (needs bijective maps).
    #[arg(long)]
    allow_negative: bool,
    /// Evaluate even when the maps do not commute.
    #[arg(long)]
    unsafe_incompatible: bool,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    /// Initial time, comma-separated (default 0 or t1).
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    /// Initial state.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Upper corner of the box.
    #[arg(long, allow_hyphen_values = true)]
    corner: String,
    /// Evaluate even when the maps do not commute.
    #[arg(long)]
    unsafe_incompatible: bool,
    /// Also write the grid as CSV to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PathsArgs {
    #[command(flatten)]
    common: Common,
    /// Initial time, comma-separated (default 0 or t1).
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    /// Initial state.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Target time, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    t: String,
}

#[derive(Args, Debug)]
struct ExtendArgs {
    #[command(flatten)]
    common: Common,
    /// Initial time, comma-separated (default 0).
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    /// Initial state.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Axis to step back along (1-based).
    #[arg(long)]
    axis: usize,
}

/// What one invocation printed and how it exited.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Doc {
    code: i32,
    status: String,
    compatibility: Value,
    payload: Value,
    route: Value,
}

struct Failure {
    code: i32,
    payload: Value,
    message: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        let message = msg.into();
        Failure {
            code: EXIT_USAGE,
            payload: json!({ "error": "usage", "message": message }),
            message,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Incompatible { .. } | Error::NonCommuting { .. } => EXIT_INCOMPATIBLE,
            _ => EXIT_EVAL,
        };
        let mut payload = Map::new();
        payload.insert("error".into(), json!(report::error_kind(&e)));
        payload.insert("message".into(), json!(e.to_string()));
        payload.extend(report::error_details(&e));
        Failure {
            code,
            payload: Value::Object(payload),
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let payload = match &e {
            ConfigError::Syntax {
                line,
                column,
                message,
            } => {
                json!({ "error": "config_syntax", "line": line, "column": column, "message": message })
            }
            ConfigError::Invalid(errors) => json!({ "error": "config_invalid", "errors": errors }),
        };
        Failure {
            code: EXIT_PARSE,
            payload,
            message: e.to_string(),
        }
    }
}

fn render(
    command: &str,
    digest: Option<&str>,
    status: &str,
    compat: Value,
    payload: Value,
    route: Value,
) -> String {
    let doc = json!({
        "command": command,
        "config_digest": digest.map_or(Value::Null, |d| json!(format!("sha256:{d}"))),
        "status": status,
        "compatibility": compat,
        "payload": payload,
        "route": route,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("values serialize");
    s.push('\n');
    s
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I, stdin: &mut dyn Read) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                };
            }
            let f = Failure::usage(text.trim_end());
            return Outcome {
                code: f.code,
                stdout: render("usage", None, "error", Value::Null, f.payload, Value::Null),
                stderr: text,
            };
        }
    };
    let (name, common) = match &cli.command {
        Command::Check(a) => ("check", &a.common),
        Command::Eval(a) => ("eval", &a.common),
        Command::Trace(a) => ("trace", &a.common),
        Command::Paths(a) => ("paths", &a.common),
        Command::Extend(a) => ("extend", &a.common),
    };
    let text = match read_config(common, stdin) {
        Ok(t) => t,
        Err(f) => return failure(name, None, f),
    };
    let digest = config::digest(&text);
    let cfg = match parse_config(&text).map(|c| override_limits(c, common)) {
        Ok(c) => c,
        Err(e) => return failure(name, Some(&digest), e.into()),
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(&cfg, a),
        Command::Eval(a) => cmd_eval(&cfg, a),
        Command::Trace(a) => cmd_trace(&cfg, a),
        Command::Paths(a) => cmd_paths(&cfg, a),
        Command::Extend(a) => cmd_extend(&cfg, a),
    };
    match result {
        Ok(doc) => Outcome {
            code: doc.code,
            stdout: render(
                name,
                Some(&digest),
                &doc.status,
                doc.compatibility,
                doc.payload,
                doc.route,
            ),
            stderr: String::new(),
        },
        Err(f) => failure(name, Some(&digest), f),
    }
}

fn failure(command: &str, digest: Option<&str>, f: Failure) -> Outcome {
    Outcome {
        code: f.code,
        stdout: render(
            command,
            digest,
            "error",
            Value::Null,
            f.payload,
            Value::Null,
        ),
        stderr: format!("latticerec: {}\n", f.message),
    }
}

fn read_config(common: &Common, stdin: &mut dyn Read) -> Result<String, Failure> {
    match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display()))),
        None => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| Failure::usage(format!("cannot read stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn override_limits(mut cfg: SystemConfig, common: &Common) -> SystemConfig {
    if let Some(c) = common.path_cap {
        cfg.limits.path_cap = c;
    }
    if let Some(c) = common.volume_cap {
        cfg.limits.volume_cap = c;
    }
    cfg.system = match cfg.system {
        BuiltSystem::Autonomous(s) => BuiltSystem::Autonomous(s.with_limits(cfg.limits)),
        BuiltSystem::NonAutonomous(s) => BuiltSystem::NonAutonomous(s.with_limits(cfg.limits)),
    };
    cfg
}

fn index_arg(s: &str, m: usize, flag: &str) -> Result<MultiIndex, Failure> {
    report::parse_index(s, m).map_err(|e| Failure::usage(format!("--{flag}: {e}")))
}

fn state_arg(space: &StateSpace, s: &str) -> Result<State, Failure> {
    report::parse_state(space, s).map_err(|e| Failure::usage(format!("--x0: {e}")))
}

/// `t0` from the flag, else the origin (autonomous) or `t1` (timed).
fn t0_arg(cfg: &SystemConfig, flag: Option<&str>) -> Result<MultiIndex, Failure> {
    match (flag, &cfg.system) {
        (Some(s), _) => index_arg(s, cfg.dimension, "t0"),
        (None, BuiltSystem::NonAutonomous(sys)) => Ok(sys.t1().clone()),
        (None, BuiltSystem::Autonomous(_)) => Ok(MultiIndex::zeros(cfg.dimension)?),
    }
}

fn verdict_code(status: CompatStatus) -> i32 {
    match status {
        CompatStatus::Compatible => EXIT_OK,
        CompatStatus::Incompatible => EXIT_INCOMPATIBLE,
        CompatStatus::SampledCompatible => EXIT_SAMPLED,
    }
}

fn summary(cfg: &SystemConfig) -> Value {
    json!({
        "kind": cfg.kind.as_str(),
        "dimension": cfg.dimension,
        "state_space": cfg.space.to_string(),
    })
}

fn autonomous_compat(sys: &AutonomousSystem) -> Result<(CompatStatus, Value), Failure> {
    let r = sys.compatibility()?;
    Ok((r.status, report::compat_json(r, sys.maps())))
}

fn timed_compat(
    sys: &NonAutonomousSystem,
    lo: &MultiIndex,
    hi: &MultiIndex,
) -> Result<(CompatStatus, Value), Failure> {
    let r = sys.check_compatibility_timed(lo, hi, None)?;
    let json = report::timed_compat_json(&r, sys, lo, hi);
    Ok((r.status, json))
}

/// Refuses an incompatible timed window unless overridden.
fn timed_gate(
    status: CompatStatus,
    compat: &Value,
    unsafe_incompatible: bool,
) -> Result<(), Failure> {
    if status != CompatStatus::Incompatible || unsafe_incompatible {
        return Ok(());
    }
    let w = &compat["witnesses"][0];
    let as_usize = |v: &Value| v.as_u64().unwrap_or(0) as usize;
    Err(Error::Incompatible {
        alpha: as_usize(&w["alpha"]),
        beta: as_usize(&w["beta"]),
        state: format!("{} at t = {}", w["state"], w["t"]),
    }
    .into())
}

/// Componentwise min and max of two multi-indices.
fn hull(a: &MultiIndex, b: &MultiIndex) -> Result<(MultiIndex, MultiIndex), Failure> {
    let lo: Vec<i64> = a
        .coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| *x.min(y))
        .collect();
    let hi: Vec<i64> = a
        .coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| *x.max(y))
        .collect();
    Ok((MultiIndex::new(lo)?, MultiIndex::new(hi)?))
}

fn cmd_check(cfg: &SystemConfig, a: &CheckArgs) -> Result<Doc, Failure> {
    let (status, compat) = match &cfg.system {
        BuiltSystem::Autonomous(sys) => {
            if a.t0.is_some() || a.corner.is_some() {
                return Err(Failure::usage(
                    "--t0 and --corner set the time window of timed systems only",
                ));
            }
            autonomous_compat(sys)?
        }
        BuiltSystem::NonAutonomous(sys) => {
            let lo = t0_arg(cfg, a.t0.as_deref())?;
            let hi = match &a.corner {
                Some(c) => index_arg(c, cfg.dimension, "corner")?,
                None => lo.checked_add(&MultiIndex::splat(3, cfg.dimension)?)?,
            };
            timed_compat(sys, &lo, &hi)?
        }
    };
    Ok(Doc {
        code: verdict_code(status),
        status: status.as_str().into(),
        compatibility: compat,
        payload: summary(cfg),
        route: Value::Null,
    })
}

fn cmd_eval(cfg: &SystemConfig, a: &EvalArgs) -> Result<Doc, Failure> {
    let m = cfg.dimension;
    let t0 = t0_arg(cfg, a.t0.as_deref())?;
    let t = index_arg(&a.t, m, "t")?;
    let x0 = state_arg(&cfg.space, &a.x0)?;
    let forward = t0.leq(&t)?;
    if !forward && !a.allow_negative {
        return Err(Failure {
            code: EXIT_EVAL,
            payload: json!({
                "error": "negative_time",
                "message": format!("t = {t} is not >= t0 = {t0}; pass --allow-negative"),
            }),
            message: format!("t = {t} is not >= t0 = {t0}; pass --allow-negative"),
        });
    }
    let opts = EvalOptions {
        unsafe_incompatible: a.unsafe_incompatible,
    };
    let (state, compat, route) = match &cfg.system {
        BuiltSystem::Autonomous(sys) => {
            let (status, compat) = autonomous_compat(sys)?;
            let direct = status != CompatStatus::Incompatible
                && matches!(cfg.kind, Kind::Monoid | Kind::Matrix);
            let (state, route) = if direct {
                eval_direct(cfg, sys, &t0, &x0, &t)?
            } else {
                let ev = if forward {
                    sys.eval_forward_traced(&t0, &x0, &t, opts)?
                } else {
                    eval_anywhere_traced(sys, &t0, &x0, &t, opts)?
                };
                let steps: Vec<Value> = ev
                    .route
                    .iter()
                    .map(|s| json!({ "axis": s.axis, "exponent": s.exponent, "method": s.method.as_str() }))
                    .collect();
                let route = json!({
                    "method": if forward { "closed_form" } else { "closed_form_signed" },
                    "order": "G_m applied first",
                    "powers": steps,
                    "unsafe_incompatible": ev.unsafe_override,
                });
                (ev.state, route)
            };
            (state, compat, route)
        }
        BuiltSystem::NonAutonomous(sys) => {
            let (lo, hi) = hull(&t0, &t)?;
            let (status, compat) = timed_compat(sys, &lo, &hi)?;
            timed_gate(status, &compat, a.unsafe_incompatible)?;
            let state = if forward {
                sys.eval_timed(&t0, &x0, &t)?
            } else {
                sys.eval_timed_anywhere(&t0, &x0, &t)?
            };
            let steps: i64 = t.checked_sub(&t0)?.coords().iter().map(|d| d.abs()).sum();
            let route = json!({
                "method": if forward { "path_walk" } else { "path_walk_signed" },
                "path": "axis 1 first",
                "steps": steps,
                "unsafe_incompatible": status == CompatStatus::Incompatible,
            });
            (state, compat, route)
        }
    };
    Ok(Doc {
        code: EXIT_OK,
        status: "ok".into(),
        compatibility: compat,
        payload: json!({
            "t0": report::index_json(&t0),
            "x0": report::state_json(&x0),
            "t": report::index_json(&t),
            "x": report::state_json(&state),
        }),
        route,
    })
}

/// Monoid and matrix kinds: one product of powers, then a single action.
fn eval_direct(
    cfg: &SystemConfig,
    sys: &AutonomousSystem,
    t0: &MultiIndex,
    x0: &State,
    t: &MultiIndex,
) -> Result<(State, Value), Failure> {
    cfg.space.check(x0)?;
    let exponents: Vec<i64> = t.checked_sub(t0)?.coords().to_vec();
    let caps = cfg.limits.exponents;
    let rules: Vec<&Rule> = sys.maps().iter().map(|g| g.rule()).collect();
    let translates = || -> Vec<&Translate> {
        rules
            .iter()
            .filter_map(|r| match r {
                Rule::MonoidTranslate(tr) => Some(tr),
                _ => None,
            })
            .collect()
    };
    let matrices = || -> Vec<&MatrixRule> {
        rules
            .iter()
            .filter_map(|r| match r {
                Rule::MatrixLinear(mr) => Some(mr),
                _ => None,
            })
            .collect()
    };
    let (state, family) = match (&cfg.space, x0) {
        (StateSpace::IntegerLine, State::Int(x)) => {
            let els: Vec<BigInt> = translates()
                .into_iter()
                .filter_map(|tr| match tr {
                    Translate::IntegerAdd(g) => Some(g.clone()),
                    _ => None,
                })
                .collect();
            let ms = MonoidActionSystem::new(IntegerAdditive, els)?.with_caps(caps);
            (
                State::Int(eval_monoid(&ms, t0, x, t)?),
                "integers under addition",
            )
        }
        (StateSpace::RationalLine, State::Rational(x)) => {
            let els: Vec<BigRational> = translates()
                .into_iter()
                .filter_map(|tr| match tr {
                    Translate::RationalMul(g) => Some(g.clone()),
                    _ => None,
                })
                .collect();
            let ms = MonoidActionSystem::new(PositiveRationalMul, els)?.with_caps(caps);
            (
                State::Rational(eval_monoid(&ms, t0, x, t)?),
                "positive rationals under multiplication",
            )
        }
        (StateSpace::Finite(_), State::Label(x)) => {
            let mut monoid: Option<FiniteMonoid> = None;
            let mut els = Vec::new();
            for tr in translates() {
                if let Translate::Finite {
                    monoid: mo,
                    element,
                } = tr
                {
                    monoid = Some((**mo).clone());
                    els.push(*element);
                }
            }
            let monoid = monoid.ok_or(Error::InvalidMonoid("no table".into()))?;
            let ms = MonoidActionSystem::new(monoid, els)?.with_caps(caps);
            (State::Label(eval_monoid(&ms, t0, x, t)?), "finite table")
        }
        (StateSpace::RationalVector(_), State::RatVec(x)) => {
            let mats: Vec<Matrix<BigRational>> = matrices()
                .into_iter()
                .filter_map(|mr| match mr {
                    MatrixRule::Rational(m) => Some(m.clone()),
                    _ => None,
                })
                .collect();
            let y = eval_matrix_system(&mats, t0, x, t, Some(caps.exact))?;
            let state = State::RatVec(y);
            cfg.space.check(&state)?;
            (state, "matrices over Q")
        }
        (StateSpace::IntegerVector(_), State::IntVec(x)) => {
            let mats: Vec<Matrix<BigRational>> = matrices()
                .into_iter()
                .filter_map(|mr| match mr {
                    MatrixRule::Rational(m) => Some(m.clone()),
                    _ => None,
                })
                .collect();
            let xr: Vec<BigRational> = x.iter().cloned().map(BigRational::from_integer).collect();
            let y = eval_matrix_system(&mats, t0, &xr, t, Some(caps.exact))?;
            if let Some(bad) = y.iter().find(|v| !v.is_integer()) {
                return Err(Error::StateOutsideDomain {
                    state: crate::statespace::exact::fmt_rational(bad),
                    space: cfg.space.to_string(),
                }
                .into());
            }
            (
                State::IntVec(y.into_iter().map(|v| v.to_integer()).collect()),
                "integer matrices",
            )
        }
        (StateSpace::ModularVector { modulus, .. }, State::ResVec(x)) => {
            let mats: Vec<Matrix<Residue>> = matrices()
                .into_iter()
                .filter_map(|mr| match mr {
                    MatrixRule::Modular(m) => Some(m.clone()),
                    _ => None,
                })
                .collect();
            let xr: Vec<Residue> = x.iter().map(|&v| Residue::new(v, *modulus)).collect();
            let y = eval_matrix_system(&mats, t0, &xr, t, Some(caps.modular))?;
            (
                State::ResVec(y.into_iter().map(Residue::value).collect()),
                "matrices mod p",
            )
        }
        _ => {
            return Err(Error::StateOutsideDomain {
                state: x0.to_string(),
                space: cfg.space.to_string(),
            }
            .into())
        }
    };
    let route = json!({
        "method": if cfg.kind == Kind::Monoid { "monoid_product" } else { "matrix_product" },
        "family": family,
        "exponents": exponents,
    });
    Ok((state, route))
}

fn cmd_trace(cfg: &SystemConfig, a: &TraceArgs) -> Result<Doc, Failure> {
    let t0 = t0_arg(cfg, a.t0.as_deref())?;
    let corner = index_arg(&a.corner, cfg.dimension, "corner")?;
    let x0 = state_arg(&cfg.space, &a.x0)?;
    let opts = EvalOptions {
        unsafe_incompatible: a.unsafe_incompatible,
    };
    let (grid, compat): (Grid, Value) = match &cfg.system {
        BuiltSystem::Autonomous(sys) => {
            let (_, compat) = autonomous_compat(sys)?;
            (sys.eval_box_with(&t0, &x0, &corner, opts)?, compat)
        }
        BuiltSystem::NonAutonomous(sys) => {
            if !t0.leq(&corner)? {
                return Err(Error::NotComparable {
                    from: t0,
                    to: corner,
                }
                .into());
            }
            let (status, compat) = timed_compat(sys, &t0, &corner)?;
            timed_gate(status, &compat, a.unsafe_incompatible)?;
            (sys.eval_box_timed(&t0, &x0, &corner)?, compat)
        }
    };
    if let Some(path) = &a.csv {
        let file = std::fs::File::create(path)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
        report::write_grid_csv(&grid, std::io::BufWriter::new(file))?;
    }
    Ok(Doc {
        code: EXIT_OK,
        status: "ok".into(),
        compatibility: compat,
        payload: report::grid_json(&grid)?,
        route: json!({
            "method": "grid_sweep",
            "cells": grid.states.len(),
            "spot_checked": ["t0", "corner"],
        }),
    })
}

fn cmd_paths(cfg: &SystemConfig, a: &PathsArgs) -> Result<Doc, Failure> {
    let t0 = t0_arg(cfg, a.t0.as_deref())?;
    let t = index_arg(&a.t, cfg.dimension, "t")?;
    let x0 = state_arg(&cfg.space, &a.x0)?;
    let cap = cfg.limits.path_cap;
    let (rep, compat) = match &cfg.system {
        BuiltSystem::Autonomous(sys) => {
            let (_, compat) = autonomous_compat(sys)?;
            (sys.path_independence_check(&t0, &x0, &t, cap)?, compat)
        }
        BuiltSystem::NonAutonomous(sys) => {
            if !t0.leq(&t)? {
                return Err(Error::NotComparable { from: t0, to: t }.into());
            }
            let (_, compat) = timed_compat(sys, &t0, &t)?;
            (sys.path_independence_timed(&t0, &x0, &t, cap)?, compat)
        }
    };
    Ok(Doc {
        code: if rep.agree {
            EXIT_OK
        } else {
            EXIT_INCOMPATIBLE
        },
        status: if rep.agree { "agree" } else { "disagree" }.into(),
        compatibility: compat,
        payload: report::paths_json(&rep),
        route: json!({ "method": "path_enumeration", "paths": rep.count, "cap": cap }),
    })
}

fn cmd_extend(cfg: &SystemConfig, a: &ExtendArgs) -> Result<Doc, Failure> {
    let BuiltSystem::Autonomous(sys) = &cfg.system else {
        return Err(Failure::usage("extend needs an autonomous system"));
    };
    let t0 = t0_arg(cfg, a.t0.as_deref())?;
    let x0 = state_arg(&cfg.space, &a.x0)?;
    let (_, compat) = autonomous_compat(sys)?;
    let ext = backward_extension_pair(sys, &t0, &x0, a.axis)?;
    let (status, payload) = match &ext {
        BackwardExtension::Unique {
            axis,
            base,
            value,
            bijective,
        } => (
            "unique",
            json!({
                "axis": axis,
                "base": report::index_json(base),
                "value": report::state_json(value),
                "bijective": bijective,
            }),
        ),
        BackwardExtension::NonUnique(pair) => {
            let first_t0 = pair.first(&t0)?;
            let second_t0 = pair.second(&t0)?;
            (
                "non_unique",
                json!({
                    "axis": pair.axis,
                    "base": report::index_json(&pair.base),
                    "first": report::state_json(&pair.p),
                    "second": report::state_json(&pair.q),
                    "value_at_t0": [report::state_json(&first_t0), report::state_json(&second_t0)],
                }),
            )
        }
        BackwardExtension::NoExtension { axis, state } => (
            "no_extension",
            json!({ "axis": axis, "state": report::state_json(state) }),
        ),
    };
    Ok(Doc {
        code: EXIT_OK,
        status: status.into(),
        compatibility: compat,
        payload,
        route: json!({ "method": "preimage_scan", "space": cfg.space.to_string() }),
    })
}
