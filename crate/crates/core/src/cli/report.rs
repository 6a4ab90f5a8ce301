//! JSON and CSV rendering of states, reports and grids, plus state parsing.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Map, Number, Value};

use crate::autonomous::{CompatibilityReport, Grid, PathReport};
use crate::lattice::MultiIndex;
use crate::nonautonomous::{NonAutonomousSystem, TimedCompatibilityReport};
use crate::statespace::{exact, State, StateSpace, StepMap};
use crate::Error;

fn number(digits: impl ToString) -> Value {
    Value::Number(
        digits
            .to_string()
            .parse::<Number>()
            .expect("integer literals are valid JSON numbers"),
    )
}

fn rational(r: &BigRational) -> Value {
    if r.is_integer() {
        number(r.numer())
    } else {
        Value::String(exact::fmt_rational(r))
    }
}

/// Integers as JSON numbers of any size, non-integral rationals as `"p/q"`.
pub fn state_json(x: &State) -> Value {
    match x {
        State::Label(l) => number(l),
        State::Int(v) => number(v),
        State::Residue(v) => number(v),
        State::Rational(r) => rational(r),
        State::IntVec(v) => Value::Array(v.iter().map(number).collect()),
        State::RatVec(v) => Value::Array(v.iter().map(rational).collect()),
        State::ResVec(v) => Value::Array(v.iter().map(number).collect()),
        State::Augmented(s, x) => json!({ "s": index_json(s), "x": state_json(x) }),
    }
}

pub fn index_json(t: &MultiIndex) -> Value {
    Value::Array(t.coords().iter().map(number).collect())
}

fn json_int(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.to_string().parse().ok(),
        _ => None,
    }
}

fn json_rational(v: &Value) -> Option<BigRational> {
    match v {
        Value::Number(_) => json_int(v).map(BigRational::from_integer),
        Value::String(s) => exact::parse_rational(s),
        _ => None,
    }
}

fn json_vec<T>(v: &Value, f: impl Fn(&Value) -> Option<T>) -> Option<Vec<T>> {
    v.as_array()?.iter().map(f).collect()
}

/// Inverse of [`state_json`] for states of `space`.
pub fn state_from_json(space: &StateSpace, v: &Value) -> Option<State> {
    let u64_of = |v: &Value| json_int(v).and_then(|b| u64::try_from(b).ok());
    Some(match space {
        StateSpace::Finite(_) => State::Label(usize::try_from(json_int(v)?).ok()?),
        StateSpace::IntegerLine => State::Int(json_int(v)?),
        StateSpace::ModularLine(_) => State::Residue(u64_of(v)?),
        StateSpace::RationalLine => State::Rational(json_rational(v)?),
        StateSpace::IntegerVector(_) => State::IntVec(json_vec(v, json_int)?),
        StateSpace::RationalVector(_) => State::RatVec(json_vec(v, json_rational)?),
        StateSpace::ModularVector { .. } => State::ResVec(json_vec(v, u64_of)?),
        StateSpace::Augmented { t1, inner } => {
            let obj = v.as_object()?;
            let s = json_vec(obj.get("s")?, |c| c.as_i64())?;
            let s = MultiIndex::new(s).ok()?;
            if s.dim() != t1.dim() {
                return None;
            }
            State::Augmented(s, Box::new(state_from_json(inner, obj.get("x")?)?))
        }
    })
}

fn strip_brackets(s: &str) -> &str {
    let s = s.trim();
    for (open, close) in [('(', ')'), ('[', ']')] {
        if let Some(inner) = s.strip_prefix(open).and_then(|r| r.strip_suffix(close)) {
            return inner;
        }
    }
    s
}

fn split_list(s: &str) -> Vec<&str> {
    let s = strip_brackets(s);
    if s.trim().is_empty() {
        return Vec::new();
    }
    s.split(',').map(str::trim).collect()
}

/// Parses `"1,2,-3"` (optionally bracketed) into a multi-index of dimension `m`.
pub fn parse_index(s: &str, m: usize) -> Result<MultiIndex, String> {
    let coords = split_list(s)
        .into_iter()
        .map(|c| {
            c.parse::<i64>()
                .map_err(|_| format!("`{c}` is not a 64-bit integer"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if coords.len() != m {
        return Err(format!(
            "`{s}` has {} coordinates, the system has dimension {m}",
            coords.len()
        ));
    }
    MultiIndex::new(coords).map_err(|e| e.to_string())
}

/// Parses a state written as on the command line: a scalar, `p/q`, or a
/// comma-separated vector.
pub fn parse_state(space: &StateSpace, s: &str) -> Result<State, String> {
    let bad = |what: &str| format!("`{s}` is not {what}");
    let int = |c: &str| c.parse::<BigInt>().ok();
    let u64_ = |c: &str| c.parse::<u64>().ok();
    let list = split_list(s);
    let state = match space {
        StateSpace::Finite(_) => State::Label(s.trim().parse().map_err(|_| bad("a label"))?),
        StateSpace::IntegerLine => State::Int(int(s.trim()).ok_or_else(|| bad("an integer"))?),
        StateSpace::ModularLine(_) => {
            State::Residue(u64_(s.trim()).ok_or_else(|| bad("a residue"))?)
        }
        StateSpace::RationalLine => {
            State::Rational(exact::parse_rational(s.trim()).ok_or_else(|| bad("a rational"))?)
        }
        StateSpace::IntegerVector(_) => State::IntVec(
            list.into_iter()
                .map(int)
                .collect::<Option<_>>()
                .ok_or_else(|| bad("an integer vector"))?,
        ),
        StateSpace::RationalVector(_) => State::RatVec(
            list.into_iter()
                .map(exact::parse_rational)
                .collect::<Option<_>>()
                .ok_or_else(|| bad("a rational vector"))?,
        ),
        StateSpace::ModularVector { .. } => State::ResVec(
            list.into_iter()
                .map(u64_)
                .collect::<Option<_>>()
                .ok_or_else(|| bad("a residue vector"))?,
        ),
        StateSpace::Augmented { .. } => return Err("augmented states are not read".into()),
    };
    Ok(state)
}

fn decided_json(d: Option<crate::statespace::Decided>) -> Value {
    d.map_or(Value::Null, |d| Value::String(d.as_str().into()))
}

fn pair_images(ga: &StepMap, gb: &StepMap, x: &State) -> Value {
    match (
        gb.apply(x).and_then(|y| ga.apply(&y)),
        ga.apply(x).and_then(|y| gb.apply(&y)),
    ) {
        (Ok(ab), Ok(ba)) => json!([state_json(&ab), state_json(&ba)]),
        _ => Value::Null,
    }
}

pub fn compat_json(report: &CompatibilityReport, maps: &[StepMap]) -> Value {
    let witnesses: Vec<Value> = report
        .witnesses
        .iter()
        .map(|w| {
            json!({
                "alpha": w.alpha,
                "beta": w.beta,
                "state": state_json(&w.state),
                "images": pair_images(&maps[w.alpha - 1], &maps[w.beta - 1], &w.state),
            })
        })
        .collect();
    json!({
        "status": report.status.as_str(),
        "checked_pairs": report.checked_pairs,
        "decided": decided_json(report.decided),
        "action_axioms": report.action_axioms.as_str(),
        "witnesses": witnesses,
    })
}

pub fn timed_compat_json(
    report: &TimedCompatibilityReport,
    sys: &NonAutonomousSystem,
    lo: &MultiIndex,
    hi: &MultiIndex,
) -> Value {
    let witnesses: Vec<Value> = report
        .witnesses
        .iter()
        .map(|w| {
            let (a, b) = (&sys.maps()[w.alpha - 1], &sys.maps()[w.beta - 1]);
            let images = (|| -> crate::Result<Value> {
                let ab = a.apply_at(&w.time.step(w.beta, 1)?, &b.apply_at(&w.time, &w.state)?)?;
                let ba = b.apply_at(&w.time.step(w.alpha, 1)?, &a.apply_at(&w.time, &w.state)?)?;
                Ok(json!([state_json(&ab), state_json(&ba)]))
            })()
            .unwrap_or(Value::Null);
            json!({
                "alpha": w.alpha,
                "beta": w.beta,
                "t": index_json(&w.time),
                "state": state_json(&w.state),
                "images": images,
            })
        })
        .collect();
    json!({
        "status": report.status.as_str(),
        "window": { "lo": index_json(lo), "hi": index_json(hi) },
        "checked_pairs": report.checked_pairs,
        "checked_times": report.checked_times,
        "skipped_times": report.skipped_times,
        "decided": decided_json(report.decided),
        "time_complete": report.time_complete,
        "witnesses": witnesses,
    })
}

pub fn paths_json(report: &PathReport) -> Value {
    let groups: Vec<Value> = report
        .groups
        .iter()
        .map(|g| {
            json!({
                "state": state_json(&g.state),
                "count": g.count,
                "exemplar": { "start": index_json(&g.exemplar.start), "steps": g.exemplar.steps },
            })
        })
        .collect();
    json!({
        "count": report.count,
        "agree": report.agree,
        "reference": state_json(&report.reference),
        "groups": groups,
    })
}

pub fn grid_json(grid: &Grid) -> crate::Result<Value> {
    let cells: Vec<Value> = grid
        .cells()?
        .iter()
        .map(|(t, x)| json!({ "t": index_json(t), "x": state_json(x) }))
        .collect();
    Ok(json!({ "lo": index_json(&grid.lo), "hi": index_json(&grid.hi), "cells": cells }))
}

fn state_fields(x: &State) -> Vec<String> {
    match x {
        State::IntVec(v) => v.iter().map(ToString::to_string).collect(),
        State::RatVec(v) => v.iter().map(exact::fmt_rational).collect(),
        State::ResVec(v) => v.iter().map(ToString::to_string).collect(),
        other => vec![other.to_string()],
    }
}

/// One row per grid cell: `t_1..t_m` then `x`, or `x_1..x_d` for vector states.
pub fn write_grid_csv(grid: &Grid, out: impl Write) -> crate::Result<()> {
    let csv_err = |e: csv::Error| Error::Inconsistent(format!("csv: {e}"));
    let cells = grid.cells()?;
    let m = grid.lo.dim();
    let width = cells.first().map_or(1, |(_, x)| match x {
        State::IntVec(v) => v.len(),
        State::RatVec(v) => v.len(),
        State::ResVec(v) => v.len(),
        _ => 0,
    });
    let mut header: Vec<String> = (1..=m).map(|a| format!("t_{a}")).collect();
    if width == 0 {
        header.push("x".into());
    } else {
        header.extend((1..=width).map(|i| format!("x_{i}")));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header).map_err(csv_err)?;
    for (t, x) in &cells {
        let mut row: Vec<String> = t.coords().iter().map(ToString::to_string).collect();
        row.extend(state_fields(x));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Inconsistent(format!("csv: {e}")))
}

/// Stable snake_case names for error documents.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::ZeroDimension => "zero_dimension",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::AxisOutOfRange { .. } => "axis_out_of_range",
        Error::Overflow => "overflow",
        Error::NotComparable { .. } => "not_comparable",
        Error::PathCapExceeded { .. } => "path_cap_exceeded",
        Error::VolumeCapExceeded { .. } => "volume_cap_exceeded",
        Error::ExponentCapExceeded { .. } => "exponent_cap_exceeded",
        Error::InvalidStateSpace(_) => "invalid_state_space",
        Error::InvalidMap(_) => "invalid_map",
        Error::InvalidMonoid(_) => "invalid_monoid",
        Error::StateOutsideDomain { .. } => "state_outside_domain",
        Error::DomainMismatch { .. } => "domain_mismatch",
        Error::IncomparableRules => "incomparable_rules",
        Error::NotBijective(_) => "not_bijective",
        Error::NotSurjective(_) => "not_surjective",
        Error::Undecided => "undecided",
        Error::SingularMatrix => "singular_matrix",
        Error::NotInvertible(_) => "not_invertible",
        Error::NegativeInNonGroup => "negative_in_non_group",
        Error::InfiniteStateSpace => "infinite_state_space",
        Error::Incompatible { .. } => "incompatible",
        Error::NonCommuting { .. } => "non_commuting",
        Error::BelowThreshold { .. } => "below_threshold",
        Error::TimeOutsideWindow(_) => "time_outside_window",
        Error::TimeComponentMismatch { .. } => "time_component_mismatch",
        Error::Inconsistent(_) => "inconsistent",
    }
}

/// Extra structured fields for error documents.
pub fn error_details(e: &Error) -> Map<String, Value> {
    let mut m = Map::new();
    match e {
        Error::Incompatible { alpha, beta, state } => {
            m.insert("alpha".into(), json!(alpha));
            m.insert("beta".into(), json!(beta));
            m.insert("state".into(), json!(state));
        }
        Error::NonCommuting {
            alpha,
            beta,
            row,
            col,
        } => {
            m.insert("alpha".into(), json!(alpha));
            m.insert("beta".into(), json!(beta));
            m.insert("row".into(), json!(row));
            m.insert("col".into(), json!(col));
        }
        _ => {}
    }
    m
}
