//! Strict JSON system configs.
//!
//! Parsing happens in two passes: `serde_json` for syntax (line and column on
//! failure), then a validating walk that collects every semantic problem with
//! its JSON path instead of stopping at the first one.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::autonomous::{AutonomousSystem, Limits};
use crate::lattice::MultiIndex;
use crate::nonautonomous::{NonAutonomousSystem, TimePoly, TimedStepMap};
use crate::statespace::{exact, FiniteMonoid, Matrix, Residue, StateSpace, StepMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Autonomous,
    NonAutonomous,
    Monoid,
    Matrix,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Autonomous => "autonomous",
            Kind::NonAutonomous => "nonautonomous",
            Kind::Monoid => "monoid",
            Kind::Matrix => "matrix",
        }
    }
}

/// A validated config with its systems already built.
#[derive(Clone, Debug)]
pub struct SystemConfig {
    /// Hex SHA-256 of the raw config bytes.
    pub digest: String,
    pub dimension: usize,
    pub kind: Kind,
    pub space: StateSpace,
    pub limits: Limits,
    pub system: BuiltSystem,
}

#[derive(Clone, Debug)]
pub enum BuiltSystem {
    /// Autonomous, monoid and matrix kinds; the latter two also evaluate by
    /// their direct formulas.
    Autonomous(AutonomousSystem),
    NonAutonomous(NonAutonomousSystem),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigError {
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// Every semantic problem found, each prefixed with its JSON path.
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax {
                line,
                column,
                message,
            } => write!(f, "syntax error at line {line}, column {column}: {message}"),
            ConfigError::Invalid(errors) => write!(f, "{}", errors.join("; ")),
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn parse_config(text: &str) -> Result<SystemConfig, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    let mut v = Validator::default();
    let built = v.config(&root);
    match built {
        Some(mut cfg) if v.errors.is_empty() => {
            cfg.digest = digest(text);
            Ok(cfg)
        }
        _ => Err(ConfigError::Invalid(v.errors)),
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

const TOP_KEYS: &[&str] = &["dimension", "state_space", "kind", "maps", "t1", "limits"];

impl Validator {
    fn err(&mut self, path: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn object<'a>(
        &mut self,
        v: &'a Value,
        path: &str,
        allowed: &[&str],
    ) -> Option<&'a Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            self.err(path, "expected an object");
            return None;
        };
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.err(path, format!("unknown key `{key}`"));
            }
        }
        Some(obj)
    }

    fn required<'a>(
        &mut self,
        obj: &'a Map<String, Value>,
        key: &str,
        path: &str,
    ) -> Option<&'a Value> {
        let v = obj.get(key);
        if v.is_none() {
            self.err(path, format!("missing key `{key}`"));
        }
        v
    }

    fn string<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a str> {
        let s = v.as_str();
        if s.is_none() {
            self.err(path, "expected a string");
        }
        s
    }

    fn array<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Vec<Value>> {
        let a = v.as_array();
        if a.is_none() {
            self.err(path, "expected an array");
        }
        a
    }

    fn int(&mut self, v: &Value, path: &str) -> Option<BigInt> {
        let parsed = match v {
            Value::Number(n) => n.to_string().parse::<BigInt>().ok(),
            _ => None,
        };
        if parsed.is_none() {
            self.err(path, "expected an integer");
        }
        parsed
    }

    fn uint(&mut self, v: &Value, path: &str) -> Option<u64> {
        let parsed = match v {
            Value::Number(n) => n.to_string().parse::<u64>().ok(),
            _ => None,
        };
        if parsed.is_none() {
            self.err(path, "expected a nonnegative integer");
        }
        parsed
    }

    fn usize_(&mut self, v: &Value, path: &str) -> Option<usize> {
        self.uint(v, path).and_then(|u| usize::try_from(u).ok())
    }

    /// An integer, or a string `"p/q"`.
    fn rational(&mut self, v: &Value, path: &str) -> Option<BigRational> {
        let parsed = match v {
            Value::Number(n) => n
                .to_string()
                .parse::<BigInt>()
                .ok()
                .map(BigRational::from_integer),
            Value::String(s) => exact::parse_rational(s),
            _ => None,
        };
        if parsed.is_none() {
            self.err(path, "expected an integer or a \"p/q\" string");
        }
        parsed
    }

    fn index(&mut self, v: &Value, path: &str, m: Option<usize>) -> Option<MultiIndex> {
        let arr = self.array(v, path)?;
        let mut coords = Vec::with_capacity(arr.len());
        for (i, c) in arr.iter().enumerate() {
            let p = format!("{path}[{i}]");
            match c.as_i64() {
                Some(x) => coords.push(x),
                None => {
                    self.err(&p, "expected a 64-bit integer");
                    return None;
                }
            }
        }
        if let Some(m) = m {
            if coords.len() != m {
                self.err(
                    path,
                    format!("expected {m} coordinates, found {}", coords.len()),
                );
                return None;
            }
        }
        match MultiIndex::new(coords) {
            Ok(t) => Some(t),
            Err(e) => {
                self.err(path, e);
                None
            }
        }
    }

    /// An integer, `{"const": c, "linear": [c_1, ..]}` for `c + sum c_a t^a`, or
    /// `{"const": c, "axes": [[..], ..]}` where `axes[a-1][k-1]` multiplies `(t^a)^k`.
    fn poly(&mut self, v: &Value, path: &str) -> Option<TimePoly> {
        if v.is_number() {
            return self.int(v, path).map(TimePoly::constant);
        }
        let obj = self.object(v, path, &["const", "linear", "axes"])?;
        if obj.contains_key("linear") && obj.contains_key("axes") {
            self.err(path, "give either `linear` or `axes`, not both");
            return None;
        }
        if let Some(l) = obj.get("linear") {
            let lpath = format!("{path}.linear");
            let constant = match obj.get("const") {
                Some(c) => self.int(c, &format!("{path}.const"))?,
                None => BigInt::from(0),
            };
            let mut axes = Vec::new();
            for (i, c) in self.array(l, &lpath)?.iter().enumerate() {
                axes.push(vec![self.int(c, &format!("{lpath}[{i}]"))?]);
            }
            return Some(TimePoly { constant, axes });
        }
        let constant = match obj.get("const") {
            Some(c) => self.int(c, &format!("{path}.const"))?,
            None => BigInt::from(0),
        };
        let mut axes = Vec::new();
        if let Some(a) = obj.get("axes") {
            let apath = format!("{path}.axes");
            for (i, row) in self.array(a, &apath)?.iter().enumerate() {
                let rpath = format!("{apath}[{i}]");
                let coeffs = self.array(row, &rpath)?;
                let mut out = Vec::with_capacity(coeffs.len());
                for (k, c) in coeffs.iter().enumerate() {
                    out.push(self.int(c, &format!("{rpath}[{k}]"))?);
                }
                axes.push(out);
            }
        }
        Some(TimePoly { constant, axes })
    }

    fn lift<T>(&mut self, path: &str, r: crate::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.err(path, e);
                None
            }
        }
    }

    fn config(&mut self, root: &Value) -> Option<SystemConfig> {
        let obj = self.object(root, "$", TOP_KEYS)?;
        let dimension = self
            .required(obj, "dimension", "$")
            .and_then(|d| self.usize_(d, "$.dimension"));
        if dimension == Some(0) {
            self.err("$.dimension", "must be at least 1");
        }
        let kind = self.required(obj, "kind", "$").and_then(|k| {
            let s = self.string(k, "$.kind")?;
            let kind = match s {
                "autonomous" => Kind::Autonomous,
                "nonautonomous" => Kind::NonAutonomous,
                "monoid" => Kind::Monoid,
                "matrix" => Kind::Matrix,
                other => {
                    self.err(
                        "$.kind",
                        format!(
                            "unknown kind `{other}` (expected autonomous, nonautonomous, monoid or matrix)"
                        ),
                    );
                    return None;
                }
            };
            Some(kind)
        });
        let space = self
            .required(obj, "state_space", "$")
            .and_then(|s| self.state_space(s, "$.state_space"));
        let limits = match obj.get("limits") {
            Some(l) => self.limits(l, "$.limits"),
            None => Some(Limits::default()),
        };

        let t1 = match (obj.get("t1"), kind) {
            (Some(t), Some(Kind::NonAutonomous)) => self.index(t, "$.t1", dimension),
            (Some(_), Some(_)) => {
                self.err("$.t1", "only nonautonomous systems take a threshold");
                None
            }
            (None, Some(Kind::NonAutonomous)) => {
                self.err("$", "missing key `t1`");
                None
            }
            _ => None,
        };

        let maps_v = self
            .required(obj, "maps", "$")
            .and_then(|m| self.array(m, "$.maps"));
        if let (Some(maps), Some(d)) = (maps_v, dimension) {
            if maps.len() != d {
                self.err(
                    "$.maps",
                    format!("dimension is {d} but {} maps are given", maps.len()),
                );
            }
        }
        let (Some(kind), Some(space), Some(maps_v)) = (kind, space, maps_v) else {
            return None;
        };
        let space_kind = obj["state_space"]
            .get("kind")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        self.check_kind_space(kind, &space_kind);

        let system = if kind == Kind::NonAutonomous {
            let mut timed = Vec::new();
            for (i, m) in maps_v.iter().enumerate() {
                let path = format!("$.maps[{i}]");
                if let Some(f) = self.timed_rule(m, &path, &space, dimension) {
                    timed.push(f);
                }
            }
            if timed.len() != maps_v.len() || !self.errors.is_empty() {
                return None;
            }
            let t1 = t1?;
            let sys = NonAutonomousSystem::new(t1, timed);
            BuiltSystem::NonAutonomous(self.lift("$.maps", sys)?.with_limits(limits?))
        } else {
            let mut maps = Vec::new();
            for (i, m) in maps_v.iter().enumerate() {
                let path = format!("$.maps[{i}]");
                if let Some(g) = self.rule(m, &path, &space, kind) {
                    maps.push(g);
                }
            }
            if maps.len() != maps_v.len() || !self.errors.is_empty() {
                return None;
            }
            let sys = self.lift("$.maps", AutonomousSystem::new(maps))?;
            BuiltSystem::Autonomous(sys.with_limits(limits?))
        };
        Some(SystemConfig {
            digest: String::new(),
            dimension: dimension?,
            kind,
            space: space.space,
            limits: limits?,
            system,
        })
    }

    fn check_kind_space(&mut self, kind: Kind, space_kind: &str) {
        let ok = match kind {
            Kind::Monoid => matches!(
                space_kind,
                "integer_line" | "rational_line" | "finite_monoid"
            ),
            Kind::Matrix => matches!(
                space_kind,
                "integer_vector" | "rational_vector" | "modular_vector"
            ),
            _ => true,
        };
        if !ok {
            self.err(
                "$.state_space.kind",
                format!("`{space_kind}` cannot carry a {} system", kind.as_str()),
            );
        }
    }

    fn limits(&mut self, v: &Value, path: &str) -> Option<Limits> {
        let obj = self.object(v, path, &["path_cap", "volume_cap", "exponent_cap"])?;
        let mut limits = Limits::default();
        if let Some(c) = obj.get("path_cap") {
            limits.path_cap = self.usize_(c, &format!("{path}.path_cap"))?;
        }
        if let Some(c) = obj.get("volume_cap") {
            limits.volume_cap = self.uint(c, &format!("{path}.volume_cap"))?;
        }
        if let Some(c) = obj.get("exponent_cap") {
            limits.exponents.exact = self.uint(c, &format!("{path}.exponent_cap"))?;
        }
        Some(limits)
    }

    fn state_space(&mut self, v: &Value, path: &str) -> Option<ParsedSpace> {
        let kind = v.get("kind").and_then(Value::as_str);
        let allowed: &[&str] = match kind {
            Some("finite") => &["kind", "size"],
            Some("integer_vector" | "rational_vector") => &["kind", "dim"],
            Some("modular_line") => &["kind", "modulus"],
            Some("modular_vector") => &["kind", "dim", "modulus"],
            Some("finite_monoid") => &["kind", "table"],
            _ => &["kind"],
        };
        let obj = self.object(v, path, allowed)?;
        let kind = self.required(obj, "kind", path)?;
        let kind = self.string(kind, &format!("{path}.kind"))?;
        let get_uint = |me: &mut Self, key: &str| -> Option<u64> {
            let v = me.required(obj, key, path)?;
            me.uint(v, &format!("{path}.{key}"))
        };
        let space = match kind {
            "finite" => {
                let n = get_uint(self, "size")? as usize;
                self.lift(path, StateSpace::finite(n))?
            }
            "integer_line" => StateSpace::IntegerLine,
            "rational_line" => StateSpace::RationalLine,
            "integer_vector" => {
                let d = get_uint(self, "dim")? as usize;
                self.lift(path, StateSpace::integer_vector(d))?
            }
            "rational_vector" => {
                let d = get_uint(self, "dim")? as usize;
                self.lift(path, StateSpace::rational_vector(d))?
            }
            "modular_line" => {
                let p = get_uint(self, "modulus")?;
                self.lift(path, StateSpace::modular_line(p))?
            }
            "modular_vector" => {
                let d = get_uint(self, "dim")? as usize;
                let p = get_uint(self, "modulus")?;
                self.lift(path, StateSpace::modular_vector(d, p))?
            }
            "finite_monoid" => {
                let tpath = format!("{path}.table");
                let rows = self.required(obj, "table", path)?;
                let rows = self.array(rows, &tpath)?;
                let mut table = Vec::with_capacity(rows.len());
                for (i, r) in rows.iter().enumerate() {
                    let rpath = format!("{tpath}[{i}]");
                    let r = self.array(r, &rpath)?;
                    let mut row = Vec::with_capacity(r.len());
                    for (j, e) in r.iter().enumerate() {
                        row.push(self.usize_(e, &format!("{rpath}[{j}]"))?);
                    }
                    table.push(row);
                }
                let monoid = Arc::new(self.lift(&tpath, FiniteMonoid::new(table))?);
                return Some(ParsedSpace {
                    space: StateSpace::Finite(monoid.size()),
                    monoid: Some(monoid),
                });
            }
            other => {
                self.err(
                    &format!("{path}.kind"),
                    format!("unknown state space `{other}`"),
                );
                return None;
            }
        };
        Some(ParsedSpace {
            space,
            monoid: None,
        })
    }

    fn matrix_rows(&mut self, v: &Value, path: &str, d: usize) -> Option<Vec<Vec<BigRational>>> {
        let rows = self.array(v, path)?;
        if rows.len() != d {
            self.err(path, format!("expected {d} rows, found {}", rows.len()));
            return None;
        }
        let mut out = Vec::with_capacity(d);
        for (i, r) in rows.iter().enumerate() {
            let rpath = format!("{path}[{i}]");
            let r = self.array(r, &rpath)?;
            if r.len() != d {
                self.err(&rpath, format!("expected {d} entries, found {}", r.len()));
                return None;
            }
            let mut row = Vec::with_capacity(d);
            for (j, e) in r.iter().enumerate() {
                row.push(self.rational(e, &format!("{rpath}[{j}]"))?);
            }
            out.push(row);
        }
        Some(out)
    }

    fn rule(&mut self, v: &Value, path: &str, space: &ParsedSpace, kind: Kind) -> Option<StepMap> {
        let name = v.get("rule").and_then(Value::as_str);
        let allowed: &[&str] = match name {
            Some("table") => &["rule", "images"],
            Some("affine") => &["rule", "a", "b"],
            Some("matrix") => &["rule", "rows"],
            Some("translate") => &["rule", "element"],
            _ => &["rule"],
        };
        let obj = self.object(v, path, allowed)?;
        let name = self.required(obj, "rule", path)?;
        let name = self.string(name, &format!("{path}.rule"))?;
        let family_ok = match kind {
            Kind::Monoid => name == "translate",
            Kind::Matrix => name == "matrix",
            _ => true,
        };
        if !family_ok {
            self.err(
                &format!("{path}.rule"),
                format!(
                    "a {} system takes only `{}` rules",
                    kind.as_str(),
                    match kind {
                        Kind::Monoid => "translate",
                        _ => "matrix",
                    }
                ),
            );
            return None;
        }
        let field = |me: &mut Self, key: &str| -> Option<(&Value, String)> {
            let v = me.required(obj, key, path)?;
            Some((v, format!("{path}.{key}")))
        };
        match (name, &space.space) {
            ("table", StateSpace::Finite(n)) => {
                let (imgs, ipath) = field(self, "images")?;
                let imgs = self.array(imgs, &ipath)?;
                let mut images = Vec::with_capacity(imgs.len());
                for (i, e) in imgs.iter().enumerate() {
                    images.push(self.usize_(e, &format!("{ipath}[{i}]"))?);
                }
                self.lift(&ipath, StepMap::table(*n, images))
            }
            ("affine", StateSpace::IntegerLine) => {
                let (a, apath) = field(self, "a")?;
                let a = self.int(a, &apath);
                let (b, bpath) = field(self, "b")?;
                let b = self.int(b, &bpath);
                Some(StepMap::affine_int(a?, b?))
            }
            ("affine", StateSpace::ModularLine(p)) => {
                let (a, apath) = field(self, "a")?;
                let a = self.int(a, &apath);
                let (b, bpath) = field(self, "b")?;
                let b = self.int(b, &bpath);
                self.lift(path, StepMap::modular_affine(*p, a?, b?))
            }
            ("matrix", StateSpace::RationalVector(d) | StateSpace::IntegerVector(d)) => {
                let (rows, rpath) = field(self, "rows")?;
                let rows = self.matrix_rows(rows, &rpath, *d)?;
                let m = Matrix::from_rows((), rows).expect("checked square");
                if matches!(space.space, StateSpace::IntegerVector(_)) {
                    self.lift(&rpath, StepMap::matrix_integer(m))
                } else {
                    Some(StepMap::matrix_rational(m))
                }
            }
            ("matrix", StateSpace::ModularVector { dim, modulus }) => {
                let (rows, rpath) = field(self, "rows")?;
                let rows = self.matrix_rows(rows, &rpath, *dim)?;
                if rows.iter().flatten().any(|e| !e.is_integer()) {
                    self.err(&rpath, "entries of a matrix mod p must be integers");
                    return None;
                }
                let res = rows
                    .into_iter()
                    .map(|r| {
                        r.into_iter()
                            .map(|e| Residue::from_bigint(&e.to_integer(), *modulus))
                            .collect()
                    })
                    .collect();
                let m = Matrix::from_rows(*modulus, res).expect("checked square");
                self.lift(&rpath, StepMap::matrix_modular(m))
            }
            ("translate", StateSpace::IntegerLine) => {
                let (g, gpath) = field(self, "element")?;
                Some(StepMap::translate_int(self.int(g, &gpath)?))
            }
            ("translate", StateSpace::RationalLine) => {
                let (g, gpath) = field(self, "element")?;
                let g = self.rational(g, &gpath)?;
                self.lift(&gpath, StepMap::translate_rational(g))
            }
            ("translate", StateSpace::Finite(_)) if space.monoid.is_some() => {
                let (g, gpath) = field(self, "element")?;
                let g = self.usize_(g, &gpath)?;
                let monoid = space.monoid.clone().expect("checked");
                self.lift(&gpath, StepMap::translate_finite(monoid, g))
            }
            ("table" | "affine" | "matrix" | "translate", s) => {
                self.err(
                    &format!("{path}.rule"),
                    format!("`{name}` rules do not act on {s}"),
                );
                None
            }
            (other, _) => {
                self.err(&format!("{path}.rule"), format!("unknown rule `{other}`"));
                None
            }
        }
    }

    fn timed_rule(
        &mut self,
        v: &Value,
        path: &str,
        space: &ParsedSpace,
        m: Option<usize>,
    ) -> Option<TimedStepMap> {
        let name = v.get("rule").and_then(Value::as_str);
        let allowed: &[&str] = match name {
            Some("table_per_time") => &["rule", "window", "tables"],
            Some("affine_timed") => &["rule", "a", "b"],
            Some("matrix_timed") => &["rule", "entries"],
            _ => {
                return self
                    .rule(v, path, space, Kind::Autonomous)
                    .map(TimedStepMap::autonomous)
            }
        };
        let obj = self.object(v, path, allowed)?;
        let name = name.expect("matched above");
        match (name, &space.space) {
            ("table_per_time", StateSpace::Finite(n)) => {
                let wpath = format!("{path}.window");
                let w = self.required(obj, "window", path)?;
                let w = self.object(w, &wpath, &["lo", "hi"])?;
                let lo = self.required(w, "lo", &wpath)?;
                let lo = self.index(lo, &format!("{wpath}.lo"), m);
                let hi = self.required(w, "hi", &wpath)?;
                let hi = self.index(hi, &format!("{wpath}.hi"), m);
                let tpath = format!("{path}.tables");
                let ts = self.required(obj, "tables", path)?;
                let ts = self.array(ts, &tpath)?;
                let mut tables = Vec::with_capacity(ts.len());
                for (i, t) in ts.iter().enumerate() {
                    let ipath = format!("{tpath}[{i}]");
                    let t = self.array(t, &ipath)?;
                    let mut row = Vec::with_capacity(t.len());
                    for (j, e) in t.iter().enumerate() {
                        row.push(self.usize_(e, &format!("{ipath}[{j}]"))?);
                    }
                    tables.push(row);
                }
                self.lift(path, TimedStepMap::table_per_time(*n, lo?, hi?, tables))
            }
            ("affine_timed", StateSpace::IntegerLine) => {
                let a = self.required(obj, "a", path)?;
                let a = self.poly(a, &format!("{path}.a"));
                let b = self.required(obj, "b", path)?;
                let b = self.poly(b, &format!("{path}.b"));
                Some(TimedStepMap::affine_timed(a?, b?))
            }
            ("matrix_timed", StateSpace::IntegerVector(d) | StateSpace::RationalVector(d)) => {
                let epath = format!("{path}.entries");
                let rows = self.required(obj, "entries", path)?;
                let rows = self.array(rows, &epath)?;
                if rows.len() != *d {
                    self.err(&epath, format!("expected {d} rows, found {}", rows.len()));
                    return None;
                }
                let mut entries = Vec::with_capacity(*d);
                for (i, r) in rows.iter().enumerate() {
                    let rpath = format!("{epath}[{i}]");
                    let r = self.array(r, &rpath)?;
                    let mut row = Vec::with_capacity(r.len());
                    for (j, e) in r.iter().enumerate() {
                        row.push(self.poly(e, &format!("{rpath}[{j}]"))?);
                    }
                    entries.push(row);
                }
                self.lift(
                    path,
                    TimedStepMap::matrix_timed(space.space.clone(), entries),
                )
            }
            (_, s) => {
                self.err(
                    &format!("{path}.rule"),
                    format!("`{name}` rules do not act on {s}"),
                );
                None
            }
        }
    }
}

struct ParsedSpace {
    space: StateSpace,
    monoid: Option<Arc<FiniteMonoid>>,
}
