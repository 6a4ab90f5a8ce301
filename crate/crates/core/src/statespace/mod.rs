//! State sets and exact self-maps on them.
//!
//! Every rule family is closed under composition except lifted (time-augmented)
//! maps, which fall back to an explicit [`Rule::Composite`]. Equality of maps
//! is exhaustive on small finite sets, symbolic within a closed family, and
//! only sampled (and labeled so) otherwise.

pub mod exact;
pub mod monoid;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use exact::{ExactScalar, Matrix, Residue, Scalar};
pub use monoid::FiniteMonoid;

use crate::error::{Error, Result};
use crate::lattice::MultiIndex;
use crate::nonautonomous::TimedStepMap;

/// Finite spaces up to this size are compared and classified pointwise.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 16;

/// An element of some [`StateSpace`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum State {
    Label(usize),
    Int(BigInt),
    Residue(u64),
    Rational(BigRational),
    IntVec(Vec<BigInt>),
    RatVec(Vec<BigRational>),
    ResVec(Vec<u64>),
    /// `(s, x)`: a time index paired with a base state.
    Augmented(MultiIndex, Box<State>),
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
            write!(f, "(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        }
        match self {
            State::Label(l) => write!(f, "{l}"),
            State::Int(v) => write!(f, "{v}"),
            State::Residue(v) => write!(f, "{v}"),
            State::Rational(r) => write!(f, "{}", exact::fmt_rational(r)),
            State::IntVec(v) => list(f, v),
            State::RatVec(v) => {
                let s: Vec<String> = v.iter().map(exact::fmt_rational).collect();
                list(f, &s)
            }
            State::ResVec(v) => list(f, v),
            State::Augmented(s, x) => write!(f, "({s}; {x})"),
        }
    }
}

impl State {
    pub fn int(v: i64) -> Self {
        State::Int(v.into())
    }

    pub fn rational(n: i64, d: i64) -> Self {
        State::Rational(BigRational::new(n.into(), d.into()))
    }

    pub fn int_vec(v: &[i64]) -> Self {
        State::IntVec(v.iter().map(|&x| x.into()).collect())
    }

    pub fn rat_vec(v: &[i64]) -> Self {
        State::RatVec(
            v.iter()
                .map(|&x| BigRational::from_integer(x.into()))
                .collect(),
        )
    }

    pub fn label(&self) -> Option<usize> {
        match self {
            State::Label(l) => Some(*l),
            _ => None,
        }
    }
}

/// The set `M` the recurrence takes values in.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StateSpace {
    /// `{0, ..., n-1}`
    Finite(usize),
    IntegerLine,
    IntegerVector(usize),
    /// `Z_p` with `p >= 2` (not necessarily prime).
    ModularLine(u64),
    RationalLine,
    RationalVector(usize),
    /// `(Z_p)^d` with `p` prime.
    ModularVector {
        dim: usize,
        modulus: u64,
    },
    /// `{s >= t1} x inner`
    Augmented {
        t1: MultiIndex,
        inner: Box<StateSpace>,
    },
}

impl fmt::Display for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpace::Finite(n) => write!(f, "finite({n})"),
            StateSpace::IntegerLine => write!(f, "Z"),
            StateSpace::IntegerVector(d) => write!(f, "Z^{d}"),
            StateSpace::ModularLine(p) => write!(f, "Z_{p}"),
            StateSpace::RationalLine => write!(f, "Q"),
            StateSpace::RationalVector(d) => write!(f, "Q^{d}"),
            StateSpace::ModularVector { dim, modulus } => write!(f, "(Z_{modulus})^{dim}"),
            StateSpace::Augmented { t1, inner } => write!(f, "{{s >= {t1}}} x {inner}"),
        }
    }
}

impl StateSpace {
    pub fn finite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidStateSpace("finite space needs n >= 1".into()));
        }
        Ok(StateSpace::Finite(n))
    }

    pub fn modular_line(p: u64) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidStateSpace(format!("modulus {p} < 2")));
        }
        Ok(StateSpace::ModularLine(p))
    }

    pub fn integer_vector(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidStateSpace(
                "vector dimension must be >= 1".into(),
            ));
        }
        Ok(StateSpace::IntegerVector(d))
    }

    pub fn rational_vector(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidStateSpace(
                "vector dimension must be >= 1".into(),
            ));
        }
        Ok(StateSpace::RationalVector(d))
    }

    pub fn modular_vector(dim: usize, modulus: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidStateSpace(
                "vector dimension must be >= 1".into(),
            ));
        }
        if !exact::is_prime(modulus) {
            return Err(Error::InvalidStateSpace(format!(
                "matrix arithmetic mod {modulus} needs a prime modulus"
            )));
        }
        Ok(StateSpace::ModularVector { dim, modulus })
    }

    pub fn contains(&self, x: &State) -> bool {
        match (self, x) {
            (StateSpace::Finite(n), State::Label(l)) => l < n,
            (StateSpace::IntegerLine, State::Int(_)) => true,
            (StateSpace::IntegerVector(d), State::IntVec(v)) => v.len() == *d,
            (StateSpace::ModularLine(p), State::Residue(v)) => v < p,
            (StateSpace::RationalLine, State::Rational(_)) => true,
            (StateSpace::RationalVector(d), State::RatVec(v)) => v.len() == *d,
            (StateSpace::ModularVector { dim, modulus }, State::ResVec(v)) => {
                v.len() == *dim && v.iter().all(|e| e < modulus)
            }
            (StateSpace::Augmented { t1, inner }, State::Augmented(s, x)) => {
                s.dim() == t1.dim() && t1.leq(s).unwrap_or(false) && inner.contains(x)
            }
            _ => false,
        }
    }

    pub fn check(&self, x: &State) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::StateOutsideDomain {
                state: x.to_string(),
                space: self.to_string(),
            })
        }
    }

    /// Number of elements, if finite and representable.
    pub fn size(&self) -> Option<u64> {
        match self {
            StateSpace::Finite(n) => Some(*n as u64),
            StateSpace::ModularLine(p) => Some(*p),
            StateSpace::ModularVector { dim, modulus } => modulus.checked_pow(*dim as u32),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(
            self,
            StateSpace::Finite(_) | StateSpace::ModularLine(_) | StateSpace::ModularVector { .. }
        )
    }

    /// All states in canonical order, when the space has at most `limit` elements.
    pub fn enumerate(&self, limit: u64) -> Option<Vec<State>> {
        let size = self.size().filter(|&s| s <= limit)?;
        Some(match self {
            StateSpace::Finite(n) => (0..*n).map(State::Label).collect(),
            StateSpace::ModularLine(p) => (0..*p).map(State::Residue).collect(),
            StateSpace::ModularVector { dim, modulus } => (0..size)
                .map(|mut k| {
                    let mut v = vec![0; *dim];
                    for e in v.iter_mut().rev() {
                        *e = k % modulus;
                        k /= modulus;
                    }
                    State::ResVec(v)
                })
                .collect(),
            _ => unreachable!("size() is None for infinite spaces"),
        })
    }

    /// The scalar state `k` (reduced into the space) for line-like spaces.
    fn scalar_state(&self, k: i64) -> Option<State> {
        match self {
            StateSpace::IntegerLine => Some(State::int(k)),
            StateSpace::ModularLine(p) => Some(State::Residue(
                BigInt::from(k).mod_floor(&BigInt::from(*p)).to_u64()?,
            )),
            StateSpace::RationalLine => Some(State::rational(k, 1)),
            StateSpace::Finite(n) => usize::try_from(k).ok().filter(|k| k < n).map(State::Label),
            _ => None,
        }
    }

    /// The standard basis vector `e_j` (0-based) for vector spaces.
    fn basis_state(&self, j: usize) -> Option<State> {
        let unit = |d: usize| (0..d).map(move |i| i64::from(i == j));
        match self {
            StateSpace::IntegerVector(d) => {
                Some(State::IntVec(unit(*d).map(BigInt::from).collect()))
            }
            StateSpace::RationalVector(d) => Some(State::RatVec(
                unit(*d)
                    .map(|v| BigRational::from_integer(v.into()))
                    .collect(),
            )),
            StateSpace::ModularVector { dim, .. } => {
                Some(State::ResVec(unit(*dim).map(|v| v as u64).collect()))
            }
            _ => None,
        }
    }
}

/// Translation by a fixed element of a commutative monoid acting on itself
/// (or, for the positive rationals, on all of Q by multiplication).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Translate {
    IntegerAdd(BigInt),
    RationalMul(BigRational),
    Finite {
        monoid: Arc<FiniteMonoid>,
        element: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatrixRule {
    /// Over Q; on `IntegerVector` spaces the entries are integral.
    Rational(Matrix<BigRational>),
    Modular(Matrix<Residue>),
}

impl MatrixRule {
    pub fn dim(&self) -> usize {
        match self {
            MatrixRule::Rational(m) => m.dim(),
            MatrixRule::Modular(m) => m.dim(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Rule {
    /// Total table of images over `Finite(n)`.
    Table(Vec<usize>),
    /// `x -> a x + b` on Z.
    AffineInt {
        a: BigInt,
        b: BigInt,
    },
    /// `x -> a x + b (mod p)` on `Z_p`; coefficients stored reduced.
    ModularAffine {
        a: u64,
        b: u64,
    },
    MatrixLinear(MatrixRule),
    MonoidTranslate(Translate),
    /// `(s, x) -> (s + 1_axis, F(s, x))` on an augmented space.
    Lifted {
        map: Arc<TimedStepMap>,
        axis: usize,
    },
    /// `maps[0] o maps[1] o ... o maps[k-1]` for families without closed composition.
    Composite(Vec<StepMap>),
}

/// One self-map of a state space.
#[derive(Clone, Debug)]
pub struct StepMap {
    domain: StateSpace,
    rule: Rule,
}

/// How a power `G^(n)` was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PowerMethod {
    /// Closed formula with no loop (`x + n b`, sign alternation, ...).
    Direct,
    /// Repeated squaring inside the rule family.
    Binary,
    /// Orbit walk with cycle detection on a finite set.
    Cycle,
    /// Plain n-fold application.
    Iteration,
}

impl PowerMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            PowerMethod::Direct => "direct",
            PowerMethod::Binary => "binary",
            PowerMethod::Cycle => "cycle",
            PowerMethod::Iteration => "iteration",
        }
    }
}

/// Exponent bounds for families whose coefficients grow with the power.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExponentCaps {
    /// Integer/rational families (affine over Z with |a| >= 2, matrices over Q, rational scaling).
    pub exact: u64,
    /// Residue families.
    pub modular: u64,
}

impl Default for ExponentCaps {
    fn default() -> Self {
        Self {
            exact: 1 << 20,
            modular: 1 << 62,
        }
    }
}

fn cap_check(n: u64, cap: u64) -> Result<()> {
    if n > cap {
        return Err(Error::ExponentCapExceeded {
            exponent: n.to_string(),
            cap,
        });
    }
    Ok(())
}

fn affine_compose(outer: (&BigInt, &BigInt), inner: (&BigInt, &BigInt)) -> (BigInt, BigInt) {
    (outer.0 * inner.0, outer.0 * inner.1 + outer.1)
}

fn mod_affine_compose(p: u64, outer: (u64, u64), inner: (u64, u64)) -> (u64, u64) {
    let p128 = p as u128;
    let a = (outer.0 as u128 * inner.0 as u128) % p128;
    let b = (outer.0 as u128 * inner.1 as u128 + outer.1 as u128) % p128;
    (a as u64, b as u64)
}

fn mod_affine_pow(p: u64, mut base: (u64, u64), mut n: u64) -> (u64, u64) {
    let mut acc = (1 % p, 0);
    while n > 0 {
        if n & 1 == 1 {
            acc = mod_affine_compose(p, acc, base);
        }
        base = mod_affine_compose(p, base, base);
        n >>= 1;
    }
    acc
}

/// `f^n(x)` for a self-map of `{0..size}` by walking the orbit until it cycles.
pub(crate) fn orbit_power(f: impl Fn(usize) -> usize, n: u64, x: usize, size: usize) -> usize {
    let mut seen = vec![usize::MAX; size];
    let mut orbit: Vec<usize> = Vec::new();
    let mut cur = x;
    loop {
        if orbit.len() as u64 == n {
            return cur;
        }
        if seen[cur] != usize::MAX {
            let mu = seen[cur];
            let lambda = (orbit.len() - mu) as u64;
            return orbit[mu + ((n - mu as u64) % lambda) as usize];
        }
        seen[cur] = orbit.len();
        orbit.push(cur);
        cur = f(cur);
    }
}

fn to_residues(v: &[u64], p: u64) -> Vec<Residue> {
    v.iter().map(|&e| Residue::new(e, p)).collect()
}

fn from_residues(v: Vec<Residue>) -> Vec<u64> {
    v.into_iter().map(Residue::value).collect()
}

fn rational_mul_state(m: &Matrix<BigRational>, x: &State) -> State {
    match x {
        State::RatVec(v) => State::RatVec(m.mul_vec(v)),
        State::IntVec(v) => {
            let q: Vec<BigRational> = v
                .iter()
                .map(|e| BigRational::from_integer(e.clone()))
                .collect();
            State::IntVec(m.mul_vec(&q).into_iter().map(|e| e.to_integer()).collect())
        }
        _ => unreachable!("domain checked before application"),
    }
}

impl StepMap {
    pub fn table(n: usize, images: Vec<usize>) -> Result<Self> {
        let domain = StateSpace::finite(n)?;
        if images.len() != n {
            return Err(Error::InvalidMap(format!(
                "table has {} images for a space of size {n}",
                images.len()
            )));
        }
        if let Some(&bad) = images.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidMap(format!(
                "image {bad} out of range 0..{n}"
            )));
        }
        Ok(Self {
            domain,
            rule: Rule::Table(images),
        })
    }

    /// Table over `{0..images.len()}`.
    pub fn from_table(images: Vec<usize>) -> Result<Self> {
        Self::table(images.len(), images)
    }

    pub fn affine_int(a: impl Into<BigInt>, b: impl Into<BigInt>) -> Self {
        Self {
            domain: StateSpace::IntegerLine,
            rule: Rule::AffineInt {
                a: a.into(),
                b: b.into(),
            },
        }
    }

    pub fn modular_affine(p: u64, a: impl Into<BigInt>, b: impl Into<BigInt>) -> Result<Self> {
        let domain = StateSpace::modular_line(p)?;
        Ok(Self {
            domain,
            rule: Rule::ModularAffine {
                a: Residue::from_bigint(&a.into(), p).value(),
                b: Residue::from_bigint(&b.into(), p).value(),
            },
        })
    }

    /// Linear map over Q^n.
    pub fn matrix_rational(m: Matrix<BigRational>) -> Self {
        Self {
            domain: StateSpace::RationalVector(m.dim()),
            rule: Rule::MatrixLinear(MatrixRule::Rational(m)),
        }
    }

    /// Linear map over Z^n; entries must be integers.
    pub fn matrix_integer(m: Matrix<BigRational>) -> Result<Self> {
        if !m.is_integral() {
            return Err(Error::InvalidMap(
                "matrix acting on integer vectors must have integer entries".into(),
            ));
        }
        Ok(Self {
            domain: StateSpace::IntegerVector(m.dim()),
            rule: Rule::MatrixLinear(MatrixRule::Rational(m)),
        })
    }

    /// Linear map over (Z_p)^n, `p` prime.
    pub fn matrix_modular(m: Matrix<Residue>) -> Result<Self> {
        let domain = StateSpace::modular_vector(m.dim(), *m.ctx())?;
        Ok(Self {
            domain,
            rule: Rule::MatrixLinear(MatrixRule::Modular(m)),
        })
    }

    pub fn translate_int(g: impl Into<BigInt>) -> Self {
        Self {
            domain: StateSpace::IntegerLine,
            rule: Rule::MonoidTranslate(Translate::IntegerAdd(g.into())),
        }
    }

    /// Multiplication by a positive rational on Q.
    pub fn translate_rational(g: BigRational) -> Result<Self> {
        if !g.is_positive() {
            return Err(Error::InvalidMap(format!(
                "{} is not a positive rational",
                exact::fmt_rational(&g)
            )));
        }
        Ok(Self {
            domain: StateSpace::RationalLine,
            rule: Rule::MonoidTranslate(Translate::RationalMul(g)),
        })
    }

    pub fn translate_finite(monoid: Arc<FiniteMonoid>, element: usize) -> Result<Self> {
        if element >= monoid.size() {
            return Err(Error::InvalidMap(format!(
                "element {element} out of range 0..{}",
                monoid.size()
            )));
        }
        Ok(Self {
            domain: StateSpace::Finite(monoid.size()),
            rule: Rule::MonoidTranslate(Translate::Finite { monoid, element }),
        })
    }

    pub(crate) fn lifted(t1: MultiIndex, map: Arc<TimedStepMap>, axis: usize) -> Self {
        Self {
            domain: StateSpace::Augmented {
                t1,
                inner: Box::new(map.domain().clone()),
            },
            rule: Rule::Lifted { map, axis },
        }
    }

    /// The identity map, in the natural closed family of `space`.
    pub fn identity(space: &StateSpace) -> Result<Self> {
        Ok(match space {
            StateSpace::Finite(n) => Self::table(*n, (0..*n).collect())?,
            StateSpace::IntegerLine => Self::affine_int(1, 0),
            StateSpace::ModularLine(p) => Self::modular_affine(*p, 1, 0)?,
            StateSpace::RationalLine => Self::translate_rational(<BigRational as One>::one())?,
            StateSpace::RationalVector(d) => Self::matrix_rational(Matrix::identity(*d, ())),
            StateSpace::IntegerVector(d) => Self::matrix_integer(Matrix::identity(*d, ()))?,
            StateSpace::ModularVector { dim, modulus } => {
                Self::matrix_modular(Matrix::identity(*dim, *modulus))?
            }
            StateSpace::Augmented { .. } => Self {
                domain: space.clone(),
                rule: Rule::Composite(Vec::new()),
            },
        })
    }

    pub fn domain(&self) -> &StateSpace {
        &self.domain
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// Exact image of `x`.
    pub fn apply(&self, x: &State) -> Result<State> {
        self.domain.check(x)?;
        self.apply_unchecked(x)
    }

    fn apply_unchecked(&self, x: &State) -> Result<State> {
        Ok(match (&self.rule, x) {
            (Rule::Table(t), State::Label(l)) => State::Label(t[*l]),
            (Rule::AffineInt { a, b }, State::Int(v)) => State::Int(a * v + b),
            (Rule::ModularAffine { a, b }, State::Residue(v)) => {
                let StateSpace::ModularLine(p) = self.domain else {
                    unreachable!()
                };
                let y = (*a as u128 * *v as u128 + *b as u128) % p as u128;
                State::Residue(y as u64)
            }
            (Rule::MatrixLinear(MatrixRule::Rational(m)), x) => rational_mul_state(m, x),
            (Rule::MatrixLinear(MatrixRule::Modular(m)), State::ResVec(v)) => {
                State::ResVec(from_residues(m.mul_vec(&to_residues(v, *m.ctx()))))
            }
            (Rule::MonoidTranslate(Translate::IntegerAdd(g)), State::Int(v)) => State::Int(g + v),
            (Rule::MonoidTranslate(Translate::RationalMul(g)), State::Rational(v)) => {
                State::Rational(g * v)
            }
            (Rule::MonoidTranslate(Translate::Finite { monoid, element }), State::Label(l)) => {
                State::Label(monoid.op(*element, *l))
            }
            (Rule::Lifted { map, axis }, State::Augmented(s, inner)) => {
                let next = map.apply_at(s, inner)?;
                State::Augmented(s.step(*axis, 1)?, Box::new(next))
            }
            (Rule::Composite(maps), x) => {
                let mut cur = x.clone();
                for m in maps.iter().rev() {
                    cur = m.apply_unchecked(&cur)?;
                }
                cur
            }
            _ => unreachable!("domain checked before application"),
        })
    }

    /// The table of images, for maps on `Finite(n)`.
    pub fn to_table(&self) -> Option<Vec<usize>> {
        let StateSpace::Finite(n) = self.domain else {
            return None;
        };
        match &self.rule {
            Rule::Table(t) => Some(t.clone()),
            _ => (0..n)
                .map(|i| self.apply_unchecked(&State::Label(i)).ok()?.label())
                .collect(),
        }
    }

    /// `self o inner` (apply `inner` first), kept inside a closed family when possible.
    pub fn compose(&self, inner: &StepMap) -> Result<StepMap> {
        if self.domain != inner.domain {
            return Err(Error::DomainMismatch {
                left: self.domain.to_string(),
                right: inner.domain.to_string(),
            });
        }
        let domain = self.domain.clone();
        let rule = match (&self.rule, &inner.rule) {
            (
                Rule::MonoidTranslate(Translate::Finite {
                    monoid: m1,
                    element: a,
                }),
                Rule::MonoidTranslate(Translate::Finite {
                    monoid: m2,
                    element: b,
                }),
            ) if m1 == m2 => Rule::MonoidTranslate(Translate::Finite {
                monoid: m1.clone(),
                element: m1.op(*a, *b),
            }),
            _ if matches!(domain, StateSpace::Finite(_)) => {
                let f = self.to_table().expect("finite domain");
                let g = inner.to_table().expect("finite domain");
                Rule::Table(g.iter().map(|&i| f[i]).collect())
            }
            (
                Rule::MonoidTranslate(Translate::IntegerAdd(g)),
                Rule::MonoidTranslate(Translate::IntegerAdd(h)),
            ) => Rule::MonoidTranslate(Translate::IntegerAdd(g + h)),
            (
                Rule::MonoidTranslate(Translate::RationalMul(g)),
                Rule::MonoidTranslate(Translate::RationalMul(h)),
            ) => Rule::MonoidTranslate(Translate::RationalMul(g * h)),
            (Rule::ModularAffine { a, b }, Rule::ModularAffine { a: c, b: d }) => {
                let StateSpace::ModularLine(p) = domain else {
                    unreachable!()
                };
                let (a, b) = mod_affine_compose(p, (*a, *b), (*c, *d));
                Rule::ModularAffine { a, b }
            }
            (
                Rule::MatrixLinear(MatrixRule::Rational(a)),
                Rule::MatrixLinear(MatrixRule::Rational(b)),
            ) => Rule::MatrixLinear(MatrixRule::Rational(a.mul(b))),
            (
                Rule::MatrixLinear(MatrixRule::Modular(a)),
                Rule::MatrixLinear(MatrixRule::Modular(b)),
            ) => Rule::MatrixLinear(MatrixRule::Modular(a.mul(b))),
            _ => match (self.integer_affine(), inner.integer_affine()) {
                (Some((a, b)), Some((c, d))) => {
                    let (a, b) = affine_compose((&a, &b), (&c, &d));
                    Rule::AffineInt { a, b }
                }
                _ => {
                    let mut maps = Vec::new();
                    for m in [self, inner] {
                        match &m.rule {
                            Rule::Composite(inner_maps) => maps.extend(inner_maps.iter().cloned()),
                            _ => maps.push(m.clone()),
                        }
                    }
                    Rule::Composite(maps)
                }
            },
        };
        Ok(StepMap { domain, rule })
    }

    /// Coefficients `(a, b)` when this map is `x -> a x + b` on Z.
    fn integer_affine(&self) -> Option<(BigInt, BigInt)> {
        match &self.rule {
            Rule::AffineInt { a, b } => Some((a.clone(), b.clone())),
            Rule::MonoidTranslate(Translate::IntegerAdd(g)) => Some((BigInt::one(), g.clone())),
            _ => None,
        }
    }

    fn normal_form(&self) -> Option<NormalForm> {
        Some(match &self.rule {
            Rule::AffineInt { .. } | Rule::MonoidTranslate(Translate::IntegerAdd(_)) => {
                let (a, b) = self.integer_affine()?;
                NormalForm::Affine(a, b)
            }
            Rule::ModularAffine { a, b } => NormalForm::ModAffine(*a, *b),
            Rule::MatrixLinear(MatrixRule::Rational(m)) => NormalForm::MatrixQ(m.clone()),
            Rule::MatrixLinear(MatrixRule::Modular(m)) => NormalForm::MatrixP(m.clone()),
            Rule::MonoidTranslate(Translate::RationalMul(g)) => NormalForm::Scale(g.clone()),
            Rule::Table(t) => NormalForm::Table(t.clone()),
            Rule::MonoidTranslate(Translate::Finite { .. }) => NormalForm::Table(self.to_table()?),
            Rule::Lifted { .. } => return None,
            Rule::Composite(maps) => {
                let mut acc = StepMap::identity(&self.domain).ok()?;
                if matches!(acc.rule, Rule::Composite(_)) && !maps.is_empty() {
                    return None;
                }
                for m in maps {
                    acc = acc.compose(m).ok()?;
                    if matches!(acc.rule, Rule::Composite(_)) {
                        return None;
                    }
                }
                return acc.normal_form();
            }
        })
    }

    /// `G^(n)(x)`.
    pub fn iterate(&self, n: u64, x: &State) -> Result<State> {
        self.iterate_traced(n, x, &ExponentCaps::default())
            .map(|(s, _)| s)
    }

    /// `G^(n)(x)` plus the method used; growth-prone families respect `caps`.
    pub fn iterate_traced(
        &self,
        n: u64,
        x: &State,
        caps: &ExponentCaps,
    ) -> Result<(State, PowerMethod)> {
        self.domain.check(x)?;
        if n == 0 {
            return Ok((x.clone(), PowerMethod::Direct));
        }
        Ok(match (&self.rule, x) {
            (Rule::Table(t), State::Label(l)) => (
                State::Label(orbit_power(|i| t[i], n, *l, t.len())),
                PowerMethod::Cycle,
            ),
            (Rule::MonoidTranslate(Translate::Finite { monoid, element }), State::Label(l)) => (
                State::Label(orbit_power(
                    |i| monoid.op(*element, i),
                    n,
                    *l,
                    monoid.size(),
                )),
                PowerMethod::Cycle,
            ),
            (Rule::AffineInt { a, b }, State::Int(v)) => {
                if a.is_one() {
                    (State::Int(v + b * BigInt::from(n)), PowerMethod::Direct)
                } else if a.is_zero() {
                    (State::Int(b.clone()), PowerMethod::Direct)
                } else if *a == BigInt::from(-1) {
                    let out = if n.is_multiple_of(2) {
                        v.clone()
                    } else {
                        b - v
                    };
                    (State::Int(out), PowerMethod::Direct)
                } else {
                    cap_check(n, caps.exact)?;
                    // a^n x + b (a^n - 1) / (a - 1)
                    let an = num_traits::pow::Pow::pow(a, n);
                    let geom = (&an - BigInt::one()) / (a - BigInt::one());
                    (State::Int(&an * v + b * geom), PowerMethod::Binary)
                }
            }
            (Rule::ModularAffine { a, b }, State::Residue(v)) => {
                cap_check(n, caps.modular)?;
                let StateSpace::ModularLine(p) = self.domain else {
                    unreachable!()
                };
                let (pa, pb) = mod_affine_pow(p, (*a, *b), n);
                let out = (pa as u128 * *v as u128 + pb as u128) % p as u128;
                (State::Residue(out as u64), PowerMethod::Binary)
            }
            (Rule::MatrixLinear(MatrixRule::Rational(m)), x) => {
                cap_check(n, caps.exact)?;
                (rational_mul_state(&m.pow(n), x), PowerMethod::Binary)
            }
            (Rule::MatrixLinear(MatrixRule::Modular(m)), State::ResVec(v)) => {
                cap_check(n, caps.modular)?;
                let out = m.pow(n).mul_vec(&to_residues(v, *m.ctx()));
                (State::ResVec(from_residues(out)), PowerMethod::Binary)
            }
            (Rule::MonoidTranslate(Translate::IntegerAdd(g)), State::Int(v)) => {
                (State::Int(v + g * BigInt::from(n)), PowerMethod::Direct)
            }
            (Rule::MonoidTranslate(Translate::RationalMul(g)), State::Rational(v)) => {
                if g.is_one() {
                    (x.clone(), PowerMethod::Direct)
                } else {
                    cap_check(n, caps.exact)?;
                    let e = i32::try_from(n).map_err(|_| Error::ExponentCapExceeded {
                        exponent: n.to_string(),
                        cap: i32::MAX as u64,
                    })?;
                    (State::Rational(g.pow(e) * v), PowerMethod::Binary)
                }
            }
            _ => {
                let mut cur = x.clone();
                for _ in 0..n {
                    cur = self.apply_unchecked(&cur)?;
                }
                (cur, PowerMethod::Iteration)
            }
        })
    }

    /// `G^(k)(x)` for signed `k`; negative powers go through the two-sided inverse.
    pub fn iterate_signed(&self, k: i64, x: &State) -> Result<State> {
        self.iterate_signed_traced(k, x, &ExponentCaps::default())
            .map(|(s, _)| s)
    }

    pub fn iterate_signed_traced(
        &self,
        k: i64,
        x: &State,
        caps: &ExponentCaps,
    ) -> Result<(State, PowerMethod)> {
        if k >= 0 {
            return self.iterate_traced(k as u64, x, caps);
        }
        self.domain.check(x)?;
        let inverse = crate::extension::two_sided_inverse(self)?;
        inverse.iterate_traced(k.unsigned_abs(), x, caps)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum NormalForm {
    Affine(BigInt, BigInt),
    ModAffine(u64, u64),
    MatrixQ(Matrix<BigRational>),
    MatrixP(Matrix<Residue>),
    Scale(BigRational),
    Table(Vec<usize>),
}

/// How an equality verdict was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Decided {
    /// Pointwise over every state of a finite space.
    Exhaustive,
    /// By comparing closed-form parameters.
    Symbolic,
    /// Pointwise on a caller-supplied sample only; equality is not conclusive.
    Sampled,
}

impl Decided {
    pub fn as_str(self) -> &'static str {
        match self {
            Decided::Exhaustive => "exhaustive",
            Decided::Symbolic => "symbolic",
            Decided::Sampled => "sampled",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equality {
    pub equal: bool,
    pub decided: Decided,
    /// A state where the two maps differ; present exactly when `equal` is false.
    pub witness: Option<State>,
}

/// Decides `f == g` as functions on their common domain.
pub fn maps_equal(f: &StepMap, g: &StepMap, sample: Option<&[State]>) -> Result<Equality> {
    if f.domain != g.domain {
        return Err(Error::DomainMismatch {
            left: f.domain.to_string(),
            right: g.domain.to_string(),
        });
    }
    let domain = &f.domain;
    if let Some(states) = domain.enumerate(EXHAUSTIVE_LIMIT) {
        return pointwise(f, g, &states, Decided::Exhaustive);
    }
    if let (Some(nf), Some(ng)) = (f.normal_form(), g.normal_form()) {
        if std::mem::discriminant(&nf) == std::mem::discriminant(&ng) {
            let witness = if nf == ng {
                None
            } else {
                Some(symbolic_witness(domain, &nf, &ng).ok_or_else(|| {
                    Error::Inconsistent("no witness for unequal normal forms".into())
                })?)
            };
            return Ok(Equality {
                equal: witness.is_none(),
                decided: Decided::Symbolic,
                witness,
            });
        }
    }
    match sample {
        Some(states) => pointwise(f, g, states, Decided::Sampled),
        None => Err(Error::IncomparableRules),
    }
}

fn pointwise(f: &StepMap, g: &StepMap, states: &[State], decided: Decided) -> Result<Equality> {
    for x in states {
        if f.apply(x)? != g.apply(x)? {
            return Ok(Equality {
                equal: false,
                decided,
                witness: Some(x.clone()),
            });
        }
    }
    Ok(Equality {
        equal: true,
        decided,
        witness: None,
    })
}

fn symbolic_witness(domain: &StateSpace, f: &NormalForm, g: &NormalForm) -> Option<State> {
    match (f, g) {
        // b differs -> images of 0 differ; otherwise a differs -> images of 1 differ
        (NormalForm::Affine(_, b1), NormalForm::Affine(_, b2)) => {
            domain.scalar_state(if b1 != b2 { 0 } else { 1 })
        }
        (NormalForm::ModAffine(_, b1), NormalForm::ModAffine(_, b2)) => {
            domain.scalar_state(if b1 != b2 { 0 } else { 1 })
        }
        (NormalForm::Scale(_), NormalForm::Scale(_)) => domain.scalar_state(1),
        (NormalForm::MatrixQ(a), NormalForm::MatrixQ(b)) => {
            domain.basis_state(a.first_difference(b)?.1)
        }
        (NormalForm::MatrixP(a), NormalForm::MatrixP(b)) => {
            domain.basis_state(a.first_difference(b)?.1)
        }
        (NormalForm::Table(a), NormalForm::Table(b)) => {
            domain.scalar_state(a.iter().zip(b).position(|(x, y)| x != y)? as i64)
        }
        _ => None,
    }
}
