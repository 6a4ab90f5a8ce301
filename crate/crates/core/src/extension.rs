//! Injectivity, surjectivity and inverses of step maps, and evaluation of
//! bijective systems on all of Z^m.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::autonomous::{AutonomousSystem, EvalOptions, Evaluation, RouteStep};
use crate::error::{Error, Result};
use crate::lattice::MultiIndex;
use crate::statespace::{
    Matrix, MatrixRule, Residue, Rule, Scalar, State, StateSpace, StepMap, Translate,
    EXHAUSTIVE_LIMIT,
};

/// A yes/no property with a checkable counterexample on "no".
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict<W> {
    Yes,
    No(W),
    Undecided,
}

impl<W> Verdict<W> {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes)
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Verdict::No(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapClassification {
    /// `No((p, q))` with `p != q` and `G(p) = G(q)`.
    pub injective: Verdict<(State, State)>,
    /// `No(y)` with `y` outside the image.
    pub surjective: Verdict<State>,
}

impl MapClassification {
    fn bijective() -> Self {
        Self {
            injective: Verdict::Yes,
            surjective: Verdict::Yes,
        }
    }

    fn undecided() -> Self {
        Self {
            injective: Verdict::Undecided,
            surjective: Verdict::Undecided,
        }
    }

    pub fn is_bijective(&self) -> bool {
        self.injective.is_yes() && self.surjective.is_yes()
    }
}

#[derive(Clone, Debug)]
pub enum InverseWitness {
    /// `g o h = h o g = id`.
    TwoSidedInverse(StepMap),
    /// `g o h = id` only.
    RightInverse(StepMap),
}

impl InverseWitness {
    pub fn map(&self) -> &StepMap {
        match self {
            InverseWitness::TwoSidedInverse(h) | InverseWitness::RightInverse(h) => h,
        }
    }
}

fn all_states(space: &StateSpace) -> Option<Vec<State>> {
    match space {
        StateSpace::Finite(_) => space.enumerate(u64::MAX),
        _ => space.enumerate(EXHAUSTIVE_LIMIT),
    }
}

fn classify_exhaustive(map: &StepMap, states: &[State]) -> Result<MapClassification> {
    let mut first_preimage: HashMap<State, State> = HashMap::with_capacity(states.len());
    let mut collision = None;
    for x in states {
        let y = map.apply(x)?;
        match first_preimage.get(&y) {
            Some(p) if collision.is_none() => collision = Some((p.clone(), x.clone())),
            Some(_) => {}
            None => {
                first_preimage.insert(y, x.clone());
            }
        }
    }
    let missed = states.iter().find(|y| !first_preimage.contains_key(*y));
    Ok(MapClassification {
        injective: collision.map_or(Verdict::Yes, Verdict::No),
        surjective: missed.cloned().map_or(Verdict::Yes, Verdict::No),
    })
}

fn scale_to_integers(v: &[BigRational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
    v.iter()
        .map(|e| (e * BigRational::from_integer(lcm.clone())).to_integer())
        .collect()
}

fn vector_state(space: &StateSpace, v: Vec<BigRational>) -> State {
    match space {
        StateSpace::IntegerVector(_) => State::IntVec(scale_to_integers(&v)),
        _ => State::RatVec(v),
    }
}

fn basis(space: &StateSpace, dim: usize, j: usize) -> State {
    let v: Vec<BigRational> = (0..dim)
        .map(|i| BigRational::from_integer(BigInt::from(i64::from(i == j))))
        .collect();
    vector_state(space, v)
}

fn classify_matrix_rational(space: &StateSpace, m: &Matrix<BigRational>) -> MapClassification {
    let n = m.dim();
    let zero = || vector_state(space, vec![<BigRational as Zero>::zero(); n]);
    if let Some(k) = m.kernel_vector() {
        let j = m
            .basis_vector_outside_image()
            .expect("singular matrices have a proper image");
        return MapClassification {
            injective: Verdict::No((zero(), vector_state(space, k))),
            surjective: Verdict::No(basis(space, n, j)),
        };
    }
    if matches!(space, StateSpace::IntegerVector(_)) {
        let inv = m.inverse().expect("nonsingular");
        if !inv.is_integral() {
            // A x = e_j has the unique rational solution column j of A^-1.
            let j = (0..n)
                .find(|&j| (0..n).any(|i| !inv.get(i, j).is_integer()))
                .expect("a non-integral inverse has a non-integral column");
            return MapClassification {
                injective: Verdict::Yes,
                surjective: Verdict::No(basis(space, n, j)),
            };
        }
    }
    MapClassification::bijective()
}

fn classify_matrix_modular(m: &Matrix<Residue>) -> MapClassification {
    let n = m.dim();
    let p = *m.ctx();
    match m.kernel_vector() {
        None => MapClassification::bijective(),
        Some(k) => {
            let j = m
                .basis_vector_outside_image()
                .expect("singular matrices have a proper image");
            MapClassification {
                injective: Verdict::No((
                    State::ResVec(vec![0; n]),
                    State::ResVec(k.into_iter().map(Residue::value).collect()),
                )),
                surjective: Verdict::No(State::ResVec(
                    (0..n).map(|i| u64::from(i == j) % p).collect(),
                )),
            }
        }
    }
}

/// Decides injectivity and surjectivity: pointwise on small finite spaces,
/// from the rule's parameters otherwise.
pub fn classify(map: &StepMap) -> MapClassification {
    if let Some(states) = all_states(map.domain()) {
        if let Ok(c) = classify_exhaustive(map, &states) {
            return c;
        }
    }
    match map.rule() {
        Rule::AffineInt { a, b } => {
            let missed = State::Int(b + BigInt::one());
            if a.is_zero() {
                MapClassification {
                    injective: Verdict::No((State::int(0), State::int(1))),
                    surjective: Verdict::No(missed),
                }
            } else if a.abs().is_one() {
                MapClassification::bijective()
            } else {
                MapClassification {
                    injective: Verdict::Yes,
                    surjective: Verdict::No(missed),
                }
            }
        }
        Rule::ModularAffine { a, b } => {
            let StateSpace::ModularLine(p) = *map.domain() else {
                unreachable!()
            };
            let g = a.gcd(&p);
            if g == 1 {
                MapClassification::bijective()
            } else {
                MapClassification {
                    injective: Verdict::No((State::Residue(0), State::Residue(p / g))),
                    surjective: Verdict::No(State::Residue(((*b as u128 + 1) % p as u128) as u64)),
                }
            }
        }
        Rule::MatrixLinear(MatrixRule::Rational(m)) => classify_matrix_rational(map.domain(), m),
        Rule::MatrixLinear(MatrixRule::Modular(m)) => classify_matrix_modular(m),
        Rule::MonoidTranslate(Translate::IntegerAdd(_) | Translate::RationalMul(_)) => {
            MapClassification::bijective()
        }
        _ => MapClassification::undecided(),
    }
}

/// An inverse of `map`: two-sided when bijective, otherwise a right inverse
/// picking the least preimage in canonical state order.
pub fn invert(map: &StepMap) -> Result<InverseWitness> {
    let class = classify(map);
    if let Verdict::No(y) = &class.surjective {
        return Err(Error::NotSurjective(y.to_string()));
    }
    if class.surjective == Verdict::Undecided || class.injective == Verdict::Undecided {
        return Err(Error::Undecided);
    }
    let injective = class.injective.is_yes();
    let wrap = |h: StepMap| {
        if injective {
            InverseWitness::TwoSidedInverse(h)
        } else {
            InverseWitness::RightInverse(h)
        }
    };
    let inverse = match (map.rule(), map.domain()) {
        (Rule::MonoidTranslate(Translate::Finite { monoid, element }), _)
            if monoid.inverse(*element).is_some() =>
        {
            StepMap::translate_finite(monoid.clone(), monoid.inverse(*element).unwrap())?
        }
        (_, StateSpace::Finite(n)) => {
            let table = map.to_table().expect("finite domain");
            let mut inv = vec![usize::MAX; *n];
            for (x, &y) in table.iter().enumerate() {
                if inv[y] == usize::MAX {
                    inv[y] = x;
                }
            }
            StepMap::table(*n, inv)?
        }
        (Rule::AffineInt { a, b }, _) => StepMap::affine_int(a.clone(), -(a * b)),
        (Rule::ModularAffine { a, b }, StateSpace::ModularLine(p)) => {
            let ainv = Residue::new(*a, *p).inv().expect("bijective");
            let c = ainv.mul(&Residue::new(*b, *p)).neg();
            StepMap::modular_affine(*p, ainv.value(), c.value())?
        }
        (Rule::MatrixLinear(MatrixRule::Rational(m)), StateSpace::IntegerVector(_)) => {
            StepMap::matrix_integer(m.inverse().ok_or(Error::SingularMatrix)?)?
        }
        (Rule::MatrixLinear(MatrixRule::Rational(m)), _) => {
            StepMap::matrix_rational(m.inverse().ok_or(Error::SingularMatrix)?)
        }
        (Rule::MatrixLinear(MatrixRule::Modular(m)), _) => {
            StepMap::matrix_modular(m.inverse().ok_or(Error::SingularMatrix)?)?
        }
        (Rule::MonoidTranslate(Translate::IntegerAdd(g)), _) => StepMap::translate_int(-g),
        (Rule::MonoidTranslate(Translate::RationalMul(g)), _) => {
            StepMap::translate_rational(g.recip())?
        }
        (Rule::ModularAffine { .. }, _) => unreachable!("modular affine lives on Z_p"),
        _ => return Err(Error::Undecided),
    };
    Ok(wrap(inverse))
}

/// `G^-1`, or [`Error::NotBijective`] when `G` is decidably not a bijection.
pub fn two_sided_inverse(map: &StepMap) -> Result<StepMap> {
    match invert(map) {
        Ok(InverseWitness::TwoSidedInverse(h)) => Ok(h),
        Ok(InverseWitness::RightInverse(_)) => Err(Error::NotBijective(format!(
            "{} is not injective",
            map.domain()
        ))),
        Err(Error::NotSurjective(y)) => Err(Error::NotBijective(format!("{y} has no preimage"))),
        Err(e) => Err(e),
    }
}

/// `x(t)` for any `t` in Z^m, using inverse powers on axes where `t < t0`.
pub fn eval_anywhere(
    sys: &AutonomousSystem,
    t0: &MultiIndex,
    x0: &State,
    t: &MultiIndex,
) -> Result<State> {
    Ok(eval_anywhere_traced(sys, t0, x0, t, EvalOptions::default())?.state)
}

pub fn eval_anywhere_traced(
    sys: &AutonomousSystem,
    t0: &MultiIndex,
    x0: &State,
    t: &MultiIndex,
    opts: EvalOptions,
) -> Result<Evaluation> {
    let delta = t.checked_sub(t0)?;
    if delta.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: delta.dim(),
        });
    }
    for (i, g) in sys.maps().iter().enumerate() {
        if !classify(g).is_bijective() {
            return Err(Error::NotBijective(format!(
                "G_{} is not a bijection",
                i + 1
            )));
        }
    }
    let status = sys.gate(opts)?;
    sys.space().check(x0)?;
    let mut state = x0.clone();
    let mut route = Vec::with_capacity(sys.dim());
    for axis in (1..=sys.dim()).rev() {
        let k = delta.coords()[axis - 1];
        let (next, method) =
            sys.maps()[axis - 1].iterate_signed_traced(k, &state, &sys.limits().exponents)?;
        state = next;
        route.push(RouteStep {
            axis,
            exponent: k,
            method,
        });
    }
    route.reverse();
    Ok(Evaluation {
        state,
        status,
        route,
        unsafe_override: status == crate::autonomous::CompatStatus::Incompatible,
    })
}

/// Two solutions on `{t >= base}` that coincide at `t0 = base + 1_axis`.
#[derive(Clone, Debug)]
pub struct ExtensionPair {
    sys: AutonomousSystem,
    pub axis: usize,
    pub base: MultiIndex,
    pub p: State,
    pub q: State,
    /// Common value `G_axis(p) = G_axis(q)` at `t0`.
    pub value: State,
}

impl ExtensionPair {
    /// The solution with `x(base) = p`.
    pub fn first(&self, t: &MultiIndex) -> Result<State> {
        self.sys.eval_forward(&self.base, &self.p, t)
    }

    /// The solution with `x(base) = q`.
    pub fn second(&self, t: &MultiIndex) -> Result<State> {
        self.sys.eval_forward(&self.base, &self.q, t)
    }
}

#[derive(Clone, Debug)]
pub enum BackwardExtension {
    /// `x0` has exactly one `G_axis`-preimage; `bijective` says whether the
    /// whole backward chain is unique as well.
    Unique {
        axis: usize,
        base: MultiIndex,
        value: State,
        bijective: bool,
    },
    NonUnique(Box<ExtensionPair>),
    /// `x0` is outside the image of `G_axis`.
    NoExtension {
        axis: usize,
        state: State,
    },
}

/// Extends `x(t0) = x0` one step back along `axis`, exhibiting two distinct
/// extensions when `x0` has more than one preimage.
pub fn backward_extension_pair(
    sys: &AutonomousSystem,
    t0: &MultiIndex,
    x0: &State,
    axis: usize,
) -> Result<BackwardExtension> {
    let g = sys.map(axis)?;
    let states = all_states(sys.space()).ok_or(Error::InfiniteStateSpace)?;
    sys.gate(EvalOptions::default())?;
    sys.space().check(x0)?;
    let base = t0.step(axis, -1)?;
    let mut preimages = Vec::new();
    for x in &states {
        if &g.apply(x)? == x0 {
            preimages.push(x.clone());
            if preimages.len() == 2 {
                break;
            }
        }
    }
    Ok(match preimages.len() {
        0 => BackwardExtension::NoExtension {
            axis,
            state: x0.clone(),
        },
        1 => BackwardExtension::Unique {
            axis,
            base,
            value: preimages.pop().unwrap(),
            bijective: classify(g).is_bijective(),
        },
        _ => {
            let q = preimages.pop().unwrap();
            let p = preimages.pop().unwrap();
            BackwardExtension::NonUnique(Box::new(ExtensionPair {
                sys: sys.clone(),
                axis,
                base,
                p,
                q,
                value: x0.clone(),
            }))
        }
    })
}
