//! Direct formulas for recurrences driven by a commutative monoid action:
//! `x(t) = a_1^(d_1) ... a_m^(d_m) x0` with `d = t - t0`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::MultiIndex;
use crate::statespace::{ExponentCaps, FiniteMonoid, Matrix, Scalar};

/// A monoid with a fixed action on a state set.
pub trait Monoid {
    type Elem: Clone + PartialEq + std::fmt::Debug;
    type State: Clone + PartialEq + std::fmt::Debug;

    fn identity(&self) -> Self::Elem;
    fn op(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inverse(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn act(&self, a: &Self::Elem, x: &Self::State) -> Self::State;

    /// `a^k` by repeated squaring.
    fn pow(&self, a: &Self::Elem, mut k: u64) -> Self::Elem {
        let mut acc = self.identity();
        let mut base = a.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.op(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = self.op(&base, &base);
            }
        }
        acc
    }

    fn commute(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.op(a, b) == self.op(b, a)
    }

    /// Exponent bound for this monoid, if its elements grow with the power.
    fn exponent_cap(&self, _caps: &ExponentCaps) -> Option<u64> {
        None
    }
}

/// `(Z, +)` acting on Z by translation.
#[derive(Clone, Copy, Debug, Default)]
pub struct IntegerAdditive;

impl Monoid for IntegerAdditive {
    type Elem = BigInt;
    type State = BigInt;

    fn identity(&self) -> BigInt {
        BigInt::zero()
    }
    fn op(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn inverse(&self, a: &BigInt) -> Option<BigInt> {
        Some(-a)
    }
    fn act(&self, a: &BigInt, x: &BigInt) -> BigInt {
        a + x
    }
    fn pow(&self, a: &BigInt, k: u64) -> BigInt {
        a * BigInt::from(k)
    }
}

/// `(Q_{>0}, *)` acting on Q by multiplication.
#[derive(Clone, Copy, Debug, Default)]
pub struct PositiveRationalMul;

impl Monoid for PositiveRationalMul {
    type Elem = BigRational;
    type State = BigRational;

    fn identity(&self) -> BigRational {
        <BigRational as One>::one()
    }
    fn op(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn inverse(&self, a: &BigRational) -> Option<BigRational> {
        (!Zero::is_zero(a)).then(|| a.recip())
    }
    fn act(&self, a: &BigRational, x: &BigRational) -> BigRational {
        a * x
    }
    fn exponent_cap(&self, caps: &ExponentCaps) -> Option<u64> {
        Some(caps.exact)
    }
}

/// A finite monoid acting on itself by left multiplication.
impl Monoid for FiniteMonoid {
    type Elem = usize;
    type State = usize;

    fn identity(&self) -> usize {
        FiniteMonoid::identity(self)
    }
    fn op(&self, a: &usize, b: &usize) -> usize {
        FiniteMonoid::op(self, *a, *b)
    }
    fn inverse(&self, a: &usize) -> Option<usize> {
        FiniteMonoid::inverse(self, *a)
    }
    fn act(&self, a: &usize, x: &usize) -> usize {
        FiniteMonoid::op(self, *a, *x)
    }
    fn pow(&self, a: &usize, k: u64) -> usize {
        FiniteMonoid::pow(self, *a, k)
    }
}

/// `n x n` matrices under multiplication acting on column vectors.
#[derive(Clone, Debug)]
pub struct MatrixMonoid<K: Scalar> {
    pub n: usize,
    pub ctx: K::Ctx,
}

impl<K: Scalar> Monoid for MatrixMonoid<K> {
    type Elem = Matrix<K>;
    type State = Vec<K>;

    fn identity(&self) -> Matrix<K> {
        Matrix::identity(self.n, self.ctx.clone())
    }
    fn op(&self, a: &Matrix<K>, b: &Matrix<K>) -> Matrix<K> {
        a.mul(b)
    }
    fn inverse(&self, a: &Matrix<K>) -> Option<Matrix<K>> {
        a.inverse()
    }
    fn act(&self, a: &Matrix<K>, x: &Vec<K>) -> Vec<K> {
        a.mul_vec(x)
    }
    fn pow(&self, a: &Matrix<K>, k: u64) -> Matrix<K> {
        a.pow(k)
    }
}

/// Elements `a_1, ..., a_m` of a monoid, pairwise commuting.
#[derive(Clone, Debug)]
pub struct MonoidActionSystem<M: Monoid> {
    monoid: M,
    elements: Vec<M::Elem>,
    caps: ExponentCaps,
}

impl<M: Monoid> MonoidActionSystem<M> {
    pub fn new(monoid: M, elements: Vec<M::Elem>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::ZeroDimension);
        }
        for (i, a) in elements.iter().enumerate() {
            for (j, b) in elements.iter().enumerate().skip(i + 1) {
                if !monoid.commute(a, b) {
                    return Err(Error::InvalidMonoid(format!(
                        "a_{} and a_{} do not commute",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            monoid,
            elements,
            caps: ExponentCaps::default(),
        })
    }

    pub fn with_caps(mut self, caps: ExponentCaps) -> Self {
        self.caps = caps;
        self
    }

    pub fn monoid(&self) -> &M {
        &self.monoid
    }

    pub fn elements(&self) -> &[M::Elem] {
        &self.elements
    }

    /// `prod_a a_a^(t^a - t0^a)`, product taken in axis order.
    pub fn element_for(&self, t0: &MultiIndex, t: &MultiIndex) -> Result<M::Elem> {
        let delta = signed_deltas(t0, t, self.elements.len())?;
        let cap = self.monoid.exponent_cap(&self.caps);
        let mut acc = self.monoid.identity();
        for (i, (a, &d)) in self.elements.iter().zip(&delta).enumerate() {
            if let Some(cap) = cap {
                check_cap(d.unsigned_abs(), cap)?;
            }
            let base = if d < 0 {
                self.monoid
                    .inverse(a)
                    .ok_or_else(|| Error::NotInvertible(format!("a_{}", i + 1)))?
            } else {
                a.clone()
            };
            acc = self
                .monoid
                .op(&acc, &self.monoid.pow(&base, d.unsigned_abs()));
        }
        Ok(acc)
    }
}

fn check_cap(k: u64, cap: u64) -> Result<()> {
    if k > cap {
        return Err(Error::ExponentCapExceeded {
            exponent: k.to_string(),
            cap,
        });
    }
    Ok(())
}

fn signed_deltas(t0: &MultiIndex, t: &MultiIndex, m: usize) -> Result<Vec<i64>> {
    if t0.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: t0.dim(),
        });
    }
    Ok(t.checked_sub(t0)?.coords().to_vec())
}

/// `x(t)` by one monoid product and a single action on `x0`; negative
/// exponents need invertible elements.
pub fn eval_monoid<M: Monoid>(
    sys: &MonoidActionSystem<M>,
    t0: &MultiIndex,
    x0: &M::State,
    t: &MultiIndex,
) -> Result<M::State> {
    let g = sys.element_for(t0, t)?;
    Ok(sys.monoid.act(&g, x0))
}

/// Which additive monoid the coefficients live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdditiveDomain {
    Integers,
    /// `(N, +)`: not a group, so every `t^a - t0^a` must be nonnegative.
    Naturals,
}

/// `x(t) = sum_a (t^a - t0^a) a_a + x0`.
pub fn eval_additive(
    a: &[BigInt],
    t0: &MultiIndex,
    x0: &BigInt,
    t: &MultiIndex,
    domain: AdditiveDomain,
) -> Result<BigInt> {
    let delta = signed_deltas(t0, t, a.len())?;
    if domain == AdditiveDomain::Naturals {
        if delta.iter().any(|&d| d < 0) {
            return Err(Error::NegativeInNonGroup);
        }
        if x0.is_negative() || a.iter().any(Signed::is_negative) {
            return Err(Error::InvalidMonoid("naturals cannot be negative".into()));
        }
    }
    Ok(a.iter()
        .zip(&delta)
        .fold(x0.clone(), |acc, (ai, &d)| acc + ai * BigInt::from(d)))
}

/// `A^k`; negative `k` needs an invertible `A`. `cap` bounds `|k|`.
pub fn matrix_power<K: Scalar>(a: &Matrix<K>, k: i64, cap: Option<u64>) -> Result<Matrix<K>> {
    if let Some(cap) = cap {
        check_cap(k.unsigned_abs(), cap)?;
    }
    if k >= 0 {
        Ok(a.pow(k as u64))
    } else {
        Ok(a.inverse()
            .ok_or(Error::SingularMatrix)?
            .pow(k.unsigned_abs()))
    }
}

/// Exact comparison of `A_a A_b` and `A_b A_a` for all pairs; reports the first
/// differing entry (0-based row and column).
pub fn check_commuting<K: Scalar>(mats: &[Matrix<K>]) -> Result<()> {
    for (i, a) in mats.iter().enumerate() {
        for (j, b) in mats.iter().enumerate().skip(i + 1) {
            if let Some((row, col)) = a.mul(b).first_difference(&b.mul(a)) {
                return Err(Error::NonCommuting {
                    alpha: i + 1,
                    beta: j + 1,
                    row,
                    col,
                });
            }
        }
    }
    Ok(())
}

/// `x(t) = A_1^(d_1) ... A_m^(d_m) x0` for pairwise commuting matrices.
pub fn eval_matrix_system<K: Scalar>(
    mats: &[Matrix<K>],
    t0: &MultiIndex,
    x0: &[K],
    t: &MultiIndex,
    cap: Option<u64>,
) -> Result<Vec<K>> {
    let first = mats.first().ok_or(Error::ZeroDimension)?;
    let n = first.dim();
    if let Some(bad) = mats.iter().find(|m| m.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    check_commuting(mats)?;
    let delta = signed_deltas(t0, t, mats.len())?;
    let mut product = Matrix::identity(n, first.ctx().clone());
    for (a, &d) in mats.iter().zip(&delta) {
        product = product.mul(&matrix_power(a, d, cap)?);
    }
    Ok(product.mul_vec(x0))
}
