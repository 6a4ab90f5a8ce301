//! Exact scalars (reduced rationals, residues mod p) and square matrices over them.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A residue class modulo `modulus`, stored canonically in `[0, modulus)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    pub fn new(value: u64, modulus: u64) -> Self {
        assert!(modulus >= 2, "modulus must be at least 2");
        Self {
            value: value % modulus,
            modulus,
        }
    }

    pub fn from_bigint(v: &BigInt, modulus: u64) -> Self {
        let r = v.mod_floor(&BigInt::from(modulus));
        Self::new(r.to_u64().expect("reduced residue fits in u64"), modulus)
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.modulus
    }

    pub fn pow(self, mut k: u64) -> Self {
        let mut base = self;
        let mut acc = Residue::new(1, self.modulus);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }
}

impl fmt::Debug for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Field-like scalar with a runtime context (the modulus for residues, nothing for rationals).
pub trait Scalar: Clone + PartialEq + Eq + fmt::Debug + fmt::Display {
    type Ctx: Clone + PartialEq + Eq + fmt::Debug;

    fn ctx(&self) -> Self::Ctx;
    fn zero(ctx: &Self::Ctx) -> Self;
    fn one(ctx: &Self::Ctx) -> Self;
    fn from_bigint(ctx: &Self::Ctx, v: &BigInt) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse, `None` for zero (or a non-unit residue).
    fn inv(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;
}

impl Scalar for BigRational {
    type Ctx = ();

    fn ctx(&self) {}
    fn zero(_: &()) -> Self {
        Zero::zero()
    }
    fn one(_: &()) -> Self {
        One::one()
    }
    fn from_bigint(_: &(), v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Scalar for Residue {
    type Ctx = u64;

    fn ctx(&self) -> u64 {
        self.modulus
    }
    fn zero(p: &u64) -> Self {
        Residue::new(0, *p)
    }
    fn one(p: &u64) -> Self {
        Residue::new(1, *p)
    }
    fn from_bigint(p: &u64, v: &BigInt) -> Self {
        Residue::from_bigint(v, *p)
    }
    fn add(&self, rhs: &Self) -> Self {
        let s = (self.value as u128 + rhs.value as u128) % self.modulus as u128;
        Residue::new(s as u64, self.modulus)
    }
    fn sub(&self, rhs: &Self) -> Self {
        let s =
            (self.value as u128 + self.modulus as u128 - rhs.value as u128) % self.modulus as u128;
        Residue::new(s as u64, self.modulus)
    }
    fn mul(&self, rhs: &Self) -> Self {
        let s = (self.value as u128 * rhs.value as u128) % self.modulus as u128;
        Residue::new(s as u64, self.modulus)
    }
    fn neg(&self) -> Self {
        Residue::new((self.modulus - self.value) % self.modulus, self.modulus)
    }
    fn inv(&self) -> Option<Self> {
        let g = BigInt::from(self.value).extended_gcd(&BigInt::from(self.modulus));
        if !g.gcd.is_one() {
            return None;
        }
        Some(Residue::from_bigint(&g.x, self.modulus))
    }
    fn is_zero(&self) -> bool {
        self.value == 0
    }
}

/// Trial-division primality test; moduli here are at most 64 bits.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p < 4 {
        return true;
    }
    if p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A value with canonical printing: rationals as `p/q` (or a plain integer), residues in `[0,p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactScalar {
    Rational(BigRational),
    Residue(Residue),
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactScalar::Rational(r) => write!(f, "{}", fmt_rational(r)),
            ExactScalar::Residue(r) => write!(f, "{r}"),
        }
    }
}

pub fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// Square matrix over a [`Scalar`], row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix<K: Scalar> {
    n: usize,
    ctx: K::Ctx,
    data: Vec<K>,
}

impl<K: Scalar> fmt::Debug for Matrix<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.n {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for c in 0..self.n {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl<K: Scalar> Matrix<K> {
    /// Builds a matrix from rows; `None` unless the rows form a nonempty square.
    pub fn from_rows(ctx: K::Ctx, rows: Vec<Vec<K>>) -> Option<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return None;
        }
        if rows.iter().flatten().any(|e| e.ctx() != ctx) {
            return None;
        }
        Some(Self {
            n,
            ctx,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(n: usize, ctx: K::Ctx) -> Self {
        let mut data = vec![K::zero(&ctx); n * n];
        for i in 0..n {
            data[i * n + i] = K::one(&ctx);
        }
        Self { n, ctx, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ctx(&self) -> &K::Ctx {
        &self.ctx
    }

    pub fn get(&self, r: usize, c: usize) -> &K {
        &self.data[r * self.n + c]
    }

    pub fn rows(&self) -> Vec<Vec<K>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn entries(&self) -> &[K] {
        &self.data
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = K::zero(&self.ctx);
                for k in 0..n {
                    acc = acc.add(&self.get(r, k).mul(rhs.get(k, c)));
                }
                data.push(acc);
            }
        }
        Self {
            n,
            ctx: self.ctx.clone(),
            data,
        }
    }

    pub fn mul_vec(&self, v: &[K]) -> Vec<K> {
        assert_eq!(self.n, v.len(), "vector dimension mismatch");
        (0..self.n)
            .map(|r| {
                (0..self.n).fold(K::zero(&self.ctx), |acc, k| {
                    acc.add(&self.get(r, k).mul(&v[k]))
                })
            })
            .collect()
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u64) -> Self {
        let mut acc = Self::identity(self.n, self.ctx.clone());
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// First entry `(row, col)` where the two matrices differ.
    pub fn first_difference(&self, other: &Self) -> Option<(usize, usize)> {
        (0..self.n * self.n)
            .find(|&i| self.data[i] != other.data[i])
            .map(|i| (i / self.n, i % self.n))
    }

    /// Reduced row echelon form in place, pivoting only on the first `ncols`
    /// columns (row operations still cover the whole row); returns the pivot columns.
    fn rref(rows: &mut [Vec<K>], ncols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            if r == rows.len() {
                break;
            }
            let Some(pr) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
                continue;
            };
            rows.swap(r, pr);
            let inv = rows[r][c]
                .inv()
                .expect("nonzero pivot is invertible in a field");
            for e in rows[r].iter_mut() {
                *e = e.mul(&inv);
            }
            for i in 0..rows.len() {
                if i != r && !rows[i][c].is_zero() {
                    let f = rows[i][c].clone();
                    for j in 0..rows[i].len() {
                        let d = f.mul(&rows[r][j]);
                        rows[i][j] = rows[i][j].sub(&d);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.rows();
        Self::rref(&mut rows, self.n).len()
    }

    pub fn determinant(&self) -> K {
        let n = self.n;
        let mut rows = self.rows();
        let mut det = K::one(&self.ctx);
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| !rows[i][c].is_zero()) else {
                return K::zero(&self.ctx);
            };
            if pr != c {
                rows.swap(pr, c);
                det = det.neg();
            }
            det = det.mul(&rows[c][c]);
            let inv = rows[c][c]
                .inv()
                .expect("nonzero pivot is invertible in a field");
            let (top, below) = rows.split_at_mut(c + 1);
            let pivot = &top[c];
            for row in below {
                if !row[c].is_zero() {
                    let f = row[c].mul(&inv);
                    for (e, p) in row[c..].iter_mut().zip(&pivot[c..]) {
                        *e = e.sub(&f.mul(p));
                    }
                }
            }
        }
        det
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut aug: Vec<Vec<K>> = self
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, mut row)| {
                row.extend((0..n).map(|j| {
                    if i == j {
                        K::one(&self.ctx)
                    } else {
                        K::zero(&self.ctx)
                    }
                }));
                row
            })
            .collect();
        let pivots = Self::rref(&mut aug, n);
        if pivots.len() < n {
            return None;
        }
        let data = aug.into_iter().flat_map(|row| row[n..].to_vec()).collect();
        Some(Self {
            n,
            ctx: self.ctx.clone(),
            data,
        })
    }

    /// A nonzero `v` with `A v = 0`, if the matrix is singular.
    pub fn kernel_vector(&self) -> Option<Vec<K>> {
        let n = self.n;
        let mut rows = self.rows();
        let pivots = Self::rref(&mut rows, n);
        let free = (0..n).find(|c| !pivots.contains(c))?;
        let mut v = vec![K::zero(&self.ctx); n];
        v[free] = K::one(&self.ctx);
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = rows[r][free].neg();
        }
        Some(v)
    }

    /// Index of a standard basis vector outside the column space, if the matrix is singular.
    pub fn basis_vector_outside_image(&self) -> Option<usize> {
        let rank = self.rank();
        if rank == self.n {
            return None;
        }
        (0..self.n).find(|&i| {
            let mut rows = self.rows();
            for (r, row) in rows.iter_mut().enumerate() {
                row.push(if r == i {
                    K::one(&self.ctx)
                } else {
                    K::zero(&self.ctx)
                });
            }
            Self::rref(&mut rows, self.n + 1).len() > rank
        })
    }

    pub fn map<L: Scalar>(&self, ctx: L::Ctx, f: impl Fn(&K) -> L) -> Matrix<L> {
        Matrix {
            n: self.n,
            ctx,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl Matrix<BigRational> {
    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|e| e.is_integer())
    }

    pub fn from_integer_rows(rows: &[Vec<i64>]) -> Option<Self> {
        Self::from_rows(
            (),
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&v| BigRational::from_integer(v.into()))
                        .collect()
                })
                .collect(),
        )
    }

    /// Largest bit length among numerators and denominators.
    pub fn max_bits(&self) -> u64 {
        self.data
            .iter()
            .map(|e| e.numer().abs().bits().max(e.denom().bits()))
            .max()
            .unwrap_or(0)
    }
}
