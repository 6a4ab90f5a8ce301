//! Index arithmetic on the integer lattice Z^m.
//!
//! Points carry the componentwise partial order `s <= t iff s^a <= t^a for all a`.
//! Axes are 1-based at every public boundary; coordinates are `i64` with
//! checked arithmetic, so overflow surfaces as [`Error::Overflow`].

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

/// Default upper bound on the number of paths [`enumerate_monotone_paths`] will produce.
pub const DEFAULT_PATH_CAP: usize = 10_000;

/// A point of Z^m.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(Self(coords))
    }

    pub fn zeros(m: usize) -> Result<Self> {
        Self::new(vec![0; m])
    }

    /// The point `(c, c, ..., c)`; `splat(1, m)` is the all-ones vector.
    pub fn splat(c: i64, m: usize) -> Result<Self> {
        Self::new(vec![c; m])
    }

    /// Unit vector with a 1 at 1-based position `axis`.
    pub fn unit(axis: usize, m: usize) -> Result<Self> {
        check_axis(axis, m)?;
        let mut coords = vec![0; m];
        coords[axis - 1] = 1;
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Coordinate at 1-based `axis`.
    pub fn get(&self, axis: usize) -> Result<i64> {
        check_axis(axis, self.dim())?;
        Ok(self.0[axis - 1])
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let coords = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(coords))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let coords = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b).ok_or(Error::Overflow))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(coords))
    }

    /// `self + delta * 1_axis`.
    pub fn step(&self, axis: usize, delta: i64) -> Result<Self> {
        check_axis(axis, self.dim())?;
        let mut coords = self.0.clone();
        let c = &mut coords[axis - 1];
        *c = c.checked_add(delta).ok_or(Error::Overflow)?;
        Ok(Self(coords))
    }

    /// Componentwise `self <= other`.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        self.same_dim(other)?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| a <= b))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn check_axis(axis: usize, m: usize) -> Result<()> {
    if axis == 0 || axis > m {
        return Err(Error::AxisOutOfRange { axis, m });
    }
    Ok(())
}

/// Componentwise `s <= t`.
pub fn leq(s: &MultiIndex, t: &MultiIndex) -> Result<bool> {
    s.leq(t)
}

/// Unit vector `1_axis` in Z^m.
pub fn unit(axis: usize, m: usize) -> Result<MultiIndex> {
    MultiIndex::unit(axis, m)
}

/// Per-axis nonnegative step counts `t - t0`, or an error when `t0 <= t` fails.
pub fn forward_deltas(t0: &MultiIndex, t: &MultiIndex) -> Result<Vec<u64>> {
    if !t0.leq(t)? {
        return Err(Error::NotComparable {
            from: t0.clone(),
            to: t.clone(),
        });
    }
    let diff = t.checked_sub(t0)?;
    Ok(diff.coords().iter().map(|&d| d as u64).collect())
}

/// A monotone lattice path: a start point and a sequence of 1-based axis labels,
/// each step adding the corresponding unit vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotonePath {
    pub start: MultiIndex,
    pub steps: Vec<usize>,
}

impl MonotonePath {
    pub fn new(start: MultiIndex, steps: Vec<usize>) -> Result<Self> {
        for &a in &steps {
            check_axis(a, start.dim())?;
        }
        Ok(Self { start, steps })
    }

    /// The axis-1-first path from `t0` to `t`: all axis-1 steps, then axis 2, and so on.
    pub fn canonical(t0: &MultiIndex, t: &MultiIndex) -> Result<Self> {
        let deltas = forward_deltas(t0, t)?;
        let steps = deltas
            .iter()
            .enumerate()
            .flat_map(|(i, &d)| std::iter::repeat_n(i + 1, d as usize))
            .collect();
        Ok(Self {
            start: t0.clone(),
            steps,
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Every visited point, starting with `start`; length is `len() + 1`.
    pub fn points(&self) -> Result<Vec<MultiIndex>> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut cur = self.start.clone();
        out.push(cur.clone());
        for &a in &self.steps {
            cur = cur.step(a, 1)?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    pub fn end(&self) -> Result<MultiIndex> {
        let mut cur = self.start.clone();
        for &a in &self.steps {
            cur = cur.step(a, 1)?;
        }
        Ok(cur)
    }
}

impl fmt::Display for MonotonePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, a) in self.steps.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]")
    }
}

/// `(sum d)! / prod(d!)`, exact.
pub fn multinomial(deltas: &[u64]) -> BigUint {
    // Product of binomials C(n_1 + ... + n_k, n_k) avoids the big factorials.
    let mut acc = BigUint::one();
    let mut total: u64 = 0;
    for &d in deltas {
        for i in 1..=d {
            total += 1;
            acc = acc * BigUint::from(total) / BigUint::from(i);
        }
    }
    acc
}

/// All monotone paths from `t0` to `t` in lexicographic order of their step labels.
///
/// Fails with [`Error::PathCapExceeded`] before doing any work when the
/// multinomial count is larger than `cap`.
pub fn enumerate_monotone_paths(
    t0: &MultiIndex,
    t: &MultiIndex,
    cap: usize,
) -> Result<Vec<MonotonePath>> {
    let deltas = forward_deltas(t0, t)?;
    let count = multinomial(&deltas);
    match count.to_usize() {
        Some(c) if c <= cap => {}
        _ => {
            return Err(Error::PathCapExceeded {
                count: count.to_string(),
                cap,
            })
        }
    }
    let total: u64 = deltas.iter().sum();
    let mut remaining = deltas;
    let mut prefix = Vec::with_capacity(total as usize);
    let mut out = Vec::new();
    fill_paths(&mut remaining, &mut prefix, total as usize, t0, &mut out);
    Ok(out)
}

fn fill_paths(
    remaining: &mut [u64],
    prefix: &mut Vec<usize>,
    total: usize,
    start: &MultiIndex,
    out: &mut Vec<MonotonePath>,
) {
    if prefix.len() == total {
        out.push(MonotonePath {
            start: start.clone(),
            steps: prefix.clone(),
        });
        return;
    }
    for i in 0..remaining.len() {
        if remaining[i] > 0 {
            remaining[i] -= 1;
            prefix.push(i + 1);
            fill_paths(remaining, prefix, total, start, out);
            prefix.pop();
            remaining[i] += 1;
        }
    }
}

/// Every point of the box `[lo, hi]` in row-major order (axis 1 slowest).
pub fn box_points(lo: &MultiIndex, hi: &MultiIndex) -> Result<Vec<MultiIndex>> {
    let deltas = forward_deltas(lo, hi)?;
    let mut out = Vec::new();
    let mut cur = lo.coords().to_vec();
    loop {
        out.push(MultiIndex(cur.clone()));
        // odometer increment, last axis fastest
        let mut i = cur.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if cur[i] < lo.coords()[i] + deltas[i] as i64 {
                cur[i] += 1;
                break;
            }
            cur[i] = lo.coords()[i];
        }
    }
}

/// Number of points in `[lo, hi]`, or `None` if it does not fit in `u64`.
pub fn box_volume(lo: &MultiIndex, hi: &MultiIndex) -> Result<Option<u64>> {
    let deltas = forward_deltas(lo, hi)?;
    Ok(deltas
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d.checked_add(1)?)))
}
