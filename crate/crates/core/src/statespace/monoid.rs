//! Finite monoids declared by an operation table.

use crate::error::{Error, Result};

/// A finite monoid on `{0, ..., n-1}` with `op(a, b) = table[a][b]`.
///
/// Construction verifies closure, associativity and the existence of a
/// two-sided identity exhaustively, so the action axioms of the monoid on
/// itself hold for every table that constructs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMonoid {
    table: Vec<Vec<usize>>,
    identity: usize,
}

impl FiniteMonoid {
    pub fn new(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidMonoid("empty operation table".into()));
        }
        if let Some(row) = table.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidMonoid(format!(
                "row {row} has length {} (expected {n})",
                table[row].len()
            )));
        }
        if let Some(v) = table.iter().flatten().find(|&&v| v >= n) {
            return Err(Error::InvalidMonoid(format!(
                "entry {v} out of range 0..{n}"
            )));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidMonoid(format!(
                            "not associative at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or_else(|| Error::InvalidMonoid("no identity element".into()))?;
        Ok(Self { table, identity })
    }

    /// Cyclic group Z_n under addition.
    pub fn cyclic(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|a| (0..n).map(|b| (a + b) % n.max(1)).collect())
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn op(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn pow(&self, a: usize, mut k: u64) -> usize {
        let mut acc = self.identity;
        let mut base = a;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.op(acc, base);
            }
            base = self.op(base, base);
            k >>= 1;
        }
        acc
    }

    /// Two-sided inverse of `a`, if any.
    pub fn inverse(&self, a: usize) -> Option<usize> {
        (0..self.size()).find(|&b| self.op(a, b) == self.identity && self.op(b, a) == self.identity)
    }

    pub fn is_group(&self) -> bool {
        (0..self.size()).all(|a| self.inverse(a).is_some())
    }

    pub fn commute(&self, a: usize, b: usize) -> bool {
        self.op(a, b) == self.op(b, a)
    }
}
