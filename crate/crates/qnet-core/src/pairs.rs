//! Node pairs in canonical order and symmetric per-pair matrices.
//!
//! Every quantity in the network (distance, QBER, SKR, weight, average) is
//! indexed by an unordered node pair. The canonical order is row-major over
//! the upper triangle: (0,1), (0,2), ..., (n-2,n-1). All tie-breaking and all
//! random draws follow this order, so runs are reproducible bit for bit.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Index of a QKD node, in `[0, n)`.
pub type NodeId = usize;

/// An unordered pair of distinct nodes, stored with `a < b`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    a: NodeId,
    b: NodeId,
}

impl Pair {
    /// Builds a pair from two distinct node ids, normalizing the order.
    pub fn new(a: NodeId, b: NodeId) -> Result<Self> {
        if a == b {
            return Err(Error::Domain(format!("pair endpoints must differ, got ({a},{b})")));
        }
        Ok(if a < b { Pair { a, b } } else { Pair { a: b, b: a } })
    }

    pub fn a(&self) -> NodeId {
        self.a
    }

    pub fn b(&self) -> NodeId {
        self.b
    }

    /// Rank of this pair in the canonical order for an `n`-node network.
    pub fn index(&self, n: usize) -> usize {
        debug_assert!(self.b < n);
        self.a * n - self.a * (self.a + 1) / 2 + (self.b - self.a - 1)
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

impl fmt::Debug for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

impl FromStr for Pair {
    type Err = Error;

    /// Parses the `i-j` token form used in CSV traces and edge lists.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::Domain(format!("pair token must be `i-j`, got {s:?}")))?;
        let a: usize = a.trim().parse().map_err(|e| Error::Domain(format!("bad pair token {s:?}: {e}")))?;
        let b: usize = b.trim().parse().map_err(|e| Error::Domain(format!("bad pair token {s:?}: {e}")))?;
        Pair::new(a, b)
    }
}

/// Number of unordered pairs among `n` nodes.
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// All pairs of an `n`-node network in canonical order.
pub fn enumerate_pairs(n: usize) -> impl Iterator<Item = Pair> {
    (0..n).flat_map(move |a| (a + 1..n).map(move |b| Pair { a, b }))
}

/// A symmetric `n x n` matrix with zero diagonal, stored as its upper
/// triangle in canonical pair order. Symmetry and the zero diagonal are
/// structural: `get(i, j) == get(j, i)` for every index pair.
#[derive(Clone, PartialEq)]
pub struct PairMatrix {
    n: usize,
    vals: Vec<f64>,
}

impl PairMatrix {
    pub fn zeros(n: usize) -> Self {
        PairMatrix { n, vals: vec![0.0; pair_count(n)] }
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        PairMatrix { n, vals: vec![value; pair_count(n)] }
    }

    /// Validates a full `n x n` row-major matrix: square with `n >= 2`,
    /// finite entries, exactly symmetric, zero diagonal.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::Config(format!("matrix must be at least 2x2, got {n} rows")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config(format!("matrix row {i} has {} entries, expected {n}", row.len())));
            }
        }
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(Error::Config(format!("matrix diagonal [{i}][{i}] = {} must be 0", rows[i][i])));
            }
            for j in i + 1..n {
                if !rows[i][j].is_finite() {
                    return Err(Error::Config(format!("matrix entry [{i}][{j}] = {} is not finite", rows[i][j])));
                }
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Config(format!(
                        "asymmetric matrix: [{i}][{j}] = {} but [{j}][{i}] = {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        let mut m = PairMatrix::zeros(n);
        for p in enumerate_pairs(n) {
            m.set(p, rows[p.a()][p.b()]);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pair_count(&self) -> usize {
        self.vals.len()
    }

    /// Entry for nodes `(i, j)`; the diagonal is always 0.
    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        assert!(i < self.n && j < self.n, "node index out of range");
        if i == j {
            return 0.0;
        }
        let p = if i < j { Pair { a: i, b: j } } else { Pair { a: j, b: i } };
        self.vals[p.index(self.n)]
    }

    pub fn get_pair(&self, p: Pair) -> f64 {
        self.vals[p.index(self.n)]
    }

    /// Sets the entry for a pair (both triangle images at once).
    pub fn set(&mut self, p: Pair, value: f64) {
        let idx = p.index(self.n);
        self.vals[idx] = value;
    }

    /// `(pair, value)` in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (Pair, f64)> + '_ {
        enumerate_pairs(self.n).zip(self.vals.iter().copied())
    }

    /// Values in canonical pair order.
    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    /// Expands back to a full row-major matrix (for export).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n]; self.n];
        for (p, v) in self.entries() {
            rows[p.a()][p.b()] = v;
            rows[p.b()][p.a()] = v;
        }
        rows
    }
}

impl fmt::Debug for PairMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries().map(|(p, v)| (p.to_string(), v))).finish()
    }
}
