//! Balanced binary cluster trees and `(m, sep)` classification of index
//! blocks.

use crate::error::{Error, Result};

/// Indices `start, start+1, .., start+len-1` taken modulo `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CyclicRange {
    pub start: usize,
    pub len: usize,
}

impl CyclicRange {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    /// The `i`-th index of the range, reduced modulo `n`.
    pub fn at(&self, i: usize, n: usize) -> usize {
        (self.start + i) % n
    }

    pub fn indices(&self, n: usize) -> Vec<usize> {
        (0..self.len).map(|i| self.at(i, n)).collect()
    }

    pub fn contains(&self, j: usize, n: usize) -> bool {
        (j + n - self.start % n) % n < self.len
    }

    /// The remaining `n - len` indices, starting just after this range.
    pub fn complement(&self, n: usize) -> CyclicRange {
        CyclicRange {
            start: (self.start + self.len) % n,
            len: n - self.len,
        }
    }

    /// Cyclic distance between the two ranges (0 if they overlap).
    pub fn distance(&self, other: &CyclicRange, n: usize) -> usize {
        let a = self.indices(n);
        let b = other.indices(n);
        cyclic_separation(&a, &b, n)
    }
}

/// Width and separation of an admissible block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockClass {
    pub m: usize,
    pub sep: usize,
}

fn cyclic_dist(j: usize, k: usize, n: usize) -> usize {
    let d = j.abs_diff(k) % n;
    d.min(n - d)
}

/// `min |j - k|` over the two sets, measured on the cycle `Z_n`.
fn cyclic_separation(a: &[usize], b: &[usize], n: usize) -> usize {
    // Both sets are typically contiguous runs, so a sorted sweep suffices.
    let mut sb: Vec<usize> = b.iter().map(|&k| k % n).collect();
    sb.sort_unstable();
    sb.dedup();
    let mut best = usize::MAX;
    for &j in a {
        let j = j % n;
        let pos = sb.partition_point(|&k| k < j);
        for idx in [pos, pos + sb.len() - 1] {
            let k = sb[idx % sb.len()];
            best = best.min(cyclic_dist(j, k, n));
        }
    }
    best
}

/// Length of the shortest cyclic arc of indices containing `set`.
pub fn cyclic_span(set: &[usize], n: usize) -> usize {
    let mut s: Vec<usize> = set.iter().map(|&k| k % n).collect();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() {
        return 0;
    }
    let mut max_gap = s[0] + n - s[s.len() - 1];
    for w in s.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    n - max_gap + 1
}

/// Classifies `C(J, K)`: `m` is the cyclic span of `K` and `sep` the cyclic
/// distance between the sets. Returns `None` when the sets intersect.
pub fn classify(rows: &[usize], cols: &[usize], n: usize) -> Option<BlockClass> {
    if rows.is_empty() || cols.is_empty() {
        return None;
    }
    let sep = cyclic_separation(rows, cols, n);
    if sep == 0 {
        return None;
    }
    Some(BlockClass {
        m: cyclic_span(cols, n),
        sep,
    })
}

/// Perfectly balanced binary tree over `0..n`. Vertex `v` has children
/// `2v+1` (first half) and `2v+2` (second half).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterTree {
    n: usize,
    n_min: usize,
    depth: usize,
}

pub const DEFAULT_N_MIN: usize = 64;

pub fn build_tree(n: usize, n_min: usize) -> Result<ClusterTree> {
    if !n.is_power_of_two() || !n_min.is_power_of_two() || n_min < 2 || n_min > n / 2 {
        return Err(Error::InvalidSize(format!(
            "cluster tree needs powers of two with 2 <= n_min <= n/2 (n = {n}, n_min = {n_min})"
        )));
    }
    Ok(ClusterTree {
        n,
        n_min,
        depth: (n / n_min).trailing_zeros() as usize,
    })
}

impl ClusterTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    /// Number of levels below the root.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_vertices(&self) -> usize {
        (1 << (self.depth + 1)) - 1
    }

    pub fn level(&self, v: usize) -> usize {
        (usize::BITS - 1 - (v + 1).leading_zeros()) as usize
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.level(v) == self.depth
    }

    pub fn children(&self, v: usize) -> Option<(usize, usize)> {
        if self.is_leaf(v) {
            None
        } else {
            Some((2 * v + 1, 2 * v + 2))
        }
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        if v == 0 {
            None
        } else {
            Some((v - 1) / 2)
        }
    }

    pub fn sibling(&self, v: usize) -> Option<usize> {
        match v {
            0 => None,
            v if v % 2 == 0 => Some(v - 1),
            v => Some(v + 1),
        }
    }

    /// Vertices on `level`, left to right.
    pub fn level_vertices(&self, level: usize) -> std::ops::Range<usize> {
        (1 << level) - 1..(1 << (level + 1)) - 1
    }

    pub fn leaves(&self) -> std::ops::Range<usize> {
        self.level_vertices(self.depth)
    }

    /// Index set `J_v`.
    pub fn range(&self, v: usize) -> CyclicRange {
        let level = self.level(v);
        let width = self.n >> level;
        let pos = v + 1 - (1 << level);
        CyclicRange::new(pos * width, width)
    }
}
