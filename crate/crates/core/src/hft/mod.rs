//! Label arithmetic on full binary trees `B(2^x, a)` and half-full trees
//! `HT([a, b])`.
//!
//! In `B(2^x, a)` a node of height `h` at position `v` (from the left) has
//! label `a + v` if it is a leaf, otherwise `a + 2^(h-1) - 1 + v * 2^h`. Leaves
//! then cover `[a, a + 2^x - 1]` and non-leaves `[a, a + 2^x - 2]`, each label
//! used once. `HT([a, b])` with non-power-of-two size takes `B(2^(x+1), a)`
//! (`2^x` the largest power of two below the size) and replaces the root's
//! right subtree by `HT([a + 2^x, b])`.
//!
//! All queries here are closed-form and use O(1) words per halving.

mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{HtOracle, OracleNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HftError {
    #[error("label {y} outside [{a}, {b}]")]
    OutOfRange { y: u64, a: u64, b: u64 },
    #[error("height {h} / position {v} invalid for a tree with 2^{x} leaves")]
    BadPosition { h: u32, v: u64, x: u32 },
    #[error("empty interval [{a}, {b}]")]
    EmptyInterval { a: u64, b: u64 },
    #[error("tree exponent {0} too large")]
    TooLarge(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub a: u64,
    pub b: u64,
}

impl Interval {
    pub fn new(a: u64, b: u64) -> Result<Self, HftError> {
        if b < a {
            return Err(HftError::EmptyInterval { a, b });
        }
        Ok(Interval { a, b })
    }

    pub fn size(&self) -> u64 {
        self.b - self.a + 1
    }

    pub fn contains(&self, y: u64) -> bool {
        (self.a..=self.b).contains(&y)
    }
}

/// `y + 1 = 2^i * (2z + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub i: u32,
    pub z: u64,
}

pub fn decompose(y: u64) -> Decomposition {
    let y1 = y.checked_add(1).expect("label overflow");
    let i = y1.trailing_zeros();
    Decomposition { i, z: (y1 >> i) / 2 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Leaf,
    NonLeaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeRef {
    pub kind: NodeKind,
    pub label: u64,
    pub exists: bool,
}

impl TreeRef {
    pub fn leaf(label: u64) -> Self {
        TreeRef {
            kind: NodeKind::Leaf,
            label,
            exists: true,
        }
    }

    pub fn nonleaf(label: u64) -> Self {
        TreeRef {
            kind: NodeKind::NonLeaf,
            label,
            exists: true,
        }
    }

    /// Placeholder for the missing parent of a lone leaf.
    pub fn absent() -> Self {
        TreeRef {
            kind: NodeKind::NonLeaf,
            label: 0,
            exists: false,
        }
    }
}

/// The parent of leaf `y`, and the parent and children of non-leaf `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub query: u64,
    pub leaf_parent: TreeRef,
    pub nonleaf_parent: Option<TreeRef>,
    pub nonleaf_left: Option<TreeRef>,
    pub nonleaf_right: Option<TreeRef>,
}

impl Neighborhood {
    /// Whether `query` is also a non-leaf label.
    pub fn has_nonleaf(&self) -> bool {
        self.nonleaf_left.is_some()
    }
}

fn pow2(e: u32) -> Result<u64, HftError> {
    1u64.checked_shl(e).filter(|_| e < 63).ok_or(HftError::TooLarge(e))
}

/// Label of the node at height `h`, position `v_tilde` in `B(2^x)`.
pub fn label_bt(h: u32, v_tilde: u64, x: u32) -> Result<u64, HftError> {
    if h > x || x >= 63 || v_tilde >= (1u64 << (x - h)) {
        return Err(HftError::BadPosition { h, v: v_tilde, x });
    }
    Ok(if h == 0 {
        v_tilde
    } else {
        (1u64 << (h - 1)) - 1 + v_tilde * (1u64 << h)
    })
}

/// Neighborhood of `y` in `B(2^x, a)`.
pub fn search_bt(y: u64, x: u32, a: u64) -> Result<Neighborhood, HftError> {
    let size = pow2(x)?;
    if y < a || y - a >= size {
        return Err(HftError::OutOfRange {
            y,
            a,
            b: a + size - 1,
        });
    }
    let yp = y - a;
    let leaf_parent = if x == 0 {
        TreeRef::absent()
    } else {
        TreeRef::nonleaf(a + 2 * (yp / 2))
    };
    let mut nb = Neighborhood {
        query: y,
        leaf_parent,
        nonleaf_parent: None,
        nonleaf_left: None,
        nonleaf_right: None,
    };
    if yp + 1 < size {
        let Decomposition { i, z } = decompose(yp);
        if i + 2 <= x {
            nb.nonleaf_parent = Some(TreeRef::nonleaf(
                a + (1u64 << (i + 1)) - 1 + (z / 2) * (1u64 << (i + 2)),
            ));
        }
        if i >= 1 {
            let base = a + (1u64 << (i - 1)) - 1;
            nb.nonleaf_left = Some(TreeRef::nonleaf(base + 2 * z * (1u64 << i)));
            nb.nonleaf_right = Some(TreeRef::nonleaf(base + (2 * z + 1) * (1u64 << i)));
        } else {
            nb.nonleaf_left = Some(TreeRef::leaf(a + yp));
            nb.nonleaf_right = Some(TreeRef::leaf(a + yp + 1));
        }
    }
    Ok(nb)
}

/// Largest power-of-two exponent `x` with `2^x < size`, or `None` when
/// `size` is itself a power of two.
fn split_exponent(size: u64) -> Option<u32> {
    if size.is_power_of_two() {
        None
    } else {
        Some(63 - size.leading_zeros())
    }
}

/// Root label of `HT([a, b])`: a leaf for singletons, otherwise a non-leaf.
pub fn ht_root(a: u64, b: u64) -> Result<u64, HftError> {
    let iv = Interval::new(a, b)?;
    let size = iv.size();
    Ok(match split_exponent(size) {
        None if size == 1 => a,
        None => size / 2 - 1 + a,
        Some(x) => (1u64 << x) - 1 + a,
    })
}

/// Root of `HT([a, b])` as a typed reference.
pub fn ht_root_ref(a: u64, b: u64) -> Result<TreeRef, HftError> {
    let r = ht_root(a, b)?;
    Ok(if a == b {
        TreeRef::leaf(r)
    } else {
        TreeRef::nonleaf(r)
    })
}

/// Neighborhood of `y` in `HT([a, b])`, plus the number of halving frames used.
pub fn search_ht_counted(y: u64, a: u64, b: u64) -> Result<(Neighborhood, u32), HftError> {
    Interval::new(a, b)?;
    if y < a || y > b {
        return Err(HftError::OutOfRange { y, a, b });
    }
    let (mut a, mut frames) = (a, 0u32);
    let mut enclosing: Option<u64> = None;
    loop {
        frames += 1;
        let size = b - a + 1;
        match split_exponent(size) {
            None => {
                let x = size.trailing_zeros();
                let mut nb = search_bt(y, x, a)?;
                if !nb.leaf_parent.exists {
                    if let Some(r) = enclosing {
                        nb.leaf_parent = TreeRef::nonleaf(r);
                    }
                }
                if nb.has_nonleaf() && nb.nonleaf_parent.is_none() {
                    nb.nonleaf_parent = enclosing.map(TreeRef::nonleaf);
                }
                return Ok((nb, frames));
            }
            Some(x) => {
                let half = 1u64 << x;
                if y < a + half {
                    let mut nb = search_bt(y, x + 1, a)?;
                    let r = a + half - 1;
                    if y == r {
                        nb.nonleaf_parent = enclosing.map(TreeRef::nonleaf);
                        nb.nonleaf_right = Some(ht_root_ref(a + half, b)?);
                    }
                    return Ok((nb, frames));
                }
                enclosing = Some(a + half - 1);
                a += half;
            }
        }
    }
}

pub fn search_ht(y: u64, a: u64, b: u64) -> Result<Neighborhood, HftError> {
    search_ht_counted(y, a, b).map(|(nb, _)| nb)
}

/// Reference from one child's subwill to another child's leaf or non-leaf copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexRef {
    pub kind: NodeKind,
    pub index: u64,
}

impl From<TreeRef> for IndexRef {
    fn from(t: TreeRef) -> Self {
        IndexRef {
            kind: t.kind,
            index: t.label,
        }
    }
}

/// The part of `HT([0, δ-1])` that child `k` must know.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubWillIdx {
    pub child_index: u64,
    pub leaf_parent_idx: Option<u64>,
    pub nonleaf_parent_idx: Option<u64>,
    pub nonleaf_left_idx: Option<IndexRef>,
    pub nonleaf_right_idx: Option<IndexRef>,
    pub dependency_max: u64,
}

impl SubWillIdx {
    /// Distinct child indices this subwill names, `k` itself included when referenced.
    pub fn referenced(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .leaf_parent_idx
            .into_iter()
            .chain(self.nonleaf_parent_idx)
            .chain(self.nonleaf_left_idx.map(|r| r.index))
            .chain(self.nonleaf_right_idx.map(|r| r.index))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// How many ID slots a child index `j` occupies for this subwill:
    /// 1 when `j` is named, 0 otherwise.
    pub fn uses(&self, j: u64) -> u64 {
        self.referenced().contains(&j) as u64
    }
}

pub fn subwill_indices(k: u64, delta: u64) -> Result<SubWillIdx, HftError> {
    if delta == 0 || k >= delta {
        return Err(HftError::OutOfRange {
            y: k,
            a: 0,
            b: delta.saturating_sub(1),
        });
    }
    let nb = search_ht(k, 0, delta - 1)?;
    let mut s = SubWillIdx {
        child_index: k,
        leaf_parent_idx: nb.leaf_parent.exists.then_some(nb.leaf_parent.label),
        nonleaf_parent_idx: nb.nonleaf_parent.map(|t| t.label),
        nonleaf_left_idx: nb.nonleaf_left.map(IndexRef::from),
        nonleaf_right_idx: nb.nonleaf_right.map(IndexRef::from),
        dependency_max: k,
    };
    s.dependency_max = s.referenced().into_iter().fold(k, u64::max);
    Ok(s)
}

/// Indices of the subwills of `HT([0, δ-1])` that name child `j`.
///
/// Only `j` and its tree neighbors can name it, so at most five
/// candidates are checked.
pub fn users(j: u64, delta: u64) -> Result<Vec<u64>, HftError> {
    let nb = search_ht(j, 0, delta.saturating_sub(1))?;
    let mut cands = vec![j];
    if nb.leaf_parent.exists {
        cands.push(nb.leaf_parent.label);
    }
    cands.extend(nb.nonleaf_parent.map(|t| t.label));
    cands.extend(nb.nonleaf_left.map(|t| t.label));
    cands.extend(nb.nonleaf_right.map(|t| t.label));
    cands.sort_unstable();
    cands.dedup();
    let mut out = Vec::with_capacity(cands.len());
    for s in cands {
        if subwill_indices(s, delta)?.referenced().contains(&j) {
            out.push(s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose(4), Decomposition { i: 0, z: 2 });
        assert_eq!(decompose(3), Decomposition { i: 2, z: 0 });
        assert_eq!(decompose(0), Decomposition { i: 0, z: 0 });
    }

    #[test]
    fn label_examples() {
        assert_eq!(label_bt(3, 0, 3), Ok(3));
        assert_eq!(label_bt(0, 5, 3), Ok(5));
        assert_eq!(label_bt(2, 1, 3), Ok(5));
        assert!(label_bt(4, 0, 3).is_err());
        assert!(label_bt(1, 4, 3).is_err());
    }

    #[test]
    fn bt_root_has_no_parent() {
        let nb = search_bt(3, 3, 0).unwrap();
        assert_eq!(nb.nonleaf_parent, None);
        assert_eq!(nb.nonleaf_left, Some(TreeRef::nonleaf(1)));
        assert_eq!(nb.nonleaf_right, Some(TreeRef::nonleaf(5)));
        assert_eq!(nb.leaf_parent, TreeRef::nonleaf(2));
    }

    #[test]
    fn ht_roots() {
        assert_eq!(ht_root(0, 12), Ok(7));
        assert_eq!(ht_root(8, 12), Ok(11));
        assert_eq!(ht_root(5, 5), Ok(5));
        assert_eq!(ht_root(0, 7), Ok(3));
    }

    #[test]
    fn out_of_range_queries_fail() {
        assert!(search_ht(13, 0, 12).is_err());
        assert!(search_bt(8, 3, 0).is_err());
        assert!(subwill_indices(3, 3).is_err());
    }
}
