//! Addressing and genealogy on the rooted binary tree `T_n`.
//!
//! `T_n` is the binary tree of depth `n` whose level-0 vertex is attached to an
//! extra root `ρ` (level −1). Vertices are addressed by `(level, index)` where
//! the index is the binary-coded path from level 0: child `c ∈ {0, 1}` of index
//! `i` has index `2i + c`. Genealogy therefore reduces to bit shifts.
//!
//! Internally the samplers use heap numbering (`ρ = 0`, level-0 vertex `= 1`,
//! children of `h` are `2h` and `2h + 1`); [`VertexId::heap`] and
//! [`VertexId::from_heap`] convert between the two.

use std::fmt;

use crate::error::{Error, Result};

/// Largest depth for which vertex addresses fit the heap representation.
pub const MAX_DEPTH: u32 = 62;

/// Address of a vertex of `T_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    level: i32,
    index: u64,
}

impl VertexId {
    /// The root `ρ`.
    pub const ROOT: VertexId = VertexId { level: -1, index: 0 };
    /// The unique level-0 vertex.
    pub const TOP: VertexId = VertexId { level: 0, index: 0 };

    pub fn new(level: i32, index: u64) -> Result<Self> {
        if level < -1 || level > MAX_DEPTH as i32 {
            return Err(Error::Domain(format!("level {level} out of range")));
        }
        let width = if level <= 0 { 1 } else { 1u64 << level };
        if index >= width {
            return Err(Error::Domain(format!("index {index} out of range for level {level}")));
        }
        Ok(VertexId { level, index })
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn is_root(&self) -> bool {
        self.level == -1
    }

    /// Heap number: `ρ ↦ 0`, `(j, i) ↦ 2^j + i`.
    pub fn heap(&self) -> u64 {
        if self.level < 0 {
            0
        } else {
            (1u64 << self.level) + self.index
        }
    }

    pub fn from_heap(h: u64) -> Self {
        if h == 0 {
            return VertexId::ROOT;
        }
        let level = 63 - h.leading_zeros() as i32;
        VertexId { level, index: h - (1u64 << level) }
    }

    /// Child `c ∈ {0, 1}`; the root's only child is the level-0 vertex.
    pub fn child(&self, c: u64) -> VertexId {
        if self.is_root() {
            VertexId::TOP
        } else {
            VertexId { level: self.level + 1, index: 2 * self.index + (c & 1) }
        }
    }

    pub fn parent(&self) -> Option<VertexId> {
        match self.level {
            -1 => None,
            0 => Some(VertexId::ROOT),
            l => Some(VertexId { level: l - 1, index: self.index >> 1 }),
        }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            write!(f, "ρ")
        } else {
            write!(f, "({}, {})", self.level, self.index)
        }
    }
}

/// Ancestor of `v` at level `j` (`−1 ≤ j ≤ |v|`).
pub fn ancestor(v: VertexId, j: i32) -> Result<VertexId> {
    if j < -1 || j > v.level {
        return Err(Error::Domain(format!("ancestor level {j} outside [-1, {}]", v.level)));
    }
    if j == -1 {
        return Ok(VertexId::ROOT);
    }
    Ok(VertexId { level: j, index: v.index >> (v.level - j) })
}

/// Last common ancestor of two vertices at levels `≥ 0`.
///
/// The level-0 vertex is unique, so the result always has level `≥ 0`.
pub fn lca(u: VertexId, v: VertexId) -> VertexId {
    if u.is_root() || v.is_root() {
        return VertexId::ROOT;
    }
    let level = u.level.min(v.level);
    let a = u.index >> (u.level - level);
    let b = v.index >> (v.level - level);
    let diff = a ^ b;
    let up = 64 - diff.leading_zeros() as i32;
    VertexId { level: level - up, index: a >> up }
}

/// Leaves of `T_n` descending from `u`, in increasing index order.
pub fn subtree_leaves(u: VertexId, n: u32) -> Result<impl Iterator<Item = VertexId>> {
    if u.level < 0 || u.level > n as i32 {
        return Err(Error::Domain(format!("vertex {u} is not a non-root vertex of T_{n}")));
    }
    let shift = n as i32 - u.level;
    let start = u.index << shift;
    let end = (u.index + 1) << shift;
    Ok((start..end).map(move |index| VertexId { level: n as i32, index }))
}

/// Shape of `T_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    depth: u32,
}

impl TreeShape {
    pub fn new(depth: u32) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::Domain(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
        Ok(TreeShape { depth })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaves(&self) -> u64 {
        1u64 << self.depth
    }

    /// Edges of `T_n`, counting the root edge `(ρ, level-0)`.
    pub fn edges(&self) -> u64 {
        (1u64 << (self.depth + 1)) - 1
    }

    pub fn level(&self, j: u32) -> impl Iterator<Item = VertexId> {
        (0..1u64 << j).map(move |index| VertexId { level: j as i32, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(level: i32, index: u64) -> VertexId {
        VertexId::new(level, index).unwrap()
    }

    fn ancestor_by_walk(mut x: VertexId, j: i32) -> VertexId {
        while x.level() > j {
            x = x.parent().unwrap();
        }
        x
    }

    fn lca_by_scan(a: VertexId, b: VertexId) -> VertexId {
        let top = a.level().min(b.level());
        (0..=top)
            .rev()
            .map(|j| (ancestor(a, j).unwrap(), ancestor(b, j).unwrap()))
            .find(|(x, y)| x == y)
            .map(|(x, _)| x)
            .unwrap()
    }

    #[test]
    fn ancestor_examples() {
        assert_eq!(ancestor(v(3, 5), 3).unwrap(), v(3, 5));
        assert_eq!(ancestor(v(3, 5), -1).unwrap(), VertexId::ROOT);
        assert_eq!(ancestor(v(3, 5), 1).unwrap(), v(1, 1));
        assert_eq!(ancestor_by_walk(v(3, 5), 1), v(1, 1));
        assert!(ancestor(v(3, 5), 4).is_err());
        assert!(ancestor(v(3, 5), -2).is_err());
    }

    #[test]
    fn lca_examples() {
        assert_eq!(lca(v(4, 9), v(4, 9)), v(4, 9));
        assert_eq!(lca(v(2, 0), v(2, 3)), v(0, 0));
        assert_eq!(lca(v(3, 4), v(3, 5)), v(2, 2));
        assert_eq!(lca_by_scan(v(3, 4), v(3, 5)), v(2, 2));
    }

    #[test]
    fn subtree_leaf_examples() {
        let leaf = v(4, 7);
        assert_eq!(subtree_leaves(leaf, 4).unwrap().collect::<Vec<_>>(), vec![leaf]);
        assert_eq!(subtree_leaves(VertexId::TOP, 5).unwrap().count(), 32);
        let got: Vec<_> = subtree_leaves(v(1, 0), 3).unwrap().collect();
        assert_eq!(got, vec![v(3, 0), v(3, 1), v(3, 2), v(3, 3)]);
        for x in &got {
            assert_eq!(ancestor(*x, 1).unwrap(), v(1, 0));
        }
        assert!(subtree_leaves(VertexId::ROOT, 3).is_err());
    }

    #[test]
    fn ancestor_composes() {
        for level in 0..=8 {
            for index in 0..1u64 << level {
                let x = v(level, index);
                for j2 in -1..=level {
                    for j in -1..=j2 {
                        let lhs = ancestor(ancestor(x, j2).unwrap(), j).unwrap();
                        assert_eq!(lhs, ancestor(x, j).unwrap());
                        assert_eq!(lhs, ancestor_by_walk(x, j));
                    }
                }
            }
        }
    }

    #[test]
    fn lca_exhaustive_t6() {
        let vertices: Vec<_> = (0..=6).flat_map(|l| (0..1u64 << l).map(move |i| v(l, i))).collect();
        for a in &vertices {
            for b in &vertices {
                let w = lca(*a, *b);
                assert_eq!(w, lca_by_scan(*a, *b), "{a} {b}");
                assert!(w.level() >= 0);
            }
        }
    }

    #[test]
    fn leaves_partition_each_level() {
        for n in 0..=10u32 {
            let shape = TreeShape::new(n).unwrap();
            for k in 0..=n {
                let total: usize = shape.level(k).map(|u| subtree_leaves(u, n).unwrap().count()).sum();
                assert_eq!(total as u64, shape.leaves());
            }
            assert_eq!(shape.edges(), (1 << (n + 1)) - 1);
        }
    }

    #[test]
    fn heap_round_trip() {
        for h in 0..4096u64 {
            assert_eq!(VertexId::from_heap(h).heap(), h);
        }
        assert_eq!(VertexId::TOP.heap(), 1);
        assert_eq!(VertexId::ROOT.child(0), VertexId::TOP);
    }

    proptest! {
        #[test]
        fn heap_numbering_round_trips(h in 1u64..(1 << 40)) {
            let x = VertexId::from_heap(h);
            prop_assert_eq!(x.heap(), h);
            if let Some(p) = x.parent().filter(|p| !p.is_root()) {
                prop_assert_eq!(p.child(h & 1), x);
            }
        }

        #[test]
        fn lca_is_the_deepest_common_ancestor(a in 1u64..(1 << 20), b in 1u64..(1 << 20)) {
            let (u, w) = (VertexId::from_heap(a), VertexId::from_heap(b));
            let m = lca(u, w);
            prop_assert_eq!(ancestor_by_walk(u, m.level()), m);
            prop_assert_eq!(ancestor_by_walk(w, m.level()), m);
            if m.level() < u.level().min(w.level()) {
                prop_assert_ne!(ancestor_by_walk(u, m.level() + 1), ancestor_by_walk(w, m.level() + 1));
            }
        }
    }
}
