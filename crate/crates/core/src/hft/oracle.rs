use serde::{Deserialize, Serialize};

use super::{HftError, Interval, Neighborhood, NodeKind, TreeRef};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleNode {
    pub kind: NodeKind,
    pub label: u64,
    pub parent: Option<usize>,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

/// Explicit pointer tree for `HT([a, b])`, built node by node. Test oracle:
/// memory is linear in the interval size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtOracle {
    pub interval: Interval,
    pub nodes: Vec<OracleNode>,
    pub root: usize,
    leaf_at: Vec<usize>,
    nonleaf_at: Vec<Option<usize>>,
}

impl HtOracle {
    pub fn build(a: u64, b: u64) -> Result<Self, HftError> {
        let interval = Interval::new(a, b)?;
        let mut nodes = Vec::new();
        let root = build_ht(&mut nodes, a, b);
        let size = interval.size() as usize;
        let mut leaf_at = vec![usize::MAX; size];
        let mut nonleaf_at = vec![None; size];
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            let n = &nodes[i];
            let slot = (n.label - a) as usize;
            match n.kind {
                NodeKind::Leaf => leaf_at[slot] = i,
                NodeKind::NonLeaf => nonleaf_at[slot] = Some(i),
            }
            stack.extend(n.left);
            stack.extend(n.right);
        }
        Ok(HtOracle {
            interval,
            nodes,
            root,
            leaf_at,
            nonleaf_at,
        })
    }

    pub fn root_label(&self) -> u64 {
        self.nodes[self.root].label
    }

    /// Indices of the nodes still attached below the root.
    pub fn reachable(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.nodes[i].left);
            stack.extend(self.nodes[i].right);
        }
        out
    }

    /// Labels of all leaves in the tree (after splicing), unsorted.
    pub fn leaf_labels(&self) -> Vec<u64> {
        self.labels_of(NodeKind::Leaf)
    }

    pub fn nonleaf_labels(&self) -> Vec<u64> {
        self.labels_of(NodeKind::NonLeaf)
    }

    fn labels_of(&self, kind: NodeKind) -> Vec<u64> {
        self.reachable()
            .into_iter()
            .filter(|&i| self.nodes[i].kind == kind)
            .map(|i| self.nodes[i].label)
            .collect()
    }

    pub fn leaf(&self, y: u64) -> Option<usize> {
        self.interval
            .contains(y)
            .then(|| self.leaf_at[(y - self.interval.a) as usize])
    }

    pub fn nonleaf(&self, y: u64) -> Option<usize> {
        if self.interval.contains(y) {
            self.nonleaf_at[(y - self.interval.a) as usize]
        } else {
            None
        }
    }

    pub fn depth(&self, mut i: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[i].parent {
            i = p;
            d += 1;
        }
        d
    }

    pub fn height(&self) -> usize {
        self.reachable().into_iter().map(|i| self.depth(i)).max().unwrap_or(0)
    }

    fn tree_ref(&self, i: usize) -> TreeRef {
        let n = &self.nodes[i];
        TreeRef {
            kind: n.kind,
            label: n.label,
            exists: true,
        }
    }

    /// Reads the neighborhood of `y` directly off the pointer structure.
    pub fn neighborhood(&self, y: u64) -> Result<Neighborhood, HftError> {
        let leaf = self.leaf(y).ok_or(HftError::OutOfRange {
            y,
            a: self.interval.a,
            b: self.interval.b,
        })?;
        let mut nb = Neighborhood {
            query: y,
            leaf_parent: self.nodes[leaf]
                .parent
                .map_or(TreeRef::absent(), |p| self.tree_ref(p)),
            nonleaf_parent: None,
            nonleaf_left: None,
            nonleaf_right: None,
        };
        if let Some(i) = self.nonleaf(y) {
            let n = &self.nodes[i];
            nb.nonleaf_parent = n.parent.map(|p| self.tree_ref(p));
            nb.nonleaf_left = n.left.map(|c| self.tree_ref(c));
            nb.nonleaf_right = n.right.map(|c| self.tree_ref(c));
        }
        Ok(nb)
    }
}

/// Full tree with `2^x` leaves and offset `a`; returns the root index.
fn build_bt(nodes: &mut Vec<OracleNode>, x: u32, a: u64) -> usize {
    // Leaves first, then each level pairs up the one below.
    let mut level: Vec<usize> = (0..1u64 << x)
        .map(|v| push(nodes, NodeKind::Leaf, a + v))
        .collect();
    for h in 1..=x {
        let mut next = Vec::with_capacity(level.len() / 2);
        for (v, pair) in level.chunks(2).enumerate() {
            let label = a + (1u64 << (h - 1)) - 1 + v as u64 * (1u64 << h);
            let p = push(nodes, NodeKind::NonLeaf, label);
            link(nodes, p, pair[0], pair[1]);
            next.push(p);
        }
        level = next;
    }
    level[0]
}

fn build_ht(nodes: &mut Vec<OracleNode>, a: u64, b: u64) -> usize {
    let size = b - a + 1;
    if size.is_power_of_two() {
        return build_bt(nodes, size.trailing_zeros(), a);
    }
    let x = 63 - size.leading_zeros();
    let root = build_bt(nodes, x + 1, a);
    // Replace the root's right subtree by HT([a + 2^x, b]).
    let old = nodes[root].right.expect("full tree root has two children");
    nodes[old].parent = None;
    let sub = build_ht(nodes, a + (1u64 << x), b);
    nodes[root].right = Some(sub);
    nodes[sub].parent = Some(root);
    root
}

fn push(nodes: &mut Vec<OracleNode>, kind: NodeKind, label: u64) -> usize {
    nodes.push(OracleNode {
        kind,
        label,
        parent: None,
        left: None,
        right: None,
    });
    nodes.len() - 1
}

fn link(nodes: &mut [OracleNode], p: usize, l: usize, r: usize) {
    nodes[p].left = Some(l);
    nodes[p].right = Some(r);
    nodes[l].parent = Some(p);
    nodes[r].parent = Some(p);
}
