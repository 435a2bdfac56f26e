use crate::envsim::{ActionSet, CostWeights};
use crate::error::{Error, Result};
use crate::hydro::GateConfig;

/// Discrete branches: (sea higher | fjord higher) × (no boat | boat waiting).
pub const NUM_BRANCHES: usize = 4;
/// Continuous dimensions in order: fjord level, sea level, wind speed.
pub const DIMENSIONS: [&str; 3] = ["h_f", "h_s", "wind"];
/// Deepest allowed leaf; keeps documents well inside JSON nesting limits.
pub const MAX_DEPTH: usize = 64;

/// Axis-aligned box over `(h_f, h_s, wind)`, left-closed and right-open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Default for StateBox {
    fn default() -> Self {
        Self {
            lo: [-0.5, -1.5, 0.0],
            hi: [0.75, 1.5, 25.0],
        }
    }
}

impl StateBox {
    pub fn validate(&self) -> Result<()> {
        for (d, name) in DIMENSIONS.iter().enumerate() {
            if !(self.lo[d].is_finite() && self.hi[d].is_finite() && self.lo[d] < self.hi[d]) {
                return Err(Error::Integrity(format!(
                    "state box dimension {name} must satisfy lo < hi"
                )));
            }
        }
        Ok(())
    }

    /// Projects a point onto the box.
    pub fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        let mut out = p;
        for d in 0..3 {
            // NaN coordinates fall to the lower bound
            out[d] = if p[d].is_nan() { self.lo[d] } else { p[d].clamp(self.lo[d], self.hi[d]) };
        }
        out
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.hi[dim] - self.lo[dim]
    }

    pub fn midpoint(&self, dim: usize) -> f64 {
        0.5 * (self.lo[dim] + self.hi[dim])
    }

    pub fn split(&self, dim: usize, threshold: f64) -> (StateBox, StateBox) {
        let mut left = *self;
        let mut right = *self;
        left.hi[dim] = threshold;
        right.lo[dim] = threshold;
        (left, right)
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|d| p[d] >= self.lo[d] && p[d] < self.hi[d])
    }
}

/// Q-values (expected cost-to-go) and visit counts of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub q: [f64; 3],
    pub visits: [u64; 3],
    /// Actions with a Q-entry.
    pub actions: ActionSet,
}

impl Leaf {
    pub fn new(actions: ActionSet) -> Self {
        Self {
            q: [0.0; 3],
            visits: [0; 3],
            actions,
        }
    }

    pub fn q(&self, a: GateConfig) -> f64 {
        self.q[a.index()]
    }

    pub fn total_visits(&self) -> u64 {
        self.visits.iter().sum()
    }

    /// Lowest-cost action among `allowed`; ties go to fewer gates.
    pub fn best(&self, allowed: ActionSet) -> Option<GateConfig> {
        let mut best: Option<GateConfig> = None;
        for a in allowed.iter().filter(|a| self.actions.contains(*a)) {
            match best {
                Some(b) if self.q(a) >= self.q(b) => {}
                _ => best = Some(a),
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        dim: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(Leaf),
}

/// Provenance recorded in the strategy document header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategyMeta {
    pub label: String,
    pub weights: Option<CostWeights>,
    pub seed: u64,
    pub episodes: u64,
}

/// Per-branch binary partitions of the state box with Q-values in the leaves.
///
/// Nodes live in one arena per branch; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree {
    pub bounds: StateBox,
    pub num_gates: u32,
    pub meta: StrategyMeta,
    branches: Vec<Vec<Node>>,
}

impl PartitionTree {
    /// A tree with one leaf per branch holding Q-entries for every action.
    pub fn new(bounds: StateBox, num_gates: u32) -> Result<Self> {
        bounds.validate()?;
        Ok(Self {
            bounds,
            num_gates,
            meta: StrategyMeta::default(),
            branches: vec![vec![Node::Leaf(Leaf::new(ActionSet::ALL))]; NUM_BRANCHES],
        })
    }

    pub(crate) fn from_parts(
        bounds: StateBox,
        num_gates: u32,
        meta: StrategyMeta,
        branches: Vec<Vec<Node>>,
    ) -> Result<Self> {
        let tree = Self {
            bounds,
            num_gates,
            meta,
            branches,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn nodes(&self, branch: usize) -> &[Node] {
        &self.branches[branch]
    }

    pub fn leaf_count(&self, branch: usize) -> usize {
        self.branches[branch]
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    pub fn total_leaves(&self) -> usize {
        (0..NUM_BRANCHES).map(|b| self.leaf_count(b)).sum()
    }

    /// Node id of the leaf containing `point` (after clamping into the box).
    pub fn locate(&self, branch: usize, point: [f64; 3]) -> usize {
        self.locate_with_box(branch, point).0
    }

    /// Leaf id and its cell.
    pub fn locate_with_box(&self, branch: usize, point: [f64; 3]) -> (usize, StateBox) {
        let p = self.bounds.clamp(point);
        let nodes = &self.branches[branch];
        let mut cell = self.bounds;
        let mut id = 0;
        loop {
            match &nodes[id] {
                Node::Leaf(_) => return (id, cell),
                Node::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => {
                    let (l, r) = cell.split(*dim, *threshold);
                    if p[*dim] < *threshold {
                        id = *left;
                        cell = l;
                    } else {
                        id = *right;
                        cell = r;
                    }
                }
            }
        }
    }

    pub fn leaf(&self, branch: usize, id: usize) -> &Leaf {
        match &self.branches[branch][id] {
            Node::Leaf(l) => l,
            Node::Split { .. } => panic!("node {id} of branch {branch} is not a leaf"),
        }
    }

    pub fn leaf_mut(&mut self, branch: usize, id: usize) -> &mut Leaf {
        match &mut self.branches[branch][id] {
            Node::Leaf(l) => l,
            Node::Split { .. } => panic!("node {id} of branch {branch} is not a leaf"),
        }
    }

    pub fn leaf_at(&self, branch: usize, point: [f64; 3]) -> &Leaf {
        self.leaf(branch, self.locate(branch, point))
    }

    /// Greedy action in a branch restricted to `allowed`; closed when nothing qualifies.
    pub fn decide_in(&self, branch: usize, point: [f64; 3], allowed: ActionSet) -> GateConfig {
        self.leaf_at(branch, point)
            .best(allowed)
            .unwrap_or(GateConfig::Closed)
    }

    /// Replaces leaf `id` by a split; both children start as copies of the parent
    /// with `left_share` of its visits on the left. Returns the child ids.
    pub fn split_leaf(
        &mut self,
        branch: usize,
        id: usize,
        dim: usize,
        threshold: f64,
        left_share: f64,
    ) -> Result<(usize, usize)> {
        let (cell, depth) = self.cell_and_depth(branch, id)?;
        if depth >= MAX_DEPTH {
            return Err(Error::Integrity(format!("node {id} is already at depth {depth}")));
        }
        if dim >= 3 || !(threshold > cell.lo[dim] && threshold < cell.hi[dim]) {
            return Err(Error::Integrity(format!(
                "threshold {threshold} on {} is not strictly inside the cell",
                DIMENSIONS.get(dim).unwrap_or(&"?")
            )));
        }
        let parent = match &self.branches[branch][id] {
            Node::Leaf(l) => l.clone(),
            Node::Split { .. } => {
                return Err(Error::Integrity(format!("node {id} is already split")))
            }
        };
        let share = left_share.clamp(0.0, 1.0);
        let mut left = parent.clone();
        let mut right = parent;
        for a in 0..3 {
            let v = left.visits[a];
            left.visits[a] = (v as f64 * share).round() as u64;
            right.visits[a] = v - left.visits[a];
        }
        let nodes = &mut self.branches[branch];
        let l = nodes.len();
        nodes.push(Node::Leaf(left));
        nodes.push(Node::Leaf(right));
        nodes[id] = Node::Split {
            dim,
            threshold,
            left: l,
            right: l + 1,
        };
        Ok((l, l + 1))
    }

    /// The cell covered by node `id`.
    pub fn cell_of(&self, branch: usize, id: usize) -> Result<StateBox> {
        self.cell_and_depth(branch, id).map(|(c, _)| c)
    }

    /// The cell of node `id` and its distance from the root.
    pub fn cell_and_depth(&self, branch: usize, id: usize) -> Result<(StateBox, usize)> {
        let nodes = &self.branches[branch];
        let mut stack = vec![(0usize, self.bounds, 0usize)];
        while let Some((n, cell, depth)) = stack.pop() {
            if n == id {
                return Ok((cell, depth));
            }
            if let Node::Split {
                dim,
                threshold,
                left,
                right,
            } = &nodes[n]
            {
                let (l, r) = cell.split(*dim, *threshold);
                stack.push((*left, l, depth + 1));
                stack.push((*right, r, depth + 1));
            }
        }
        Err(Error::Integrity(format!("node {id} is unreachable in branch {branch}")))
    }

    /// Leaf cells of a branch with their node ids.
    pub fn leaf_cells(&self, branch: usize) -> Vec<(usize, StateBox)> {
        let nodes = &self.branches[branch];
        let mut out = Vec::new();
        let mut stack = vec![(0usize, self.bounds)];
        while let Some((n, cell)) = stack.pop() {
            match &nodes[n] {
                Node::Leaf(_) => out.push((n, cell)),
                Node::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => {
                    let (l, r) = cell.split(*dim, *threshold);
                    stack.push((*right, r));
                    stack.push((*left, l));
                }
            }
        }
        out
    }

    /// Checks the structural invariants: a proper binary tree per branch,
    /// thresholds strictly inside their cells, finite Q-values and a Q-entry
    /// for every action.
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.branches.len() != NUM_BRANCHES {
            return Err(Error::Integrity(format!(
                "expected {NUM_BRANCHES} branches, found {}",
                self.branches.len()
            )));
        }
        for (b, nodes) in self.branches.iter().enumerate() {
            if nodes.is_empty() {
                return Err(Error::Integrity(format!("branch {b} has no root")));
            }
            let mut seen = vec![false; nodes.len()];
            let mut stack = vec![(0usize, self.bounds, 0usize)];
            while let Some((n, cell, depth)) = stack.pop() {
                if depth > MAX_DEPTH {
                    return Err(Error::Integrity(format!("branch {b}: deeper than {MAX_DEPTH}")));
                }
                if n >= nodes.len() || seen[n] {
                    return Err(Error::Integrity(format!(
                        "branch {b}: node {n} is missing or shared"
                    )));
                }
                seen[n] = true;
                match &nodes[n] {
                    Node::Leaf(leaf) => {
                        if leaf.actions != ActionSet::ALL {
                            return Err(Error::Integrity(format!(
                                "branch {b}: leaf {n} lacks a Q-entry"
                            )));
                        }
                        if leaf.q.iter().any(|q| !q.is_finite()) {
                            return Err(Error::Integrity(format!(
                                "branch {b}: leaf {n} has a non-finite Q-value"
                            )));
                        }
                    }
                    Node::Split {
                        dim,
                        threshold,
                        left,
                        right,
                    } => {
                        if *dim >= 3 || !(*threshold > cell.lo[*dim] && *threshold < cell.hi[*dim]) {
                            return Err(Error::Integrity(format!(
                                "branch {b}: node {n} threshold {threshold} outside its cell"
                            )));
                        }
                        let (l, r) = cell.split(*dim, *threshold);
                        stack.push((*left, l, depth + 1));
                        stack.push((*right, r, depth + 1));
                    }
                }
            }
            if let Some(orphan) = seen.iter().position(|s| !s) {
                return Err(Error::Integrity(format!("branch {b}: node {orphan} is unreachable")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::control::{tree_decide, Strategy};
    use crate::envsim::ControlContext;

    fn single_leaf(q: [f64; 3]) -> PartitionTree {
        let mut t = PartitionTree::new(StateBox::default(), 14).unwrap();
        for b in 0..NUM_BRANCHES {
            t.leaf_mut(b, 0).q = q;
        }
        t
    }

    #[test]
    fn argmin_decision() {
        let t = single_leaf([5.0, 3.0, 7.0]);
        let c = ControlContext::new(0.3, 0.1, 5.0, false);
        assert_eq!(tree_decide(&t, &c), GateConfig::Single);
    }

    #[test]
    fn ties_prefer_fewer_gates() {
        let t = single_leaf([2.0, 2.0, 2.0]);
        let c = ControlContext::new(0.3, 0.1, 5.0, false);
        assert_eq!(t.decide(&c), GateConfig::Closed);
    }

    #[test]
    fn decision_respects_allowed_set() {
        let t = single_leaf([5.0, 6.0, 1.0]);
        // sea higher with calm wind: all gates not executable
        let c = ControlContext::new(0.1, 0.3, 5.0, false);
        assert_eq!(t.decide(&c), GateConfig::Closed);
    }

    #[test]
    fn threshold_routes_right() {
        let mut t = PartitionTree::new(StateBox::default(), 14).unwrap();
        let (l, r) = t.split_leaf(0, 0, 1, 0.2, 0.5).unwrap();
        assert_eq!(t.locate(0, [0.0, 0.2, 3.0]), r);
        assert_eq!(t.locate(0, [0.0, 0.19999, 3.0]), l);
    }

    #[test]
    fn out_of_box_points_clamp() {
        let mut t = PartitionTree::new(StateBox::default(), 14).unwrap();
        let (l, r) = t.split_leaf(1, 0, 2, 10.0, 0.5).unwrap();
        assert_eq!(t.locate(1, [0.0, 0.0, 99.0]), r);
        assert_eq!(t.locate(1, [0.0, 0.0, -3.0]), l);
        assert_eq!(t.locate(1, [0.0, 0.0, f64::NAN]), l);
    }

    #[test]
    fn split_rejects_threshold_on_boundary() {
        let mut t = PartitionTree::new(StateBox::default(), 14).unwrap();
        assert!(t.split_leaf(0, 0, 0, -0.5, 0.5).is_err());
        assert!(t.split_leaf(0, 0, 0, 0.75, 0.5).is_err());
        t.split_leaf(0, 0, 0, 0.0, 0.5).unwrap();
        assert!(t.split_leaf(0, 0, 0, 0.1, 0.5).is_err());
    }

    #[test]
    fn split_children_inherit_q_and_share_visits() {
        let mut t = PartitionTree::new(StateBox::default(), 14).unwrap();
        t.leaf_mut(2, 0).q = [1.0, 2.0, 3.0];
        t.leaf_mut(2, 0).visits = [10, 4, 1];
        let (l, r) = t.split_leaf(2, 0, 0, 0.1, 0.3).unwrap();
        assert_eq!(t.leaf(2, l).q, [1.0, 2.0, 3.0]);
        assert_eq!(t.leaf(2, r).q, [1.0, 2.0, 3.0]);
        for a in 0..3 {
            assert_eq!(t.leaf(2, l).visits[a] + t.leaf(2, r).visits[a], [10, 4, 1][a]);
        }
    }

    fn random_tree(rng: &mut ChaCha8Rng, splits: usize) -> PartitionTree {
        let mut t = PartitionTree::new(StateBox::default(), 14).unwrap();
        for _ in 0..splits {
            let b = rng.gen_range(0..NUM_BRANCHES);
            let cells = t.leaf_cells(b);
            let (id, cell) = cells[rng.gen_range(0..cells.len())];
            let dim = rng.gen_range(0..3);
            let thr = cell.lo[dim] + cell.width(dim) * rng.gen_range(0.05..0.95);
            t.split_leaf(b, id, dim, thr, 0.5).unwrap();
        }
        t
    }

    #[test]
    fn partition_covers_box_exactly_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_tree(&mut rng, 200);
        t.validate().unwrap();
        let b = StateBox::default();
        let cells: Vec<_> = (0..NUM_BRANCHES).map(|br| t.leaf_cells(br)).collect();
        for _ in 0..100_000 {
            let p = [
                rng.gen_range(b.lo[0]..b.hi[0]),
                rng.gen_range(b.lo[1]..b.hi[1]),
                rng.gen_range(b.lo[2]..b.hi[2]),
            ];
            for (br, cells) in cells.iter().enumerate() {
                let hits = cells.iter().filter(|(_, c)| c.contains(p)).count();
                assert_eq!(hits, 1);
                let (id, cell) = t.locate_with_box(br, p);
                assert!(cell.contains(p));
                assert!(matches!(t.nodes(br)[id], Node::Leaf(_)));
            }
        }
    }

    #[test]
    fn cell_of_matches_leaf_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_tree(&mut rng, 50);
        for b in 0..NUM_BRANCHES {
            for (id, cell) in t.leaf_cells(b) {
                assert_eq!(t.cell_of(b, id).unwrap(), cell);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn argmin_invariant_under_positive_affine_rescale(
            q in proptest::array::uniform3(-1e6f64..1e6),
            scale in 1e-3f64..1e3,
            shift in -1e6f64..1e6,
        ) {
            let c = ControlContext::new(0.3, 0.1, 9.0, false);
            let a = single_leaf(q).decide(&c);
            let scaled = single_leaf([q[0] * scale + shift, q[1] * scale + shift, q[2] * scale + shift]);
            // rescaling can create exact ties only through rounding; skip those
            let sq = scaled.leaf(0, 0).q;
            proptest::prop_assume!(sq[0] != sq[1] && sq[1] != sq[2] && sq[0] != sq[2]);
            proptest::prop_assert_eq!(a, scaled.decide(&c));
        }
    }
}
