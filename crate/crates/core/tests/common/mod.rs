#![allow(dead_code)]

use fjordtwin::control::{PartitionTree, StateBox, NUM_BRANCHES};
use fjordtwin::envsim::ControlContext;
use rand::Rng;

/// A tree with `leaves` leaves spread over the branches, random split
/// positions and random Q-values.
pub fn random_tree<R: Rng>(rng: &mut R, leaves: usize) -> PartitionTree {
    let mut tree = PartitionTree::new(StateBox::default(), 14).unwrap();
    while tree.total_leaves() < leaves {
        let b = rng.gen_range(0..NUM_BRANCHES);
        let cells = tree.leaf_cells(b);
        let (id, cell) = cells[rng.gen_range(0..cells.len())];
        let dim = rng.gen_range(0..3);
        let t = cell.lo[dim] + rng.gen_range(0.05..0.95) * cell.width(dim);
        if t > cell.lo[dim] && t < cell.hi[dim] {
            let _ = tree.split_leaf(b, id, dim, t, rng.gen());
        }
    }
    for b in 0..NUM_BRANCHES {
        for (id, _) in tree.leaf_cells(b) {
            let leaf = tree.leaf_mut(b, id);
            for a in 0..3 {
                leaf.q[a] = rng.gen_range(-1e3..1e6);
                leaf.visits[a] = rng.gen_range(0..10_000);
            }
        }
    }
    tree
}

/// A context drawn from a box slightly larger than the default state box.
pub fn random_context<R: Rng>(rng: &mut R) -> ControlContext {
    ControlContext::new(
        rng.gen_range(-0.8..1.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(0.0..30.0),
        rng.gen(),
    )
}
