mod common;

use fjordtwin::control::{load_strategy, save_strategy, tree_decide, NUM_BRANCHES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn thousand_leaf_trees_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for leaves in [4, 100, 1000] {
        let tree = common::random_tree(&mut rng, leaves);
        assert_eq!(tree.total_leaves(), leaves);
        let doc = save_strategy(&tree);
        let back = load_strategy(&doc).unwrap();
        // node ids are renumbered on load; the document is canonical
        assert_eq!(save_strategy(&back), doc);
        assert_eq!(load_strategy(&save_strategy(&back)).unwrap(), back);
        for _ in 0..10_000 {
            let ctx = common::random_context(&mut rng);
            assert_eq!(tree_decide(&back, &ctx), tree_decide(&tree, &ctx));
        }
    }
}

#[test]
fn every_leaf_is_reachable_after_reload() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tree = common::random_tree(&mut rng, 300);
    let back = load_strategy(&save_strategy(&tree)).unwrap();
    for b in 0..NUM_BRANCHES {
        for (id, cell) in back.leaf_cells(b) {
            let centre = [0, 1, 2].map(|d| cell.midpoint(d));
            assert_eq!(back.locate(b, centre), id);
        }
    }
}
