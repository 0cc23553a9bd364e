//! Fixed inputs shared by the benchmarks.

use eqmom::moments::forward_map;
use eqmom::{KernelContext, MomentVector, NodeSet};

/// A well-separated two-node state.
pub fn two_node_state() -> NodeSet {
    NodeSet::new(vec![0.6, 1.1], vec![-0.9, 0.7], 0.8)
}

pub fn three_node_state() -> NodeSet {
    NodeSet::new(vec![0.5, 0.9, 0.4], vec![-1.4, 0.1, 1.3], 0.6)
}

/// Moments of `w` under the kernel `id`, with the matching context.
pub fn moments_of(id: &str, w: &NodeSet) -> (KernelContext, MomentVector) {
    let ctx = KernelContext::from_id(id, w.n()).expect("known kernel");
    let m = forward_map(w, &ctx.moments().values);
    (ctx, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_invert() {
        for w in [two_node_state(), three_node_state()] {
            let (ctx, m) = moments_of("gaussian", &w);
            assert!(eqmom::inversion::invert(&m, &ctx).is_ok());
        }
    }
}
