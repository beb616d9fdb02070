//! Export a staircase chain's clique tree as Graphviz DOT.
//!
//! Pipe into `dot -Tpng` to render. The tree is always a path, with corner
//! row/column sets on the separators; that path structure is what makes the
//! left-to-right completion sweep exact.

use staircase_completion::generate::{staircase, StaircaseSpec};
use staircase_completion::graph::{chain_to_clique_tree, clique_tree_dot};
use staircase_completion::pattern::{validate_chain, ChainMode};

fn main() {
    let spec = StaircaseSpec { m: 9, n: 11, r: 2, l: 4, seed: 11, deficient_corner: None };
    let g = staircase(&spec).expect("feasible shape");
    let chain = validate_chain(&g.instance, &g.chain, ChainMode::Strict).expect("chain");
    let tree = chain_to_clique_tree(&chain);
    print!("{}", clique_tree_dot(&tree, g.instance.nrows()));
}
