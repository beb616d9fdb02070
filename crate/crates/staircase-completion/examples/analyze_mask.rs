//! Detect the staircase chain of a sampling mask and certify its graph lift.

use staircase_completion::completion::corner_report;
use staircase_completion::graph::{chain_graph, chain_to_clique_tree, mcs_order, verify_induced_subtree};
use staircase_completion::pattern::{detect_chain, ChainMode, SampledInstance};
use staircase_completion::Tolerances;

fn analyze(label: &str, inst: &SampledInstance) {
    println!("--- {label}");
    let chain = match detect_chain(inst, ChainMode::Strict) {
        Ok(c) => c,
        Err(e) => {
            println!("NotStaircase: {e}");
            return;
        }
    };
    println!("detected l = {} bands", chain.len());
    for (k, b) in chain.bicliques().iter().enumerate() {
        println!("  band {}: {} rows x {} cols", k + 1, b.rows().len(), b.cols().len());
    }
    let report = corner_report(inst, &chain, &Tolerances::default());
    for c in &report.corners {
        println!("  corner {}: rank {} of target {}", c.index + 1, c.rank, report.target_rank);
    }

    // The pattern lifted to row/column vertices plus band cliques is chordal,
    // and the band cliques form a path clique tree.
    let mcs = mcs_order(&chain_graph(&chain));
    let tree = chain_to_clique_tree(&chain);
    println!("chordal: {}", mcs.chordal);
    println!("clique tree edges: {:?}", tree.edges());
    println!("induced subtrees connected: {}", verify_induced_subtree(&tree));
}

fn main() {
    // Two overlapping rectangles of a rank-2 product, no band lines given.
    let mut samples = Vec::new();
    for i in 0..5usize {
        for j in 0..6usize {
            let in_a = i < 3 && j < 4;
            let in_b = (1..5).contains(&i) && (2..6).contains(&j);
            if in_a || in_b {
                let z = (i as f64 + 1.0) * (j as f64 + 1.0) + 0.5 * (i as f64 - j as f64);
                samples.push((i, j, z));
            }
        }
    }
    analyze("staircase mask", &SampledInstance::new(5, 6, 2, samples).unwrap());

    // A diagonal mask has interval supports but no connected chain.
    let diag: Vec<(usize, usize, f64)> = (0..4).map(|k| (k, k, 1.0)).collect();
    analyze("diagonal mask", &SampledInstance::new(4, 4, 1, diag).unwrap());
}
