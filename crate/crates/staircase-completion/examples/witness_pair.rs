//! When a corner is rank deficient, uniqueness fails and the engine proves
//! it constructively: two rank-r completions that agree on every sample.

use staircase_completion::completion::decide_and_complete;
use staircase_completion::generate::{two_block, DeficiencyKind};
use staircase_completion::linalg::numerical_rank;
use staircase_completion::pattern::{validate_chain, ChainMode};
use staircase_completion::{CompletionVerdict, Tolerances};

fn main() {
    let tol = Tolerances::default();
    // 9x10 rank-2 data where the corner block only reaches rank 1.
    let g = two_block(9, 10, 2, DeficiencyKind::RowDrop, 7).expect("generator");
    let chain = validate_chain(&g.instance, &g.chain, ChainMode::Strict).expect("chain");

    let verdict = decide_and_complete(&g.instance, &chain, &tol);
    let CompletionVerdict::NonUnique { first, second, deficient_corner, construction } = verdict
    else {
        println!("expected a witness pair, got {}", verdict.label());
        return;
    };

    println!("corner {} is deficient; witness via {}", deficient_corner + 1, construction.label());
    println!("rank(M1) = {}", numerical_rank(first.inner(), &tol));
    println!("rank(M2) = {}", numerical_rank(second.inner(), &tol));

    let mut sample_gap: f64 = 0.0;
    for (i, j, v) in g.instance.iter() {
        sample_gap = sample_gap.max((first.get(i, j) - v).abs());
        sample_gap = sample_gap.max((second.get(i, j) - v).abs());
    }
    println!("max |M - data| over samples: {sample_gap:.2e}");
    let sep = (first.inner() - second.inner()).norm();
    println!("separation |M1 - M2|_F = {sep:.4}");
}
