//! Complete a small staircase instance by hand.
//!
//! Two overlapping rectangles of a 4x5 rank-2 matrix are observed; their
//! overlap (the "corner") is 2x2 of rank 2, so the completion is unique and
//! the missing blocks are filled by a generalized Schur complement.

use staircase_completion::completion::decide_and_complete;
use staircase_completion::pattern::{validate_chain, Biclique, ChainMode, SampledInstance};
use staircase_completion::{CompletionVerdict, Tolerances};

fn main() {
    // Rank-2 ground truth: z = u1 * v1^T + u2 * v2^T.
    let u = [[1.0, 2.0], [0.5, -1.0], [2.0, 1.0], [-1.0, 1.0]];
    let v = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, -1.0], [0.5, 3.0]];
    let z = |i: usize, j: usize| u[i][0] * v[j][0] + u[i][1] * v[j][1];

    // Band 1 covers rows 0..3 x cols 0..3, band 2 rows 1..4 x cols 1..5.
    let mut samples = Vec::new();
    for i in 0..4 {
        for j in 0..5 {
            let in_band1 = i < 3 && j < 3;
            let in_band2 = (1..4).contains(&i) && (1..5).contains(&j);
            if in_band1 || in_band2 {
                samples.push((i, j, z(i, j)));
            }
        }
    }

    let inst = SampledInstance::new(4, 5, 2, samples).expect("valid instance");
    let bands = vec![
        Biclique::new(vec![0, 1, 2], vec![0, 1, 2]).unwrap(),
        Biclique::new(vec![1, 2, 3], vec![1, 2, 3, 4]).unwrap(),
    ];
    let chain = validate_chain(&inst, &bands, ChainMode::Strict).expect("staircase chain");

    match decide_and_complete(&inst, &chain, &Tolerances::default()) {
        CompletionVerdict::Unique { completion, corners } => {
            println!("unique completion (corner ranks all {})", corners.target_rank);
            let mut worst: f64 = 0.0;
            for i in 0..4 {
                let row: Vec<String> =
                    (0..5).map(|j| format!("{:7.3}", completion.get(i, j))).collect();
                println!("  {}", row.join(" "));
                for j in 0..5 {
                    worst = worst.max((completion.get(i, j) - z(i, j)).abs());
                }
            }
            println!("max abs deviation from ground truth: {worst:.2e}");
        }
        other => println!("unexpected verdict: {}", other.label()),
    }
}
