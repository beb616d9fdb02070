//! Rank-deficient corners do not always break uniqueness: in the positive
//! semidefinite world the sign constraint can pin the completion anyway.
//!
//! The 3x3 matrix [[5,4,x],[4,16,-8],[x,-8,4]] has a rank-1 overlap block,
//! yet its Schur scalar is -(x/2 + 1)^2, which vanishes only at x = -2:
//! exactly one PSD completion of rank 2. Perturbing one entry splits the
//! double root and non-uniqueness returns.

use staircase_completion::psd::{psd_demo, PsdDemoConfig};
use staircase_completion::{DemoOutcome, Tolerances};

fn show(cfg: &PsdDemoConfig) {
    let rep = psd_demo(cfg, &Tolerances::default()).expect("demo");
    println!(
        "h22 = {}: q(x) = ({})x^2 + ({})x + ({}), corner rank {}",
        cfg.h22, rep.q2, rep.q1, rep.q0, rep.corner_rank
    );
    match rep.outcome {
        DemoOutcome::UniqueRoot { x } => println!("  unique: x = {x}"),
        DemoOutcome::TwoRoots { x1, x2 } => println!("  two completions: x = {x1}, x = {x2}"),
        DemoOutcome::NoCompletion => println!("  no psd completion"),
        DemoOutcome::SlackRank => println!("  not unique at rank {}", rep.target_rank),
    }
    for (x, _, rank, psd) in &rep.assembled {
        println!("  at x = {x:.6}: rank {rank}, psd {psd}");
    }
}

fn main() {
    show(&PsdDemoConfig::default());
    show(&PsdDemoConfig { h22: 17.0, ..PsdDemoConfig::default() });
}
