//! Write an instance to the plain-text format, read it back, and run the
//! solver on the parsed copy. The same format is consumed by the
//! `staircase complete` and `staircase analyze` commands.

use staircase_completion::completion::decide_and_complete;
use staircase_completion::generate::{staircase, StaircaseSpec};
use staircase_completion::io::{format_instance, format_result, parse_instance, CornerLine, ResultFile};
use staircase_completion::pattern::{validate_chain, ChainMode};
use staircase_completion::{CompletionVerdict, Tolerances};

fn main() {
    let g = staircase(&StaircaseSpec { m: 5, n: 6, r: 1, l: 2, seed: 2, deficient_corner: None })
        .expect("feasible shape");
    let text = format_instance(&g.instance, Some(&g.chain));
    println!("--- instance file ---\n{text}");

    let parsed = parse_instance(&text).expect("round trip");
    assert_eq!(parsed.instance, g.instance);
    let bands = parsed.chain.expect("explicit chain");
    let chain = validate_chain(&parsed.instance, &bands, ChainMode::Strict).expect("chain");

    let verdict = decide_and_complete(&parsed.instance, &chain, &Tolerances::default());
    let completed = match verdict {
        CompletionVerdict::Unique { completion, .. } => completion,
        other => panic!("expected unique, got {}", other.label()),
    };
    let result = ResultFile {
        verdict: "unique".into(),
        target_rank: 1,
        time_ms: 0.0,
        construction: None,
        deficient_corner: None,
        reason: None,
        corners: vec![CornerLine { index: 1, nrows: 1, ncols: 1, rank: 1 }],
        clique_tree: vec![(1, 2)],
        completed: Some(completed),
        witness: None,
    };
    println!("--- result file ---\n{}", format_result(&result));
}
