//! Low-rank matrix completion under staircase sampling patterns.
//!
//! A staircase pattern is a union of overlapping full rectangles (bicliques)
//! running diagonally across the matrix. For such patterns the question
//! "does the observed data admit exactly one rank-r completion?" is decidable
//! by rank tests on the pairwise overlaps ("corners") alone, and both outcomes
//! are constructive:
//!
//! * every corner has rank r: the unique completion is assembled by a chain of
//!   generalized Schur complement fills ([`completion::decide_and_complete`]),
//! * some corner is rank deficient: two verified rank-r completions that agree
//!   on every sample are produced as a witness of non-uniqueness.
//!
//! The crate also ships a graph-side certificate (the sampling pattern lifted
//! to a bipartite-plus-cliques graph is chordal with a path clique tree,
//! [`graph`]), a positive semidefinite corner case where uniqueness can hold
//! even with a deficient corner ([`psd`]), instance generators for both
//! regimes ([`generate`]), and a plain-text instance/result file format
//! ([`io`]) used by the `staircase` command line tool.

pub mod cli;
pub mod completion;
pub mod generate;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod pattern;
pub mod psd;

pub use psd::{
    assemble_bordered, psd_complete, psd_counterexample, psd_demo, DemoOutcome, PsdCompletion,
    PsdDemoConfig, PsdDemoReport, PsdError, PsdInstance,
};

pub use completion::{
    complete_two_block, corner_report, decide_and_complete, decide_and_complete_seeded,
    witness_nonunique, CompletionVerdict, CornerRank, CornerRankReport, PerturbationPlan,
    TwoBlockError, WitnessConstruction,
};
pub use io::{FormatError, InstanceFile, ResultFile};
pub use linalg::{DenseMatrix, Tolerances};
pub use pattern::{Biclique, SampledInstance, StaircaseChain};
