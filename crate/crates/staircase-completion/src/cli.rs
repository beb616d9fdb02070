//! Command-line front end for the `staircase` binary.
//!
//! Four subcommands: `complete` decides uniqueness and emits a result file,
//! `analyze` reports the detected chain, corner ranks, and the chordal
//! certificate without completing, `psd-demo` runs the closed-form bordered
//! 3x3 demonstration, and `generate` emits reproducible staircase fixtures.
//!
//! Exit codes are a pure function of the outcome: 0 unique, 2 non-unique,
//! 3 undecided, 4 infeasible, 1 for any input or usage error.

use std::ffi::OsString;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::completion::{corner_report, decide_and_complete_seeded, CompletionVerdict};
use crate::generate::{staircase, StaircaseSpec};
use crate::graph::{
    chain_graph, chain_to_clique_tree, clique_tree_dot, mcs_order, verify_induced_subtree,
};
use crate::io::{
    format_dense, format_instance, format_result, parse_instance, CornerLine, InstanceFile,
    ResultFile,
};
use crate::linalg::Tolerances;
use crate::pattern::{detect_chain, validate_chain, ChainMode, Orientation, StaircaseChain};
use crate::psd::{psd_demo, DemoOutcome, PsdDemoConfig};

pub const EXIT_UNIQUE: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NONUNIQUE: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "staircase",
    about = "Uniqueness analysis and completion of low-rank matrices sampled on staircase patterns",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide uniqueness; emit the completion or a witness pair.
    Complete(CompleteArgs),
    /// Report chain detection, corner ranks, and the chordal certificate.
    Analyze(AnalyzeArgs),
    /// Closed-form bordered 3x3 positive semidefinite demonstration.
    PsdDemo(PsdDemoArgs),
    /// Emit a staircase instance with known rank-r ground truth.
    Generate(GenerateArgs),
}

/// Numerical tolerances, overridable per invocation.
#[derive(Args, Clone, Copy)]
struct TolFlags {
    /// Relative singular value cutoff for rank decisions.
    #[arg(long, default_value_t = 1e-9)]
    rank_tol: f64,
    /// Relative residual cutoff for range containment tests.
    #[arg(long, default_value_t = 1e-8)]
    range_tol: f64,
    /// Absolute cutoff for matching observed samples.
    #[arg(long, default_value_t = 1e-8)]
    match_tol: f64,
}

impl TolFlags {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rank_rel_tol: self.rank_tol,
            range_rel_tol: self.range_tol,
            match_abs_tol: self.match_tol,
        }
    }
}

#[derive(Args)]
struct CompleteArgs {
    /// Instance file (header `m n r`, optional `band` lines, `i j value` body).
    input: String,
    /// Write the result file here instead of stdout.
    #[arg(long)]
    out: Option<String>,
    /// Accept chains that only satisfy the relaxed overlap conditions.
    #[arg(long)]
    lenient: bool,
    /// Seed for the randomized witness perturbations.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    tol: TolFlags,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Instance file to analyze.
    input: String,
    /// Write the clique tree in DOT format to this path (`-` for stdout).
    #[arg(long)]
    dot: Option<String>,
    /// Accept chains that only satisfy the relaxed overlap conditions.
    #[arg(long)]
    lenient: bool,
    #[command(flatten)]
    tol: TolFlags,
}

#[derive(Args)]
struct PsdDemoArgs {
    /// Target completion rank.
    #[arg(long, default_value_t = 2)]
    rank: usize,
    /// Override a known entry, e.g. `--entry 2,2=17`. Repeatable.
    #[arg(long)]
    entry: Vec<String>,
    #[command(flatten)]
    tol: TolFlags,
}

#[derive(Args)]
struct GenerateArgs {
    /// Row count of the ground-truth matrix.
    #[arg(long)]
    m: usize,
    /// Column count of the ground-truth matrix.
    #[arg(long)]
    n: usize,
    /// Rank of the ground truth and target rank of the instance.
    #[arg(long)]
    r: usize,
    /// Number of bicliques in the chain.
    #[arg(long)]
    l: usize,
    /// Generator seed; identical flags and seed reproduce the instance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Force this corner (1-based) to rank r-1 instead of r.
    #[arg(long)]
    deficient_corner: Option<usize>,
    /// Write the instance file here instead of stdout.
    #[arg(long)]
    out: Option<String>,
    /// Also write the dense ground-truth matrix to this path.
    #[arg(long)]
    truth: Option<String>,
}

/// Parse arguments and dispatch; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_ERROR,
            };
            let _ = e.print();
            return code;
        }
    };
    match cli.cmd {
        Command::Complete(args) => cmd_complete(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::PsdDemo(args) => cmd_psd_demo(&args),
        Command::Generate(args) => cmd_generate(&args),
    }
}

fn read_instance(path: &str) -> Result<InstanceFile, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    parse_instance(&text).map_err(|e| format!("{path}: {e}"))
}

/// Certify the file's explicit chain, or detect one from the mask.
fn obtain_chain(
    file: &InstanceFile,
    mode: ChainMode,
) -> Result<(StaircaseChain, &'static str), String> {
    match &file.chain {
        Some(bands) => validate_chain(&file.instance, bands, mode)
            .map(|c| (c, "explicit"))
            .map_err(|e| e.to_string()),
        None => detect_chain(&file.instance, mode)
            .map(|c| (c, "detected"))
            .map_err(|e| e.to_string()),
    }
}

fn emit(path: Option<&str>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {p}: {e}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_complete(args: &CompleteArgs) -> i32 {
    let file = match read_instance(&args.input) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let mode = if args.lenient { ChainMode::Lenient } else { ChainMode::Strict };
    let (chain, _) = match obtain_chain(&file, mode) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: NotStaircase: {e}");
            return EXIT_ERROR;
        }
    };
    let tol = args.tol.tolerances();
    let inst = &file.instance;

    let started = Instant::now();
    let verdict = decide_and_complete_seeded(inst, &chain, &tol, args.seed.unwrap_or(0x5eed));
    let time_ms = started.elapsed().as_secs_f64() * 1e3;

    let corners = corner_report(inst, &chain, &tol)
        .corners
        .into_iter()
        .map(|c| CornerLine {
            index: c.index + 1,
            nrows: c.rows.len(),
            ncols: c.cols.len(),
            rank: c.rank,
        })
        .collect();
    let clique_tree: Vec<(usize, usize)> = chain_to_clique_tree(&chain)
        .edges()
        .iter()
        .map(|&(a, b)| (a + 1, b + 1))
        .collect();

    let mut result = ResultFile {
        verdict: verdict.label().to_string(),
        target_rank: inst.rank_target(),
        time_ms,
        construction: None,
        deficient_corner: None,
        reason: None,
        corners,
        clique_tree,
        completed: None,
        witness: None,
    };
    let code = match verdict {
        CompletionVerdict::Unique { completion, .. } => {
            result.completed = Some(completion);
            EXIT_UNIQUE
        }
        CompletionVerdict::NonUnique { first, second, deficient_corner, construction } => {
            result.construction = Some(construction.label().to_string());
            result.deficient_corner = Some(deficient_corner + 1);
            result.witness = Some((first, second));
            EXIT_NONUNIQUE
        }
        CompletionVerdict::Undecided { reason, .. } => {
            result.reason = Some(reason);
            EXIT_UNDECIDED
        }
        CompletionVerdict::Infeasible { reason } => {
            result.reason = Some(reason);
            EXIT_INFEASIBLE
        }
    };
    if let Err(e) = emit(args.out.as_deref(), &format_result(&result)) {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    code
}

fn cmd_analyze(args: &AnalyzeArgs) -> i32 {
    let file = match read_instance(&args.input) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let mode = if args.lenient { ChainMode::Lenient } else { ChainMode::Strict };
    let (chain, provenance) = match obtain_chain(&file, mode) {
        Ok(c) => c,
        Err(e) => {
            println!("NotStaircase: {e}");
            return EXIT_UNIQUE;
        }
    };
    let tol = args.tol.tolerances();
    let inst = &file.instance;

    let orientation = match chain.orientation() {
        Orientation::AsGiven => "as-given",
        Orientation::Transposed => "transposed",
    };
    println!("chain: l={} ({provenance}, {orientation} orientation)", chain.len());
    for (k, b) in chain.bicliques().iter().enumerate() {
        println!("band {} rows {} cols {}", k + 1, b.rows().len(), b.cols().len());
    }
    let report = corner_report(inst, &chain, &tol);
    if report.corners.is_empty() {
        println!("corners: none");
    }
    for c in &report.corners {
        println!(
            "corner {} rows {} cols {} rank {} target {}",
            c.index + 1,
            c.rows.len(),
            c.cols.len(),
            c.rank,
            report.target_rank
        );
    }
    let adj = chain_graph(&chain);
    let mcs = mcs_order(&adj);
    println!("chordal: {}", mcs.chordal);
    let tree = chain_to_clique_tree(&chain);
    let edges: Vec<String> =
        tree.edges().iter().map(|&(a, b)| format!("{}-{}", a + 1, b + 1)).collect();
    if edges.is_empty() {
        println!("clique-tree: single node");
    } else {
        println!("clique-tree: {}", edges.join(" "));
    }
    println!("induced-subtree: {}", verify_induced_subtree(&tree));
    if let Some(dot_path) = &args.dot {
        let dot = clique_tree_dot(&tree, inst.nrows());
        let target = if dot_path == "-" { None } else { Some(dot_path.as_str()) };
        if let Err(e) = emit(target, &dot) {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    }
    EXIT_UNIQUE
}

// `--entry i,j=v` over the five known cells of the 3x3 demonstration.
fn apply_entry(cfg: &mut PsdDemoConfig, spec: &str) -> Result<(), String> {
    let (pos, val) = spec
        .split_once('=')
        .ok_or_else(|| format!("entry {spec:?} must look like i,j=value"))?;
    let (i, j) = pos
        .split_once(',')
        .ok_or_else(|| format!("entry position {pos:?} must look like i,j"))?;
    let i: usize = i.trim().parse().map_err(|_| format!("bad row index {i:?}"))?;
    let j: usize = j.trim().parse().map_err(|_| format!("bad column index {j:?}"))?;
    let v: f64 = val.trim().parse().map_err(|_| format!("bad value {val:?}"))?;
    if !v.is_finite() {
        return Err(format!("entry value {val:?} is not finite"));
    }
    let slot = match (i.min(j), i.max(j)) {
        (1, 1) => &mut cfg.h11,
        (1, 2) => &mut cfg.h12,
        (2, 2) => &mut cfg.h22,
        (2, 3) => &mut cfg.h23,
        (3, 3) => &mut cfg.h33,
        (1, 3) => return Err("entry (1,3) is the unknown corner x".into()),
        _ => return Err(format!("entry ({i},{j}) outside the 3x3 grid")),
    };
    *slot = v;
    Ok(())
}

fn cmd_psd_demo(args: &PsdDemoArgs) -> i32 {
    let mut cfg = PsdDemoConfig { target_rank: args.rank, ..PsdDemoConfig::default() };
    for spec in &args.entry {
        if let Err(e) = apply_entry(&mut cfg, spec) {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    }
    let report = match psd_demo(&cfg, &args.tol.tolerances()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    println!("bordered 3x3 psd completion, unknown corner x");
    println!(
        "known entries: h11={} h12={} h22={} h23={} h33={}",
        report.config.h11, report.config.h12, report.config.h22, report.config.h23,
        report.config.h33
    );
    println!("overlap block rank {}, target rank {}", report.corner_rank, report.target_rank);
    println!(
        "schur scalar: q(x) = ({})x^2 + ({})x + ({}), discriminant {}",
        report.q2, report.q1, report.q0, report.discriminant
    );
    let code = match report.outcome {
        DemoOutcome::UniqueRoot { x } => {
            println!("unique psd completion: x = {x}");
            EXIT_UNIQUE
        }
        DemoOutcome::TwoRoots { x1, x2 } => {
            println!("two psd completions: x = {x1} and x = {x2}");
            EXIT_NONUNIQUE
        }
        DemoOutcome::NoCompletion => {
            println!("no psd completion: the schur scalar is negative for every x");
            EXIT_INFEASIBLE
        }
        DemoOutcome::SlackRank => {
            println!("not unique at rank {}: an interval of x values completes", report.target_rank);
            EXIT_NONUNIQUE
        }
    };
    for (x, h, rank, psd) in &report.assembled {
        println!("at x = {x}: rank(H) = {rank}, psd: {psd}");
        for i in 0..h.nrows() {
            let row: Vec<String> = (0..h.ncols()).map(|j| format!("{}", h.get(i, j))).collect();
            println!("  {}", row.join(" "));
        }
    }
    if !report.note.is_empty() {
        println!("note: {}", report.note);
    }
    code
}

fn cmd_generate(args: &GenerateArgs) -> i32 {
    let spec = StaircaseSpec {
        m: args.m,
        n: args.n,
        r: args.r,
        l: args.l,
        seed: args.seed,
        deficient_corner: args.deficient_corner,
    };
    let generated = match staircase(&spec) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let text = format_instance(&generated.instance, Some(&generated.chain));
    if let Err(e) = emit(args.out.as_deref(), &text) {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    if let Some(truth_path) = &args.truth {
        if let Err(e) = emit(Some(truth_path), &format_dense(&generated.truth)) {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    }
    EXIT_UNIQUE
}
