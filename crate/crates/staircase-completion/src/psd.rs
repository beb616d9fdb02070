//! Positive semidefinite completion of bordered symmetric matrices.
//!
//! For `[[A, B], [B^T, C]]` with `A` and `B` given, a PSD completion exists
//! iff `A` is PSD and `Range(B)` lies in `Range(A)`; the completions of
//! minimal rank all share `C = B^T A^+ B`. At target rank r the completion is
//! unique iff `rank(A) = r`; otherwise adding any PSD matrix of rank
//! `r - rank(A)` to the minimal `C` yields another verified completion.
//!
//! The module also carries a three-by-three demonstration that the corner
//! rank rule from the general engine is one-directional for PSD data: both
//! principal 2x2 blocks of a symmetric 3x3 matrix are observed, the
//! off-corner entry is free, the overlap block has rank 1 below the target
//! rank 2, and still exactly one PSD completion exists because the free
//! entry's Schur scalar is a negative perfect square.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{
    is_psd, null_space, numerical_rank, pseudoinverse, range_contains, symmetric_eigen,
    DenseMatrix, Tolerances,
};

/// The given blocks of a bordered symmetric completion problem.
#[derive(Debug, Clone)]
pub struct PsdInstance {
    a: DenseMatrix,
    b: DenseMatrix,
    r: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum PsdError {
    #[error("blocks do not form a bordered symmetric instance: {0}")]
    InvalidBlocks(String),
    #[error("no positive semidefinite completion exists: {0}")]
    NoPsdCompletion(String),
    #[error("corner rank {actual} exceeds the target rank {target}")]
    RankExcess { actual: usize, target: usize },
}

impl PsdInstance {
    pub fn new(a: DenseMatrix, b: DenseMatrix, r: usize) -> Result<Self, PsdError> {
        if a.nrows() != a.ncols() {
            return Err(PsdError::InvalidBlocks(format!(
                "corner block is {}x{}, not square",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(PsdError::InvalidBlocks(format!(
                "side block has {} rows, corner block has {}",
                b.nrows(),
                a.nrows()
            )));
        }
        if r == 0 {
            return Err(PsdError::InvalidBlocks("target rank must be positive".into()));
        }
        let asym = (a.inner() - a.inner().transpose()).amax();
        if asym > 1e-12 * a.inner().amax().max(1.0) {
            return Err(PsdError::InvalidBlocks(format!(
                "corner block is not symmetric (deviation {asym:.3e})"
            )));
        }
        Ok(PsdInstance { a, b, r })
    }

    pub fn corner(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn side(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn rank_target(&self) -> usize {
        self.r
    }
}

/// `[[A, B], [B^T, C]]` as one symmetric matrix.
pub fn assemble_bordered(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let (na, nc) = (a.nrows(), c.nrows());
    let mut out = DMatrix::zeros(na + nc, na + nc);
    out.view_mut((0, 0), (na, na)).copy_from(a);
    out.view_mut((0, na), (na, nc)).copy_from(b);
    out.view_mut((na, 0), (nc, na)).copy_from(&b.transpose());
    out.view_mut((na, na), (nc, nc)).copy_from(c);
    out
}

/// Result of [`psd_complete`]: either the forced block or two distinct
/// verified completions.
#[derive(Debug, Clone)]
pub enum PsdCompletion {
    Unique {
        c: DenseMatrix,
        assembled: DenseMatrix,
    },
    Pair {
        first_c: DenseMatrix,
        second_c: DenseMatrix,
        first: DenseMatrix,
        second: DenseMatrix,
    },
}

/// Orthonormal directions for the rank boost, preferring the orthogonal
/// complement of `c0`'s range so the added spectrum is clean.
fn boost_directions(c0: &DMatrix<f64>, count: usize, tol: &Tolerances) -> Vec<DMatrix<f64>> {
    let n = c0.nrows();
    let mut chosen: Vec<DMatrix<f64>> = Vec::new();
    let mut candidates: Vec<DMatrix<f64>> = Vec::new();
    let ns = null_space(c0, tol);
    for k in 0..ns.ncols() {
        candidates.push(ns.column(k).into_owned().reshape_generic(
            nalgebra::Dyn(n),
            nalgebra::Dyn(1),
        ));
    }
    for k in 0..n {
        let mut e = DMatrix::zeros(n, 1);
        e[(k, 0)] = 1.0;
        candidates.push(e);
    }
    for cand in candidates {
        if chosen.len() == count {
            break;
        }
        let mut q = cand;
        for p in &chosen {
            let coeff = (p.transpose() * &q)[(0, 0)];
            q -= p * coeff;
        }
        let norm = q.norm();
        if norm > 1e-8 {
            chosen.push(q / norm);
        }
    }
    chosen
}

/// Complete the bordered instance at its target rank.
///
/// With `rank(A) = r` the block `B^T A^+ B` is the only PSD completion of
/// rank r. With `rank(A) < r` the minimal completion and a rank-boosted one
/// are returned, both verified PSD of total rank exactly r.
pub fn psd_complete(inst: &PsdInstance, tol: &Tolerances) -> Result<PsdCompletion, PsdError> {
    let a = inst.a.inner();
    let b = inst.b.inner();
    let r = inst.r;
    let rank_a = numerical_rank(a, tol);
    if rank_a > r {
        return Err(PsdError::RankExcess { actual: rank_a, target: r });
    }
    if !is_psd(a, tol) {
        return Err(PsdError::NoPsdCompletion("corner block is not positive semidefinite".into()));
    }
    if !range_contains(a, b, tol) {
        return Err(PsdError::NoPsdCompletion(
            "side block columns leave the corner block's range".into(),
        ));
    }
    let c0 = {
        let raw = b.transpose() * pseudoinverse(a, tol) * b;
        (&raw + raw.transpose()) * 0.5
    };
    if rank_a == r {
        let assembled = assemble_bordered(a, b, &c0);
        debug_assert_eq!(numerical_rank(&assembled, tol), r);
        return Ok(PsdCompletion::Unique {
            c: DenseMatrix::new(c0.clone())
                .map_err(|e| PsdError::InvalidBlocks(e.to_string()))?,
            assembled: DenseMatrix::new(assembled)
                .map_err(|e| PsdError::InvalidBlocks(e.to_string()))?,
        });
    }

    let rbar = r - rank_a;
    let nc = b.ncols();
    if rbar > nc {
        return Err(PsdError::NoPsdCompletion(format!(
            "target rank {r} is unreachable: corner rank {rank_a} plus {nc} free dimensions"
        )));
    }
    let (evals, _) = symmetric_eigen(a);
    let lmax = evals.first().copied().unwrap_or(0.0);
    let s = if lmax > 0.0 { 0.5 * lmax } else { 1.0 };
    let dirs = boost_directions(&c0, rbar, tol);
    if dirs.len() < rbar {
        return Err(PsdError::NoPsdCompletion(
            "could not construct enough independent boost directions".into(),
        ));
    }
    let mut e = DMatrix::zeros(nc, nc);
    for q in &dirs {
        e += q * q.transpose() * s;
    }
    let c1 = c0.clone();
    let c2 = &c0 + &e;
    let m1 = assemble_bordered(a, b, &c1);
    let m2 = assemble_bordered(a, b, &c2);
    let ok = is_psd(&m1, tol)
        && is_psd(&m2, tol)
        && numerical_rank(&m1, tol) == rank_a
        && numerical_rank(&m2, tol) == r;
    if !ok {
        return Err(PsdError::NoPsdCompletion(
            "rank-boosted completion failed its verification".into(),
        ));
    }
    Ok(PsdCompletion::Pair {
        first_c: DenseMatrix::new(c1).map_err(|e| PsdError::InvalidBlocks(e.to_string()))?,
        second_c: DenseMatrix::new(c2).map_err(|e| PsdError::InvalidBlocks(e.to_string()))?,
        first: DenseMatrix::new(m1).map_err(|e| PsdError::InvalidBlocks(e.to_string()))?,
        second: DenseMatrix::new(m2).map_err(|e| PsdError::InvalidBlocks(e.to_string()))?,
    })
}

// ---------------------------------------------------------------------------
// The 3x3 demonstration
// ---------------------------------------------------------------------------

/// Entries of the symmetric 3x3 demonstration matrix; the (1,3)/(3,1) entry
/// is the unknown. Defaults reproduce the headline instance whose unique
/// completion is x = -2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdDemoConfig {
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
    pub h23: f64,
    pub h33: f64,
    pub target_rank: usize,
}

impl Default for PsdDemoConfig {
    fn default() -> Self {
        PsdDemoConfig { h11: 5.0, h12: 4.0, h22: 16.0, h23: -8.0, h33: 4.0, target_rank: 2 }
    }
}

/// How the demonstration resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum DemoOutcome {
    /// The Schur scalar has a double root: exactly one PSD completion.
    UniqueRoot { x: f64 },
    /// Two distinct roots, hence two PSD completions of the target rank.
    TwoRoots { x1: f64, x2: f64 },
    /// The Schur scalar is negative everywhere: no PSD completion.
    NoCompletion,
    /// The target rank exceeds 2, so the scalar need not vanish and every
    /// value in an interval completes: never unique.
    SlackRank,
}

/// Full record of the demonstration: the Schur scalar as a quadratic
/// `q2 x^2 + q1 x + q0`, its roots, the overlap block rank, and the
/// assembled matrix at each root.
#[derive(Debug, Clone)]
pub struct PsdDemoReport {
    pub config: PsdDemoConfig,
    pub q2: f64,
    pub q1: f64,
    pub q0: f64,
    pub discriminant: f64,
    pub corner_rank: usize,
    pub target_rank: usize,
    pub outcome: DemoOutcome,
    /// (x, assembled matrix, numerical rank, is PSD) per admitted root.
    pub assembled: Vec<(f64, DenseMatrix, usize, bool)>,
    pub note: String,
}

fn demo_matrix(cfg: &PsdDemoConfig, x: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[cfg.h11, cfg.h12, x, cfg.h12, cfg.h22, cfg.h23, x, cfg.h23, cfg.h33],
    )
}

/// Run the 3x3 demonstration for arbitrary entries.
///
/// The two observed principal blocks overlap in the single entry `h22`, so
/// the corner rank is at most 1 while the target rank is 2: the engine's
/// corner rule would refuse to call this unique, yet the default data has
/// exactly one completion. The scalar Schur complement of the top-left block
/// is computed in closed form as a quadratic in the unknown.
pub fn psd_demo(cfg: &PsdDemoConfig, tol: &Tolerances) -> Result<PsdDemoReport, PsdError> {
    let det = cfg.h11 * cfg.h22 - cfg.h12 * cfg.h12;
    if cfg.h11 <= 0.0 || det <= 0.0 {
        return Err(PsdError::NoPsdCompletion(
            "the observed top-left block must be positive definite".into(),
        ));
    }
    let corner = DMatrix::from_row_slice(1, 1, &[cfg.h22]);
    let corner_rank = numerical_rank(&corner, tol);

    // Schur scalar of the top-left 2x2 block against [x; h23]
    let q2 = -cfg.h22 / det;
    let q1 = 2.0 * cfg.h12 * cfg.h23 / det;
    let q0 = cfg.h33 - cfg.h11 * cfg.h23 * cfg.h23 / det;
    let disc = q1 * q1 - 4.0 * q2 * q0;

    if cfg.target_rank >= 3 {
        let x = -q1 / (2.0 * q2);
        let h = demo_matrix(cfg, x);
        let rank = numerical_rank(&h, tol);
        let psd = is_psd(&h, tol);
        return Ok(PsdDemoReport {
            config: *cfg,
            q2,
            q1,
            q0,
            discriminant: disc,
            corner_rank,
            target_rank: cfg.target_rank,
            outcome: DemoOutcome::SlackRank,
            assembled: vec![(x, DenseMatrix::new(h).unwrap(), rank, psd)],
            note: format!(
                "not unique at rank {}: the Schur scalar may stay positive, so an \
                 interval of values completes",
                cfg.target_rank
            ),
        });
    }
    if cfg.target_rank < 2 {
        return Err(PsdError::RankExcess { actual: 2, target: cfg.target_rank });
    }

    let scale = q2.abs().max(q1.abs()).max(q0.abs()).max(1.0);
    let (outcome, roots, note) = if disc.abs() <= 1e-9 * scale * scale {
        let x = -q1 / (2.0 * q2);
        (
            DemoOutcome::UniqueRoot { x },
            vec![x],
            format!(
                "the Schur scalar is a negative perfect square with double root \
                 {x:.6}: exactly one completion despite the rank-1 overlap"
            ),
        )
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let x1 = (-q1 - sq) / (2.0 * q2);
        let x2 = (-q1 + sq) / (2.0 * q2);
        (
            DemoOutcome::TwoRoots { x1, x2 },
            vec![x1, x2],
            format!("two roots {x1:.6} and {x2:.6}: two PSD completions of rank 2"),
        )
    } else {
        (
            DemoOutcome::NoCompletion,
            vec![],
            "the Schur scalar is negative for every value: no PSD completion".into(),
        )
    };

    let assembled = roots
        .into_iter()
        .map(|x| {
            let h = demo_matrix(cfg, x);
            let rank = numerical_rank(&h, tol);
            let psd = is_psd(&h, tol);
            (x, DenseMatrix::new(h).unwrap(), rank, psd)
        })
        .collect();
    Ok(PsdDemoReport {
        config: *cfg,
        q2,
        q1,
        q0,
        discriminant: disc,
        corner_rank,
        target_rank: cfg.target_rank,
        outcome,
        assembled,
        note,
    })
}

/// The default demonstration: corner rank 1 below target rank 2, unique
/// completion x = -2 regardless.
pub fn psd_counterexample(tol: &Tolerances) -> PsdDemoReport {
    psd_demo(&PsdDemoConfig::default(), tol).expect("default demonstration data is valid")
}
