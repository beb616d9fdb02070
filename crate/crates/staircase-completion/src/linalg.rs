//! Rank-revealing linear algebra on dense f64 matrices.
//!
//! Everything rank-related in this crate funnels through [`numerical_rank`],
//! [`pseudoinverse`] and [`range_contains`] so that a single cutoff convention
//! applies: a singular value counts as nonzero when it exceeds
//! `rank_rel_tol * max(m, n) * sigma_max`.
//!
//! Decompositions are computed by classic Jacobi iterations (one-sided for
//! the SVD, cyclic two-sided for symmetric eigenvalues) instead of the
//! container library's solvers, which returned inconsistent factorizations
//! on some small well-conditioned inputs. The matrices handled here are small
//! and dense, where Jacobi is both simple and highly accurate.

use nalgebra::DMatrix;
use thiserror::Error;

/// Numerical thresholds shared across the crate.
///
/// `rank_rel_tol` scales the SVD cutoff for rank decisions, `range_rel_tol`
/// bounds the relative residual in range-inclusion tests, and `match_abs_tol`
/// bounds the absolute deviation allowed on observed entries when a candidate
/// completion is verified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rank_rel_tol: f64,
    pub range_rel_tol: f64,
    pub match_abs_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_rel_tol: 1e-9,
            range_rel_tol: 1e-8,
            match_abs_tol: 1e-8,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("matrix must have positive dimensions, got {0}x{1}")]
    EmptyDimensions(usize, usize),
    #[error("row {0} has {1} entries, expected {2}")]
    RaggedRows(usize, usize, usize),
    #[error("non-finite entry at row {0}, column {1}")]
    NonFinite(usize, usize),
}

/// Dense real matrix with validated contents: positive dimensions, all
/// entries finite. The inner [`DMatrix`] is reachable through [`Self::inner`]
/// for interop with nalgebra.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix(pub(crate) DMatrix<f64>);

impl DenseMatrix {
    pub fn new(inner: DMatrix<f64>) -> Result<Self, MatrixError> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(MatrixError::EmptyDimensions(inner.nrows(), inner.ncols()));
        }
        for j in 0..inner.ncols() {
            for i in 0..inner.nrows() {
                if !inner[(i, j)].is_finite() {
                    return Err(MatrixError::NonFinite(i, j));
                }
            }
        }
        Ok(DenseMatrix(inner))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatrixError::EmptyDimensions(rows.len(), 0));
        }
        let ncols = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(MatrixError::RaggedRows(i, row.len(), ncols));
            }
        }
        let m = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Self::new(m)
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn inner(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl std::fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Thin SVD `a = u * diag(sigma) * v^T` with `sigma` sorted descending.
/// `u` is m x k and `v` is n x k for k = min(m, n).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

// One-sided Jacobi on the columns of w (requires nrows >= ncols): rotate
// column pairs until mutually orthogonal, so w -> u * diag(sigma) and the
// accumulated rotations form v.
fn jacobi_tall(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = 1e-15;
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    alpha += w[(i, p)] * w[(i, p)];
                    beta += w[(i, q)] * w[(i, q)];
                    gamma += w[(i, p)] * w[(i, q)];
                }
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());
    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut vs = DMatrix::<f64>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > 0.0 {
            for i in 0..m {
                u[(i, dst)] = w[(i, src)] / s;
            }
        }
        for i in 0..n {
            vs[(i, dst)] = v[(i, src)];
        }
    }
    Svd { u, sigma, v: vs }
}

/// Jacobi SVD of `a`, valid for any shape.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Svd {
            u: DMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(n, 0),
        };
    }
    if m >= n {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose());
        Svd { u: t.v, sigma: t.sigma, v: t.u }
    }
}

/// Eigenvalues and orthonormal eigenvectors of a symmetric matrix by the
/// cyclic Jacobi rotation method. Eigenvalues are sorted descending.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen needs a square matrix");
    let mut w = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = 1e-15;
    let max_sweeps = 64;
    let scale = w.norm().max(f64::MIN_POSITIVE);
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq.abs() <= tol * scale {
                    continue;
                }
                rotated = true;
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (wip, wiq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * wip - s * wiq;
                    w[(i, q)] = s * wip + c * wiq;
                }
                for j in 0..n {
                    let (wpj, wqj) = (w[(p, j)], w[(q, j)]);
                    w[(p, j)] = c * wpj - s * wqj;
                    w[(q, j)] = s * wpj + c * wqj;
                }
                for i in 0..n {
                    let (vip, viq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| w[(y, y)].partial_cmp(&w[(x, x)]).unwrap());
    let evals: Vec<f64> = order.iter().map(|&j| w[(j, j)]).collect();
    let mut evecs = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            evecs[(i, dst)] = v[(i, src)];
        }
    }
    (evals, evecs)
}

/// Absolute cutoff below which a singular value of `a` is treated as zero.
pub fn rank_cutoff(a: &DMatrix<f64>, sigma_max: f64, tol: &Tolerances) -> f64 {
    tol.rank_rel_tol * a.nrows().max(a.ncols()) as f64 * sigma_max
}

fn sigma_max(s: &Svd) -> f64 {
    s.sigma.first().copied().unwrap_or(0.0)
}

/// Rank of `a`, counting singular values above the shared cutoff.
pub fn numerical_rank(a: &DMatrix<f64>, tol: &Tolerances) -> usize {
    numerical_rank_scaled(a, 0.0, tol)
}

/// Rank of `a` judged against an outside reference scale, for blocks whose
/// entries should vanish relative to a larger parent matrix. The cutoff uses
/// `max(sigma_max(a), reference)`, so a block of pure roundoff noise reports
/// rank 0 instead of rank 1.
pub fn numerical_rank_scaled(a: &DMatrix<f64>, reference: f64, tol: &Tolerances) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = svd(a);
    let smax = sigma_max(&s).max(reference);
    if smax == 0.0 {
        return 0;
    }
    let cut = rank_cutoff(a, smax, tol);
    s.sigma.iter().filter(|&&x| x > cut).count()
}

/// Moore-Penrose pseudoinverse, inverting exactly the singular values that
/// [`numerical_rank`] counts.
pub fn pseudoinverse(a: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let s = svd(a);
    let smax = sigma_max(&s);
    if smax == 0.0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let cut = rank_cutoff(a, smax, tol);
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (k, &sk) in s.sigma.iter().enumerate() {
        if sk > cut {
            // out += v_k u_k^T / sigma_k
            let vk = s.v.column(k);
            let uk = s.u.column(k);
            for j in 0..a.nrows() {
                for i in 0..a.ncols() {
                    out[(i, j)] += vk[i] * uk[j] / sk;
                }
            }
        }
    }
    out
}

/// Ratio of the largest to the smallest singular value (infinite when the
/// smallest vanishes). Conditioning gate for generated pivot blocks.
pub fn spectral_cond(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 1.0;
    }
    let s = svd(a);
    let smax = sigma_max(&s);
    let smin = s.sigma.last().copied().unwrap_or(0.0);
    if smin <= 0.0 {
        return f64::INFINITY;
    }
    smax / smin
}

/// True when every column of `b` lies in the column space of `a`, judged by
/// the relative residual of the least-squares projection.
pub fn range_contains(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: &Tolerances) -> bool {
    assert_eq!(a.nrows(), b.nrows(), "range test needs matching row counts");
    if b.ncols() == 0 {
        return true;
    }
    let proj = a * pseudoinverse(a, tol) * b;
    let resid = (b - proj).norm();
    resid <= tol.range_rel_tol * b.norm().max(1.0)
}

/// Orthonormal columns spanning the column space of `a`.
pub fn range_basis(a: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let s = svd(a);
    let smax = sigma_max(&s);
    if smax == 0.0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let cut = rank_cutoff(a, smax, tol);
    let keep: Vec<usize> = (0..s.sigma.len()).filter(|&k| s.sigma[k] > cut).collect();
    s.u.select_columns(&keep)
}

/// Orthonormal columns spanning the kernel of `a` (all x with a*x = 0).
///
/// Built as the orthogonal complement of the row space, which also covers the
/// wide case where the thin SVD carries no kernel vectors.
pub fn null_space(a: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let row_basis = range_basis(&a.transpose(), tol);
    if row_basis.ncols() == n {
        return DMatrix::zeros(n, 0);
    }
    let proj = DMatrix::identity(n, n) - &row_basis * row_basis.transpose();
    // projector spectrum is {0, 1}, so any mid cutoff separates cleanly
    let s = svd(&proj);
    let keep: Vec<usize> = (0..s.sigma.len()).filter(|&k| s.sigma[k] > 0.5).collect();
    s.u.select_columns(&keep)
}

/// Symmetric positive semidefiniteness, with symmetry itself checked first.
pub fn is_psd(a: &DMatrix<f64>, tol: &Tolerances) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    if a.nrows() == 0 {
        return true;
    }
    let asym = (a - a.transpose()).norm();
    if asym > tol.match_abs_tol * a.norm().max(1.0) {
        return false;
    }
    let (evals, _) = symmetric_eigen(a);
    let lmax = evals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let lmin = evals.iter().fold(f64::MAX, |m, &v| m.min(v));
    lmin >= -tol.rank_rel_tol * lmax.max(1.0)
}

#[derive(Debug, Error, PartialEq)]
pub enum SchurError {
    #[error("block shapes disagree: {0}")]
    Shape(String),
    #[error("columns of the top-right block leave the column space of the pivot")]
    ColumnRange,
    #[error("rows of the bottom-left block leave the row space of the pivot")]
    RowRange,
}

fn check_block_shapes(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> Result<(), SchurError> {
    if a.nrows() != b.nrows()
        || a.ncols() != c.ncols()
        || d.nrows() != c.nrows()
        || d.ncols() != b.ncols()
    {
        return Err(SchurError::Shape(format!(
            "a {}x{}, b {}x{}, c {}x{}, d {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    Ok(())
}

/// Generalized Schur complement `d - c a^+ b` of the pivot block `a` in
/// `[[a, b], [c, d]]`, guarded by the two range conditions under which the
/// rank identity `rank([[a,b],[c,d]]) = rank(a) + rank(d - c a^+ b)` holds.
pub fn schur_complement(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<DMatrix<f64>, SchurError> {
    check_block_shapes(a, b, c, d)?;
    if !range_contains(a, b, tol) {
        return Err(SchurError::ColumnRange);
    }
    if !range_contains(&a.transpose(), &c.transpose(), tol) {
        return Err(SchurError::RowRange);
    }
    Ok(schur_complement_unchecked(a, b, c, d, tol))
}

/// Same formula without the range guards. The rank identity may fail here.
pub fn schur_complement_unchecked(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    tol: &Tolerances,
) -> DMatrix<f64> {
    d - c * pseudoinverse(a, tol) * b
}

/// Index split describing a 2x2 block view `[[a, b], [c, d]]`: the first
/// `row_split` rows and `col_split` columns land in `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    pub row_split: usize,
    pub col_split: usize,
}

impl BlockPartition {
    /// Blocks `(a, b, c, d)` of `m` under this split.
    pub fn split(
        &self,
        m: &DMatrix<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        assert!(self.row_split <= m.nrows() && self.col_split <= m.ncols());
        let (rs, cs) = (self.row_split, self.col_split);
        let (rr, cr) = (m.nrows() - rs, m.ncols() - cs);
        (
            m.view((0, 0), (rs, cs)).into_owned(),
            m.view((0, cs), (rs, cr)).into_owned(),
            m.view((rs, 0), (rr, cs)).into_owned(),
            m.view((rs, cs), (rr, cr)).into_owned(),
        )
    }
}

/// Glue compatible blocks back into `[[a, b], [c, d]]`.
pub fn assemble_blocks(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    check_block_shapes(a, b, c, d).expect("assemble_blocks given mismatched shapes");
    let (m, n) = (a.nrows() + c.nrows(), a.ncols() + b.ncols());
    let mut out = DMatrix::zeros(m, n);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out.view_mut((a.nrows(), 0), c.shape()).copy_from(c);
    out.view_mut((a.nrows(), a.ncols()), d.shape()).copy_from(d);
    out
}
