//! Sampling patterns and staircase chains of bicliques.
//!
//! A biclique is a fully sampled rectangle (row set x column set). A chain of
//! bicliques is a staircase when consecutive members overlap in a nonempty
//! rectangle (the corner), non-consecutive members share no sampled cell, and
//! the row/column sets interleave in the alternating wide/tall shape checked
//! by [`validate_chain`]. Chains can be declared explicitly or recovered from
//! the raw sample positions by [`detect_chain`].

use std::collections::BTreeMap;

use thiserror::Error;

use crate::linalg::DenseMatrix;

/// Observed entries of a partially sampled m x n matrix plus the target rank.
/// Indices are 0-based internally; the file format is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledInstance {
    m: usize,
    n: usize,
    r: usize,
    samples: BTreeMap<(usize, usize), f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("matrix dimensions must be positive, got {0}x{1}")]
    BadDimensions(usize, usize),
    #[error("target rank {0} must be between 1 and min(m, n) = {1}")]
    BadRank(usize, usize),
    #[error("sample index ({0}, {1}) out of bounds for a {2}x{3} matrix")]
    IndexOutOfBounds(usize, usize, usize, usize),
    #[error("duplicate sample at ({0}, {1})")]
    DuplicateSample(usize, usize),
    #[error("non-finite sample value at ({0}, {1})")]
    NonFiniteValue(usize, usize),
}

impl SampledInstance {
    pub fn new(
        m: usize,
        n: usize,
        r: usize,
        samples: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, InstanceError> {
        if m == 0 || n == 0 {
            return Err(InstanceError::BadDimensions(m, n));
        }
        if r == 0 || r > m.min(n) {
            return Err(InstanceError::BadRank(r, m.min(n)));
        }
        let mut map = BTreeMap::new();
        for (i, j, v) in samples {
            if i >= m || j >= n {
                return Err(InstanceError::IndexOutOfBounds(i, j, m, n));
            }
            if !v.is_finite() {
                return Err(InstanceError::NonFiniteValue(i, j));
            }
            if map.insert((i, j), v).is_some() {
                return Err(InstanceError::DuplicateSample(i, j));
            }
        }
        Ok(SampledInstance { m, n, r, samples: map })
    }

    /// Every cell of `z` observed.
    pub fn fully_sampled(z: &DenseMatrix, r: usize) -> Result<Self, InstanceError> {
        let mut samples = Vec::with_capacity(z.nrows() * z.ncols());
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                samples.push((i, j, z.get(i, j)));
            }
        }
        Self::new(z.nrows(), z.ncols(), r, samples)
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn rank_target(&self) -> usize {
        self.r
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.samples.get(&(i, j)).copied()
    }

    pub fn is_sampled(&self, i: usize, j: usize) -> bool {
        self.samples.contains_key(&(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.samples.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    /// Samples restricted to a rectangle, as a dense block in the order of
    /// the given index lists. `None` if any requested cell is unobserved.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Option<DenseMatrix> {
        let mut data = nalgebra::DMatrix::zeros(rows.len(), cols.len());
        for (bi, &i) in rows.iter().enumerate() {
            for (bj, &j) in cols.iter().enumerate() {
                data[(bi, bj)] = self.value(i, j)?;
            }
        }
        DenseMatrix::new(data).ok()
    }
}

// sorted-vec set algebra shared by pattern and completion code

pub(crate) fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
    out
}

pub(crate) fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub(crate) fn diff_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect()
}

pub(crate) fn is_subset_sorted(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Fully sampled rectangle: every (row, col) pair in `rows x cols` observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Biclique {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum BicliqueError {
    #[error("biclique must have nonempty row and column sets")]
    Empty,
}

impl Biclique {
    pub fn new(mut rows: Vec<usize>, mut cols: Vec<usize>) -> Result<Self, BicliqueError> {
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        if rows.is_empty() || cols.is_empty() {
            return Err(BicliqueError::Empty);
        }
        Ok(Biclique { rows, cols })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn edge_count(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        self.rows.binary_search(&i).is_ok() && self.cols.binary_search(&j).is_ok()
    }
}

/// How much of the staircase definition to enforce.
///
/// `Strict` checks the full alternating chain shape (in either orientation)
/// plus disjointness of non-consecutive bicliques. `Lenient` only asks for
/// nonempty consecutive overlaps and exact coverage, for experimentation with
/// patterns near the boundary of the class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainMode {
    #[default]
    Strict,
    Lenient,
}

/// Which orientation satisfied the alternating shape conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    AsGiven,
    Transposed,
}

/// Chain certification failure. Indices are 0-based in the payload and
/// rendered 1-based in messages.
#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("chain must contain at least one biclique")]
    EmptyChain,
    #[error("biclique {} exceeds matrix bounds", .0 + 1)]
    OutOfBounds(usize),
    #[error("biclique {} contains unsampled cell ({}, {})", .0 + 1, .1 + 1, .2 + 1)]
    UnsampledCell(usize, usize, usize),
    #[error("sample at ({}, {}) is not covered by any biclique", .0 + 1, .1 + 1)]
    UncoveredSample(usize, usize),
    #[error("row {} is not covered by any biclique", .0 + 1)]
    UncoveredRow(usize),
    #[error("column {} is not covered by any biclique", .0 + 1)]
    UncoveredCol(usize),
    #[error("bicliques {} and {} have an empty corner", .0 + 1, .1 + 1)]
    EmptyCorner(usize, usize),
    #[error("non-consecutive bicliques {} and {} share sampled cells", .0 + 1, .1 + 1)]
    NonConsecutiveOverlap(usize, usize),
    #[error("row/column sets do not interleave in staircase shape (in either orientation)")]
    ShapeViolation,
}

/// Certified staircase chain over an instance, remembering the orientation
/// and a row/column permutation that lays the bands out contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseChain {
    bicliques: Vec<Biclique>,
    orientation: Orientation,
    mode: ChainMode,
    row_order: Vec<usize>,
    col_order: Vec<usize>,
}

impl StaircaseChain {
    pub fn bicliques(&self) -> &[Biclique] {
        &self.bicliques
    }

    pub fn len(&self) -> usize {
        self.bicliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bicliques.is_empty()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn mode(&self) -> ChainMode {
        self.mode
    }

    /// Row permutation grouping the bands in chain order.
    pub fn row_order(&self) -> &[usize] {
        &self.row_order
    }

    /// Column permutation grouping the bands in chain order.
    pub fn col_order(&self) -> &[usize] {
        &self.col_order
    }
}

/// Corner of two consecutive bicliques: their intersection rectangle with
/// the sampled values filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerBlock {
    pub index: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: DenseMatrix,
}

fn interleaving_ok(us: &[&[usize]], vs: &[&[usize]]) -> bool {
    let l = us.len();
    if l < 3 {
        return true;
    }
    // positions are 1-based in the parity rule, slices 0-based
    for i in 1..=(l - 2) {
        let (a, b, c) = (i - 1, i, i + 1);
        if i % 2 == 1 {
            if intersect_sorted(vs[a], vs[c]) != vs[b] {
                return false;
            }
            if !is_subset_sorted(us[a], us[b]) || !is_subset_sorted(us[c], us[b]) {
                return false;
            }
        } else {
            if intersect_sorted(us[a], us[c]) != us[b] {
                return false;
            }
            if !is_subset_sorted(vs[a], vs[b]) || !is_subset_sorted(vs[c], vs[b]) {
                return false;
            }
        }
    }
    true
}

fn band_permutation(total: usize, sets: Vec<&[usize]>) -> Vec<usize> {
    // sort indices by the first biclique that contains them, then by index,
    // so each band comes out contiguous in chain order
    let mut first = vec![usize::MAX; total];
    for (k, set) in sets.iter().enumerate() {
        for &x in set.iter() {
            if first[x] == usize::MAX {
                first[x] = k;
            }
        }
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by_key(|&x| (first[x], x));
    order
}

/// Certify that `chain` is a staircase cover of the samples of `inst`.
pub fn validate_chain(
    inst: &SampledInstance,
    chain: &[Biclique],
    mode: ChainMode,
) -> Result<StaircaseChain, ChainError> {
    if chain.is_empty() {
        return Err(ChainError::EmptyChain);
    }
    for (k, b) in chain.iter().enumerate() {
        if *b.rows().last().unwrap() >= inst.nrows() || *b.cols().last().unwrap() >= inst.ncols() {
            return Err(ChainError::OutOfBounds(k));
        }
        for &i in b.rows() {
            for &j in b.cols() {
                if !inst.is_sampled(i, j) {
                    return Err(ChainError::UnsampledCell(k, i, j));
                }
            }
        }
    }
    for (i, j, _) in inst.iter() {
        if !chain.iter().any(|b| b.contains_edge(i, j)) {
            return Err(ChainError::UncoveredSample(i, j));
        }
    }
    for i in 0..inst.nrows() {
        if !chain.iter().any(|b| b.rows().binary_search(&i).is_ok()) {
            return Err(ChainError::UncoveredRow(i));
        }
    }
    for j in 0..inst.ncols() {
        if !chain.iter().any(|b| b.cols().binary_search(&j).is_ok()) {
            return Err(ChainError::UncoveredCol(j));
        }
    }
    for w in 0..chain.len().saturating_sub(1) {
        let rows = intersect_sorted(chain[w].rows(), chain[w + 1].rows());
        let cols = intersect_sorted(chain[w].cols(), chain[w + 1].cols());
        if rows.is_empty() || cols.is_empty() {
            return Err(ChainError::EmptyCorner(w, w + 1));
        }
    }

    let mut orientation = Orientation::AsGiven;
    if mode == ChainMode::Strict {
        for a in 0..chain.len() {
            for b in (a + 2)..chain.len() {
                let rows = intersect_sorted(chain[a].rows(), chain[b].rows());
                let cols = intersect_sorted(chain[a].cols(), chain[b].cols());
                if !rows.is_empty() && !cols.is_empty() {
                    return Err(ChainError::NonConsecutiveOverlap(a, b));
                }
            }
        }
        let us: Vec<&[usize]> = chain.iter().map(|b| b.rows()).collect();
        let vs: Vec<&[usize]> = chain.iter().map(|b| b.cols()).collect();
        if interleaving_ok(&us, &vs) {
            orientation = Orientation::AsGiven;
        } else if interleaving_ok(&vs, &us) {
            orientation = Orientation::Transposed;
        } else {
            return Err(ChainError::ShapeViolation);
        }
    }

    let row_order = band_permutation(inst.nrows(), chain.iter().map(|b| b.rows()).collect());
    let col_order = band_permutation(inst.ncols(), chain.iter().map(|b| b.cols()).collect());
    Ok(StaircaseChain {
        bicliques: chain.to_vec(),
        orientation,
        mode,
        row_order,
        col_order,
    })
}

/// Outcome of failed detection. Absence of a found chain, not a proof that
/// none exists.
#[derive(Debug, Clone, PartialEq)]
pub struct NotStaircase {
    pub reason: String,
}

impl std::fmt::Display for NotStaircase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no staircase chain detected: {}", self.reason)
    }
}

fn row_support_intervals(
    inst: &SampledInstance,
    col_of: &[usize],
) -> Option<Vec<(usize, usize)>> {
    // per-row sampled column set must be a contiguous interval in the
    // current column order; returns (lo, hi) inclusive per row
    let mut supports: Vec<Vec<usize>> = vec![Vec::new(); inst.nrows()];
    for (i, j, _) in inst.iter() {
        supports[i].push(col_of[j]);
    }
    let mut out = Vec::with_capacity(inst.nrows());
    for sup in supports.iter_mut() {
        sup.sort_unstable();
        let (lo, hi) = (*sup.first().unwrap(), *sup.last().unwrap());
        if hi - lo + 1 != sup.len() {
            return None;
        }
        out.push((lo, hi));
    }
    Some(out)
}

fn candidates_from_intervals(
    intervals: &[(usize, usize)],
    col_at: &[usize],
) -> Vec<Biclique> {
    let mut distinct: Vec<(usize, usize)> = intervals.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    distinct
        .into_iter()
        .map(|(lo, hi)| {
            let rows: Vec<usize> = intervals
                .iter()
                .enumerate()
                .filter(|(_, &(a, b))| a <= lo && hi <= b)
                .map(|(i, _)| i)
                .collect();
            let cols: Vec<usize> = (lo..=hi).map(|p| col_at[p]).collect();
            Biclique::new(rows, cols).expect("interval candidates are nonempty")
        })
        .collect()
}

fn union_redundant(chain: &[Biclique], k: usize) -> bool {
    chain[k].rows().iter().all(|&i| {
        chain[k].cols().iter().all(|&j| {
            chain
                .iter()
                .enumerate()
                .any(|(w, b)| w != k && b.contains_edge(i, j))
        })
    })
}

/// Search for a staircase chain covering the samples of `inst`.
///
/// Heuristic: rows are grouped by their sampled column interval (after an
/// optional column reordering), each distinct interval spawns the maximal
/// biclique it supports, and the candidates are chained in interval order.
/// Bands covered by the union of the others are dropped one at a time if the
/// full candidate set does not certify.
pub fn detect_chain(inst: &SampledInstance, mode: ChainMode) -> Result<StaircaseChain, NotStaircase> {
    for i in 0..inst.nrows() {
        if !(0..inst.ncols()).any(|j| inst.is_sampled(i, j)) {
            return Err(NotStaircase { reason: format!("row {} has no samples", i + 1) });
        }
    }
    for j in 0..inst.ncols() {
        if !(0..inst.nrows()).any(|i| inst.is_sampled(i, j)) {
            return Err(NotStaircase { reason: format!("column {} has no samples", j + 1) });
        }
    }

    let identity: Vec<usize> = (0..inst.ncols()).collect();
    let mut attempts: Vec<Vec<usize>> = vec![identity.clone()];
    if row_support_intervals(inst, &identity).is_none() {
        // reorder columns by the row span they touch and retry
        let mut span = vec![(usize::MAX, 0usize); inst.ncols()];
        for (i, j, _) in inst.iter() {
            span[j].0 = span[j].0.min(i);
            span[j].1 = span[j].1.max(i);
        }
        let mut col_at: Vec<usize> = (0..inst.ncols()).collect();
        col_at.sort_by_key(|&j| span[j]);
        attempts.push(col_at);
    }

    let mut last_reason = String::from("per-row column supports are not intervals");
    for col_at in attempts {
        // col_of[j] = position of column j in this ordering
        let mut col_of = vec![0usize; inst.ncols()];
        for (pos, &j) in col_at.iter().enumerate() {
            col_of[j] = pos;
        }
        let Some(intervals) = row_support_intervals(inst, &col_of) else {
            continue;
        };
        let mut chain = candidates_from_intervals(&intervals, &col_at);
        loop {
            match validate_chain(inst, &chain, mode) {
                Ok(cert) => return Ok(cert),
                Err(e) => last_reason = e.to_string(),
            }
            if chain.len() <= 1 {
                break;
            }
            // drop the smallest band that the rest already covers
            let mut drop: Option<(usize, usize)> = None;
            for k in 0..chain.len() {
                if union_redundant(&chain, k) {
                    let size = chain[k].edge_count();
                    if drop.map_or(true, |(_, s)| size < s) {
                        drop = Some((k, size));
                    }
                }
            }
            match drop {
                Some((k, _)) => {
                    chain.remove(k);
                }
                None => break,
            }
        }
    }
    Err(NotStaircase { reason: last_reason })
}

/// Corner blocks of consecutive biclique pairs, in chain order.
pub fn corner_blocks(chain: &StaircaseChain, inst: &SampledInstance) -> Vec<CornerBlock> {
    let bs = chain.bicliques();
    (0..bs.len().saturating_sub(1))
        .map(|w| {
            let rows = intersect_sorted(bs[w].rows(), bs[w + 1].rows());
            let cols = intersect_sorted(bs[w].cols(), bs[w + 1].cols());
            let values = inst
                .block(&rows, &cols)
                .expect("certified corners are fully sampled");
            CornerBlock { index: w, rows, cols, values }
        })
        .collect()
}
