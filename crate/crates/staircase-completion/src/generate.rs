//! Seeded instance generators: staircase masks over rank-r ground truths,
//! deficient-corner variants in every witness family, bordered PSD
//! instances, and pivot-consistent block matrices for rank-additivity
//! checks. Every generator is deterministic under its seed and self-checks
//! the structural properties it promises (chain validity, corner ranks).

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{numerical_rank, spectral_cond, DenseMatrix, Tolerances};
use crate::pattern::{validate_chain, Biclique, ChainMode, SampledInstance};
use crate::psd::PsdInstance;

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("infeasible shape: {0}")]
    Shape(String),
    #[error("generation failed after retries: {0}")]
    Degenerate(String),
}

/// Parameters for the plain staircase family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaircaseSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// Number of bicliques in the emitted chain.
    pub l: usize,
    pub seed: u64,
    /// When set, the 1-based corner at this position is forced to rank r-1
    /// (a corner sharing its row block may drop with it).
    pub deficient_corner: Option<usize>,
}

/// A generated instance: the sampled data, the explicit biclique chain, and
/// the ground truth it was masked from.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: SampledInstance,
    pub chain: Vec<Biclique>,
    pub truth: DenseMatrix,
}

/// Which structural defect a two-block instance carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeficiencyKind {
    /// Row factor of the overlap drops rank: the corner's column space is
    /// too small for the blocks below it.
    RowDrop,
    /// Column factor drops rank: the corner's row space is too small.
    ColDrop,
    /// Both factors drop in aligned fashion: the corner stays maximally
    /// consistent with its flanks and only the far block floats.
    BothDrop,
    /// The overlap rectangle itself is thinner than the target rank.
    ThinOverlap,
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random factor with exact numerical rank `r` and moderate conditioning.
fn factor(rng: &mut ChaCha8Rng, rows: usize, r: usize, tol: &Tolerances) -> DMatrix<f64> {
    loop {
        let x = DMatrix::from_fn(rows, r, |_, _| rng.random_range(-2.0..2.0));
        if numerical_rank(&x, tol) == r && spectral_cond(&x) < 100.0 {
            return x;
        }
    }
}

/// Project the given rows of a factor onto a random rho-dimensional
/// subspace of its column space, verifying the block lands at rank rho.
fn drop_rows_to_rank(
    x: &mut DMatrix<f64>,
    rows: &[usize],
    rho: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) {
    let r = x.ncols();
    loop {
        let raw = DMatrix::from_fn(r, rho, |_, _| rng.random_range(-1.0..1.0));
        let q = raw.qr().q();
        if q.ncols() < rho {
            continue;
        }
        let proj = &q * q.transpose();
        let mut block = DMatrix::zeros(rows.len(), r);
        for (k, &i) in rows.iter().enumerate() {
            block.set_row(k, &x.row(i));
        }
        let dropped = block * proj;
        if numerical_rank(&dropped, tol) != rho {
            continue;
        }
        for (k, &i) in rows.iter().enumerate() {
            x.set_row(i, &dropped.row(k));
        }
        return;
    }
}

/// Split `total` into `parts` contiguous block sizes, each at least
/// `min_each`, distributing the slack at random.
fn split_sizes(
    rng: &mut ChaCha8Rng,
    total: usize,
    parts: usize,
    min_each: usize,
) -> Option<Vec<usize>> {
    if parts == 0 || parts * min_each > total {
        return None;
    }
    let mut sizes = vec![min_each; parts];
    for _ in 0..(total - parts * min_each) {
        let k = rng.random_range(0..parts);
        sizes[k] += 1;
    }
    Some(sizes)
}

fn blocks_from_sizes(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in sizes {
        out.push((start..start + s).collect());
        start += s;
    }
    out
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn instance_from_rects(
    truth: &DMatrix<f64>,
    rects: &[(Vec<usize>, Vec<usize>)],
    r: usize,
) -> SampledInstance {
    let mut cells = std::collections::BTreeSet::new();
    for (rows, cols) in rects {
        for &i in rows {
            for &j in cols {
                cells.insert((i, j));
            }
        }
    }
    let samples: Vec<(usize, usize, f64)> =
        cells.into_iter().map(|(i, j)| (i, j, truth[(i, j)])).collect();
    SampledInstance::new(truth.nrows(), truth.ncols(), r, samples)
        .expect("generated samples are in range and unique")
}

fn rect_rank(truth: &DMatrix<f64>, rows: &[usize], cols: &[usize], tol: &Tolerances) -> usize {
    let block = DMatrix::from_fn(rows.len(), cols.len(), |i, j| truth[(rows[i], cols[j])]);
    numerical_rank(&block, tol)
}

fn checked(
    truth: DMatrix<f64>,
    rects: Vec<(Vec<usize>, Vec<usize>)>,
    chain: Vec<Biclique>,
    r: usize,
) -> Result<Generated, GenerateError> {
    let instance = instance_from_rects(&truth, &rects, r);
    validate_chain(&instance, &chain, ChainMode::Strict)
        .map_err(|e| GenerateError::Degenerate(format!("emitted chain failed validation: {e}")))?;
    Ok(Generated {
        instance,
        chain,
        truth: DenseMatrix::new(truth).expect("truth is a valid dense matrix"),
    })
}

/// Generate a staircase instance with `l` bands whose corners all have rank
/// r, or rank r-1 at the requested corner.
///
/// The chain alternates primary rectangles (disjoint row blocks, overlapping
/// column intervals) with junction bands spanning both neighbouring row
/// blocks over the column overlap. For even `l` a trailing junction covers
/// one extra row block over the tail of the last column interval.
pub fn staircase(spec: &StaircaseSpec) -> Result<Generated, GenerateError> {
    let StaircaseSpec { m, n, r, l, seed, deficient_corner } = *spec;
    let tol = Tolerances::default();
    if r == 0 || r > m.min(n) {
        return Err(GenerateError::Shape(format!("rank {r} out of range for {m}x{n}")));
    }
    if l == 0 {
        return Err(GenerateError::Shape("need at least one band".into()));
    }
    if let Some(c) = deficient_corner {
        if l < 2 || c == 0 || c > l - 1 {
            return Err(GenerateError::Shape(format!(
                "corner {c} does not exist in a chain of {l} bands"
            )));
        }
        if r < 2 {
            return Err(GenerateError::Shape(
                "cannot force a deficient corner at rank 1".into(),
            ));
        }
    }

    for attempt in 0..16 {
        let mut rng = rng_for(seed.wrapping_add(attempt * 0x9e37_79b9));
        let even = l % 2 == 0;
        let k = if even { l / 2 } else { (l + 1) / 2 };
        let row_blocks = if even { k + 1 } else { k };
        let overlaps = k - 1;
        let tail = if even { r } else { 0 };
        if m < row_blocks * r.max(1) {
            return Err(GenerateError::Shape(format!(
                "{m} rows cannot host {row_blocks} blocks of at least {r}"
            )));
        }
        if n < overlaps * r + tail + 1 {
            return Err(GenerateError::Shape(format!(
                "{n} columns cannot host {overlaps} overlaps of width {r}"
            )));
        }

        let row_sizes = split_sizes(&mut rng, m, row_blocks, r.max(1))
            .ok_or_else(|| GenerateError::Shape("row partition infeasible".into()))?;
        let rows = blocks_from_sizes(&row_sizes);

        // column layout: gap w gap w ... w gap, tail carved from the last gap
        let mut widths = vec![r; overlaps];
        let mut spare = n - overlaps * r - tail;
        for w in widths.iter_mut() {
            if spare > 0 && rng.random_range(0..3) == 0 {
                *w += 1;
                spare -= 1;
            }
        }
        let mut gaps = vec![0usize; k];
        gaps[k - 1] = tail;
        for _ in 0..spare {
            let g = rng.random_range(0..k);
            gaps[g] += 1;
        }
        let mut wstart = Vec::with_capacity(overlaps);
        let mut pos = 0;
        for i in 0..overlaps {
            pos += gaps[i];
            wstart.push(pos);
            pos += widths[i];
        }
        pos += gaps[k - 1];
        debug_assert_eq!(pos, n);

        let col_interval = |kk: usize| -> Vec<usize> {
            // 0-based primary index
            let lo = if kk == 0 { 0 } else { wstart[kk - 1] };
            let hi = if kk == k - 1 { n } else { wstart[kk] + widths[kk] };
            (lo..hi).collect()
        };
        let overlap_cols = |i: usize| -> Vec<usize> { (wstart[i]..wstart[i] + widths[i]).collect() };
        let tail_cols: Vec<usize> = (n - tail.max(1)..n).collect();

        // ground truth
        let mut x = factor(&mut rng, m, r, &tol);
        let y = factor(&mut rng, n, r, &tol);
        let drop_block = deficient_corner.map(|c| c / 2); // 0-based row block index
        if let Some(bk) = drop_block {
            drop_rows_to_rank(&mut x, &rows[bk], r - 1, &mut rng, &tol);
        }
        let truth = &x * y.transpose();

        // bands and corners
        let mut rects: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for kk in 0..k {
            rects.push((rows[kk].clone(), col_interval(kk)));
            if kk + 1 < k {
                rects.push((union(&rows[kk], &rows[kk + 1]), overlap_cols(kk)));
            }
        }
        if even {
            rects.push((union(&rows[k - 1], &rows[k]), tail_cols.clone()));
        }

        // self-check every corner rank before emitting
        let mut ok = true;
        for c in 1..l {
            let (b0, b1) = (&rects[c - 1], &rects[c]);
            let crows: Vec<usize> =
                b0.0.iter().filter(|i| b1.0.binary_search(i).is_ok()).copied().collect();
            let ccols: Vec<usize> =
                b0.1.iter().filter(|j| b1.1.binary_search(j).is_ok()).copied().collect();
            let got = rect_rank(&truth, &crows, &ccols, &tol);
            let want = match drop_block {
                Some(bk) if crows == rows[bk] => r - 1,
                _ => r,
            };
            if got != want {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }

        let chain: Vec<Biclique> = rects
            .iter()
            .map(|(rr, cc)| Biclique::new(rr.clone(), cc.clone()).expect("nonempty band"))
            .collect();
        return checked(truth, rects, chain, r);
    }
    Err(GenerateError::Degenerate(
        "could not realize the requested corner ranks generically".into(),
    ))
}

/// The L-shaped two-band pattern: a full-width top band and a full-height
/// left band whose corner block carries the requested defect, leaving one
/// unknown block in the far quadrant.
pub fn two_block(
    m: usize,
    n: usize,
    r: usize,
    kind: DeficiencyKind,
    seed: u64,
) -> Result<Generated, GenerateError> {
    let tol = Tolerances::default();
    if r < 2 {
        return Err(GenerateError::Shape("deficient families need rank at least 2".into()));
    }
    let top_min = match kind {
        DeficiencyKind::ThinOverlap => r - 1,
        _ => r,
    };
    if m < top_min + 1 || n < r + 1 {
        return Err(GenerateError::Shape(format!(
            "{m}x{n} too small for a corner of {top_min}x{r} with a free quadrant"
        )));
    }
    for attempt in 0..16 {
        let mut rng = rng_for(seed.wrapping_add(attempt * 0x9e37_79b9));
        let ua = match kind {
            DeficiencyKind::ThinOverlap => r - 1,
            _ => top_min + rng.random_range(0..=(m - top_min - 1).min(2)),
        };
        let va = r + rng.random_range(0..=(n - r - 1).min(2));
        let top_rows: Vec<usize> = (0..ua).collect();
        let left_cols: Vec<usize> = (0..va).collect();
        let all_rows: Vec<usize> = (0..m).collect();
        let all_cols: Vec<usize> = (0..n).collect();

        let mut x = factor(&mut rng, m, r, &tol);
        let mut y = factor(&mut rng, n, r, &tol);
        match kind {
            DeficiencyKind::RowDrop => drop_rows_to_rank(&mut x, &top_rows, r - 1, &mut rng, &tol),
            DeficiencyKind::ColDrop => drop_rows_to_rank(&mut y, &left_cols, r - 1, &mut rng, &tol),
            DeficiencyKind::BothDrop => {
                drop_rows_to_rank(&mut x, &top_rows, r - 1, &mut rng, &tol);
                drop_rows_to_rank(&mut y, &left_cols, r - 1, &mut rng, &tol);
            }
            DeficiencyKind::ThinOverlap => {}
        }
        let truth = &x * y.transpose();
        if rect_rank(&truth, &top_rows, &left_cols, &tol) != r - 1 {
            continue;
        }
        let rects = vec![
            (top_rows.clone(), all_cols.clone()),
            (all_rows.clone(), left_cols.clone()),
        ];
        let chain = vec![
            Biclique::new(top_rows, all_cols).expect("nonempty band"),
            Biclique::new(all_rows, left_cols).expect("nonempty band"),
        ];
        return checked(truth, rects, chain, r);
    }
    Err(GenerateError::Degenerate("corner refused to land at rank r-1".into()))
}

/// Middle band spanning all columns with a rank-deficient row factor: both
/// corners drop below the target rank together.
pub fn three_block(m: usize, n: usize, r: usize, seed: u64) -> Result<Generated, GenerateError> {
    let tol = Tolerances::default();
    if r < 2 {
        return Err(GenerateError::Shape("deficient families need rank at least 2".into()));
    }
    if m < r + 2 || n < 2 * r {
        return Err(GenerateError::Shape(format!("{m}x{n} too small for the three-band family")));
    }
    for attempt in 0..16 {
        let mut rng = rng_for(seed.wrapping_add(attempt * 0x9e37_79b9));
        let mid_sz = r + rng.random_range(0..=(m - r - 2).min(2));
        let t_sz = 1 + rng.random_range(0..(m - mid_sz - 1));
        let rows_t: Vec<usize> = (0..t_sz).collect();
        let rows_m: Vec<usize> = (t_sz..t_sz + mid_sz).collect();
        let rows_b: Vec<usize> = (t_sz + mid_sz..m).collect();
        let left_sz = r + rng.random_range(0..=(n - 2 * r).min(3));
        let cols_l: Vec<usize> = (0..left_sz).collect();
        let cols_r: Vec<usize> = (left_sz..n).collect();

        let mut x = factor(&mut rng, m, r, &tol);
        let y = factor(&mut rng, n, r, &tol);
        drop_rows_to_rank(&mut x, &rows_m, r - 1, &mut rng, &tol);
        let truth = &x * y.transpose();
        if rect_rank(&truth, &rows_m, &cols_l, &tol) != r - 1
            || rect_rank(&truth, &rows_m, &cols_r, &tol) != r - 1
        {
            continue;
        }
        let all_cols: Vec<usize> = (0..n).collect();
        let rects = vec![
            (union(&rows_m, &rows_b), cols_l.clone()),
            (rows_m.clone(), all_cols.clone()),
            (union(&rows_t, &rows_m), cols_r.clone()),
        ];
        let chain = vec![
            Biclique::new(union(&rows_m, &rows_b), cols_l).expect("nonempty band"),
            Biclique::new(rows_m.clone(), all_cols).expect("nonempty band"),
            Biclique::new(union(&rows_t, &rows_m), cols_r).expect("nonempty band"),
        ];
        return checked(truth, rects, chain, r);
    }
    Err(GenerateError::Degenerate("middle-band corners refused rank r-1".into()))
}

/// Four-band cross: both the middle row factor and the center column factor
/// drop rank, so the central corner is deficient with its flanking stacks
/// staying inside its ranges.
pub fn cross(m: usize, n: usize, r: usize, seed: u64) -> Result<Generated, GenerateError> {
    let tol = Tolerances::default();
    if r < 2 {
        return Err(GenerateError::Shape("deficient families need rank at least 2".into()));
    }
    if m < 2 * r + 1 || n < 2 * r + 1 {
        return Err(GenerateError::Shape(format!("{m}x{n} too small for the cross family")));
    }
    for attempt in 0..16 {
        let mut rng = rng_for(seed.wrapping_add(attempt * 0x9e37_79b9));
        let mid_sz = r + rng.random_range(0..=(m - 2 * r - 1).min(2));
        // the bottom block carries the spanning stack below the center, so
        // it must be able to reach the full target rank on its own
        let t_sz = 1 + rng.random_range(0..=(m - mid_sz - r - 1));
        let rows_t: Vec<usize> = (0..t_sz).collect();
        let rows_m: Vec<usize> = (t_sz..t_sz + mid_sz).collect();
        let rows_b: Vec<usize> = (t_sz + mid_sz..m).collect();

        let c_sz = r + rng.random_range(0..=(n - 2 * r - 1).min(2));
        // c_sz <= n - r - 1, so at least r + 1 columns remain for L and R
        let l_room = n - c_sz - 1 - r;
        let l_sz = r + rng.random_range(0..=l_room.min(2));
        let cols_l: Vec<usize> = (0..l_sz).collect();
        let cols_c: Vec<usize> = (l_sz..l_sz + c_sz).collect();
        let cols_r: Vec<usize> = (l_sz + c_sz..n).collect();

        let mut x = factor(&mut rng, m, r, &tol);
        let mut y = factor(&mut rng, n, r, &tol);
        drop_rows_to_rank(&mut x, &rows_m, r - 1, &mut rng, &tol);
        drop_rows_to_rank(&mut y, &cols_c, r - 1, &mut rng, &tol);
        let truth = &x * y.transpose();
        // the central corner must land exactly at r-1 so its ranges match
        // the flanking stacks
        if rect_rank(&truth, &rows_m, &cols_c, &tol) != r - 1
            || rect_rank(&truth, &rows_m, &cols_l, &tol) != r - 1
            || rect_rank(&truth, &rows_b, &cols_c, &tol) != r - 1
        {
            continue;
        }
        let rects = vec![
            (union(&rows_t, &rows_m), cols_l.clone()),
            (rows_m.clone(), union(&cols_l, &cols_c)),
            (union(&rows_m, &rows_b), cols_c.clone()),
            (rows_b.clone(), union(&cols_c, &cols_r)),
        ];
        let chain: Vec<Biclique> = rects
            .iter()
            .map(|(rr, cc)| Biclique::new(rr.clone(), cc.clone()).expect("nonempty band"))
            .collect();
        return checked(truth, rects, chain, r);
    }
    Err(GenerateError::Degenerate("cross center refused rank r-1".into()))
}

/// Random bordered PSD instance from a Gram factor, optionally with the
/// corner block projected one rank short. Returns the instance and the true
/// completion block.
pub fn bordered_psd(
    na: usize,
    nc: usize,
    r: usize,
    deficient: bool,
    seed: u64,
) -> Result<(PsdInstance, DenseMatrix), GenerateError> {
    let tol = Tolerances::default();
    if na < r || nc == 0 || r == 0 {
        return Err(GenerateError::Shape(format!(
            "corner {na}, border {nc} cannot carry rank {r}"
        )));
    }
    if deficient && r < 2 {
        return Err(GenerateError::Shape("deficient corner needs rank at least 2".into()));
    }
    let mut rng = rng_for(seed);
    for _ in 0..32 {
        let mut w = factor(&mut rng, na + nc, r, &tol);
        if deficient {
            let rows: Vec<usize> = (0..na).collect();
            drop_rows_to_rank(&mut w, &rows, r - 1, &mut rng, &tol);
        }
        let g = &w * w.transpose();
        let a = g.view((0, 0), (na, na)).into_owned();
        let want = if deficient { r - 1 } else { r };
        if numerical_rank(&a, &tol) != want {
            continue;
        }
        let b = g.view((0, na), (na, nc)).into_owned();
        let c = g.view((na, na), (nc, nc)).into_owned();
        let inst = PsdInstance::new(
            DenseMatrix::new(a).expect("finite"),
            DenseMatrix::new(b).expect("finite"),
            r,
        )
        .expect("Gram blocks form a valid instance");
        return Ok((inst, DenseMatrix::new(c).expect("finite")));
    }
    Err(GenerateError::Degenerate("corner rank never landed as requested".into()))
}

/// A block matrix whose off-pivot blocks are built inside the pivot's
/// ranges, so the pivot complement is exactly a planted matrix of known
/// rank.
#[derive(Debug, Clone)]
pub struct ConsistentBlock {
    pub matrix: DenseMatrix,
    pub pivot_rows: usize,
    pub pivot_cols: usize,
    pub pivot_rank: usize,
    pub planted_rank: usize,
    pub pivot_cond: f64,
}

/// Build `[[A, A G], [H A, H A G + S]]` with `rank(A) = ra` and a planted
/// `S` of rank `rs`: the generalized pivot complement equals `S` exactly and
/// the whole matrix has rank `ra + rs`.
pub fn consistent_block(
    na_r: usize,
    na_c: usize,
    nd_r: usize,
    nd_c: usize,
    ra: usize,
    rs: usize,
    seed: u64,
) -> Result<ConsistentBlock, GenerateError> {
    let tol = Tolerances::default();
    if ra > na_r.min(na_c) || rs > nd_r.min(nd_c) {
        return Err(GenerateError::Shape("planted ranks exceed block dimensions".into()));
    }
    let mut rng = rng_for(seed);
    for _ in 0..64 {
        let a = if ra == 0 {
            DMatrix::zeros(na_r, na_c)
        } else {
            factor(&mut rng, na_r, ra, &tol) * factor(&mut rng, na_c, ra, &tol).transpose()
        };
        // effective conditioning over the nonzero spectrum of the pivot
        let cond = if ra == 0 {
            1.0
        } else {
            let sv = crate::linalg::svd(&a).sigma;
            sv[0] / sv[ra - 1]
        };
        if cond > 1e6 {
            continue;
        }
        let g = DMatrix::from_fn(na_c, nd_c, |_, _| rng.random_range(-1.0..1.0));
        let h = DMatrix::from_fn(nd_r, na_r, |_, _| rng.random_range(-1.0..1.0));
        let s = if rs == 0 {
            DMatrix::zeros(nd_r, nd_c)
        } else {
            factor(&mut rng, nd_r, rs, &tol) * factor(&mut rng, nd_c, rs, &tol).transpose()
        };
        let b = &a * &g;
        let c = &h * &a;
        let d = &h * &a * &g + &s;
        let mut mat = DMatrix::zeros(na_r + nd_r, na_c + nd_c);
        mat.view_mut((0, 0), (na_r, na_c)).copy_from(&a);
        mat.view_mut((0, na_c), (na_r, nd_c)).copy_from(&b);
        mat.view_mut((na_r, 0), (nd_r, na_c)).copy_from(&c);
        mat.view_mut((na_r, na_c), (nd_r, nd_c)).copy_from(&d);
        return Ok(ConsistentBlock {
            matrix: DenseMatrix::new(mat).expect("finite"),
            pivot_rows: na_r,
            pivot_cols: na_c,
            pivot_rank: ra,
            planted_rank: rs,
            pivot_cond: cond,
        });
    }
    Err(GenerateError::Degenerate("pivot conditioning never fell under 1e6".into()))
}
