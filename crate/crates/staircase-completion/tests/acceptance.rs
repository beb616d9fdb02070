//! End-to-end acceptance gate. Each test covers one numbered criterion and
//! prints a single `criterion N: PASS/FAIL` line (visible with
//! `cargo test -- --nocapture`).

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use staircase_completion::completion::{decide_and_complete, CompletionVerdict, WitnessConstruction};
use staircase_completion::generate::{
    bordered_psd, consistent_block, cross, staircase, three_block, two_block, DeficiencyKind,
    StaircaseSpec,
};
use staircase_completion::graph::{
    chain_graph, chain_to_clique_tree, chordal_bruteforce, clique_graph_edges, mcs_order,
    spanning_trees_within, verify_induced_subtree, CliqueTree,
};
use staircase_completion::linalg::{is_psd, numerical_rank};
use staircase_completion::pattern::{validate_chain, Biclique, ChainMode, SampledInstance};
use staircase_completion::psd::{psd_complete, psd_demo, DemoOutcome, PsdCompletion, PsdDemoConfig};
use staircase_completion::Tolerances;

fn report(n: usize, res: Result<String, String>) {
    match res {
        Ok(msg) => println!("criterion {n}: PASS ({msg})"),
        Err(msg) => {
            println!("criterion {n}: FAIL ({msg})");
            panic!("criterion {n} failed: {msg}");
        }
    }
}

fn within(elapsed: Duration, budget_s: f64, what: &str) -> Result<(), String> {
    if elapsed.as_secs_f64() <= budget_s {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:?}, budget {budget_s}s"))
    }
}

// ---------------------------------------------------------------------------
// criterion 1: the 3x4 two-unknown instance is undecided by the corner test,
// and an independent oracle certifies (4, 1) as its only rank-2 completion.

fn two_unknown_instance() -> (SampledInstance, Vec<Biclique>) {
    let known = [
        (0usize, 1usize, 6.0),
        (0, 2, 5.0),
        (0, 3, 3.0),
        (1, 0, 1.0),
        (1, 1, 2.0),
        (1, 2, 3.0),
        (1, 3, 2.0),
        (2, 0, 3.0),
        (2, 1, 4.0),
        (2, 2, 2.0),
    ];
    let inst = SampledInstance::new(3, 4, 2, known).unwrap();
    let bands = vec![
        Biclique::new(vec![0, 1], vec![1, 2, 3]).unwrap(),
        Biclique::new(vec![1, 2], vec![0, 1, 2]).unwrap(),
    ];
    (inst, bands)
}

fn grid_matrix(z1: f64, z2: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 4, &[z1, 6.0, 5.0, 3.0, 1.0, 2.0, 3.0, 2.0, 3.0, 4.0, 2.0, z2])
}

// All four 3x3 minors; a 3x4 matrix has rank <= 2 iff they all vanish.
fn minors(z1: f64, z2: f64) -> [f64; 4] {
    let m = grid_matrix(z1, z2);
    let cols: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let mut out = [0.0; 4];
    for (k, cs) in cols.iter().enumerate() {
        let sub = DMatrix::from_fn(3, 3, |i, j| m[(i, cs[j])]);
        out[k] = sub.determinant();
    }
    out
}

// Gauss-Newton least-squares on the minor system from one grid start.
fn refine(mut z1: f64, mut z2: f64) -> (f64, f64, f64) {
    for _ in 0..40 {
        let f = minors(z1, z2);
        let eps = 1e-6;
        let fp1 = minors(z1 + eps, z2);
        let fp2 = minors(z1, z2 + eps);
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtf = [0.0f64; 2];
        for k in 0..4 {
            let j1 = (fp1[k] - f[k]) / eps;
            let j2 = (fp2[k] - f[k]) / eps;
            jtj[0][0] += j1 * j1;
            jtj[0][1] += j1 * j2;
            jtj[1][1] += j2 * j2;
            jtf[0] += j1 * f[k];
            jtf[1] += j2 * f[k];
        }
        jtj[1][0] = jtj[0][1];
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-14 {
            break;
        }
        let d1 = (-jtf[0] * jtj[1][1] + jtf[1] * jtj[0][1]) / det;
        let d2 = (-jtf[1] * jtj[0][0] + jtf[0] * jtj[1][0]) / det;
        z1 += d1;
        z2 += d2;
        if d1.abs() + d2.abs() < 1e-14 {
            break;
        }
    }
    let residual = minors(z1, z2).iter().map(|x| x * x).sum::<f64>().sqrt();
    (z1, z2, residual)
}

#[test]
fn criterion_1_two_unknown_example() {
    report(1, (|| {
        let started = Instant::now();
        let tol = Tolerances::default();
        let (inst, bands) = two_unknown_instance();
        let chain = validate_chain(&inst, &bands, ChainMode::Strict)
            .map_err(|e| format!("chain rejected: {e}"))?;

        let verdict = decide_and_complete(&inst, &chain, &tol);
        let CompletionVerdict::Undecided { report, .. } = verdict else {
            return Err(format!("expected undecided, got {}", verdict.label()));
        };
        if report.corners.len() != 1 || report.corners[0].rank != 1 {
            return Err(format!("corner table wrong: {:?}", report.corners));
        }

        // independent oracle: scan a grid of starts, refine each by
        // least squares on the minor system, cluster the converged roots
        let mut roots: Vec<(f64, f64)> = Vec::new();
        let mut g = -20.0f64;
        while g <= 20.0 {
            let mut h = -20.0f64;
            while h <= 20.0 {
                let (z1, z2, residual) = refine(g, h);
                if residual < 1e-9 && z1.abs() < 1e6 && z2.abs() < 1e6 {
                    if !roots.iter().any(|&(a, b)| (a - z1).abs() + (b - z2).abs() < 1e-4) {
                        roots.push((z1, z2));
                    }
                }
                h += 0.5;
            }
            g += 0.5;
        }
        let [(z1, z2)] = roots.as_slice() else {
            return Err(format!("oracle found {} rank-2 completions: {roots:?}", roots.len()));
        };
        if (z1 - 4.0).abs() > 1e-6 || (z2 - 1.0).abs() > 1e-6 {
            return Err(format!("oracle root ({z1}, {z2}) differs from (4, 1)"));
        }
        let filled = grid_matrix(4.0, 1.0);
        if numerical_rank(&filled, &tol) != 2 {
            return Err("matrix at (4, 1) does not have rank 2".into());
        }
        within(started.elapsed(), 1.0, "oracle scan")?;
        Ok(format!(
            "undecided verdict with corner rank 1; oracle confirms unique completion (4, 1) in {:?}",
            started.elapsed()
        ))
    })());
}

// ---------------------------------------------------------------------------
// criterion 2: the bordered 3x3 PSD demonstration pins x = -2 exactly.

#[test]
fn criterion_2_psd_demo_exact_root() {
    report(2, (|| {
        let started = Instant::now();
        let rep = psd_demo(&PsdDemoConfig::default(), &Tolerances::default())
            .map_err(|e| format!("demo failed: {e}"))?;
        let DemoOutcome::UniqueRoot { x } = rep.outcome else {
            return Err(format!("expected a unique root, got {:?}", rep.outcome));
        };
        if (x + 2.0).abs() > 1e-12 {
            return Err(format!("|x + 2| = {:e} above 1e-12", (x + 2.0).abs()));
        }
        if rep.corner_rank != 1 {
            return Err(format!("corner rank {} instead of 1", rep.corner_rank));
        }
        let [(_, _, rank, psd)] = rep.assembled.as_slice() else {
            return Err("expected exactly one assembled completion".into());
        };
        if *rank != 2 || !psd {
            return Err(format!("assembled rank {rank}, psd {psd}"));
        }
        within(started.elapsed(), 1.0, "psd demo")?;
        Ok(format!("x = {x}, corner rank 1, rank(H) = 2 in {:?}", started.elapsed()))
    })());
}

// ---------------------------------------------------------------------------
// criterion 3: 200 full-corner staircase instances complete uniquely and
// reproduce the ground truth to 1e-6 relative accuracy.

#[test]
fn criterion_3_sufficiency_sweep() {
    report(3, (|| {
        let started = Instant::now();
        let tol = Tolerances::default();
        let mut worst_rel: f64 = 0.0;
        for k in 0..200usize {
            let spec = StaircaseSpec {
                m: 12 + (k * 7) % 29,
                n: 12 + (k * 11) % 29,
                r: 1 + k % 3,
                l: 1 + k % 5,
                seed: 1000 + k as u64,
                deficient_corner: None,
            };
            let g = staircase(&spec).map_err(|e| format!("instance {k}: generate {e}"))?;
            let chain = validate_chain(&g.instance, &g.chain, ChainMode::Strict)
                .map_err(|e| format!("instance {k}: chain {e}"))?;
            match decide_and_complete(&g.instance, &chain, &tol) {
                CompletionVerdict::Unique { completion, .. } => {
                    let rel =
                        (completion.inner() - g.truth.inner()).norm() / g.truth.inner().norm();
                    worst_rel = worst_rel.max(rel);
                    if rel > 1e-6 {
                        return Err(format!("instance {k}: relative error {rel:e}"));
                    }
                }
                other => return Err(format!("instance {k}: verdict {}", other.label())),
            }
        }
        within(started.elapsed(), 30.0, "sufficiency sweep")?;
        Ok(format!("200/200 unique, worst relative error {worst_rel:.2e} in {:?}", started.elapsed()))
    })());
}

// ---------------------------------------------------------------------------
// criterion 4: 100 deficient-corner instances across the two-block,
// three-block, and cross families yield verified witness pairs at least 95%
// of the time, never a false unique.

#[test]
fn criterion_4_necessity_sweep() {
    report(4, (|| {
        let started = Instant::now();
        let tol = Tolerances::default();
        let kinds = [
            DeficiencyKind::RowDrop,
            DeficiencyKind::ColDrop,
            DeficiencyKind::BothDrop,
            DeficiencyKind::ThinOverlap,
        ];
        let mut nonunique = 0;
        let mut undecided = 0;
        for k in 0..100usize {
            let r = 2 + k % 2;
            let seed = 500 + k as u64;
            let m = 10 + k % 7;
            let n = 11 + k % 6;
            let g = match k % 6 {
                0..=3 => two_block(m, n, r, kinds[k % 4], seed),
                4 => three_block(m, n, r, seed),
                _ => cross(m.max(2 * r + 2), n.max(2 * r + 2), r, seed),
            }
            .map_err(|e| format!("instance {k}: generate {e}"))?;
            let chain = validate_chain(&g.instance, &g.chain, ChainMode::Strict)
                .map_err(|e| format!("instance {k}: chain {e}"))?;
            match decide_and_complete(&g.instance, &chain, &tol) {
                CompletionVerdict::NonUnique { first, second, .. } => {
                    // re-verify the witness pair independently of the engine
                    let mut mismatch: f64 = 0.0;
                    for (i, j, v) in g.instance.iter() {
                        mismatch = mismatch
                            .max((first.get(i, j) - v).abs())
                            .max((second.get(i, j) - v).abs());
                    }
                    if mismatch > 1e-8 {
                        return Err(format!("instance {k}: sample mismatch {mismatch:e}"));
                    }
                    let (r1, r2) = (
                        numerical_rank(first.inner(), &tol),
                        numerical_rank(second.inner(), &tol),
                    );
                    if r1 != r || r2 != r {
                        return Err(format!("instance {k}: witness ranks {r1}, {r2}, want {r}"));
                    }
                    let sep = (first.inner() - second.inner()).norm();
                    if sep < 1e-3 {
                        return Err(format!("instance {k}: separation {sep:e} below 1e-3"));
                    }
                    nonunique += 1;
                }
                CompletionVerdict::Undecided { .. } => undecided += 1,
                other => return Err(format!("instance {k}: false verdict {}", other.label())),
            }
        }
        if nonunique < 95 {
            return Err(format!("only {nonunique}/100 witnessed (undecided {undecided})"));
        }
        within(started.elapsed(), 30.0, "necessity sweep")?;
        Ok(format!(
            "{nonunique}/100 verified witness pairs, {undecided} undecided in {:?}",
            started.elapsed()
        ))
    })());
}

// ---------------------------------------------------------------------------
// criterion 5: rank additivity of the pivot complement on 1000 structured
// matrices built to satisfy the range conditions.

#[test]
fn criterion_5_rank_additivity() {
    report(5, (|| {
        let started = Instant::now();
        let tol = Tolerances::default();
        let mut ok = 0;
        let total = 1000;
        for k in 0..total {
            let ra = 1 + k % 3;
            let rs = 1 + (k / 3) % 2;
            let f = consistent_block(
                ra + 2 + k % 3,
                ra + 2 + (k / 2) % 3,
                rs + 1 + k % 2,
                rs + 1 + (k / 5) % 2,
                ra,
                rs,
                9000 + k as u64,
            )
            .map_err(|e| format!("instance {k}: {e}"))?;
            if f.pivot_cond > 1e6 {
                return Err(format!("instance {k}: pivot condition {:e}", f.pivot_cond));
            }
            if numerical_rank(f.matrix.inner(), &tol) == ra + rs {
                ok += 1;
            }
        }
        if ok * 100 < total * 99 {
            return Err(format!("additivity held in only {ok}/{total}"));
        }
        Ok(format!("rank additivity in {ok}/{total} in {:?}", started.elapsed()))
    })());
}

// ---------------------------------------------------------------------------
// criterion 6: chordality of certified lifts, brute-force agreement on small
// random graphs, and uniqueness of the clique tree for chains up to 5.

#[test]
fn criterion_6_chordality_certificates() {
    report(6, (|| {
        let started = Instant::now();
        for l in 1..=5usize {
            for s in 0..6u64 {
                let g = staircase(&StaircaseSpec {
                    m: 14,
                    n: 16,
                    r: 2,
                    l,
                    seed: 100 * l as u64 + s,
                    deficient_corner: None,
                })
                .map_err(|e| format!("l={l} s={s}: generate {e}"))?;
                let chain = validate_chain(&g.instance, &g.chain, ChainMode::Strict)
                    .map_err(|e| format!("l={l} s={s}: chain {e}"))?;
                if !mcs_order(&chain_graph(&chain)).chordal {
                    return Err(format!("l={l} s={s}: lift not chordal"));
                }
                if !verify_induced_subtree(&chain_to_clique_tree(&chain)) {
                    return Err(format!("l={l} s={s}: induced subtree check failed"));
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for t in 0..500 {
            let n = rng.random_range(1..=8usize);
            let p: f64 = rng.random_range(0.15..0.85);
            let mut adj = vec![vec![false; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random_range(0.0..1.0) < p {
                        adj[i][j] = true;
                        adj[j][i] = true;
                    }
                }
            }
            let fast = mcs_order(&adj).chordal;
            let slow = chordal_bruteforce(&adj);
            if fast != slow {
                return Err(format!("graph {t} (n={n}): mcs {fast}, brute force {slow}"));
            }
        }

        for l in 1..=5usize {
            let g = staircase(&StaircaseSpec {
                m: 14,
                n: 16,
                r: 2,
                l,
                seed: 77 + l as u64,
                deficient_corner: None,
            })
            .map_err(|e| format!("l={l}: generate {e}"))?;
            let chain = validate_chain(&g.instance, &g.chain, ChainMode::Strict)
                .map_err(|e| format!("l={l}: chain {e}"))?;
            let cliques = chain_to_clique_tree(&chain).cliques().to_vec();
            let allowed = clique_graph_edges(&cliques);
            let valid: Vec<Vec<(usize, usize)>> = spanning_trees_within(l, &allowed)
                .into_iter()
                .filter(|edges| {
                    verify_induced_subtree(&CliqueTree::new(cliques.clone(), edges.clone()))
                })
                .collect();
            if valid.len() != 1 {
                return Err(format!("l={l}: {} valid clique trees, want exactly 1", valid.len()));
            }
            let path: Vec<(usize, usize)> = (0..l - 1).map(|i| (i, i + 1)).collect();
            if valid[0] != path {
                return Err(format!("l={l}: valid tree {:?} is not the path", valid[0]));
            }
        }
        Ok(format!(
            "30 lifts chordal, 500/500 brute-force agreement, unique path clique tree for l <= 5 in {:?}",
            started.elapsed()
        ))
    })());
}

// ---------------------------------------------------------------------------
// criterion 7: bordered PSD completion recovers the unique corner at full
// overlap rank and returns two verified completions at deficient rank.

#[test]
fn criterion_7_psd_completion() {
    report(7, (|| {
        let started = Instant::now();
        let tol = Tolerances::default();
        let mut unique_ok = 0;
        let mut pair_ok = 0;
        for k in 0..100usize {
            let deficient = k % 2 == 1;
            let r = if deficient { 2 + k % 2 } else { 1 + k % 3 };
            let na = r + 2 + k % 3;
            let nc = 2 + k % 3;
            let (inst, c_true) = bordered_psd(na, nc, r, deficient, 300 + k as u64)
                .map_err(|e| format!("instance {k}: generate {e}"))?;
            match psd_complete(&inst, &tol) {
                Ok(PsdCompletion::Unique { c, .. }) if !deficient => {
                    let err = (c.inner() - c_true.inner()).norm();
                    if err > 1e-8 {
                        return Err(format!("instance {k}: recovered C off by {err:e}"));
                    }
                    unique_ok += 1;
                }
                Ok(PsdCompletion::Pair { first, second, .. }) if deficient => {
                    if !is_psd(first.inner(), &tol) || !is_psd(second.inner(), &tol) {
                        return Err(format!("instance {k}: witness not psd"));
                    }
                    let fa = first.inner().view((0, 0), (na, na)) - inst.corner().inner();
                    let sa = second.inner().view((0, 0), (na, na)) - inst.corner().inner();
                    let fb = first.inner().view((0, na), (na, nc)) - inst.side().inner();
                    let sb = second.inner().view((0, na), (na, nc)) - inst.side().inner();
                    if fa.norm() > 1e-10 || sa.norm() > 1e-10 || fb.norm() > 1e-10 || sb.norm() > 1e-10
                    {
                        return Err(format!("instance {k}: witness changes observed blocks"));
                    }
                    if numerical_rank(second.inner(), &tol) != r {
                        return Err(format!("instance {k}: boosted completion misses rank {r}"));
                    }
                    if (first.inner() - second.inner()).norm() < 1e-9 {
                        return Err(format!("instance {k}: completions coincide"));
                    }
                    pair_ok += 1;
                }
                other => return Err(format!("instance {k}: unexpected outcome {other:?}")),
            }
        }
        if unique_ok != 50 || pair_ok != 50 {
            return Err(format!("unique {unique_ok}/50, pairs {pair_ok}/50"));
        }
        Ok(format!(
            "50/50 unique recoveries within 1e-8, 50/50 verified pairs in {:?}",
            started.elapsed()
        ))
    })());
}

// ---------------------------------------------------------------------------
// criterion 8: every three-band witness plan satisfies the defining
// pseudoinverse identity m4 = m3 m1^+ m2 before perturbation.

#[test]
fn criterion_8_three_band_identity() {
    report(8, (|| {
        let started = Instant::now();
        let tol = Tolerances::default();
        let mut plans = 0;
        let mut worst: f64 = 0.0;
        for k in 0..30usize {
            let r = 2 + k % 2;
            let g = three_block(10 + k % 5, 10 + k % 6, r, 2500 + k as u64)
                .map_err(|e| format!("instance {k}: generate {e}"))?;
            let chain = validate_chain(&g.instance, &g.chain, ChainMode::Strict)
                .map_err(|e| format!("instance {k}: chain {e}"))?;
            match decide_and_complete(&g.instance, &chain, &tol) {
                CompletionVerdict::NonUnique { construction, .. } => match construction {
                    WitnessConstruction::ThreeBlock(plan) => {
                        let residual = plan.identity_residual(&tol);
                        worst = worst.max(residual);
                        if residual > 1e-6 {
                            return Err(format!("instance {k}: identity residual {residual:e}"));
                        }
                        plans += 1;
                    }
                    other => {
                        return Err(format!("instance {k}: construction {}", other.label()))
                    }
                },
                other => return Err(format!("instance {k}: verdict {}", other.label())),
            }
        }
        if plans < 30 {
            return Err(format!("only {plans}/30 three-band plans"));
        }
        Ok(format!(
            "{plans}/30 plans satisfy the identity, worst relative residual {worst:.2e} in {:?}",
            started.elapsed()
        ))
    })());
}
