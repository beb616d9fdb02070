//! Graph-side certificates for staircase patterns.
//!
//! Two graphs on m + n vertices appear here, sharing the vertex convention
//! that rows come first and column j becomes vertex m + j.
//!
//! [`lift_pattern`] completes the row side and the column side into cliques
//! (the trivial edges) and adds one nontrivial edge per sample. That graph
//! describes the sampling pattern but is generally *not* chordal: two
//! unsampled cells in opposite corners close an induced four-cycle through
//! one row-row and one column-column edge.
//!
//! [`chain_graph`] takes the union of complete subgraphs on the lifted
//! vertex sets of a certified chain's bicliques. This is the object the
//! chordality certificate speaks about: its maximal cliques are exactly the
//! chain's bicliques, it passes [`mcs_order`], and the path over consecutive
//! bicliques is its unique spanning clique tree with the induced-subtree
//! property ([`verify_induced_subtree`]).

use crate::pattern::{intersect_sorted, SampledInstance, StaircaseChain};

/// Lifted graph: row vertices 0..m, column vertices m..m+n.
#[derive(Debug, Clone)]
pub struct BipartiteLift {
    m: usize,
    n: usize,
    adj: Vec<Vec<bool>>,
    nontrivial: Vec<(usize, usize)>,
}

impl BipartiteLift {
    pub fn node_count(&self) -> usize {
        self.m + self.n
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u][v]
    }

    /// Sample-induced edges (i, m + j), excluding the side cliques.
    pub fn nontrivial_edges(&self) -> &[(usize, usize)] {
        &self.nontrivial
    }

    pub fn edge_count(&self) -> usize {
        let mut count = 0;
        for u in 0..self.adj.len() {
            for v in (u + 1)..self.adj.len() {
                if self.adj[u][v] {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adj
    }
}

/// Lift the sampling pattern of `inst` to its m + n vertex graph.
pub fn lift_pattern(inst: &SampledInstance) -> BipartiteLift {
    let (m, n) = (inst.nrows(), inst.ncols());
    let total = m + n;
    let mut adj = vec![vec![false; total]; total];
    for a in 0..m {
        for b in (a + 1)..m {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    }
    for a in m..total {
        for b in (a + 1)..total {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    }
    let mut nontrivial = Vec::with_capacity(inst.sample_count());
    for (i, j, _) in inst.iter() {
        adj[i][m + j] = true;
        adj[m + j][i] = true;
        nontrivial.push((i, m + j));
    }
    BipartiteLift { m, n, adj, nontrivial }
}

/// Adjacency matrix of the union of complete subgraphs on the chain's lifted
/// biclique vertex sets. Chordal for every certified chain, with the chain
/// path as its unique induced-subtree clique tree.
pub fn chain_graph(chain: &StaircaseChain) -> Vec<Vec<bool>> {
    let m = chain.row_order().len();
    let n = chain.col_order().len();
    let total = m + n;
    let mut adj = vec![vec![false; total]; total];
    for b in chain.bicliques() {
        let mut verts: Vec<usize> = b.rows().to_vec();
        verts.extend(b.cols().iter().map(|&j| m + j));
        for (k, &x) in verts.iter().enumerate() {
            for &y in &verts[k + 1..] {
                adj[x][y] = true;
                adj[y][x] = true;
            }
        }
    }
    adj
}

/// Maximum cardinality search order plus the zero-fill chordality verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McsResult {
    /// Visit order; its reverse is the candidate perfect elimination order.
    pub order: Vec<usize>,
    pub chordal: bool,
}

/// Run MCS on an adjacency matrix, breaking weight ties toward the lowest
/// vertex index, and test the reversed visit order for zero fill-in.
pub fn mcs_order(adj: &[Vec<bool>]) -> McsResult {
    let n = adj.len();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !visited[v])
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .expect("unvisited vertex remains");
        visited[v] = true;
        order.push(v);
        for (u, row) in adj[v].iter().enumerate() {
            if *row && !visited[u] {
                weight[u] += 1;
            }
        }
    }

    // reversed visit order is a perfect elimination order iff chordal:
    // each vertex's earliest later-neighbor must dominate the rest
    let mut pos = vec![0usize; n];
    for (p, &v) in order.iter().rev().enumerate() {
        pos[v] = p;
    }
    let peo: Vec<usize> = order.iter().rev().copied().collect();
    let mut chordal = true;
    'outer: for &v in &peo {
        let later: Vec<usize> = (0..n).filter(|&u| adj[v][u] && pos[u] > pos[v]).collect();
        if let Some(&u0) = later.iter().min_by_key(|&&u| pos[u]) {
            for &w in &later {
                if w != u0 && !adj[u0][w] {
                    chordal = false;
                    break 'outer;
                }
            }
        }
    }
    McsResult { order, chordal }
}

/// Chordality by definition, for cross-checking [`mcs_order`] on small
/// graphs: no induced cycle of length four or more. Exponential in the
/// vertex count, intended for n <= 8.
pub fn chordal_bruteforce(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    assert!(n <= 20, "brute-force chordality is exponential");
    for mask in 0u32..(1 << n) {
        let verts: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if verts.len() < 4 {
            continue;
        }
        // induced subgraph is a chordless cycle iff every vertex has degree
        // exactly 2, the edge count equals the vertex count, and it connects
        let mut degrees_ok = true;
        let mut edges = 0;
        for (ai, &a) in verts.iter().enumerate() {
            let deg = verts.iter().filter(|&&b| adj[a][b]).count();
            if deg != 2 {
                degrees_ok = false;
                break;
            }
            edges += verts[ai + 1..].iter().filter(|&&b| adj[a][b]).count();
        }
        if !degrees_ok || edges != verts.len() {
            continue;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![verts[0]];
        seen[verts[0]] = true;
        while let Some(a) = stack.pop() {
            for &b in &verts {
                if adj[a][b] && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        if verts.iter().all(|&v| seen[v]) {
            return false;
        }
    }
    true
}

/// Tree over the chain's cliques. Clique i is the vertex set of biclique i
/// under the lift (rows as-is, column j as m + j).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueTree {
    cliques: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    separators: Vec<Vec<usize>>,
}

impl CliqueTree {
    /// Assemble a tree over the given cliques. Panics unless `edges` forms a
    /// spanning tree.
    pub fn new(cliques: Vec<Vec<usize>>, edges: Vec<(usize, usize)>) -> Self {
        let l = cliques.len();
        assert!(l >= 1, "clique tree needs at least one node");
        assert_eq!(edges.len(), l - 1, "a tree on {l} nodes has {} edges", l - 1);
        let mut seen = vec![false; l];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for &(x, y) in &edges {
                let next = if x == a { y } else if y == a { x } else { continue };
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        assert!(seen.iter().all(|&s| s), "clique tree edges must connect all nodes");
        let separators = edges
            .iter()
            .map(|&(x, y)| intersect_sorted(&cliques[x], &cliques[y]))
            .collect();
        CliqueTree { cliques, edges, separators }
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn separators(&self) -> &[Vec<usize>] {
        &self.separators
    }
}

/// Path clique tree of a certified chain: consecutive bicliques joined, with
/// the corner vertex sets as separators.
pub fn chain_to_clique_tree(chain: &StaircaseChain) -> CliqueTree {
    let m = chain.row_order().len();
    let cliques: Vec<Vec<usize>> = chain
        .bicliques()
        .iter()
        .map(|b| {
            let mut v: Vec<usize> = b.rows().to_vec();
            v.extend(b.cols().iter().map(|&j| m + j));
            v
        })
        .collect();
    let edges: Vec<(usize, usize)> = (0..cliques.len().saturating_sub(1)).map(|i| (i, i + 1)).collect();
    CliqueTree::new(cliques, edges)
}

/// Does every graph vertex induce a connected subtree of tree nodes?
pub fn verify_induced_subtree(tree: &CliqueTree) -> bool {
    let l = tree.cliques.len();
    let mut verts: Vec<usize> = tree.cliques.iter().flatten().copied().collect();
    verts.sort_unstable();
    verts.dedup();
    for v in verts {
        let holders: Vec<usize> = (0..l)
            .filter(|&k| tree.cliques[k].binary_search(&v).is_ok())
            .collect();
        if holders.len() <= 1 {
            continue;
        }
        let mut seen = vec![false; l];
        let mut stack = vec![holders[0]];
        seen[holders[0]] = true;
        while let Some(a) = stack.pop() {
            for &(x, y) in &tree.edges {
                let next = if x == a { y } else if y == a { x } else { continue };
                if !seen[next] && holders.contains(&next) {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        if !holders.iter().all(|&h| seen[h]) {
            return false;
        }
    }
    true
}

/// Edges of the clique graph: pairs of cliques sharing a vertex.
pub fn clique_graph_edges(cliques: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..cliques.len() {
        for b in (a + 1)..cliques.len() {
            if !intersect_sorted(&cliques[a], &cliques[b]).is_empty() {
                out.push((a, b));
            }
        }
    }
    out
}

/// All spanning trees on `l` labeled nodes whose edges stay within `allowed`,
/// via Pruefer sequence enumeration. Intended for small l (clique chains).
pub fn spanning_trees_within(l: usize, allowed: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let norm = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let allowed_set: std::collections::BTreeSet<(usize, usize)> =
        allowed.iter().map(|&(a, b)| norm(a, b)).collect();
    match l {
        0 => return Vec::new(),
        1 => return vec![Vec::new()],
        2 => {
            return if allowed_set.contains(&(0, 1)) {
                vec![vec![(0, 1)]]
            } else {
                Vec::new()
            }
        }
        _ => {}
    }
    assert!(l <= 8, "spanning tree enumeration is l^(l-2)");
    let count = l.pow(l as u32 - 2);
    let mut out = Vec::new();
    'seq: for code in 0..count {
        // decode the Pruefer sequence, then rebuild the tree
        let mut seq = Vec::with_capacity(l - 2);
        let mut c = code;
        for _ in 0..(l - 2) {
            seq.push(c % l);
            c /= l;
        }
        let mut degree = vec![1usize; l];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut edges = Vec::with_capacity(l - 1);
        let mut used = vec![false; l];
        for &s in &seq {
            let leaf = (0..l).find(|&v| degree[v] == 1 && !used[v]).unwrap();
            used[leaf] = true;
            edges.push(norm(leaf, s));
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..l).filter(|&v| !used[v] && degree[v] == 1).collect();
        edges.push(norm(rest[0], rest[1]));
        for e in &edges {
            if !allowed_set.contains(e) {
                continue 'seq;
            }
        }
        out.push(edges);
    }
    out
}

/// DOT rendering of a clique tree, labeling nodes with 1-based row and
/// column indices and edges with their separators.
pub fn clique_tree_dot(tree: &CliqueTree, m: usize) -> String {
    let describe = |verts: &[usize]| {
        let rows: Vec<String> = verts.iter().filter(|&&v| v < m).map(|v| (v + 1).to_string()).collect();
        let cols: Vec<String> =
            verts.iter().filter(|&&v| v >= m).map(|&v| (v - m + 1).to_string()).collect();
        format!("rows {{{}}} cols {{{}}}", rows.join(","), cols.join(","))
    };
    let mut out = String::from("graph clique_tree {\n  node [shape=box];\n");
    for (k, c) in tree.cliques.iter().enumerate() {
        out.push_str(&format!("  c{} [label=\"C{}: {}\"];\n", k, k + 1, describe(c)));
    }
    for (e, &(a, b)) in tree.edges.iter().enumerate() {
        out.push_str(&format!(
            "  c{} -- c{} [label=\"{}\"];\n",
            a,
            b,
            describe(&tree.separators[e])
        ));
    }
    out.push_str("}\n");
    out
}
