//! Communication graphs, doubly stochastic weight matrices and belief averaging.

use crate::rng::Stream;
use crate::submod::BeliefVector;
use crate::{Error, Result};
use nalgebra::DMatrix;
use petgraph::unionfind::UnionFind;
use rand::Rng;
use std::fmt::Write as _;

/// Resampling budget for connected Erdős–Rényi draws.
pub const RANDOM_GRAPH_RETRIES: usize = 1000;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Simple undirected graph on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Self-loops are rejected, duplicate edges collapsed.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::param(
                    "edges",
                    format!("edge ({i}, {j}) outside 0..{n}"),
                ));
            }
            if i == j {
                return Err(Error::param("edges", format!("self-loop at {i}")));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { n, neighbors })
    }

    pub fn complete(n: usize) -> Self {
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Graph { n, neighbors }
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &edges).expect("path edges are valid")
    }

    pub fn ring(n: usize) -> Self {
        if n < 3 {
            return Graph::path(n);
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges).expect("ring edges are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Each undirected edge once, `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| {
                self.neighbors[i]
                    .iter()
                    .filter(move |&&j| j > i)
                    .map(move |&j| (i, j))
            })
            .collect()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() as f64 / self.n as f64
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut uf = UnionFind::<usize>::new(self.n);
        for (i, j) in self.edges() {
            uf.union(i, j);
        }
        let root = uf.find(0);
        (1..self.n).all(|i| uf.find(i) == root)
    }

    /// Parses one `i j` pair per line (0-indexed). Blank lines and lines
    /// starting with `#` are ignored. `n` defaults to the largest index + 1.
    pub fn from_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                location: format!("edge list line {}", lineno + 1),
                message,
            };
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(parse_err(format!("expected `i j`, got `{line}`")));
            };
            let a: usize = a.parse().map_err(|e| parse_err(format!("{e}")))?;
            let b: usize = b.parse().map_err(|e| parse_err(format!("{e}")))?;
            edges.push((a, b));
        }
        let inferred = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        let n = n.unwrap_or(inferred);
        Graph::new(n, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }
}

/// Erdős–Rényi `G(N, p)` with `p = avg_degree / (N - 1)`, redrawn until
/// connected (at most [`RANDOM_GRAPH_RETRIES`] draws).
pub fn generate_random_graph(n: usize, avg_degree: f64, rng: &mut Stream) -> Result<Graph> {
    if n < 2 {
        return Err(Error::param("agents", "random graphs need at least 2 nodes"));
    }
    if !(avg_degree >= 1.0 && avg_degree <= (n - 1) as f64) {
        return Err(Error::param(
            "avg_degree",
            format!("{avg_degree} not in [1, {}]", n - 1),
        ));
    }
    let p = (avg_degree / (n - 1) as f64).min(1.0);
    for _ in 0..RANDOM_GRAPH_RETRIES {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::new(n, &edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Generation {
        attempts: RANDOM_GRAPH_RETRIES,
    })
}

/// A connected graph with its symmetric doubly stochastic weight matrix.
#[derive(Debug, Clone)]
pub struct CommNetwork {
    graph: Graph,
    weights: DMatrix<f64>,
    beta: f64,
}

impl CommNetwork {
    /// Metropolis rule: `w_ij = 1 / (1 + max(d_i, d_j))` on edges, zero off
    /// edges, and the remaining mass on the diagonal.
    pub fn metropolis(graph: Graph) -> Result<Self> {
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        let n = graph.n();
        let mut w = DMatrix::zeros(n, n);
        for (i, j) in graph.edges() {
            let v = 1.0 / (1 + graph.degree(i).max(graph.degree(j))) as f64;
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        for i in 0..n {
            let off: f64 = graph.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
            w[(i, i)] = 1.0 - off;
        }
        Self::from_parts(graph, w)
    }

    /// `w_ij = 1/N` on the complete graph.
    pub fn complete(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("agents", "need at least one agent"));
        }
        let w = DMatrix::from_element(n, n, 1.0 / n as f64);
        Self::from_parts(Graph::complete(n), w)
    }

    /// Validates every invariant of the pair and computes `β`.
    pub fn from_parts(graph: Graph, weights: DMatrix<f64>) -> Result<Self> {
        let n = graph.n();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.nrows(),
            });
        }
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        for i in 0..n {
            if weights[(i, i)] <= 0.0 {
                return Err(Error::WeightMatrix(format!("w[{i}][{i}] is not positive")));
            }
            let row: f64 = weights.row(i).sum();
            if (row - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::WeightMatrix(format!("row {i} sums to {row}")));
            }
            for j in 0..n {
                let v = weights[(i, j)];
                if v < 0.0 {
                    return Err(Error::WeightMatrix(format!("w[{i}][{j}] = {v} < 0")));
                }
                if i != j && v != 0.0 && !graph.has_edge(i, j) {
                    return Err(Error::WeightMatrix(format!(
                        "w[{i}][{j}] = {v} but ({i}, {j}) is not an edge"
                    )));
                }
            }
        }
        let beta = spectral_gap(&weights)?;
        if beta >= 1.0 - 1e-12 {
            return Err(Error::WeightMatrix(format!("beta = {beta} is not below 1")));
        }
        Ok(CommNetwork {
            graph,
            weights,
            beta,
        })
    }

    pub fn agents(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// Second-largest eigenvalue magnitude of `W`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `W` as CSV, 17 significant digits, no header.
    pub fn weights_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.agents() {
            let row: Vec<String> = (0..self.agents())
                .map(|j| format!("{:.16e}", self.weights[(i, j)]))
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// `y_i = Σ_{j ∈ N_i ∪ {i}} w_ij x_j` written into `out`.
    pub(crate) fn aggregate_into(&self, beliefs: &[&[f64]], i: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut add = |j: usize| {
            let w = self.weights[(i, j)];
            if w != 0.0 {
                for (o, x) in out.iter_mut().zip(beliefs[j]) {
                    *o += w * x;
                }
            }
        };
        add(i);
        for &j in self.graph.neighbors(i) {
            add(j);
        }
        // bound drift from summation order
        out.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    }
}

/// `max(|λ_2|, |λ_N|)` of a symmetric matrix; 0 for a 1×1 matrix.
pub fn spectral_gap(w: &DMatrix<f64>) -> Result<f64> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::WeightMatrix("matrix is not square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if (w[(i, j)] - w[(j, i)]).abs() > STOCHASTIC_TOL {
                return Err(Error::WeightMatrix(format!("not symmetric at ({i}, {j})")));
            }
        }
    }
    if n <= 1 {
        return Ok(0.0);
    }
    let mut eig: Vec<f64> = w.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(eig[1].abs().max(eig[n - 1].abs()))
}

/// Weighted average of neighbour beliefs for agent `i`.
pub fn aggregate_beliefs(
    network: &CommNetwork,
    beliefs: &[BeliefVector],
    i: usize,
) -> Result<BeliefVector> {
    if beliefs.len() != network.agents() {
        return Err(Error::DimensionMismatch {
            expected: network.agents(),
            got: beliefs.len(),
        });
    }
    let n = beliefs.first().map_or(0, BeliefVector::len);
    if let Some(b) = beliefs.iter().find(|b| b.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let slices: Vec<&[f64]> = beliefs.iter().map(BeliefVector::as_slice).collect();
    let mut out = vec![0.0; n];
    network.aggregate_into(&slices, i, &mut out);
    Ok(BeliefVector::from_raw(out))
}
