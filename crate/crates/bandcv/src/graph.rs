//! Weighted undirected graphs, vertex sets, the combinatorial Laplacian,
//! and the edge-list text format.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A weighted undirected simple graph. Edges are stored once with `i < j`;
/// semantics are independent of insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Build a graph from an edge list. Edges may be given in either vertex
    /// order; duplicates (including the mirrored pair) are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut canon: Vec<(usize, usize, f64)> = Vec::new();
        let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
        for (i, j, w) in edges {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, size: n });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, size: n });
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i},{j}) has non-positive or non-finite weight {w}"
                )));
            }
            let key = (i.min(j), i.max(j));
            if seen.insert(key, w).is_some() {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({},{})",
                    key.0, key.1
                )));
            }
            canon.push((key.0, key.1, w));
        }
        canon.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(Graph { n, edges: canon })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical `(i, j, w)` order with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|idx| self.edges[idx].2)
            .unwrap_or(0.0)
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j, w) in &self.edges {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        a
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(i, j, w) in &self.edges {
            d[i] += w;
            d[j] += w;
        }
        d
    }

    /// Combinatorial Laplacian L = D - A. Row sums are zero by construction.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(i, j, w) in &self.edges {
            l[(i, j)] = -w;
            l[(j, i)] = -w;
            l[(i, i)] += w;
            l[(j, j)] += w;
        }
        l
    }

    /// Number of connected components via union-find. Serves as the
    /// combinatorial cross-check for the Laplacian's zero eigenvalues.
    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut count = self.n;
        for &(i, j, _) in &self.edges {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
                count -= 1;
            }
        }
        count
    }

    /// Relabel vertices: vertex `v` becomes `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        Graph::from_edges(
            self.n,
            self.edges.iter().map(|&(i, j, w)| (perm[i], perm[j], w)),
        )
    }

    /// Serialize to the edge-list text format: a `n=<count>` header line
    /// followed by one `i j w` triple per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n={}", self.n);
        for &(i, j, w) in &self.edges {
            let _ = writeln!(out, "{i} {j} {w:.17e}");
        }
        out
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn parse_edge_list(text: &str, origin: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if n.is_none() {
                let rest = line
                    .strip_prefix("n=")
                    .ok_or_else(|| Error::parse(origin, lineno + 1, "expected header line n=<count>"))?;
                n = Some(rest.trim().parse().map_err(|_| {
                    Error::parse(origin, lineno + 1, format!("bad vertex count {rest:?}"))
                })?);
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = |what: &str| -> Result<&str> {
                parts
                    .next()
                    .ok_or_else(|| Error::parse(origin, lineno + 1, format!("missing {what}")))
            };
            let i: usize = next("source vertex")?
                .parse()
                .map_err(|_| Error::parse(origin, lineno + 1, "bad source vertex"))?;
            let j: usize = next("target vertex")?
                .parse()
                .map_err(|_| Error::parse(origin, lineno + 1, "bad target vertex"))?;
            let w: f64 = next("weight")?
                .parse()
                .map_err(|_| Error::parse(origin, lineno + 1, "bad weight"))?;
            edges.push((i, j, w));
        }
        let n = n.ok_or_else(|| Error::parse(origin, 0, "missing n=<count> header"))?;
        Graph::from_edges(n, edges)
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Graph::parse_edge_list(&text, &path.display().to_string())
    }
}

/// Sorted, duplicate-free set of vertex indices. Used for the known set S,
/// its complement, fold training/holdout sets, and spectral index ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    indices: Vec<usize>,
}

impl VertexSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        VertexSet { indices }
    }

    pub fn empty() -> Self {
        VertexSet { indices: Vec::new() }
    }

    /// The contiguous range `[0, k)`, the spectral index set for bandwidth k.
    pub fn range(k: usize) -> Self {
        VertexSet {
            indices: (0..k).collect(),
        }
    }

    pub fn all(n: usize) -> Self {
        Self::range(n)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.indices.binary_search(&v).is_ok()
    }

    pub fn max(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    /// Complement against the universe `[0, n)`.
    pub fn complement(&self, n: usize) -> VertexSet {
        let mut out = Vec::with_capacity(n - self.indices.len().min(n));
        let mut it = self.indices.iter().peekable();
        for v in 0..n {
            if it.peek() == Some(&&v) {
                it.next();
            } else {
                out.push(v);
            }
        }
        VertexSet { indices: out }
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut merged = self.indices.clone();
        merged.extend_from_slice(&other.indices);
        VertexSet::new(merged)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.indices.iter().all(|v| !other.contains(*v))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&max) = self.indices.last() {
            if max >= n {
                return Err(Error::IndexOutOfRange { index: max, size: n });
            }
        }
        Ok(())
    }
}

impl From<Vec<usize>> for VertexSet {
    fn from(v: Vec<usize>) -> Self {
        VertexSet::new(v)
    }
}

/// Submatrix of `m` indexed by `rows` and `cols`: entry (a, b) is
/// `m[rows[a], cols[b]]`.
pub fn submatrix(m: &DMatrix<f64>, rows: &VertexSet, cols: &VertexSet) -> Result<DMatrix<f64>> {
    rows.validate(m.nrows())?;
    cols.validate(m.ncols())?;
    let mut out = DMatrix::zeros(rows.len(), cols.len());
    for (a, i) in rows.iter().enumerate() {
        for (b, j) in cols.iter().enumerate() {
            out[(a, b)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Subvector of `x` indexed by `set`.
pub fn subvector(x: &[f64], set: &VertexSet) -> Vec<f64> {
    set.iter().map(|i| x[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_two_path() {
        let g = Graph::from_edges(2, vec![(0, 1, 1.0)]).unwrap();
        let l = g.laplacian();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn laplacian_triangle() {
        let g = Graph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let l = g.laplacian();
        for i in 0..3 {
            assert_eq!(l[(i, i)], 2.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(l[(i, j)], -1.0);
                }
            }
        }
    }

    #[test]
    fn laplacian_weighted_edge() {
        let g = Graph::from_edges(2, vec![(1, 0, 3.0)]).unwrap();
        let l = g.laplacian();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[3.0, -3.0, -3.0, 3.0]));
    }

    #[test]
    fn laplacian_row_sums_vanish() {
        let g = Graph::from_edges(5, vec![(0, 1, 0.5), (1, 2, 2.0), (2, 3, 1.5), (3, 4, 7.0), (0, 4, 0.1)])
            .unwrap();
        let l = g.laplacian();
        let max_deg = g.degrees().iter().cloned().fold(0.0, f64::max);
        for i in 0..5 {
            let s: f64 = (0..5).map(|j| l[(i, j)]).sum();
            assert!(s.abs() <= 1e-12 * max_deg);
        }
    }

    #[test]
    fn rejects_self_loops_and_bad_weights() {
        assert!(Graph::from_edges(3, vec![(1, 1, 1.0)]).is_err());
        assert!(Graph::from_edges(3, vec![(0, 1, 0.0)]).is_err());
        assert!(Graph::from_edges(3, vec![(0, 1, -2.0)]).is_err());
        assert!(Graph::from_edges(3, vec![(0, 3, 1.0)]).is_err());
        assert!(Graph::from_edges(3, vec![(0, 1, 1.0), (1, 0, 1.0)]).is_err());
    }

    #[test]
    fn edge_order_is_canonical() {
        let a = Graph::from_edges(3, vec![(2, 0, 1.0), (1, 0, 2.0)]).unwrap();
        let b = Graph::from_edges(3, vec![(0, 1, 2.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn submatrix_identity_corners() {
        let m = DMatrix::<f64>::identity(3, 3);
        let s = VertexSet::new(vec![0, 2]);
        let sub = submatrix(&m, &s, &s).unwrap();
        assert_eq!(sub, DMatrix::identity(2, 2));
    }

    #[test]
    fn submatrix_full_is_identity_op() {
        let m = DMatrix::from_fn(3, 3, |i, j| (3 * i + j) as f64);
        let all = VertexSet::all(3);
        assert_eq!(submatrix(&m, &all, &all).unwrap(), m);
    }

    #[test]
    fn submatrix_single_row() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let sub = submatrix(&m, &VertexSet::new(vec![1]), &VertexSet::all(3)).unwrap();
        assert_eq!(sub, DMatrix::from_row_slice(1, 3, &[4.0, 5.0, 6.0]));
    }

    #[test]
    fn submatrix_out_of_range() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert!(submatrix(&m, &VertexSet::new(vec![3]), &VertexSet::all(3)).is_err());
    }

    #[test]
    fn complement_partitions() {
        let s = VertexSet::new(vec![1, 3]);
        let c = s.complement(5);
        assert_eq!(c.indices(), &[0, 2, 4]);
        assert_eq!(s.union(&c), VertexSet::all(5));
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = Graph::from_edges(4, vec![(0, 1, 0.25), (2, 3, 1.0), (1, 3, 1e-3)]).unwrap();
        let text = g.to_edge_list();
        let back = Graph::parse_edge_list(&text, "mem").unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn edge_list_comments_and_errors() {
        let text = "# a comment\nn=3\n0 1 1.0 # trailing\n1 2 0.5\n";
        let g = Graph::parse_edge_list(text, "mem").unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(Graph::parse_edge_list("0 1 1.0\n", "mem").is_err());
        assert!(Graph::parse_edge_list("n=2\n0 x 1.0\n", "mem").is_err());
    }

    #[test]
    fn components_counted() {
        let g = Graph::from_edges(6, vec![(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).unwrap();
        assert_eq!(g.connected_components(), 3);
    }
}
