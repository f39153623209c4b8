//! Dense spectral decomposition of the combinatorial Laplacian with a
//! deterministic column ordering and sign convention.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{submatrix, Graph, VertexSet};

/// Gap below which two eigenvalues are treated as a multiplicity cluster.
pub const EIGENVALUE_TIE_GAP: f64 = 1e-9;
/// Eigenvalues below this count as zero for connectivity diagnostics.
pub const ZERO_EIGENVALUE_THRESHOLD: f64 = 1e-8;

const SIGN_PIVOT_THRESHOLD: f64 = 1e-9;

/// Eigenvalues (ascending) and orthonormal eigenvectors of a graph
/// Laplacian. Column i of `eigenvectors` pairs with `eigenvalues[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralBasis {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// Number of (numerically) zero eigenvalues; equals the number of
    /// connected components for a valid Laplacian.
    pub fn zero_eigenvalue_count(&self) -> usize {
        self.eigenvalues
            .iter()
            .take_while(|&&l| l < ZERO_EIGENVALUE_THRESHOLD)
            .count()
    }

    /// True when the spectral gap at the bandwidth cut r is below the tie
    /// threshold, i.e. bandwidth r splits an eigenvalue multiplicity cluster.
    pub fn splits_multiplicity(&self, r: usize) -> bool {
        r >= 1
            && r < self.eigenvalues.len()
            && (self.eigenvalues[r] - self.eigenvalues[r - 1]).abs() < EIGENVALUE_TIE_GAP
    }

    /// Submatrix of the eigenvector matrix: vertex rows, spectral columns.
    pub fn submatrix(&self, rows: &VertexSet, cols: &VertexSet) -> Result<DMatrix<f64>> {
        submatrix(&self.eigenvectors, rows, cols)
    }
}

/// Dense eigendecomposition of `laplacian(g)`, with eigenvalues sorted
/// ascending, each column's first significant entry made positive, and
/// columns within a multiplicity cluster ordered lexicographically on
/// rounded entries so the output is deterministic.
pub fn spectral_decompose(g: &Graph) -> Result<SpectralBasis> {
    let n = g.vertex_count();
    let l = g.laplacian();
    let eig = nalgebra::SymmetricEigen::try_new(l, f64::EPSILON, 100_000)
        .ok_or(Error::DecompositionFailure { n })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    for &idx in &order {
        eigenvalues.push(eig.eigenvalues[idx]);
        let mut col = eig.eigenvectors.column(idx).into_owned();
        fix_sign(&mut col);
        columns.push(col);
    }

    // Within each tie cluster, reorder columns lexicographically on rounded
    // entries so equal eigenvalues always come out in the same basis order.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end] - eigenvalues[end - 1] < EIGENVALUE_TIE_GAP {
            end += 1;
        }
        if end - start > 1 {
            columns[start..end].sort_by(|a, b| {
                for (x, y) in a.iter().zip(b.iter()) {
                    let (rx, ry) = (round_entry(*x), round_entry(*y));
                    match rx.total_cmp(&ry) {
                        std::cmp::Ordering::Equal => continue,
                        other => return other,
                    }
                }
                std::cmp::Ordering::Equal
            });
        }
        start = end;
    }

    let eigenvectors = DMatrix::from_columns(&columns);
    Ok(SpectralBasis {
        eigenvalues,
        eigenvectors,
    })
}

fn fix_sign(col: &mut DVector<f64>) {
    for &v in col.iter() {
        if v.abs() > SIGN_PIVOT_THRESHOLD {
            if v < 0.0 {
                *col *= -1.0;
            }
            return;
        }
    }
}

fn round_entry(x: f64) -> f64 {
    (x / EIGENVALUE_TIE_GAP).round() * EIGENVALUE_TIE_GAP
}
