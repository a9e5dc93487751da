use ndarray::{Array2, ArrayView2};

use super::TextAttributedGraph;

/// Compressed sparse row matrix, columns sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v).sum()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// `self · rhs` for a dense right-hand side.
    pub fn matmul(&self, rhs: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(rhs.nrows(), self.n, "sparse matmul shape mismatch");
        let mut out = Array2::zeros((self.n, rhs.ncols()));
        for (i, mut out_row) in out.rows_mut().into_iter().enumerate() {
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &rhs.row(j));
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "sparse matvec shape mismatch");
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Builds `A + I` for the given canonical edge list, with entry values
    /// supplied by `weight(i, j, degree)` where degrees count the self-loop.
    fn with_self_loops(n: usize, edges: &[(usize, usize)], weight: impl Fn(usize, usize, &[f64]) -> f64) -> Self {
        let mut neighbours: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(i, j) in edges {
            neighbours[i].push(j);
            neighbours[j].push(i);
        }
        let degree: Vec<f64> = neighbours.iter().map(|nb| nb.len() as f64).collect();

        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n + 2 * edges.len());
        let mut values = Vec::with_capacity(n + 2 * edges.len());
        indptr.push(0);
        for (i, nb) in neighbours.iter_mut().enumerate() {
            nb.sort_unstable();
            for &j in nb.iter() {
                indices.push(j);
                values.push(weight(i, j, &degree));
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }
}

/// Propagation operators over `A + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: CsrMatrix,
}

impl NormalizedAdjacency {
    /// Symmetric operator `D̃^{-1/2} (A + I) D̃^{-1/2}`.
    pub fn symmetric(graph: &TextAttributedGraph) -> Self {
        Self::symmetric_from_edges(graph.node_count(), graph.edges())
    }

    pub fn symmetric_from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        // The product di * dj commutes, so (i, j) and (j, i) are bit-identical.
        let matrix = CsrMatrix::with_self_loops(n, edges, |i, j, d| 1.0 / (d[i] * d[j]).sqrt());
        Self { matrix }
    }

    /// Row-stochastic operator `D̃^{-1} (A + I)`.
    pub fn row_stochastic(graph: &TextAttributedGraph) -> Self {
        Self::row_stochastic_from_edges(graph.node_count(), graph.edges())
    }

    pub fn row_stochastic_from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let matrix = CsrMatrix::with_self_loops(n, edges, |i, _, d| 1.0 / d[i]);
        Self { matrix }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.n
    }
}

impl std::ops::Deref for NormalizedAdjacency {
    type Target = CsrMatrix;

    fn deref(&self) -> &CsrMatrix {
        &self.matrix
    }
}
