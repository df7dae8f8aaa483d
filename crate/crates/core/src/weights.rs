//! Doubly stochastic consensus weights.
//!
//! A valid matrix has unit row and column sums, a strictly positive diagonal,
//! and `a_ij > 0` exactly on the edges of the communication graph.

use thiserror::Error;

use crate::graph::{check_connected, GraphTopology};
use crate::spectral::{self, Sigma2Options, SpectralError};

/// Absolute slack allowed on each row and column sum.
pub const DEFAULT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("matrix is {rows}x{cols} but the graph has {n} nodes")]
    DimensionMismatch { rows: usize, cols: usize, n: usize },
    #[error("row {row} sums to {sum}, expected 1")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("column {col} sums to {sum}, expected 1")]
    ColSumViolation { col: usize, sum: f64 },
    #[error("diagonal entry ({0},{0}) is not positive")]
    ZeroDiagonal(usize),
    #[error("entry ({row},{col}) = {value} does not match the edge set")]
    SparsityMismatch { row: usize, col: usize, value: f64 },
    #[error("weights require a connected graph")]
    Disconnected,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl WeightError {
    pub fn kind(&self) -> &'static str {
        match self {
            WeightError::DimensionMismatch { .. } => "DimensionMismatch",
            WeightError::RowSumViolation { .. } => "RowSumViolation",
            WeightError::ColSumViolation { .. } => "ColSumViolation",
            WeightError::ZeroDiagonal(_) => "ZeroDiagonal",
            WeightError::SparsityMismatch { .. } => "SparsityMismatch",
            WeightError::Disconnected => "Disconnected",
            WeightError::Parse { .. } => "ParseError",
            WeightError::Spectral(_) => "NonConvergence",
        }
    }
}

/// Validated consensus matrix together with its second-largest singular value.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<f64>,
    sigma2: f64,
}

impl WeightMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Matrix text: one row per line, entries separated by single spaces,
    /// written with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Metropolis rule: `a_ij = 1/(1 + max(d_i, d_j))` on edges, remainder on the
/// diagonal. Only local degrees are needed.
pub fn metropolis_weights(g: &GraphTopology) -> Result<WeightMatrix, WeightError> {
    build_from_edge_weight(g, |i, j| {
        1.0 / (1.0 + g.degree(i).max(g.degree(j)) as f64)
    })
}

/// Lazy max-degree rule: `a_ij = 1/(2·d_max)` on edges.
pub fn lazy_max_degree_weights(g: &GraphTopology) -> Result<WeightMatrix, WeightError> {
    let w = 1.0 / (2.0 * g.max_degree() as f64);
    build_from_edge_weight(g, |_, _| w)
}

fn build_from_edge_weight(
    g: &GraphTopology,
    weight: impl Fn(usize, usize) -> f64,
) -> Result<WeightMatrix, WeightError> {
    if !check_connected(g) {
        return Err(WeightError::Disconnected);
    }
    let n = g.node_count();
    let mut entries = vec![0.0; n * n];
    for (i, j) in g.edges() {
        let w = weight(i, j);
        entries[i * n + j] = w;
        entries[j * n + i] = w;
    }
    for i in 0..n {
        let off: f64 = g.neighbors(i).iter().map(|&j| entries[i * n + j]).sum();
        entries[i * n + i] = 1.0 - off;
    }
    let rows: Vec<Vec<f64>> = entries.chunks(n).map(<[f64]>::to_vec).collect();
    validate_weight_matrix(&rows, g)
}

/// Validates a user-supplied matrix against `g` with the default tolerance.
pub fn validate_weight_matrix(
    rows: &[Vec<f64>],
    g: &GraphTopology,
) -> Result<WeightMatrix, WeightError> {
    validate_weight_matrix_with(rows, g, DEFAULT_SUM_TOLERANCE, &Sigma2Options::default())
}

pub fn validate_weight_matrix_with(
    rows: &[Vec<f64>],
    g: &GraphTopology,
    tolerance: f64,
    opts: &Sigma2Options,
) -> Result<WeightMatrix, WeightError> {
    let n = g.node_count();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(WeightError::DimensionMismatch {
            rows: rows.len(),
            cols,
            n,
        });
    }
    for (i, row) in rows.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if i == j {
                if a.is_nan() || a <= 0.0 {
                    return Err(WeightError::ZeroDiagonal(i));
                }
            } else if g.has_edge(i, j) != (a > 0.0) || (!g.has_edge(i, j) && a != 0.0) {
                return Err(WeightError::SparsityMismatch {
                    row: i,
                    col: j,
                    value: a,
                });
            }
        }
    }
    for (i, row) in rows.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(WeightError::RowSumViolation { row: i, sum });
        }
    }
    for j in 0..n {
        let sum: f64 = rows.iter().map(|r| r[j]).sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(WeightError::ColSumViolation { col: j, sum });
        }
    }
    let entries: Vec<f64> = rows.iter().flatten().copied().collect();
    let sigma2 = spectral::sigma2(&entries, n, opts)?;
    Ok(WeightMatrix { n, entries, sigma2 })
}

/// Parses `n` lines of `n` whitespace-separated decimals. Blank lines and
/// `#` comments are skipped.
pub fn parse_weight_matrix(text: &str) -> Result<Vec<Vec<f64>>, WeightError> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| WeightError::Parse {
                    line: idx + 1,
                    reason: format!("invalid number {tok:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge() -> GraphTopology {
        GraphTopology::new(2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn metropolis_on_path() {
        let w = metropolis_weights(&GraphTopology::path(3).unwrap()).unwrap();
        let t = 1.0 / 3.0;
        assert_eq!(w.get(0, 1), t);
        assert_eq!(w.get(1, 2), t);
        assert!((w.get(0, 0) - 2.0 * t).abs() < 1e-15);
        assert!((w.get(2, 2) - 2.0 * t).abs() < 1e-15);
        assert!((w.get(1, 1) - t).abs() < 1e-15);
        assert_eq!(w.get(0, 2), 0.0);
        assert!((w.sigma2() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn metropolis_on_triangle_is_uniform() {
        let w = metropolis_weights(&GraphTopology::complete(3).unwrap()).unwrap();
        for &a in w.entries() {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(w.sigma2() < 1e-12);
    }

    #[test]
    fn metropolis_on_single_edge() {
        let w = metropolis_weights(&edge()).unwrap();
        assert_eq!(w.to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    }

    #[test]
    fn metropolis_rejects_disconnected() {
        let g = GraphTopology::new(3, &[(0, 1)]).unwrap();
        assert_eq!(metropolis_weights(&g), Err(WeightError::Disconnected));
    }

    #[test]
    fn lazy_max_degree_is_valid() {
        let w = lazy_max_degree_weights(&GraphTopology::cycle(6).unwrap()).unwrap();
        assert_eq!(w.get(0, 1), 0.25);
        assert_eq!(w.get(0, 0), 0.5);
    }

    #[test]
    fn accepts_averaging_matrix() {
        let w = validate_weight_matrix(&[vec![0.5, 0.5], vec![0.5, 0.5]], &edge()).unwrap();
        assert!(w.sigma2().abs() < 1e-15);
        let w = validate_weight_matrix(&[vec![0.75, 0.25], vec![0.25, 0.75]], &edge()).unwrap();
        assert!((w.sigma2() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn identity_on_edge_is_sparsity_mismatch() {
        let err = validate_weight_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]], &edge()).unwrap_err();
        assert!(matches!(err, WeightError::SparsityMismatch { row: 0, col: 1, .. }));
    }

    #[test]
    fn names_offending_index() {
        let g = GraphTopology::path(3).unwrap();
        let bad_row = vec![
            vec![0.5, 0.4, 0.0],
            vec![0.4, 0.2, 0.4],
            vec![0.0, 0.4, 0.6],
        ];
        assert!(matches!(
            validate_weight_matrix(&bad_row, &g),
            Err(WeightError::RowSumViolation { row: 0, .. })
        ));
        let bad_col = vec![
            vec![0.6, 0.4, 0.0],
            vec![0.4, 0.2, 0.4],
            vec![0.0, 0.5, 0.5],
        ];
        assert!(matches!(
            validate_weight_matrix(&bad_col, &g),
            Err(WeightError::ColSumViolation { col: 1, .. })
        ));
        let zero_diag = vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.5, 0.5],
        ];
        assert_eq!(
            validate_weight_matrix(&zero_diag, &g),
            Err(WeightError::ZeroDiagonal(1))
        );
        let off_edge = vec![
            vec![0.5, 0.4, 0.1],
            vec![0.4, 0.2, 0.4],
            vec![0.1, 0.4, 0.5],
        ];
        assert!(matches!(
            validate_weight_matrix(&off_edge, &g),
            Err(WeightError::SparsityMismatch { row: 0, col: 2, .. })
        ));
        assert!(matches!(
            validate_weight_matrix(&[vec![1.0]], &g),
            Err(WeightError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let w = metropolis_weights(&GraphTopology::cycle(5).unwrap()).unwrap();
        let rows = parse_weight_matrix(&w.to_text()).unwrap();
        let back = validate_weight_matrix(&rows, &GraphTopology::cycle(5).unwrap()).unwrap();
        assert_eq!(back, w);
    }
}
