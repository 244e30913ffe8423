use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extrema::{checked_columns, ExtremaTable, DEFAULT_ENTRY_CAP};
use crate::error::{FifError, Result};
use crate::fif::NormalizedSystem;

/// Dimension above which `matvec` splits work across threads.
const PARALLEL_DIM: usize = 4096;

/// Where a sampled matrix takes `S` inside each interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleRule {
    LeftEndpoint,
    RightEndpoint,
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// Built from interval maxima of `|S|`.
    Upper,
    /// Built from interval minima of `|S|`.
    Lower,
    Sampled(SampleRule),
}

/// A level-`k` vertical scaling matrix in compact `N x N^k` form.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingMatrix {
    n: usize,
    level: u32,
    kind: MatrixKind,
    entries: Vec<f64>,
}

impl ScalingMatrix {
    /// Wraps a row-major `N x N^k` entry table.
    pub fn from_entries(n: usize, level: u32, kind: MatrixKind, entries: Vec<f64>) -> Result<Self> {
        if n < 2 || level < 1 {
            return Err(FifError::MalformedInput("need N >= 2 and level >= 1".into()));
        }
        let cols = n
            .checked_pow(level)
            .ok_or_else(|| FifError::MalformedInput("matrix dimension overflows".into()))?;
        if entries.len() != n * cols {
            return Err(FifError::MalformedInput(format!(
                "expected {} entries, got {}",
                n * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(FifError::MalformedInput(
                "matrix entries must be finite and nonnegative".into(),
            ));
        }
        Ok(ScalingMatrix {
            n,
            level,
            kind,
            entries,
        })
    }

    /// The pair `(M_k, M'_k)` defined by a table.
    pub fn from_table(table: ExtremaTable) -> (ScalingMatrix, ScalingMatrix) {
        let (n, level) = (table.n(), table.level());
        let (upper, lower) = table.into_parts();
        (
            ScalingMatrix {
                n,
                level,
                kind: MatrixKind::Upper,
                entries: upper,
            },
            ScalingMatrix {
                n,
                level,
                kind: MatrixKind::Lower,
                entries: lower,
            },
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// Row-major `N x N^k` entry table.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Side of the implied square matrix, `N^k`.
    pub fn dim(&self) -> usize {
        self.entries.len() / self.n
    }

    /// `out = M v` without forming `M`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.matvec_into(v, &mut out)?;
        Ok(out)
    }

    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let dim = self.dim();
        if v.len() != dim || out.len() != dim {
            return Err(FifError::MalformedInput(format!(
                "vector lengths {} / {} do not match dimension {dim}",
                v.len(),
                out.len()
            )));
        }
        let n = self.n;
        let block = dim / n;
        let fill = |(i, rows): (usize, &mut [f64])| {
            let row = &self.entries[i * dim..(i + 1) * dim];
            for (l, slot) in rows.iter_mut().enumerate() {
                let span = l * n..(l + 1) * n;
                *slot = row[span.clone()].iter().zip(&v[span]).map(|(a, b)| a * b).sum();
            }
        };
        if dim >= PARALLEL_DIM {
            out.par_chunks_mut(block).enumerate().for_each(fill);
        } else {
            out.chunks_mut(block).enumerate().for_each(fill);
        }
        Ok(())
    }

    /// Row-major dense `N^k x N^k` matrix. Intended for small levels.
    pub fn to_dense(&self) -> Vec<f64> {
        let dim = self.dim();
        let block = dim / self.n;
        let mut dense = vec![0.0; dim * dim];
        for i in 0..self.n {
            for l in 0..block {
                let row = i * block + l;
                for j in l * self.n..(l + 1) * self.n {
                    dense[row * dim + j] = self.entries[i * dim + j];
                }
            }
        }
        dense
    }

    /// Largest column sum of the implied matrix (`max_j sum_i entries[i][j]`).
    pub fn max_column_sum(&self) -> f64 {
        let dim = self.dim();
        (0..dim)
            .map(|j| (0..self.n).map(|i| self.entries[i * dim + j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest column sum of the implied matrix.
    pub fn min_column_sum(&self) -> f64 {
        let dim = self.dim();
        (0..dim)
            .map(|j| (0..self.n).map(|i| self.entries[i * dim + j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

/// The sampled matrix `T_k`: `|S|` taken at one point of every `I^k_{i,j}`.
pub fn build_sampled_matrix(system: &NormalizedSystem, level: u32, rule: SampleRule) -> Result<ScalingMatrix> {
    let n = system.n();
    let cols = checked_columns(n, level, DEFAULT_ENTRY_CAP)?;
    let den = (n * cols) as u64;
    let entries = (0..n * cols)
        .into_par_iter()
        .map(|flat| {
            let start = flat as u64;
            match rule {
                SampleRule::LeftEndpoint => system.scaling().abs_at_rational(start, den),
                SampleRule::RightEndpoint => system.scaling().abs_at_rational(start + 1, den),
                SampleRule::Midpoint => system.scaling().abs_at_rational(2 * start + 1, 2 * den),
            }
        })
        .collect();
    Ok(ScalingMatrix {
        n,
        level,
        kind: MatrixKind::Sampled(rule),
        entries,
    })
}
