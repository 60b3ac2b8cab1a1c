//! Brute-force dense truncation checks for kernel and cokernel dimensions.
//!
//! Deliberately independent of the certified solver in [`crate::fredholm`]:
//! matrices are read entry by entry through [`BpfMatrix::entry`] and ranks come
//! from plain rational Gaussian elimination.

use serde::Serialize;

use num_traits::Zero;

use crate::bpf::BpfMatrix;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilizationReport {
    pub sizes: Vec<u64>,
    pub nullities: Vec<u64>,
    pub coranks: Vec<u64>,
    pub stabilized: bool,
    pub window: usize,
    /// Trailing `nullity − corank` once stabilized.
    pub index: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("stabilization window must be at least 2, got {0}")]
    WindowTooSmall(usize),
}

/// Rows needed so that the block covers every nonzero entry of columns `1..=n`.
fn row_extent(a: &BpfMatrix, n: u64) -> u64 {
    let band = a.max_offset().map_or(0, |d| d.max(0) as u64);
    (n + band).max(a.finite().max_row())
}

/// Columns needed so that the block covers every nonzero entry of rows `1..=n`.
fn col_extent(a: &BpfMatrix, n: u64) -> u64 {
    let band = a.min_offset().map_or(0, |d| (-d).max(0) as u64);
    (n + band).max(a.finite().max_col())
}

fn entries(a: &BpfMatrix, rows: u64, cols: u64) -> Vec<Vec<Rational>> {
    (1..=rows)
        .map(|i| (1..=cols).map(|j| a.entry(i, j)).collect())
        .collect()
}

fn block(full: &[Vec<Rational>], rows: u64, cols: u64) -> Vec<Vec<Rational>> {
    full[..rows as usize]
        .iter()
        .map(|r| r[..cols as usize].to_vec())
        .collect()
}

/// Rank by row reduction over ℚ.
fn rank(mut m: Vec<Vec<Rational>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&k| !m[k][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r].clone();
        let nz: Vec<usize> = (c..cols).filter(|&k| !pivot[k].is_zero()).collect();
        for row in m.iter_mut().skip(r + 1) {
            if row[c].is_zero() {
                continue;
            }
            let f = &row[c] / &pivot[c];
            for &k in &nz {
                row[k] -= &f * &pivot[k];
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// `n − rank` of the block covering columns `1..=n`.
pub fn dense_nullity(a: &BpfMatrix, n: u64) -> u64 {
    let rows = row_extent(a, n);
    n - rank(entries(a, rows, n)) as u64
}

/// `n − rank` of the block covering rows `1..=n`.
pub fn dense_corank(a: &BpfMatrix, n: u64) -> u64 {
    let cols = col_extent(a, n);
    n - rank(entries(a, n, cols)) as u64
}

/// Sweeps every size `1..=max_n`. Stabilized when both the nullity and the
/// corank are constant over the trailing `window` sizes.
pub fn stabilized_index(
    a: &BpfMatrix,
    max_n: u64,
    window: usize,
) -> Result<StabilizationReport, OracleError> {
    if window < 2 {
        return Err(OracleError::WindowTooSmall(window));
    }
    let rows = row_extent(a, max_n).max(max_n);
    let cols = col_extent(a, max_n).max(max_n);
    let full = entries(a, rows, cols);

    let mut report = StabilizationReport {
        sizes: Vec::new(),
        nullities: Vec::new(),
        coranks: Vec::new(),
        stabilized: false,
        window,
        index: None,
    };
    for n in 1..=max_n {
        let nullity = n - rank(block(&full, row_extent(a, n), n)) as u64;
        let corank = n - rank(block(&full, n, col_extent(a, n))) as u64;
        report.sizes.push(n);
        report.nullities.push(nullity);
        report.coranks.push(corank);
    }
    let len = report.sizes.len();
    if len >= window {
        let tail = |v: &[u64]| v[len - window..].windows(2).all(|w| w[0] == w[1]);
        report.stabilized = tail(&report.nullities) && tail(&report.coranks);
    }
    if report.stabilized {
        report.index = Some(report.nullities[len - 1] as i64 - report.coranks[len - 1] as i64);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullity_examples() {
        assert_eq!(dense_nullity(&BpfMatrix::shift(-1), 5), 1);
        assert_eq!(dense_nullity(&BpfMatrix::identity(), 8), 0);
        assert_eq!(dense_nullity(&BpfMatrix::shift(-2), 6), 2);
    }

    #[test]
    fn corank_examples() {
        assert_eq!(dense_corank(&BpfMatrix::shift(1), 5), 1);
        let d2 = BpfMatrix::geometric_diagonal(Rational::from_integer(2.into())).unwrap();
        assert_eq!(dense_corank(&d2, 6), 0);
        let m = &BpfMatrix::identity() - &BpfMatrix::unit(1, 1);
        assert_eq!(dense_corank(&m, 4), 1);
    }

    #[test]
    fn stabilization_examples() {
        let r = stabilized_index(&BpfMatrix::shift(1), 64, 16).unwrap();
        assert!(r.stabilized);
        assert_eq!(r.index, Some(-1));
        let r = stabilized_index(&BpfMatrix::weighted_down(), 64, 16).unwrap();
        assert_eq!(r.index, Some(1));
        let zero = BpfMatrix::scalar(Rational::zero());
        let r = stabilized_index(&zero, 16, 4).unwrap();
        assert!(!r.stabilized);
        assert_eq!(r.nullities, (1..=16).collect::<Vec<_>>());
        assert!(stabilized_index(&zero, 16, 1).is_err());
    }
}
