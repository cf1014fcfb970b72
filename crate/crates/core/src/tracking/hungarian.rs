//! Minimum-cost linear assignment (Kuhn-Munkres with potentials, O(n^3)).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Column assigned to each row, `None` for rows left over when there are
    /// more rows than columns.
    pub row_to_col: Vec<Option<usize>>,
    /// Sum of the costs of the real (non-padding) assigned cells.
    pub cost: f64,
}

impl Assignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col.iter().enumerate().filter_map(|(r, c)| c.map(|c| (r, c)))
    }
}

/// Optimal assignment for a rectangular matrix of non-negative costs.
/// Padding cells use the largest matrix entry.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment> {
    let pad = cost.iter().flatten().copied().fold(0.0, f64::max);
    hungarian_padded(cost, pad)
}

/// As [`hungarian`], padding the matrix to square with `pad`.
///
/// Rows are inserted in index order and ties are broken towards the lowest
/// column, so equal-cost optima resolve deterministically.
pub fn hungarian_padded(cost: &[Vec<f64>], pad: f64) -> Result<Assignment> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Ok(Assignment { row_to_col: vec![None; rows], cost: 0.0 });
    }
    if cost.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParam("cost matrix rows differ in length".into()));
    }
    if cost.iter().flatten().any(|&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(Error::InvalidParam("cost matrix entries must be finite and non-negative".into()));
    }

    let n = rows.max(cols);
    let at = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            cost[i][j]
        } else {
            pad
        }
    };

    // 1-indexed potentials; index 0 is the virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![None; rows];
    let mut total = 0.0;
    for (c, &o) in owner.iter().enumerate().skip(1).map(|(j, o)| (j - 1, o)) {
        let r = o - 1;
        if r < rows && c < cols {
            row_to_col[r] = Some(c);
            total += cost[r][c];
        }
    }
    Ok(Assignment { row_to_col, cost: total })
}
