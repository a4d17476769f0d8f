//! Sparse LU factorization of a simplex basis with Markowitz pivoting.
//!
//! The factorization is stored as a sequence of elimination steps. Step `k`
//! pivots on `(row, col)`; its L part holds the multipliers used to clear the
//! pivot column below the pivot and its U part holds the remaining entries of
//! the pivot row. Columns are basis positions.

/// Relative threshold a pivot must reach within its column.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Absolute magnitude below which an entry is treated as zero.
const ZERO_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
struct Step {
    row: usize,
    col: usize,
    diag: f64,
    upper: Vec<(usize, f64)>,
    lower: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    steps: Vec<Step>,
}

/// The basis was rank deficient. `positions` are the basis positions that
/// could not be pivoted and `rows` the rows left without a pivot; both have
/// the same length.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

impl LuFactors {
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut active: Vec<Vec<(usize, f64)>> = columns
            .iter()
            .map(|c| c.iter().copied().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        let mut row_pattern: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (c, col) in active.iter().enumerate() {
            for &(r, _) in col {
                row_pattern[r].push(c);
            }
        }
        let mut col_done = vec![false; m];
        let mut row_done = vec![false; m];
        let mut steps = Vec::with_capacity(m);

        for _ in 0..m {
            // Markowitz search with threshold pivoting.
            let mut best: Option<(usize, usize, usize)> = None; // (cost, row, col)
            'search: for c in 0..m {
                if col_done[c] || active[c].is_empty() {
                    continue;
                }
                let col_max = active[c].iter().fold(0.0f64, |acc, &(_, v)| acc.max(v.abs()));
                if col_max < ZERO_TOL {
                    continue;
                }
                let col_cost = active[c].len() - 1;
                for &(r, v) in &active[c] {
                    if v.abs() < PIVOT_THRESHOLD * col_max {
                        continue;
                    }
                    let cost = (row_pattern[r].len() - 1) * col_cost;
                    if best.is_none_or(|(b, _, _)| cost < b) {
                        best = Some((cost, r, c));
                        if cost == 0 {
                            break 'search;
                        }
                    }
                }
            }
            let Some((_, r, c)) = best else { break };

            let diag = active[c]
                .iter()
                .find(|&&(i, _)| i == r)
                .map(|&(_, v)| v)
                .unwrap();
            col_done[c] = true;
            row_done[r] = true;

            let mut upper = Vec::new();
            for &j in &row_pattern[r] {
                if j == c {
                    continue;
                }
                let pos = active[j].iter().position(|&(i, _)| i == r).unwrap();
                upper.push((j, active[j][pos].1));
                active[j].swap_remove(pos);
            }
            row_pattern[r].clear();

            let column = std::mem::take(&mut active[c]);
            let mut lower = Vec::new();
            for (i, v) in column {
                if i == r {
                    continue;
                }
                lower.push((i, v / diag));
                row_pattern[i].retain(|&j| j != c);
            }

            for &(i, l) in &lower {
                for &(j, u) in &upper {
                    let delta = -l * u;
                    match active[j].iter().position(|&(row, _)| row == i) {
                        Some(pos) => {
                            active[j][pos].1 += delta;
                            if active[j][pos].1.abs() < DROP_TOL {
                                active[j].swap_remove(pos);
                                row_pattern[i].retain(|&col| col != j);
                            }
                        }
                        None => {
                            active[j].push((i, delta));
                            row_pattern[i].push(j);
                        }
                    }
                }
            }

            steps.push(Step {
                row: r,
                col: c,
                diag,
                upper,
                lower,
            });
        }

        if steps.len() < m {
            return Err(Singular {
                positions: (0..m).filter(|&c| !col_done[c]).collect(),
                rows: (0..m).filter(|&r| !row_done[r]).collect(),
            });
        }
        Ok(Self { m, steps })
    }

    /// Solves `B x = b`; `b` is indexed by row, the result by basis position.
    pub fn solve(&self, mut b: Vec<f64>) -> Vec<f64> {
        for step in &self.steps {
            let pivot = b[step.row];
            if pivot != 0.0 {
                for &(i, l) in &step.lower {
                    b[i] -= l * pivot;
                }
            }
        }
        let mut x = vec![0.0; self.m];
        for step in self.steps.iter().rev() {
            let mut s = b[step.row];
            for &(j, u) in &step.upper {
                s -= u * x[j];
            }
            x[step.col] = s / step.diag;
        }
        x
    }

    /// Solves `Bᵀ y = d`; `d` is indexed by basis position, the result by row.
    pub fn solve_transposed(&self, mut d: Vec<f64>) -> Vec<f64> {
        let mut z = vec![0.0; self.m];
        for step in &self.steps {
            let w = d[step.col] / step.diag;
            if w != 0.0 {
                for &(j, u) in &step.upper {
                    d[j] -= u * w;
                }
            }
            z[step.row] = w;
        }
        for step in self.steps.iter().rev() {
            let mut s = z[step.row];
            for &(i, l) in &step.lower {
                s -= l * z[i];
            }
            z[step.row] = s;
        }
        z
    }
}
