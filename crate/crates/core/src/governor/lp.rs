//! Small dense LP solver: maximize `c'z` subject to `G z <= g` with `z` free.
//!
//! Two-phase tableau simplex with Bland's rule. Free variables are split as
//! `z = z+ - z-`, every row gets a slack, and rows with a negative right-hand
//! side are flipped and given an artificial variable for phase one.

use nalgebra::{DMatrix, DVector};

pub const LP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("objective is unbounded above")]
    Unbounded,
    #[error("dimension mismatch")]
    Dimension,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub argmax: DVector<f64>,
}

struct Tableau {
    rows: usize,
    cols: usize,
    // row-major, `cols + 1` entries per row, last entry is the right-hand side
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let w = self.cols + 1;
        let p = self.at(r, c);
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for (v, pr) in self.t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pr) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for maximizing `cost . y` (last entry: minus the
    /// current objective value).
    fn objective_row(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj = cost.to_vec();
        obj.push(0.0);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (j, o) in obj.iter_mut().enumerate() {
                    *o -= cb * self.at(i, j);
                }
            }
        }
        obj
    }

    /// Runs simplex iterations over columns `< allowed`.
    fn optimize(&mut self, obj: &mut [f64], allowed: usize) -> Result<(), LpError> {
        loop {
            let Some(c) = (0..allowed).find(|&j| obj[j] > LP_TOLERANCE) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > LP_TOLERANCE {
                    let ratio = self.rhs(i) / a;
                    let cand = (ratio, self.basis[i], i);
                    best = match best {
                        None => Some(cand),
                        Some(b) if ratio < b.0 - LP_TOLERANCE => Some(cand),
                        Some(b) if ratio <= b.0 + LP_TOLERANCE && cand.1 < b.1 => Some(cand),
                        keep => keep,
                    };
                }
            }
            let Some((_, _, r)) = best else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c, obj);
        }
    }
}

/// Maximizes `c'z` over `{z : G z <= g}`.
pub fn lp_max(c: &DVector<f64>, g_mat: &DMatrix<f64>, g: &DVector<f64>) -> Result<LpSolution, LpError> {
    let n = c.len();
    let rows = g_mat.nrows();
    if g_mat.ncols() != n || g.len() != rows {
        return Err(LpError::Dimension);
    }
    let flipped: Vec<bool> = g.iter().map(|&v| v < 0.0).collect();
    let n_art = flipped.iter().filter(|&&f| f).count();
    let slack0 = 2 * n;
    let art0 = slack0 + rows;
    let cols = art0 + n_art;
    let w = cols + 1;

    let mut t = vec![0.0; rows * w];
    let mut basis = vec![0; rows];
    let mut next_art = art0;
    for i in 0..rows {
        let sign = if flipped[i] { -1.0 } else { 1.0 };
        let row = &mut t[i * w..(i + 1) * w];
        for j in 0..n {
            row[j] = sign * g_mat[(i, j)];
            row[n + j] = -sign * g_mat[(i, j)];
        }
        row[slack0 + i] = sign;
        row[cols] = sign * g[i];
        if flipped[i] {
            row[next_art] = 1.0;
            basis[i] = next_art;
            next_art += 1;
        } else {
            basis[i] = slack0 + i;
        }
    }
    let mut tab = Tableau { rows, cols, t, basis };

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        for v in &mut cost[art0..] {
            *v = -1.0;
        }
        let mut obj = tab.objective_row(&cost);
        tab.optimize(&mut obj, cols)?;
        let infeasibility = obj[cols];
        if infeasibility > LP_TOLERANCE * (1.0 + g.amax()) {
            return Err(LpError::Infeasible);
        }
        drive_out_artificials(&mut tab, art0);
    }

    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = c[j];
        cost[n + j] = -c[j];
    }
    let mut obj = tab.objective_row(&cost);
    tab.optimize(&mut obj, art0)?;

    let mut y = vec![0.0; cols];
    for i in 0..tab.rows {
        y[tab.basis[i]] = tab.rhs(i);
    }
    let argmax = DVector::from_fn(n, |j, _| y[j] - y[n + j]);
    Ok(LpSolution {
        value: c.dot(&argmax),
        argmax,
    })
}

/// Pivots basic artificials (at zero level after phase one) out of the basis,
/// dropping rows that turn out to be redundant.
fn drive_out_artificials(tab: &mut Tableau, art0: usize) {
    let mut dummy = vec![0.0; tab.cols + 1];
    let mut i = 0;
    while i < tab.rows {
        if tab.basis[i] < art0 {
            i += 1;
            continue;
        }
        match (0..art0).find(|&j| tab.at(i, j).abs() > LP_TOLERANCE) {
            Some(j) => {
                tab.pivot(i, j, &mut dummy);
                i += 1;
            }
            None => {
                let w = tab.cols + 1;
                tab.t.drain(i * w..(i + 1) * w);
                tab.basis.remove(i);
                tab.rows -= 1;
            }
        }
    }
}
