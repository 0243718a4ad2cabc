//! Small dense two-phase simplex for the handful of LPs the geometry needs
//! (Chebyshev centers, feasibility, min-∞-norm points). Sized for a few dozen
//! constraints; uses Bland's rule so it cannot cycle.

const TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    blocked: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.obj.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Returns false when the objective is unbounded.
    fn optimize(&mut self) -> bool {
        let n = self.width();
        loop {
            let entering = (0..n).find(|&j| !self.blocked[j] && self.obj[j] < -TOL);
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > TOL {
                    let ratio = row[n] / row[c];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - TOL
                                || (ratio <= br + TOL && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Maximizes `cᵀx` subject to `A x ≤ b` over free `x`.
///
/// `a` holds the constraint rows back to back, `b.len()` rows of `c.len()`
/// entries each.
pub fn maximize(c: &[f64], a: &[f64], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = b.len();
    assert_eq!(a.len(), n * m, "constraint matrix shape");
    let n_art = b.iter().filter(|&&bi| bi < 0.0).count();
    // columns: x⁺ (n), x⁻ (n), slacks (m), artificials (n_art), rhs
    let width = 2 * n + m + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = 0;
    for i in 0..m {
        let mut row = vec![0.0; width + 1];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[i * n + j];
            row[n + j] = -sign * a[i * n + j];
        }
        row[2 * n + i] = sign;
        row[width] = sign * b[i];
        if b[i] < 0.0 {
            let col = 2 * n + m + art;
            row[col] = 1.0;
            basis.push(col);
            art += 1;
        } else {
            basis.push(2 * n + i);
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        obj: vec![0.0; width + 1],
        basis,
        blocked: vec![false; width],
    };

    if n_art > 0 {
        for j in 2 * n + m..width {
            t.obj[j] = 1.0;
        }
        for i in 0..m {
            if t.basis[i] >= 2 * n + m {
                for j in 0..=width {
                    t.obj[j] -= t.rows[i][j];
                }
            }
        }
        t.optimize();
        let scale = 1.0 + b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if t.obj[width] < -1e-9 * scale {
            return LpOutcome::Infeasible;
        }
        for i in 0..m {
            if t.basis[i] >= 2 * n + m {
                if let Some(j) = (0..2 * n + m).find(|&j| t.rows[i][j].abs() > 1e-9) {
                    t.pivot(i, j);
                }
            }
        }
        for j in 2 * n + m..width {
            t.blocked[j] = true;
        }
    }

    t.obj.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n {
        t.obj[j] = -c[j];
        t.obj[n + j] = c[j];
    }
    for i in 0..m {
        let col = t.basis[i];
        let f = t.obj[col];
        if f != 0.0 {
            for j in 0..=width {
                t.obj[j] -= f * t.rows[i][j];
            }
        }
    }
    if !t.optimize() {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &col) in t.basis.iter().enumerate() {
        let v = t.rows[i][width];
        if col < n {
            x[col] += v;
        } else if col < 2 * n {
            x[col - n] -= v;
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}
