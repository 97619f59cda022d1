//! A dense two-phase revised simplex for the moment/minimax linear programs.
//!
//! The programs solved here have few rows (K + 2 for degree-K moment
//! matching) and up to a few thousand columns, so an explicitly maintained
//! basis inverse is simple, fast, and easy to keep honest with periodic
//! refactorization.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("linear program is infeasible (residual infeasibility {0:.3e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
    #[error("basis became singular during refactorization")]
    SingularBasis,
    #[error("malformed LP data: {0}")]
    BadShape(&'static str),
}

/// `max c'x` subject to `A x = b`, `x >= 0`, with `A` stored by columns.
/// All right-hand sides must be nonnegative.
pub(crate) struct StandardLp<'a> {
    pub cols: &'a [Vec<f64>],
    pub b: &'a [f64],
    pub c: &'a [f64],
}

pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual vector `y` with `y'A_j >= c_j` at optimality.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;

pub(crate) fn solve(lp: &StandardLp) -> Result<LpSolution, LpError> {
    let m = lp.b.len();
    let n = lp.cols.len();
    if m == 0 || n == 0 {
        return Err(LpError::BadShape("empty program"));
    }
    if lp.c.len() != n || lp.cols.iter().any(|col| col.len() != m) {
        return Err(LpError::BadShape("inconsistent dimensions"));
    }
    if lp.b.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(LpError::BadShape("right-hand side must be nonnegative"));
    }

    let mut state = State::new(lp, m, n);

    // Phase 1: maximize minus the sum of artificials.
    let phase1_cost: Vec<f64> = vec![0.0; n];
    state.run(lp, &phase1_cost, true)?;
    let infeas: f64 = state
        .basis
        .iter()
        .zip(state.xb.iter())
        .filter(|(j, _)| **j >= n)
        .map(|(_, v)| v.max(0.0))
        .sum();
    let scale = 1.0 + lp.b.iter().map(|v| v.abs()).sum::<f64>();
    if infeas > 1e-7 * scale {
        return Err(LpError::Infeasible(infeas));
    }
    state.drive_out_artificials(lp);

    // Phase 2 with the real objective; artificials stay barred.
    state.run(lp, lp.c, false)?;
    state.refactorize(lp)?;

    let mut x = vec![0.0; n];
    for (slot, &j) in state.basis.iter().enumerate() {
        if j < n {
            x[j] = state.xb[slot];
        }
    }
    let objective: f64 = x.iter().zip(lp.c.iter()).map(|(xi, ci)| xi * ci).sum();
    let duals = state.duals(lp.c, n);
    Ok(LpSolution {
        x,
        objective,
        duals,
        iterations: state.iterations,
    })
}

struct State {
    m: usize,
    n: usize,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>, // row-major m x m
    xb: Vec<f64>,
    iterations: usize,
}

impl State {
    fn new(lp: &StandardLp, m: usize, n: usize) -> Self {
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut in_basis = vec![false; n + m];
        let basis: Vec<usize> = (n..n + m).collect();
        for &j in &basis {
            in_basis[j] = true;
        }
        Self {
            m,
            n,
            basis,
            in_basis,
            binv,
            xb: lp.b.to_vec(),
            iterations: 0,
        }
    }

    fn column<'a>(&self, lp: &'a StandardLp, j: usize, out: &mut [f64]) {
        if j < self.n {
            out.copy_from_slice(&lp.cols[j]);
        } else {
            out.fill(0.0);
            out[j - self.n] = 1.0;
        }
    }

    /// Cost of column `j` under the working objective; artificials price at
    /// -1 in phase 1 and are barred afterwards.
    fn cost(&self, c: &[f64], j: usize, phase1: bool) -> f64 {
        if j < self.n {
            c[j]
        } else if phase1 {
            -1.0
        } else {
            0.0
        }
    }

    fn duals(&self, c: &[f64], n: usize) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (slot, &j) in self.basis.iter().enumerate() {
            let cb = if j < n { c[j] } else { 0.0 };
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[slot * m + i];
                }
            }
        }
        y
    }

    fn run(&mut self, lp: &StandardLp, c: &[f64], phase1: bool) -> Result<(), LpError> {
        let m = self.m;
        let n = self.n;
        let max_pivots = 2000 + 40 * m + n / 2;
        let cost_scale: f64 = 1.0 + c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let price_tol = 1e-9 * cost_scale;

        let mut col_buf = vec![0.0; m];
        let mut u = vec![0.0; m];
        let mut last_obj = f64::NEG_INFINITY;
        let mut stalled = 0usize;
        let mut bland = false;

        loop {
            if self.iterations > max_pivots {
                return Err(LpError::IterationLimit(max_pivots));
            }
            // y = c_B' B^{-1}
            let mut y = vec![0.0; m];
            for (slot, &j) in self.basis.iter().enumerate() {
                let cb = self.cost(c, j, phase1);
                if cb != 0.0 {
                    for i in 0..m {
                        y[i] += cb * self.binv[slot * m + i];
                    }
                }
            }

            // Price the nonbasic columns (artificials never re-enter).
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..n {
                if self.in_basis[j] {
                    continue;
                }
                let col = &lp.cols[j];
                let mut d = c[j];
                for i in 0..m {
                    d -= y[i] * col[i];
                }
                if d > price_tol {
                    if bland {
                        entering = Some((j, d));
                        break;
                    }
                    match entering {
                        Some((_, best)) if best >= d => {}
                        _ => entering = Some((j, d)),
                    }
                }
            }
            let Some((e, _)) = entering else {
                return Ok(());
            };

            // u = B^{-1} a_e and the ratio test.
            self.column(lp, e, &mut col_buf);
            for i in 0..m {
                let mut acc = 0.0;
                for jj in 0..m {
                    acc += self.binv[i * m + jj] * col_buf[jj];
                }
                u[i] = acc;
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if u[i] > PIVOT_TOL {
                    let ratio = self.xb[i].max(0.0) / u[i];
                    match leave {
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio < lr + 1e-12 && u[i] > u[li]) {
                                leave = Some((i, ratio));
                            }
                        }
                        None => leave = Some((i, ratio)),
                    }
                }
            }
            let Some((r, t)) = leave else {
                return Err(LpError::Unbounded);
            };

            // Pivot: update basis inverse and basic values in place.
            let ur = u[r];
            for jj in 0..m {
                self.binv[r * m + jj] /= ur;
            }
            for i in 0..m {
                if i != r && u[i] != 0.0 {
                    let factor = u[i];
                    for jj in 0..m {
                        self.binv[i * m + jj] -= factor * self.binv[r * m + jj];
                    }
                }
            }
            for i in 0..m {
                if i != r {
                    self.xb[i] -= u[i] * t;
                }
            }
            self.xb[r] = t;
            self.in_basis[self.basis[r]] = false;
            self.in_basis[e] = true;
            self.basis[r] = e;
            self.iterations += 1;

            if self.iterations % REFACTOR_EVERY == 0 {
                self.refactorize(lp)?;
            }

            // Degeneracy watch: fall back to Bland's rule when the objective
            // stops moving, which guarantees termination.
            let obj: f64 = self
                .basis
                .iter()
                .zip(self.xb.iter())
                .map(|(&j, &v)| self.cost(c, j, phase1) * v)
                .sum();
            if obj > last_obj + 1e-13 * (1.0 + obj.abs()) {
                last_obj = obj;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled > 2 * (m + 10) {
                    bland = true;
                }
            }
        }
    }

    /// Replaces basic artificials by real columns where possible. Rows that
    /// admit no real pivot are redundant; their artificial stays basic at
    /// value zero, which is harmless.
    fn drive_out_artificials(&mut self, lp: &StandardLp) {
        let m = self.m;
        let n = self.n;
        let mut col_buf = vec![0.0; m];
        for slot in 0..m {
            if self.basis[slot] < n {
                continue;
            }
            let mut found = None;
            for j in 0..n {
                if self.in_basis[j] {
                    continue;
                }
                let col = &lp.cols[j];
                let mut v = 0.0;
                for jj in 0..m {
                    v += self.binv[slot * m + jj] * col[jj];
                }
                if v.abs() > 1e-8 {
                    found = Some((j, v));
                    break;
                }
            }
            if let Some((j, _)) = found {
                self.column(lp, j, &mut col_buf);
                let mut u = vec![0.0; m];
                for i in 0..m {
                    let mut acc = 0.0;
                    for jj in 0..m {
                        acc += self.binv[i * m + jj] * col_buf[jj];
                    }
                    u[i] = acc;
                }
                let ur = u[slot];
                for jj in 0..m {
                    self.binv[slot * m + jj] /= ur;
                }
                for i in 0..m {
                    if i != slot && u[i] != 0.0 {
                        let factor = u[i];
                        for jj in 0..m {
                            self.binv[i * m + jj] -= factor * self.binv[slot * m + jj];
                        }
                    }
                }
                let t = self.xb[slot] / ur;
                for i in 0..m {
                    if i != slot {
                        self.xb[i] -= u[i] * t;
                    }
                }
                self.xb[slot] = t;
                self.in_basis[self.basis[slot]] = false;
                self.in_basis[j] = true;
                self.basis[slot] = j;
            }
        }
    }

    /// Rebuilds the basis inverse from scratch (Gauss-Jordan with partial
    /// pivoting) and recomputes the basic values.
    fn refactorize(&mut self, lp: &StandardLp) -> Result<(), LpError> {
        let m = self.m;
        let mut aug = vec![0.0; m * 2 * m];
        let w = 2 * m;
        let mut col = vec![0.0; m];
        for (slot, &j) in self.basis.iter().enumerate() {
            self.column(lp, j, &mut col);
            for i in 0..m {
                aug[i * w + slot] = col[i];
            }
        }
        for i in 0..m {
            aug[i * w + m + i] = 1.0;
        }
        for k in 0..m {
            let mut piv = k;
            for i in k + 1..m {
                if aug[i * w + k].abs() > aug[piv * w + k].abs() {
                    piv = i;
                }
            }
            if aug[piv * w + k].abs() < 1e-13 {
                return Err(LpError::SingularBasis);
            }
            if piv != k {
                for jj in 0..w {
                    aug.swap(k * w + jj, piv * w + jj);
                }
            }
            let scale = aug[k * w + k];
            for jj in 0..w {
                aug[k * w + jj] /= scale;
            }
            for i in 0..m {
                if i != k {
                    let factor = aug[i * w + k];
                    if factor != 0.0 {
                        for jj in 0..w {
                            aug[i * w + jj] -= factor * aug[k * w + jj];
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for jj in 0..m {
                self.binv[i * m + jj] = aug[i * w + m + jj];
            }
        }
        for i in 0..m {
            let mut acc = 0.0;
            for jj in 0..m {
                acc += self.binv[i * m + jj] * lp.b[jj];
            }
            self.xb[i] = acc;
        }
        Ok(())
    }
}
