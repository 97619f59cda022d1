//! Best uniform polynomial approximation on an interval.
//!
//! Two independent routes to the same object:
//!
//! * [`remez`] — multi-point exchange iteration, initialized at Chebyshev
//!   nodes, with extrema relocated by a dense scan plus golden-section
//!   refinement (no derivatives, so kinks like `|t|` are safe). Trial
//!   polynomials are solved in the Chebyshev basis and converted to monomial
//!   coefficients at the end.
//! * [`grid_lp_approx`] — the discretized minimax problem solved as a linear
//!   program. Its optimum lower-bounds the continuum error and converges to
//!   it as the grid refines; it serves as the verification oracle for the
//!   exchange iteration.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::basis;
use crate::funcspace::MarginalFunctional;
use crate::simplex::{self, LpError, StandardLp};

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("functional returned a non-finite value at t = {0}")]
    NonFiniteValue(f64),
    #[error("grid of {got} points is too coarse for degree {degree}; need at least {need}")]
    GridTooCoarse {
        got: usize,
        need: usize,
        degree: usize,
    },
    #[error("trial-polynomial system is singular at iteration {0}")]
    SingularSystem(usize),
    #[error("degree list must be nonempty and strictly increasing")]
    InvalidDegreeList,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// A degree-K best (or near-best) uniform approximation on an interval.
///
/// `coeffs` are monomial-basis coefficients `a_0 .. a_K` in the original
/// variable. `alternation_points` witness equioscillation; the list is empty
/// when `delta == 0` (the error has no sign to alternate).
#[derive(Debug, Clone, Serialize)]
pub struct PolyApprox {
    pub degree: usize,
    pub interval: (f64, f64),
    pub coeffs: Vec<f64>,
    pub delta: f64,
    pub alternation_points: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl PolyApprox {
    pub fn eval(&self, x: f64) -> f64 {
        basis::horner(&self.coeffs, x)
    }
}

/// Remez with the default tolerance policy: 1e-9, relaxed to 1e-6 past
/// degree 20 where the leveling plateaus near roundoff.
pub fn remez_auto(
    f: &MarginalFunctional,
    k: usize,
    a: f64,
    b: f64,
) -> Result<PolyApprox, ApproxError> {
    let tol = if k > 20 { 1e-6 } else { 1e-9 };
    remez(f, k, a, b, tol, 100)
}

pub fn remez(
    f: &MarginalFunctional,
    k: usize,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PolyApprox, ApproxError> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(ApproxError::InvalidInterval { a, b });
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(ApproxError::InvalidTolerance(tol));
    }
    // Even F on a symmetric interval: the best approximation is even, so
    // solve the degree-floor(K/2) problem in u = x^2 on [0, b^2]. This halves
    // the degree and moves any central kink to an endpoint, where the
    // exchange machinery is far more robust.
    if k >= 1 && f.is_even() && (a + b).abs() <= 1e-12 * (b - a) {
        return remez_even(f, k, b, tol, max_iter);
    }
    remez_core(f, k, a, b, tol, max_iter)
}

fn remez_even(
    f: &MarginalFunctional,
    k: usize,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PolyApprox, ApproxError> {
    let inner_f = {
        let value_at_zero = f.eval(0.0);
        let label = format!("{}(sqrt)", f.label());
        let f = f.clone();
        MarginalFunctional::new(
            label,
            move |u: f64| f.eval(u.max(0.0).sqrt()),
            value_at_zero,
            false,
        )
    };
    let half = k / 2;
    let inner = remez_core(&inner_f, half, 0.0, b * b, tol, max_iter)?;

    // Q(u) -> P(x) = Q(x^2): even monomial coefficients, padded to degree K.
    let mut coeffs = vec![0.0; k + 1];
    for (j, &q) in inner.coeffs.iter().enumerate() {
        coeffs[2 * j] = q;
    }

    let alternation_points = if inner.delta == 0.0 {
        Vec::new()
    } else {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        let residual = |x: f64| f.eval(x) - basis::horner(&coeffs, x);
        for &u in inner.alternation_points.iter().rev() {
            if u > 0.0 {
                let x = -u.sqrt();
                pts.push((x, residual(x)));
            }
        }
        if inner.alternation_points.first().is_some_and(|u| *u == 0.0) {
            pts.push((0.0, residual(0.0)));
        }
        for &u in inner.alternation_points.iter() {
            if u > 0.0 {
                let x = u.sqrt();
                pts.push((x, residual(x)));
            }
        }
        enforce_alternation(pts).into_iter().map(|c| c.0).collect()
    };

    Ok(PolyApprox {
        degree: k,
        interval: (-b, b),
        coeffs,
        delta: inner.delta,
        alternation_points,
        iterations: inner.iterations,
        converged: inner.converged,
    })
}

fn remez_core(
    f: &MarginalFunctional,
    k: usize,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PolyApprox, ApproxError> {
    let eval = |x: f64| -> Result<f64, ApproxError> {
        let v = f.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ApproxError::NonFiniteValue(x))
        }
    };

    // Scan on the union of a uniform and a Chebyshev-spaced grid: extrema of
    // the error cluster toward the endpoints (arcsine law) but kinks in the
    // interior need uniform coverage too.
    let n_scan = (4001usize.max(8 * (k + 2) * (k + 2))).min(20_001) | 1;
    let mut scan_x: Vec<f64> = (0..n_scan)
        .map(|i| a + (b - a) * (i as f64) / ((n_scan - 1) as f64))
        .collect();
    scan_x.extend(basis::chebyshev_points(n_scan, a, b));
    scan_x.sort_by(f64::total_cmp);
    scan_x.dedup();
    let mut scan_f = Vec::with_capacity(scan_x.len());
    let mut sup_f = 0.0f64;
    for &x in &scan_x {
        let v = eval(x)?;
        sup_f = sup_f.max(v.abs());
        scan_f.push(v);
    }
    let snap_eps = 1e-13 * (1.0 + sup_f);

    let mut ref_x = basis::chebyshev_points(k + 2, a, b);
    let mut cheb = vec![0.0; k + 1];
    let mut last_max_res = f64::INFINITY;

    for iter in 1..=max_iter {
        let e_trial;
        (cheb, e_trial) = solve_reference(f, &ref_x, a, b, iter)?;
        let residual = |x: f64| f.eval(x) - basis::clenshaw(&cheb, basis::to_unit(x, a, b));

        let r_scan: Vec<f64> = scan_x
            .iter()
            .zip(scan_f.iter())
            .map(|(&x, &fv)| fv - basis::clenshaw(&cheb, basis::to_unit(x, a, b)))
            .collect();
        let max_scan = r_scan.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if max_scan < snap_eps {
            return Ok(finish(cheb, k, a, b, 0.0, Vec::new(), iter, true));
        }

        let mut candidates = alternating_extrema(&scan_x, &r_scan, &residual, a, b);
        // Exchange safeguard: a new reference point must carry at least the
        // current leveled error, otherwise the iteration can cycle. The old
        // reference carries exactly |E|, so it can always fill gaps.
        let floor = e_trial.abs() * (1.0 - 1e-9);
        candidates.retain(|c| c.1.abs() >= floor);
        candidates = enforce_alternation(candidates);
        if candidates.len() < k + 2 {
            pad_with_reference(&mut candidates, &ref_x, &residual, k + 2, b - a);
            candidates = enforce_alternation(candidates);
        }
        if candidates.len() < k + 2 {
            last_max_res = max_scan;
            return Ok(finish(cheb, k, a, b, last_max_res, ref_x, iter, false));
        }
        trim_to_reference(&mut candidates, k + 2);

        let max_res = candidates.iter().fold(0.0f64, |m, c| m.max(c.1.abs()));
        let min_res = candidates
            .iter()
            .fold(f64::INFINITY, |m, c| m.min(c.1.abs()));
        ref_x = candidates.iter().map(|c| c.0).collect();
        last_max_res = max_res;

        if max_res - min_res <= tol * max_res {
            // One leveling solve on the converged reference; its E is delta.
            let (final_cheb, _) = solve_reference(f, &ref_x, a, b, iter)?;
            let e_level = level_error(f, &final_cheb, &ref_x, a, b);
            let delta = if e_level < snap_eps { 0.0 } else { e_level };
            let alternation = if delta == 0.0 { Vec::new() } else { ref_x };
            return Ok(finish(final_cheb, k, a, b, delta, alternation, iter, true));
        }
    }

    Ok(finish(
        cheb,
        k,
        a,
        b,
        last_max_res,
        ref_x,
        max_iter,
        false,
    ))
}

/// Solves the leveled interpolation system
/// `sum_j c_j T_j(u_i) + (-1)^i E = F(x_i)` on the reference points, giving
/// the trial Chebyshev coefficients and the leveled error E.
fn solve_reference(
    f: &MarginalFunctional,
    ref_x: &[f64],
    a: f64,
    b: f64,
    iter: usize,
) -> Result<(Vec<f64>, f64), ApproxError> {
    let n = ref_x.len();
    let k = n - 2;
    let mut mat = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (i, &x) in ref_x.iter().enumerate() {
        let t = basis::chebyshev_values(basis::to_unit(x, a, b), k);
        for (j, &tj) in t.iter().enumerate() {
            mat[(i, j)] = tj;
        }
        mat[(i, k + 1)] = if i % 2 == 0 { 1.0 } else { -1.0 };
        let v = f.eval(x);
        if !v.is_finite() {
            return Err(ApproxError::NonFiniteValue(x));
        }
        rhs[i] = v;
    }
    let solution = mat
        .lu()
        .solve(&rhs)
        .ok_or(ApproxError::SingularSystem(iter))?;
    Ok((solution.as_slice()[..=k].to_vec(), solution[k + 1]))
}

fn level_error(f: &MarginalFunctional, cheb: &[f64], ref_x: &[f64], a: f64, b: f64) -> f64 {
    ref_x
        .iter()
        .map(|&x| (f.eval(x) - basis::clenshaw(cheb, basis::to_unit(x, a, b))).abs())
        .fold(0.0f64, f64::max)
}

/// Locates local extrema of the residual with alternating signs: one point
/// per sign run of the scan, refined by golden section between its grid
/// neighbours.
fn alternating_extrema(
    scan_x: &[f64],
    r_scan: &[f64],
    residual: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
) -> Vec<(f64, f64)> {
    let n = scan_x.len();
    let mut raw: Vec<(f64, f64)> = Vec::new();
    let mut run_sign = 0i8;
    let mut best_idx = 0usize;
    let mut best_abs = 0.0f64;
    let mut in_run = false;

    let flush = |best_idx: usize, raw: &mut Vec<(f64, f64)>| {
        let lo = scan_x[best_idx.saturating_sub(1)].max(a);
        let hi = scan_x[(best_idx + 1).min(n - 1)].min(b);
        let (x_star, r_star) =
            golden_max_abs(residual, lo, hi, scan_x[best_idx], r_scan[best_idx]);
        raw.push((x_star, r_star));
    };

    for i in 0..n {
        let s = if r_scan[i] > 0.0 {
            1i8
        } else if r_scan[i] < 0.0 {
            -1i8
        } else {
            0i8
        };
        if s == 0 {
            if in_run {
                flush(best_idx, &mut raw);
                in_run = false;
            }
            continue;
        }
        if in_run && s == run_sign {
            if r_scan[i].abs() > best_abs {
                best_abs = r_scan[i].abs();
                best_idx = i;
            }
        } else {
            if in_run {
                flush(best_idx, &mut raw);
            }
            in_run = true;
            run_sign = s;
            best_idx = i;
            best_abs = r_scan[i].abs();
        }
    }
    if in_run {
        flush(best_idx, &mut raw);
    }

    let min_sep = 1e-8 * (b - a);
    dedup_close(raw, min_sep)
}

/// Collapses near-coincident points, keeping the stronger residual.
fn dedup_close(cands: Vec<(f64, f64)>, min_sep: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(cands.len());
    for cand in cands {
        match out.last() {
            Some(&(px, pr)) if (cand.0 - px).abs() < min_sep => {
                if cand.1.abs() > pr.abs() {
                    *out.last_mut().unwrap() = cand;
                }
            }
            _ => out.push(cand),
        }
    }
    out
}

/// Collapses same-sign neighbours, keeping the stronger residual, so the
/// list strictly alternates.
fn enforce_alternation(cands: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(cands.len());
    for cand in cands {
        match out.last() {
            Some(&(_, pr)) if pr.signum() == cand.1.signum() => {
                if cand.1.abs() > pr.abs() {
                    *out.last_mut().unwrap() = cand;
                }
            }
            _ => out.push(cand),
        }
    }
    out
}

/// Golden-section maximization of `|r|`, seeded with a grid point that is
/// never discarded. Returning the best evaluated point (rather than the
/// bracket midpoint) matters at cusp extrema, where the residual varies like
/// a root of the distance.
fn golden_max_abs(
    residual: &dyn Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    x_seed: f64,
    r_seed: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let tol = 1e-13 * (1.0 + hi.abs().max(lo.abs()));
    let mut best = (x_seed, r_seed);
    let consider = |x: f64, r: f64, best: &mut (f64, f64)| {
        if r.abs() > best.1.abs() {
            *best = (x, r);
        }
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut r1 = residual(x1);
    let mut r2 = residual(x2);
    consider(x1, r1, &mut best);
    consider(x2, r2, &mut best);
    while hi - lo > tol {
        if r1.abs() < r2.abs() {
            lo = x1;
            x1 = x2;
            r1 = r2;
            x2 = lo + INV_PHI * (hi - lo);
            r2 = residual(x2);
            consider(x2, r2, &mut best);
        } else {
            hi = x2;
            x2 = x1;
            r2 = r1;
            x1 = hi - INV_PHI * (hi - lo);
            r1 = residual(x1);
            consider(x1, r1, &mut best);
        }
    }
    best
}

/// Fills an undersized candidate list up to `target` points with old
/// reference points. Sign-compatible insertions come first; if the list is
/// still short (the degenerate leveled-to-zero iterate), points go in
/// regardless of sign, since the next solve imposes its own sign pattern.
fn pad_with_reference(
    candidates: &mut Vec<(f64, f64)>,
    ref_x: &[f64],
    residual: &dyn Fn(f64) -> f64,
    target: usize,
    width: f64,
) {
    let min_sep = 1e-8 * width;
    for sign_aware in [true, false] {
        for &x in ref_x {
            if candidates.len() >= target {
                return;
            }
            if candidates.iter().any(|c| (c.0 - x).abs() <= min_sep) {
                continue;
            }
            let r = residual(x);
            let pos = candidates.partition_point(|c| c.0 < x);
            if sign_aware {
                let left_ok = pos == 0 || candidates[pos - 1].1.signum() != r.signum();
                let right_ok =
                    pos == candidates.len() || candidates[pos].1.signum() != r.signum();
                if !(left_ok && right_ok && r != 0.0) {
                    continue;
                }
            }
            candidates.insert(pos, (x, r));
        }
    }
}

/// Shrinks an alternating candidate list to exactly `target` points. One
/// extra point drops off the weaker end; beyond that, adjacent pairs with
/// the smallest residual envelope are removed, which preserves alternation.
fn trim_to_reference(candidates: &mut Vec<(f64, f64)>, target: usize) {
    while candidates.len() > target {
        if candidates.len() == target + 1 {
            let first = candidates.first().unwrap().1.abs();
            let last = candidates.last().unwrap().1.abs();
            if first <= last {
                candidates.remove(0);
            } else {
                candidates.pop();
            }
        } else {
            let mut best_i = 0;
            let mut best_val = f64::INFINITY;
            for i in 0..candidates.len() - 1 {
                let v = candidates[i].1.abs().max(candidates[i + 1].1.abs());
                if v < best_val {
                    best_val = v;
                    best_i = i;
                }
            }
            candidates.drain(best_i..best_i + 2);
        }
    }
}

fn finish(
    cheb: Vec<f64>,
    k: usize,
    a: f64,
    b: f64,
    delta: f64,
    alternation_points: Vec<f64>,
    iterations: usize,
    converged: bool,
) -> PolyApprox {
    let mono_u = basis::chebyshev_to_monomial(&cheb);
    let coeffs = basis::monomial_change_of_variable(&mono_u, a, b);
    PolyApprox {
        degree: k,
        interval: (a, b),
        coeffs,
        delta,
        alternation_points,
        iterations,
        converged,
    }
}

/// Primal/dual output of the discrete extremal-measure program: weights of
/// the two measures on the grid, the objective `2 * delta_grid`, and the dual
/// vector encoding the best polynomial.
pub(crate) struct MomentLp {
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// Solves `max sum_i F_i (w0_i - w1_i)` over probability weights on the grid
/// subject to matching Chebyshev moments `T_1 .. T_K` (equivalently, raw
/// moments up to order K). `us` must already live in `[-1, 1]`.
pub(crate) fn moment_extremal_lp(
    us: &[f64],
    f_vals: &[f64],
    k: usize,
) -> Result<MomentLp, LpError> {
    let n = us.len();
    let m = k + 2;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
    let mut costs: Vec<f64> = Vec::with_capacity(2 * n);
    for &u in us {
        let t = basis::chebyshev_values(u, k);
        let mut col = vec![0.0; m];
        col[0] = 1.0;
        for j in 1..=k {
            col[1 + j] = t[j];
        }
        cols.push(col);
    }
    for &u in us {
        let t = basis::chebyshev_values(u, k);
        let mut col = vec![0.0; m];
        col[1] = 1.0;
        for j in 1..=k {
            col[1 + j] = -t[j];
        }
        cols.push(col);
    }
    costs.extend_from_slice(f_vals);
    costs.extend(f_vals.iter().map(|v| -v));
    let mut b = vec![0.0; m];
    b[0] = 1.0;
    b[1] = 1.0;

    let sol = simplex::solve(&StandardLp {
        cols: &cols,
        b: &b,
        c: &costs,
    })?;
    let clip = |v: f64| if v < 0.0 { 0.0 } else { v };
    let w0 = sol.x[..n].iter().map(|&v| clip(v)).collect();
    let w1 = sol.x[n..].iter().map(|&v| clip(v)).collect();
    Ok(MomentLp {
        w0,
        w1,
        objective: sol.objective,
        duals: sol.duals,
        iterations: sol.iterations,
    })
}

/// Best approximation on a uniform grid, solved as a linear program.
///
/// The reported `delta` is the grid optimum, a lower bound on the continuum
/// error that converges to it as `n_grid` grows; this is the independent
/// oracle against which [`remez`] is verified.
pub fn grid_lp_approx(
    f: &MarginalFunctional,
    k: usize,
    a: f64,
    b: f64,
    n_grid: usize,
) -> Result<PolyApprox, ApproxError> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(ApproxError::InvalidInterval { a, b });
    }
    let need = 10 * (k + 2);
    if n_grid < need {
        return Err(ApproxError::GridTooCoarse {
            got: n_grid,
            need,
            degree: k,
        });
    }

    let xs: Vec<f64> = (0..n_grid)
        .map(|i| a + (b - a) * (i as f64) / ((n_grid - 1) as f64))
        .collect();
    let us: Vec<f64> = xs.iter().map(|&x| basis::to_unit(x, a, b)).collect();
    let mut f_vals = Vec::with_capacity(n_grid);
    let mut sup_f = 0.0f64;
    for &x in &xs {
        let v = f.eval(x);
        if !v.is_finite() {
            return Err(ApproxError::NonFiniteValue(x));
        }
        sup_f = sup_f.max(v.abs());
        f_vals.push(v);
    }

    let lp = moment_extremal_lp(&us, &f_vals, k)?;
    let mut delta = 0.5 * lp.objective;
    if delta < 1e-13 * (1.0 + sup_f) {
        delta = 0.0;
    }

    // Dual variables (alpha, beta, p_1..p_K) encode the polynomial:
    // P = sum p_j T_j + (alpha - beta)/2 keeps F - P inside [-delta, delta].
    let mut cheb = vec![0.0; k + 1];
    cheb[0] = 0.5 * (lp.duals[0] - lp.duals[1]);
    for j in 1..=k {
        cheb[j] = lp.duals[1 + j];
    }

    let alternation_points = if delta == 0.0 {
        Vec::new()
    } else {
        let witness = delta * (1.0 - 1e-6);
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in xs.iter().enumerate() {
            let r = f_vals[i] - basis::clenshaw(&cheb, us[i]);
            if r.abs() >= witness {
                match pts.last() {
                    Some(&(_, pr)) if pr.signum() == r.signum() => {
                        if r.abs() > pr.abs() {
                            *pts.last_mut().unwrap() = (x, r);
                        }
                    }
                    _ => pts.push((x, r)),
                }
            }
        }
        pts.into_iter().map(|(x, _)| x).collect()
    };

    let mono_u = basis::chebyshev_to_monomial(&cheb);
    let coeffs = basis::monomial_change_of_variable(&mono_u, a, b);
    Ok(PolyApprox {
        degree: k,
        interval: (a, b),
        coeffs,
        delta,
        alternation_points,
        iterations: lp.iterations,
        converged: true,
    })
}

/// Approximation errors `delta_{K, M}` along a list of degrees.
pub fn delta_curve(
    f: &MarginalFunctional,
    k_list: &[usize],
    m: f64,
) -> Result<Vec<(usize, f64)>, ApproxError> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ApproxError::InvalidDegreeList);
    }
    k_list
        .iter()
        .map(|&k| remez_auto(f, k, -m, m).map(|pa| (k, pa.delta)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{builtin_functional, functional_from_expression, MarginalFunctional};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn abs_value() -> MarginalFunctional {
        builtin_functional("abs_pow", &[1.0]).unwrap()
    }

    fn assert_equioscillation(f: &MarginalFunctional, pa: &PolyApprox, tol: f64) {
        assert!(pa.converged);
        assert!(
            pa.alternation_points.len() >= pa.degree + 2,
            "only {} alternation points for degree {}",
            pa.alternation_points.len(),
            pa.degree
        );
        assert!(pa
            .alternation_points
            .windows(2)
            .all(|w| w[0] < w[1]));
        let mut prev_sign = 0.0f64;
        for &x in &pa.alternation_points {
            assert!(x >= pa.interval.0 - 1e-12 && x <= pa.interval.1 + 1e-12);
            let r = f.eval(x) - pa.eval(x);
            assert!(
                r.abs() >= pa.delta * (1.0 - tol) && r.abs() <= pa.delta * (1.0 + tol),
                "residual {r} at {x} outside [{}, {}]",
                pa.delta * (1.0 - tol),
                pa.delta * (1.0 + tol)
            );
            assert!(r.signum() * prev_sign <= 0.0, "signs do not alternate");
            prev_sign = r.signum();
        }
    }

    // The grid LP is the oracle: its anchors come from closed forms.
    #[test]
    fn lp_oracle_abs_degree_one() {
        let pa = grid_lp_approx(&abs_value(), 1, -1.0, 1.0, 2001).unwrap();
        assert_abs_diff_eq!(pa.delta, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(pa.coeffs[0], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(pa.coeffs[1], 0.0, epsilon = 1e-6);
        // Equioscillation at {-1, 0, 1}.
        assert_eq!(pa.alternation_points.len(), 3);
        for (got, want) in pa.alternation_points.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-3);
        }
    }

    #[test]
    fn lp_oracle_exact_polynomial() {
        let f = builtin_functional("identity", &[]).unwrap();
        let pa = grid_lp_approx(&f, 1, -2.0, 3.0, 200).unwrap();
        assert_eq!(pa.delta, 0.0);
        assert!(pa.alternation_points.is_empty());
        assert_abs_diff_eq!(pa.coeffs[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pa.coeffs[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn lp_grid_too_coarse() {
        assert!(matches!(
            grid_lp_approx(&abs_value(), 5, -1.0, 1.0, 69),
            Err(ApproxError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn remez_abs_degree_one() {
        let pa = remez_auto(&abs_value(), 1, -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(pa.delta, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(pa.coeffs[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(pa.coeffs[1], 0.0, epsilon = 1e-9);
        assert_equioscillation(&abs_value(), &pa, 1e-6);
        for (got, want) in pa.alternation_points.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-6);
        }
    }

    #[test]
    fn remez_abs_degree_two() {
        // Best quadratic for |t| on [-1,1] is t^2 + 1/8 with error 1/8.
        let pa = remez_auto(&abs_value(), 2, -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(pa.delta, 0.125, epsilon = 1e-6);
        assert_abs_diff_eq!(pa.coeffs[0], 0.125, epsilon = 1e-7);
        assert_abs_diff_eq!(pa.coeffs[1], 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(pa.coeffs[2], 1.0, epsilon = 1e-6);
        assert_equioscillation(&abs_value(), &pa, 1e-6);
    }

    #[test]
    fn remez_square_is_exact() {
        let f = builtin_functional("square", &[]).unwrap();
        for m in [1.0, 2.5] {
            let pa = remez_auto(&f, 2, -m, m).unwrap();
            assert_eq!(pa.delta, 0.0);
            assert!(pa.converged);
            assert_abs_diff_eq!(pa.coeffs[0], 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(pa.coeffs[1], 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(pa.coeffs[2], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn remez_even_symmetry_kills_odd_coefficients() {
        let f = builtin_functional("abs_pow", &[0.5]).unwrap();
        let pa = remez_auto(&f, 6, -2.0, 2.0).unwrap();
        let scale = pa.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for k in (1..=5).step_by(2) {
            assert!(
                pa.coeffs[k].abs() <= 1e-8 * scale,
                "odd coefficient a_{k} = {} not negligible",
                pa.coeffs[k]
            );
        }
    }

    #[test]
    fn dual_route_agreement_sqrt_abs() {
        let f = builtin_functional("abs_pow", &[0.5]).unwrap();
        let by_remez = remez_auto(&f, 8, -1.0, 1.0).unwrap();
        let by_lp = grid_lp_approx(&f, 8, -1.0, 1.0, 4001).unwrap();
        assert!(
            (by_remez.delta - by_lp.delta).abs() <= 1e-4 * by_remez.delta,
            "remez {} vs lp {}",
            by_remez.delta,
            by_lp.delta
        );
    }

    #[test]
    fn dual_route_agreement_across_degrees() {
        for f in [abs_value(), builtin_functional("abs_pow", &[0.5]).unwrap()] {
            for k in [3usize, 10, 17, 30] {
                let r = remez_auto(&f, k, -1.0, 1.0).unwrap();
                let lp = grid_lp_approx(&f, k, -1.0, 1.0, 4001).unwrap();
                let tol = (1e-6f64).max(1e-3 * r.delta);
                assert!(
                    (r.delta - lp.delta).abs() <= tol,
                    "K={k} ({}): remez {} vs lp {}",
                    f.label(),
                    r.delta,
                    lp.delta
                );
            }
        }
    }

    #[test]
    fn delta_curve_anchors_and_monotonicity() {
        let curve = delta_curve(&abs_value(), &[1, 2], 1.0).unwrap();
        assert_abs_diff_eq!(curve[0].1, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(curve[1].1, 0.125, epsilon = 1e-6);

        let ks: Vec<usize> = (1..=12).collect();
        let curve = delta_curve(&abs_value(), &ks, 1.0).unwrap();
        for w in curve.windows(2) {
            assert!(
                w[1].1 <= w[0].1 + 1e-12,
                "delta increased from K={} to K={}",
                w[0].0,
                w[1].0
            );
        }

        assert!(matches!(
            delta_curve(&abs_value(), &[], 1.0),
            Err(ApproxError::InvalidDegreeList)
        ));
        assert!(matches!(
            delta_curve(&abs_value(), &[3, 3], 1.0),
            Err(ApproxError::InvalidDegreeList)
        ));
    }

    #[test]
    fn homogeneity_in_the_interval_width() {
        // delta_{K, cM} = c^gamma * delta_{K, M} for |t|^gamma.
        for gamma in [0.5, 1.0] {
            let f = builtin_functional("abs_pow", &[gamma]).unwrap();
            let base = remez(&f, 5, -1.0, 1.0, 1e-10, 200).unwrap().delta;
            for c in [0.5, 2.0] {
                let scaled = remez(&f, 5, -c, c, 1e-10, 200).unwrap().delta;
                let expected = c.powf(gamma) * base;
                assert!(
                    (scaled - expected).abs() <= 1e-8 * expected,
                    "gamma={gamma} c={c}: {scaled} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn coefficient_growth_is_controlled() {
        // |a_k| M^k / (sup |F| * (1 + sqrt 2)^K) stays below a fixed constant.
        let budget = 100.0;
        let growth = 1.0 + std::f64::consts::SQRT_2;
        for f in [abs_value(), builtin_functional("abs_pow", &[0.5]).unwrap()] {
            for &m in &[0.5, 1.0, 2.0, 4.0] {
                let sup = f.sup_norm_centered(-m, m, 2001);
                for &k in &[1usize, 2, 3, 5, 8, 13, 21, 30] {
                    let pa = remez_auto(&f, k, -m, m).unwrap();
                    for (j, &a) in pa.coeffs.iter().enumerate() {
                        let ratio = a.abs() * m.powi(j as i32) / (sup * growth.powi(k as i32));
                        assert!(
                            ratio <= budget,
                            "{} K={k} M={m} k={j}: ratio {ratio}",
                            f.label()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn best_constant_is_midrange() {
        // delta_{0,M} = (max F - min F) / 2.
        let f = builtin_functional("neg_t_log", &[]).unwrap();
        let (a, b) = (-2.0, 2.0);
        let n = 4001;
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for i in 0..n {
            let x = a + (b - a) * (i as f64) / ((n - 1) as f64);
            let v = f.eval(x);
            hi = hi.max(v);
            lo = lo.min(v);
        }
        let expected = 0.5 * (hi - lo);
        let by_remez = remez_auto(&f, 0, a, b).unwrap();
        assert_abs_diff_eq!(by_remez.delta, expected, epsilon = 1e-6);
        let by_lp = grid_lp_approx(&f, 0, a, b, 4001).unwrap();
        assert_abs_diff_eq!(by_lp.delta, expected, epsilon = 1e-6);

        let g = abs_value();
        assert_abs_diff_eq!(
            remez_auto(&g, 0, -1.0, 1.0).unwrap().delta,
            0.5,
            epsilon = 1e-9
        );
    }

    #[test]
    fn nan_from_functional_is_an_error() {
        let f = functional_from_expression("log(t)", Some(0.0)).unwrap();
        assert!(matches!(
            remez_auto(&f, 3, -1.0, 1.0),
            Err(ApproxError::NonFiniteValue(_))
        ));
        assert!(matches!(
            grid_lp_approx(&f, 3, -1.0, 1.0, 200),
            Err(ApproxError::NonFiniteValue(_))
        ));
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            remez_auto(&abs_value(), 2, 1.0, -1.0),
            Err(ApproxError::InvalidInterval { .. })
        ));
        assert!(matches!(
            remez(&abs_value(), 2, -1.0, 1.0, 0.0, 10),
            Err(ApproxError::InvalidTolerance(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

        // A polynomial of degree <= K is its own best approximation: the
        // exchange must report delta = 0 and recover the coefficients.
        #[test]
        fn remez_recovers_polynomials(
            coeffs in prop::collection::vec(-2.0f64..2.0, 1..6),
            m in 0.5f64..2.0,
        ) {
            let c = coeffs.clone();
            let f = MarginalFunctional::new(
                "poly",
                move |x| c.iter().rev().fold(0.0, |acc, v| acc * x + v),
                coeffs[0],
                false,
            );
            let k = coeffs.len() - 1;
            let pa = remez_auto(&f, k, -m, m).unwrap();
            prop_assert_eq!(pa.delta, 0.0);
            let scale = 1.0 + coeffs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (got, want) in pa.coeffs.iter().zip(coeffs.iter()) {
                prop_assert!((got - want).abs() < 1e-7 * scale);
            }
        }
    }
}
