//! Probabilists' Hermite polynomials.
//!
//! `H_k` satisfies `H_0 = 1`, `H_1 = x`, `H_{k+1}(x) = x H_k(x) - k H_{k-1}(x)`,
//! and `E H_k(X) = theta^k` for `X ~ N(theta, 1)` — the identity that turns a
//! polynomial in theta into an unbiased estimator. This module provides the
//! recurrence, Gauss-Hermite quadrature (Golub-Welsch nodes, cached), the
//! monomial-to-Hermite substitution, and the variance-scaled variant
//! `sigma^k H_k(x / sigma)` whose mean under `N(theta, sigma^2)` is `theta^k`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

/// Degrees above this are refused outright; the level schedules stay far
/// below it at any realistic dimension.
pub const MAX_DEGREE: usize = 200;

#[derive(Debug, Error)]
pub enum HermiteError {
    #[error("degree {0} exceeds the supported cap of {MAX_DEGREE}")]
    DegreeTooLarge(usize),
    #[error("Hermite recurrence overflowed f64 at degree {degree} (x = {x})")]
    Overflow { degree: usize, x: f64 },
    #[error("sigma must be positive and finite, got {0}")]
    NonPositiveSigma(f64),
    #[error("quadrature needs at least {need} nodes for degree {degree}, got {got}")]
    TooFewNodes {
        need: usize,
        got: usize,
        degree: usize,
    },
    #[error("empty coefficient vector")]
    EmptyCoefficients,
}

/// `H_0(x) .. H_K(x)` for a fixed `x`.
#[derive(Debug, Clone, Serialize)]
pub struct HermiteEval {
    pub max_degree: usize,
    pub values: Vec<f64>,
}

/// Evaluates `H_0 .. H_k` at `x` by the three-term recurrence, failing with
/// the offending degree if a value leaves f64 range.
pub fn hermite_all(x: f64, k: usize) -> Result<HermiteEval, HermiteError> {
    if k > MAX_DEGREE {
        return Err(HermiteError::DegreeTooLarge(k));
    }
    let mut values = Vec::with_capacity(k + 1);
    values.push(1.0);
    if k >= 1 {
        values.push(x);
    }
    for j in 1..k {
        let next = x * values[j] - (j as f64) * values[j - 1];
        if !next.is_finite() {
            return Err(HermiteError::Overflow { degree: j + 1, x });
        }
        values.push(next);
    }
    Ok(HermiteEval {
        max_degree: k,
        values,
    })
}

/// `sigma^k H_k(x / sigma)`; under `N(theta, sigma^2)` its mean is `theta^k`.
pub fn variance_scaled_hermite(x: f64, k: usize, sigma: f64) -> Result<f64, HermiteError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(HermiteError::NonPositiveSigma(sigma));
    }
    let h = hermite_all(x / sigma, k)?;
    let value = sigma.powi(k as i32) * h.values[k];
    if !value.is_finite() {
        return Err(HermiteError::Overflow { degree: k, x });
    }
    Ok(value)
}

/// Gauss-Hermite quadrature against the weight `e^{-x^2}`.
///
/// Nodes and weights come from the Golub-Welsch symmetric tridiagonal
/// eigenproblem; rules are cached per node count (write-once, read-many).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Cached rule with `n` nodes; exact for polynomials up to degree 2n - 1.
    pub fn rule(n: usize) -> Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        Arc::clone(
            guard
                .entry(n)
                .or_insert_with(|| Arc::new(GaussHermite::compute(n))),
        )
    }

    fn compute(n: usize) -> GaussHermite {
        assert!(n >= 1, "quadrature rule needs at least one node");
        // Jacobi matrix for the e^{-x^2} weight: zero diagonal, sqrt(i/2)
        // off-diagonal. Eigenvalues are the nodes; the squared first
        // eigenvector components scaled by sqrt(pi) give the weights.
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            let v = (0.5 * (i as f64 + 1.0)).sqrt();
            jacobi[(i, i + 1)] = v;
            jacobi[(i + 1, i)] = v;
        }
        let eigen = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let node = eigen.eigenvalues[j];
                let first = eigen.eigenvectors[(0, j)];
                (node, std::f64::consts::PI.sqrt() * first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        GaussHermite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `integral of f(x) e^{-x^2} dx` over the real line.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(x, w)| w * f(*x))
            .sum()
    }

    /// `E f(X)` for `X ~ N(mean, sd^2)`.
    pub fn normal_expectation(&self, mean: f64, sd: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sd;
        let norm = 1.0 / std::f64::consts::PI.sqrt();
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(x, w)| w * f(mean + scale * x))
            .sum::<f64>()
            * norm
    }
}

/// Quadrature check of `E H_k(X)` for `X ~ N(theta, 1)`; equals `theta^k`.
pub fn hermite_moment_check(theta: f64, k: usize, n_quad: usize) -> Result<f64, HermiteError> {
    let need = 2 * k + 2;
    if n_quad < need {
        return Err(HermiteError::TooFewNodes {
            need,
            got: n_quad,
            degree: k,
        });
    }
    let rule = GaussHermite::rule(n_quad);
    let mut failed = None;
    let value = rule.normal_expectation(theta, 1.0, |x| match hermite_all(x, k) {
        Ok(h) => h.values[k],
        Err(e) => {
            failed = Some(e);
            f64::NAN
        }
    });
    if let Some(e) = failed {
        return Err(e);
    }
    Ok(value)
}

/// A polynomial expressed in the Hermite basis, `u -> sum_k a_k H_k(u)`.
///
/// With `include_constant = false` the sum starts at k = 1 (the multi-scale
/// estimator drops the constant term); with `true` it starts at k = 0 (the
/// simplified estimator keeps it). Under `N(theta, 1)` the mean is
/// `P(theta) - a_0 * (1 - include_constant)` where `P` is the monomial
/// polynomial the coefficients came from.
#[derive(Debug, Clone, Serialize)]
pub struct HermitePoly {
    coeffs: Vec<f64>,
    include_constant: bool,
}

/// Reinterprets monomial coefficients `a_0 .. a_K` as Hermite-basis
/// coefficients, term by term.
pub fn hermitize(coeffs: &[f64], include_constant: bool) -> Result<HermitePoly, HermiteError> {
    if coeffs.is_empty() {
        return Err(HermiteError::EmptyCoefficients);
    }
    if coeffs.len() - 1 > MAX_DEGREE {
        return Err(HermiteError::DegreeTooLarge(coeffs.len() - 1));
    }
    Ok(HermitePoly {
        coeffs: coeffs.to_vec(),
        include_constant,
    })
}

impl HermitePoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn includes_constant(&self) -> bool {
        self.include_constant
    }

    /// `sum_k a_k H_k(u)`. May return a non-finite value on overflow; callers
    /// on the hot path check the final aggregate instead.
    pub fn eval(&self, u: f64) -> f64 {
        let mut sum = if self.include_constant {
            self.coeffs[0]
        } else {
            0.0
        };
        if self.coeffs.len() == 1 {
            return sum;
        }
        let mut h_prev = 1.0f64;
        let mut h_cur = u;
        sum += self.coeffs[1] * h_cur;
        for k in 1..self.coeffs.len() - 1 {
            let h_next = u * h_cur - (k as f64) * h_prev;
            h_prev = h_cur;
            h_cur = h_next;
            sum += self.coeffs[k + 1] * h_cur;
        }
        sum
    }

    /// `sum_k a_k sigma^k H_k(u / sigma)`, the variance-adjusted form whose
    /// mean under `N(theta, sigma^2)` matches the unit-variance one.
    pub fn eval_scaled(&self, u: f64, sigma: f64) -> f64 {
        if sigma == 1.0 {
            return self.eval(u);
        }
        let z = u / sigma;
        let mut sum = if self.include_constant {
            self.coeffs[0]
        } else {
            0.0
        };
        if self.coeffs.len() == 1 {
            return sum;
        }
        let mut h_prev = 1.0f64;
        let mut h_cur = z;
        let mut sig_pow = sigma;
        sum += self.coeffs[1] * sig_pow * h_cur;
        for k in 1..self.coeffs.len() - 1 {
            let h_next = z * h_cur - (k as f64) * h_prev;
            h_prev = h_cur;
            h_cur = h_next;
            sig_pow *= sigma;
            sum += self.coeffs[k + 1] * sig_pow * h_cur;
        }
        sum
    }
}
