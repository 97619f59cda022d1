//! Chebyshev-basis helpers shared by the approximation routines.
//!
//! All linear algebra in the approximation code runs in the Chebyshev basis
//! on the normalized variable `u in [-1, 1]` (monomials are badly conditioned
//! past degree ~20); conversion to monomial coefficients on the original
//! interval happens once at the end.

/// `n` Chebyshev points of the second kind on `[a, b]` (includes both
/// endpoints), increasing.
pub(crate) fn chebyshev_points(n: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(n >= 2);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..n)
        .map(|j| {
            let angle = std::f64::consts::PI * (n - 1 - j) as f64 / (n - 1) as f64;
            mid + half * angle.cos()
        })
        .collect()
}

/// Maps `x in [a, b]` to `u in [-1, 1]`.
pub(crate) fn to_unit(x: f64, a: f64, b: f64) -> f64 {
    (2.0 * x - (a + b)) / (b - a)
}

/// `T_0(u) .. T_k(u)` by the three-term recurrence.
pub(crate) fn chebyshev_values(u: f64, k: usize) -> Vec<f64> {
    let mut vals = Vec::with_capacity(k + 1);
    vals.push(1.0);
    if k == 0 {
        return vals;
    }
    vals.push(u);
    for j in 2..=k {
        vals.push(2.0 * u * vals[j - 1] - vals[j - 2]);
    }
    vals
}

/// Clenshaw evaluation of `sum_j c_j T_j(u)`.
pub(crate) fn clenshaw(coeffs: &[f64], u: f64) -> f64 {
    let mut b1 = 0.0f64;
    let mut b2 = 0.0f64;
    for &c in coeffs.iter().skip(1).rev() {
        let t = 2.0 * u * b1 - b2 + c;
        b2 = b1;
        b1 = t;
    }
    u * b1 - b2 + coeffs[0]
}

/// Converts a Chebyshev series in `u` to monomial coefficients in `u`.
pub(crate) fn chebyshev_to_monomial(coeffs: &[f64]) -> Vec<f64> {
    let k = coeffs.len() - 1;
    let mut result = vec![0.0; k + 1];
    // Monomial forms of T_{j-1} and T_j, updated through the recurrence.
    let mut prev = vec![0.0; k + 1];
    let mut cur = vec![0.0; k + 1];
    prev[0] = 1.0;
    result[0] += coeffs[0];
    if k == 0 {
        return result;
    }
    cur[1] = 1.0;
    for (i, r) in cur.iter().enumerate() {
        result[i] += coeffs[1] * r;
    }
    for j in 2..=k {
        // T_j = 2u T_{j-1} - T_{j-2}
        let mut next = vec![0.0; k + 1];
        for i in 0..j {
            next[i + 1] += 2.0 * cur[i];
        }
        for i in 0..=k {
            next[i] -= prev[i];
        }
        for i in 0..=k {
            result[i] += coeffs[j] * next[i];
        }
        prev = cur;
        cur = next;
    }
    result
}

/// Rewrites `sum_j q_j u^j` as monomials in `x`, where
/// `u = (2x - (a + b)) / (b - a)`.
pub(crate) fn monomial_change_of_variable(q: &[f64], a: f64, b: f64) -> Vec<f64> {
    let alpha = 2.0 / (b - a);
    let beta = -(a + b) / (b - a);
    if beta == 0.0 {
        // Symmetric interval: pure scaling, exact.
        let mut out = Vec::with_capacity(q.len());
        let mut pow = 1.0;
        for &c in q {
            out.push(c * pow);
            pow *= alpha;
        }
        return out;
    }
    // Horner in coefficient space: result <- result * (alpha x + beta) + q_j.
    let mut result = vec![0.0; q.len()];
    for &c in q.iter().rev() {
        let mut next = vec![0.0; q.len()];
        for i in 0..q.len() - 1 {
            next[i + 1] += result[i] * alpha;
        }
        for i in 0..q.len() {
            next[i] += result[i] * beta;
        }
        next[0] += c;
        result = next;
    }
    result
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0f64;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}
