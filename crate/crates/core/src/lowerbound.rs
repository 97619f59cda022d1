//! Constructive lower-bound machinery.
//!
//! The two-point prior argument needs a pair of probability measures on
//! `[-M, M]` that agree on moments up to order K while separating `int F` by
//! exactly twice the approximation error. Instead of the non-constructive
//! duality argument, the pair is computed here as the optimal solution of a
//! finite linear program on a Chebyshev grid. The chi-square divergence
//! between the induced Gaussian mixtures then collapses to a series in the
//! squared moment differences, and the assembled certificate reports whether
//! the two-prior bound is non-vacuous.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::funcspace::MarginalFunctional;
use crate::polyapprox::{self, ApproxError};
use crate::simplex::LpError;

#[derive(Debug, Error)]
pub enum LowerBoundError {
    #[error("approximation error is zero at degree {k}; the prior-pair construction requires delta > 0")]
    DeltaZero { k: usize },
    #[error("requires s^2 > d, got s={s}, d={d}")]
    NeedsDenseSparsity { s: usize, d: usize },
    #[error("requires 0 < M <= sqrt(log(s^2/d)) = {bound}, got M={m}")]
    MOutOfRange { m: f64, bound: f64 },
    #[error("rate expression requires s^2 >= 2d and s <= d, got s={s}, d={d}")]
    RatePrecondition { s: usize, d: usize },
    #[error("truncation order must be at least 1")]
    InvalidTruncation,
    #[error("chi-square tail diverges: e M^2 / K_trunc = {0:.4} >= 1")]
    DivergentTail(f64),
    #[error("grid of {got} points is too coarse for K={k}; need at least {need}")]
    GridTooCoarse { got: usize, need: usize, k: usize },
    #[error("LP weights violate the probability constraints (sums {sum0}, {sum1})")]
    BadWeights { sum0: f64, sum1: f64 },
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// A finitely supported measure.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteMeasure {
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn moment(&self, k: usize) -> f64 {
        self.support
            .iter()
            .zip(self.weights.iter())
            .map(|(t, w)| w * t.powi(k as i32))
            .sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.support
            .iter()
            .zip(self.weights.iter())
            .map(|(t, w)| w * f(*t))
            .sum()
    }

    pub fn max_abs_support(&self) -> f64 {
        self.support.iter().fold(0.0f64, |m, t| m.max(t.abs()))
    }

    /// Inverse-CDF draw; weights are treated as proportional.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let total = self.total();
        let mut target = rng.random::<f64>() * total;
        for (t, w) in self.support.iter().zip(self.weights.iter()) {
            target -= w;
            if target <= 0.0 {
                return *t;
            }
        }
        *self.support.last().expect("nonempty support")
    }
}

/// Moment-matched measures `nu0, nu1` on `[-M, M]`: equal moments up to
/// order K, with `int F dnu0 - int F dnu1 = gap = 2 delta_{K,M}` (by
/// convention `nu0` carries the larger integral).
#[derive(Debug, Clone, Serialize)]
pub struct PriorPair {
    pub grid: Vec<f64>,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub k: usize,
    pub m: f64,
    pub gap: f64,
    /// `delta_{K,M}` from the exchange algorithm, for cross-checking.
    pub delta_ref: f64,
}

impl PriorPair {
    pub fn nu0(&self) -> DiscreteMeasure {
        DiscreteMeasure {
            support: self.grid.clone(),
            weights: self.w0.clone(),
        }
    }

    pub fn nu1(&self) -> DiscreteMeasure {
        DiscreteMeasure {
            support: self.grid.clone(),
            weights: self.w1.clone(),
        }
    }
}

/// Builds the extremal moment-matched pair by linear programming on a
/// Chebyshev grid over `[-M, M]` (extremal measures concentrate toward the
/// endpoints, where these grids are dense). The returned weights are sparse:
/// an optimal basic solution has at most K + 2 support points in total.
pub fn build_prior_pair(
    f: &MarginalFunctional,
    k: usize,
    m: f64,
    n_grid: usize,
) -> Result<PriorPair, LowerBoundError> {
    let need = 10 * (k + 2);
    if n_grid < need {
        return Err(LowerBoundError::GridTooCoarse {
            got: n_grid,
            need,
            k,
        });
    }
    let delta_ref = polyapprox::remez_auto(f, k, -m, m)?;
    if delta_ref.delta == 0.0 {
        return Err(LowerBoundError::DeltaZero { k });
    }

    let n = n_grid | 1; // odd count keeps 0 on the grid
    let xs = crate::basis::chebyshev_points(n, -m, m);
    let us: Vec<f64> = xs.iter().map(|x| x / m).collect();
    let mut f_vals = Vec::with_capacity(n);
    for &x in &xs {
        let v = f.eval(x);
        if !v.is_finite() {
            return Err(LowerBoundError::Approx(ApproxError::NonFiniteValue(x)));
        }
        f_vals.push(v);
    }
    let lp = polyapprox::moment_extremal_lp(&us, &f_vals, k)?;

    // Keep only the support, preserving grid order.
    let mut grid = Vec::new();
    let mut w0 = Vec::new();
    let mut w1 = Vec::new();
    for i in 0..n {
        if lp.w0[i] > 0.0 || lp.w1[i] > 0.0 {
            grid.push(xs[i]);
            w0.push(lp.w0[i]);
            w1.push(lp.w1[i]);
        }
    }
    let sum0: f64 = w0.iter().sum();
    let sum1: f64 = w1.iter().sum();
    if (sum0 - 1.0).abs() > 1e-8 || (sum1 - 1.0).abs() > 1e-8 {
        return Err(LowerBoundError::BadWeights { sum0, sum1 });
    }

    Ok(PriorPair {
        grid,
        w0,
        w1,
        k,
        m,
        gap: lp.objective,
        delta_ref: delta_ref.delta,
    })
}

/// The chi-square moment series together with its pieces.
#[derive(Debug, Clone, Serialize)]
pub struct Chi2Series {
    /// `sum_{k<=K_trunc} (m_k(nu1) - m_k(nu0))^2 / k!` plus the tail bound.
    pub total: f64,
    pub terms: Vec<f64>,
    /// `4 sum_{k > K_trunc} (e M^2 / k)^k`, valid when `e M^2 / K_trunc < 1`.
    pub tail_bound: f64,
}

/// Chi-square divergence between the unit-variance Gaussian mixtures induced
/// by two compactly supported mixing measures, via the moment series. For
/// measures matched to order K the first K + 1 terms vanish.
pub fn chi2_series(
    nu0: &DiscreteMeasure,
    nu1: &DiscreteMeasure,
    k_trunc: usize,
) -> Result<Chi2Series, LowerBoundError> {
    if k_trunc == 0 {
        return Err(LowerBoundError::InvalidTruncation);
    }
    let m = nu0.max_abs_support().max(nu1.max_abs_support());
    let tail_ratio = std::f64::consts::E * m * m / k_trunc as f64;
    if tail_ratio >= 1.0 {
        return Err(LowerBoundError::DivergentTail(tail_ratio));
    }

    let mut terms = Vec::with_capacity(k_trunc + 1);
    // Work with dm_k / sqrt(k!) to keep factorials inside f64 range.
    let mut sqrt_fact = 1.0f64;
    for k in 0..=k_trunc {
        if k > 0 {
            sqrt_fact *= (k as f64).sqrt();
        }
        let dm = nu1.moment(k) - nu0.moment(k);
        let scaled = dm / sqrt_fact;
        terms.push(scaled * scaled);
    }

    let mut tail_bound = 0.0f64;
    for k in (k_trunc + 1)..(k_trunc + 500) {
        let term = (std::f64::consts::E * m * m / k as f64).powi(k as i32);
        tail_bound += 4.0 * term;
        if term < 1e-300 {
            break;
        }
    }

    let total = terms.iter().sum::<f64>() + tail_bound;
    Ok(Chi2Series {
        total,
        terms,
        tail_bound,
    })
}

/// `g(x) = log(x / log x) / log x`; the divergence bookkeeping relies on
/// `g > 1/2` on `[e, inf)`.
pub fn g_function(x: f64) -> f64 {
    let lx = x.ln();
    (x / lx).ln() / lx
}

/// The assembled two-prior certificate.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundCertificate {
    pub k: usize,
    pub m: f64,
    pub d: usize,
    pub s: usize,
    /// `m_1 - m_0 = s * delta_{K,M}` between the sparsified priors.
    pub separation: f64,
    /// `exp[(2 s^2 / d) (e M^2 / K)^K] - 1`.
    pub chi2_bound: f64,
    /// `sqrt(chi2 / 2)` plus the prior-mass corrections.
    pub tv_bound: f64,
    /// `2 e^{-s/16}`, the mass the sparsified priors put outside the space.
    pub tail_terms: f64,
    /// `s^2 delta^2 / 4`, the risk scale the certificate protects.
    pub rate: f64,
    /// Whole assembled right side of the two-point inequality; the bound is
    /// non-vacuous iff this stays below 1.
    pub v_total: f64,
    pub valid: bool,
    pub g_value: f64,
    pub sup_norm: f64,
    pub pair: PriorPair,
}

/// Builds the certificate: picks `K = floor(e^2 log(s^2/d) / log(e
/// log(s^2/d) / M^2))`, constructs the moment-matched pair, and assembles the
/// separation, divergence, and mass terms.
pub fn certificate(
    f: &MarginalFunctional,
    d: usize,
    s: usize,
    m: f64,
) -> Result<LowerBoundCertificate, LowerBoundError> {
    let df = d as f64;
    let sf = s as f64;
    if sf * sf <= df {
        return Err(LowerBoundError::NeedsDenseSparsity { s, d });
    }
    let log_ratio = (sf * sf / df).ln();
    let bound = log_ratio.sqrt();
    if !(m > 0.0) || m > bound * (1.0 + 1e-12) {
        return Err(LowerBoundError::MOutOfRange { m, bound });
    }

    let x = std::f64::consts::E * log_ratio / (m * m);
    let k_real = std::f64::consts::E.powi(2) * log_ratio / x.ln();
    let k = ((k_real.floor() as i64).max(1)) as usize;
    let g_value = g_function(x);

    let n_grid = (10 * (k + 2)).max(1025);
    let pair = build_prior_pair(f, k, m, n_grid)?;
    let delta = pair.delta_ref;

    let separation = sf * delta;
    let ratio_term = (std::f64::consts::E * m * m / k as f64).powi(k as i32);
    let chi2_bound = ((2.0 * sf * sf / df) * ratio_term).exp_m1();
    let tail_terms = 2.0 * (-sf / 16.0).exp();
    let tv_bound = (chi2_bound / 2.0).sqrt() + tail_terms;

    // Chebyshev-Cantelli bookkeeping with v_i^2 <= d * sup^2.
    let sup_norm = f.sup_norm_centered(-m, m, 2001);
    let v_sq = df * sup_norm * sup_norm;
    let half_tail = (-sf / 16.0).exp();
    let mu0_term = 0.1 + half_tail;
    let mu1_term = 9.0 * v_sq / (9.0 * v_sq + separation * separation) + half_tail;
    let v_total = tv_bound + mu0_term + mu1_term;

    Ok(LowerBoundCertificate {
        k,
        m,
        d,
        s,
        separation,
        chi2_bound,
        tv_bound,
        tail_terms,
        rate: separation * separation / 4.0,
        v_total,
        valid: v_total < 1.0,
        g_value,
        sup_norm,
        pair,
    })
}

/// The minimax-rate lower expression
/// `s^2 max_{s <= k <= d} delta^2_{floor(log(s^2/k)) v 1, sqrt(log(s^2/k))}`,
/// evaluated over a geometric subsample of the index range.
#[derive(Debug, Clone, Serialize)]
pub struct RateLowerBound {
    pub value: f64,
    pub argmax_k: usize,
    /// Every sampled delta vanished (`F` is polynomial-like).
    pub degenerate: bool,
    pub table: Vec<(usize, f64)>,
}

pub fn rate_expression(
    f: &MarginalFunctional,
    d: usize,
    s: usize,
) -> Result<RateLowerBound, LowerBoundError> {
    rate_expression_sampled(f, d, s, 64)
}

pub fn rate_expression_sampled(
    f: &MarginalFunctional,
    d: usize,
    s: usize,
    max_points: usize,
) -> Result<RateLowerBound, LowerBoundError> {
    let sf = s as f64;
    let df = d as f64;
    if s > d || sf * sf < 2.0 * df || s == 0 {
        return Err(LowerBoundError::RatePrecondition { s, d });
    }
    let ks = geometric_indices(s, d, max_points.max(2));
    let deltas: Vec<Result<f64, LowerBoundError>> = ks
        .par_iter()
        .map(|&k| {
            let log_ratio = (sf * sf / k as f64).ln();
            let degree = ((log_ratio.floor() as i64).max(1)) as usize;
            let mm = log_ratio.sqrt();
            let pa = polyapprox::remez_auto(f, degree, -mm, mm)?;
            Ok(pa.delta)
        })
        .collect();

    let mut table = Vec::with_capacity(ks.len());
    let mut best = (ks[0], 0.0f64);
    for (k, res) in ks.iter().zip(deltas) {
        let delta = res?;
        if delta > best.1 {
            best = (*k, delta);
        }
        table.push((*k, delta));
    }
    Ok(RateLowerBound {
        value: sf * sf * best.1 * best.1,
        argmax_k: best.0,
        degenerate: best.1 == 0.0,
        table,
    })
}

/// At most `max_points` geometrically spaced integers spanning `[lo, hi]`,
/// always including both ends.
fn geometric_indices(lo: usize, hi: usize, max_points: usize) -> Vec<usize> {
    if hi <= lo {
        return vec![lo];
    }
    let ratio = hi as f64 / lo as f64;
    let mut out: Vec<usize> = (0..max_points)
        .map(|j| {
            let frac = j as f64 / (max_points - 1) as f64;
            ((lo as f64) * ratio.powf(frac)).round() as usize
        })
        .collect();
    out[0] = lo;
    *out.last_mut().unwrap() = hi;
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::builtin_functional;
    use crate::streams;
    use approx::assert_abs_diff_eq;

    fn abs_value() -> MarginalFunctional {
        builtin_functional("abs_pow", &[1.0]).unwrap()
    }

    #[test]
    fn prior_pair_abs_k1_is_two_point_vs_dirac() {
        // Extremal pair for |t|, K=1, M=1: nu0 = (delta_{-1} + delta_{+1})/2,
        // nu1 = delta_0, separating gap 1 = 2 * delta_{1,1}.
        let pair = build_prior_pair(&abs_value(), 1, 1.0, 201).unwrap();
        assert_abs_diff_eq!(pair.gap, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(pair.delta_ref, 0.5, epsilon = 1e-6);

        let nu0 = pair.nu0();
        let nu1 = pair.nu1();
        assert_abs_diff_eq!(nu0.total(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(nu1.total(), 1.0, epsilon = 1e-10);
        // nu0 mass sits at the endpoints, half each.
        let at_minus: f64 = pair
            .grid
            .iter()
            .zip(&pair.w0)
            .filter(|(t, _)| **t < -0.99)
            .map(|(_, w)| w)
            .sum();
        let at_plus: f64 = pair
            .grid
            .iter()
            .zip(&pair.w0)
            .filter(|(t, _)| **t > 0.99)
            .map(|(_, w)| w)
            .sum();
        assert_abs_diff_eq!(at_minus, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(at_plus, 0.5, epsilon = 1e-6);
        // nu1 concentrates at the origin.
        let near_zero: f64 = pair
            .grid
            .iter()
            .zip(&pair.w1)
            .filter(|(t, _)| t.abs() < 0.02)
            .map(|(_, w)| w)
            .sum();
        assert_abs_diff_eq!(near_zero, 1.0, epsilon = 1e-6);

        // Moment matching to order 1.
        for k in 0..=1usize {
            assert!((nu0.moment(k) - nu1.moment(k)).abs() < 1e-8);
        }
        // Sparse support, as a basic LP solution must be.
        assert!(pair.grid.len() <= pair.k + 2);
    }

    #[test]
    fn prior_pair_scales_with_m() {
        let pair = build_prior_pair(&abs_value(), 1, 2.0, 201).unwrap();
        assert_abs_diff_eq!(pair.gap, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn prior_pair_gap_equals_twice_delta() {
        for f in [abs_value(), builtin_functional("abs_pow", &[0.5]).unwrap()] {
            for (k, m) in [(2usize, 1.0f64), (5, 1.0), (9, 2.0), (14, 2.0)] {
                let pair = build_prior_pair(&f, k, m, 2001).unwrap();
                let rel = (pair.gap - 2.0 * pair.delta_ref).abs() / (2.0 * pair.delta_ref);
                assert!(
                    rel <= 1e-3,
                    "{} K={k} M={m}: gap {} vs 2 delta {}",
                    f.label(),
                    pair.gap,
                    2.0 * pair.delta_ref
                );
                // Moment matching within the stated envelope.
                let nu0 = pair.nu0();
                let nu1 = pair.nu1();
                for j in 0..=k {
                    let resid = (nu0.moment(j) - nu1.moment(j)).abs();
                    assert!(resid <= 1e-8 * m.powi(j as i32).max(1.0));
                }
            }
        }
    }

    #[test]
    fn prior_pair_rejects_zero_delta() {
        let f = builtin_functional("square", &[]).unwrap();
        assert!(matches!(
            build_prior_pair(&f, 2, 1.0, 201),
            Err(LowerBoundError::DeltaZero { k: 2 })
        ));
    }

    #[test]
    fn chi2_identical_measures_vanish() {
        let nu = DiscreteMeasure {
            support: vec![-0.5, 0.5],
            weights: vec![0.5, 0.5],
        };
        let series = chi2_series(&nu, &nu, 20).unwrap();
        assert_eq!(series.terms.iter().sum::<f64>(), 0.0);
        assert!(series.total < 1e-12);
    }

    #[test]
    fn chi2_two_diracs_closed_form() {
        // nu0 = delta_0, nu1 = delta_mu: the series telescopes to
        // e^{mu^2} - 1.
        for mu in [0.4, 0.8] {
            let nu0 = DiscreteMeasure {
                support: vec![0.0],
                weights: vec![1.0],
            };
            let nu1 = DiscreteMeasure {
                support: vec![mu],
                weights: vec![1.0],
            };
            let series = chi2_series(&nu0, &nu1, 60).unwrap();
            assert_abs_diff_eq!(series.total, (mu * mu).exp_m1(), epsilon = 1e-10);
        }
    }

    #[test]
    fn chi2_matched_pair_respects_tail_envelope() {
        let pair = build_prior_pair(&abs_value(), 10, 1.0, 2001).unwrap();
        let series = chi2_series(&pair.nu0(), &pair.nu1(), 80).unwrap();
        // First K + 1 terms vanish by moment matching.
        for (k, term) in series.terms.iter().take(pair.k + 1).enumerate() {
            assert!(*term < 1e-12, "term {k} = {term}");
        }
        let envelope = 4.0 * (std::f64::consts::E * 1.0 / pair.k as f64).powi(pair.k as i32);
        assert!(
            series.total <= envelope,
            "series {} above envelope {envelope}",
            series.total
        );
    }

    #[test]
    fn chi2_divergent_tail_flagged() {
        let nu = DiscreteMeasure {
            support: vec![3.0],
            weights: vec![1.0],
        };
        assert!(matches!(
            chi2_series(&nu, &nu, 20),
            Err(LowerBoundError::DivergentTail(_))
        ));
        assert!(matches!(
            chi2_series(&nu, &nu, 0),
            Err(LowerBoundError::InvalidTruncation)
        ));
    }

    #[test]
    fn certificate_degree_formula() {
        // d = 1e4, s = 2000: log(s^2/d) = log 400, M = sqrt(log 400) makes
        // the inner logarithm equal to 1, so K = floor(e^2 log 400) = 44.
        let m = (400f64.ln()).sqrt();
        let cert = certificate(&abs_value(), 10_000, 2000, m).unwrap();
        assert_eq!(cert.k, 44);
        assert!(cert.g_value > 0.5);
        assert_abs_diff_eq!(cert.separation, 2000.0 * cert.pair.delta_ref, epsilon = 1e-9);
        assert!(cert.tv_bound <= (cert.chi2_bound / 2.0).sqrt() + cert.tail_terms + 1e-15);
        assert_abs_diff_eq!(
            cert.rate,
            cert.separation * cert.separation / 4.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn certificate_preconditions() {
        assert!(matches!(
            certificate(&abs_value(), 10_000, 50, 1.0),
            Err(LowerBoundError::NeedsDenseSparsity { .. })
        ));
        assert!(matches!(
            certificate(&abs_value(), 10_000, 2000, 10.0),
            Err(LowerBoundError::MOutOfRange { .. })
        ));
    }

    #[test]
    fn certificate_chi2_shrinks_and_validates_as_ratio_grows() {
        // Fixed M = 1; growing s^2/d drives the divergence to zero and
        // eventually makes the whole certificate non-vacuous.
        let configs = [(1_000usize, 100usize), (31_623, 1_000), (10_000, 10_000)];
        let mut last_chi2 = f64::INFINITY;
        let mut certs = Vec::new();
        for (d, s) in configs {
            let cert = certificate(&abs_value(), d, s, 1.0).unwrap();
            assert!(
                cert.chi2_bound < last_chi2,
                "chi2 did not shrink: {} -> {}",
                last_chi2,
                cert.chi2_bound
            );
            last_chi2 = cert.chi2_bound;
            certs.push(cert);
        }
        assert!(certs.last().unwrap().valid, "v_total = {}", certs.last().unwrap().v_total);
    }

    #[test]
    fn g_stays_above_half() {
        let lo = std::f64::consts::E;
        let hi = 1e6f64;
        let mut min_g = f64::INFINITY;
        for i in 0..200 {
            let x = lo * (hi / lo).powf(i as f64 / 199.0);
            min_g = min_g.min(g_function(x));
        }
        assert!(min_g > 0.5, "min g = {min_g}");
        // The minimum over this range sits at log x = e.
        assert_abs_diff_eq!(min_g, 1.0 - 1.0 / std::f64::consts::E, epsilon = 1e-3);
    }

    #[test]
    fn sparsified_prior_separation_monte_carlo() {
        // Draw theta with iid coordinates eps * eta_i, eps ~ B(s/2d): the
        // means of sum F(theta_i) under the two priors differ by s * delta.
        let d = 2000usize;
        let s = 200usize;
        let pair = build_prior_pair(&abs_value(), 3, 1.0, 501).unwrap();
        let nu0 = pair.nu0();
        let nu1 = pair.nu1();
        let p = s as f64 / (2.0 * d as f64);
        let reps = 4000usize;
        let mut sums = [Vec::with_capacity(reps), Vec::with_capacity(reps)];
        for (which, nu) in [&nu0, &nu1].into_iter().enumerate() {
            for rep in 0..reps {
                let mut rng = streams::rep_rng(1234 + which as u64, rep as u64);
                let mut total = 0.0;
                for _ in 0..d {
                    if rng.random::<f64>() < p {
                        total += nu.sample(&mut rng).abs();
                    }
                }
                sums[which].push(total);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64], m: f64| {
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
        };
        let m0 = mean(&sums[0]);
        let m1 = mean(&sums[1]);
        let se = ((var(&sums[0], m0) + var(&sums[1], m1)) / reps as f64).sqrt();
        let expected = s as f64 * pair.delta_ref;
        assert!(
            ((m0 - m1) - expected).abs() <= 3.0 * se,
            "gap {} vs expected {expected} (se {se})",
            m0 - m1
        );
    }

    #[test]
    fn rate_expression_degenerate_for_polynomials() {
        let f = builtin_functional("square", &[]).unwrap();
        let rate = rate_expression(&f, 10_000, 400).unwrap();
        assert_eq!(rate.value, 0.0);
        assert!(rate.degenerate);
    }

    #[test]
    fn rate_expression_matches_finer_scan() {
        let coarse = rate_expression(&abs_value(), 1_000_000, 10_000).unwrap();
        assert!(coarse.value > 0.0);
        assert!(!coarse.degenerate);
        let fine = rate_expression_sampled(&abs_value(), 1_000_000, 10_000, 640).unwrap();
        let rel = (coarse.value - fine.value).abs() / fine.value;
        assert!(rel <= 0.05, "coarse {} vs fine {}", coarse.value, fine.value);
    }

    #[test]
    fn rate_expression_covers_k_equals_d() {
        let rate = rate_expression(&abs_value(), 400, 400).unwrap();
        assert_eq!(*rate.table.last().map(|(k, _)| k).unwrap(), 400);
        assert!(matches!(
            rate_expression(&abs_value(), 1000, 10),
            Err(LowerBoundError::RatePrecondition { .. })
        ));
    }
}
