//! The multi-scale additive-functional estimator and its single-scale
//! simplified variant.
//!
//! Each observation is split into a selector copy `v` and an evaluation copy
//! `u`. The magnitude of `v` picks a scale `l` (interval `[-M_l, M_l]`,
//! degree `K_l`, threshold `t_l = M_l / 2`), and the coordinate contributes
//! `sum_{k=1}^{K_l} a_{k} H_k(u)` where the `a_k` are the monomial
//! coefficients of the best degree-`K_l` approximation of `F - F(0)` on that
//! interval. Summing over coordinates and adding back `d F(0)` estimates
//! `sum_i F(theta_i)`.

use serde::Serialize;
use thiserror::Error;

use crate::accum;
use crate::funcspace::MarginalFunctional;
use crate::hermite::{hermitize, HermiteError, HermitePoly};
use crate::polyapprox::{remez_auto, ApproxError, PolyApprox};
use crate::streams;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("requires 2*sqrt(d) <= s (got s={s}, d={d}); use the simplified estimator for the non-sparse regime")]
    SparsityTooSmall { s: usize, d: usize },
    #[error("requires s <= d, got s={s}, d={d}")]
    SparsityExceedsDimension { s: usize, d: usize },
    #[error("tuning constant c must be positive and finite, got {0}")]
    InvalidTuning(f64),
    #[error("requires 0 < M <= sqrt(log d) = {bound}, got M={m}")]
    MOutOfRange { m: f64, bound: f64 },
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("approximation failed at level {level}: {source}")]
    Approx {
        level: usize,
        #[source]
        source: ApproxError,
    },
    #[error("remez did not converge at level {level} (delta estimate {delta})")]
    Unconverged { level: usize, delta: f64 },
    #[error("estimator was fitted for d={expected}, got a vector of length {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("oracle_pairs mode takes two independent observation vectors; call estimate_pairs")]
    OracleNeedsPairs,
    #[error("estimate aggregated to a non-finite value")]
    NonFinite,
    #[error(transparent)]
    Hermite(#[from] HermiteError),
}

/// How the two independent copies of each observation are obtained.
///
/// `Duplicate` splits `y_i` into `y_i +- z_i` (each `N(theta_i, 2)`) and
/// compensates the variance through scaled Hermite terms. `OraclePairs`
/// expects the caller to supply two independent `N(theta_i, 1)` draws, the
/// setting the risk analysis is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    OraclePairs,
    Duplicate,
}

impl NoiseMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseMode::OraclePairs => "oracle_pairs",
            NoiseMode::Duplicate => "duplicate",
        }
    }

    fn sigma(&self) -> f64 {
        match self {
            NoiseMode::OraclePairs => 1.0,
            NoiseMode::Duplicate => std::f64::consts::SQRT_2,
        }
    }
}

fn infinite(v: &f64) -> bool {
    v.is_infinite()
}

/// One scale of the estimator: interval half-width, polynomial degree, and
/// the upper selector threshold (`+inf` for the top scale).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Level {
    pub index: usize,
    pub m: f64,
    pub k: usize,
    #[serde(skip_serializing_if = "infinite")]
    pub t: f64,
}

/// The geometric scale sequence: `M_l = 2^l sqrt(2 log(s^2/d))` for
/// `l = 0..=L`, capped by the top scale `M_{L+1} = sqrt(2 log d)`, with
/// degrees `K_l = max(1, floor(c M_l^2 / 8))` and thresholds `t_l = M_l / 2`.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSchedule {
    pub c: f64,
    pub d: usize,
    pub s: usize,
    /// Largest integer with `2^L < sqrt(log d / log(s^2/d))`; -1 when no such
    /// integer exists and only the top scale is used.
    pub l_max: i64,
    pub levels: Vec<Level>,
    pub top: Level,
}

impl LevelSchedule {
    /// Number of selector cells (`L + 2`).
    pub fn num_selectors(&self) -> usize {
        self.levels.len() + 1
    }

    /// Index of the scale the selector value `v` falls into; the top scale is
    /// `self.levels.len()`. Every `v` lands in exactly one cell (`|v| = 0`
    /// goes to the first one).
    pub fn select(&self, v: f64) -> usize {
        let av = v.abs();
        for lev in &self.levels {
            if av <= lev.t {
                return lev.index;
            }
        }
        self.levels.len()
    }

    /// Scale parameters by selector index (levels, then top).
    pub fn scale(&self, idx: usize) -> &Level {
        if idx < self.levels.len() {
            &self.levels[idx]
        } else {
            &self.top
        }
    }
}

/// Builds the scale schedule for dimension `d`, sparsity `s`, and tuning
/// constant `c`. Requires `2 sqrt(d) <= s <= d`.
pub fn build_schedule(d: usize, s: usize, c: f64) -> Result<LevelSchedule, EstimatorError> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(EstimatorError::InvalidTuning(c));
    }
    if s > d {
        return Err(EstimatorError::SparsityExceedsDimension { s, d });
    }
    let df = d as f64;
    let sf = s as f64;
    if sf < 2.0 * df.sqrt() {
        return Err(EstimatorError::SparsityTooSmall { s, d });
    }
    let log_ratio = (sf * sf / df).ln();
    let base = (2.0 * log_ratio).sqrt();
    let bound = (df.ln() / log_ratio).sqrt();

    let mut l_max: i64 = -1;
    let mut pow = 1.0f64;
    while pow < bound {
        l_max += 1;
        pow *= 2.0;
    }

    let degree = |m: f64| (((c * m * m / 8.0).floor() as i64).max(1)) as usize;
    let levels: Vec<Level> = (0..=l_max)
        .map(|l| {
            let m = (2.0f64).powi(l as i32) * base;
            Level {
                index: l as usize,
                m,
                k: degree(m),
                t: m / 2.0,
            }
        })
        .collect();
    let top_m = (2.0 * df.ln()).sqrt();
    let top = Level {
        index: levels.len(),
        m: top_m,
        k: degree(top_m),
        t: f64::INFINITY,
    };
    Ok(LevelSchedule {
        c,
        d,
        s,
        l_max,
        levels,
        top,
    })
}

/// Splits `y` into `(y + z, y - z)` with `z` iid standard normal drawn from
/// the seed's duplication stream. The two outputs are independent
/// `N(theta_i, 2)` vectors and `y1 + y2 = 2y` exactly.
pub fn duplicate_samples(y: &[f64], seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = streams::rep_rng(seed, streams::DUPLICATE_STREAM);
    let mut z = vec![0.0; y.len()];
    streams::fill_standard_normal(&mut rng, &mut z);
    let y1: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a + b).collect();
    let y2: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - b).collect();
    (y1, y2)
}

/// A fitted multi-scale estimator: one best approximation of the centered
/// functional per scale, pre-converted to Hermite form without the constant
/// term.
#[derive(Debug, Clone)]
pub struct FittedEstimator {
    pub schedule: LevelSchedule,
    pub per_level_poly: Vec<PolyApprox>,
    pub value_at_zero: f64,
    pub noise_mode: NoiseMode,
    /// `max_l delta^2_{K_l, M_l}`, the squared-error scale of the risk bound.
    pub rate_phi: f64,
    pub functional: MarginalFunctional,
    hermite: Vec<HermitePoly>,
}

/// Fits the multi-scale estimator: centers `F` by `F(0)` and runs the
/// exchange algorithm on every scale of the schedule.
pub fn fit(
    f: &MarginalFunctional,
    schedule: &LevelSchedule,
    noise_mode: NoiseMode,
) -> Result<FittedEstimator, EstimatorError> {
    let centered = f.centered();
    let mut per_level_poly = Vec::with_capacity(schedule.num_selectors());
    let mut hermite = Vec::with_capacity(schedule.num_selectors());
    let mut rate_phi = 0.0f64;
    for idx in 0..schedule.num_selectors() {
        let lev = schedule.scale(idx);
        let pa = remez_auto(&centered, lev.k, -lev.m, lev.m)
            .map_err(|source| EstimatorError::Approx { level: idx, source })?;
        if !pa.converged {
            return Err(EstimatorError::Unconverged {
                level: idx,
                delta: pa.delta,
            });
        }
        rate_phi = rate_phi.max(pa.delta * pa.delta);
        hermite.push(hermitize(&pa.coeffs, false)?);
        per_level_poly.push(pa);
    }
    Ok(FittedEstimator {
        schedule: schedule.clone(),
        per_level_poly,
        value_at_zero: f.value_at_zero(),
        noise_mode,
        rate_phi,
        functional: f.clone(),
        hermite,
    })
}

impl FittedEstimator {
    /// `s^2 max_l delta^2`, the shape of the worst-case risk bound.
    pub fn rate_upper(&self) -> f64 {
        let s = self.schedule.s as f64;
        s * s * self.rate_phi
    }

    pub fn per_level_delta(&self) -> Vec<f64> {
        self.per_level_poly.iter().map(|p| p.delta).collect()
    }

    /// Estimates from a single observation vector. Only valid in duplicate
    /// mode, where the split uses the seed's duplication stream.
    pub fn estimate(&self, y: &[f64], seed: u64) -> Result<f64, EstimatorError> {
        match self.noise_mode {
            NoiseMode::Duplicate => {
                let (y1, y2) = duplicate_samples(y, seed);
                self.estimate_pairs(&y1, &y2)
            }
            NoiseMode::OraclePairs => Err(EstimatorError::OracleNeedsPairs),
        }
    }

    /// Estimates from the two independent copies: `y1` feeds the Hermite
    /// evaluations, `y2` drives the scale selector.
    pub fn estimate_pairs(&self, y1: &[f64], y2: &[f64]) -> Result<f64, EstimatorError> {
        let d = self.schedule.d;
        if y1.len() != d || y2.len() != d {
            return Err(EstimatorError::DimensionMismatch {
                expected: d,
                got: if y1.len() != d { y1.len() } else { y2.len() },
            });
        }
        let sigma = self.noise_mode.sigma();
        let total =
            accum::chunked_parallel_sum(d, |i| self.coordinate_term(y1[i], y2[i], sigma));
        if !total.is_finite() {
            return Err(EstimatorError::NonFinite);
        }
        Ok(d as f64 * self.value_at_zero + total)
    }

    pub(crate) fn coordinate_term(&self, u: f64, v: f64, sigma: f64) -> f64 {
        let idx = self.schedule.select(v);
        self.hermite[idx].eval_scaled(u, sigma)
    }
}

/// The single-scale estimator for the non-sparse regime: one polynomial on
/// `[-M, M]` of degree `K = max(1, floor(c log d / log(e log d / M^2)))`,
/// Hermite sum including k = 0, applied to the raw observations.
#[derive(Debug, Clone)]
pub struct SimplifiedEstimator {
    pub poly: PolyApprox,
    pub k: usize,
    pub m: f64,
    pub d: usize,
    pub c: f64,
    pub value_at_zero: f64,
    pub functional: MarginalFunctional,
    hermite: HermitePoly,
}

pub fn fit_simplified(
    f: &MarginalFunctional,
    d: usize,
    m: f64,
    c: f64,
) -> Result<SimplifiedEstimator, EstimatorError> {
    if d < 2 {
        return Err(EstimatorError::DimensionTooSmall(d));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(EstimatorError::InvalidTuning(c));
    }
    let log_d = (d as f64).ln();
    let bound = log_d.sqrt();
    if !(m > 0.0) || m > bound {
        return Err(EstimatorError::MOutOfRange { m, bound });
    }
    let k_real = c * log_d / (std::f64::consts::E * log_d / (m * m)).ln();
    let k = ((k_real.floor() as i64).max(1)) as usize;
    let centered = f.centered();
    let poly = remez_auto(&centered, k, -m, m)
        .map_err(|source| EstimatorError::Approx { level: 0, source })?;
    if !poly.converged {
        return Err(EstimatorError::Unconverged {
            level: 0,
            delta: poly.delta,
        });
    }
    let hermite = hermitize(&poly.coeffs, true)?;
    Ok(SimplifiedEstimator {
        k,
        m,
        d,
        c,
        value_at_zero: f.value_at_zero(),
        functional: f.clone(),
        hermite,
        poly,
    })
}

impl SimplifiedEstimator {
    /// `d^2 delta^2`, the shape of the non-sparse risk bound.
    pub fn rate_upper(&self) -> f64 {
        let d = self.d as f64;
        d * d * self.poly.delta * self.poly.delta
    }

    pub fn estimate(&self, y: &[f64]) -> Result<f64, EstimatorError> {
        if y.len() != self.d {
            return Err(EstimatorError::DimensionMismatch {
                expected: self.d,
                got: y.len(),
            });
        }
        let total = accum::chunked_parallel_sum(self.d, |i| self.hermite.eval(y[i]));
        if !total.is_finite() {
            return Err(EstimatorError::NonFinite);
        }
        Ok(self.d as f64 * self.value_at_zero + total)
    }
}
