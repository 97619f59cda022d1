//! Reproducible Monte Carlo risk measurement.
//!
//! Replication `rep` of a run keyed by `seed` draws every random quantity
//! from the ChaCha stream `(seed, rep)`, and all aggregations reduce
//! fixed-size chunks in index order, so reports are bit-identical across
//! thread counts and runs. Standard errors come from a leave-one-out
//! jackknife over replications.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::accum;
use crate::estimator::{EstimatorError, FittedEstimator, NoiseMode, SimplifiedEstimator};
use crate::funcspace::{
    make_theta, FuncspaceError, MarginalFunctional, ParameterSpace, Placement, SpikeValues,
};
use crate::streams;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("need at least 100 replications, got {0}")]
    TooFewReplications(usize),
    #[error("theta has length {got}, estimator expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("functional is not finite at theta = {0}")]
    NonFiniteTruth(f64),
    #[error("replication {rep} failed: {source}")]
    Replication {
        rep: usize,
        #[source]
        source: EstimatorError,
    },
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("candidate `{label}` lies outside the parameter space")]
    CandidateOutsideSpace { label: String },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Funcspace(#[from] FuncspaceError),
}

/// The resolved configuration a report was produced under.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub d: usize,
    pub s: usize,
    pub m: f64,
    pub c: f64,
    pub functional: String,
    pub noise_mode: String,
    pub n_reps: usize,
    pub seed: u64,
}

/// Monte Carlo mean squared error with its bias/variance split and the
/// theoretical rates for comparison. `rate_lower` and `ratio` are NaN when
/// unavailable (degenerate rate or unmet preconditions).
#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    pub config: RunSummary,
    pub theta_label: String,
    pub mse: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub se_mse: f64,
    pub rate_upper: f64,
    pub rate_lower: f64,
    pub ratio: f64,
}

/// Which estimator a risk run drives.
#[derive(Clone, Copy)]
pub enum EstimatorRef<'a> {
    MultiScale(&'a FittedEstimator),
    Simplified(&'a SimplifiedEstimator),
}

impl<'a> EstimatorRef<'a> {
    pub fn d(&self) -> usize {
        match self {
            EstimatorRef::MultiScale(e) => e.schedule.d,
            EstimatorRef::Simplified(e) => e.d,
        }
    }

    pub fn rate_upper(&self) -> f64 {
        match self {
            EstimatorRef::MultiScale(e) => e.rate_upper(),
            EstimatorRef::Simplified(e) => e.rate_upper(),
        }
    }

    pub fn functional(&self) -> &MarginalFunctional {
        match self {
            EstimatorRef::MultiScale(e) => &e.functional,
            EstimatorRef::Simplified(e) => &e.functional,
        }
    }

    fn summary(&self, n_reps: usize, seed: u64) -> RunSummary {
        match self {
            EstimatorRef::MultiScale(e) => RunSummary {
                d: e.schedule.d,
                s: e.schedule.s,
                m: e.schedule.top.m,
                c: e.schedule.c,
                functional: e.functional.label().to_string(),
                noise_mode: e.noise_mode.as_str().to_string(),
                n_reps,
                seed,
            },
            EstimatorRef::Simplified(e) => RunSummary {
                d: e.d,
                s: e.d,
                m: e.m,
                c: e.c,
                functional: e.functional.label().to_string(),
                noise_mode: "raw".to_string(),
                n_reps,
                seed,
            },
        }
    }

    /// One replication: simulate the observation(s) from the replication
    /// stream and run the estimator.
    fn estimate_replication(
        &self,
        theta: &[f64],
        seed: u64,
        rep: u64,
    ) -> Result<f64, EstimatorError> {
        let d = theta.len();
        let mut rng = streams::rep_rng(seed, rep);
        let mut noise = vec![0.0; d];
        match self {
            EstimatorRef::MultiScale(e) => match e.noise_mode {
                NoiseMode::OraclePairs => {
                    streams::fill_standard_normal(&mut rng, &mut noise);
                    let y1: Vec<f64> =
                        theta.iter().zip(&noise).map(|(t, z)| t + z).collect();
                    streams::fill_standard_normal(&mut rng, &mut noise);
                    let y2: Vec<f64> =
                        theta.iter().zip(&noise).map(|(t, z)| t + z).collect();
                    e.estimate_pairs(&y1, &y2)
                }
                NoiseMode::Duplicate => {
                    streams::fill_standard_normal(&mut rng, &mut noise);
                    let y: Vec<f64> = theta.iter().zip(&noise).map(|(t, z)| t + z).collect();
                    e.estimate(&y, streams::mix_seed(seed, rep))
                }
            },
            EstimatorRef::Simplified(e) => {
                streams::fill_standard_normal(&mut rng, &mut noise);
                let y: Vec<f64> = theta.iter().zip(&noise).map(|(t, z)| t + z).collect();
                e.estimate(&y)
            }
        }
    }
}

/// One draw of the Gaussian mean model, `y = theta + xi`. Uses stream 0 of
/// the seed, i.e. the same noise replication 0 of a risk run would see.
pub fn simulate(theta: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = streams::rep_rng(seed, 0);
    let mut noise = vec![0.0; theta.len()];
    streams::fill_standard_normal(&mut rng, &mut noise);
    theta.iter().zip(&noise).map(|(t, z)| t + z).collect()
}

/// Measures the mean squared error of an estimator at a fixed `theta`.
pub fn measure_risk(
    est: EstimatorRef,
    theta: &[f64],
    theta_label: &str,
    n_reps: usize,
    seed: u64,
    rate_lower: Option<f64>,
) -> Result<RiskReport, RiskError> {
    if n_reps < 100 {
        return Err(RiskError::TooFewReplications(n_reps));
    }
    if theta.len() != est.d() {
        return Err(RiskError::DimensionMismatch {
            expected: est.d(),
            got: theta.len(),
        });
    }
    let f = est.functional();
    for &t in theta {
        if !f.eval(t).is_finite() {
            return Err(RiskError::NonFiniteTruth(t));
        }
    }
    let truth = accum::neumaier_sum(theta.iter().map(|&t| f.eval(t)));

    let estimates: Vec<f64> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            est.estimate_replication(theta, seed, rep as u64)
                .map_err(|source| RiskError::Replication { rep, source })
        })
        .collect::<Result<Vec<f64>, RiskError>>()?;

    let n = n_reps as f64;
    let mean = accum::neumaier_sum(estimates.iter().copied()) / n;
    let mse = accum::neumaier_sum(estimates.iter().map(|e| (e - truth) * (e - truth))) / n;
    let variance = accum::neumaier_sum(estimates.iter().map(|e| (e - mean) * (e - mean))) / n;
    let bias_sq = (mean - truth) * (mean - truth);
    // Jackknife over replications; for the mean of squared errors this
    // reduces to sqrt(sum (z_i - mse)^2 / (n (n-1))).
    let se_mse = (accum::neumaier_sum(estimates.iter().map(|e| {
        let z = (e - truth) * (e - truth);
        (z - mse) * (z - mse)
    })) / (n * (n - 1.0)))
        .sqrt();

    let rate_upper = est.rate_upper();
    let ratio = if rate_upper > 0.0 {
        mse / rate_upper
    } else {
        f64::NAN
    };
    Ok(RiskReport {
        config: est.summary(n_reps, seed),
        theta_label: theta_label.to_string(),
        mse,
        bias_sq,
        variance,
        se_mse,
        rate_upper,
        rate_lower: rate_lower.unwrap_or(f64::NAN),
        ratio,
    })
}

/// Per-candidate reports plus the index of the worst (max-MSE) candidate.
#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub reports: Vec<RiskReport>,
    pub worst_index: usize,
}

impl SweepOutcome {
    pub fn worst(&self) -> &RiskReport {
        &self.reports[self.worst_index]
    }
}

/// Measures risk over a family of candidate configurations and reports the
/// worst case. Every candidate must belong to the parameter space.
pub fn adversarial_sweep(
    est: EstimatorRef,
    space: &ParameterSpace,
    candidates: &[(String, Vec<f64>)],
    n_reps: usize,
    seed: u64,
    rate_lower: Option<f64>,
) -> Result<SweepOutcome, RiskError> {
    if candidates.is_empty() {
        return Err(RiskError::EmptyCandidates);
    }
    let mut reports = Vec::with_capacity(candidates.len());
    for (label, theta) in candidates {
        if !space.contains(theta) {
            return Err(RiskError::CandidateOutsideSpace {
                label: label.clone(),
            });
        }
        reports.push(measure_risk(est, theta, label, n_reps, seed, rate_lower)?);
    }
    let worst_index = reports
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mse.total_cmp(&b.1.mse))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(SweepOutcome {
        reports,
        worst_index,
    })
}

/// The default adversarial family: all `s` spikes placed at each magnitude
/// drawn from the schedule's landmarks (quarter scale, the thresholds, twice
/// the thresholds, the scale caps) plus the sup-norm bound, and the zero
/// vector.
pub fn default_candidates(
    schedule: &crate::estimator::LevelSchedule,
    space: &ParameterSpace,
) -> Result<Vec<(String, Vec<f64>)>, FuncspaceError> {
    let mut out = vec![("zero".to_string(), vec![0.0; space.d])];
    if space.s == 0 {
        return Ok(out);
    }
    let mut magnitudes: Vec<f64> = Vec::new();
    for idx in 0..schedule.num_selectors() {
        let lev = schedule.scale(idx);
        magnitudes.push(lev.m / 4.0);
        magnitudes.push(lev.m);
        if lev.t.is_finite() {
            magnitudes.push(lev.t);
            magnitudes.push(2.0 * lev.t);
        }
    }
    magnitudes.push(space.sup_bound);
    magnitudes.retain(|&v| v > 0.0 && v <= space.sup_bound * (1.0 + 1e-12));
    magnitudes.sort_by(f64::total_cmp);
    magnitudes.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    for mag in magnitudes {
        let mag = mag.min(space.sup_bound);
        let theta = make_theta(space, Placement::FirstCoords, &SpikeValues::AllAt(mag), 0)?;
        out.push((format!("spikes_at_{mag:.4}"), theta));
    }
    Ok(out)
}

/// One row of the rate-scaling table.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub d: usize,
    pub s: usize,
    pub mse_worst: f64,
    pub rate_upper: f64,
    pub ratio: f64,
    pub worst_label: String,
}

/// Worst-candidate MSE against the theoretical rate over a sequence of
/// dimensions, with `s` chosen by `s_rule`. Stability of the ratio column is
/// the checkable surrogate for the unspecified rate constant.
pub fn rate_scaling_study(
    f: &MarginalFunctional,
    d_list: &[usize],
    s_rule: &dyn Fn(usize) -> usize,
    c: f64,
    n_reps: usize,
    seed: u64,
    noise_mode: NoiseMode,
) -> Result<Vec<ScalingRow>, RiskError> {
    let mut rows = Vec::with_capacity(d_list.len());
    for &d in d_list {
        let s = s_rule(d);
        let schedule = crate::estimator::build_schedule(d, s, c)?;
        let fitted = crate::estimator::fit(f, &schedule, noise_mode)?;
        let space = ParameterSpace::new(d, s, schedule.top.m)?;
        let candidates = default_candidates(&schedule, &space)?;
        let sweep = adversarial_sweep(
            EstimatorRef::MultiScale(&fitted),
            &space,
            &candidates,
            n_reps,
            seed,
            None,
        )?;
        let worst = sweep.worst();
        rows.push(ScalingRow {
            d,
            s,
            mse_worst: worst.mse,
            rate_upper: worst.rate_upper,
            ratio: worst.ratio,
            worst_label: worst.theta_label.clone(),
        });
    }
    Ok(rows)
}
