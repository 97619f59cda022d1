//! Marginal functionals, the sparse bounded parameter space, and numeric
//! probes for the growth/approximation assumptions the rate theory needs.

pub mod expr;

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use crate::polyapprox::{self, ApproxError};
use crate::streams;

#[derive(Debug, Error)]
pub enum FuncspaceError {
    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),
    #[error("abs_pow requires a single exponent gamma > 0, got {0:?}")]
    InvalidAbsPowParams(Vec<f64>),
    #[error("functional `{name}` takes no parameters, got {got}")]
    UnexpectedParams { name: String, got: usize },
    #[error("requires s <= d, got s={s}, d={d}")]
    SparsityExceedsDimension { s: usize, d: usize },
    #[error("assumption probe requires s^2 > d, got s={s}, d={d}")]
    ProbeRequiresDenseSparsity { s: usize, d: usize },
    #[error("probe grid must have at least 4 points, got {0}")]
    GridTooSmall(usize),
    #[error("sup-norm bound must be positive and finite, got {0}")]
    NonPositiveBound(f64),
    #[error("spike value {value} exceeds the sup-norm bound {bound}")]
    ValueExceedsBound { value: f64, bound: f64 },
    #[error("{count} spike values exceed the sparsity budget s={s}")]
    TooManySpikes { count: usize, s: usize },
    #[error("expression is not finite at t=0; supply value_at_zero explicitly")]
    UndefinedAtZero,
    #[error(transparent)]
    Expr(#[from] expr::ExprError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
}

/// A scalar map `F` applied coordinatewise to the mean vector, together with
/// the metadata the estimators need: `F(0)` (centering is applied by callers,
/// never baked in here) and whether `F` is even.
#[derive(Clone)]
pub struct MarginalFunctional {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
    value_at_zero: f64,
    is_even: bool,
    params: Vec<f64>,
}

impl fmt::Debug for MarginalFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarginalFunctional")
            .field("label", &self.label)
            .field("value_at_zero", &self.value_at_zero)
            .field("is_even", &self.is_even)
            .field("params", &self.params)
            .finish()
    }
}

impl MarginalFunctional {
    /// Wraps a user-supplied evaluation callback. The caller must state
    /// `F(0)`; it is never inferred numerically.
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        value_at_zero: f64,
        is_even: bool,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            label: label.into(),
            value_at_zero,
            is_even,
            params: Vec::new(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    pub fn is_even(&self) -> bool {
        self.is_even
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// The centered functional `t -> F(t) - F(0)`.
    pub fn centered(&self) -> MarginalFunctional {
        let inner = Arc::clone(&self.eval);
        let f0 = self.value_at_zero;
        MarginalFunctional {
            eval: Arc::new(move |t| inner(t) - f0),
            label: format!("{}-centered", self.label),
            value_at_zero: 0.0,
            is_even: self.is_even,
            params: self.params.clone(),
        }
    }

    /// `F + kappa`, used by the centering-invariance checks.
    pub fn shifted(&self, kappa: f64) -> MarginalFunctional {
        let inner = Arc::clone(&self.eval);
        MarginalFunctional {
            eval: Arc::new(move |t| inner(t) + kappa),
            label: format!("{}+{}", self.label, kappa),
            value_at_zero: self.value_at_zero + kappa,
            is_even: self.is_even,
            params: self.params.clone(),
        }
    }

    /// Grid sup-norm of the centered functional over `[a, b]`.
    pub fn sup_norm_centered(&self, a: f64, b: f64, n_grid: usize) -> f64 {
        let n = n_grid.max(2);
        let mut best = 0.0f64;
        for i in 0..n {
            let t = a + (b - a) * (i as f64) / ((n - 1) as f64);
            let v = (self.eval(t) - self.value_at_zero).abs();
            if v > best {
                best = v;
            }
        }
        best
    }

    /// Checks `F(t) = F(-t)` on a probe grid to 1e-12 relative.
    pub fn symmetry_holds(&self, m: f64) -> bool {
        let n = 64;
        for i in 1..=n {
            let t = m * (i as f64) / (n as f64);
            let lhs = self.eval(t);
            let rhs = self.eval(-t);
            let scale = 1.0f64.max(lhs.abs());
            if (lhs - rhs).abs() > 1e-12 * scale {
                return false;
            }
        }
        true
    }
}

/// Builds one of the named marginal functionals.
///
/// Supported names: `abs_pow` (|t|^gamma, one parameter gamma > 0), `square`,
/// `identity`, and `neg_t_log` (`-t log|t|`, extended by continuity with
/// value 0 at t = 0).
pub fn builtin_functional(
    name: &str,
    params: &[f64],
) -> Result<MarginalFunctional, FuncspaceError> {
    let no_params = |got: usize, name: &str| -> Result<(), FuncspaceError> {
        if got != 0 {
            return Err(FuncspaceError::UnexpectedParams {
                name: name.to_string(),
                got,
            });
        }
        Ok(())
    };
    match name {
        "abs_pow" => {
            if params.len() != 1 || !(params[0] > 0.0) || !params[0].is_finite() {
                return Err(FuncspaceError::InvalidAbsPowParams(params.to_vec()));
            }
            let gamma = params[0];
            let mut f = MarginalFunctional::new(
                format!("abs_pow({gamma})"),
                move |t: f64| t.abs().powf(gamma),
                0.0,
                true,
            );
            f.params = vec![gamma];
            Ok(f)
        }
        "square" => {
            no_params(params.len(), name)?;
            Ok(MarginalFunctional::new("square", |t| t * t, 0.0, true))
        }
        "identity" => {
            no_params(params.len(), name)?;
            Ok(MarginalFunctional::new("identity", |t| t, 0.0, false))
        }
        "neg_t_log" => {
            no_params(params.len(), name)?;
            Ok(MarginalFunctional::new(
                "neg_t_log",
                |t: f64| {
                    if t == 0.0 {
                        0.0
                    } else {
                        -t * t.abs().ln()
                    }
                },
                0.0,
                false,
            ))
        }
        other => Err(FuncspaceError::UnknownFunctional(other.to_string())),
    }
}

/// Compiles an expression string (variable `t`; `+ - * / ^ abs log exp`) into
/// a functional. `value_at_zero` overrides evaluation of the expression at 0,
/// which is required when the expression is undefined there. Evenness is
/// detected by probing.
pub fn functional_from_expression(
    src: &str,
    value_at_zero: Option<f64>,
) -> Result<MarginalFunctional, FuncspaceError> {
    let compiled = expr::parse_expression(src)?;
    let f0 = match value_at_zero {
        Some(v) => v,
        None => {
            let v = compiled.eval(0.0);
            if !v.is_finite() {
                return Err(FuncspaceError::UndefinedAtZero);
            }
            v
        }
    };
    let probe = {
        let c = compiled.clone();
        move |t: f64| c.eval(t)
    };
    let mut even = true;
    for i in 1..=64 {
        let t = 3.0 * (i as f64) / 64.0;
        let lhs = probe(t);
        let rhs = probe(-t);
        if !lhs.is_finite() || !rhs.is_finite() || (lhs - rhs).abs() > 1e-12 * 1.0f64.max(lhs.abs())
        {
            even = false;
            break;
        }
    }
    Ok(MarginalFunctional::new(
        format!("expr({src})"),
        move |t| compiled.eval(t),
        f0,
        even,
    ))
}

/// The parameter set: vectors with at most `s` nonzero coordinates, each
/// bounded by `sup_bound` in absolute value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParameterSpace {
    pub d: usize,
    pub s: usize,
    pub sup_bound: f64,
}

impl ParameterSpace {
    /// `s = 0` is permitted and denotes the space containing only the zero
    /// vector.
    pub fn new(d: usize, s: usize, sup_bound: f64) -> Result<Self, FuncspaceError> {
        if s > d {
            return Err(FuncspaceError::SparsityExceedsDimension { s, d });
        }
        if !(sup_bound > 0.0) || !sup_bound.is_finite() {
            return Err(FuncspaceError::NonPositiveBound(sup_bound));
        }
        Ok(Self { d, s, sup_bound })
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.d {
            return false;
        }
        let nonzeros = theta.iter().filter(|v| **v != 0.0).count();
        nonzeros <= self.s && theta.iter().all(|v| v.abs() <= self.sup_bound)
    }
}

/// Where the nonzero coordinates of a generated vector go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    FirstCoords,
    Random,
}

/// The values placed on the support.
#[derive(Debug, Clone)]
pub enum SpikeValues {
    AllAt(f64),
    Spread(Vec<f64>),
}

/// Deterministically generates a member of the parameter space: `s` spikes
/// (or the given spread of values) placed on the first coordinates or on a
/// seeded random support.
pub fn make_theta(
    space: &ParameterSpace,
    placement: Placement,
    values: &SpikeValues,
    seed: u64,
) -> Result<Vec<f64>, FuncspaceError> {
    let vals: Vec<f64> = match values {
        SpikeValues::AllAt(v) => vec![*v; space.s],
        SpikeValues::Spread(list) => list.clone(),
    };
    if vals.len() > space.s {
        return Err(FuncspaceError::TooManySpikes {
            count: vals.len(),
            s: space.s,
        });
    }
    for &v in &vals {
        if v.abs() > space.sup_bound {
            return Err(FuncspaceError::ValueExceedsBound {
                value: v,
                bound: space.sup_bound,
            });
        }
    }
    let mut theta = vec![0.0; space.d];
    match placement {
        Placement::FirstCoords => {
            theta[..vals.len()].copy_from_slice(&vals);
        }
        Placement::Random => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(streams::THETA_STREAM);
            let idx = streams::sample_indices(&mut rng, space.d, vals.len());
            for (&i, &v) in idx.iter().zip(vals.iter()) {
                theta[i] = v;
            }
        }
    }
    Ok(theta)
}

/// Fitted growth exponents for the assumption probes. These are diagnostics,
/// not proofs: thresholds are applied by callers.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// Fitted exponent of `log sup|F - F(0)|` against `M^2`.
    pub eps1_hat: f64,
    /// Fitted exponent of `log delta^{-1}_{M^2,M}` against `M^2`.
    pub eps2_hat: f64,
    /// Worst delta ratio under +-10% perturbations of `(K, M)`.
    pub a3_ratio_max: f64,
    /// The approximation error vanished somewhere on the probe grid, so the
    /// non-smoothness assumption fails (`F` is polynomial-like).
    pub a2_degenerate: bool,
    /// Probe points `(M, sup|F - F(0)| on [-M, M])`.
    pub grid: Vec<(f64, f64)>,
}

/// Probes the growth and approximation-rate assumptions for `F` over the
/// range of scales the schedule for `(s, d)` would use.
pub fn probe_assumptions(
    f: &MarginalFunctional,
    s: usize,
    d: usize,
    grid_size: usize,
) -> Result<AssumptionReport, FuncspaceError> {
    if (s as f64) * (s as f64) <= d as f64 {
        return Err(FuncspaceError::ProbeRequiresDenseSparsity { s, d });
    }
    if grid_size < 4 {
        return Err(FuncspaceError::GridTooSmall(grid_size));
    }
    let ratio = (s as f64) * (s as f64) / (d as f64);
    let m_lo = (2.0 * ratio.ln()).sqrt();
    let m_hi = (2.0 * (d as f64).ln()).sqrt();
    let degenerate_range = (m_hi - m_lo).abs() < 1e-9;
    let ms: Vec<f64> = if degenerate_range {
        vec![m_lo]
    } else {
        (0..grid_size)
            .map(|i| m_lo + (m_hi - m_lo) * (i as f64) / ((grid_size - 1) as f64))
            .collect()
    };

    let mut grid = Vec::with_capacity(ms.len());
    let mut xs = Vec::new();
    let mut ys1 = Vec::new();
    let mut ys2 = Vec::new();
    let mut a2_degenerate = false;
    let mut a3_ratio_max = 1.0f64;

    for &m in &ms {
        let sup = f.sup_norm_centered(-m, m, 2001);
        grid.push((m, sup));
        let x = m * m;
        if sup > 0.0 {
            xs.push(x);
            ys1.push(sup.ln());
        }
        let k = (x.floor() as usize).max(1);
        let approx = polyapprox::remez_auto(f, k, -m, m)?;
        if approx.delta == 0.0 {
            a2_degenerate = true;
        } else {
            ys2.push((x, -approx.delta.ln()));
            for scale in [1.1f64, 0.9] {
                let kp = ((k as f64 * scale).round() as usize).max(1);
                let mp = m * scale;
                let perturbed = polyapprox::remez_auto(f, kp, -mp, mp)?;
                if perturbed.delta > 0.0 {
                    let r = approx.delta / perturbed.delta;
                    a3_ratio_max = a3_ratio_max.max(r).max(1.0 / r);
                }
            }
        }
    }

    // With a single probe scale (s = d makes the range collapse) the slope is
    // replaced by the zero-intercept pointwise exponent.
    let eps1_hat = fit_exponent(&xs, &ys1);
    let (xs2, ys2v): (Vec<f64>, Vec<f64>) = ys2.iter().copied().unzip();
    let eps2_hat = fit_exponent(&xs2, &ys2v);

    Ok(AssumptionReport {
        eps1_hat,
        eps2_hat,
        a3_ratio_max,
        a2_degenerate,
        grid,
    })
}

fn fit_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => ys[0] / xs[0],
        n => {
            let nf = n as f64;
            let mx = xs.iter().sum::<f64>() / nf;
            let my = ys.iter().sum::<f64>() / nf;
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            if sxx < 1e-12 {
                return my / mx;
            }
            let sxy: f64 = xs
                .iter()
                .zip(ys.iter())
                .map(|(x, y)| (x - mx) * (y - my))
                .sum();
            sxy / sxx
        }
    }
}
