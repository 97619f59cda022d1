//! Subcommand implementations: resolve parameters, validate preconditions,
//! run the library, emit artifacts.

use std::path::PathBuf;

use serde_json::json;

use addfunc_core::estimator::{build_schedule, fit, fit_simplified, NoiseMode};
use addfunc_core::funcspace::{make_theta, ParameterSpace, Placement, SpikeValues};
use addfunc_core::lowerbound::{certificate, rate_expression_sampled};
use addfunc_core::polyapprox::{grid_lp_approx, remez_auto};
use addfunc_core::risk::{measure_risk, EstimatorRef, RiskReport};
use addfunc_core::{probe_assumptions, MarginalFunctional};

use crate::config::{
    parse_functional, parse_interval, resolve, resolve_string, CliError, ConfigFile,
};
use crate::output::{deliver, emit_json, risk_csv, ResolvedConfig};

pub struct Context {
    pub file: ConfigFile,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Context {
    fn functional(&self, flag: Option<String>) -> Result<(MarginalFunctional, String), CliError> {
        let spec = resolve_string(flag, &self.file, "functional", None)?;
        let f = parse_functional(&spec)?;
        Ok((f, spec))
    }

    fn seed(&self) -> Result<u64, CliError> {
        resolve(self.seed, &self.file, "seed", Some(0u64))
    }
}

pub fn approx(
    ctx: &Context,
    functional: Option<String>,
    degree: Option<usize>,
    interval: Option<String>,
    method: Option<String>,
    n_grid: Option<usize>,
) -> Result<(), CliError> {
    let (f, spec) = ctx.functional(functional)?;
    let degree = resolve(degree, &ctx.file, "degree", None)?;
    let interval_raw = resolve_string(interval, &ctx.file, "interval", Some("-1,1"))?;
    let (a, b) = parse_interval(&interval_raw)?;
    let method = resolve_string(method, &ctx.file, "method", Some("remez"))?;

    let mut config = ResolvedConfig::new();
    config
        .put("functional", &spec)
        .put("degree", degree)
        .put("interval", &interval_raw)
        .put("method", &method);

    let result = match method.as_str() {
        "remez" => remez_auto(&f, degree, a, b).map_err(CliError::num)?,
        "lp" => {
            let need = 10 * (degree + 2);
            let n = resolve(n_grid, &ctx.file, "n_grid", Some(need.max(2001)))?;
            if n < need {
                return Err(CliError::pre(format!(
                    "requires n_grid >= 10*(K+2) = {need}, got {n}"
                )));
            }
            config.put("n_grid", n);
            grid_lp_approx(&f, degree, a, b, n).map_err(CliError::num)?
        }
        other => {
            return Err(CliError::pre(format!(
                "unknown method `{other}` (expected remez or lp)"
            )))
        }
    };
    eprintln!(
        "approx: {} degree {} on [{a}, {b}]: delta = {}",
        spec, degree, result.delta
    );
    emit_json(ctx.out.as_deref(), config, result)
}

fn parse_noise_mode(raw: &str) -> Result<NoiseMode, CliError> {
    match raw {
        "oracle" | "oracle_pairs" => Ok(NoiseMode::OraclePairs),
        "duplicate" => Ok(NoiseMode::Duplicate),
        other => Err(CliError::pre(format!(
            "unknown noise mode `{other}` (expected oracle or duplicate)"
        ))),
    }
}

/// Reads observations: one value per line, or `y1,y2` pairs when
/// `want_pairs`. `#` lines and blank lines are skipped.
fn read_observations(path: &PathBuf, want_pairs: bool) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::pre(format!("cannot read input {}: {e}", path.display())))?;
    let mut y1 = Vec::new();
    let mut y2 = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |raw: &str| -> Result<f64, CliError> {
            raw.parse::<f64>().map_err(|_| {
                CliError::pre(format!("line {}: invalid number `{raw}`", lineno + 1))
            })
        };
        match (want_pairs, cols.len()) {
            (false, 1) => y1.push(parse(cols[0])?),
            (true, 2) => {
                y1.push(parse(cols[0])?);
                y2.push(parse(cols[1])?);
            }
            (true, n) => {
                return Err(CliError::pre(format!(
                    "line {}: oracle mode requires two comma-separated columns (y1,y2), got {n}",
                    lineno + 1
                )))
            }
            (false, n) => {
                return Err(CliError::pre(format!(
                    "line {}: expected one value per line, got {n} columns",
                    lineno + 1
                )))
            }
        }
    }
    if y1.is_empty() {
        return Err(CliError::pre("input contains no observations"));
    }
    Ok((y1, y2))
}

#[allow(clippy::too_many_arguments)]
pub fn estimate(
    ctx: &Context,
    functional: Option<String>,
    input: Option<PathBuf>,
    s: Option<usize>,
    c: Option<f64>,
    noise_mode: Option<String>,
    estimator: Option<String>,
    m: Option<f64>,
) -> Result<(), CliError> {
    let (f, spec) = ctx.functional(functional)?;
    let input = match input {
        Some(p) => p,
        None => PathBuf::from(resolve_string(None, &ctx.file, "input", None)?),
    };
    let c = resolve(c, &ctx.file, "c", Some(1.0))?;
    let kind = resolve_string(estimator, &ctx.file, "estimator", Some("multiscale"))?;
    let seed = ctx.seed()?;

    let mut config = ResolvedConfig::new();
    config
        .put("functional", &spec)
        .put("input", input.display().to_string())
        .put("c", c)
        .put("estimator", &kind)
        .put("seed", seed);

    match kind.as_str() {
        "multiscale" => {
            let s = resolve(s, &ctx.file, "s", None)?;
            let mode_raw = resolve_string(noise_mode, &ctx.file, "noise_mode", Some("duplicate"))?;
            let mode = parse_noise_mode(&mode_raw)?;
            let (y1, y2) = read_observations(&input, mode == NoiseMode::OraclePairs)?;
            let d = y1.len();
            if (s as f64) < 2.0 * (d as f64).sqrt() || s > d {
                return Err(CliError::pre(format!(
                    "requires 2*sqrt(d) <= s <= d, got s={s}, d={d}"
                )));
            }
            config.put("s", s).put("d", d).put("noise_mode", &mode_raw);
            let schedule = build_schedule(d, s, c).map_err(CliError::num)?;
            let fitted = fit(&f, &schedule, mode).map_err(CliError::num)?;
            let value = match mode {
                NoiseMode::OraclePairs => fitted.estimate_pairs(&y1, &y2),
                NoiseMode::Duplicate => fitted.estimate(&y1, seed),
            }
            .map_err(CliError::num)?;
            eprintln!("estimate: {value}");
            emit_json(
                ctx.out.as_deref(),
                config,
                json!({
                    "estimate": value,
                    "schedule": fitted.schedule,
                    "per_level_delta": fitted.per_level_delta(),
                    "rate": fitted.rate_upper(),
                }),
            )
        }
        "simplified" => {
            let (y, _) = read_observations(&input, false)?;
            let d = y.len();
            let bound = (d as f64).ln().sqrt();
            let m = resolve(m, &ctx.file, "m", Some(bound))?;
            if !(m > 0.0) || m > bound {
                return Err(CliError::pre(format!(
                    "requires 0 < M <= sqrt(log d) = {bound:.4}, got M={m}"
                )));
            }
            config.put("d", d).put("m", m);
            let est = fit_simplified(&f, d, m, c).map_err(CliError::num)?;
            let value = est.estimate(&y).map_err(CliError::num)?;
            eprintln!("estimate: {value}");
            emit_json(
                ctx.out.as_deref(),
                config,
                json!({
                    "estimate": value,
                    "degree": est.k,
                    "delta": est.poly.delta,
                    "rate": est.rate_upper(),
                }),
            )
        }
        other => Err(CliError::pre(format!(
            "unknown estimator `{other}` (expected multiscale or simplified)"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn risk(
    ctx: &Context,
    functional: Option<String>,
    d: Option<usize>,
    s: Option<usize>,
    m: Option<f64>,
    c: Option<f64>,
    noise_mode: Option<String>,
    reps: Option<usize>,
    theta: Option<String>,
    estimator: Option<String>,
) -> Result<(), CliError> {
    let (f, spec) = ctx.functional(functional)?;
    let d = resolve(d, &ctx.file, "d", None)?;
    let s = resolve(s, &ctx.file, "s", None)?;
    let c = resolve(c, &ctx.file, "c", Some(1.0))?;
    let reps = resolve(reps, &ctx.file, "reps", Some(1000usize))?;
    let seed = ctx.seed()?;
    let theta_spec = resolve_string(theta, &ctx.file, "theta", Some("sweep"))?;
    let mode_raw = resolve_string(noise_mode, &ctx.file, "noise_mode", Some("oracle"))?;
    let mode = parse_noise_mode(&mode_raw)?;
    let kind_raw = resolve_string(estimator, &ctx.file, "estimator", Some("auto"))?;
    let kind = match kind_raw.as_str() {
        "auto" => {
            if s == d {
                "simplified"
            } else {
                "multiscale"
            }
        }
        "multiscale" | "simplified" => kind_raw.as_str(),
        other => {
            return Err(CliError::pre(format!(
                "unknown estimator `{other}` (expected auto, multiscale, or simplified)"
            )))
        }
    };

    if reps < 100 {
        return Err(CliError::pre(format!(
            "requires n_reps >= 100, got {reps}"
        )));
    }
    if s > d {
        return Err(CliError::pre(format!("requires s <= d, got s={s}, d={d}")));
    }

    // Rate lower expression where its preconditions hold.
    let rate_lower = if (s as f64) * (s as f64) >= 2.0 * d as f64 && s <= d && s > 0 {
        rate_expression_sampled(&f, d, s, 64)
            .map(|r| r.value)
            .ok()
    } else {
        None
    };

    let mut config = ResolvedConfig::new();
    config
        .put("functional", &spec)
        .put("d", d)
        .put("s", s)
        .put("c", c)
        .put("reps", reps)
        .put("seed", seed)
        .put("theta", &theta_spec)
        .put("estimator", kind)
        .put("noise_mode", &mode_raw);

    let reports: Vec<RiskReport>;
    match kind {
        "simplified" => {
            let bound = (d as f64).ln().sqrt();
            let m = resolve(m, &ctx.file, "m", Some(bound))?;
            if !(m > 0.0) || m > bound {
                return Err(CliError::pre(format!(
                    "requires 0 < M <= sqrt(log d) = {bound:.4}, got M={m}"
                )));
            }
            config.put("m", m);
            let est = fit_simplified(&f, d, m, c).map_err(CliError::num)?;
            let space = ParameterSpace::new(d, s, m).map_err(|e| CliError::pre(e.to_string()))?;
            let mut landmarks = vec![m / 4.0, m / 2.0, m];
            landmarks.retain(|v| *v > 0.0);
            let candidates = build_candidates(&theta_spec, &space, &landmarks)?;
            reports = run_candidates(
                EstimatorRef::Simplified(&est),
                &space,
                &candidates,
                reps,
                seed,
                rate_lower,
            )?;
        }
        _ => {
            if (s as f64) < 2.0 * (d as f64).sqrt() {
                return Err(CliError::pre(format!(
                    "requires 2*sqrt(d) <= s, got s={s}, d={d} (use --estimator simplified)"
                )));
            }
            let schedule = build_schedule(d, s, c).map_err(CliError::num)?;
            if schedule.l_max < 0 {
                eprintln!("warning: scale sequence is empty; using the top scale only");
            }
            let bound = resolve(m, &ctx.file, "m", Some(schedule.top.m))?;
            if !(bound > 0.0) {
                return Err(CliError::pre(format!("requires M > 0, got M={bound}")));
            }
            config.put("m", bound);
            let est = fit(&f, &schedule, mode).map_err(CliError::num)?;
            let space =
                ParameterSpace::new(d, s, bound).map_err(|e| CliError::pre(e.to_string()))?;
            let mut landmarks = Vec::new();
            for idx in 0..schedule.num_selectors() {
                let lev = schedule.scale(idx);
                landmarks.push(lev.m / 4.0);
                landmarks.push(lev.m);
                if lev.t.is_finite() {
                    landmarks.push(lev.t);
                    landmarks.push(2.0 * lev.t);
                }
            }
            landmarks.push(bound);
            let candidates = build_candidates(&theta_spec, &space, &landmarks)?;
            reports = run_candidates(
                EstimatorRef::MultiScale(&est),
                &space,
                &candidates,
                reps,
                seed,
                rate_lower,
            )?;
        }
    }

    for r in &reports {
        eprintln!(
            "risk[{}]: mse = {} (bias^2 {}, var {})",
            r.theta_label, r.mse, r.bias_sq, r.variance
        );
    }
    let payload = risk_csv(&config, &reports);
    deliver(ctx.out.as_deref(), payload.as_bytes())
}

/// Expands a theta spec into labelled candidates inside the space.
fn build_candidates(
    spec: &str,
    space: &ParameterSpace,
    sweep_magnitudes: &[f64],
) -> Result<Vec<(String, Vec<f64>)>, CliError> {
    let spike = |v: f64| -> Result<Vec<f64>, CliError> {
        make_theta(space, Placement::FirstCoords, &SpikeValues::AllAt(v), 0)
            .map_err(|e| CliError::pre(e.to_string()))
    };
    match spec {
        "zero" => Ok(vec![("zero".to_string(), vec![0.0; space.d])]),
        "sweep" => {
            let mut out = vec![("zero".to_string(), vec![0.0; space.d])];
            if space.s > 0 {
                let mut mags: Vec<f64> = sweep_magnitudes
                    .iter()
                    .copied()
                    .filter(|v| *v > 0.0 && *v <= space.sup_bound * (1.0 + 1e-12))
                    .map(|v| v.min(space.sup_bound))
                    .collect();
                mags.sort_by(f64::total_cmp);
                mags.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
                for v in mags {
                    out.push((format!("spikes_at_{v:.4}"), spike(v)?));
                }
            }
            Ok(out)
        }
        other => {
            if let Some(raw) = other.strip_prefix("all-at:") {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| CliError::pre(format!("invalid theta magnitude `{raw}`")))?;
                if v.abs() > space.sup_bound {
                    return Err(CliError::pre(format!(
                        "requires |theta_i| <= M = {}, got {v}",
                        space.sup_bound
                    )));
                }
                Ok(vec![(format!("all_at_{v}"), spike(v)?)])
            } else if let Some(raw) = other.strip_prefix("spread:") {
                let vals: Result<Vec<f64>, _> =
                    raw.split(',').map(|p| p.trim().parse::<f64>()).collect();
                let vals =
                    vals.map_err(|_| CliError::pre(format!("invalid spread list `{raw}`")))?;
                let theta =
                    make_theta(space, Placement::FirstCoords, &SpikeValues::Spread(vals), 0)
                        .map_err(|e| CliError::pre(e.to_string()))?;
                Ok(vec![(format!("spread_{}", raw.replace(',', "_")), theta)])
            } else {
                Err(CliError::pre(format!(
                    "unknown theta spec `{other}` (expected zero, all-at:V, spread:..., or sweep)"
                )))
            }
        }
    }
}

fn run_candidates(
    est: EstimatorRef,
    space: &ParameterSpace,
    candidates: &[(String, Vec<f64>)],
    reps: usize,
    seed: u64,
    rate_lower: Option<f64>,
) -> Result<Vec<RiskReport>, CliError> {
    let mut reports = Vec::with_capacity(candidates.len());
    for (label, theta) in candidates {
        if !space.contains(theta) {
            return Err(CliError::pre(format!(
                "candidate `{label}` lies outside the parameter space"
            )));
        }
        reports.push(
            measure_risk(est, theta, label, reps, seed, rate_lower).map_err(CliError::num)?,
        );
    }
    Ok(reports)
}

pub fn lowerbound(
    ctx: &Context,
    functional: Option<String>,
    d: Option<usize>,
    s: Option<usize>,
    m: Option<f64>,
) -> Result<(), CliError> {
    let (f, spec) = ctx.functional(functional)?;
    let d = resolve(d, &ctx.file, "d", None)?;
    let s = resolve(s, &ctx.file, "s", None)?;
    let sf = s as f64;
    let df = d as f64;
    if sf * sf <= df {
        return Err(CliError::pre(format!(
            "requires s^2 > d, got s={s}, d={d}"
        )));
    }
    let bound = (sf * sf / df).ln().sqrt();
    let m = resolve(m, &ctx.file, "m", Some(bound))?;
    if !(m > 0.0) || m > bound * (1.0 + 1e-12) {
        return Err(CliError::pre(format!(
            "requires 0 < M <= sqrt(log(s^2/d)) = {bound:.4}, got M={m}"
        )));
    }

    let mut config = ResolvedConfig::new();
    config
        .put("functional", &spec)
        .put("d", d)
        .put("s", s)
        .put("m", m);

    let cert = certificate(&f, d, s, m).map_err(CliError::num)?;
    eprintln!(
        "lowerbound: K = {}, separation = {}, chi2 <= {}, valid = {}",
        cert.k, cert.separation, cert.chi2_bound, cert.valid
    );
    emit_json(
        ctx.out.as_deref(),
        config,
        json!({
            "K": cert.k,
            "grid": cert.pair.grid,
            "w0": cert.pair.w0,
            "w1": cert.pair.w1,
            "gap": cert.pair.gap,
            "delta": cert.pair.delta_ref,
            "separation": cert.separation,
            "chi2_bound": cert.chi2_bound,
            "tv_bound": cert.tv_bound,
            "tail_terms": cert.tail_terms,
            "rate": cert.rate,
            "v_total": cert.v_total,
            "valid": cert.valid,
            "g_value": cert.g_value,
        }),
    )
}

pub fn rates(
    ctx: &Context,
    functional: Option<String>,
    d: Option<usize>,
    s: Option<usize>,
    points: Option<usize>,
) -> Result<(), CliError> {
    let (f, spec) = ctx.functional(functional)?;
    let d = resolve(d, &ctx.file, "d", None)?;
    let s = resolve(s, &ctx.file, "s", None)?;
    let points = resolve(points, &ctx.file, "points", Some(64usize))?;
    let sf = s as f64;
    if s > d || sf * sf < 2.0 * d as f64 || s == 0 {
        return Err(CliError::pre(format!(
            "requires s^2 >= 2d and s <= d, got s={s}, d={d}"
        )));
    }

    let mut config = ResolvedConfig::new();
    config
        .put("functional", &spec)
        .put("d", d)
        .put("s", s)
        .put("points", points);

    let rate = rate_expression_sampled(&f, d, s, points).map_err(CliError::num)?;
    eprintln!(
        "rates: s^2 max_k delta^2 = {} at k = {}{}",
        rate.value,
        rate.argmax_k,
        if rate.degenerate { " (degenerate)" } else { "" }
    );
    emit_json(ctx.out.as_deref(), config, rate)
}

pub fn probe(
    ctx: &Context,
    functional: Option<String>,
    d: Option<usize>,
    s: Option<usize>,
    grid_size: Option<usize>,
) -> Result<(), CliError> {
    let (f, spec) = ctx.functional(functional)?;
    let d = resolve(d, &ctx.file, "d", None)?;
    let s = resolve(s, &ctx.file, "s", None)?;
    let grid_size = resolve(grid_size, &ctx.file, "grid_size", Some(8usize))?;
    let sf = s as f64;
    if sf * sf <= d as f64 {
        return Err(CliError::pre(format!(
            "requires s^2 > d, got s={s}, d={d}"
        )));
    }
    if grid_size < 4 {
        return Err(CliError::pre(format!(
            "requires grid_size >= 4, got {grid_size}"
        )));
    }

    let mut config = ResolvedConfig::new();
    config
        .put("functional", &spec)
        .put("d", d)
        .put("s", s)
        .put("grid_size", grid_size);

    let report = probe_assumptions(&f, s, d, grid_size).map_err(CliError::num)?;
    eprintln!(
        "probe: eps1 = {}, eps2 = {}, a3 ratio = {}{}",
        report.eps1_hat,
        report.eps2_hat,
        report.a3_ratio_max,
        if report.a2_degenerate {
            " (A2 violated: delta vanished)"
        } else {
            ""
        }
    );
    emit_json(ctx.out.as_deref(), config, report)
}
