//! Acceptance suite: the quantitative gates the artifact must clear, one
//! test per criterion. Each prints a `PASS` line with its runtime; run with
//! `cargo test -p addfunc-cli --test acceptance -- --nocapture` to see them.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use addfunc_core::estimator::{build_schedule, fit, fit_simplified, NoiseMode};
use addfunc_core::funcspace::builtin_functional;
use addfunc_core::hermite::{hermite_all, hermitize, GaussHermite};
use addfunc_core::lowerbound::{build_prior_pair, chi2_series, g_function, DiscreteMeasure};
use addfunc_core::polyapprox::{delta_curve, grid_lp_approx, remez_auto};
use addfunc_core::risk::{measure_risk, rate_scaling_study, EstimatorRef};

fn budget(name: &str, started: Instant, limit_secs: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < limit_secs,
        "{name} took {elapsed:.1}s, budget {limit_secs}s"
    );
    println!("acceptance {name}: PASS ({elapsed:.2}s)");
}

#[test]
fn criterion_01_best_approximation_anchors() {
    let started = Instant::now();
    let f = builtin_functional("abs_pow", &[1.0]).unwrap();

    let r1 = remez_auto(&f, 1, -1.0, 1.0).unwrap();
    assert!((r1.delta - 0.5).abs() < 1e-6, "delta_1 = {}", r1.delta);
    let r2 = remez_auto(&f, 2, -1.0, 1.0).unwrap();
    assert!((r2.delta - 0.125).abs() < 1e-6, "delta_2 = {}", r2.delta);

    // Independent grid-LP oracle agrees.
    let o1 = grid_lp_approx(&f, 1, -1.0, 1.0, 2001).unwrap();
    let o2 = grid_lp_approx(&f, 2, -1.0, 1.0, 2001).unwrap();
    assert!((r1.delta - o1.delta).abs() < 1e-6);
    assert!((r2.delta - o2.delta).abs() < 1e-6);

    budget("01 best-approximation anchors", started, 1.0);
}

#[test]
fn criterion_02_timan_scaling() {
    let started = Instant::now();
    let ks: Vec<usize> = (5..=40).collect();
    for gamma in [0.5, 1.0] {
        let f = builtin_functional("abs_pow", &[gamma]).unwrap();
        let curve = delta_curve(&f, &ks, 1.0).unwrap();
        let pts: Vec<(f64, f64)> = curve
            .iter()
            .map(|(k, d)| ((*k as f64).ln(), d.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        assert!(
            (slope + gamma).abs() <= 0.1,
            "gamma = {gamma}: fitted slope {slope}"
        );
    }
    budget("02 Timan scaling", started, 30.0);
}

#[test]
fn criterion_03_lp_remez_duality() {
    let started = Instant::now();
    let mut cases = 0;
    for gamma in [1.0, 0.5] {
        let f = builtin_functional("abs_pow", &[gamma]).unwrap();
        for &k in &[1usize, 2, 5, 10, 20, 30] {
            for &m in &[1.0f64, 2.0] {
                let pair = build_prior_pair(&f, k, m, 2001).unwrap();
                let rel = (pair.gap - 2.0 * pair.delta_ref).abs() / (2.0 * pair.delta_ref);
                assert!(
                    rel <= 1e-3,
                    "gamma={gamma} K={k} M={m}: gap {} vs 2*delta {}",
                    pair.gap,
                    2.0 * pair.delta_ref
                );
                cases += 1;
            }
        }
    }
    assert!(cases >= 12, "only {cases} duality cases");
    budget("03 LP-Remez duality", started, 60.0);
}

#[test]
fn criterion_04_hermite_identities() {
    let started = Instant::now();
    let thetas = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0];
    let rule = GaussHermite::rule(48);
    for k in 0..=10usize {
        for &theta in &thetas {
            let mean = rule.normal_expectation(theta, 1.0, |x| {
                hermite_all(x, k).unwrap().values[k]
            });
            assert!(
                (mean - theta.powi(k as i32)).abs() <= 1e-8,
                "E H_{k}(N({theta},1)) = {mean}"
            );
            let m2 = rule.normal_expectation(theta, 1.0, |x| {
                let h = hermite_all(x, k).unwrap().values[k];
                h * h
            });
            let bound = (k as f64 + theta * theta).powi(k as i32);
            assert!(m2 <= bound * (1.0 + 1e-10), "E H_{k}^2 = {m2} > {bound}");
        }
    }
    let factorial = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    for j in 0..=12usize {
        for k in 0..=12usize {
            let inner = rule.normal_expectation(0.0, 1.0, |x| {
                let h = hermite_all(x, j.max(k)).unwrap();
                h.values[j] * h.values[k]
            });
            let expected = if j == k { factorial(k) } else { 0.0 };
            let scale = (factorial(j) * factorial(k)).sqrt().max(1.0);
            assert!(
                (inner - expected).abs() <= 1e-10 * scale,
                "E H_{j} H_{k} = {inner}, expected {expected}"
            );
        }
    }
    budget("04 Hermite identities", started, 5.0);
}

#[test]
fn criterion_05_chi2_series() {
    let started = Instant::now();
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
        let exact = (mu * mu).exp_m1();
        assert!(
            (series.total - exact).abs() <= 1e-10,
            "mu={mu}: {} vs {exact}",
            series.total
        );
    }

    let f = builtin_functional("abs_pow", &[1.0]).unwrap();
    let pair = build_prior_pair(&f, 10, 1.0, 2001).unwrap();
    let series = chi2_series(&pair.nu0(), &pair.nu1(), 80).unwrap();
    let envelope = 4.0 * (std::f64::consts::E / 10.0).powi(10);
    assert!(
        series.total <= envelope,
        "series {} above 4 (e M^2 / K)^K = {envelope}",
        series.total
    );
    budget("05 chi-square series", started, 5.0);
}

#[test]
fn criterion_06_g_lower_bound() {
    let started = Instant::now();
    let lo = std::f64::consts::E;
    let hi = 1e6f64;
    let mut min_g = f64::INFINITY;
    for i in 0..200 {
        let x = lo * (hi / lo).powf(i as f64 / 199.0);
        min_g = min_g.min(g_function(x));
    }
    assert!(min_g > 0.5, "min g = {min_g}");
    budget("06 g lower bound", started, 1.0);
}

#[test]
fn criterion_07_simplified_closed_form() {
    let started = Instant::now();
    let f = builtin_functional("square", &[]).unwrap();
    let est = fit_simplified(&f, 100, 1.0, 2.0).unwrap();
    let theta = vec![0.0; 100];
    let report = measure_risk(
        EstimatorRef::Simplified(&est),
        &theta,
        "zero",
        10_000,
        2024,
        None,
    )
    .unwrap();
    assert!(
        (190.0..=210.0).contains(&report.mse),
        "mse = {} (exact value 200)",
        report.mse
    );
    budget("07 simplified-estimator closed form", started, 10.0);
}

#[test]
fn criterion_08_off_support_unbiasedness() {
    let started = Instant::now();
    let f = builtin_functional("abs_pow", &[1.0]).unwrap();
    let schedule = build_schedule(10_000, 400, 1.0).unwrap();
    let fitted = fit(&f, &schedule, NoiseMode::OraclePairs).unwrap();
    let theta = vec![0.0; 10_000];
    let report = measure_risk(
        EstimatorRef::MultiScale(&fitted),
        &theta,
        "zero",
        2000,
        7,
        None,
    )
    .unwrap();
    let bias = report.bias_sq.sqrt();
    let se = (report.variance / 2000.0).sqrt();
    assert!(bias <= 3.0 * se, "bias {bias} exceeds 3 SE = {}", 3.0 * se);
    budget("08 off-support unbiasedness", started, 60.0);
}

#[derive(Debug, Serialize, Deserialize)]
struct BaselineRow {
    d: usize,
    s: usize,
    ratio: f64,
}

#[test]
fn criterion_09_rate_ratio_stability() {
    let started = Instant::now();
    let f = builtin_functional("abs_pow", &[1.0]).unwrap();
    let rows = rate_scaling_study(
        &f,
        &[2500, 10_000, 40_000],
        &|d| 4 * (d as f64).sqrt().round() as usize,
        1.0,
        2000,
        1,
        NoiseMode::OraclePairs,
    )
    .unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        max / min <= 10.0,
        "ratio spread {max}/{min} exceeds one decade: {ratios:?}"
    );

    // First execution freezes the regression baseline; later executions must
    // stay within 20% of it.
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/rate_baseline.json");
    if path.exists() {
        let baseline: Vec<BaselineRow> =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(baseline.len(), rows.len());
        for (b, r) in baseline.iter().zip(rows.iter()) {
            assert_eq!(b.d, r.d);
            let rel = (r.ratio - b.ratio).abs() / b.ratio;
            assert!(
                rel <= 0.20,
                "d={}: ratio {} drifted {rel:.1}% from baseline {}",
                r.d,
                r.ratio,
                b.ratio
            );
        }
    } else {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        let baseline: Vec<BaselineRow> = rows
            .iter()
            .map(|r| BaselineRow {
                d: r.d,
                s: r.s,
                ratio: r.ratio,
            })
            .collect();
        std::fs::write(&path, serde_json::to_string_pretty(&baseline).unwrap()).unwrap();
        println!("acceptance 09: baseline recorded at {}", path.display());
    }
    budget("09 rate-ratio stability", started, 600.0);
}

#[test]
fn criterion_10_moment_envelopes() {
    let started = Instant::now();
    let f = builtin_functional("abs_pow", &[1.0]).unwrap();
    let rule = GaussHermite::rule(96);
    for m in [1.0f64, 2.0, 3.0, 4.0] {
        for c in [1.0f64, 2.0, 4.0, 8.0] {
            let k = (((c * m * m / 8.0).floor() as i64).max(1)) as usize;
            let pa = remez_auto(&f, k, -m, m).unwrap();
            let p_hat = hermitize(&pa.coeffs, false).unwrap();
            let sup = f.sup_norm_centered(-m, m, 2001);
            let sup2 = sup * sup;

            let ratio_zero = rule.normal_expectation(0.0, 1.0, |u| {
                let v = p_hat.eval(u);
                v * v
            }) / (sup2 * 6.0f64.powi(k as i32));
            assert!(ratio_zero <= 100.0, "M={m} c={c}: zero-mean ratio {ratio_zero}");

            for theta in [0.5 * m, m] {
                let ratio = rule.normal_expectation(theta, 1.0, |u| {
                    let v = p_hat.eval(u);
                    v * v
                }) / (sup2 * 12.0f64.powi(k as i32));
                assert!(ratio <= 100.0, "M={m} c={c} theta={theta}: ratio {ratio}");
            }

            for theta in [1.5 * m, 2.0 * m] {
                let mean = rule.normal_expectation(theta, 1.0, |u| p_hat.eval(u));
                let envelope = sup * 3.0f64.powi(k as i32) * (c * theta * theta / 16.0).exp();
                let ratio = mean.abs() / envelope;
                assert!(ratio <= 100.0, "M={m} c={c} theta={theta}: ratio {ratio}");
            }
        }
    }
    budget("10 moment envelopes", started, 30.0);
}

#[test]
fn criterion_11_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let run_risk = |threads: &str, out: &std::path::Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_addfunc"))
            .args([
                "risk",
                "--functional",
                "abs_pow:1",
                "--d",
                "400",
                "--s",
                "40",
                "--reps",
                "200",
                "--seed",
                "7",
                "--threads",
                threads,
                "--out",
                out.to_str().unwrap(),
            ])
            .env_remove("ADDFUNC_SEED")
            .status()
            .unwrap();
        assert!(status.success());
    };
    let a = dir.path().join("t1.csv");
    let b = dir.path().join("t4.csv");
    run_risk("1", &a);
    run_risk("4", &b);
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(
        bytes_a,
        std::fs::read(&b).unwrap(),
        "CSV payload depends on thread count"
    );

    let run_lb = |out: &std::path::Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_addfunc"))
            .args([
                "lowerbound",
                "--functional",
                "abs_pow:0.5",
                "--d",
                "2000",
                "--s",
                "400",
                "--out",
                out.to_str().unwrap(),
            ])
            .env_remove("ADDFUNC_SEED")
            .status()
            .unwrap();
        assert!(status.success());
    };
    let c = dir.path().join("lb1.json");
    let d = dir.path().join("lb2.json");
    run_lb(&c);
    run_lb(&d);
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(&d).unwrap());

    budget("11 determinism", started, 30.0);
}
