//! Acceptance criteria, one test each. Every test prints a single
//! `criterion NN PASS|FAIL` line to stderr (uncaptured) before asserting.
//! A lock runs them one at a time so the reported runtimes are meaningful.

use serde_json::Value;
use sqg_core::noise::rng::gaussian;
use sqg_core::noise::{chaos_i2_estimate, chaos_norms, realizations, sample, McStats, NoiseGrid};
use sqg_core::solver::{advective, energy_residual, nonlinearity, solve, InitialData, SolverConfig};
use sqg_core::structure::is_subcritical;
use num_rational::Rational64;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

static SERIAL: Mutex<()> = Mutex::new(());

fn report(n: u32, what: &str, pass: bool, detail: &str, elapsed: Duration) {
    let line = format!(
        "criterion {n:>2} {}  {what}: {detail} [{:.1} s]\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn sqg(args: &[&str], out: &Path) -> i32 {
    let mut v = vec!["sqg"];
    v.extend_from_slice(args);
    v.extend_from_slice(&["--out", out.to_str().unwrap()]);
    sqg_cli::run(v)
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn forms(level: &Value) -> Vec<String> {
    let mut v: Vec<String> = level["shapes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["homogeneity"].as_str().unwrap().to_string())
        .collect();
    v.sort();
    v
}

fn sorted(v: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = v.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

#[test]
fn criterion_01_symbol_tables() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(&["structure", "generate", "--mu", "9/10", "--kappa", "1/100"], d.path());
    let dt = t0.elapsed();
    let v = json(&d.path().join("structure.json"));
    let level = |fam: &str, n: u64| {
        v["levels"]
            .as_array()
            .unwrap()
            .iter()
            .find(|l| l["family"] == fam && l["level"] == n)
            .cloned()
            .unwrap()
    };
    let tilde2 = level("tilde", 2);
    let checks = [
        (forms(&level("bar", 0)), sorted(&["-1-κ+μ"])),
        (forms(&level("tilde", 1)), sorted(&["-1-κ+μ", "-2-2κ+2μ"])),
        (forms(&level("bar", 1)), sorted(&["-2-κ+3μ", "-3-2κ+4μ"])),
        (
            forms(&tilde2),
            sorted(&["-2-κ+3μ", "-3-2κ+4μ", "-3-2κ+4μ", "-4-3κ+5μ", "-4-2κ+6μ", "-5-3κ+7μ", "-5-3κ+7μ", "-6-4κ+8μ"]),
        ),
    ];
    let ok_forms = checks.iter().all(|(a, b)| a == b);
    let n2 = tilde2["shapes"].as_array().unwrap().len();
    let pass = code == 0 && ok_forms && n2 == 8 && dt < Duration::from_secs(1);
    report(1, "symbol tables", pass, &format!("levels match: {ok_forms}, collapsed shapes at level 2: {n2}"), dt);
    assert!(pass);
}

#[test]
fn criterion_02_negative_sector() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(&["structure", "negatives", "--mu", "9/10", "--kappa", "1/100"], d.path());
    let dt = t0.elapsed();
    let v = json(&d.path().join("negatives.json"));
    let got = forms(&v);
    // 2μ − 2 − 2κ = 9/5 − 2 − 1/50
    let min_ok = v["min_homogeneity"] == "-11/50";
    let pass = code == 0 && got == sorted(&["-1-κ+μ", "-1-κ+μ", "-2-2κ+2μ", "-2-2κ+2μ"]) && min_ok && dt < Duration::from_secs(1);
    report(2, "negative sector", pass, &format!("{got:?}, min {}", v["min_homogeneity"]), dt);
    assert!(pass);
}

#[test]
fn criterion_03_subcriticality_threshold() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(&["structure", "threshold"], d.path());
    let v = json(&d.path().join("threshold.json"));
    let mus = [(1, 2), (2, 3), (7, 10), (1, 1)];
    let direct: Vec<bool> = mus.iter().map(|&(a, b)| is_subcritical(Rational64::new(a, b)).subcritical).collect();
    let oracle: Vec<bool> = mus.iter().map(|&(a, b)| 3 * a > 2 * b).collect();
    let via_cli: Vec<bool> = v["checks"].as_array().unwrap().iter().map(|c| c["subcritical"].as_bool().unwrap()).collect();
    let pass = code == 0 && direct == oracle && via_cli == oracle && v["critical_mu"] == "2/3" && v["increment"] == "-2-κ+3μ";
    report(3, "subcriticality threshold", pass, &format!("{direct:?}, critical {}", v["critical_mu"]), t0.elapsed());
    assert!(pass);
}

#[test]
fn criterion_04_white_noise_isometry() {
    use std::f64::consts::PI;
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let g = NoiseGrid::new(16, 64, 64, 1.0).unwrap();
    type F = fn(f64, f64, f64) -> f64;
    // test pairs with their exact L² products on [0,1]×T²
    let pairs: [(F, F, f64); 5] = [
        (|_, x, _| (2.0 * PI * x).cos(), |_, x, _| (2.0 * PI * x).cos(), 0.5),
        (
            |t, x, _| (2.0 * PI * t).sin() * (2.0 * PI * x).cos(),
            |t, x, y| (2.0 * PI * t).sin() * ((2.0 * PI * x).cos() + (2.0 * PI * y).sin()),
            0.25,
        ),
        (
            |_, x, y| (2.0 * PI * x).cos() * (2.0 * PI * y).cos(),
            |_, x, y| (2.0 * PI * x).cos() * (2.0 * PI * y).cos() + (4.0 * PI * x).sin(),
            0.25,
        ),
        (|t, _, _| 1.0 + (2.0 * PI * t).cos(), |t, _, y| (2.0 * PI * t).cos() * (2.0 * PI * y).sin(), 0.0),
        (|_, x, y| (2.0 * PI * (x + y)).cos(), |_, x, y| (2.0 * PI * (x + y)).cos() + (2.0 * PI * x).cos(), 0.5),
    ];
    let cell = |f: F| -> Vec<f64> {
        (0..g.cells())
            .map(|c| {
                let (t, x, y) = g.midpoint(c);
                f(t, x, y)
            })
            .collect()
    };
    let fields: Vec<(Vec<f64>, Vec<f64>)> = pairs.iter().map(|&(a, b, _)| (cell(a), cell(b))).collect();
    let prods = realizations(4, 10_000, |s| {
        let xi = sample(s, g).unwrap();
        fields.iter().map(|(a, b)| xi.pair(a) * xi.pair(b)).collect::<Vec<f64>>()
    });
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (q, &(_, _, exact)) in pairs.iter().enumerate() {
        let v: Vec<f64> = prods.iter().map(|p| p[q]).collect();
        let st = McStats::from_samples(&v);
        let z = (st.mean - exact).abs() / st.mean_stderr;
        worst = worst.max(z);
        ok &= z < 3.0;
    }
    let dt = t0.elapsed();
    let pass = ok && dt < Duration::from_secs(60);
    report(4, "white-noise isometry", pass, &format!("worst deviation {worst:.2} standard errors over 5 pairs"), dt);
    assert!(pass);
}

#[test]
fn criterion_05_noise_regularity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(&["noise", "regularity", "--mu", "9/10", "--eps", "1/256", "--samples", "500", "--seed", "3"], d.path());
    let dt = t0.elapsed();
    let r = &json(&d.path().join("regularity.json"))["report"];
    let slope = r["fit"]["slope"].as_f64().unwrap();
    let target = -(2.0 + 2.0 * 0.9);
    let pass = code == 0 && (slope - target).abs() <= 0.15 && dt < Duration::from_secs(120);
    report(5, "noise regularity", pass, &format!("slope {slope:.3}, target {target:.3}"), dt);
    assert!(pass);
}

#[test]
fn criterion_06_kernel_orders() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(&["kernel", "order", "--mu", "9/10"], d.path());
    let dt = t0.elapsed();
    let v = json(&d.path().join("order.json"));
    let mu = 0.9;
    // independent targets and tolerances
    let want = [("K", -2.0, 0.15), ("R1K", -2.0, 0.15), ("K*K", -2.0 + 2.0 * mu, 0.2), ("(R1K*R1K)(-K*K)", -4.0 + 4.0 * mu, 0.3)];
    let rows = v["rows"].as_array().unwrap();
    let mut ok = code == 0 && rows.len() == 4;
    let mut detail = Vec::new();
    for (row, (name, target, tol)) in rows.iter().zip(want) {
        let s = row["slope"].as_f64().unwrap();
        ok &= row["name"] == name && (s - target).abs() <= tol;
        detail.push(format!("{name} {s:.3}"));
    }
    let pass = ok && dt < Duration::from_secs(300);
    report(6, "kernel orders", pass, &detail.join(", "), dt);
    assert!(pass);
}

#[test]
fn criterion_07_mollified_kernel_bounds() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(&["kernel", "mollify", "--mu", "9/10", "--eps", "1/8,1/16,1/32,1/64"], d.path());
    let dt = t0.elapsed();
    let v = json(&d.path().join("mollify.json"));
    let (b, df) = (v["bound_spread"].as_f64().unwrap(), v["difference_spread"].as_f64().unwrap());
    let pass = code == 0 && b < 3.0 && df < 3.0 && v["rows"].as_array().unwrap().len() == 4 && dt < Duration::from_secs(120);
    report(7, "mollified kernel bounds", pass, &format!("ratio spreads {b:.3} and {df:.3}"), dt);
    assert!(pass);
}

#[test]
fn criterion_08_renormalization_constant() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(&["model", "renorm-const", "--mu", "9/10", "--eps", "1/4,1/8,1/16,1/32"], d.path());
    let dt = t0.elapsed();
    let v = json(&d.path().join("renorm.json"));
    let tol = v["tolerance"].as_f64().unwrap();
    let rows = v["rows"].as_array().unwrap();
    let agree = rows.iter().all(|r| (r["c"][0].as_f64().unwrap() - r["c"][1].as_f64().unwrap()).abs() < tol);
    let probe = rows.iter().map(|r| r["slice_max"].as_f64().unwrap()).fold(0.0, f64::max);
    let inc = v["increment_fit"]["slope"].as_f64().unwrap_or(f64::NAN);
    let raw = v["scale_fit"]["slope"].as_f64().unwrap_or(f64::NAN);
    let claimed = v["claimed_exponent"].as_f64().unwrap();
    // the exponent comparison is documented, not asserted
    let pass = code == 0 && agree && rows.len() == 4 && dt < Duration::from_secs(120);
    report(
        8,
        "renormalization constant",
        pass,
        &format!(
            "|C1-C2| < {tol:.0e} at every eps: {agree}; per-slice odd probe max {probe:.1e}; \
             scale increments slope {inc:.3}, raw scale slope {raw:.3}, claimed {claimed:.3}"
        ),
        dt,
    );
    assert!(pass);
}

#[test]
fn criterion_09_model_scaling() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(
        &["model", "scaling", "--mu", "9/10", "--eps", "1/128", "--samples", "2000", "--lambda-list", "1/2,1/4,1/8,1/16,1/32", "--seed", "11"],
        d.path(),
    );
    let dt = t0.elapsed();
    let v = json(&d.path().join("scaling.json"));
    let mut ok = code == 0;
    let mut detail = Vec::new();
    // 2|τ|(μ,0): I[Ξ] has −1+μ, the product −2+2μ
    let targets = [("I[Xi]", 2.0 * (-1.0 + 0.9)), ("R1[I[Xi]]*I[Xi]", 2.0 * (-2.0 + 1.8))];
    let reps = v["reports"].as_array().unwrap();
    ok &= reps.len() == 2;
    for (r, (sym, target)) in reps.iter().zip(targets) {
        let s = r["report"]["fit"]["slope"].as_f64().unwrap();
        ok &= r["report"]["symbol"] == sym && r["report"]["rows"][0]["n"] == 2000 && s >= target - 0.3;
        detail.push(format!("{sym} slope {s:.3} (target {target:.2})"));
    }
    let pass = ok && dt < Duration::from_secs(600);
    report(9, "model scaling", pass, &detail.join(", "), dt);
    assert!(pass);
}

#[test]
fn criterion_10_time_regularity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(&["model", "time-reg", "--mu", "9/10", "--samples", "1000", "--seed", "3"], d.path());
    let dt = t0.elapsed();
    let v = json(&d.path().join("time_reg.json"));
    let s = v["report"]["fit"]["slope"].as_f64().unwrap();
    let delta = v["params"]["delta"].as_f64().unwrap();
    let target = 2.0 * delta / 1.8;
    let pass = code == 0 && delta == 0.3 && s >= target - 0.2 && dt < Duration::from_secs(600);
    report(10, "time regularity", pass, &format!("lag slope {s:.3}, target {target:.3}"), dt);
    assert!(pass);
}

#[test]
fn criterion_11_wick_isometry() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let g = NoiseGrid::new(2, 8, 8, 1.0).unwrap();
    let n = g.cells();
    let mids: Vec<(f64, f64, f64)> = (0..n).map(|c| g.midpoint(c)).collect();
    let mut holds = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut wick_worst: f64 = 0.0;
    for k in 0..10u64 {
        // smooth random kernel: a few low modes in each variable with Gaussian weights
        let a: Vec<f64> = (0..16).map(|j| gaussian(1000 + k, j)).collect();
        let basis = |m: usize, (t, x, y): (f64, f64, f64)| {
            let tau = 2.0 * std::f64::consts::PI;
            match m {
                0 => 1.0,
                1 => (tau * x).cos() * (0.5 + t),
                2 => (tau * y).sin(),
                _ => (tau * (x - y)).cos() * t,
            }
        };
        let f: Vec<f64> = (0..n * n)
            .map(|idx| {
                let (p, q) = (mids[idx / n], mids[idx % n]);
                (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| a[4 * i + j] * basis(i, p) * basis(j, q)).sum()
            })
            .collect();
        let st = chaos_i2_estimate(g, &f, 4000, 77 + k).unwrap();
        let (norm2, wick) = chaos_norms(&g, &f);
        wick_worst = wick_worst.max((st.second_moment - wick).abs() / st.stderr);
        let margin = (st.second_moment - norm2) / st.stderr;
        worst = worst.max(margin);
        if st.second_moment <= norm2 + 3.0 * st.stderr {
            holds += 1;
        }
    }
    let dt = t0.elapsed();
    let pass = holds == 10 && dt < Duration::from_secs(120);
    report(
        11,
        "Wick isometry",
        pass,
        &format!("E I2^2 <= |f|^2 holds for {holds}/10 kernels, worst excess {worst:.1} stderr; \
             against |f|^2 + <f,f^T> the worst deviation is {wick_worst:.1} stderr"),
        dt,
    );
    assert!(pass);
}

#[test]
fn criterion_12_solver_validation() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(&["solve", "--mu", "0.9", "--noise", "off", "--init", "mode:1,0"], d.path());
    let mode_err = json(&d.path().join("solve.json"))["exact_mode_error"].as_f64().unwrap();
    let th = InitialData::Random { seed: 9, kmax: 6, amp: 1.0 }.field(128).spectrum();
    let form_gap = nonlinearity(&th, 2.0 / 3.0).to_field().sub(&advective(&th, 2.0 / 3.0).to_field()).max_abs();
    let mut cfg = SolverConfig::new(0.9, 0.1, 0.125, 512, 64, 0);
    cfg.noise = false;
    cfg.snapshots = 512;
    cfg.init = InitialData::Random { seed: 4, kmax: 5, amp: 2.0 };
    let tr = solve(&cfg, None).unwrap();
    let resid = energy_residual(&tr, 0.9);
    let dt = t0.elapsed();
    let pass = code == 0 && mode_err < 1e-6 && form_gap < 1e-8 && resid < 1e-4 && dt < Duration::from_secs(60);
    report(
        12,
        "solver validation",
        pass,
        &format!("single-mode error {mode_err:.1e}, form gap {form_gap:.1e}, energy residual {resid:.1e}"),
        dt,
    );
    assert!(pass);
}

#[test]
fn criterion_13_eps_convergence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(
        &["converge", "--mu", "9/10", "--eps", "1/4,1/8,1/16,1/32", "--grid", "128x128x256", "--T", "0.125", "--seed", "2024"],
        d.path(),
    );
    let dt = t0.elapsed();
    let r = &json(&d.path().join("converge.json"))["report"];
    let dk: Vec<f64> = r["rows"].as_array().unwrap().iter().filter_map(|x| x["diff_norm"].as_f64()).collect();
    let decreasing = dk.len() == 3 && dk.windows(2).all(|w| w[1] < w[0]);
    let gap = r["mollifier_gap"].as_f64().unwrap_or(f64::INFINITY);
    let gap_ok = dk.last().is_some_and(|&l| gap <= 2.0 * l);
    let pass = code == 0 && decreasing && gap_ok && dt < Duration::from_secs(900);
    report(
        13,
        "eps convergence",
        pass,
        &format!("D_k = {dk:.4?} strictly decreasing: {decreasing}; mollifier gap {gap:.3e} <= 2 D_last: {gap_ok}"),
        dt,
    );
    assert!(pass);
}

#[test]
fn criterion_14_reconstruction_defect() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let code = sqg(
        &[
            "model", "reconstruct", "--mu", "9/10", "--kappa", "1/100", "--eps", "1/16", "--grid", "256x256x128", "--T", "0.125",
            "--lambda-list", "1/4,1/8,1/16,1/32", "--seed", "77",
        ],
        d.path(),
    );
    let dt = t0.elapsed();
    let r = &json(&d.path().join("reconstruct.json"))["report"];
    let s = r["fit"]["slope"].as_f64().unwrap();
    let gamma = 1.0 + 0.02 - 0.9;
    let pass = code == 0 && s >= gamma - 0.2 && dt < Duration::from_secs(600);
    report(14, "reconstruction defect", pass, &format!("slope {s:.3}, gamma {gamma:.2}"), dt);
    assert!(pass);
}

#[test]
fn criterion_15_determinism() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let d = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let runs: Vec<Vec<&str>> = vec![
        vec!["structure", "generate"],
        vec!["structure", "negatives"],
        vec!["structure", "threshold"],
        vec!["kernel", "order"],
        vec!["kernel", "dyadic"],
        vec!["kernel", "mollify", "--eps", "1/8,1/16"],
        vec!["kernel", "convolve"],
        vec!["noise", "sample", "--eps", "1/8", "--seed", "5"],
        vec!["noise", "regularity", "--samples", "40"],
        vec!["model", "pi", "--seed", "2"],
        vec!["model", "renorm-const", "--eps", "1/4,1/8"],
        vec!["model", "scaling", "--samples", "12", "--eps", "1/64", "--lambda-list", "1/2,1/4,1/8"],
        vec!["model", "time-reg", "--samples", "20"],
        vec!["model", "covariance"],
        vec!["model", "reconstruct", "--grid", "32x32x64", "--eps", "1/8", "--lambda-list", "1/4,1/8"],
        vec!["solve", "--grid", "32x32x64", "--eps", "1/8", "--seed", "8"],
        vec!["converge", "--grid", "32x32x64", "--eps", "1/4,1/8", "--seed", "8"],
    ];
    let mut failures = Vec::new();
    for (q, args) in runs.iter().enumerate() {
        let dir = d.path().join(format!("run{q}"));
        let name = args[..2.min(args.len())].join(" ");
        let first = sqg(args, &dir);
        if first != 0 {
            failures.push(format!("{name}: exit {first}"));
            continue;
        }
        let replay = sqg_cli::run(["sqg", "replay", dir.to_str().unwrap()]);
        if replay != 0 {
            failures.push(format!("{name}: replay exit {replay}"));
        }
    }
    let dt = t0.elapsed();
    let pass = failures.is_empty();
    report(
        15,
        "determinism",
        pass,
        &if pass { format!("{} commands replayed bit for bit", runs.len()) } else { failures.join("; ") },
        dt,
    );
    assert!(pass);
}
