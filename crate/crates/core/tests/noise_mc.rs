use sqg_core::noise::{pair_with_weights, pairing_weights, realizations, regularity_fit, McStats, NoiseGrid};
use std::f64::consts::PI;

#[test]
fn white_noise_isometry_small_sample() {
    let g = NoiseGrid::new(16, 32, 32, 1.0).unwrap();
    let cell = |f: &dyn Fn(f64, f64, f64) -> f64| -> Vec<f64> {
        (0..g.cells())
            .map(|c| {
                let (t, x, y) = g.midpoint(c);
                f(t, x, y)
            })
            .collect()
    };
    let phi = cell(&|t, x, _| (PI * t).sin() * (2.0 * PI * x).cos());
    let psi = cell(&|t, x, y| (PI * t).sin() * ((2.0 * PI * x).cos() + (2.0 * PI * y).sin()));
    let (wp, wq) = (pairing_weights(&g, &phi), pairing_weights(&g, &psi));
    let v = realizations(1, 2000, |s| pair_with_weights(s, &g, &wp) * pair_with_weights(s, &g, &wq));
    let st = McStats::from_samples(&v);
    // (φ,ψ) = ∫ sin²(πt) dt · ∫ cos²(2πx) dx = 1/4
    assert!((st.mean - 0.25).abs() < 3.0 * st.mean_stderr + 0.005, "{st:?}");
}

#[test]
fn noise_regularity_slope() {
    let t0 = std::time::Instant::now();
    let lams: Vec<f64> = (1..=5).map(|j| 0.5f64.powi(j)).collect();
    let r = regularity_fit(0.9, 0.5f64.powi(8), &lams, 500, 3).unwrap();
    eprintln!("{:#?} {:?}", r.rows, t0.elapsed());
    assert!((r.fit.slope - r.target_slope).abs() < 0.15, "{}", r.fit.slope);
}
