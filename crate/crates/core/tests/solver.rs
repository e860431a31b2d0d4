use sqg_core::solver::{
    energy_residual, eps_convergence, expansion_defect, grid_self_convergence, solve, ConvergenceParams, InitialData,
    SolverConfig,
};
use std::time::Instant;

#[test]
fn zero_noise_energy_balance() {
    let mut cfg = SolverConfig::new(0.9, 0.1, 0.1, 512, 64, 0);
    cfg.noise = false;
    cfg.snapshots = 512;
    cfg.init = InitialData::Random { seed: 7, kmax: 4, amp: 1.0 };
    let tr = solve(&cfg, None).unwrap();
    let r = energy_residual(&tr, cfg.mu);
    println!("energy residual {r:.3e}");
    assert!(r < 1e-4, "{r}");
}

// Strict monotonicity of the differences is an acceptance line of its own; here
// the table structure, coupling and mollifier comparison are checked.
#[test]
fn coupled_eps_sequence() {
    let t0 = Instant::now();
    let base = SolverConfig::new(0.9, 0.25, 0.125, 256, 128, 2024);
    let eps: Vec<f64> = (2..=5).map(|k| 0.5f64.powi(k)).collect();
    let p = ConvergenceParams::default();
    let r = eps_convergence(&base, &eps, &p).unwrap();
    print!("{}", r.to_csv());
    let d = r.diffs();
    let gap = r.mollifier_gap.unwrap();
    println!("mollifier gap {gap:.4e}; elapsed {:?}", t0.elapsed());
    assert_eq!(d.len(), 3);
    assert!(r.rows.iter().all(|row| row.blowup.is_none() && (row.alpha + 0.22).abs() < 1e-12));
    assert!(d.iter().all(|x| x.is_finite() && *x > 0.0));
    assert!(gap <= 2.0 * d.last().unwrap());
    // same seed, same table
    let again = eps_convergence(&base, &eps[..2], &ConvergenceParams { second_profile: None, ..p }).unwrap();
    assert_eq!(again.diffs()[0], d[0]);
    assert!(eps_convergence(&base, &[0.1, 0.2], &ConvergenceParams::default()).is_err());
}

#[test]
fn weighted_norm_of_solution_is_finite() {
    let base = SolverConfig::new(0.9, 0.125, 0.125, 128, 64, 3);
    let p = ConvergenceParams {
        weighted: true,
        second_profile: None,
        ..ConvergenceParams::default()
    };
    let r = eps_convergence(&base, &[0.25, 0.125], &p).unwrap();
    for row in &r.rows {
        let w = row.weighted.as_ref().unwrap();
        println!("{} {:?}", row.eps, w);
        assert!(w.value.is_finite() && w.value > 0.0);
    }
}

// Block-averaged cell noise differs from the fine noise by O(kh) on every
// retained mode, so at fixed ε the error halves with the grid.
#[test]
fn grid_refinement_at_fixed_eps() {
    let mut cfg = SolverConfig::new(0.9, 0.25, 0.125, 256, 32, 5);
    cfg.init = InitialData::Random { seed: 2, kmax: 3, amp: 0.5 };
    let a = grid_self_convergence(&cfg).unwrap();
    cfg.n = 64;
    let b = grid_self_convergence(&cfg).unwrap();
    println!("{a:?}\n{b:?}");
    assert!(b.relative < 0.75 * a.relative);
    assert!(b.relative < 0.05);
}

#[test]
fn expansion_defect_scales_like_gamma() {
    let t0 = Instant::now();
    let cfg = SolverConfig::new(0.9, 1.0 / 16.0, 0.125, 256, 128, 77);
    let r = expansion_defect(&cfg, 0.01, &[0.25, 0.125, 0.0625, 0.03125], 4).unwrap();
    println!("rms {:?} slope {:.3} γ {:.3}; elapsed {:?}", r.rms, r.slope(), r.gamma, t0.elapsed());
    assert!(r.slope() >= r.gamma - 0.2);
}
