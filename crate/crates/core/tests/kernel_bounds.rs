use sqg_core::kernels::{mollified_kernel_check, KernelSpec, Profile};
use std::time::Instant;

#[test]
fn mollified_heat_kernel_bounds_are_uniform_in_eps() {
    let t0 = Instant::now();
    let eps: Vec<f64> = (3..=6).map(|j| 0.5f64.powi(j)).collect();
    let r = mollified_kernel_check(&KernelSpec::heat(0.9), Profile::Bump, &eps, 0.5, 3.0).unwrap();
    eprintln!("{:#?} in {:?}", r, t0.elapsed());
    assert!(r.bound_spread < 3.0);
    assert!(r.difference_spread < 3.0);
    assert!(r.pointwise_monotone);
    assert!(!r.violation);
}
