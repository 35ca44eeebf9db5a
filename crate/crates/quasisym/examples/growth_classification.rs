//! Classify the frequency growth of mode amplification for an operator with
//! a genuine double characteristic root.
//!
//! For D_t^2 u - 2t D_t D_x u + t^2 D_x^2 u = 0 the roots coincide
//! identically (both equal t xi), the change of variables
//! v = exp(-i xi t^2 / 2) u turns the mode equation into an Airy-type
//! equation, and the amplification grows like exp(T sqrt(xi / 2)): a
//! stretched exponential with power 1/2, i.e. second Gevrey type.

use num_complex::Complex64;
use quasisym::gevrey::{self, DEFAULT_THETA_CANDIDATES};
use quasisym::spectrum::{ProblemSpec, Regularity};
use quasisym::{evolve, gevrey::Classification};

fn main() {
    let spec = ProblemSpec::new(2, 1, 1.0, Regularity::FinitelyDifferentiable(2))
        .principal_1d(2, "t^2")
        .principal_1d(1, "-2*t");
    spec.validate().unwrap();

    let magnitudes: Vec<f64> = (6..=12).map(|p| f64::from(1u32 << p)).collect();
    let trajectories: Vec<_> = magnitudes
        .iter()
        .map(|&x| {
            let xi = vec![x];
            let g_hat = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
            let v0 = evolve::initial_mode(&spec, &g_hat, &xi);
            evolve::integrate_mode(&spec, &v0, &xi, 1e-10).unwrap()
        })
        .collect();

    let model = gevrey::fit_growth(&trajectories, 1.0, &DEFAULT_THETA_CANDIDATES).unwrap();
    println!(
        "fit: kappa = {:.4}, c = {:.4}, theta = {:.4}, rms residual = {:.2e}",
        model.kappa, model.c_stretch, model.theta, model.fit_residual
    );
    println!("classification: {}", model.classification);
    match model.classification {
        Classification::GevreyType(s) => {
            println!("expected stretch T / sqrt(2) = {:.4}, Gevrey order {s:.3}", 1.0 / 2f64.sqrt())
        }
        _ => println!("expected a stretched exponential here"),
    }
}
