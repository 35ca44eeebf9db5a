//! Integrate one Fourier mode of a weakly hyperbolic problem and check the
//! two-sided energy sandwich and the growth budget along the trajectory.

use num_complex::Complex64;
use quasisym::evolve;
use quasisym::spectrum::{ProblemSpec, Regularity};

fn main() {
    let spec = ProblemSpec::new(2, 1, 1.0, Regularity::Analytic)
        .principal_1d(2, "-t^2")
        .lower_1d(0, 1, "t/2");
    spec.validate().unwrap();

    let xi = vec![128.0];
    let g_hat = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let v0 = evolve::initial_mode(&spec, &g_hat, &xi);
    println!(
        "|xi| = {}, regularisation parameter eps = {:.5e}",
        xi[0],
        evolve::epsilon_for(&spec, &xi)
    );

    let traj = evolve::integrate_mode(&spec, &v0, &xi, 1e-10).unwrap();
    println!(
        "steps: {} accepted, {} rejected, {} output samples",
        traj.accepted_steps,
        traj.rejected_steps,
        traj.t_samples.len()
    );
    let first = traj.e_eps.first().unwrap();
    let last = traj.e_eps.last().unwrap();
    println!("energy e_eps: {first:.5e} at t=0 -> {last:.5e} at t=1");

    let energy = evolve::energy_bounds_check(&traj, &spec);
    println!(
        "sandwich constant {:.4e}, growth constant {:.4}, loss scale {:.4} (pass {})",
        energy.sandwich_constant, energy.growth_constant, energy.loss_scale, energy.pass
    );
}
