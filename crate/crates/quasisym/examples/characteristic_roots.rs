//! Characteristic roots of a weakly hyperbolic operator along the time axis,
//! the separation measure on the normalised roots, and the discriminant
//! cross-check available in one space dimension for order two.

use quasisym::spectrum::{self, ProblemSpec, Regularity};

fn main() {
    // D_t^2 u - t^2 D_x^2 u + (t/2) D_x u = 0: the roots +-t|xi| touch at
    // t = 0, so the problem is weakly hyperbolic with a double root there.
    let spec = ProblemSpec::new(2, 1, 1.0, Regularity::Analytic)
        .principal_1d(2, "-t^2")
        .lower_1d(0, 1, "t/2");
    spec.validate().unwrap();

    let xi = vec![8.0];
    println!("  t     roots at |xi| = 8          separation");
    for t in [0.0, 0.25, 0.5, 1.0] {
        let lam = spectrum::roots(&spec, t, &xi).unwrap();
        let norm = spectrum::normalised_roots(&spec, t, &xi).unwrap();
        let ratio = spectrum::lc_ratio(&norm, 0.0);
        println!("  {t:.2}  [{:+.4}, {:+.4}]    {ratio:.4}", lam[0], lam[1]);
    }

    let t_grid = spectrum::time_grid(1.0, 65);
    let xi_grid = spectrum::xi_grid_1d(1.0, 64.0, 17);
    let lc = spectrum::lc_check(&spec, &t_grid, &xi_grid).unwrap();
    println!(
        "separation sweep: m_min = {:.4}, hyperbolic = {}, max imaginary part = {:.2e}",
        lc.m_min, lc.hyperbolic, lc.max_imag
    );

    let eq = spectrum::lc_equivalent_check(&spec, &t_grid).unwrap();
    println!(
        "discriminant comparison: c_min = {:.4}, consistent = {}",
        eq.c_min, eq.consistent
    );
}
