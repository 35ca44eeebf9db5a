//! Partition the time interval at the interior zeros of the scaled
//! symmetriser entries for an oscillating coefficient.  Analytic coefficients
//! guarantee finitely many such zeros, which is what caps the constant in the
//! segment-by-segment energy argument.

use quasisym::evolve;
use quasisym::spectrum::{ProblemSpec, Regularity};

fn main() {
    let spec = ProblemSpec::new(2, 1, 1.0, Regularity::Analytic)
        .principal_1d(2, "-1")
        .principal_1d(1, "-sin(10*t)");
    spec.validate().unwrap();

    let xi = vec![32.0];
    let partition = evolve::analytic_partition(&spec, &xi).unwrap();
    println!("{} segments at |xi| = {}", partition.segments(), xi[0]);
    for pair in partition.taus.windows(2) {
        println!("  [{:.6}, {:.6}]", pair[0], pair[1]);
    }
    println!("interior cuts should sit near multiples of pi/10 = 0.314159...");
}
