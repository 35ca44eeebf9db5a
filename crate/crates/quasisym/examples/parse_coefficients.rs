//! Parse, print, evaluate and differentiate time-dependent coefficient
//! expressions, including piecewise definitions with declared jump points.

use quasisym::coeff;

fn main() {
    let smooth = coeff::parse("-t^2/4 + sin(3*t)").unwrap();
    println!("expression    {}", coeff::print(&smooth));
    for t in [0.0, 0.5, 1.0] {
        let v = coeff::eval(&smooth, t).unwrap();
        let d = coeff::derivative_fd(&smooth, t, 1, 1e-4, (0.0, 1.0)).unwrap();
        println!("  t={t:.1}  value={v:+.6}  d/dt={d:+.6}");
    }

    // A coefficient that switches branch at t = 1/2. The jump list is what
    // the mode integrator uses to keep steps from straddling the switch.
    let stepped = coeff::parse("piece([0.5], [0, 1/4])").unwrap();
    println!("piecewise     {}", coeff::print(&stepped));
    println!("  jump points {:?}", coeff::jump_points(&stepped));
    let left = coeff::eval_pinned(&stepped, 0.5, 0.49).unwrap();
    let right = coeff::eval_pinned(&stepped, 0.5, 0.51).unwrap();
    println!("  at the jump, pinned to the left branch  {left}");
    println!("  at the jump, pinned to the right branch {right}");
}
