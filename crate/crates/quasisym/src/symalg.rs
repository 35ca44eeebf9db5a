//! Signed elementary symmetric polynomials, companion-form matrices, and the
//! small dense Hermitian linear algebra used by the energy method.
//!
//! All constructions are capped at order [`MAX_ORDER`]; every polynomial in
//! the roots is expanded by incremental multiplication of linear factors
//! (coefficient extraction from `prod (x - lam_i)`), never by subset
//! enumeration, so the values are numerically stable in the weakly hyperbolic
//! regime where roots collide.

use itertools::Itertools;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

/// Largest supported system order.
pub const MAX_ORDER: usize = 8;

/// Real characteristic roots, one entry per factor of the principal symbol.
pub type RootVector = Vec<f64>;

/// Dense complex matrix of side at most [`MAX_ORDER`].
pub type SmallMatrix = DMatrix<Complex64>;

/// Dense complex vector of length at most [`MAX_ORDER`].
pub type SmallVector = DVector<Complex64>;

#[derive(Debug, Error)]
pub enum AlgError {
    #[error("pencil solve failed: metric side not positive definite (trace {trace:.3e})")]
    PencilFailure { trace: f64 },
}

fn check_order(m: usize) {
    assert!(
        (1..=MAX_ORDER).contains(&m),
        "order {m} outside supported range 1..={MAX_ORDER}"
    );
}

/// Ascending coefficients of `prod_i (x - lam_i)`:
/// entry `h` is the coefficient of `x^h`, so the vector has length `m + 1`
/// and leading entry 1.
pub fn monic_poly_ascending(lam: &[f64]) -> Vec<f64> {
    let mut poly = vec![0.0; lam.len() + 1];
    poly[0] = 1.0;
    let mut deg = 0usize;
    for &l in lam {
        // multiply by (x - l): shift up one degree and subtract l times self
        for k in (0..=deg).rev() {
            poly[k + 1] += poly[k];
            poly[k] *= -l;
        }
        deg += 1;
    }
    poly
}

/// Signed elementary symmetric polynomial `sigma_h` of the roots:
/// `(-1)^h` times the sum of all `h`-fold products, with `sigma_0 = 1`.
/// Extracted as the coefficient of `x^(m-h)` in `prod (x - lam_i)`.
pub fn sigma(h: usize, lam: &[f64]) -> f64 {
    let m = lam.len();
    check_order(m.max(1));
    assert!(h <= m, "sigma index {h} exceeds root count {m}");
    let poly = monic_poly_ascending(lam);
    poly[m - h]
}

/// All of `sigma_0 ..= sigma_m` in one pass.
pub fn sigma_all(lam: &[f64]) -> Vec<f64> {
    let m = lam.len();
    let poly = monic_poly_ascending(lam);
    (0..=m).map(|h| poly[m - h]).collect()
}

/// Root vector with the entry at `index` (0-based) removed.
pub fn pi_remove(lam: &[f64], index: usize) -> RootVector {
    assert!(index < lam.len(), "root index {index} out of range");
    let mut out = Vec::with_capacity(lam.len() - 1);
    out.extend_from_slice(&lam[..index]);
    out.extend_from_slice(&lam[index + 1..]);
    out
}

/// Monic characteristic coefficients in descending powers:
/// `[1, sigma_1, ..., sigma_m]` so that `prod (x - lam_i) = sum c_k x^(m-k)`.
pub fn monic_coeffs(lam: &[f64]) -> Vec<f64> {
    let poly = monic_poly_ascending(lam);
    let m = lam.len();
    (0..=m).map(|k| poly[m - k]).collect()
}

/// Companion matrix in first-order-system form for the roots: ones on the
/// superdiagonal and `(-sigma_m, ..., -sigma_1)` as the last row, so its
/// characteristic polynomial is `prod (x - lam_i)`.
pub fn sylvester_matrix(lam: &[f64]) -> SmallMatrix {
    let m = lam.len();
    check_order(m);
    let sig = sigma_all(lam);
    let mut a = SmallMatrix::zeros(m, m);
    for i in 0..m.saturating_sub(1) {
        a[(i, i + 1)] = Complex64::new(1.0, 0.0);
    }
    for j in 0..m {
        a[(m - 1, j)] = Complex64::new(-sig[m - j], 0.0);
    }
    a
}

/// Companion matrix of a monic real polynomial given in descending
/// coefficients `[1, c_1, ..., c_m]`.
pub fn companion_from_monic(coeffs: &[f64]) -> DMatrix<f64> {
    let m = coeffs.len() - 1;
    check_order(m);
    assert!(
        coeffs[0] == 1.0,
        "companion construction expects a monic polynomial"
    );
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..m {
        a[(m - 1, j)] = -coeffs[m - j];
    }
    a
}

/// All complex roots of a monic real polynomial (descending coefficients),
/// via the companion-matrix eigenvalues, sorted by real then imaginary part.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    if coeffs.len() == 1 {
        return Vec::new();
    }
    let comp = companion_from_monic(coeffs);
    let eig = comp.complex_eigenvalues();
    let mut roots: Vec<Complex64> = eig.iter().copied().collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Matrix whose `i`-th row lists, in ascending powers, the coefficients of
/// `prod_{j != i} (x - lam_j)`; equivalently
/// `(sigma_{m-1}(pi_i lam), ..., sigma_1(pi_i lam), 1)`.
pub fn w_matrix(lam: &[f64]) -> SmallMatrix {
    let m = lam.len();
    check_order(m);
    let mut w = SmallMatrix::zeros(m, m);
    for i in 0..m {
        let reduced = pi_remove(lam, i);
        let poly = monic_poly_ascending(&reduced);
        for (p, c) in poly.iter().enumerate() {
            w[(i, p)] = Complex64::new(*c, 0.0);
        }
    }
    w
}

/// Unit lower-triangular transfer matrix: row `d` (1-based) lists, in
/// ascending powers, the coefficients of `prod_{i < d} (x - lam_i)`, zero
/// padded. Depends only on the first `m - 1` roots; determinant 1.
pub fn p_matrix(lam: &[f64]) -> SmallMatrix {
    let m = lam.len();
    check_order(m);
    let mut p = SmallMatrix::zeros(m, m);
    let mut poly = vec![0.0; m + 1];
    poly[0] = 1.0;
    let mut deg = 0usize;
    for d in 1..=m {
        for col in 0..d {
            p[(d - 1, col)] = Complex64::new(poly[col], 0.0);
        }
        if d < m {
            let l = lam[d - 1];
            for k in (0..=deg).rev() {
                poly[k + 1] += poly[k];
                poly[k] *= -l;
            }
            deg += 1;
        }
    }
    p
}

/// Diagonal weight `diag(eps^(m-1), ..., eps, 1)`.
pub fn h_eps(m: usize, eps: f64) -> SmallMatrix {
    check_order(m);
    SmallMatrix::from_fn(m, m, |i, j| {
        if i == j {
            Complex64::new(eps.powi((m - 1 - i) as i32), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Brute-force sum of all `r`-fold products of roots whose indices avoid
/// both `i` and `j`. Independent enumeration-based oracle for the
/// difference identity of the deleted symmetric polynomials.
pub fn subset_product_sum(lam: &[f64], i: usize, j: usize, r: usize) -> f64 {
    let indices: Vec<usize> = (0..lam.len()).filter(|&k| k != i && k != j).collect();
    if r == 0 {
        return 1.0;
    }
    indices
        .iter()
        .combinations(r)
        .map(|combo| combo.iter().map(|&&k| lam[k]).product::<f64>())
        .sum()
}

/// Residual of the difference identity
/// `sigma_{m-k}(pi_i lam) - sigma_{m-k}(pi_j lam)
///   = (-1)^(m-k) (lam_j - lam_i) * sum of (m-k-1)-fold products avoiding i, j`
/// for `1 <= k <= m - 1`, relative to the magnitude of the two sides.
pub fn sigma_difference_residual(lam: &[f64], i: usize, j: usize, k: usize) -> f64 {
    let m = lam.len();
    assert!(k >= 1 && k <= m - 1, "difference identity needs 1 <= k <= m-1");
    let lhs = sigma(m - k, &pi_remove(lam, i)) - sigma(m - k, &pi_remove(lam, j));
    let sign = if (m - k) % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = sign * (lam[j] - lam[i]) * subset_product_sum(lam, i, j, m - k - 1);
    let scale = 1.0_f64.max(lhs.abs()).max(rhs.abs());
    (lhs - rhs).abs() / scale
}

/// Hermitian part `(a + a*) / 2`.
pub fn hermitian_part(a: &SmallMatrix) -> SmallMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix, ascending. Symmetrises first so tiny
/// floating-point asymmetry cannot leak imaginary parts.
pub fn hermitian_eigenvalues(a: &SmallMatrix) -> Vec<f64> {
    let sym = hermitian_part(a);
    let eig = SymmetricEigen::new(sym);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn hermitian_extremes(a: &SmallMatrix) -> (f64, f64) {
    let vals = hermitian_eigenvalues(a);
    (vals[0], *vals.last().unwrap())
}

/// Quadratic form `(a v, v)` of a Hermitian matrix; the imaginary part is
/// discarded (it is rounding noise once `a` is Hermitian).
pub fn quadratic_form(a: &SmallMatrix, v: &SmallVector) -> f64 {
    (v.adjoint() * a * v)[(0, 0)].re
}

/// Largest absolute generalized eigenvalue of the Hermitian pencil
/// `(s, g + ridge I)`: the supremum over `v` of `|(s v, v)| / ((g + ridge) v, v)`.
/// The default ridge is `1e-14` times the trace of `g`; it is escalated a few
/// decades if the Cholesky factorisation of the metric side fails.
pub fn pencil_sup_abs(s: &SmallMatrix, g: &SmallMatrix) -> Result<f64, AlgError> {
    let (lo, hi) = pencil_extremes(s, g)?;
    Ok(lo.abs().max(hi.abs()))
}

/// Extreme generalized eigenvalues of the Hermitian pencil `(s, g + ridge I)`.
pub fn pencil_extremes(s: &SmallMatrix, g: &SmallMatrix) -> Result<(f64, f64), AlgError> {
    let reduced = pencil_reduce(s, g)?;
    Ok(hermitian_extremes(&reduced))
}

/// Largest generalized eigenvalue of `(s, g + ridge I)` together with a
/// maximising vector in the original coordinates.
pub fn pencil_top_pair(s: &SmallMatrix, g: &SmallMatrix) -> Result<(f64, SmallVector), AlgError> {
    let m = g.nrows();
    let trace = g.trace().re.abs().max(1e-300);
    let mut ridge = 1e-14 * trace;
    for _ in 0..8 {
        let metric = hermitian_part(g) + SmallMatrix::identity(m, m) * Complex64::new(ridge, 0.0);
        if let Some(chol) = Cholesky::new(metric.clone()) {
            let reduced = reduce_with(&chol, s);
            let eig = SymmetricEigen::new(hermitian_part(&reduced));
            let top = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty spectrum");
            let y = eig.eigenvectors.column(top.0).into_owned();
            let v = chol
                .l()
                .adjoint()
                .solve_upper_triangular(&y)
                .expect("triangular solve after successful factorisation");
            return Ok((*top.1, v));
        }
        ridge *= 10.0;
    }
    Err(AlgError::PencilFailure { trace })
}

fn reduce_with(chol: &Cholesky<Complex64, nalgebra::Dyn>, s: &SmallMatrix) -> SmallMatrix {
    let l = chol.l();
    let half = l
        .solve_lower_triangular(s)
        .expect("triangular solve after successful factorisation");
    let reduced_adj = l
        .solve_lower_triangular(&half.adjoint())
        .expect("triangular solve after successful factorisation");
    reduced_adj.adjoint()
}

fn pencil_reduce(s: &SmallMatrix, g: &SmallMatrix) -> Result<SmallMatrix, AlgError> {
    let m = g.nrows();
    let trace = g.trace().re.abs().max(1e-300);
    let mut ridge = 1e-14 * trace;
    for _ in 0..8 {
        let metric = hermitian_part(g) + SmallMatrix::identity(m, m) * Complex64::new(ridge, 0.0);
        if let Some(chol) = Cholesky::new(metric) {
            return Ok(reduce_with(&chol, s));
        }
        ridge *= 10.0;
    }
    Err(AlgError::PencilFailure { trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigma_values() {
        assert_eq!(sigma(0, &[4.0, 5.0]), 1.0);
        assert_eq!(sigma(2, &[1.0, 2.0, 3.0]), 11.0);
        assert_eq!(sigma(1, &[1.0, 2.0, 3.0]), -6.0);
        assert_eq!(sigma(3, &[1.0, 2.0, 3.0]), -6.0);
        assert_eq!(sigma(1, &[2.0]), -2.0);
        let all = sigma_all(&[1.0, 2.0, 3.0]);
        assert_eq!(all, vec![1.0, -6.0, 11.0, -6.0]);
    }

    #[test]
    fn pi_remove_drops_requested_entry() {
        assert_eq!(pi_remove(&[1.0, 2.0, 3.0], 0), vec![2.0, 3.0]);
        assert_eq!(pi_remove(&[1.0, 2.0, 3.0], 2), vec![1.0, 2.0]);
    }

    #[test]
    fn sylvester_examples() {
        let a = sylvester_matrix(&[1.0, -1.0]);
        assert_eq!(a[(0, 0)].re, 0.0);
        assert_eq!(a[(0, 1)].re, 1.0);
        assert_eq!(a[(1, 0)].re, 1.0);
        assert_eq!(a[(1, 1)].re, 0.0);
        let b = sylvester_matrix(&[1.0, 2.0, 3.0]);
        assert_eq!(b[(2, 0)].re, 6.0);
        assert_eq!(b[(2, 1)].re, -11.0);
        assert_eq!(b[(2, 2)].re, 6.0);
    }

    #[test]
    fn sylvester_eigenvalues_recover_roots() {
        let lam = [0.3, -1.25, 2.0, 2.0, 0.0];
        let coeffs = monic_coeffs(&lam);
        let roots = poly_roots(&coeffs);
        let mut expected = lam.to_vec();
        expected.sort_by(f64::total_cmp);
        for (r, e) in roots.iter().zip(expected.iter()) {
            assert!(r.im.abs() < 1e-6, "imaginary leak {r}");
            assert_abs_diff_eq!(r.re, *e, epsilon = 1e-6);
        }
    }

    #[test]
    fn w_matrix_examples() {
        let w = w_matrix(&[3.0, 5.0]);
        assert_eq!(w[(0, 0)].re, -5.0);
        assert_eq!(w[(0, 1)].re, 1.0);
        assert_eq!(w[(1, 0)].re, -3.0);
        assert_eq!(w[(1, 1)].re, 1.0);
        let w3 = w_matrix(&[1.0, 2.0, 3.0]);
        assert_eq!(w3[(0, 0)].re, 6.0);
        assert_eq!(w3[(0, 1)].re, -5.0);
        assert_eq!(w3[(0, 2)].re, 1.0);
    }

    #[test]
    fn p_matrix_examples() {
        let p = p_matrix(&[4.0, 9.0]);
        assert_eq!(p[(0, 0)].re, 1.0);
        assert_eq!(p[(0, 1)].re, 0.0);
        assert_eq!(p[(1, 0)].re, -4.0);
        assert_eq!(p[(1, 1)].re, 1.0);
        let p3 = p_matrix(&[1.0, 2.0, 3.0]);
        // row 3 = ascending coefficients of (x-1)(x-2) = 2 - 3x + x^2
        assert_eq!(p3[(2, 0)].re, 2.0);
        assert_eq!(p3[(2, 1)].re, -3.0);
        assert_eq!(p3[(2, 2)].re, 1.0);
        let det = p3.determinant();
        assert_abs_diff_eq!(det.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(det.im, 0.0, epsilon = 1e-12);
        // independence from the last root
        let p3b = p_matrix(&[1.0, 2.0, -7.5]);
        assert_eq!(p3, p3b);
    }

    #[test]
    fn h_eps_diagonal() {
        let h = h_eps(3, 0.5);
        assert_eq!(h[(0, 0)].re, 0.25);
        assert_eq!(h[(1, 1)].re, 0.5);
        assert_eq!(h[(2, 2)].re, 1.0);
    }

    #[test]
    fn difference_identity_small_cases() {
        let lam = [1.0, 2.0, 3.0];
        for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
            for k in 1..=2 {
                let res = sigma_difference_residual(&lam, i, j, k);
                assert!(res < 1e-14, "residual {res} at i={i} j={j} k={k}");
            }
        }
        let lam5 = [0.5, -0.25, 1.5, 1.5, -2.0];
        for k in 1..=4 {
            let res = sigma_difference_residual(&lam5, 0, 3, k);
            assert!(res < 1e-13, "residual {res} at k={k}");
        }
    }

    #[test]
    fn pencil_hand_case() {
        // metric diag(2 eps^2, 2), antisymmetric-derived s with entries
        // 2 i eps^2 off-diagonal: the sup ratio is exactly eps.
        let eps = 0.01;
        let mut s = SmallMatrix::zeros(2, 2);
        s[(0, 1)] = Complex64::new(0.0, 2.0 * eps * eps);
        s[(1, 0)] = Complex64::new(0.0, -2.0 * eps * eps);
        let mut g = SmallMatrix::zeros(2, 2);
        g[(0, 0)] = Complex64::new(2.0 * eps * eps, 0.0);
        g[(1, 1)] = Complex64::new(2.0, 0.0);
        let sup = pencil_sup_abs(&s, &g).unwrap();
        assert_abs_diff_eq!(sup, eps, epsilon = 1e-9);
    }

    #[test]
    fn hermitian_eigen_range() {
        let mut a = SmallMatrix::zeros(2, 2);
        a[(0, 0)] = Complex64::new(2.0, 0.0);
        a[(0, 1)] = Complex64::new(0.0, 1.0);
        a[(1, 0)] = Complex64::new(0.0, -1.0);
        a[(1, 1)] = Complex64::new(2.0, 0.0);
        let (lo, hi) = hermitian_extremes(&a);
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 3.0, epsilon = 1e-12);
    }
}
