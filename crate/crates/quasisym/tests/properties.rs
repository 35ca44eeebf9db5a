//! Randomised invariants for the expression language, the symmetric-function
//! algebra, the symmetriser family, and the sampling and grid helpers.
//! Each property states something that must hold for arbitrary inputs, not
//! just the fixtures of the unit tests: round-trips, symmetry under root
//! reordering, homogeneity, positivity, and cross-module agreement.

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use quasisym::coeff::{self, CoefficientExpr};
use quasisym::gevrey;
use quasisym::runner::SEPARATION_BOUND;
use quasisym::spectrum;
use quasisym::symalg;
use quasisym::symmetriser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sample times for function-equality checks; includes both piece boundaries
/// used by the generator, a point below the lowest one, and zero.
const EVAL_TIMES: [f64; 6] = [-1.5, -0.25, 0.0, 0.5, 0.75, 1.3];

/// Expressions over the total subset of the grammar: division and the
/// exponential are left out so that every generated tree evaluates without
/// domain errors or overflow on the sample window, and integer powers stay
/// small for the same reason. Piece boundaries are fixed so branch counts
/// always match.
fn expr_strategy() -> impl Strategy<Value = CoefficientExpr> {
    let leaf = prop_oneof![
        (-4.0..4.0f64).prop_map(CoefficientExpr::Num),
        Just(CoefficientExpr::Time),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| CoefficientExpr::Neg(Box::new(a))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| CoefficientExpr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| CoefficientExpr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| CoefficientExpr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 0..=3i32).prop_map(|(a, k)| CoefficientExpr::Pow(Box::new(a), k)),
            inner.clone().prop_map(|a| CoefficientExpr::Sin(Box::new(a))),
            inner.clone().prop_map(|a| CoefficientExpr::Cos(Box::new(a))),
            inner.clone().prop_map(|a| CoefficientExpr::Abs(Box::new(a))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| CoefficientExpr::Max(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| CoefficientExpr::Min(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone(), inner)
                .prop_map(|(a, b, c)| CoefficientExpr::Piece(vec![-0.25, 0.75], vec![a, b, c])),
        ]
    })
}

fn root_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 1..=max_len)
}

/// A root vector together with a shuffled copy of itself.
fn root_vec_with_shuffle(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    root_vec(max_len).prop_flat_map(|lam| {
        let original = lam.clone();
        Just(lam)
            .prop_shuffle()
            .prop_map(move |mixed| (original.clone(), mixed))
    })
}

fn max_abs(a: &symalg::SmallMatrix) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

proptest! {
    /// The printer emits fully parenthesised text, so reparsing must give the
    /// same function exactly, not merely approximately. The only structural
    /// rewrite on the way back is a negative literal turning into a negation
    /// node, and negation is exact, so plain float equality is the right
    /// predicate (it also forgives the sign of zero, which is the one value
    /// where the rewrite can differ).
    #[test]
    fn printed_expression_reparses_to_the_same_function(e in expr_strategy()) {
        let text = coeff::print(&e);
        let back = coeff::parse(&text);
        prop_assert!(back.is_ok(), "reparse of `{}` failed: {:?}", text, back.err());
        let back = back.unwrap();
        for &t in &EVAL_TIMES {
            let lhs = coeff::eval(&e, t);
            let rhs = coeff::eval(&back, t);
            prop_assert!(lhs.is_ok() && rhs.is_ok(), "evaluation failed for `{}`", text);
            prop_assert_eq!(lhs.unwrap(), rhs.unwrap(), "t = {} for `{}`", t, text);
        }
    }

    /// Literal formatting uses the shortest-round-trip decimal form, so any
    /// finite value must come back bit for bit.
    #[test]
    fn any_finite_literal_survives_print_and_reparse(x in any::<f64>()) {
        prop_assume!(x.is_finite());
        let text = coeff::print(&CoefficientExpr::Num(x));
        let back = coeff::parse(&text);
        prop_assert!(back.is_ok(), "literal `{}` failed to reparse", text);
        let v = coeff::eval(&back.unwrap(), 0.0);
        prop_assert_eq!(v.map(f64::to_bits), Ok(x.to_bits()));
    }

    /// The signed elementary symmetric polynomials are symmetric functions.
    #[test]
    fn elementary_symmetric_sums_ignore_root_order(
        (lam, mixed) in root_vec_with_shuffle(6),
    ) {
        let a = symalg::sigma_all(&lam);
        let b = symalg::sigma_all(&mixed);
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    /// The expanded ascending coefficients evaluate (by Horner) to the same
    /// value as the product of linear factors they came from.
    #[test]
    fn expanded_polynomial_matches_its_linear_factors(
        lam in root_vec(6),
        x in -3.5..3.5f64,
    ) {
        let poly = symalg::monic_poly_ascending(&lam);
        let horner = poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let product: f64 = lam.iter().map(|l| x - l).product();
        assert_relative_eq!(horner, product, epsilon = 1e-8, max_relative = 1e-10);
    }

    /// The transfer matrix is unit lower triangular by construction, hence
    /// volume preserving.
    #[test]
    fn transfer_matrix_is_unit_lower_triangular(lam in root_vec(6)) {
        let m = lam.len();
        let p = symalg::p_matrix(&lam);
        for i in 0..m {
            prop_assert_eq!(p[(i, i)], Complex64::new(1.0, 0.0));
            for j in i + 1..m {
                prop_assert_eq!(p[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
        prop_assert!((p.determinant() - Complex64::new(1.0, 0.0)).norm() <= 1e-9);
    }

    /// The worst pair ratio is homogeneous of degree zero and even. Sign
    /// flips and power-of-two scalings are exact in floating point, so there
    /// the invariance must hold bit for bit, infinities included. A generic
    /// scale rounds every entry, and the ratio amplifies that noise by the
    /// size-over-gap conditioning of its worst pair, so the approximate form
    /// of the claim is restricted to decently conditioned inputs. Entries
    /// are kept away from the underflow range where squaring denormalises.
    #[test]
    fn separation_ratio_is_zero_homogeneous(
        lam in prop::collection::vec(-3.0..3.0f64, 2..=6),
        s in 0.1..10.0f64,
        k in -40..=40i32,
    ) {
        prop_assume!(lam.iter().all(|x| *x == 0.0 || x.abs() > 1e-100));
        let base = symmetriser::separation_ratio(&lam);

        let flipped: Vec<f64> = lam.iter().map(|x| -x).collect();
        prop_assert_eq!(base, symmetriser::separation_ratio(&flipped));

        let pow2 = 2.0f64.powi(k);
        let dyadic: Vec<f64> = lam.iter().map(|x| pow2 * x).collect();
        prop_assert_eq!(base, symmetriser::separation_ratio(&dyadic));

        let scaled: Vec<f64> = lam.iter().map(|x| s * x).collect();
        let rescaled = symmetriser::separation_ratio(&scaled);
        if base.is_infinite() {
            prop_assert!(rescaled.is_infinite());
        } else {
            let mut conditioning = 1.0_f64;
            for i in 0..lam.len() {
                for j in i + 1..lam.len() {
                    let size = lam[i].abs() + lam[j].abs();
                    let gap = (lam[i] - lam[j]).abs();
                    if size > 0.0 {
                        conditioning = conditioning.max(size / gap);
                    }
                }
            }
            if conditioning <= 1e6 {
                assert_relative_eq!(base, rescaled, epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }

    /// The worst pair ratio does not depend on how the roots are listed.
    #[test]
    fn separation_ratio_ignores_root_order(
        (lam, mixed) in root_vec_with_shuffle(6),
    ) {
        prop_assume!(lam.len() >= 2);
        prop_assert_eq!(
            symmetriser::separation_ratio(&lam),
            symmetriser::separation_ratio(&mixed)
        );
    }

    /// The symmetriser-side membership statistic and the spectrum-side pair
    /// classifier with a zero tolerance compute the same number, including
    /// the zero and infinity conventions for coincident roots.
    #[test]
    fn worst_pair_ratio_agrees_across_modules(
        lam in prop::collection::vec(-3.0..3.0f64, 2..=6),
    ) {
        prop_assert_eq!(
            symmetriser::separation_ratio(&lam),
            spectrum::lc_ratio(&lam, 0.0)
        );
    }

    /// Every evaluation of the family is a sum of Gram matrices with positive
    /// weights, so it must be Hermitian and positive semidefinite up to
    /// rounding.
    #[test]
    fn assembled_family_is_hermitian_and_nonnegative(
        lam in prop::collection::vec(-2.0..2.0f64, 1..=4),
        eps in 0.05..1.0f64,
    ) {
        let q = symmetriser::build(&lam);
        let a = symmetriser::assemble(&q, eps);
        let scale = 1.0 + max_abs(&a);
        let m = lam.len();
        for i in 0..m {
            for j in 0..m {
                prop_assert!((a[(i, j)] - a[(j, i)].conj()).norm() <= 1e-12 * scale);
            }
        }
        let (low, _) = symalg::hermitian_extremes(&a);
        prop_assert!(low >= -1e-9 * scale, "eigmin {} at scale {}", low, scale);
    }

    /// Binning the permutation sum by powers of the weight and re-evaluating
    /// must agree entrywise with the literal weighted sum.
    #[test]
    fn binned_assembly_matches_the_literal_sum(
        lam in prop::collection::vec(-2.0..2.0f64, 1..=4),
        eps in 0.05..1.0f64,
    ) {
        let binned = symmetriser::assemble(&symmetriser::build(&lam), eps);
        let direct = symmetriser::direct_assembly(&lam, eps);
        let scale = 1.0_f64.max(max_abs(&binned)).max(max_abs(&direct));
        prop_assert!(max_abs(&(&binned - &direct)) <= 1e-11 * scale);
    }

    /// The difference of deleted symmetric polynomials factors through the
    /// root gap; the expansion-based residual against the enumeration oracle
    /// stays at rounding level for every index choice.
    #[test]
    fn deleted_sigma_differences_factor_through_the_root_gap(
        lam in prop::collection::vec(-3.0..3.0f64, 2..=6),
        i_pick in any::<prop::sample::Index>(),
        j_pick in any::<prop::sample::Index>(),
        k_pick in any::<prop::sample::Index>(),
    ) {
        let m = lam.len();
        let i = i_pick.index(m);
        let j = j_pick.index(m);
        prop_assume!(i != j);
        let k = 1 + k_pick.index(m - 1);
        prop_assert!(symalg::sigma_difference_residual(&lam, i, j, k) <= 1e-10);
    }

    /// The logarithmic grid pins both endpoints exactly and is strictly
    /// increasing in between.
    #[test]
    fn log_grid_spans_exactly_and_increases(
        lo in 0.01..100.0f64,
        ratio in 1.5..500.0f64,
        count in 2usize..=40,
    ) {
        let hi = lo * ratio;
        let grid = gevrey::log_grid(lo, hi, count);
        prop_assert_eq!(grid.len(), count);
        prop_assert_eq!(grid[0], lo);
        prop_assert_eq!(grid[count - 1], hi);
        prop_assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    /// The smoothed frequency weight sits between the plain norm (or one,
    /// whichever is larger) and the shifted norm.
    #[test]
    fn frequency_bracket_interpolates_norm_and_shift(
        xi in prop::collection::vec(-200.0..200.0f64, 0..=4),
    ) {
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let b = spectrum::bracket(&xi);
        prop_assert!(b >= 1.0_f64.max(norm) * (1.0 - 1e-12));
        prop_assert!(b <= (1.0 + norm) * (1.0 + 1e-12));
    }

    /// Every sample the cone sampler returns lies inside the separation set,
    /// has the requested dimension, and stays within the unit box.
    #[test]
    fn cone_pool_stays_inside_the_separation_set(
        seed in any::<u64>(),
        m in 2usize..=5,
        count in 16usize..=48,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = symmetriser::cone_pool(&mut rng, m, SEPARATION_BOUND, 4.0, count);
        prop_assert_eq!(pool.len(), count);
        for lam in &pool {
            prop_assert_eq!(lam.len(), m);
            prop_assert!(lam.iter().all(|x| x.is_finite() && x.abs() <= 1.0));
            prop_assert!(symmetriser::separation_ratio(lam) <= SEPARATION_BOUND);
        }
    }

    /// The closed-form step factor really puts a unit pair on the separation
    /// bound: the pair `(1, r)` attains the ratio it was solved for.
    #[test]
    fn boundary_step_puts_a_unit_pair_on_the_bound(m_bound in 1.5..50.0f64) {
        let r = symmetriser::boundary_step(m_bound);
        prop_assert!(r > 1.0);
        let attained = (1.0 + r * r) / ((r - 1.0) * (r - 1.0));
        assert_relative_eq!(attained, m_bound, max_relative = 1e-9);
    }
}
