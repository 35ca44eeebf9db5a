//! Problem specification and characteristic-root analysis: evaluating the
//! principal symbol, extracting real roots, checking the pairwise separation
//! condition that bounds `(lam_i^2 + lam_j^2) / (lam_i - lam_j)^2`, and the
//! closed-form discriminants available at order two and three.

use crate::coeff::{self, CoefficientExpr, EvalError};
use crate::symalg::{self, RootVector, MAX_ORDER};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

/// Exponent vector for the space variables; length equals the dimension.
pub type MultiIndex = Vec<u32>;

/// Declared smoothness of the time-dependent coefficients, which drives the
/// frequency-dependent parameter choice and the expected loss class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    Analytic,
    /// Infinitely differentiable with no analytic structure.  The stored `k`
    /// is the differentiability budget the frequency-parameter selection
    /// spends (smoothness alone fixes no canonical choice, so it is
    /// configured, not derived).
    Smooth { k: u32 },
    /// Coefficients with exactly `k` continuous derivatives, `k >= 1`.
    FinitelyDifferentiable(u32),
}

impl Regularity {
    /// Differentiability budget used by the frequency-parameter selection;
    /// none in the analytic branch, which has its own scaling.
    pub fn finite_k(&self) -> Option<u32> {
        match self {
            Regularity::Analytic => None,
            Regularity::Smooth { k } => Some(*k),
            Regularity::FinitelyDifferentiable(k) => Some(*k),
        }
    }

    /// Index of the expected loss class for an order-`m` problem: 1 for
    /// analytic coefficients, `1 + k/(2(m-1))` for the finitely
    /// differentiable case, none for merely smooth coefficients.
    pub fn loss_index(&self, m: usize) -> Option<f64> {
        match self {
            Regularity::Analytic => Some(1.0),
            Regularity::Smooth { .. } => None,
            Regularity::FinitelyDifferentiable(k) => {
                if m <= 1 {
                    Some(1.0)
                } else {
                    Some(1.0 + f64::from(*k) / (2.0 * (m as f64 - 1.0)))
                }
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("characteristic roots leave the real axis: |Im| = {max_imag:.3e} > tol {tol:.3e}")]
    NonHyperbolic { max_imag: f64, tol: f64 },
    #[error("no closed-form discriminant at order {m}")]
    UnsupportedOrder { m: usize },
    #[error("invalid problem specification: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A linear Cauchy problem of order `m` in time on `[0, T]`: the evolution
/// equation couples the `j`-th time derivative to space derivatives through
/// coefficients `a(t)` keyed by `(j, gamma)`.  The `principal` map holds the
/// top-order part (`|gamma| = m - j`), `lower` everything below it.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub m: usize,
    pub n: usize,
    pub t_horizon: f64,
    pub principal: BTreeMap<(usize, MultiIndex), CoefficientExpr>,
    pub lower: BTreeMap<(usize, MultiIndex), CoefficientExpr>,
    pub regularity: Regularity,
    /// Frequency cutoff: checks and sweeps only consider `|xi| >= this`.
    pub low_freq_cutoff: f64,
}

impl ProblemSpec {
    pub fn new(m: usize, n: usize, t_horizon: f64, regularity: Regularity) -> Self {
        ProblemSpec {
            m,
            n,
            t_horizon,
            principal: BTreeMap::new(),
            lower: BTreeMap::new(),
            regularity,
            low_freq_cutoff: 1.0,
        }
    }

    /// One-dimensional convenience: sets the principal coefficient multiplying
    /// `|D_x|^power D_t^(m-power)`.  Panics on an unparsable literal, so it is
    /// meant for inline sources; configuration files go through the loader.
    pub fn principal_1d(mut self, power: u32, src: &str) -> Self {
        assert_eq!(self.n, 1, "principal_1d requires one space dimension");
        let expr = coeff::parse(src).expect("coefficient literal");
        self.principal.insert((self.m - power as usize, vec![power]), expr);
        self
    }

    /// One-dimensional convenience for a lower-order coefficient at
    /// `D_x^power D_t^j` with `power < m - j`.
    pub fn lower_1d(mut self, j: usize, power: u32, src: &str) -> Self {
        assert_eq!(self.n, 1, "lower_1d requires one space dimension");
        let expr = coeff::parse(src).expect("coefficient literal");
        self.lower.insert((j, vec![power]), expr);
        self
    }

    pub fn set_principal(&mut self, j: usize, gamma: MultiIndex, expr: CoefficientExpr) {
        self.principal.insert((j, gamma), expr);
    }

    pub fn set_lower(&mut self, j: usize, gamma: MultiIndex, expr: CoefficientExpr) {
        self.lower.insert((j, gamma), expr);
    }

    /// Structural checks on the key shapes and scalar parameters.
    pub fn validate(&self) -> Result<(), SpectrumError> {
        if self.m < 1 || self.m > MAX_ORDER {
            return Err(SpectrumError::BadSpec(format!(
                "order {} outside 1..={MAX_ORDER}",
                self.m
            )));
        }
        if self.n < 1 {
            return Err(SpectrumError::BadSpec("dimension must be at least 1".into()));
        }
        if !(self.t_horizon > 0.0) {
            return Err(SpectrumError::BadSpec("time horizon must be positive".into()));
        }
        if !(self.low_freq_cutoff > 0.0) {
            return Err(SpectrumError::BadSpec("frequency cutoff must be positive".into()));
        }
        for (j, gamma) in self.principal.keys() {
            let order: u32 = gamma.iter().sum();
            if gamma.len() != self.n || *j >= self.m || order as usize != self.m - j {
                return Err(SpectrumError::BadSpec(format!(
                    "principal key (j={j}, gamma={gamma:?}) malformed for order {}",
                    self.m
                )));
            }
        }
        for (j, gamma) in self.lower.keys() {
            let order: u32 = gamma.iter().sum();
            if gamma.len() != self.n || *j >= self.m || order as usize >= self.m - j {
                return Err(SpectrumError::BadSpec(format!(
                    "lower-order key (j={j}, gamma={gamma:?}) malformed for order {}",
                    self.m
                )));
            }
        }
        Ok(())
    }

    /// Every file jump point declared by any coefficient, sorted and deduped.
    pub fn jump_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .principal
            .values()
            .chain(self.lower.values())
            .flat_map(coeff::jump_points)
            .filter(|p| *p > 0.0 && *p < self.t_horizon)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        pts
    }
}

/// `<xi> = (1 + |xi|^2)^(1/2)`.
pub fn bracket(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// `xi^gamma = prod xi_i^(gamma_i)`.
pub fn xi_pow(xi: &[f64], gamma: &[u32]) -> f64 {
    xi.iter()
        .zip(gamma)
        .map(|(x, g)| x.powi(*g as i32))
        .product()
}

/// Descending coefficients `[1, c_1, ..., c_m]` of the principal symbol as a
/// monic polynomial in the dual time variable, evaluated at `(t, xi)`.
pub fn principal_symbol(
    spec: &ProblemSpec,
    t: f64,
    xi: &[f64],
) -> Result<Vec<f64>, SpectrumError> {
    principal_symbol_pinned(spec, t, t, xi)
}

/// As [`principal_symbol`], but piecewise coefficients take the branch that
/// `branch_t` selects; integrators use this to keep a step on one branch.
pub fn principal_symbol_pinned(
    spec: &ProblemSpec,
    t: f64,
    branch_t: f64,
    xi: &[f64],
) -> Result<Vec<f64>, SpectrumError> {
    let mut coeffs = vec![0.0; spec.m + 1];
    coeffs[0] = 1.0;
    for ((j, gamma), expr) in &spec.principal {
        let k = spec.m - j;
        coeffs[k] += coeff::eval_pinned(expr, t, branch_t)? * xi_pow(xi, gamma);
    }
    Ok(coeffs)
}

struct RootScan {
    normalised: RootVector,
    max_imag: f64,
    tol: f64,
}

/// Roots are computed from the polynomial rescaled by `<xi>`, whose
/// coefficients stay order-one at every frequency; the eigenvalue noise floor
/// then has a frequency-independent scale and one tolerance covers all modes.
fn root_scan(spec: &ProblemSpec, t: f64, branch_t: f64, xi: &[f64]) -> Result<RootScan, SpectrumError> {
    let coeffs = principal_symbol_pinned(spec, t, branch_t, xi)?;
    let br = bracket(xi);
    let scaled: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c / br.powi(k as i32))
        .collect();
    let size = scaled.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
    let tol = root_imag_tol(size);
    let complex = symalg::poly_roots(&scaled);
    let max_imag = complex.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    let mut normalised: Vec<f64> = complex.iter().map(|z| z.re).collect();
    normalised.sort_by(f64::total_cmp);
    Ok(RootScan {
        normalised,
        max_imag,
        tol,
    })
}

/// Imaginary-part tolerance for root classification.  Multiple real roots of
/// the scaled polynomial perturb into conjugate pairs at the square root of
/// machine precision, so the cutoff sits well above that floor while still
/// rejecting genuinely elliptic points.
pub fn root_imag_tol(coeff_size: f64) -> f64 {
    1e-7 * (1.0 + coeff_size)
}

/// Real characteristic roots at `(t, xi)`, sorted ascending, unnormalised.
pub fn roots(spec: &ProblemSpec, t: f64, xi: &[f64]) -> Result<RootVector, SpectrumError> {
    let scan = root_scan(spec, t, t, xi)?;
    if scan.max_imag > scan.tol {
        return Err(SpectrumError::NonHyperbolic {
            max_imag: scan.max_imag,
            tol: scan.tol,
        });
    }
    let br = bracket(xi);
    Ok(scan.normalised.iter().map(|l| l * br).collect())
}

/// Characteristic roots divided by `<xi>`; these are the quantities the
/// symmetriser machinery consumes, bounded uniformly in frequency.
pub fn normalised_roots(spec: &ProblemSpec, t: f64, xi: &[f64]) -> Result<RootVector, SpectrumError> {
    normalised_roots_pinned(spec, t, t, xi)
}

/// Branch-pinned variant of [`normalised_roots`]; see
/// [`principal_symbol_pinned`].
pub fn normalised_roots_pinned(
    spec: &ProblemSpec,
    t: f64,
    branch_t: f64,
    xi: &[f64],
) -> Result<RootVector, SpectrumError> {
    let scan = root_scan(spec, t, branch_t, xi)?;
    if scan.max_imag > scan.tol {
        return Err(SpectrumError::NonHyperbolic {
            max_imag: scan.max_imag,
            tol: scan.tol,
        });
    }
    Ok(scan.normalised)
}

/// Separation ratio `(a^2 + b^2) / (a - b)^2` for one root pair, with the
/// conventions 0/0 -> 0 and positive/0 -> infinity.  Differences at or below
/// `pair_tol` count as zero, so an exact multiple root reports infinity
/// rather than the square of its numerical noise.
pub fn pair_ratio(a: f64, b: f64, pair_tol: f64) -> f64 {
    let num = a * a + b * b;
    let diff = (a - b).abs();
    if diff <= pair_tol {
        if num <= pair_tol * pair_tol {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / (diff * diff)
    }
}

/// Largest pair ratio over all root pairs of one sample.
pub fn lc_ratio(lam: &[f64], pair_tol: f64) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..lam.len() {
        for j in i + 1..lam.len() {
            worst = worst.max(pair_ratio(lam[i], lam[j], pair_tol));
        }
    }
    worst
}

/// Outcome of sweeping the separation condition over a `(t, xi)` grid.
#[derive(Debug, Clone)]
pub struct LCReport {
    /// Smallest admissible bound: the largest pair ratio seen.  Infinite
    /// means the separation condition fails on the grid.
    pub m_min: f64,
    pub worst_t: f64,
    pub worst_xi: Vec<f64>,
    pub hyperbolic: bool,
    pub max_imag: f64,
    pub samples: usize,
}

/// Sweep the pairwise separation ratio over the grid product.  Points where
/// the roots leave the real axis are still scanned (their real parts enter
/// the ratio) but flip the `hyperbolic` flag instead of aborting the sweep.
pub fn lc_check(
    spec: &ProblemSpec,
    t_grid: &[f64],
    xi_grid: &[Vec<f64>],
) -> Result<LCReport, SpectrumError> {
    assert!(!t_grid.is_empty() && !xi_grid.is_empty(), "grids must be nonempty");
    let points: Vec<(f64, &Vec<f64>)> = t_grid
        .iter()
        .flat_map(|t| xi_grid.iter().map(move |xi| (*t, xi)))
        .collect();
    let scans: Result<Vec<(f64, f64, f64)>, SpectrumError> = points
        .par_iter()
        .map(|(t, xi)| {
            let scan = root_scan(spec, *t, *t, xi)?;
            let ratio = lc_ratio(&scan.normalised, scan.tol);
            Ok((ratio, scan.max_imag, scan.tol))
        })
        .collect();
    let scans = scans?;
    let mut report = LCReport {
        m_min: 0.0,
        worst_t: points[0].0,
        worst_xi: points[0].1.clone(),
        hyperbolic: true,
        max_imag: 0.0,
        samples: points.len(),
    };
    for ((ratio, max_imag, tol), (t, xi)) in scans.iter().zip(&points) {
        if *ratio > report.m_min {
            report.m_min = *ratio;
            report.worst_t = *t;
            report.worst_xi = (*xi).clone();
        }
        report.max_imag = report.max_imag.max(*max_imag);
        if *max_imag > *tol {
            report.hyperbolic = false;
        }
    }
    Ok(report)
}

/// Coefficient of `|D_x|^k D_t^(m-k)` for a one-dimensional homogeneous
/// problem, evaluated at `t`; zero when absent.
fn homog_coeff(spec: &ProblemSpec, k: usize, t: f64) -> Result<f64, SpectrumError> {
    match spec.principal.get(&(spec.m - k, vec![k as u32])) {
        Some(expr) => Ok(coeff::eval(expr, t)?),
        None => Ok(0.0),
    }
}

/// Discriminant of the principal symbol in one space dimension, available in
/// closed form at order two (`a_1^2 - 4 a_2`) and order three
/// (`-4 a_2^3 - 27 a_3^2 + a_1^2 a_2^2 - 4 a_1^3 a_3 + 18 a_1 a_2 a_3`).
/// Nonnegativity is necessary for real roots.
pub fn discriminant(spec: &ProblemSpec, t: f64) -> Result<f64, SpectrumError> {
    if spec.n != 1 {
        return Err(SpectrumError::BadSpec(
            "closed-form discriminants require one space dimension".into(),
        ));
    }
    match spec.m {
        2 => {
            let a1 = homog_coeff(spec, 1, t)?;
            let a2 = homog_coeff(spec, 2, t)?;
            Ok(a1 * a1 - 4.0 * a2)
        }
        3 => {
            let a1 = homog_coeff(spec, 1, t)?;
            let a2 = homog_coeff(spec, 2, t)?;
            let a3 = homog_coeff(spec, 3, t)?;
            Ok(-4.0 * a2.powi(3) - 27.0 * a3 * a3 + a1 * a1 * a2 * a2
                - 4.0 * a1.powi(3) * a3
                + 18.0 * a1 * a2 * a3)
        }
        m => Err(SpectrumError::UnsupportedOrder { m }),
    }
}

/// Comparison of the discriminant lower bound with the separation sweep.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// Empirical constant: smallest `discriminant / rhs` over grid points
    /// where the comparison expression is nonzero; infinite when it vanishes
    /// identically (the bound is then vacuous).
    pub c_min: f64,
    /// Separation bound obtained on the same time grid.
    pub m_min: f64,
    /// Whether `c_min > 0` agrees with `m_min` being finite.
    pub consistent: bool,
    pub samples: usize,
}

/// At order two the separation condition is equivalent to a bound
/// `discriminant >= c a_1^2`; at order three the comparison expression is
/// `(a_1 a_2 - 9 a_3)^2`.  This estimates the best constant on a grid and
/// cross-checks the classification against [`lc_check`].
pub fn lc_equivalent_check(
    spec: &ProblemSpec,
    t_grid: &[f64],
) -> Result<EquivalenceReport, SpectrumError> {
    if spec.n != 1 {
        return Err(SpectrumError::BadSpec(
            "discriminant comparison requires one space dimension".into(),
        ));
    }
    if spec.m != 2 && spec.m != 3 {
        return Err(SpectrumError::UnsupportedOrder { m: spec.m });
    }
    let mut c_min = f64::INFINITY;
    for &t in t_grid {
        let delta = discriminant(spec, t)?;
        let rhs = match spec.m {
            2 => {
                let a1 = homog_coeff(spec, 1, t)?;
                a1 * a1
            }
            _ => {
                let a1 = homog_coeff(spec, 1, t)?;
                let a2 = homog_coeff(spec, 2, t)?;
                let a3 = homog_coeff(spec, 3, t)?;
                let e = a1 * a2 - 9.0 * a3;
                e * e
            }
        };
        if rhs > 0.0 {
            c_min = c_min.min(delta / rhs);
        }
    }
    let xi = vec![spec.low_freq_cutoff.max(1.0)];
    let lc = lc_check(spec, t_grid, &[xi])?;
    let consistent = (c_min > 0.0) == lc.m_min.is_finite();
    Ok(EquivalenceReport {
        c_min,
        m_min: lc.m_min,
        consistent,
        samples: t_grid.len(),
    })
}

/// Evenly spaced time grid over `[0, T]` with `count` points, inclusive.
pub fn time_grid(t_horizon: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| t_horizon * i as f64 / (count - 1) as f64)
        .collect()
}

/// Log-spaced one-dimensional frequency grid covering both signs of the axis
/// from `lo` to `hi` in magnitude.
pub fn xi_grid_1d(lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    assert!(lo > 0.0 && hi >= lo && count >= 1);
    let mut grid = Vec::with_capacity(2 * count);
    for i in 0..count {
        let s = if count == 1 {
            0.0
        } else {
            i as f64 / (count - 1) as f64
        };
        let mag = lo * (hi / lo).powf(s);
        grid.push(vec![mag]);
        grid.push(vec![-mag]);
    }
    grid
}
