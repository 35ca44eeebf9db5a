//! Batch orchestration: execute each scenario's enabled checks in dependency
//! order (algebraic properties, then root separation and lower-order
//! conditions, then mode solves and fits), fan scenarios out over the thread
//! pool, and merge results deterministically.  Reports are sorted by scenario
//! name and data rows by frequency, reductions run in a fixed order, and all
//! randomness is seeded, so identical inputs produce byte-identical output.

use crate::evolve::{self, IntegrateOptions, ModeTrajectory};
use crate::gevrey;
use crate::report::{self, CheckEntry, GrowthSummary, Real, ScenarioReport};
use crate::scenario::{self, DataRecipe, Scenario, KNOWN_CHECKS};
use crate::spectrum::{self, ProblemSpec};
use crate::symalg::{self, RootVector};
use crate::symmetriser;
use crate::levi;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Epsilon grid for the per-family property checks.
pub const PROPERTY_EPS_GRID: [f64; 4] = [1.0, 0.3, 0.1, 0.03];

/// Epsilon grid for the commutator spread check, log-spaced over three
/// decades.
pub const COMMUTATOR_EPS_GRID: [f64; 7] = [
    1e-3,
    3.1622776601683794e-3,
    1e-2,
    3.1622776601683794e-2,
    1e-1,
    3.1622776601683795e-1,
    1.0,
];

/// Separation-set bound used when sampling root families.
pub const SEPARATION_BOUND: f64 = 10.0;

const PROPS_SAMPLES: usize = 200;
const NEAR_DIAGONAL_SAMPLES: usize = 1000;
const COMMUTATOR_VECTORS: usize = 12;
const DIFFERENCE_DRAWS: usize = 10_000;
const DIFFERENCE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] scenario::ConfigError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Knobs shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for JSON reports and CSV dumps; results stay in memory when
    /// absent.
    pub out_dir: Option<PathBuf>,
    /// Check ids a subcommand restricts execution to, intersected with each
    /// scenario's enabled list.
    pub subset: Option<Vec<String>>,
    /// Further restriction from the command line.
    pub only: Option<Vec<String>>,
    /// Replaces every scenario seed when set.
    pub seed: Option<u64>,
    /// Replaces the sampled order for the root-family property checks.
    pub order: Option<usize>,
}

/// Merged result of a batch run.
#[derive(Debug)]
pub struct RunOutcome {
    /// Per-scenario reports, sorted by scenario name.
    pub reports: Vec<ScenarioReport>,
    /// One line per check that could not run at all; such checks also appear
    /// in their report as failed entries, so the run continues past them.
    pub failures: Vec<String>,
    /// Files written under the output directory.
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.passed())
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(!self.all_pass())
    }
}

struct CsvDump {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

struct ScenarioResult {
    report: ScenarioReport,
    dumps: Vec<CsvDump>,
    failures: Vec<String>,
}

/// Load a configuration file or directory and run it; see [`run`].
pub fn run_config(path: &Path, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let scenarios = scenario::load_config(path)?;
    run(&scenarios, opts)
}

/// Run the enabled checks of every scenario.  Check-level failures are
/// recorded and the run continues; IO failures abort.
pub fn run(scenarios: &[Scenario], opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let mut order: Vec<&Scenario> = scenarios.iter().collect();
    order.sort_by(|a, b| a.name.cmp(&b.name));
    let results: Vec<ScenarioResult> = order.par_iter().map(|sc| run_scenario(sc, opts)).collect();

    let mut outcome = RunOutcome {
        reports: Vec::new(),
        failures: Vec::new(),
        written: Vec::new(),
    };
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    for res in results {
        if let Some(dir) = &opts.out_dir {
            let path = res.report.write_to(dir).map_err(|source| RunError::Io {
                path: dir.clone(),
                source,
            })?;
            outcome.written.push(path);
            for dump in &res.dumps {
                let path = dir.join(&dump.name);
                let header: Vec<&str> = dump.header.iter().map(String::as_str).collect();
                report::write_csv(&path, &header, dump.rows.iter().cloned()).map_err(
                    |source| RunError::Io {
                        path: path.clone(),
                        source,
                    },
                )?;
                outcome.written.push(path);
            }
        }
        outcome.reports.push(res.report);
        outcome.failures.extend(res.failures);
    }
    Ok(outcome)
}

/// Effective check list: the dependency-ordered intersection of the known
/// ids with the scenario's enabled checks and any command-line restrictions.
pub fn active_checks(sc: &Scenario, opts: &RunOptions) -> Vec<&'static str> {
    KNOWN_CHECKS
        .iter()
        .copied()
        .filter(|id| sc.checks.iter().any(|c| c == id))
        .filter(|id| opts.subset.as_ref().is_none_or(|s| s.iter().any(|c| c == id)))
        .filter(|id| opts.only.as_ref().is_none_or(|s| s.iter().any(|c| c == id)))
        .collect()
}

struct Ctx<'a> {
    sc: &'a Scenario,
    seed: u64,
    order: usize,
    t_grid: Vec<f64>,
    xi_sweep: Vec<Vec<f64>>,
    trajectories: Option<Result<Vec<ModeTrajectory>, String>>,
}

impl Ctx<'_> {
    fn trajectories(&mut self) -> Result<&[ModeTrajectory], String> {
        if self.trajectories.is_none() {
            self.trajectories = Some(compute_trajectories(self.sc));
        }
        match self.trajectories.as_ref().unwrap() {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }
}

fn run_scenario(sc: &Scenario, opts: &RunOptions) -> ScenarioResult {
    let mut ctx = Ctx {
        sc,
        seed: opts.seed.unwrap_or(sc.seed),
        order: opts.order.unwrap_or(sc.spec.m).clamp(1, symalg::MAX_ORDER),
        t_grid: spectrum::time_grid(sc.spec.t_horizon, sc.grids.t_count),
        xi_sweep: sweep_grid(sc),
        trajectories: None,
    };
    let mut checks = Vec::new();
    let mut growth = None;
    let mut dumps = Vec::new();
    let mut failures = Vec::new();
    for id in active_checks(sc, opts) {
        let built = match id {
            "quasisym-props" => props_check(&ctx),
            "near-diagonal" => near_diagonal_check(&ctx),
            "commutator" => commutator_check(&ctx),
            "difference-identity" => difference_check(&ctx),
            "lc-separation" => lc_separation_check(&ctx),
            "lc-equivalence" => lc_equivalence_check(&ctx),
            "levi-lb" => levi_lb_entry(&ctx),
            "relaxed-levi" => relaxed_levi_entry(&ctx),
            "solve" => solve_entry(&mut ctx, &mut dumps),
            "energy" => energy_entry(&mut ctx),
            "fit-growth" => fit_growth_entry(&mut ctx, &mut growth, &mut dumps),
            "decay-fit" => decay_fit_entry(&ctx),
            "partition" => partition_entry(&ctx),
            other => unreachable!("unhandled check id {other}"),
        };
        match built {
            Ok(entry) => checks.push(entry),
            Err(message) => {
                failures.push(format!("{}/{id}: {message}", sc.name));
                checks.push(CheckEntry {
                    id: id.to_string(),
                    pass: false,
                    constants: BTreeMap::new(),
                    samples: 0,
                    worst_case: BTreeMap::new(),
                });
            }
        }
    }
    ScenarioResult {
        report: ScenarioReport {
            scenario: sc.name.clone(),
            checks,
            growth,
        },
        dumps,
        failures,
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = x.total_cmp(y);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

/// Frequency vectors swept by the grid checks: both signs of every
/// configured magnitude, sorted lexicographically.
fn sweep_grid(sc: &Scenario) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for v in sc.grids.xi_magnitudes() {
        out.push(sc.grids.xi_vector(v));
        out.push(sc.grids.xi_vector(-v));
    }
    out.sort_by(|a, b| lex_cmp(a, b));
    out
}

fn compute_trajectories(sc: &Scenario) -> Result<Vec<ModeTrajectory>, String> {
    let opts = IntegrateOptions {
        tol: sc.tol,
        outputs: sc.grids.t_count,
        fixed_dt: None,
    };
    let modes: Result<Vec<ModeTrajectory>, String> = sc
        .grids
        .xi_magnitudes()
        .par_iter()
        .map(|&v| {
            let xi = sc.grids.xi_vector(v);
            let g = sc.data.g_hat(sc.spec.m, v).map_err(|e| e.to_string())?;
            let v0 = evolve::initial_mode(&sc.spec, &g, &xi);
            evolve::integrate_mode_with(&sc.spec, &v0, &xi, &opts).map_err(|e| e.to_string())
        })
        .collect();
    let mut modes = modes?;
    modes.sort_by(|a, b| lex_cmp(&a.xi, &b.xi));
    Ok(modes)
}

fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

fn draw_roots(rng: &mut impl Rng, m: usize) -> RootVector {
    (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Shared sample pool for the near-diagonal and commutator checks: separated
/// directions rescaled over four stratified decades, so every prefix of the
/// pool covers the magnitude range the regularisation grids probe.
/// Single-magnitude pools leave the per-epsilon extremes in the crossover
/// regime and the measured constants drift with epsilon instead of
/// saturating.  Both checks draw from the same stream so their leading
/// samples coincide.
pub fn cone_samples(seed: u64, m: usize, count: usize) -> Vec<RootVector> {
    let mut rng = stream(seed, 2);
    symmetriser::cone_pool(&mut rng, m, SEPARATION_BOUND, 4.0, count)
}

fn real_map(pairs: &[(&str, f64)]) -> BTreeMap<String, Real> {
    pairs.iter().map(|(k, v)| (k.to_string(), Real(*v))).collect()
}

fn entry(
    id: &str,
    pass: bool,
    constants: &[(&str, f64)],
    samples: usize,
    worst_case: &[(&str, f64)],
) -> CheckEntry {
    CheckEntry {
        id: id.to_string(),
        pass,
        constants: real_map(constants),
        samples,
        worst_case: real_map(worst_case),
    }
}

/// Structural identities of the symmetriser family over random root draws:
/// factorised zeroth part, its determinant product formula, the epsilon-power
/// recursion, the diagonal product bound, and two-sided coercivity.
fn props_check(ctx: &Ctx) -> Result<CheckEntry, String> {
    let m = ctx.order;
    let mut rng = stream(ctx.seed, 1);
    let mut worst_factor = 0.0_f64;
    let mut worst_det = 0.0_f64;
    let mut worst_recursion = 0.0_f64;
    let mut worst_diag = 0.0_f64;
    let mut coercivity = 0.0_f64;
    let mut pass = true;
    let mut worst_sample = 0usize;
    for index in 0..PROPS_SAMPLES {
        let lam = draw_roots(&mut rng, m);
        let q = symmetriser::build(&lam);
        let (factor, det) = symmetriser::verify_q0_identity(&q);
        pass &= factor.pass && det.pass;
        if factor.worst_ratio > worst_factor {
            worst_factor = factor.worst_ratio;
            worst_sample = index;
        }
        worst_det = worst_det.max(det.worst_ratio);
        if m >= 2 {
            let rec = symmetriser::verify_recursion(&q);
            pass &= rec.pass;
            worst_recursion = worst_recursion.max(rec.worst_ratio);
            let diag = symmetriser::verify_diag_product(&q);
            pass &= diag.pass;
            worst_diag = worst_diag.max(diag.worst_ratio);
        }
        let co = symmetriser::verify_coercivity(&q, &PROPERTY_EPS_GRID)
            .map_err(|e| e.to_string())?;
        pass &= co.pass;
        coercivity = coercivity.max(co.constant_estimate);
    }
    Ok(entry(
        "quasisym-props",
        pass,
        &[
            ("coercivity_constant", coercivity),
            ("diag_product_worst", worst_diag),
            ("q0_determinant_worst", worst_det),
            ("q0_factorisation_worst", worst_factor),
            ("recursion_worst", worst_recursion),
        ],
        PROPS_SAMPLES,
        &[("sample_index", worst_sample as f64)],
    ))
}

/// Near-diagonality constant over separated root samples, with a doubling
/// pass that bounds how much the estimate moves when the sample count grows.
fn near_diagonal_check(ctx: &Ctx) -> Result<CheckEntry, String> {
    let m = ctx.order;
    let n = NEAR_DIAGONAL_SAMPLES;
    let samples = cone_samples(ctx.seed, m, 2 * n);
    let base = symmetriser::near_diagonal_constant(&samples[..n], &PROPERTY_EPS_GRID, SEPARATION_BOUND)
        .map_err(|e| e.to_string())?;
    let doubled = symmetriser::near_diagonal_constant(&samples, &PROPERTY_EPS_GRID, SEPARATION_BOUND)
        .map_err(|e| e.to_string())?;
    let c_base = base.constant_estimate;
    let c_doubled = doubled.constant_estimate;
    let change = (c_base - c_doubled).abs() / c_base.abs().max(1e-300);
    let worst_index = doubled
        .details
        .get("worst_sample_index")
        .copied()
        .unwrap_or(0.0);
    Ok(entry(
        "near-diagonal",
        base.pass && doubled.pass && change <= 0.25,
        &[
            ("c0", c_base),
            ("c0_doubled", c_doubled),
            ("relative_change", change),
            ("separation_bound", SEPARATION_BOUND),
        ],
        n,
        &[("sample_index", worst_index)],
    ))
}

/// Commutator control: the pool-wide pencil supremum of the skew part against
/// the symmetriser stays proportional to epsilon across three decades, with
/// random states cross-checking each supremum from below.  The pool reuses the
/// near-diagonal stream so the leading samples coincide between the two
/// measurements.
fn commutator_check(ctx: &Ctx) -> Result<CheckEntry, String> {
    let m = ctx.order;
    let samples = cone_samples(ctx.seed, m, NEAR_DIAGONAL_SAMPLES);
    let mut probe_rng = stream(ctx.seed, 3);
    let rep = symmetriser::commutator_family_constant(
        &samples,
        &COMMUTATOR_EPS_GRID,
        COMMUTATOR_VECTORS,
        &mut probe_rng,
    )
    .map_err(|e| e.to_string())?;
    let min_gap = rep
        .details
        .get("min_pencil_minus_sampled")
        .copied()
        .unwrap_or(f64::NEG_INFINITY);
    let worst_sample = rep.details.get("worst_sample_index").copied().unwrap_or(0.0);
    Ok(entry(
        "commutator",
        rep.pass,
        &[
            ("constant", rep.constant_estimate),
            ("min_pencil_minus_sampled", min_gap),
            ("spread", rep.worst_ratio),
        ],
        rep.samples,
        &[("sample_index", worst_sample)],
    ))
}

/// Exactness of the elementary-symmetric difference identity on random
/// root draws and index choices.
fn difference_check(ctx: &Ctx) -> Result<CheckEntry, String> {
    let m = ctx.order;
    if m < 2 {
        return Ok(entry(
            "difference-identity",
            true,
            &[("worst_residual", 0.0), ("tolerance", DIFFERENCE_TOL)],
            0,
            &[],
        ));
    }
    let mut rng = stream(ctx.seed, 4);
    let mut worst = 0.0_f64;
    let mut at = (0usize, 0usize, 1usize);
    for _ in 0..DIFFERENCE_DRAWS {
        let lam = draw_roots(&mut rng, m);
        let i = rng.gen_range(0..m);
        let j = loop {
            let j = rng.gen_range(0..m);
            if j != i {
                break j;
            }
        };
        let k = rng.gen_range(1..m);
        let r = symalg::sigma_difference_residual(&lam, i, j, k);
        if r > worst {
            worst = r;
            at = (i, j, k);
        }
    }
    Ok(entry(
        "difference-identity",
        worst <= DIFFERENCE_TOL,
        &[("tolerance", DIFFERENCE_TOL), ("worst_residual", worst)],
        DIFFERENCE_DRAWS,
        &[("i", at.0 as f64), ("j", at.1 as f64), ("k", at.2 as f64)],
    ))
}

fn worst_xi_map(worst_t: f64, worst_xi: &[f64]) -> Vec<(String, f64)> {
    let mut pairs = vec![("t".to_string(), worst_t)];
    for (i, x) in worst_xi.iter().enumerate() {
        pairs.push((format!("xi_{}", i + 1), *x));
    }
    pairs
}

/// Pairwise root separation swept over the time and frequency grids.
fn lc_separation_check(ctx: &Ctx) -> Result<CheckEntry, String> {
    let rep = spectrum::lc_check(&ctx.sc.spec, &ctx.t_grid, &ctx.xi_sweep)
        .map_err(|e| e.to_string())?;
    let worst: Vec<(String, f64)> = worst_xi_map(rep.worst_t, &rep.worst_xi);
    let worst_refs: Vec<(&str, f64)> = worst.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    Ok(entry(
        "lc-separation",
        rep.hyperbolic && rep.m_min.is_finite(),
        &[("m_min", rep.m_min), ("max_imag", rep.max_imag)],
        rep.samples,
        &worst_refs,
    ))
}

/// Discriminant form of the separation condition, compared with the sweep.
fn lc_equivalence_check(ctx: &Ctx) -> Result<CheckEntry, String> {
    let rep = spectrum::lc_equivalent_check(&ctx.sc.spec, &ctx.t_grid)
        .map_err(|e| e.to_string())?;
    Ok(entry(
        "lc-equivalence",
        rep.consistent,
        &[("c_min", rep.c_min), ("m_min", rep.m_min)],
        rep.samples,
        &[],
    ))
}

/// Lower-order condition sweep with a time-grid refinement pass: the constant
/// must be finite and stable (within a factor two) when the grid doubles.
fn levi_lb_entry(ctx: &Ctx) -> Result<CheckEntry, String> {
    let sc = ctx.sc;
    let base = levi::levi_lb_check(&sc.spec, &ctx.t_grid, &ctx.xi_sweep)
        .map_err(|e| e.to_string())?;
    let fine_t = spectrum::time_grid(sc.spec.t_horizon, 2 * sc.grids.t_count - 1);
    let fine = levi::levi_lb_check(&sc.spec, &fine_t, &ctx.xi_sweep)
        .map_err(|e| e.to_string())?;
    let ratio = if base.global_c > 0.0 && fine.global_c.is_finite() {
        fine.global_c / base.global_c
    } else {
        1.0
    };
    let (worst_col, col_c) = base
        .per_j_constant
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, c)| (i as f64, *c))
        .unwrap_or((0.0, 0.0));
    Ok(entry(
        "levi-lb",
        base.pass && fine.pass && ratio <= 2.0,
        &[
            ("global_c", base.global_c),
            ("global_c_refined", fine.global_c),
            ("refinement_ratio", ratio),
            ("wbv_constant", base.wbv_constant),
        ],
        base.samples + fine.samples,
        &[("column", worst_col), ("column_constant", col_c)],
    ))
}

/// Truncated lower-order condition at the configured level, gated on the
/// truncation being admissible for the declared regularity.
fn relaxed_levi_entry(ctx: &Ctx) -> Result<CheckEntry, String> {
    let sc = ctx.sc;
    let rep = levi::relaxed_levi_check(&sc.spec, sc.relaxed_level, &ctx.t_grid, &ctx.xi_sweep)
        .map_err(|e| e.to_string())?;
    let mut constants = vec![
        ("admissible", f64::from(u8::from(rep.admissible))),
        ("global_c", rep.levi.global_c),
        ("level", f64::from(sc.relaxed_level)),
    ];
    if let Some(bound) = rep.loss_bound {
        constants.push(("loss_bound", bound));
    }
    Ok(entry(
        "relaxed-levi",
        rep.levi.pass && rep.admissible,
        &constants,
        rep.levi.samples,
        &[],
    ))
}

/// Integrate every configured frequency mode and dump the trajectories.
fn solve_entry(ctx: &mut Ctx, dumps: &mut Vec<CsvDump>) -> Result<CheckEntry, String> {
    let (name, tol, n, m) = (
        ctx.sc.name.clone(),
        ctx.sc.tol,
        ctx.sc.spec.n,
        ctx.sc.spec.m,
    );
    let trajs = ctx.trajectories()?;
    let total: usize = trajs.iter().map(|t| t.t_samples.len()).sum();
    let (mut max_acc, mut max_rej, mut worst_mag) = (0usize, 0usize, 0.0_f64);
    for t in trajs {
        if t.accepted_steps > max_acc {
            max_acc = t.accepted_steps;
            worst_mag = t.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
        max_rej = max_rej.max(t.rejected_steps);
    }

    let mut header: Vec<String> = (1..=n).map(|i| format!("xi_{i}")).collect();
    header.push("t".into());
    for l in 1..=m {
        header.push(format!("re_V{l}"));
        header.push(format!("im_V{l}"));
    }
    header.push("E_eps".into());
    let mut rows = Vec::with_capacity(total);
    for traj in trajs {
        for (idx, t) in traj.t_samples.iter().enumerate() {
            let mut row = traj.xi.clone();
            row.push(*t);
            for l in 0..m {
                row.push(traj.v[idx][l].re);
                row.push(traj.v[idx][l].im);
            }
            row.push(traj.e_eps[idx]);
            rows.push(row);
        }
    }
    dumps.push(CsvDump {
        name: format!("{name}_trajectories.csv"),
        header,
        rows,
    });

    Ok(entry(
        "solve",
        true,
        &[
            ("max_accepted_steps", max_acc as f64),
            ("max_rejected_steps", max_rej as f64),
            ("modes", trajs.len() as f64),
            ("tolerance", tol),
        ],
        total,
        &[("xi_abs_most_steps", worst_mag)],
    ))
}

/// Two-sided energy sandwich and growth budget per trajectory.
fn energy_entry(ctx: &mut Ctx) -> Result<CheckEntry, String> {
    let spec: ProblemSpec = ctx.sc.spec.clone();
    let trajs = ctx.trajectories()?;
    let mut pass = true;
    let mut s_max = 0.0_f64;
    let mut s_min = f64::INFINITY;
    let mut g_max = 0.0_f64;
    let mut loss_min = f64::INFINITY;
    let mut worst_mag = 0.0_f64;
    for traj in trajs {
        let rep = evolve::energy_bounds_check(traj, &spec);
        pass &= rep.pass;
        if rep.sandwich_constant > s_max {
            s_max = rep.sandwich_constant;
            worst_mag = traj.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
        s_min = s_min.min(rep.sandwich_constant);
        g_max = g_max.max(rep.growth_constant);
        loss_min = loss_min.min(rep.loss_scale);
    }
    let spread = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    Ok(entry(
        "energy",
        pass,
        &[
            ("growth_max", g_max),
            ("loss_scale_min", loss_min),
            ("sandwich_max", s_max),
            ("sandwich_spread", spread),
        ],
        trajs.len(),
        &[("xi_abs", worst_mag)],
    ))
}

/// Growth-law fit across the mode family at the final time, and the fitted
/// curve dump.
fn fit_growth_entry(
    ctx: &mut Ctx,
    growth: &mut Option<GrowthSummary>,
    dumps: &mut Vec<CsvDump>,
) -> Result<CheckEntry, String> {
    let name = ctx.sc.name.clone();
    let t_end = ctx.sc.spec.t_horizon;
    let mut candidates = gevrey::DEFAULT_THETA_CANDIDATES.to_vec();
    if let Some(s) = ctx.sc.spec.regularity.loss_index(ctx.sc.spec.m) {
        if s >= 1.0 {
            candidates.push(1.0 / s);
        }
    }
    let trajs = ctx.trajectories()?;
    let points = gevrey::growth_points(trajs, t_end);
    let model = gevrey::fit_growth_samples(&points, &candidates).map_err(|e| e.to_string())?;

    let mut worst_dev = 0.0_f64;
    let mut worst_at = 0.0_f64;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|(x, y)| {
            let p = model.predict(*x);
            if (y - p).abs() > worst_dev {
                worst_dev = (y - p).abs();
                worst_at = *x;
            }
            vec![*x, *y, p]
        })
        .collect();
    dumps.push(CsvDump {
        name: format!("{name}_growth_fit.csv"),
        header: vec!["xi".into(), "log_ratio".into(), "model_value".into()],
        rows,
    });
    *growth = Some(GrowthSummary {
        kappa: Real(model.kappa),
        c_stretch: Real(model.c_stretch),
        theta: Real(model.theta),
        classification: model.classification.to_string(),
    });
    Ok(entry(
        "fit-growth",
        true,
        &[
            ("c_stderr", model.c_stderr),
            ("c_stretch", model.c_stretch),
            ("fit_residual", model.fit_residual),
            ("kappa", model.kappa),
            ("theta", model.theta),
        ],
        points.len(),
        &[("abs_deviation", worst_dev), ("xi_abs", worst_at)],
    ))
}

/// Recover the decay order of the scenario's spectral data recipe and compare
/// with the configured value.
fn decay_fit_entry(ctx: &Ctx) -> Result<CheckEntry, String> {
    let sc = ctx.sc;
    let DataRecipe::Gevrey { s, delta, phase } = &sc.data else {
        return Err("decay fit needs a decaying spectral data recipe".into());
    };
    let mut grid = vec![0.0];
    grid.extend(gevrey::log_grid(
        sc.grids.xi_lo,
        sc.grids.xi_hi,
        sc.grids.xi_count.max(25),
    ));
    let data = gevrey::make_gevrey_data_with(*s, *delta, &grid, *phase);
    let estimate = gevrey::fit_decay_exponent(&data).map_err(|e| e.to_string())?;
    let rel = (estimate - s).abs() / s;
    Ok(entry(
        "decay-fit",
        rel <= 0.05,
        &[
            ("relative_error", rel),
            ("s_estimate", estimate),
            ("s_true", *s),
        ],
        data.xi.len(),
        &[],
    ))
}

/// Time partition at the scaled symmetriser's entry zeros, at the lowest
/// configured frequency.
fn partition_entry(ctx: &Ctx) -> Result<CheckEntry, String> {
    let sc = ctx.sc;
    let xi = sc.grids.xi_vector(sc.grids.xi_lo);
    let part = evolve::analytic_partition_with(&sc.spec, &xi, sc.max_segments)
        .map_err(|e| e.to_string())?;
    let worst: &[(&str, f64)] = &[("first_interior_cut", part.taus.get(1).copied().unwrap_or(0.0))];
    Ok(entry(
        "partition",
        true,
        &[("segments", part.segments() as f64)],
        part.taus.len(),
        if part.segments() > 1 { worst } else { &[] },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    const WAVE: &str = r#"
name = "wave-family"
seed = 7
checks = ["lc-separation", "levi-lb", "solve", "energy", "fit-growth"]

[problem]
m = 2
n = 1
t_horizon = 1.0
regularity = "analytic"

[coefficients]
a_2_2 = "-1-t^2"
a_2_1 = "t/2"

[grids]
t_count = 33
xi_count = 13
"#;

    #[test]
    fn check_order_follows_dependencies() {
        let sc = parse_scenario("inline", WAVE).unwrap();
        let opts = RunOptions {
            subset: Some(vec!["solve".into(), "lc-separation".into()]),
            ..RunOptions::default()
        };
        assert_eq!(active_checks(&sc, &opts), vec!["lc-separation", "solve"]);
        let narrowed = RunOptions {
            only: Some(vec!["energy".into()]),
            ..RunOptions::default()
        };
        assert_eq!(active_checks(&sc, &narrowed), vec!["energy"]);
    }

    #[test]
    fn empty_run_passes() {
        let outcome = run(&[], &RunOptions::default()).unwrap();
        assert!(outcome.all_pass());
        assert_eq!(outcome.exit_code(), 0);
        assert!(outcome.reports.is_empty());
    }

    #[test]
    fn wave_scenario_report_is_deterministic() {
        let sc = parse_scenario("inline", WAVE).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out_dir: Some(dir.path().join("run1")),
            ..RunOptions::default()
        };
        let first = run(std::slice::from_ref(&sc), &opts).unwrap();
        assert!(first.failures.is_empty(), "{:?}", first.failures);
        assert!(first.all_pass(), "{}", first.reports[0].to_json());
        assert_eq!(first.reports.len(), 1);
        let rep = &first.reports[0];
        assert_eq!(rep.checks.len(), 5);
        assert!(rep.growth.is_some());
        // Separated roots and compliant lower order: finite constants.
        let lc = &rep.checks[0];
        assert_eq!(lc.id, "lc-separation");
        assert!(lc.constants["m_min"].0.is_finite());

        let again = RunOptions {
            out_dir: Some(dir.path().join("run2")),
            ..RunOptions::default()
        };
        let second = run(std::slice::from_ref(&sc), &again).unwrap();
        assert_eq!(first.reports[0].to_json(), second.reports[0].to_json());

        let json1 = std::fs::read(dir.path().join("run1/wave-family.json")).unwrap();
        let json2 = std::fs::read(dir.path().join("run2/wave-family.json")).unwrap();
        assert_eq!(json1, json2);
        let csv = std::fs::read_to_string(dir.path().join("run1/wave-family_trajectories.csv"))
            .unwrap();
        assert!(csv.starts_with("xi_1,t,re_V1,im_V1,re_V2,im_V2,E_eps\n"));
        let fit = std::fs::read_to_string(dir.path().join("run1/wave-family_growth_fit.csv"))
            .unwrap();
        assert!(fit.starts_with("xi,log_ratio,model_value\n"));
    }

    #[test]
    fn impossible_check_is_recorded_and_run_continues() {
        let text = WAVE
            .replace(
                "checks = [\"lc-separation\", \"levi-lb\", \"solve\", \"energy\", \"fit-growth\"]",
                "checks = [\"partition\", \"lc-separation\"]",
            )
            .replace("regularity = \"analytic\"", "regularity = \"ck\"\nk = 3");
        let sc = parse_scenario("inline", &text).unwrap();
        let outcome = run(std::slice::from_ref(&sc), &RunOptions::default()).unwrap();
        assert!(!outcome.all_pass());
        assert_eq!(outcome.failures.len(), 1);
        assert!(outcome.failures[0].contains("partition"), "{:?}", outcome.failures);
        let rep = &outcome.reports[0];
        assert_eq!(rep.checks.len(), 2);
        assert_eq!(rep.checks[0].id, "lc-separation");
        assert!(rep.checks[0].pass, "{}", rep.to_json());
        assert_eq!(rep.checks[1].id, "partition");
        assert!(!rep.checks[1].pass);
    }

    #[test]
    fn seed_override_changes_sampled_checks_only() {
        let text = WAVE.replace(
            "checks = [\"lc-separation\", \"levi-lb\", \"solve\", \"energy\", \"fit-growth\"]",
            "checks = [\"quasisym-props\", \"lc-separation\"]",
        );
        let sc = parse_scenario("inline", &text).unwrap();
        let base = run(std::slice::from_ref(&sc), &RunOptions::default()).unwrap();
        let reseeded = run(
            std::slice::from_ref(&sc),
            &RunOptions {
                seed: Some(99),
                ..RunOptions::default()
            },
        )
        .unwrap();
        let residual = |o: &RunOutcome| o.reports[0].checks[0].constants["coercivity_constant"].0;
        assert!(base.reports[0].checks[0].pass);
        assert!(reseeded.reports[0].checks[0].pass);
        assert_ne!(residual(&base), residual(&reseeded));
        assert_eq!(
            base.reports[0].checks[1].constants["m_min"].0,
            reseeded.reports[0].checks[1].constants["m_min"].0
        );
    }
}
