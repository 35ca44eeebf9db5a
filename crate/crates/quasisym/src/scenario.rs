//! Scenario catalogue: TOML-based configuration files describing a problem,
//! its spectral data recipe, the sweep grids, and the enabled checks.
//! Unknown keys are hard errors, and every semantic complaint carries the
//! line it came from so catalogue files stay honest.

use crate::coeff;
use crate::gevrey::{self, GevreyError, Phase};
use crate::spectrum::{ProblemSpec, Regularity};
use num_complex::Complex64;
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

/// Check identifiers the runner knows how to execute.
pub const KNOWN_CHECKS: [&str; 13] = [
    "quasisym-props",
    "near-diagonal",
    "commutator",
    "difference-identity",
    "lc-separation",
    "lc-equivalence",
    "levi-lb",
    "relaxed-levi",
    "solve",
    "energy",
    "fit-growth",
    "decay-fit",
    "partition",
];

/// Checks enabled when a scenario does not list its own.
pub const DEFAULT_CHECKS: [&str; 9] = [
    "quasisym-props",
    "near-diagonal",
    "commutator",
    "difference-identity",
    "lc-separation",
    "levi-lb",
    "solve",
    "energy",
    "fit-growth",
];

#[derive(Debug, Error)]
#[error("{path}:{line}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub line: usize,
    pub message: String,
}

/// How the per-frequency initial data vector is produced.
#[derive(Debug, Clone)]
pub enum DataRecipe {
    /// Decaying profile on the first component, zero on the rest.
    Gevrey { s: f64, delta: f64, phase: Phase },
    /// Growing truncated profile on the first component.
    Ultra { s: f64, delta: f64, xi_max: f64 },
    /// Fixed complex vector used at every frequency.
    Components(Vec<Complex64>),
}

impl DataRecipe {
    /// Data vector (one entry per derivative order) at frequency magnitude
    /// `xi_abs`.
    pub fn g_hat(&self, m: usize, xi_abs: f64) -> Result<Vec<Complex64>, GevreyError> {
        match self {
            DataRecipe::Components(v) => {
                assert_eq!(v.len(), m);
                Ok(v.clone())
            }
            DataRecipe::Gevrey { s, delta, phase } => {
                let data = gevrey::make_gevrey_data_with(*s, *delta, &[xi_abs], *phase);
                let mut g = vec![Complex64::new(0.0, 0.0); m];
                g[0] = data.values[0];
                Ok(g)
            }
            DataRecipe::Ultra { s, delta, xi_max } => {
                let data = gevrey::make_ultra_data(*s, *delta, &[xi_abs], *xi_max)?;
                let mut g = vec![Complex64::new(0.0, 0.0); m];
                g[0] = data.values[0];
                Ok(g)
            }
        }
    }
}

/// Sweep grid descriptors.
#[derive(Debug, Clone)]
pub struct Grids {
    /// Output samples per trajectory and time resolution of grid sweeps.
    pub t_count: usize,
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub xi_count: usize,
    /// Unit direction multiplied by the magnitudes; length `n`.
    pub direction: Vec<f64>,
}

impl Grids {
    /// Log-spaced positive frequency magnitudes.
    pub fn xi_magnitudes(&self) -> Vec<f64> {
        gevrey::log_grid(self.xi_lo, self.xi_hi, self.xi_count)
    }

    /// Frequency vector of magnitude `v` along the configured direction.
    pub fn xi_vector(&self, v: f64) -> Vec<f64> {
        self.direction.iter().map(|d| d * v).collect()
    }
}

/// One fully validated catalogue entry.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub spec: ProblemSpec,
    pub data: DataRecipe,
    pub grids: Grids,
    pub checks: Vec<String>,
    /// Integrator tolerance.
    pub tol: f64,
    /// Level for the relaxed lower-order check, when enabled.
    pub relaxed_level: u32,
    /// Cap on time-partition segments.
    pub max_segments: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    seed: Option<u64>,
    checks: Option<Vec<String>>,
    problem: RawProblem,
    coefficients: Option<BTreeMap<String, String>>,
    data: Option<RawData>,
    grids: Option<RawGrids>,
    solver: Option<RawSolver>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    m: usize,
    n: usize,
    t_horizon: f64,
    regularity: String,
    k: Option<u32>,
    low_freq_cutoff: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    kind: String,
    s: Option<f64>,
    delta: Option<f64>,
    phase: Option<String>,
    phase_seed: Option<u64>,
    xi_max: Option<f64>,
    components: Option<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrids {
    t_count: Option<usize>,
    xi_lo: Option<f64>,
    xi_hi: Option<f64>,
    xi_count: Option<usize>,
    direction: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    relaxed_level: Option<u32>,
    max_segments: Option<usize>,
}

fn line_of(text: &str, needle: &str) -> usize {
    text.lines()
        .position(|l| l.contains(needle))
        .map(|i| i + 1)
        .unwrap_or(0)
}

fn fail(path: &str, line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// `a_<i>_<g1>[_<g2>...]` -> `(i, gamma)`: `i` is the coefficient order
/// index (the power of the frequency scale it carries), the remaining parts
/// the multi-index, one entry per space dimension.
fn parse_coeff_key(key: &str, m: usize, n: usize) -> Result<(usize, Vec<u32>), String> {
    let parts: Vec<&str> = key.split('_').collect();
    if parts.len() != n + 2 || parts[0] != "a" {
        return Err(format!(
            "coefficient key `{key}` must have the form a_<order>_<g1>{} with {n} index part(s)",
            if n > 1 { "_<g2>..." } else { "" }
        ));
    }
    let order: usize = parts[1]
        .parse()
        .map_err(|_| format!("coefficient key `{key}`: `{}` is not an order", parts[1]))?;
    let mut gamma = Vec::with_capacity(n);
    for p in &parts[2..] {
        let g: u32 = p
            .parse()
            .map_err(|_| format!("coefficient key `{key}`: `{p}` is not a power"))?;
        gamma.push(g);
    }
    if order == 0 || order > m {
        return Err(format!(
            "coefficient key `{key}`: order {order} outside 1..={m}"
        ));
    }
    let total: u32 = gamma.iter().sum();
    if total as usize > order {
        return Err(format!(
            "coefficient key `{key}`: multi-index weight {total} exceeds the order {order}"
        ));
    }
    Ok((order, gamma))
}

fn parse_regularity(reg: &str, k: Option<u32>) -> Result<Regularity, String> {
    match reg {
        "analytic" => {
            if k.is_some() {
                return Err("`k` is only meaningful with regularity \"smooth\" or \"ck\"".into());
            }
            Ok(Regularity::Analytic)
        }
        "smooth" => Ok(Regularity::Smooth {
            k: k.ok_or("regularity \"smooth\" needs the differentiability budget `k`")?,
        }),
        "ck" => Ok(Regularity::FinitelyDifferentiable(
            k.ok_or("regularity \"ck\" needs the differentiability budget `k`")?,
        )),
        other => Err(format!(
            "unknown regularity `{other}` (expected \"analytic\", \"smooth\", or \"ck\")"
        )),
    }
}

/// Parse one scenario from configuration text; `path` labels errors only.
pub fn parse_scenario(path: &str, text: &str) -> Result<Scenario, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|sp| text[..sp.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        fail(path, line, e.message())
    })?;

    let regularity = parse_regularity(&raw.problem.regularity, raw.problem.k)
        .map_err(|m| fail(path, line_of(text, "regularity"), m))?;
    let mut spec = ProblemSpec::new(
        raw.problem.m,
        raw.problem.n,
        raw.problem.t_horizon,
        regularity,
    );
    if let Some(cut) = raw.problem.low_freq_cutoff {
        spec.low_freq_cutoff = cut;
    }

    for (key, src) in raw.coefficients.unwrap_or_default() {
        let at = line_of(text, &key);
        let (order, gamma) =
            parse_coeff_key(&key, raw.problem.m, raw.problem.n).map_err(|m| fail(path, at, m))?;
        let expr = coeff::parse(&src)
            .map_err(|e| fail(path, at, format!("coefficient `{key}`: {e}")))?;
        let j = raw.problem.m - order;
        let weight: u32 = gamma.iter().sum();
        if weight as usize == order {
            spec.set_principal(j, gamma, expr);
        } else {
            spec.set_lower(j, gamma, expr);
        }
    }
    spec.validate()
        .map_err(|e| fail(path, line_of(text, "[problem]"), e.to_string()))?;

    let data = match raw.data {
        None => {
            let mut v = vec![Complex64::new(0.0, 0.0); raw.problem.m];
            v[0] = Complex64::new(1.0, 0.0);
            DataRecipe::Components(v)
        }
        Some(d) => {
            let at = line_of(text, "kind");
            let need = |field: Option<f64>, name: &str| {
                field.ok_or_else(|| {
                    fail(path, at, format!("data kind `{}` needs `{name}`", d.kind))
                })
            };
            match d.kind.as_str() {
                "gevrey" => {
                    let phase = match d.phase.as_deref() {
                        None | Some("constant") => Phase::Constant,
                        Some("random") => Phase::RandomHermitian {
                            seed: d.phase_seed.unwrap_or(0),
                        },
                        Some(other) => {
                            return Err(fail(path, at, format!("unknown phase `{other}`")))
                        }
                    };
                    DataRecipe::Gevrey {
                        s: need(d.s, "s")?,
                        delta: need(d.delta, "delta")?,
                        phase,
                    }
                }
                "ultra" => DataRecipe::Ultra {
                    s: need(d.s, "s")?,
                    delta: need(d.delta, "delta")?,
                    xi_max: need(d.xi_max, "xi_max")?,
                },
                "components" => {
                    let comps = d.components.ok_or_else(|| {
                        fail(path, at, "data kind `components` needs `components`")
                    })?;
                    if comps.len() != raw.problem.m {
                        return Err(fail(
                            path,
                            at,
                            format!(
                                "expected {} data components, got {}",
                                raw.problem.m,
                                comps.len()
                            ),
                        ));
                    }
                    DataRecipe::Components(
                        comps.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
                    )
                }
                other => {
                    return Err(fail(path, at, format!("unknown data kind `{other}`")));
                }
            }
        }
    };

    let g = raw.grids.unwrap_or(RawGrids {
        t_count: None,
        xi_lo: None,
        xi_hi: None,
        xi_count: None,
        direction: None,
    });
    let direction = match g.direction {
        None => {
            let mut d = vec![0.0; raw.problem.n];
            d[0] = 1.0;
            d
        }
        Some(d) => {
            if d.len() != raw.problem.n {
                return Err(fail(
                    path,
                    line_of(text, "direction"),
                    format!("direction needs {} entries", raw.problem.n),
                ));
            }
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(fail(path, line_of(text, "direction"), "direction is zero"));
            }
            d.iter().map(|x| x / norm).collect()
        }
    };
    let grids = Grids {
        t_count: g.t_count.unwrap_or(65).max(2),
        xi_lo: g.xi_lo.unwrap_or(64.0),
        xi_hi: g.xi_hi.unwrap_or(4096.0),
        xi_count: g.xi_count.unwrap_or(13).max(2),
        direction,
    };
    if !(grids.xi_lo > 0.0 && grids.xi_hi > grids.xi_lo) {
        return Err(fail(
            path,
            line_of(text, "xi_"),
            "frequency range must satisfy 0 < xi_lo < xi_hi",
        ));
    }

    let checks: Vec<String> = match raw.checks {
        None => DEFAULT_CHECKS.iter().map(|s| s.to_string()).collect(),
        Some(list) => {
            for c in &list {
                if !KNOWN_CHECKS.contains(&c.as_str()) {
                    return Err(fail(
                        path,
                        line_of(text, c),
                        format!("unknown check id `{c}`"),
                    ));
                }
            }
            list
        }
    };

    let solver = raw.solver.unwrap_or(RawSolver {
        tol: None,
        relaxed_level: None,
        max_segments: None,
    });
    Ok(Scenario {
        name: raw.name,
        seed: raw.seed.unwrap_or(0),
        spec,
        data,
        grids,
        checks,
        tol: solver.tol.unwrap_or(1e-8),
        relaxed_level: solver.relaxed_level.unwrap_or(0),
        max_segments: solver.max_segments.unwrap_or(64),
    })
}

/// Load scenarios from a configuration file, or from every `.cfg` file in a
/// directory (sorted by file name).  Scenario names must be unique.
pub fn load_config(path: &Path) -> Result<Vec<Scenario>, ConfigError> {
    let label = path.display().to_string();
    let mut files = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| fail(&label, 0, e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
            .collect();
        entries.sort();
        files.extend(entries);
    } else {
        files.push(path.to_path_buf());
    }
    let mut scenarios = Vec::new();
    let mut names = BTreeSet::new();
    for file in files {
        let flabel = file.display().to_string();
        let text =
            std::fs::read_to_string(&file).map_err(|e| fail(&flabel, 0, e.to_string()))?;
        let sc = parse_scenario(&flabel, &text)?;
        if !names.insert(sc.name.clone()) {
            return Err(fail(
                &flabel,
                line_of(&text, "name"),
                format!("duplicate scenario name `{}`", sc.name),
            ));
        }
        scenarios.push(sc);
    }
    Ok(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientExpr;

    const EXAMPLE: &str = r#"
name = "wave-family"
seed = 7

[problem]
m = 2
n = 1
t_horizon = 1.0
regularity = "analytic"

[coefficients]
a_2_2 = "-t^2"
a_2_1 = "t/2"
"#;

    #[test]
    fn minimal_scenario_loads() {
        let sc = parse_scenario("inline", EXAMPLE).unwrap();
        assert_eq!(sc.name, "wave-family");
        assert_eq!(sc.seed, 7);
        assert_eq!(sc.spec.m, 2);
        assert!(sc.spec.principal.contains_key(&(0, vec![2])));
        assert!(sc.spec.lower.contains_key(&(0, vec![1])));
        assert_eq!(sc.spec.regularity, Regularity::Analytic);
        assert_eq!(sc.tol, 1e-8);
        assert_eq!(sc.grids.xi_count, 13);
        assert_eq!(sc.grids.direction, vec![1.0]);
        assert!(matches!(sc.data, DataRecipe::Components(ref v) if v.len() == 2));
        assert_eq!(sc.checks.len(), DEFAULT_CHECKS.len());
    }

    #[test]
    fn empty_and_unknown_keys_rejected() {
        assert!(parse_scenario("inline", "").is_err());
        let with_extra = format!("mystery = 3\n{EXAMPLE}");
        let err = parse_scenario("inline", &with_extra).unwrap_err();
        assert!(err.message.contains("mystery"), "{err}");
        assert!(err.line > 0);
    }

    #[test]
    fn coefficient_key_shapes_enforced() {
        let bad_weight = EXAMPLE.replace("a_2_1", "a_1_2");
        let err = parse_scenario("inline", &bad_weight).unwrap_err();
        assert!(err.message.contains("exceeds the order"), "{err}");

        let bad_parse = EXAMPLE.replace("\"t/2\"", "\"t +\"");
        assert!(parse_scenario("inline", &bad_parse).is_err());

        let two_d = r#"
name = "plane"
[problem]
m = 2
n = 2
t_horizon = 1.0
regularity = "analytic"
[coefficients]
a_2_1_1 = "-1"
"#;
        let sc = parse_scenario("inline", two_d).unwrap();
        assert!(sc.spec.principal.contains_key(&(0, vec![1, 1])));
        assert_eq!(sc.grids.direction, vec![1.0, 0.0]);
    }

    #[test]
    fn regularity_forms() {
        let ck = EXAMPLE.replace("\"analytic\"", "\"ck\"\nk = 2");
        let sc = parse_scenario("inline", &ck).unwrap();
        assert_eq!(sc.spec.regularity, Regularity::FinitelyDifferentiable(2));

        let smooth_missing = EXAMPLE.replace("\"analytic\"", "\"smooth\"");
        let err = parse_scenario("inline", &smooth_missing).unwrap_err();
        assert!(err.message.contains('k'), "{err}");

        let smooth = EXAMPLE.replace("\"analytic\"", "\"smooth\"\nk = 6");
        assert_eq!(
            parse_scenario("inline", &smooth).unwrap().spec.regularity,
            Regularity::Smooth { k: 6 }
        );
    }

    #[test]
    fn data_recipes_parse() {
        let gevrey = format!(
            "{EXAMPLE}\n[data]\nkind = \"gevrey\"\ns = 1.5\ndelta = 1.0\nphase = \"random\"\nphase_seed = 3\n"
        );
        let sc = parse_scenario("inline", &gevrey).unwrap();
        let g = sc.data.g_hat(2, 8.0).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g[0].norm() > 0.0 && g[1].norm() == 0.0);

        let comps = format!(
            "{EXAMPLE}\n[data]\nkind = \"components\"\ncomponents = [[1.0, 0.0], [0.5, -0.5]]\n"
        );
        let sc2 = parse_scenario("inline", &comps).unwrap();
        match &sc2.data {
            DataRecipe::Components(v) => assert_eq!(v[1], Complex64::new(0.5, -0.5)),
            other => panic!("unexpected recipe {other:?}"),
        }

        let wrong_len = format!("{EXAMPLE}\n[data]\nkind = \"components\"\ncomponents = [[1.0, 0.0]]\n");
        assert!(parse_scenario("inline", &wrong_len).is_err());
    }

    #[test]
    fn check_list_validated() {
        let good = format!("checks = [\"levi-lb\", \"solve\"]\n{EXAMPLE}");
        assert_eq!(
            parse_scenario("inline", &good).unwrap().checks,
            vec!["levi-lb", "solve"]
        );
        let bad = format!("checks = [\"no-such-check\"]\n{EXAMPLE}");
        let err = parse_scenario("inline", &bad).unwrap_err();
        assert!(err.message.contains("no-such-check"), "{err}");
    }

    #[test]
    fn directory_loading_and_name_uniqueness() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.cfg"), EXAMPLE).unwrap();
        std::fs::write(
            dir.path().join("b.cfg"),
            EXAMPLE.replace("wave-family", "second"),
        )
        .unwrap();
        std::fs::write(dir.path().join("ignored.txt"), "not a config").unwrap();
        let list = load_config(dir.path()).unwrap();
        assert_eq!(list.len(), 2);
        assert_eq!(list[0].name, "wave-family");
        assert_eq!(list[1].name, "second");

        std::fs::write(dir.path().join("c.cfg"), EXAMPLE).unwrap();
        let err = load_config(dir.path()).unwrap_err();
        assert!(err.message.contains("duplicate"), "{err}");
    }

    #[test]
    fn coefficients_survive_round_trip() {
        let sc = parse_scenario("inline", EXAMPLE).unwrap();
        let expr = &sc.spec.principal[&(0, vec![2])];
        let printed = coeff::print(expr);
        let back = coeff::parse(&printed).unwrap();
        assert_eq!(*expr, back);
        assert!(matches!(back, CoefficientExpr::Neg(_)));
    }
}
