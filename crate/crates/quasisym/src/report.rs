//! Deterministic JSON/CSV emission: stable key order, round-trip-exact float
//! text, and explicit encoding of non-finite values.

use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Real number that serialises finite values as JSON numbers and non-finite
/// values as the strings `"inf"`, `"-inf"`, `"nan"` (JSON has no encoding for
/// them and silently nulling them would hide diagnostic content).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_real(&self.0, s)
    }
}

/// `serialize_with` helper used on raw `f64` fields; see [`Real`].
pub fn ser_real<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// 17-significant-digit scientific text, round-trip exact for binary64.
pub fn fmt_g17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// One executed check in a scenario report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub id: String,
    pub pass: bool,
    pub constants: BTreeMap<String, Real>,
    pub samples: usize,
    pub worst_case: BTreeMap<String, Real>,
}

/// Growth-law summary attached to a scenario report when a fit ran.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthSummary {
    pub kappa: Real,
    pub c_stretch: Real,
    pub theta: Real,
    pub classification: String,
}

/// Full per-scenario report.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub checks: Vec<CheckEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthSummary>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Stable pretty JSON with a trailing newline; identical inputs yield
    /// byte-identical text.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialisation");
        s.push('\n');
        s
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<std::path::PathBuf> {
        let path = dir.join(format!("{}.json", self.scenario));
        let mut f = std::fs::File::create(&path)?;
        f.write_all(self.to_json().as_bytes())?;
        Ok(path)
    }
}

/// Write CSV rows with a header; every numeric cell goes through [`fmt_g17`].
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_g17(*v)).collect();
        writeln!(f, "{}", cells.join(","))?;
    }
    Ok(())
}
