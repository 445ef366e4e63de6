//! Versioned file formats: game specs, solver results, rejection functions,
//! trained models and point sets.
//!
//! Every JSON document carries `"version": 1`; any other version is rejected
//! before the rest of the document is interpreted. Floats are written in
//! shortest round-trip form, so `parse(serialize(x)) == x` bit for bit.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::continuous::SccModel;
use crate::divergence::DivergenceKind;
use crate::error::{Error, Result};
use crate::game::{DualOutcome, GameStatus, HardOutcome, SolveOutcome, SparseDist};
use crate::model::{AdversaryConstraint, DualSpec, GameSpec, Pmf, RejectionFunction};

pub const FORMAT_VERSION: u64 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parses a versioned JSON document.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let found = value
        .get("version")
        .ok_or_else(|| Error::Parse("missing `version` field".into()))?
        .as_u64()
        .ok_or_else(|| Error::Parse("`version` must be a non-negative integer".into()))?;
    if found != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found,
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory serialization cannot fail");
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Reads and parses a versioned JSON file.
pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    from_json(&read_text(path.as_ref())?)
}

fn version() -> u64 {
    FORMAT_VERSION
}

/// Game input. `delta` drives the primal games, `delta_q` the dual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default = "version")]
    pub version: u64,
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub lambda: f64,
    pub divergence: DivergenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_q: Option<f64>,
}

impl SpecFile {
    pub fn new(p: Vec<f64>, delta: f64, lambda: f64, divergence: DivergenceKind) -> Self {
        Self {
            version: FORMAT_VERSION,
            p,
            delta: Some(delta),
            lambda,
            divergence,
            delta_q: None,
        }
    }

    pub fn pmf(&self) -> Result<Pmf> {
        Pmf::new(&self.p)
    }

    pub fn constraint(&self) -> Result<AdversaryConstraint> {
        AdversaryConstraint::new(self.pmf()?, self.lambda, self.divergence)
    }

    pub fn game_spec(&self) -> Result<GameSpec> {
        let delta = self
            .delta
            .ok_or_else(|| Error::InvalidParameter("spec has no `delta`".into()))?;
        GameSpec::new(self.pmf()?, delta, self.lambda, self.divergence)
    }

    pub fn dual_spec(&self) -> Result<DualSpec> {
        let delta_q = self
            .delta_q
            .ok_or_else(|| Error::InvalidParameter("spec has no `delta_q`".into()))?;
        DualSpec::new(self.pmf()?, delta_q, self.lambda, self.divergence)
    }
}

/// Per-event rejection rates over the original index space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RejectionFile {
    #[serde(default = "version")]
    pub version: u64,
    pub r: Vec<f64>,
}

impl RejectionFile {
    pub fn new(r: &RejectionFunction) -> Self {
        Self {
            version: FORMAT_VERSION,
            r: r.rates().to_vec(),
        }
    }

    pub fn rejection(&self) -> Result<RejectionFunction> {
        RejectionFunction::soft(self.r.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Soft,
    Hard,
    Dual,
}

/// Flattened solver output shared by the soft, hard and dual games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub version: u64,
    pub tool_version: String,
    pub solver: SolverKind,
    pub status: GameStatus,
    /// Rate per level set, most likely set first. Empty for the hard game.
    pub r_levels: Vec<f64>,
    /// Rate per original event.
    pub r_events: Vec<f64>,
    /// Worst-case rejection rate (soft and hard games).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Minimal type I error (dual game).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type2: Option<f64>,
    /// Adversary support as `(event, probability)` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<SparseDist>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vulnerable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl ResultFile {
    fn blank(solver: SolverKind, status: GameStatus) -> Self {
        Self {
            version: FORMAT_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            solver,
            status,
            r_levels: Vec::new(),
            r_events: Vec::new(),
            z: None,
            z_i: None,
            type2: None,
            witness: None,
            vulnerable: None,
            rejected: None,
            rejected_mass: None,
            seed: None,
            timing_ms: None,
        }
    }

    pub fn from_soft(o: &SolveOutcome) -> Self {
        Self {
            r_levels: o.r_levels.clone(),
            r_events: o.r_events.rates().to_vec(),
            z: o.z,
            type2: o.type2,
            witness: o.witness_q.clone(),
            vulnerable: Some(o.vulnerable),
            ..Self::blank(SolverKind::Soft, o.status)
        }
    }

    pub fn from_hard(o: &HardOutcome) -> Self {
        Self {
            r_events: o.r.rates().to_vec(),
            z: o.value,
            type2: o.type2,
            witness: o.witness_q.clone(),
            rejected: Some(o.rejected.clone()),
            rejected_mass: Some(o.rejected_mass),
            ..Self::blank(SolverKind::Hard, o.status)
        }
    }

    pub fn from_dual(o: &DualOutcome) -> Self {
        Self {
            r_levels: o.r_levels.clone(),
            r_events: o.r_events.rates().to_vec(),
            z_i: o.z_i,
            witness: o.witness_q.clone(),
            vulnerable: Some(o.vulnerable),
            ..Self::blank(SolverKind::Dual, o.status)
        }
    }
}

/// Trained continuous learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u64,
    pub tool_version: String,
    pub model: SccModel,
}

impl ModelFile {
    pub fn new(model: SccModel) -> Self {
        Self {
            version: FORMAT_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            model,
        }
    }
}

/// Row-major point set; every row has the same dimension.
pub type Points = Vec<Vec<f64>>;

fn check_rows(points: &Points) -> Result<()> {
    let Some(first) = points.first() else {
        return Err(Error::EmptySample);
    };
    let d = first.len();
    if d == 0 {
        return Err(Error::Parse("points have zero coordinates".into()));
    }
    for (i, row) in points.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Parse(format!(
                "row {i} has {} coordinates, expected {d}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parse(format!("row {i}, column {j} is not finite")));
        }
    }
    Ok(())
}

/// Comma-separated points, one per line. A first line that does not parse as
/// numbers is treated as a header.
pub fn parse_points_csv(text: &str) -> Result<Points> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let row: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match row {
            Ok(row) => points.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("record {}: {e}", i + 1))),
        }
    }
    check_rows(&points)?;
    Ok(points)
}

/// One JSON array of numbers per non-empty line.
pub fn parse_points_jsonl(text: &str) -> Result<Points> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> =
            serde_json::from_str(line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        points.push(row);
    }
    check_rows(&points)?;
    Ok(points)
}

/// Reads points, choosing JSON lines for `.jsonl` files and CSV otherwise.
pub fn read_points(path: impl AsRef<Path>) -> Result<Points> {
    let path = path.as_ref();
    let text = read_text(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => parse_points_jsonl(&text),
        _ => parse_points_csv(&text),
    }
}

pub fn points_to_csv(points: &Points) -> String {
    let mut out = String::new();
    for row in points {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip_and_version_gate() {
        let spec = SpecFile::new(vec![0.1, 0.2, 0.7], 0.1, 1.5, DivergenceKind::Kl2);
        let text = to_json(&spec);
        assert_eq!(from_json::<SpecFile>(&text).unwrap(), spec);
        let bumped = text.replace("\"version\": 1", "\"version\": 2");
        assert_eq!(
            from_json::<SpecFile>(&bumped),
            Err(Error::UnsupportedVersion {
                found: 2,
                expected: 1
            })
        );
        assert!(matches!(
            from_json::<SpecFile>("{\"p\": [1.0]}"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn csv_header_and_ragged_rows() {
        let pts = parse_points_csv("x,y\n1,2\n3.5, -4\n").unwrap();
        assert_eq!(pts, vec![vec![1.0, 2.0], vec![3.5, -4.0]]);
        assert!(parse_points_csv("1,2\n3\n").is_err());
        assert!(parse_points_csv("x\n").is_err());
        assert!(parse_points_csv("1\nfoo\n").is_err());
    }

    #[test]
    fn jsonl_points() {
        let pts = parse_points_jsonl("[0.5]\n\n[1e-3]\n").unwrap();
        assert_eq!(pts, vec![vec![0.5], vec![1e-3]]);
        assert_eq!(parse_points_csv(&points_to_csv(&pts)).unwrap(), pts);
    }
}
