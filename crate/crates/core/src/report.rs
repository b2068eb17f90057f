//! Experiment reports: named inputs, computed values and checks against
//! targets, serialized as `key = value` text plus a JSON sibling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `|computed − target| ≤ tolerance`
    Within,
    /// `computed ≤ target + tolerance`
    AtMost,
    /// `computed ≥ target − tolerance`
    AtLeast,
}

/// One comparison of a computed value with a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub computed: f64,
    pub target: f64,
    pub relation: Relation,
    pub tolerance: f64,
    /// Where the target comes from: `closed-form`, `oracle`, `invariant`, `exact-count`.
    pub provenance: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, computed: f64, target: f64, relation: Relation, tolerance: f64, provenance: &str) -> Self {
        let pass = match relation {
            Relation::Within => (computed - target).abs() <= tolerance,
            Relation::AtMost => computed <= target + tolerance,
            Relation::AtLeast => computed >= target - tolerance,
        };
        Check { name: name.into(), computed, target, relation, tolerance, provenance: provenance.into(), pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub inputs: BTreeMap<String, serde_json::Value>,
    pub computed: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Headline tolerance of the experiment (individual checks carry their own).
    pub tolerance: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    pub notes: Vec<String>,
    /// Wall time. Not written to report files, which must be reproducible.
    #[serde(skip)]
    pub runtime_ms: u64,
}

impl ExperimentReport {
    pub fn new(name: &str, tolerance: f64) -> Self {
        ExperimentReport {
            name: name.into(),
            inputs: BTreeMap::new(),
            computed: BTreeMap::new(),
            checks: Vec::new(),
            tolerance,
            pass: true,
            seed: None,
            notes: Vec::new(),
            runtime_ms: 0,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.inputs.insert(key.into(), v);
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.computed.insert(key.into(), v);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn check(&mut self, check: Check) -> bool {
        let pass = check.pass;
        self.pass &= pass;
        self.checks.push(check);
        pass
    }

    pub fn within(&mut self, name: &str, computed: f64, target: f64, tol: f64, provenance: &str) -> bool {
        self.check(Check::new(name, computed, target, Relation::Within, tol, provenance))
    }

    pub fn at_most(&mut self, name: &str, computed: f64, bound: f64, provenance: &str) -> bool {
        self.check(Check::new(name, computed, bound, Relation::AtMost, 0.0, provenance))
    }

    pub fn at_least(&mut self, name: &str, computed: f64, bound: f64, provenance: &str) -> bool {
        self.check(Check::new(name, computed, bound, Relation::AtLeast, 0.0, provenance))
    }

    /// Exact integer match.
    pub fn count(&mut self, name: &str, computed: usize, target: usize, provenance: &str) -> bool {
        self.within(name, computed as f64, target as f64, 0.0, provenance)
    }

    /// A boolean property, recorded as 1 (holds) against target 1.
    pub fn holds(&mut self, name: &str, ok: bool, provenance: &str) -> bool {
        self.within(name, f64::from(u8::from(ok)), 1.0, 0.0, provenance)
    }

    pub fn finish(mut self, started: Instant) -> Self {
        self.pass = self.checks.iter().all(|c| c.pass);
        self.runtime_ms = started.elapsed().as_millis() as u64;
        self
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Line-oriented `key = value` rendering. Floats use the shortest
    /// representation that parses back to the same double.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[report]");
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "pass = {}", self.pass);
        let _ = writeln!(out, "tolerance = {:?}", self.tolerance);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed = {seed}");
        }
        let _ = writeln!(out, "\n[inputs]");
        for (k, v) in &self.inputs {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "\n[computed]");
        for (k, v) in &self.computed {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        for c in &self.checks {
            let _ = writeln!(out, "\n[check {}]", c.name);
            let _ = writeln!(out, "computed = {:?}", c.computed);
            let _ = writeln!(out, "target = {:?}", c.target);
            let _ = writeln!(out, "relation = {}", serde_json::to_value(c.relation).unwrap().as_str().unwrap_or(""));
            let _ = writeln!(out, "tolerance = {:?}", c.tolerance);
            let _ = writeln!(out, "provenance = {}", c.provenance);
            let _ = writeln!(out, "pass = {}", c.pass);
        }
        if !self.notes.is_empty() {
            let _ = writeln!(out, "\n[notes]");
            for (i, n) in self.notes.iter().enumerate() {
                let _ = writeln!(out, "note.{i} = {n}");
            }
        }
        out
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let failed: Vec<&str> = self.failed_checks().map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            format!("{}: PASS ({} checks, {} ms)", self.name, self.checks.len(), self.runtime_ms)
        } else {
            format!("{}: FAIL ({} of {} checks failed: {})", self.name, failed.len(), self.checks.len(), failed.join(", "))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Write `path` (text) and `path.json`, each atomically.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        crate::meshgen::write_atomic(path, self.to_text().as_bytes())?;
        let json = json_sibling(path);
        crate::meshgen::write_atomic(&json, self.to_json()?.as_bytes())?;
        Ok(json)
    }
}

pub fn json_sibling(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Write several reports into one text file (sections concatenated) and a
/// JSON array sibling.
pub fn write_all(reports: &[ExperimentReport], path: &Path) -> Result<PathBuf> {
    let text: Vec<String> = reports.iter().map(|r| r.to_text()).collect();
    crate::meshgen::write_atomic(path, text.join("\n").as_bytes())?;
    let json = json_sibling(path);
    crate::meshgen::write_atomic(&json, serde_json::to_string_pretty(reports)?.as_bytes())?;
    Ok(json)
}
