//! The acceptance table: nine criteria, each a bundle of experiment
//! reports plus a wall-clock budget.

use std::f64::consts::E;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::disk_oracle;
use crate::experiments::{self, ConformalTestFunction, JacobiDomain, TruncationFamily};
use crate::fem;
use crate::meshgen;
use crate::report::ExperimentReport;
use crate::solutions::SolutionKind;
use crate::spectra::{self, DEFAULT_ZERO_TOL};
use crate::{Error, Result};

/// Seed of the random trace-inequality fields.
pub const TRACE_SEED: u64 = 20_240_601;

pub const CRITERIA: [(u8, &str, u64); 9] = [
    (1, "index of Q0 on the disk is 1", 10),
    (2, "index of the disk complement is 1, of the plane 0", 60),
    (3, "index of the hairpin is 1", 60),
    (4, "conformal equivalence", 10),
    (5, "total curvature and cutoff bound", 5),
    (6, "first eigenfunction sign and eigenvalue monotonicity", 30),
    (7, "FEM convergence against the Bessel root", 60),
    (8, "trace inequality", 10),
    (9, "Jacobi field positivity", 20),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub elapsed_ms: u64,
    pub limit_ms: u64,
    pub reports: Vec<ExperimentReport>,
    /// Set when the criterion could not be evaluated at all.
    pub error: Option<String>,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!(
            "criterion {}: {status}  {}  ({:.2} s of {:.0} s)",
            self.id,
            self.title,
            self.elapsed_ms as f64 / 1000.0,
            self.limit_ms as f64 / 1000.0
        );
        if let Some(e) = &self.error {
            s.push_str(&format!("  error: {e}"));
        }
        for r in self.reports.iter().filter(|r| !r.pass) {
            s.push_str(&format!("\n    {}", r.summary()));
        }
        s
    }
}

/// Nested truncation lists on which the first eigenvalue must strictly decrease.
pub fn nested_truncations(kind: SolutionKind) -> Vec<f64> {
    match kind {
        SolutionKind::Plane => vec![1.0, 2.0, 3.0, 4.0],
        SolutionKind::DiskComplement => vec![1.5, 2.0, 2.5, 3.0, 4.0],
        SolutionKind::Hairpin => vec![0.5, 1.0, 2.0, 3.0, 4.0],
    }
}

fn criterion_1() -> Result<Vec<ExperimentReport>> {
    let started = Instant::now();
    let mut r = ExperimentReport::new("disk_index", 0.0);
    let levels = [8usize, 16, 32];
    r.input("n_rings", levels);
    for n in levels {
        let forms = fem::assemble(&meshgen::disk_mesh(n)?)?;
        let inertia = spectra::morse_index(&forms, DEFAULT_ZERO_TOL)?;
        r.count(&format!("fem_index[{n}]"), inertia.n_neg, 1, "exact-count");
    }
    let neg = disk_oracle::negative_eigenvalues_q0()?;
    if let Some(first) = neg.first() {
        r.value("oracle_lambda1", first.lambda);
    }
    r.count("oracle_negative_eigenvalues", neg.len(), 1, "exact-count");
    Ok(vec![r.finish(started)])
}

fn criterion_2() -> Result<Vec<ExperimentReport>> {
    let disk = TruncationFamily::default_for(SolutionKind::DiskComplement);
    let plane = TruncationFamily::default_for(SolutionKind::Plane);
    Ok(vec![
        experiments::index_vs_truncation(&disk, &[2.0, 2.5, E, 3.0, 4.0, 8.0], DEFAULT_ZERO_TOL)?,
        experiments::index_vs_truncation(&plane, &[1.0, 2.0, 4.0, 8.0], DEFAULT_ZERO_TOL)?,
        experiments::critical_radius_bracket(64, 128, 2.0, 3.5, 0.02)?,
    ])
}

fn criterion_3() -> Result<Vec<ExperimentReport>> {
    let hairpin = TruncationFamily::default_for(SolutionKind::Hairpin);
    Ok(vec![experiments::index_vs_truncation(&hairpin, &[0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0], DEFAULT_ZERO_TOL)?])
}

fn criterion_4() -> Result<Vec<ExperimentReport>> {
    let tests: Vec<ConformalTestFunction> = experiments::default_test_functions();
    Ok(vec![
        experiments::conformal_equivalence(SolutionKind::DiskComplement, &tests)?,
        experiments::conformal_equivalence(SolutionKind::Hairpin, &tests)?,
    ])
}

fn criterion_5() -> Result<Vec<ExperimentReport>> {
    let radii = [10.0, 100.0, 1000.0];
    Ok(vec![
        experiments::curvature_cutoff_bound(SolutionKind::DiskComplement, 1.0, &radii)?,
        experiments::curvature_cutoff_bound(SolutionKind::Hairpin, 2.0, &radii)?,
    ])
}

fn criterion_6() -> Result<Vec<ExperimentReport>> {
    let mut out = Vec::new();
    for kind in SolutionKind::ALL {
        let list = nested_truncations(kind);
        let mut r = experiments::index_vs_truncation(&TruncationFamily::default_for(kind), &list, DEFAULT_ZERO_TOL)?;
        let strict = r.computed["lambda1_strict_decreases"] as usize;
        r.count("lambda1_strictly_decreasing", strict, list.len() - 1, "invariant");
        let unresolved: f64 = r.computed.iter().filter(|(k, _)| k.starts_with("unresolved_sign_entries")).map(|(_, v)| v).sum();
        r.count("every_sign_resolved", unresolved as usize, 0, "invariant");
        r.pass = r.checks.iter().all(|c| c.pass);
        out.push(r);
    }
    let started = Instant::now();
    let mut r = ExperimentReport::new("disk_first_eigenfunction_sign", 0.0);
    for n in [8usize, 16] {
        let forms = fem::assemble(&meshgen::disk_mesh(n)?)?;
        let first = spectra::first_eigenpair(&forms)?;
        r.holds(&format!("sign_definite[{n}]"), spectra::is_sign_definite(&first.vector), "invariant");
    }
    out.push(r.finish(started));
    Ok(out)
}

fn criterion_7() -> Result<Vec<ExperimentReport>> {
    Ok(vec![experiments::fem_convergence(&[8, 16, 32])?])
}

fn criterion_8(seed: u64) -> Result<Vec<ExperimentReport>> {
    let meshes = [
        ("annulus", meshgen::annulus_mesh(3.0, 16, 64)?),
        ("hairpin", meshgen::hairpin_mesh(3.0, 48, 16)?),
        ("plane", meshgen::plane_mesh(2.0, 16)?),
    ];
    let mut out = Vec::new();
    for (name, mesh) in &meshes {
        let mut r = experiments::trace_inequality(mesh, 100, seed)?;
        r.name = format!("trace_inequality/{name}");
        out.push(r);
    }
    Ok(out)
}

fn criterion_9() -> Result<Vec<ExperimentReport>> {
    let stable = experiments::jacobi_field_positivity(JacobiDomain::HairpinCollar { s1: 1.5, s2: 4.0, n_s: 20, n_t: 16 })?;
    let started = Instant::now();
    let mut core = ExperimentReport::new("jacobi_field_positivity/hairpin-core", 0.0);
    let outcome = experiments::jacobi_field_positivity(JacobiDomain::HairpinCollar { s1: 0.0, s2: 4.0, n_s: 32, n_t: 16 });
    match &outcome {
        Err(Error::StabilityViolation(msg)) => core.note(msg.clone()),
        Err(e) => return Err(Error::Numerical(format!("core collar failed with an unexpected error: {e}"))),
        Ok(_) => {}
    }
    core.holds("stability_violation_reported", matches!(outcome, Err(Error::StabilityViolation(_))), "invariant");
    let annulus = experiments::jacobi_field_positivity(JacobiDomain::Annulus { inner: 2.0, outer: 8.0, n_r: 48, n_theta: 64 })?;
    Ok(vec![stable, core.finish(started), annulus])
}

/// Run one criterion, timing it against its budget.
pub fn run_criterion(id: u8) -> Result<CriterionOutcome> {
    run_criterion_seeded(id, TRACE_SEED)
}

/// As [`run_criterion`], with the seed of the random trace fields given.
pub fn run_criterion_seeded(id: u8, seed: u64) -> Result<CriterionOutcome> {
    let &(_, title, limit_s) =
        CRITERIA.iter().find(|c| c.0 == id).ok_or_else(|| Error::Argument(format!("no acceptance criterion {id}")))?;
    let started = Instant::now();
    let result = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(seed),
        _ => criterion_9(),
    };
    let elapsed = started.elapsed();
    let limit = Duration::from_secs(limit_s);
    let (reports, error) = match result {
        Ok(r) => (r, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let pass = error.is_none() && reports.iter().all(|r| r.pass) && elapsed < limit;
    Ok(CriterionOutcome {
        id,
        title: title.into(),
        pass,
        elapsed_ms: elapsed.as_millis() as u64,
        limit_ms: limit.as_millis() as u64,
        reports,
        error,
    })
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|c| run_criterion(c.0).expect("criterion ids are valid")).collect()
}
