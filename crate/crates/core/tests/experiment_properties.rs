use fbindex::experiments::{self, BaseFunction, ConformalTestFunction, JacobiDomain, TruncationFamily};
use fbindex::report::{json_sibling, ExperimentReport};
use fbindex::{meshgen, Error, SolutionKind};
use proptest::prelude::*;

#[test]
fn stored_report_reproduces_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curvature.txt");
    let first = experiments::curvature_cutoff_bound(SolutionKind::Hairpin, 2.0, &[10.0, 100.0]).unwrap();
    first.write(&path).unwrap();
    let stored = ExperimentReport::from_json(&std::fs::read_to_string(json_sibling(&path)).unwrap()).unwrap();
    let rho = stored.inputs["rho"].as_f64().unwrap();
    let radii: Vec<f64> = serde_json::from_value(stored.inputs["radii"].clone()).unwrap();
    let rerun = experiments::curvature_cutoff_bound(SolutionKind::Hairpin, rho, &radii).unwrap();
    assert_eq!(stored.computed, rerun.computed);
    for (k, v) in &stored.computed {
        assert_eq!(v.to_bits(), rerun.computed[k].to_bits(), "{k}");
    }
    assert_eq!(stored.checks, rerun.checks);
}

#[test]
fn hairpin_cutoff_example() {
    let r = experiments::curvature_cutoff_bound(SolutionKind::Hairpin, 2.0, &[100.0]).unwrap();
    let lhs = r.computed["curvature_integral[100.000000]"];
    assert!(lhs <= 3.0 * std::f64::consts::PI + 2.0 * std::f64::consts::PI / 100f64.ln());
    assert!(lhs > 0.0);
    // the disk complement's free boundary lies inside B_{2ρ} for ρ > 1/2
    let d = experiments::curvature_cutoff_bound(SolutionKind::DiskComplement, 0.75, &[10.0]).unwrap();
    assert_eq!(d.computed["curvature_integral[10.000000]"], 0.0);
}

#[test]
fn every_truncation_run_checks_sign_and_monotonicity() {
    let family = TruncationFamily::default_for(SolutionKind::Hairpin);
    let r = experiments::index_vs_truncation(&family, &[1.0, 2.0, 3.0], 1e-9).unwrap();
    assert!(r.pass, "{}", r.to_text());
    let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
    assert!(names.contains(&"lambda1_nonincreasing"));
    assert!(names.iter().filter(|n| n.starts_with("first_eigenvector_sign_definite")).count() == 3);
    assert!(names.contains(&"index_nondecreasing"));
}

#[test]
fn bracket_rejects_a_bad_start() {
    assert!(experiments::critical_radius_bracket(16, 32, 0.5, 3.0, 0.1).unwrap_err().is_argument_error());
    // both ends on the same side of e
    assert!(matches!(experiments::critical_radius_bracket(16, 32, 3.0, 4.0, 0.1), Err(Error::Numerical(_))));
}

#[test]
fn argument_errors() {
    let family = TruncationFamily::default_for(SolutionKind::Plane);
    assert!(experiments::index_vs_truncation(&family, &[2.0, 1.0], 1e-9).unwrap_err().is_argument_error());
    let touching = [ConformalTestFunction { base: BaseFunction::Bump, eps: 1.0 }];
    assert!(experiments::conformal_equivalence(SolutionKind::DiskComplement, &touching).unwrap_err().is_argument_error());
    assert!(experiments::curvature_cutoff_bound(SolutionKind::Plane, 1.0, &[10.0]).is_err());
}

#[test]
fn core_collar_is_a_stability_violation() {
    let e = experiments::jacobi_field_positivity(JacobiDomain::HairpinCollar { s1: 0.0, s2: 3.0, n_s: 24, n_t: 8 }).unwrap_err();
    assert!(matches!(e, Error::StabilityViolation(_)));
}

#[test]
fn annulus_jacobi_field_is_positive_by_the_maximum_principle() {
    let r = experiments::jacobi_field_positivity(JacobiDomain::Annulus { inner: 2.0, outer: 8.0, n_r: 24, n_theta: 32 }).unwrap();
    assert!(r.pass);
    // h ≥ min w on the cuts = (1/64 + 1)/2
    assert!(r.computed["min_h"] >= 0.5);
}

#[test]
fn distance_field_ratio_is_below_one() {
    let mesh = meshgen::annulus_mesh(3.0, 16, 64).unwrap();
    let r = experiments::trace_inequality(&mesh, 0, 0).unwrap();
    assert!(r.computed["ratio[distance_to_dirichlet]"] < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trace_experiment_is_deterministic_in_its_seed(seed in any::<u64>()) {
        let mesh = meshgen::hairpin_mesh(2.0, 32, 8).unwrap();
        let a = experiments::trace_inequality(&mesh, 20, seed).unwrap();
        let b = experiments::trace_inequality(&mesh, 20, seed).unwrap();
        prop_assert_eq!(&a.computed, &b.computed);
        prop_assert_eq!(a.seed, Some(seed));
        prop_assert!(a.pass);
    }
}
