use std::f64::consts::PI;

use fbindex::meshgen::{self, EdgeTag};
use proptest::prelude::*;

fn free_length_error(mesh: &fbindex::TriMesh, exact: f64) -> f64 {
    (mesh.tagged_length(EdgeTag::Free) - exact).abs()
}

#[test]
fn annulus_free_length_is_second_order() {
    let e: Vec<f64> =
        [16, 32, 64].iter().map(|&n| free_length_error(&meshgen::annulus_mesh(2.0, 4, n).unwrap(), 2.0 * PI)).collect();
    for w in e.windows(2) {
        assert!((w[0] / w[1] - 4.0).abs() < 0.1, "{e:?}");
    }
}

#[test]
fn hairpin_free_length_is_second_order() {
    // each catenary x₂ = π/2 + cosh x₁ has length 2 sinh S over |x₁| ≤ S
    let s = 2.0;
    let exact = 4.0 * f64::sinh(s);
    let e: Vec<f64> =
        [16, 32, 64].iter().map(|&n| free_length_error(&meshgen::hairpin_mesh(s, n, 8).unwrap(), exact)).collect();
    for w in e.windows(2) {
        assert!((w[0] / w[1] - 4.0).abs() < 0.3, "{e:?}");
    }
}

#[test]
fn disk_free_length_is_second_order() {
    let e: Vec<f64> = [4, 8, 16].iter().map(|&n| free_length_error(&meshgen::disk_mesh(n).unwrap(), 2.0 * PI)).collect();
    for w in e.windows(2) {
        assert!((w[0] / w[1] - 4.0).abs() < 0.1, "{e:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn annulus_euler_characteristic(r in 1.2f64..6.0, n_r in 2usize..12, n_theta in 8usize..48) {
        let m = meshgen::annulus_mesh(r, n_r, n_theta).unwrap();
        prop_assert_eq!(m.euler_characteristic(), 0);
        m.validate().unwrap();
    }

    #[test]
    fn simply_connected_euler_characteristic(n in 1usize..12, s in 0.25f64..4.0, n_s in 2usize..40, n_t in 2usize..12, l in 0.5f64..4.0) {
        prop_assert_eq!(meshgen::disk_mesh(n).unwrap().euler_characteristic(), 1);
        prop_assert_eq!(meshgen::hairpin_mesh(s, n_s, n_t).unwrap().euler_characteristic(), 1);
        prop_assert_eq!(meshgen::plane_mesh(l, n_s).unwrap().euler_characteristic(), 1);
    }

    #[test]
    fn generators_are_bit_identical(r in 1.2f64..6.0, n_r in 2usize..8, n_theta in 8usize..24, s in 0.25f64..4.0) {
        prop_assert_eq!(meshgen::annulus_mesh(r, n_r, n_theta).unwrap(), meshgen::annulus_mesh(r, n_r, n_theta).unwrap());
        prop_assert_eq!(meshgen::hairpin_mesh(s, n_r + 1, n_theta).unwrap(), meshgen::hairpin_mesh(s, n_r + 1, n_theta).unwrap());
        let text = meshgen::to_text(&meshgen::annulus_mesh(r, n_r, n_theta).unwrap());
        let back = meshgen::parse_text(&text, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back, meshgen::annulus_mesh(r, n_r, n_theta).unwrap());
    }
}
