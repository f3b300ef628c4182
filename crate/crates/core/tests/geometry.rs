mod common;

use cavity_core::geometry::{discretize_boundary, ellipse_axes};
use common::ellipse_perimeter;
use proptest::prelude::*;

#[test]
fn weights_match_perimeter_oracle() {
    for eps in [0.0, 0.05, 0.1, 0.2, 0.23, 0.6] {
        let g = discretize_boundary(eps, 256).unwrap();
        let (a, b) = ellipse_axes(eps).unwrap();
        let oracle = ellipse_perimeter(a, b);
        let rel = (g.perimeter() - oracle).abs() / oracle;
        assert!(rel < 1e-6, "eps {eps}: relative error {rel:e}");
    }
}

#[test]
fn area_is_pi() {
    // Green's theorem on the discretized boundary: area = (1/2) sum (x n_x + y n_y) w
    for eps in [0.0, 0.1, 0.23] {
        let g = discretize_boundary(eps, 512).unwrap();
        let area: f64 = g
            .elements
            .iter()
            .map(|e| 0.5 * (e.position[0] * e.normal[0] + e.position[1] * e.normal[1]) * e.weight)
            .sum();
        assert!((area - std::f64::consts::PI).abs() < 1e-9, "eps {eps}: {area}");
    }
}

proptest! {
    #[test]
    fn doubling_barely_changes_weight_sum(eps in 0.0f64..0.23, m in prop::sample::select(vec![64usize, 128, 256])) {
        let coarse = discretize_boundary(eps, m).unwrap().perimeter();
        let fine = discretize_boundary(eps, 2 * m).unwrap().perimeter();
        prop_assert!((coarse - fine).abs() / fine < 1e-8);
    }

    #[test]
    fn element_set_is_mirror_symmetric(eps in 0.0f64..0.23, quarter in 4usize..80) {
        let g = discretize_boundary(eps, 4 * quarter).unwrap();
        for (sx, sy) in [(-1.0, 1.0), (1.0, -1.0)] {
            for e in &g.elements {
                let mirrored = [sx * e.position[0], sy * e.position[1]];
                let nearest = g
                    .elements
                    .iter()
                    .map(|f| (f.position[0] - mirrored[0]).hypot(f.position[1] - mirrored[1]))
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(nearest < 1e-12);
            }
        }
    }

    #[test]
    fn normals_unit_and_outward(eps in 0.0f64..0.23, m in 16usize..300) {
        let g = discretize_boundary(eps, m).unwrap();
        for e in &g.elements {
            prop_assert!((e.normal[0].hypot(e.normal[1]) - 1.0).abs() < 1e-12);
            prop_assert!(e.normal[0] * e.position[0] + e.normal[1] * e.position[1] > 0.0);
        }
    }

    #[test]
    fn axes_product_is_one(eps in 0.0f64..10.0) {
        let (a, b) = ellipse_axes(eps).unwrap();
        prop_assert_eq!(a, 1.0 + eps);
        prop_assert!((a * b - 1.0).abs() < 1e-15);
    }
}
