mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use cavity_core::bem::circle::closed_circle_mode;
use cavity_core::bem::solve::{closed_in_interval, refine_open};
use cavity_core::bem::{field_at_points, interior_field, Parity, Resonance, SolverConfig};
use cavity_core::geometry::{discretize_boundary, CavityGeometry};
use cavity_core::mode_field::{build_mesh, normalize_intensity};
use num_complex::Complex64 as C;

fn closed_mode(g: &CavityGeometry, cfg: &SolverConfig, near: f64) -> Resonance {
    let found = closed_in_interval(g, cfg, near - 0.01, near + 0.01, 1e-3).unwrap();
    found
        .into_iter()
        .min_by(|a, b| (a.k.re - near).abs().total_cmp(&(b.k.re - near).abs()))
        .expect("eigenvalue near the requested value")
}

fn boundary_distance(g: &CavityGeometry, p: [f64; 2]) -> f64 {
    (0..4000)
        .map(|i| {
            let q = g.point_at(2.0 * PI * i as f64 / 4000.0);
            (q[0] - p[0]).hypot(q[1] - p[1])
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn closed_field_vanishes_at_boundary() {
    let cfg = SolverConfig::default();
    for (eps, near) in [(0.0, closed_circle_mode(8, 5, cfg.refractive_index).unwrap()), (0.2, 9.003)] {
        let g = discretize_boundary(eps, 128).unwrap();
        let res = closed_mode(&g, &cfg, near);
        let mesh = Arc::new(build_mesh(&g, 200).unwrap());
        let f = interior_field(&res, &g, &cfg, &mesh).unwrap();
        // on intensity: the exact circle mode already reaches ~14% of its peak
        // amplitude one hundredth from the wall, but only ~2% of the peak intensity
        let peak = f.amplitudes.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let mut near_edge = 0;
        for (p, z) in mesh.centers.iter().zip(&f.amplitudes) {
            // cheap filter before the exact distance
            let level = (p[0] / g.major_axis).powi(2) + (p[1] / g.minor_axis).powi(2);
            if level < 0.95 {
                continue;
            }
            if boundary_distance(&g, *p) < 1e-2 {
                near_edge += 1;
                assert!(z.norm_sqr() < 0.05 * peak, "eps {eps}: |psi|^2 = {} at {p:?}, peak {peak}", z.norm_sqr());
            }
        }
        assert!(near_edge > 100);
    }
}

#[test]
fn circle_mode_is_angular_order_eight() {
    let cfg = SolverConfig::default();
    let g = discretize_boundary(0.0, 128).unwrap();
    let res = closed_mode(&g, &cfg, closed_circle_mode(8, 5, cfg.refractive_index).unwrap());
    let samples = 256;
    for r in [0.35, 0.6, 0.8] {
        let pts: Vec<[f64; 2]> = (0..samples)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / samples as f64;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let psi = field_at_points(&res, &g, &cfg, &pts).unwrap();
        // discrete Fourier power by order
        let power = |order: i32| -> f64 {
            let c: C = psi
                .iter()
                .enumerate()
                .map(|(i, z)| z * C::from_polar(1.0, -(order as f64) * 2.0 * PI * i as f64 / samples as f64))
                .sum();
            c.norm_sqr()
        };
        let total: f64 = (-(samples as i32) / 2..samples as i32 / 2).map(power).sum();
        let fraction = (power(8) + power(-8)) / total;
        assert!(fraction >= 0.99, "r = {r}: fraction {fraction}");
    }
}

#[test]
fn circle_mode_has_five_radial_maxima() {
    let cfg = SolverConfig::default();
    let g = discretize_boundary(0.0, 128).unwrap();
    let res = closed_mode(&g, &cfg, closed_circle_mode(8, 5, cfg.refractive_index).unwrap());
    // cos(8 theta) is extremal on theta = 0
    let pts: Vec<[f64; 2]> = (1..2000).map(|i| [i as f64 / 2000.0 * 0.999, 0.0]).collect();
    let intensity: Vec<f64> = field_at_points(&res, &g, &cfg, &pts).unwrap().iter().map(|z| z.norm_sqr()).collect();
    let peak = intensity.iter().copied().fold(0.0, f64::max);
    let maxima = (1..intensity.len() - 1)
        .filter(|&i| intensity[i] > intensity[i - 1] && intensity[i] >= intensity[i + 1] && intensity[i] > 1e-6 * peak)
        .count();
    assert_eq!(maxima, 5);
}

#[test]
fn unreduced_modes_have_definite_parity() {
    let cfg = SolverConfig { parity: Parity::None, ..SolverConfig::default() };
    let g = discretize_boundary(0.15, 128).unwrap();
    let mesh = Arc::new(build_mesh(&g, 80).unwrap());
    let ground = closed_in_interval(&g, &cfg, 0.6, 1.1, 5e-3).unwrap();
    assert!(!ground.is_empty());
    let open_seed = C::new(8.63, -0.09);
    let open = refine_open(&g, &cfg, open_seed, 0.1, &[]).unwrap();
    for res in [&ground[0], &open] {
        let p = normalize_intensity(&interior_field(res, &g, &cfg, &mesh).unwrap()).unwrap();
        let pr = p.probabilities();
        let peak = pr.iter().copied().fold(0.0, f64::max);
        for i in 0..mesh.len() {
            for j in [mesh.mirror_x(i), mesh.mirror_y(i)] {
                assert!((pr[i] - pr[j]).abs() < 1e-3 * peak, "k = {}: cell {i} vs {j}", res.k);
            }
        }
    }
}

#[test]
fn mesh_fill_fraction() {
    let g = discretize_boundary(0.0, 64).unwrap();
    let mesh = build_mesh(&g, 200).unwrap();
    assert!((mesh.len() as f64 - PI / 4.0 * 200.0 * 200.0).abs() <= 200.0, "{}", mesh.len());
    assert_eq!(mesh, build_mesh(&g, 200).unwrap());
}

#[test]
fn points_outside_are_rejected() {
    let cfg = SolverConfig { element_count: 64, ..SolverConfig::default() };
    let g = discretize_boundary(0.0, 64).unwrap();
    let res = closed_in_interval(&g, &cfg, 0.6, 1.1, 5e-3).unwrap().remove(0);
    assert!(field_at_points(&res, &g, &cfg, &[[0.0, 0.0], [1.0, 0.0]]).is_err());
    assert!(field_at_points(&res, &g, &cfg, &[[0.2, 0.1]]).is_ok());
}
