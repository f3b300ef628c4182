//! Discretized layer potentials and the characteristic matrices.
//!
//! With `G(x, y) = (i/4) H_0(kappa |x - y|)` the single layer is
//! `(S phi)(x) = int G phi ds_y` and the double layer is
//! `(D phi)(x) = pv int dG/dn_y phi ds_y`. Densities are constant per element
//! and collocated at the element midpoints, so off-diagonal entries are the
//! kernel times the element weight.
//!
//! The logarithmic part of both kernels is integrated with local corrections:
//! the diagonal of `S` carries the analytic integral of the log singularity
//! over the punctured grid, and the three nearest neighbours on each side get
//! moment corrections built from `zeta'(-2m)`. `D` has a smooth kernel on a
//! smooth curve; its diagonal is the curvature limit `-kappa_c / (4 pi)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{check_geometry, Kind, Parity, SolverConfig};
use crate::error::{CavityError, Result};
use crate::geometry::CavityGeometry;
use crate::special::{bessel_j01, hankel01};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Neighbour weights `gamma_l` solving `sum_l gamma_l l^(2m) = zeta'(-2m)`, `m = 1..3`.
const LOG_CORRECTIONS: [f64; 3] =
    [-0.050_243_073_420_798_575, 0.005_996_233_119_529_027, -0.000_465_590_679_523_422_6];

/// Rows of the single- and double-layer matrices for one wavenumber.
pub(crate) struct LayerRows {
    pub single: DMatrix<Complex64>,
    pub double: DMatrix<Complex64>,
}

fn cyclic_distance(i: usize, j: usize, m: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(m - d)
}

pub(crate) fn layer_rows(geometry: &CavityGeometry, kappa: Complex64, rows: &[usize]) -> LayerRows {
    let elems = &geometry.elements;
    let m = elems.len();
    let i_quarter = Complex64::new(0.0, 0.25);
    let mut single = DMatrix::zeros(rows.len(), m);
    let mut double = DMatrix::zeros(rows.len(), m);
    let gamma_sum: f64 = LOG_CORRECTIONS.iter().sum();

    for (row, &i) in rows.iter().enumerate() {
        let xi = elems[i].position;
        for (j, ej) in elems.iter().enumerate() {
            if i == j {
                let w = ej.weight;
                let log_term = (kappa * w / (4.0 * PI)).ln() + EULER_GAMMA;
                single[(row, j)] =
                    i_quarter * w - log_term * (w / (2.0 * PI)) + w * gamma_sum / PI;
                double[(row, j)] = Complex64::new(-ej.curvature * w / (4.0 * PI), 0.0);
                continue;
            }
            let dx = ej.position[0] - xi[0];
            let dy = ej.position[1] - xi[1];
            let r = dx.hypot(dy);
            let rn = (dx * ej.normal[0] + dy * ej.normal[1]) / r;
            let (h0, h1) = hankel01(kappa * r);
            let mut s = i_quarter * h0 * ej.weight;
            let mut d = -i_quarter * kappa * h1 * rn * ej.weight;
            let l = cyclic_distance(i, j, m);
            if l <= LOG_CORRECTIONS.len() {
                let g = LOG_CORRECTIONS[l - 1];
                let (j0, j1) = bessel_j01(kappa * r);
                s += j0 * (-g * ej.weight / (2.0 * PI));
                d += kappa * j1 * (g * rn * ej.weight / (2.0 * PI));
            }
            single[(row, j)] = s;
            double[(row, j)] = d;
        }
    }
    LayerRows { single, double }
}

/// Row indices solved for: all elements, or the first quadrant under a parity.
pub(crate) fn representative_rows(geometry: &CavityGeometry, parity: Parity) -> Vec<usize> {
    let m = geometry.element_count();
    match parity {
        Parity::None => (0..m).collect(),
        _ => (0..m / 4).collect(),
    }
}

/// Folds the columns of an `R x M` block onto the `R` representatives.
pub(crate) fn fold_columns(
    geometry: &CavityGeometry,
    block: &DMatrix<Complex64>,
    parity: Parity,
) -> DMatrix<Complex64> {
    let Some((px, py)) = parity.signs() else {
        return block.clone();
    };
    let q = geometry.element_count() / 4;
    DMatrix::from_fn(block.nrows(), q, |r, j| {
        block[(r, j)]
            + block[(r, geometry.mirror_y(j))] * py
            + block[(r, geometry.mirror_x(j))] * px
            + block[(r, geometry.mirror_xy(j))] * (px * py)
    })
}

/// Expands a representative-element density to all `M` elements.
pub fn expand_density(geometry: &CavityGeometry, reduced: &[Complex64], parity: Parity) -> Vec<Complex64> {
    let Some((px, py)) = parity.signs() else {
        return reduced.to_vec();
    };
    let m = geometry.element_count();
    let mut full = vec![Complex64::new(0.0, 0.0); m];
    for (j, &v) in reduced.iter().enumerate() {
        full[j] = v;
        full[geometry.mirror_y(j)] = v * py;
        full[geometry.mirror_x(j)] = v * px;
        full[geometry.mirror_xy(j)] = v * (px * py);
    }
    full
}

/// Characteristic matrix whose singularity defines the modes at `k`.
///
/// * Closed: the `M x M` single layer at interior wavenumber `n k`.
/// * Open: the `2M x 2M` transmission system acting on `(psi, dpsi/dn)`,
///   ```text
///   | I/2 + D_in   -S_in  |
///   | I/2 - D_out   S_out |
///   ```
///   from Green's identities inside (wavenumber `n k`) and outside
///   (wavenumber `k`, outgoing).
///
/// Under a parity other than [`Parity::None`] the matrices are restricted to
/// the symmetry class and have `M/4` (closed) or `M/2` (open) rows.
pub fn characteristic_matrix(
    geometry: &CavityGeometry,
    config: &SolverConfig,
    k: Complex64,
    kind: Kind,
) -> Result<DMatrix<Complex64>> {
    if k.norm() == 0.0 || !k.re.is_finite() || !k.im.is_finite() {
        return Err(CavityError::Domain(format!("wavenumber must be finite and nonzero, got {k}")));
    }
    check_geometry(geometry, config)?;
    if config.parity != Parity::None && geometry.element_count() % 4 != 0 {
        return Err(CavityError::Config("parity reduction needs element_count divisible by 4".into()));
    }
    let rows = representative_rows(geometry, config.parity);
    let n = config.refractive_index;
    match kind {
        Kind::Closed => {
            let inner = layer_rows(geometry, k * n, &rows);
            Ok(fold_columns(geometry, &inner.single, config.parity))
        }
        Kind::Open => {
            let inner = layer_rows(geometry, k * n, &rows);
            let outer = layer_rows(geometry, k, &rows);
            let d_in = fold_columns(geometry, &inner.double, config.parity);
            let s_in = fold_columns(geometry, &inner.single, config.parity);
            let d_out = fold_columns(geometry, &outer.double, config.parity);
            let s_out = fold_columns(geometry, &outer.single, config.parity);
            let q = rows.len();
            let half = Complex64::new(0.5, 0.0);
            let mut a = DMatrix::zeros(2 * q, 2 * q);
            for r in 0..q {
                for c in 0..q {
                    let id = if r == c { half } else { Complex64::new(0.0, 0.0) };
                    a[(r, c)] = id + d_in[(r, c)];
                    a[(r, q + c)] = -s_in[(r, c)];
                    a[(q + r, c)] = id - d_out[(r, c)];
                    a[(q + r, q + c)] = s_out[(r, c)];
                }
            }
            Ok(a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::discretize_boundary;

    fn cfg(m: usize, parity: Parity) -> SolverConfig {
        SolverConfig { element_count: m, parity, ..SolverConfig::default() }
    }

    #[test]
    fn dimensions() {
        let g = discretize_boundary(0.1, 64).unwrap();
        let k = Complex64::new(5.0, -0.1);
        let full = cfg(64, Parity::None);
        assert_eq!(characteristic_matrix(&g, &full, k, Kind::Closed).unwrap().shape(), (64, 64));
        assert_eq!(characteristic_matrix(&g, &full, k, Kind::Open).unwrap().shape(), (128, 128));
        let red = cfg(64, Parity::EvenEven);
        assert_eq!(characteristic_matrix(&g, &red, k, Kind::Closed).unwrap().shape(), (16, 16));
        assert_eq!(characteristic_matrix(&g, &red, k, Kind::Open).unwrap().shape(), (32, 32));
    }

    #[test]
    fn zero_wavenumber_is_rejected() {
        let g = discretize_boundary(0.0, 32).unwrap();
        let r = characteristic_matrix(&g, &cfg(32, Parity::None), Complex64::new(0.0, 0.0), Kind::Open);
        assert!(matches!(r, Err(CavityError::Domain(_))));
    }

    #[test]
    fn mirror_permutation_invariance() {
        let g = discretize_boundary(0.15, 48).unwrap();
        let c = cfg(48, Parity::None);
        let k = Complex64::new(3.3, -0.05);
        for kind in [Kind::Closed, Kind::Open] {
            let a = characteristic_matrix(&g, &c, k, kind).unwrap();
            let m = 48;
            for mirror in [0usize, 1] {
                let p = |i: usize| {
                    let (blk, e) = (i / m, i % m);
                    let e = if mirror == 0 { g.mirror_x(e) } else { g.mirror_y(e) };
                    blk * m + e
                };
                for i in 0..a.nrows() {
                    for j in 0..a.ncols() {
                        assert!((a[(p(i), p(j))] - a[(i, j)]).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_matrix_acts_like_full_on_symmetric_vectors() {
        let g = discretize_boundary(0.2, 32).unwrap();
        let k = Complex64::new(4.1, -0.03);
        let full = characteristic_matrix(&g, &cfg(32, Parity::None), k, Kind::Closed).unwrap();
        for parity in [Parity::EvenEven, Parity::EvenOdd, Parity::OddEven, Parity::OddOdd] {
            let red = characteristic_matrix(&g, &cfg(32, parity), k, Kind::Closed).unwrap();
            let v: Vec<Complex64> = (0..8).map(|i| Complex64::new(1.0 + i as f64, 0.5 * i as f64)).collect();
            let vf = nalgebra::DVector::from_vec(expand_density(&g, &v, parity));
            let lhs = &full * &vf;
            let rhs = &red * nalgebra::DVector::from_vec(v.clone());
            for r in 0..8 {
                assert!((lhs[r] - rhs[r]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reduction_requires_multiple_of_four() {
        let g = discretize_boundary(0.0, 18).unwrap();
        let r = characteristic_matrix(&g, &cfg(18, Parity::EvenEven), Complex64::new(3.0, 0.0), Kind::Closed);
        assert!(r.is_err());
    }
}
