//! Interior field reconstruction from boundary data.
//!
//! Green's representation inside the cavity,
//! `psi(x) = sum_j w_j [G(x, y_j) dpsi/dn(y_j) - dG/dn_y(x, y_j) psi(y_j)]`,
//! with the interior wavenumber `n k`. Midpoint quadrature loses accuracy
//! once a target is within a few element lengths of the boundary, so for
//! those targets the densities are resampled on a finer parameter grid by
//! trigonometric interpolation.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{BoundaryDensity, Resonance, SolverConfig};
use crate::error::{CavityError, Result};
use crate::geometry::CavityGeometry;
use crate::mode_field::{EvaluationMesh, ModeField};
use crate::special::HankelTable;

/// Targets closer than this many element lengths get a refined boundary.
const NEAR_FIELD_RANGE: f64 = 2.5;
const MAX_REFINEMENT: usize = 64;

/// Boundary nodes with their densities, at some resampling factor.
struct Nodes {
    position: Vec<[f64; 2]>,
    normal: Vec<[f64; 2]>,
    weight: Vec<f64>,
    trace: Vec<Complex64>,
    flux: Vec<Complex64>,
}

/// Trigonometric interpolation of samples taken at `t_i = (i + 1/2) 2pi / m`
/// onto `t_j = (j + 1/2) 2pi / (m f)`.
fn upsample(samples: &[Complex64], factor: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let m = samples.len();
    let big = m * factor;
    let mut spec = samples.to_vec();
    planner.plan_fft_forward(m).process(&mut spec);
    let dt = TAU / m as f64;
    let dt_big = TAU / big as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); big];
    let half = m / 2;
    for (idx, &c) in spec.iter().enumerate() {
        // signed frequency; the Nyquist term is split evenly between +-m/2
        let freqs: &[(i64, f64)] = if m % 2 == 0 && idx == half {
            &[(half as i64, 0.5), (-(half as i64), 0.5)]
        } else if idx <= half {
            &[(idx as i64, 1.0)]
        } else {
            &[(idx as i64 - m as i64, 1.0)]
        };
        for &(f, share) in freqs {
            // undo the half-cell offset of the input grid, apply the output one
            let shift = Complex64::from_polar(1.0, f as f64 * (0.5 * dt_big - 0.5 * dt));
            let slot = f.rem_euclid(big as i64) as usize;
            out[slot] += c * shift * (share / m as f64);
        }
    }
    planner.plan_fft_inverse(big).process(&mut out);
    out
}

fn nodes_at(
    geometry: &CavityGeometry,
    density: &BoundaryDensity,
    factor: usize,
    planner: &mut FftPlanner<f64>,
) -> Nodes {
    if factor == 1 {
        let e = &geometry.elements;
        return Nodes {
            position: e.iter().map(|x| x.position).collect(),
            normal: e.iter().map(|x| x.normal).collect(),
            weight: e.iter().map(|x| x.weight).collect(),
            trace: density.trace.clone(),
            flux: density.normal_derivative.clone(),
        };
    }
    let big = geometry.element_count() * factor;
    let dt = TAU / big as f64;
    let samples: Vec<_> = (0..big).map(|j| geometry.sample((j as f64 + 0.5) * dt, dt)).collect();
    Nodes {
        position: samples.iter().map(|x| x.position).collect(),
        normal: samples.iter().map(|x| x.normal).collect(),
        weight: samples.iter().map(|x| x.weight).collect(),
        trace: upsample(&density.trace, factor, planner),
        flux: upsample(&density.normal_derivative, factor, planner),
    }
}

fn evaluate(nodes: &Nodes, table: &HankelTable, x: [f64; 2], closed: bool) -> Complex64 {
    let kappa = table.kappa();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nodes.position.len() {
        let dx = nodes.position[j][0] - x[0];
        let dy = nodes.position[j][1] - x[1];
        let r = dx.hypot(dy);
        let (h0, h1) = table.eval(r);
        // G = (i/4) H0, dG/dn_y = -(i/4) kappa H1 (y - x).n / r
        let mut term = h0 * nodes.flux[j];
        if !closed {
            let rn = (dx * nodes.normal[j][0] + dy * nodes.normal[j][1]) / r;
            term += kappa * h1 * rn * nodes.trace[j];
        }
        acc += term * nodes.weight[j];
    }
    acc * Complex64::new(0.0, 0.25)
}

/// Representation-formula evaluator for one resonance, refining the
/// boundary quadrature near the boundary.
struct Evaluator<'a> {
    geometry: &'a CavityGeometry,
    density: &'a BoundaryDensity,
    table: HankelTable,
    closed: bool,
    h: f64,
    planner: FftPlanner<f64>,
    refined: HashMap<usize, Nodes>,
}

impl<'a> Evaluator<'a> {
    fn new(resonance: &'a Resonance, geometry: &'a CavityGeometry, config: &SolverConfig) -> Result<Self> {
        let m = geometry.element_count();
        let d = &resonance.density;
        if d.trace.len() != m || d.normal_derivative.len() != m {
            return Err(CavityError::MeshMismatch(format!(
                "boundary density has {} / {} entries for {m} elements",
                d.trace.len(),
                d.normal_derivative.len()
            )));
        }
        let kappa = resonance.interior_wavenumber(config.refractive_index);
        let diameter = 2.0 * geometry.major_axis;
        let mut planner = FftPlanner::new();
        let mut refined = HashMap::new();
        refined.insert(1, nodes_at(geometry, d, 1, &mut planner));
        Ok(Self {
            geometry,
            density: d,
            table: HankelTable::new(kappa, 1e-2, diameter * 1.01),
            closed: resonance.kind == super::Kind::Closed,
            h: geometry.elements.iter().map(|e| e.weight).fold(0.0, f64::max),
            planner,
            refined,
        })
    }

    fn at(&mut self, x: [f64; 2]) -> Complex64 {
        let dist = self.refined[&1]
            .position
            .iter()
            .map(|p| (p[0] - x[0]).hypot(p[1] - x[1]))
            .fold(f64::INFINITY, f64::min);
        let factor = ((NEAR_FIELD_RANGE * self.h / dist).ceil() as usize).clamp(1, MAX_REFINEMENT);
        let (geometry, density, planner) = (self.geometry, self.density, &mut self.planner);
        let nodes = self.refined.entry(factor).or_insert_with(|| nodes_at(geometry, density, factor, planner));
        evaluate(nodes, &self.table, x, self.closed)
    }
}

fn check_inside(geometry: &CavityGeometry, points: &[[f64; 2]]) -> Result<()> {
    match points.iter().position(|&p| !geometry.contains(p)) {
        Some(i) => Err(CavityError::Domain(format!("point {:?} (index {i}) is not inside the cavity", points[i]))),
        None => Ok(()),
    }
}

/// Field of a resonance at arbitrary interior points.
pub fn field_at_points(
    resonance: &Resonance,
    geometry: &CavityGeometry,
    config: &SolverConfig,
    points: &[[f64; 2]],
) -> Result<Vec<Complex64>> {
    check_inside(geometry, points)?;
    let mut ev = Evaluator::new(resonance, geometry, config)?;
    Ok(points.iter().map(|&x| ev.at(x)).collect())
}

/// Evaluates a resonance's field on the mesh cells.
///
/// The mesh must lie strictly inside `geometry`. Under a symmetry class
/// only one quadrant is evaluated and the rest follows by reflection.
pub fn interior_field(
    resonance: &Resonance,
    geometry: &CavityGeometry,
    config: &SolverConfig,
    mesh: &Arc<EvaluationMesh>,
) -> Result<ModeField> {
    let mut ev = Evaluator::new(resonance, geometry, config)?;
    check_inside(geometry, &mesh.centers)?;
    let signs = resonance.parity.signs();

    let mut amplitudes = vec![Complex64::new(0.0, 0.0); mesh.len()];
    for (i, &x) in mesh.centers.iter().enumerate() {
        if signs.is_some() && !mesh.is_quadrant_representative(i) {
            continue;
        }
        amplitudes[i] = ev.at(x);
    }
    if let Some((px, py)) = signs {
        for i in 0..mesh.len() {
            if !mesh.is_quadrant_representative(i) {
                continue;
            }
            let v = amplitudes[i];
            let (ix_, iy_) = (mesh.mirror_x(i), mesh.mirror_y(i));
            let ixy = mesh.mirror_y(ix_);
            // cells on an axis are their own mirror; keep the computed value
            if ix_ != i {
                amplitudes[ix_] = v * px;
            }
            if iy_ != i {
                amplitudes[iy_] = v * py;
            }
            if ixy != i && ixy != ix_ && ixy != iy_ {
                amplitudes[ixy] = v * (px * py);
            }
        }
    }
    ModeField::new(mesh.clone(), amplitudes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsampling_reproduces_trig_polynomial() {
        let m = 32;
        let f = |t: f64| Complex64::new((3.0 * t).cos() + 0.2 * (5.0 * t).sin(), (2.0 * t).sin());
        let samples: Vec<_> = (0..m).map(|i| f((i as f64 + 0.5) * TAU / m as f64)).collect();
        let mut planner = FftPlanner::new();
        for factor in [1usize, 3, 8] {
            let up = upsample(&samples, factor, &mut planner);
            let big = m * factor;
            for (j, v) in up.iter().enumerate() {
                let t = (j as f64 + 0.5) * TAU / big as f64;
                assert!((v - f(t)).norm() < 1e-12, "factor {factor}, node {j}");
            }
        }
    }
}
