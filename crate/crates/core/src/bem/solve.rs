//! Eigenvalue and resonance searches on top of the characteristic matrices.

use log::{debug, warn};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::assembly::{characteristic_matrix, expand_density};
use super::roots::{brent_minimize, log_det, muller, sigma_min, singular_summary, SingularSummary};
use super::{check_geometry, BoundaryDensity, Kind, Resonance, SolverConfig};
use crate::complex_serde;
use crate::error::{CavityError, Result};
use crate::geometry::CavityGeometry;

/// A seed that did not produce an accepted resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    #[serde(with = "complex_serde")]
    pub seed: Complex64,
    pub reason: String,
}

/// Outcome of an open-resonance search including the rejected seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSearch {
    pub resonances: Vec<Resonance>,
    pub seeds_tried: usize,
    pub failures: Vec<SeedFailure>,
}

/// Rotates `v` so its largest component is real and positive, making the
/// arbitrary phase of singular vectors reproducible.
fn fix_phase(v: &mut [Complex64]) {
    let Some(big) = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) else {
        return;
    };
    if big.norm() == 0.0 {
        return;
    }
    let rot = big.conj() / big.norm();
    for z in v.iter_mut() {
        *z *= rot;
    }
}

fn density_from_null(
    geometry: &CavityGeometry,
    config: &SolverConfig,
    null: &DVector<Complex64>,
    kind: Kind,
) -> BoundaryDensity {
    let m = geometry.element_count();
    match kind {
        Kind::Closed => {
            let mut v = expand_density(geometry, null.as_slice(), config.parity);
            fix_phase(&mut v);
            BoundaryDensity { trace: vec![Complex64::new(0.0, 0.0); m], normal_derivative: v }
        }
        Kind::Open => {
            let q = null.len() / 2;
            let mut u = expand_density(geometry, &null.as_slice()[..q], config.parity);
            let v = expand_density(geometry, &null.as_slice()[q..], config.parity);
            u.extend_from_slice(&v);
            fix_phase(&mut u);
            let v = u.split_off(m);
            BoundaryDensity { trace: u, normal_derivative: v }
        }
    }
}

fn make_resonance(
    geometry: &CavityGeometry,
    config: &SolverConfig,
    k: Complex64,
    kind: Kind,
    summary: &SingularSummary,
    second: bool,
) -> Resonance {
    let vec = if second { &summary.second_vector } else { &summary.null_vector };
    Resonance {
        k,
        kind,
        parity: config.parity,
        residual: if second { summary.sigma_second / summary.sigma_max } else { summary.relative_min() },
        density: density_from_null(geometry, config, vec, kind),
    }
}

fn closed_sigma(geometry: &CavityGeometry, config: &SolverConfig, k: f64) -> Result<f64> {
    let a = characteristic_matrix(geometry, config, Complex64::new(k, 0.0), Kind::Closed)?;
    Ok(sigma_min(&a))
}

/// Closed eigenvalues with `lo <= k <= hi`, scanning `sigma_min` on a grid of
/// spacing `step` and polishing each interior local minimum.
pub fn closed_in_interval(
    geometry: &CavityGeometry,
    config: &SolverConfig,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<Vec<Resonance>> {
    check_geometry(geometry, config)?;
    if !(lo > 0.0) || !(hi >= lo) || !(step > 0.0) {
        return Err(CavityError::Domain(format!("bad closed search interval [{lo}, {hi}] step {step}")));
    }
    // one extra node on each side so minima near the edges are bracketed
    let count = ((hi - lo) / step).ceil() as usize + 3;
    let start = (lo - step).max(0.5 * lo);
    let h = (hi + step - start) / (count - 1) as f64;
    let ks: Vec<f64> = (0..count).map(|i| start + i as f64 * h).collect();
    let sigmas = ks.iter().map(|&k| closed_sigma(geometry, config, k)).collect::<Result<Vec<_>>>()?;

    let mut found: Vec<Resonance> = Vec::new();
    for i in 1..count - 1 {
        if !(sigmas[i] < sigmas[i - 1] && sigmas[i] <= sigmas[i + 1]) {
            continue;
        }
        let (k, _) = brent_minimize(
            |k| closed_sigma(geometry, config, k),
            ks[i - 1],
            ks[i + 1],
            config.root_tol,
            config.max_iterations.max(100),
        )?;
        if k < lo || k > hi {
            continue;
        }
        let a = characteristic_matrix(geometry, config, Complex64::new(k, 0.0), Kind::Closed)?;
        let summary = singular_summary(&a)?;
        if summary.relative_min() >= config.accept_threshold {
            debug!("closed minimum at k = {k} rejected, residual {}", summary.relative_min());
            continue;
        }
        let kc = Complex64::new(k, 0.0);
        found.push(make_resonance(geometry, config, kc, Kind::Closed, &summary, false));
        if summary.sigma_second / summary.sigma_max < config.accept_threshold {
            found.push(make_resonance(geometry, config, kc, Kind::Closed, &summary, true));
        }
    }
    Ok(dedup_closed(found, 10.0 * config.root_tol))
}

fn dedup_closed(mut found: Vec<Resonance>, tol: f64) -> Vec<Resonance> {
    found.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.residual.total_cmp(&b.residual)));
    let mut out: Vec<Resonance> = Vec::with_capacity(found.len());
    let mut i = 0;
    while i < found.len() {
        // members of one degenerate doublet share k exactly and are kept together
        let k = found[i].k.re;
        let mut j = i;
        while j < found.len() && found[j].k.re == k {
            j += 1;
        }
        if out.last().map_or(true, |last| k - last.k.re >= tol) {
            out.extend(found[i..j].iter().cloned());
        }
        i = j;
    }
    out
}

/// Real Dirichlet eigenvalues `k` (interior wavenumber `n k`) in the
/// configured window, sorted ascending.
pub fn find_closed_eigenvalues(geometry: &CavityGeometry, config: &SolverConfig) -> Result<Vec<Resonance>> {
    config.validate()?;
    let w = &config.window;
    if !(w.im_min <= 0.0 && w.im_max >= 0.0) {
        return Err(CavityError::Config("closed search window must contain the real axis".into()));
    }
    closed_in_interval(geometry, config, w.re_min, w.re_max, 1.0 / config.scan_density_re)
}

/// Open-problem objective `det A(k) / det A(k_ref)` with known roots divided out.
struct DetRatio<'a> {
    geometry: &'a CavityGeometry,
    config: &'a SolverConfig,
    reference: Complex64,
    centre: Complex64,
    radius: f64,
    deflate: &'a [Complex64],
}

impl DetRatio<'_> {
    fn eval(&self, k: Complex64) -> Result<Complex64> {
        if (k - self.centre).norm() > self.radius || k.re <= 0.0 {
            return Err(CavityError::NoConvergence(format!("iterate {k} left the search region")));
        }
        let a = characteristic_matrix(self.geometry, self.config, k, Kind::Open)?;
        let mut f = (log_det(&a) - self.reference).exp();
        for &r in self.deflate {
            f /= k - r;
        }
        if !f.re.is_finite() || !f.im.is_finite() {
            return Err(CavityError::NoConvergence(format!("determinant overflow at k = {k}")));
        }
        Ok(f)
    }
}

/// Muller iteration on the open determinant from `seed`, dividing out the
/// roots in `deflate`. Iterates farther than `radius` from the seed abort.
pub fn refine_open(
    geometry: &CavityGeometry,
    config: &SolverConfig,
    seed: Complex64,
    radius: f64,
    deflate: &[Complex64],
) -> Result<Resonance> {
    check_geometry(geometry, config)?;
    let a0 = characteristic_matrix(geometry, config, seed, Kind::Open)?;
    let obj = DetRatio { geometry, config, reference: log_det(&a0), centre: seed, radius, deflate };
    let h = (radius * 0.1).min(5e-3);
    let start = [seed - h, seed + Complex64::new(0.0, -h), seed];
    let (k, iterations) = muller(|k| obj.eval(k), start, config.root_tol, config.max_iterations)?;
    let a = characteristic_matrix(geometry, config, k, Kind::Open)?;
    let summary = singular_summary(&a)?;
    debug!("open root {k} after {iterations} iterations, residual {}", summary.relative_min());
    if summary.relative_min() >= config.accept_threshold {
        return Err(CavityError::NoConvergence(format!(
            "converged point {k} is not singular (residual {:.3e})",
            summary.relative_min()
        )));
    }
    if !(k.im < 0.0) {
        return Err(CavityError::NoConvergence(format!("root {k} is not decaying")));
    }
    Ok(make_resonance(geometry, config, k, Kind::Open, &summary, false))
}

/// Closed eigenvalue nearest to the interval `[centre - half_width, centre + half_width]`.
pub fn refine_closed(
    geometry: &CavityGeometry,
    config: &SolverConfig,
    centre: f64,
    half_width: f64,
) -> Result<Vec<Resonance>> {
    let step = (half_width / 8.0).min(1.0 / config.scan_density_re);
    closed_in_interval(geometry, config, (centre - half_width).max(1e-3), centre + half_width, step)
}

const MAX_SEED_ROUNDS: usize = 6;

/// Points of each grid row not exceeded by their row neighbours.
///
/// `ln |det|` carries a strong trend in `Im k`, so broad resonances rarely
/// show up as two-dimensional minima; along a row of fixed `Im k` they do.
fn grid_minima(grid: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (j, row) in grid.iter().enumerate() {
        for i in 0..row.len() {
            let left = i == 0 || row[i - 1] >= row[i];
            let right = i + 1 == row.len() || row[i + 1] >= row[i];
            if left && right {
                out.push((j, i));
            }
        }
    }
    out
}

fn open_seeds(config: &SolverConfig) -> (Vec<f64>, Vec<f64>) {
    let w = &config.window;
    let nre = ((w.re_max - w.re_min) * config.scan_density_re).ceil().max(1.0) as usize + 1;
    let nim = ((w.im_max - w.im_min) * config.scan_density_im).ceil().max(1.0) as usize + 1;
    let re = (0..nre).map(|i| w.re_min + (w.re_max - w.re_min) * i as f64 / (nre - 1) as f64).collect();
    let im = (0..nim).map(|j| w.im_max - (w.im_max - w.im_min) * j as f64 / (nim - 1) as f64).collect();
    (re, im)
}

/// Open resonances in the window with the record of failed seeds.
///
/// `ln |det A|` is sampled on the seed grid; every grid-local minimum starts
/// a Muller iteration with the resonances found so far deflated.
pub fn search_open_resonances(geometry: &CavityGeometry, config: &SolverConfig) -> Result<OpenSearch> {
    config.validate()?;
    check_geometry(geometry, config)?;
    let w = config.window;
    if w.im_max > 0.0 || w.im_min < -config.max_decay {
        return Err(CavityError::Config(format!(
            "open search window must lie in -{} <= Im k <= 0",
            config.max_decay
        )));
    }
    let (re, im) = open_seeds(config);
    let mut grid = vec![vec![0.0; re.len()]; im.len()];
    for (j, &y) in im.iter().enumerate() {
        for (i, &x) in re.iter().enumerate() {
            let a = characteristic_matrix(geometry, config, Complex64::new(x, y), Kind::Open)?;
            grid[j][i] = log_det(&a).re;
        }
    }
    let cell = (1.0 / config.scan_density_re).max(1.0 / config.scan_density_im);
    let mut found: Vec<Resonance> = Vec::new();
    let mut failures = Vec::new();
    let mut tried: Vec<Complex64> = Vec::new();
    // High-Q resonances dominate the landscape and hide broad ones, so the
    // roots found in one round are divided out of the sampled determinant
    // before its minima are searched again.
    for round in 0..MAX_SEED_ROUNDS {
        let known: Vec<Complex64> = found.iter().map(|r| r.k).collect();
        let deflated: Vec<Vec<f64>> = im
            .iter()
            .zip(&grid)
            .map(|(&y, row)| {
                re.iter()
                    .zip(row)
                    .map(|(&x, &v)| {
                        let k = Complex64::new(x, y);
                        v - known.iter().map(|&r| (k - r).norm().max(1e-300).ln()).sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        let seeds: Vec<Complex64> = grid_minima(&deflated)
            .into_iter()
            .map(|(j, i)| Complex64::new(re[i], im[j]))
            .filter(|s| !tried.contains(s))
            .collect();
        debug!("seed round {round}: {} new seeds", seeds.len());
        if seeds.is_empty() {
            break;
        }
        let before = found.len();
        for seed in seeds {
            tried.push(seed);
            let known: Vec<Complex64> = found.iter().map(|r| r.k).collect();
            match refine_open(geometry, config, seed, 4.0 * cell, &known) {
                Ok(r) if w.contains(r.k) => found.push(r),
                Ok(r) => failures.push(SeedFailure { seed, reason: format!("root {} outside the window", r.k) }),
                Err(e) => {
                    warn!("seed {seed} discarded: {e}");
                    failures.push(SeedFailure { seed, reason: e.to_string() });
                }
            }
        }
        if found.len() == before {
            break;
        }
    }
    let seeds = tried;
    if found.is_empty() && !seeds.is_empty() {
        warn!("no open resonance found in the window; all {} seeds failed", seeds.len());
    }
    let tol = 10.0 * config.root_tol;
    found.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.k.im.total_cmp(&b.k.im)));
    let mut resonances: Vec<Resonance> = Vec::with_capacity(found.len());
    for r in found {
        if resonances.iter().all(|q| (q.k - r.k).norm() >= tol) {
            resonances.push(r);
        }
    }
    Ok(OpenSearch { resonances, seeds_tried: seeds.len(), failures })
}

/// Complex resonances `k` (`Im k < 0`) inside the window, sorted by `Re k`.
pub fn find_open_resonances(geometry: &CavityGeometry, config: &SolverConfig) -> Result<Vec<Resonance>> {
    Ok(search_open_resonances(geometry, config)?.resonances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::{KWindow, Parity};
    use crate::geometry::discretize_boundary;

    #[test]
    fn empty_window_below_first_eigenvalue() {
        let g = discretize_boundary(0.0, 32).unwrap();
        let config = SolverConfig {
            element_count: 32,
            window: KWindow::real(0.2, 0.6),
            parity: Parity::None,
            ..SolverConfig::default()
        };
        // first Dirichlet zero j_{0,1} = 2.405 sits at k = 0.85
        assert!(find_closed_eigenvalues(&g, &config).unwrap().is_empty());
    }

    #[test]
    fn lowest_circle_eigenvalue() {
        let g = discretize_boundary(0.0, 64).unwrap();
        let config = SolverConfig {
            element_count: 64,
            window: KWindow::real(0.7, 1.0),
            ..SolverConfig::default()
        };
        let found = find_closed_eigenvalues(&g, &config).unwrap();
        assert_eq!(found.len(), 1);
        let expect = 2.404_825_557_695_773 / 2.825;
        assert!((found[0].k.re - expect).abs() < 1e-5 * expect);
        assert_eq!(found[0].k.im, 0.0);
    }

    #[test]
    fn closed_window_must_touch_real_axis() {
        let g = discretize_boundary(0.0, 32).unwrap();
        let config = SolverConfig {
            element_count: 32,
            window: KWindow { re_min: 1.0, re_max: 2.0, im_min: -0.5, im_max: -0.1 },
            ..SolverConfig::default()
        };
        assert!(find_closed_eigenvalues(&g, &config).is_err());
    }

    #[test]
    fn degenerate_doublet_reports_both_directions() {
        let g = discretize_boundary(0.0, 64).unwrap();
        let config = SolverConfig {
            element_count: 64,
            window: KWindow::real(1.2, 1.5),
            parity: Parity::None,
            ..SolverConfig::default()
        };
        // j_{1,1} = 3.8317 -> k = 1.3564, a +-1 doublet
        let found = find_closed_eigenvalues(&g, &config).unwrap();
        assert_eq!(found.len(), 2);
        assert_eq!(found[0].k, found[1].k);
    }

    #[test]
    fn phase_is_fixed() {
        let mut v = vec![Complex64::new(0.0, 2.0), Complex64::new(1.0, 0.0)];
        fix_phase(&mut v);
        assert!((v[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }
}
