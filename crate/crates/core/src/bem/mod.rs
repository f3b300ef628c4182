//! Boundary element solver for the Helmholtz equation `lap psi + n^2 k^2 psi = 0`
//! on the elliptic cavity.
//!
//! Two boundary conditions are supported:
//!
//! * [`Kind::Closed`]: Dirichlet `psi = 0` on the boundary. Eigenvalues are the
//!   real `k` for which the single-layer operator at interior wavenumber `n k`
//!   is singular.
//! * [`Kind::Open`]: TM dielectric cavity in vacuum, with `psi` and its normal
//!   derivative continuous across the boundary and an outgoing exterior
//!   field. Resonances are complex `k` with `Im k < 0`.
//!
//! Both share one discretization: constant elements collocated at their
//! midpoints (see [`assembly`]).

pub mod assembly;
pub mod cache;
pub mod circle;
pub mod field;
pub mod roots;
pub mod solve;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complex_serde;
use crate::error::{CavityError, Result};
use crate::geometry::CavityGeometry;

pub use assembly::characteristic_matrix;
pub use field::{field_at_points, interior_field};
pub use solve::{find_closed_eigenvalues, find_open_resonances, OpenSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Closed,
    Open,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kind::Closed => "closed",
            Kind::Open => "open",
        })
    }
}

/// Mirror symmetry class of a mode: signs under `x -> -x` and `y -> -y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Parity {
    /// No symmetry reduction; the full `M`-element problem is solved.
    None,
    /// Even under both reflections (contains `cos(m theta)` for even `m`).
    #[default]
    EvenEven,
    EvenOdd,
    OddEven,
    /// Odd under both reflections (contains `sin(m theta)` for even `m`).
    OddOdd,
}

impl Parity {
    /// `(sign under x -> -x, sign under y -> -y)`; `None` for the unreduced problem.
    pub fn signs(self) -> Option<(f64, f64)> {
        match self {
            Parity::None => None,
            Parity::EvenEven => Some((1.0, 1.0)),
            Parity::EvenOdd => Some((1.0, -1.0)),
            Parity::OddEven => Some((-1.0, 1.0)),
            Parity::OddOdd => Some((-1.0, -1.0)),
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = CavityError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "none" | "full" => Ok(Parity::None),
            "eveneven" | "ee" => Ok(Parity::EvenEven),
            "evenodd" | "eo" => Ok(Parity::EvenOdd),
            "oddeven" | "oe" => Ok(Parity::OddEven),
            "oddodd" | "oo" => Ok(Parity::OddOdd),
            _ => Err(CavityError::Parse(format!("unknown parity {s:?}"))),
        }
    }
}

/// Rectangle in the complex `k` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl KWindow {
    pub fn real(re_min: f64, re_max: f64) -> Self {
        Self { re_min, re_max, im_min: 0.0, im_max: 0.0 }
    }

    pub fn contains(&self, k: Complex64) -> bool {
        k.re >= self.re_min && k.re <= self.re_max && k.im >= self.im_min && k.im <= self.im_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Interior refractive index; the exterior is vacuum.
    pub refractive_index: f64,
    pub element_count: usize,
    pub window: KWindow,
    /// Seeds per unit of real `k`.
    pub scan_density_re: f64,
    /// Seeds per unit of imaginary `k`.
    pub scan_density_im: f64,
    /// Convergence tolerance on `|delta k|`.
    pub root_tol: f64,
    pub max_iterations: usize,
    pub parity: Parity,
    /// Largest accepted `sigma_min / sigma_max` of the characteristic matrix at a root.
    pub accept_threshold: f64,
    /// Deepest decay rate searched, `Im k >= -max_decay`.
    pub max_decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            refractive_index: 2.825,
            element_count: 128,
            window: KWindow { re_min: 8.0, re_max: 10.0, im_min: -0.2, im_max: 0.0 },
            scan_density_re: 40.0,
            scan_density_im: 10.0,
            root_tol: 1e-9,
            max_iterations: 60,
            parity: Parity::EvenEven,
            accept_threshold: 1e-3,
            max_decay: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.refractive_index;
        if !(n > 1.0) || !n.is_finite() {
            return Err(CavityError::Config(format!("refractive index must exceed 1, got {n}")));
        }
        if !(self.root_tol > 0.0) {
            return Err(CavityError::Config("root_tol must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(CavityError::Config("max_iterations must be positive".into()));
        }
        let w = &self.window;
        if !(w.re_min > 0.0) || !(w.re_max > w.re_min) {
            return Err(CavityError::Config(format!(
                "real k window must satisfy 0 < min < max, got [{}, {}]",
                w.re_min, w.re_max
            )));
        }
        if !(w.im_max >= w.im_min) {
            return Err(CavityError::Config(format!(
                "imaginary k window is empty: [{}, {}]",
                w.im_min, w.im_max
            )));
        }
        if !(self.scan_density_re > 0.0) || !(self.scan_density_im > 0.0) {
            return Err(CavityError::Config("scan densities must be positive".into()));
        }
        if !(self.accept_threshold > 0.0) {
            return Err(CavityError::Config("accept_threshold must be positive".into()));
        }
        if self.element_count < crate::geometry::MIN_ELEMENTS {
            return Err(CavityError::Config(format!(
                "element_count must be at least {}",
                crate::geometry::MIN_ELEMENTS
            )));
        }
        if self.parity != Parity::None && self.element_count % 4 != 0 {
            return Err(CavityError::Config(format!(
                "symmetry-reduced solves need element_count divisible by 4, got {}",
                self.element_count
            )));
        }
        Ok(())
    }

    pub fn with_window(mut self, window: KWindow) -> Self {
        self.window = window;
        self
    }
}

/// Boundary data of a mode over all `M` elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDensity {
    /// `psi` on the boundary (identically zero for closed modes).
    #[serde(with = "complex_serde::vec")]
    pub trace: Vec<Complex64>,
    /// Outward normal derivative of the interior field.
    #[serde(with = "complex_serde::vec")]
    pub normal_derivative: Vec<Complex64>,
}

/// One eigen-solution of the closed or open problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    #[serde(with = "complex_serde")]
    pub k: Complex64,
    pub kind: Kind,
    pub parity: Parity,
    /// `sigma_min / sigma_max` of the characteristic matrix at `k`.
    pub residual: f64,
    pub density: BoundaryDensity,
}

impl Resonance {
    /// Wavenumber inside the cavity, `n k`.
    pub fn interior_wavenumber(&self, refractive_index: f64) -> Complex64 {
        self.k * refractive_index
    }
}

/// Rejects geometries whose discretization disagrees with the configuration.
pub(crate) fn check_geometry(geometry: &CavityGeometry, config: &SolverConfig) -> Result<()> {
    if geometry.element_count() != config.element_count {
        return Err(CavityError::Config(format!(
            "geometry has {} elements but the solver is configured for {}",
            geometry.element_count(),
            config.element_count
        )));
    }
    Ok(())
}
