//! Two-level effective non-Hermitian Hamiltonian.
//!
//! ```text
//! H = | eta_11 + delta_11    delta'          |
//!     | delta'               eta_22 + delta_22 |
//! ```
//!
//! with real `eta_jj`, complex self-energies `delta_jj` and a real coupling
//! `delta'`. The eigenvalues are `zeta_pm = (omega_1 + omega_2)/2 +- d` with
//! `omega_j = eta_jj + delta_jj` and `d^2 = (omega_1 - omega_2)^2/4 + delta'^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complex_serde;
use crate::error::{CavityError, Result};

/// Default half-width of the boundary band in [`classify_regime`].
pub const DEFAULT_REGIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelHamiltonian {
    pub eta_11: f64,
    pub eta_22: f64,
    #[serde(with = "complex_serde")]
    pub delta_11: Complex64,
    #[serde(with = "complex_serde")]
    pub delta_22: Complex64,
    pub delta_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Strong,
    Weak,
    Boundary,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Strong => "strong",
            Regime::Weak => "weak",
            Regime::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelEigenvalues {
    #[serde(with = "complex_serde")]
    pub zeta_plus: Complex64,
    #[serde(with = "complex_serde")]
    pub zeta_minus: Complex64,
    #[serde(with = "complex_serde")]
    pub d: Complex64,
    pub regime: Regime,
}

impl TwoLevelHamiltonian {
    pub fn new(
        eta_11: f64,
        eta_22: f64,
        delta_11: Complex64,
        delta_22: Complex64,
        delta_prime: f64,
    ) -> Self {
        Self { eta_11, eta_22, delta_11, delta_22, delta_prime }
    }

    /// Builds a Hamiltonian directly from the diagonal energies `omega_j`,
    /// putting the real parts into `eta_jj` and the imaginary parts into `delta_jj`.
    pub fn from_omegas(omega_1: Complex64, omega_2: Complex64, delta_prime: f64) -> Self {
        Self {
            eta_11: omega_1.re,
            eta_22: omega_2.re,
            delta_11: Complex64::new(0.0, omega_1.im),
            delta_22: Complex64::new(0.0, omega_2.im),
            delta_prime,
        }
    }

    pub fn omega_1(&self) -> Complex64 {
        self.eta_11 + self.delta_11
    }

    pub fn omega_2(&self) -> Complex64 {
        self.eta_22 + self.delta_22
    }

    /// Row-major entries of the explicit 2x2 matrix.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let c = Complex64::new(self.delta_prime, 0.0);
        [[self.omega_1(), c], [c, self.omega_2()]]
    }

    /// Signed distance `2 delta' - |Im omega_1 - Im omega_2|` from the
    /// strong/weak boundary.
    pub fn coupling_margin(&self) -> f64 {
        2.0 * self.delta_prime - (self.omega_1().im - self.omega_2().im).abs()
    }
}

/// Squared half-splitting `d^2 = (omega_1 - omega_2)^2 / 4 + delta'^2`.
///
/// Vanishes at an exceptional point, and also in the diabolic case
/// `omega_1 = omega_2`, `delta' = 0` where the matrix stays diagonalizable.
pub fn exceptional_point_gap(h: &TwoLevelHamiltonian) -> Complex64 {
    let half = (h.omega_1() - h.omega_2()) * 0.5;
    half * half + h.delta_prime * h.delta_prime
}

/// Closed-form eigenvalues; `zeta_plus` carries the principal-branch `+d`.
pub fn eigenvalues(h: &TwoLevelHamiltonian) -> TwoLevelEigenvalues {
    let mean = (h.omega_1() + h.omega_2()) * 0.5;
    let d = exceptional_point_gap(h).sqrt();
    let regime = classify_margin(h.coupling_margin(), DEFAULT_REGIME_TOL);
    TwoLevelEigenvalues { zeta_plus: mean + d, zeta_minus: mean - d, d, regime }
}

/// Strong when `2 delta' - |Im omega_1 - Im omega_2| > tol`, weak when it is
/// below `-tol`, boundary otherwise.
pub fn classify_regime(h: &TwoLevelHamiltonian, tol: f64) -> Result<Regime> {
    if !(tol >= 0.0) {
        return Err(CavityError::Domain(format!("tolerance must be non-negative, got {tol}")));
    }
    Ok(classify_margin(h.coupling_margin(), tol))
}

fn classify_margin(margin: f64, tol: f64) -> Regime {
    if margin > tol {
        Regime::Strong
    } else if margin < -tol {
        Regime::Weak
    } else {
        Regime::Boundary
    }
}
