//! Relative entropy, Shannon entropies and Lamb shifts between the open
//! (`P`) and closed (`Q`) mode patterns. All logarithms are natural.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CavityError, Result};
use crate::mode_field::ProbabilityGrid;
use crate::summation::neumaier_sum;
use crate::two_level::Regime;

/// Default mixing fraction for [`floored`].
pub const DEFAULT_FLOOR: f64 = 1e-9;

pub const CSV_HEADER: &str = "epsilon,level,regime,d_kl,e_open,e_closed,delta_e,lamb_shift,lambda,re_zeta,im_zeta";

/// `sum_j P_j ln(P_j / Q_j)`, with `0 ln(0 / q) = 0`.
pub fn kl_divergence(p: &ProbabilityGrid, q: &ProbabilityGrid) -> Result<f64> {
    p.check_same_mesh(q)?;
    let (pp, qq) = (p.probabilities(), q.probabilities());
    if let Some(cell) = (0..pp.len()).find(|&j| pp[j] > 0.0 && qq[j] == 0.0) {
        return Err(CavityError::InfiniteDivergence { cell, p: pp[cell] });
    }
    let terms = pp.iter().zip(qq).map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 });
    // Gibbs: rounding may leave a tiny negative value
    Ok(neumaier_sum(terms).max(0.0))
}

/// `(1 - f) Q + f / N`, renormalized.
pub fn floored(q: &ProbabilityGrid, fraction: f64) -> Result<ProbabilityGrid> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CavityError::Domain(format!("floor fraction must be in [0, 1], got {fraction}")));
    }
    let n = q.len() as f64;
    let mixed: Vec<f64> = q.probabilities().iter().map(|&v| (1.0 - fraction) * v + fraction / n).collect();
    let total = neumaier_sum(mixed.iter().copied());
    ProbabilityGrid::from_probabilities(q.layout(), mixed.into_iter().map(|v| v / total).collect())
}

/// [`kl_divergence`] against the floored reference.
pub fn kl_divergence_floored(p: &ProbabilityGrid, q: &ProbabilityGrid, fraction: f64) -> Result<f64> {
    kl_divergence(p, &floored(q, fraction)?)
}

/// `-sum_j P_j ln P_j`, with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &ProbabilityGrid) -> f64 {
    let h = neumaier_sum(p.probabilities().iter().map(|&v| if v > 0.0 { -v * v.ln() } else { 0.0 }));
    h.clamp(0.0, (p.len() as f64).ln())
}

/// `E(P) - E(Q)`; may be negative.
pub fn entropy_difference(p: &ProbabilityGrid, q: &ProbabilityGrid) -> Result<f64> {
    p.check_same_mesh(q)?;
    Ok(shannon_entropy(p) - shannon_entropy(q))
}

/// `L = lambda - Re zeta`.
pub fn lamb_shift(lambda_closed: f64, zeta_open: Complex64) -> f64 {
    lambda_closed - zeta_open.re
}

/// Diagnostics for one level at one deformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub epsilon: f64,
    pub level: usize,
    pub regime: Option<Regime>,
    pub d_kl: f64,
    pub e_open: f64,
    pub e_closed: f64,
    pub delta_e: f64,
    pub lamb_shift: f64,
    pub lambda: f64,
    pub re_zeta: f64,
    pub im_zeta: f64,
    /// Whether the closed pattern had to be floored before the divergence.
    #[serde(default)]
    pub floored: bool,
}

impl EntropyReport {
    /// Builds a report from the open (`p`) and closed (`q`) patterns. If `q`
    /// vanishes where `p` does not, the divergence is taken against the
    /// floored `q` with the given fraction.
    pub fn compute(
        epsilon: f64,
        level: usize,
        p: &ProbabilityGrid,
        q: &ProbabilityGrid,
        lambda: f64,
        zeta: Complex64,
        floor_fraction: f64,
    ) -> Result<Self> {
        let (d_kl, floored) = match kl_divergence(p, q) {
            Ok(d) => (d, false),
            Err(CavityError::InfiniteDivergence { .. }) => (kl_divergence_floored(p, q, floor_fraction)?, true),
            Err(e) => return Err(e),
        };
        let e_open = shannon_entropy(p);
        let e_closed = shannon_entropy(q);
        Ok(Self {
            epsilon,
            level,
            regime: None,
            d_kl,
            e_open,
            e_closed,
            delta_e: e_open - e_closed,
            lamb_shift: lamb_shift(lambda, zeta),
            lambda,
            re_zeta: zeta.re,
            im_zeta: zeta.im,
            floored,
        })
    }

    pub fn csv_row(&self) -> String {
        let regime = self.regime.map_or_else(String::new, |r| r.to_string());
        format!(
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.epsilon,
            self.level,
            regime,
            self.d_kl,
            self.e_open,
            self.e_closed,
            self.delta_e,
            self.lamb_shift,
            self.lambda,
            self.re_zeta,
            self.im_zeta
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(v: &[f64]) -> ProbabilityGrid {
        ProbabilityGrid::from_probabilities(1, v.to_vec()).unwrap()
    }

    #[test]
    fn hand_values() {
        let p = grid(&[1.0, 0.0]);
        let q = grid(&[0.5, 0.5]);
        assert!((kl_divergence(&p, &q).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!(matches!(kl_divergence(&q, &p), Err(CavityError::InfiniteDivergence { cell: 1, .. })));
        let h = shannon_entropy(&grid(&[0.5, 0.25, 0.25]));
        assert!((h - 1.039_720_770_839_917_9).abs() < 1e-15);
        assert_eq!(shannon_entropy(&grid(&[0.0, 1.0, 0.0])), 0.0);
        assert!((lamb_shift(10.0, Complex64::new(9.8, -0.05)) - 0.2).abs() < 1e-14);
        assert_eq!(lamb_shift(9.8, Complex64::new(9.8, -0.05)), 0.0);
    }

    #[test]
    fn floored_reverse_is_finite_and_asymmetric() {
        let p = grid(&[1.0, 0.0]);
        let q = grid(&[0.5, 0.5]);
        let reverse = kl_divergence_floored(&q, &p, DEFAULT_FLOOR).unwrap();
        assert!(reverse.is_finite() && reverse > 1.0);
        assert!((reverse - kl_divergence(&p, &q).unwrap()).abs() > 1.0);
    }

    #[test]
    fn mismatched_meshes() {
        let p = ProbabilityGrid::from_probabilities(1, vec![0.5, 0.5]).unwrap();
        let q = ProbabilityGrid::from_probabilities(2, vec![0.5, 0.5]).unwrap();
        assert!(matches!(kl_divergence(&p, &q), Err(CavityError::MeshMismatch(_))));
        assert!(entropy_difference(&p, &q).is_err());
    }

    #[test]
    fn uniform_and_point_mass() {
        let n = 64;
        let u = grid(&vec![1.0 / n as f64; n]);
        assert!((shannon_entropy(&u) - (n as f64).ln()).abs() < 1e-13);
        let mut pm = vec![0.0; n];
        pm[5] = 1.0;
        let pm = grid(&pm);
        assert!((entropy_difference(&u, &pm).unwrap() - (n as f64).ln()).abs() < 1e-13);
    }

    #[test]
    fn report_and_csv() {
        let p = grid(&[0.25, 0.75]);
        let q = grid(&[0.5, 0.5]);
        let r = EntropyReport::compute(0.1, 1, &p, &q, 9.3, Complex64::new(8.7, -0.07), DEFAULT_FLOOR).unwrap();
        assert!((r.delta_e - (r.e_open - r.e_closed)).abs() < 1e-12);
        assert!(!r.floored);
        assert_eq!(r.csv_row().split(',').count(), CSV_HEADER.split(',').count());
        let r = EntropyReport::compute(0.1, 2, &q, &grid(&[1.0, 0.0]), 9.3, Complex64::new(8.7, -0.07), DEFAULT_FLOOR)
            .unwrap();
        assert!(r.floored && r.d_kl.is_finite());
    }

    fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(1e-6f64..1.0, n).prop_map(|v| {
            let s: f64 = neumaier_sum(v.iter().copied());
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn gibbs_inequality(p in distribution(40), q in distribution(40)) {
            let (p, q) = (grid(&p), grid(&q));
            prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
            prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-10);
        }

        #[test]
        fn uniform_reference_identity(p in distribution(64)) {
            let p = grid(&p);
            let u = grid(&[1.0 / 64.0; 64]);
            let lhs = kl_divergence(&p, &u).unwrap();
            prop_assert!((lhs - (64f64.ln() - shannon_entropy(&p))).abs() < 1e-10);
            prop_assert!((lhs + entropy_difference(&p, &u).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn entropy_bounds(p in distribution(30)) {
            let h = shannon_entropy(&grid(&p));
            prop_assert!(h >= 0.0 && h <= 30f64.ln());
        }

        #[test]
        fn floor_shift_is_first_order(p in distribution(50), q in distribution(50)) {
            // |ln(q_f / q)| <= f |1 / (N q) - 1| / (1 - f); the 1e-6 bound on
            // real sweep fields is checked in the tracking tests
            let (pv, qv) = (p.clone(), q.clone());
            let (p, q) = (grid(&p), grid(&q));
            let a = kl_divergence(&p, &q).unwrap();
            let b = kl_divergence_floored(&p, &q, DEFAULT_FLOOR).unwrap();
            let bound: f64 = pv.iter().zip(&qv).map(|(p, q)| p * (1.0 / (50.0 * q) + 1.0)).sum::<f64>() * 2.0 * DEFAULT_FLOOR;
            prop_assert!((a - b).abs() <= bound + 1e-14, "{} vs bound {}", (a - b).abs(), bound);
        }
    }
}
