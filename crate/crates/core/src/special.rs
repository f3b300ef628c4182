//! Bessel and Hankel function helpers.
//!
//! Values come from `complex-bessel` (an Amos port); this module adds the
//! paired evaluations the layer potentials need and a tabulated Hankel
//! interpolant for the many same-wavenumber evaluations of field
//! reconstruction.

use complex_bessel::{besselj_seq, hankel1_seq, Scaling};
use num_complex::Complex64;

/// `(H_0^(1)(z), H_1^(1)(z))`.
///
/// Panics if `z` is zero or non-finite; callers never evaluate the kernels there.
#[inline]
pub fn hankel01(z: Complex64) -> (Complex64, Complex64) {
    let r = hankel1_seq(0.0, z, 2, Scaling::Unscaled)
        .unwrap_or_else(|e| panic!("Hankel evaluation failed at z = {z}: {e:?}"));
    (r.values[0], r.values[1])
}

/// `(J_0(z), J_1(z))`.
#[inline]
pub fn bessel_j01(z: Complex64) -> (Complex64, Complex64) {
    let r = besselj_seq(0.0, z, 2, Scaling::Unscaled)
        .unwrap_or_else(|e| panic!("Bessel evaluation failed at z = {z}: {e:?}"));
    (r.values[0], r.values[1])
}

/// `J_{m-1}(z), J_m(z), J_{m+1}(z)` for integer `m >= 0`.
pub fn bessel_j_triplet(m: u32, z: Complex64) -> [Complex64; 3] {
    if m == 0 {
        let r = besselj_seq(0.0, z, 2, Scaling::Unscaled).expect("Bessel J");
        // J_{-1} = -J_1
        [-r.values[1], r.values[0], r.values[1]]
    } else {
        let r = besselj_seq(m as f64 - 1.0, z, 3, Scaling::Unscaled).expect("Bessel J");
        [r.values[0], r.values[1], r.values[2]]
    }
}

/// `H_{m-1}(z), H_m(z), H_{m+1}(z)` (first kind) for integer `m >= 0`.
pub fn hankel_triplet(m: u32, z: Complex64) -> [Complex64; 3] {
    if m == 0 {
        let (h0, h1) = hankel01(z);
        [-h1, h0, h1]
    } else {
        let r = hankel1_seq(m as f64 - 1.0, z, 3, Scaling::Unscaled).expect("Hankel H");
        [r.values[0], r.values[1], r.values[2]]
    }
}

/// `J_m(x)` for real argument.
pub fn bessel_j_real(m: u32, x: f64) -> f64 {
    bessel_j_triplet(m, Complex64::new(x, 0.0))[1].re
}

/// Cubic-Hermite table of `H_0^(1)(kappa r)` and `H_1^(1)(kappa r)` over
/// `r in [r_min, r_max]` for a fixed complex wavenumber `kappa`.
///
/// Outside the tabulated range the functions are evaluated directly.
#[derive(Debug, Clone)]
pub struct HankelTable {
    kappa: Complex64,
    r_min: f64,
    step: f64,
    // per node: H0, dH0/dr, H1, dH1/dr
    nodes: Vec<[Complex64; 4]>,
}

impl HankelTable {
    /// Node spacing is chosen so that `|kappa| * step <= 0.01`. Below
    /// `|kappa r| = 1` the singular behaviour of `H_1` defeats the cubic, so
    /// the table starts at `max(r_min, 1 / |kappa|)`; the interpolation error
    /// is then below 1e-9 relative.
    pub fn new(kappa: Complex64, r_min: f64, r_max: f64) -> Self {
        assert!(r_min > 0.0 && r_max > r_min, "bad table range [{r_min}, {r_max}]");
        let r_min = r_min.max(1.0 / kappa.norm()).min(0.5 * r_max);
        let target = 0.01 / kappa.norm().max(1e-3);
        let count = ((r_max - r_min) / target).ceil().max(2.0) as usize;
        let step = (r_max - r_min) / count as f64;
        let nodes = (0..=count)
            .map(|i| {
                let r = r_min + i as f64 * step;
                let z = kappa * r;
                let (h0, h1) = hankel01(z);
                [h0, -kappa * h1, h1, kappa * (h0 - h1 / z)]
            })
            .collect();
        Self { kappa, r_min, step, nodes }
    }

    pub fn kappa(&self) -> Complex64 {
        self.kappa
    }

    /// `(H_0(kappa r), H_1(kappa r))`.
    #[inline]
    pub fn eval(&self, r: f64) -> (Complex64, Complex64) {
        let s = (r - self.r_min) / self.step;
        if !(s >= 0.0) || s >= (self.nodes.len() - 1) as f64 {
            return hankel01(self.kappa * r);
        }
        let i = s as usize;
        let t = s - i as f64;
        let a = &self.nodes[i];
        let b = &self.nodes[i + 1];
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = (t3 - 2.0 * t2 + t) * self.step;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = (t3 - t2) * self.step;
        let f0 = a[0] * h00 + a[1] * h10 + b[0] * h01 + b[1] * h11;
        let f1 = a[2] * h00 + a[3] * h10 + b[2] * h01 + b[3] * h11;
        (f0, f1)
    }
}
