//! Analytic modes of the circular cavity, used to seed the deformation sweep.
//!
//! Closed: `J_m(n k) = 0`. Open (TM): continuity of `psi` and `dpsi/dr` at
//! `r = 1` between `J_m(n k r)` inside and `H_m(k r)` outside gives
//! `n J_m'(n k) H_m(k) - J_m(n k) H_m'(k) = 0`.

use num_complex::Complex64;

use super::roots::muller;
use crate::error::{CavityError, Result};
use crate::special::{bessel_j_real, bessel_j_triplet, hankel_triplet};

/// `l`-th positive zero of `J_m` (`l >= 1`).
pub fn bessel_zero(m: u32, l: u32) -> Result<f64> {
    if l == 0 {
        return Err(CavityError::Domain("radial index starts at 1".into()));
    }
    let f = |x: f64| bessel_j_real(m, x);
    // all positive zeros of J_m exceed m; spacing tends to pi from below
    let step = 0.1;
    let mut x = (m as f64).max(step);
    let mut fx = f(x);
    let mut count = 0;
    while x < m as f64 + 4.0 * (l as f64 + 2.0) * std::f64::consts::PI {
        let y = x + step;
        let fy = f(y);
        if fx == 0.0 || fx.signum() != fy.signum() {
            count += 1;
            if count == l {
                let (mut lo, mut hi, mut flo) = (x, y, fx);
                while hi - lo > 1e-15 * hi {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm == 0.0 {
                        return Ok(mid);
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
        }
        x = y;
        fx = fy;
    }
    Err(CavityError::NoConvergence(format!("zero {l} of J_{m} not bracketed")))
}

/// Left side of the TM circle equation, scaled by `1 / H_m(k)` to keep it O(1).
pub fn tm_circle_function(m: u32, n: f64, k: Complex64) -> Complex64 {
    let [jm1, jm, jp1] = bessel_j_triplet(m, k * n);
    let [hm1, hm, hp1] = hankel_triplet(m, k);
    let dj = (jm1 - jp1) * 0.5;
    let dh = (hm1 - hp1) * 0.5;
    (dj * hm * n - jm * dh) / hm
}

/// Closed-system wavenumber `k = j_{m,l} / n` of circle mode `(m, l)`.
pub fn closed_circle_mode(m: u32, l: u32, n: f64) -> Result<f64> {
    Ok(bessel_zero(m, l)? / n)
}

/// Open TM resonance of circle mode `(m, l)`: the root of the TM equation
/// whose real part lies between the Dirichlet values of `l - 1` and `l`.
pub fn open_circle_mode(m: u32, l: u32, n: f64) -> Result<Complex64> {
    let upper = bessel_zero(m, l)?;
    let lower = if l > 1 { bessel_zero(m, l - 1)? } else { m as f64 };
    let seed = Complex64::new(0.5 * (lower + upper) / n, -0.01);
    let (k, _) = muller(
        |k| Ok(tm_circle_function(m, n, k)),
        [seed - 0.01, seed + 0.01, seed],
        1e-13,
        100,
    )?;
    if !(k.im < 0.0) || k.re < lower / n - 1e-9 || k.re > upper / n + 1e-9 {
        return Err(CavityError::NoConvergence(format!(
            "TM root for (m = {m}, l = {l}) left its bracket: {k}"
        )));
    }
    Ok(k)
}
