//! Scalar root finding and minimization used by the solver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CavityError, Result};

/// `ln det A` from an LU factorization. Only the real part and the phase
/// modulo `2 pi` are meaningful.
pub fn log_det(a: &DMatrix<Complex64>) -> Complex64 {
    let lu = a.clone().lu();
    let u = lu.u();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..u.nrows() {
        acc += u[(i, i)].ln();
    }
    // each row swap flips the sign
    let swaps = lu.p().len();
    if swaps % 2 == 1 {
        acc += Complex64::new(0.0, std::f64::consts::PI);
    }
    acc
}

/// The two smallest singular values with their right singular vectors.
#[derive(Debug, Clone)]
pub struct SingularSummary {
    pub sigma_min: f64,
    pub sigma_second: f64,
    pub sigma_max: f64,
    pub null_vector: DVector<Complex64>,
    pub second_vector: DVector<Complex64>,
}

impl SingularSummary {
    /// `sigma_min / sigma_max`.
    pub fn relative_min(&self) -> f64 {
        self.sigma_min / self.sigma_max
    }
}

pub fn singular_summary(a: &DMatrix<Complex64>) -> Result<SingularSummary> {
    let svd = a.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| CavityError::NoConvergence("SVD did not return singular vectors".into()))?;
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let row = |i: usize| -> DVector<Complex64> { v_t.row(i).transpose().map(|z| z.conj()) };
    let (i0, i1) = (order[0], order[1.min(order.len() - 1)]);
    Ok(SingularSummary {
        sigma_min: s[i0],
        sigma_second: s[i1],
        sigma_max: s[order[order.len() - 1]],
        null_vector: row(i0),
        second_vector: row(i1),
    })
}

/// Smallest singular value only.
pub fn sigma_min(a: &DMatrix<Complex64>) -> f64 {
    a.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Muller's method from three starting points.
///
/// Returns the root and the number of iterations used. Fails with
/// [`CavityError::NoConvergence`] after `max_iterations` or on a non-finite
/// iterate.
pub fn muller<F>(
    mut f: F,
    start: [Complex64; 3],
    tol: f64,
    max_iterations: usize,
) -> Result<(Complex64, usize)>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let [mut x0, mut x1, mut x2] = start;
    let mut f0 = f(x0)?;
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for it in 1..=max_iterations {
        let h1 = x1 - x0;
        let h2 = x2 - x1;
        let d1 = (f1 - f0) / h1;
        let d2 = (f2 - f1) / h2;
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc = (b * b - a * f2 * 4.0).sqrt();
        let den = if (b + disc).norm() >= (b - disc).norm() { b + disc } else { b - disc };
        let step = if den.norm() == 0.0 {
            // flat: nudge instead of dividing by zero
            h2 * 0.5
        } else {
            -f2 * 2.0 / den
        };
        let x3 = x2 + step;
        if !x3.re.is_finite() || !x3.im.is_finite() {
            return Err(CavityError::NoConvergence(format!("Muller iterate diverged near {x2}")));
        }
        if step.norm() <= tol {
            return Ok((x3, it));
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        x2 = x3;
        f2 = f(x2)?;
        if f2.norm() == 0.0 {
            return Ok((x2, it));
        }
    }
    Err(CavityError::NoConvergence(format!(
        "Muller iteration did not converge in {max_iterations} steps (last iterate {x2})"
    )))
}

/// Brent's minimizer on `[a, b]` to absolute tolerance `tol` in `x`.
pub fn brent_minimize<F>(mut f: F, a: f64, b: f64, tol: f64, max_iterations: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iterations {
        let xm = 0.5 * (a + b);
        let tol1 = tol * 0.5 + 1e-14 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_old = e;
            if p.abs() < (0.5 * q * e_old).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(CavityError::NoConvergence(format!(
        "minimization did not reach tolerance {tol} in {max_iterations} steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn log_det_matches_product_of_eigenvalues() {
        let a = DMatrix::from_row_slice(3, 3, &[
            c(0.0, 1.0), c(2.0, 0.0), c(0.5, 0.0),
            c(1.0, 0.0), c(0.0, 0.0), c(0.0, -1.0),
            c(0.3, 0.2), c(1.0, 1.0), c(4.0, 0.0),
        ]);
        let det = a.determinant();
        let ld = log_det(&a);
        assert!((ld.exp() - det).norm() < 1e-12 * det.norm());
    }

    #[test]
    fn muller_finds_complex_polynomial_root() {
        // (z - (2 - 0.1i)) (z + 1)
        let r = c(2.0, -0.1);
        let (root, _) = muller(|z| Ok((z - r) * (z + 1.0)), [c(1.5, 0.0), c(1.7, 0.0), c(1.9, -0.01)], 1e-13, 50).unwrap();
        assert!((root - r).norm() < 1e-12);
    }

    #[test]
    fn muller_reports_failure() {
        let e = muller(|z| Ok(z.exp()), [c(0.0, 0.0), c(0.1, 0.0), c(0.2, 0.0)], 1e-14, 5);
        assert!(matches!(e, Err(CavityError::NoConvergence(_))));
    }

    #[test]
    fn brent_on_v_shape() {
        let (x, fx) = brent_minimize(|x| Ok((x - std::f64::consts::PI).abs()), 2.0, 4.0, 1e-10, 200).unwrap();
        assert!((x - std::f64::consts::PI).abs() < 1e-9);
        assert!(fx < 1e-9);
    }

    #[test]
    fn singular_summary_orders_values() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0, 0.0), c(0.0, 1e-6), c(-2.0, 0.0)]));
        let s = singular_summary(&a).unwrap();
        assert!((s.sigma_min - 1e-6).abs() < 1e-15);
        assert!((s.sigma_second - 2.0).abs() < 1e-12);
        assert!((s.sigma_max - 3.0).abs() < 1e-12);
        assert!((s.null_vector[1].norm() - 1.0).abs() < 1e-12);
        assert!((sigma_min(&a) - 1e-6).abs() < 1e-15);
    }
}
