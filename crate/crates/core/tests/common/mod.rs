//! Reference values computed independently of the library's special
//! functions and solvers: Bessel functions from their integral
//! representations, zeros by bisection, an adaptive perimeter quadrature and
//! a complex Newton iteration on the circular-cavity TM equation.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64 as C;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre (16 points per panel) of a complex integrand.
pub fn integrate(f: impl Fn(f64) -> C, a: f64, b: f64, panels: usize) -> C {
    let gl = gauss_legendre(16);
    let h = (b - a) / panels as f64;
    let mut acc = C::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in &gl {
            acc += f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    acc
}

/// `J_m(z) = (1/2pi) int_0^{2pi} cos(m t - z sin t) dt`; the trapezoidal rule
/// is spectrally accurate for this periodic integrand.
pub fn bessel_j(m: i32, z: C) -> C {
    let n = 256;
    let mut acc = C::new(0.0, 0.0);
    for j in 0..n {
        let t = 2.0 * PI * j as f64 / n as f64;
        acc += (C::new(0.0, m as f64 * t) - C::i() * z * t.sin()).exp();
    }
    // the imaginary-exponent sum gives the cosine average exactly for integer m
    acc / n as f64
}

/// Integer-order `Y_m(z)` for `Re z > 0`:
/// `(1/pi) int_0^pi sin(z sin t - m t) dt - (1/pi) int_0^inf (e^{mt} + (-1)^m e^{-mt}) e^{-z sinh t} dt`.
pub fn bessel_y(m: i32, z: C) -> C {
    assert!(z.re > 0.0);
    let first = integrate(|t| (z * t.sin() - m as f64 * t).sin(), 0.0, PI, 64);
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mf = m as f64;
    // upper limit where the integrand is below e^-45 of its scale
    let mut t_max: f64 = 1.0;
    while z.re * t_max.sinh() - mf.abs() * t_max < 45.0 {
        t_max += 0.25;
    }
    let second = integrate(|t| ((mf * t).exp() + sign * (-mf * t).exp()) * (-z * t.sinh()).exp(), 0.0, t_max, 400);
    (first - second) / PI
}

pub fn hankel1(m: i32, z: C) -> C {
    bessel_j(m, z) + C::i() * bessel_y(m, z)
}

fn real_j(m: i32, x: f64) -> f64 {
    bessel_j(m, C::new(x, 0.0)).re
}

/// l-th positive zero of J_m by a sign scan and bisection.
pub fn bessel_zero(m: i32, l: usize) -> f64 {
    let step = 0.05;
    let mut x = if m == 0 { step } else { m as f64 };
    let mut f = real_j(m, x);
    let mut count = 0;
    loop {
        let (x1, f1) = (x + step, real_j(m, x + step));
        if f.signum() != f1.signum() {
            count += 1;
            if count == l {
                let (mut lo, mut hi, mut flo) = (x, x1, f);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = real_j(m, mid);
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-14 {
                        break;
                    }
                }
                return 0.5 * (lo + hi);
            }
        }
        x = x1;
        f = f1;
    }
}

/// `n J_m'(nk) H_m(k) - J_m(nk) H_m'(k)`, scaled by `1 / (J_m(nk) H_m(k))`.
pub fn tm_equation(m: i32, n: f64, k: C) -> C {
    let nk = k * n;
    let j = bessel_j(m, nk);
    let jp = (bessel_j(m - 1, nk) - bessel_j(m + 1, nk)) * 0.5;
    let h = hankel1(m, k);
    let hp = (hankel1(m - 1, k) - hankel1(m + 1, k)) * 0.5;
    n * jp / j - hp / h
}

/// Newton iteration with a central-difference derivative.
pub fn tm_root(m: i32, n: f64, start: C) -> C {
    let mut k = start;
    for _ in 0..50 {
        let f = tm_equation(m, n, k);
        let h = 1e-6;
        let df = (tm_equation(m, n, k + h) - tm_equation(m, n, k - h)) / (2.0 * h);
        let dk = f / df;
        k -= dk;
        if dk.norm() < 1e-13 * k.norm() {
            break;
        }
    }
    k
}

/// Ellipse perimeter by adaptive Simpson on the quarter arc.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let speed = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (lo, hi) = (0.0, PI / 2.0);
    let (fa, fm, fb) = (speed(lo), speed(0.25 * PI), speed(hi));
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    4.0 * simpson(&speed, lo, hi, fa, fm, fb, whole, 1e-14, 40)
}

/// Prints and returns one acceptance-style line.
pub fn report(name: &str, pass: bool, detail: &str) -> bool {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
