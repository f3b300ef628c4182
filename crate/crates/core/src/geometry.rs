//! Area-preserving elliptic cavities and their boundary discretization.
//!
//! The family is parameterized by a deformation `epsilon >= 0` with semi-axes
//! `a = 1 + epsilon` and `b = 1 / (1 + epsilon)`, so the enclosed area is
//! always `pi`. Lengths are in units of the radius of the undeformed circle.

use std::f64::consts::TAU;

use crate::error::{CavityError, Result};

/// Smallest element count accepted by [`discretize_boundary`].
pub const MIN_ELEMENTS: usize = 16;

/// One constant boundary element: collocation point, outward normal and
/// arclength weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryElement {
    /// Elliptic angle of the collocation point.
    pub parameter: f64,
    pub position: [f64; 2],
    /// Unit outward normal.
    pub normal: [f64; 2],
    /// Arclength carried by the element.
    pub weight: f64,
    /// Signed curvature at the collocation point (positive for the convex ellipse).
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityGeometry {
    pub epsilon: f64,
    pub major_axis: f64,
    pub minor_axis: f64,
    pub elements: Vec<BoundaryElement>,
}

/// Semi-axes `(a, b) = (1 + epsilon, 1 / (1 + epsilon))`.
pub fn ellipse_axes(epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(CavityError::Domain(format!(
            "deformation parameter must be finite and non-negative, got {epsilon}"
        )));
    }
    let a = 1.0 + epsilon;
    Ok((a, 1.0 / a))
}

/// Discretizes the ellipse boundary into `element_count` constant elements
/// with collocation points uniformly spaced in the elliptic angle.
///
/// Element `i` sits at `t_i = (i + 1/2) 2pi / M`, so the element set is
/// mapped onto itself by both axis reflections. Elements run
/// counterclockwise.
pub fn discretize_boundary(epsilon: f64, element_count: usize) -> Result<CavityGeometry> {
    let (a, b) = ellipse_axes(epsilon)?;
    if element_count < MIN_ELEMENTS {
        return Err(CavityError::Config(format!(
            "element_count must be at least {MIN_ELEMENTS}, got {element_count}"
        )));
    }
    let dt = TAU / element_count as f64;
    let elements = (0..element_count)
        .map(|i| {
            let t = (i as f64 + 0.5) * dt;
            element_at(a, b, t, dt)
        })
        .collect();
    Ok(CavityGeometry { epsilon, major_axis: a, minor_axis: b, elements })
}

fn element_at(a: f64, b: f64, t: f64, dt: f64) -> BoundaryElement {
    let (s, c) = t.sin_cos();
    let speed = (a * a * s * s + b * b * c * c).sqrt();
    BoundaryElement {
        parameter: t,
        position: [a * c, b * s],
        normal: [b * c / speed, a * s / speed],
        weight: speed * dt,
        curvature: a * b / (speed * speed * speed),
    }
}

impl CavityGeometry {
    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    /// Sum of the element weights, i.e. the discrete perimeter.
    pub fn perimeter(&self) -> f64 {
        self.elements.iter().map(|e| e.weight).sum()
    }

    /// Boundary point at elliptic angle `t`.
    pub fn point_at(&self, t: f64) -> [f64; 2] {
        [self.major_axis * t.cos(), self.minor_axis * t.sin()]
    }

    /// Element data at an arbitrary angle for a parameter step `dt`; used when
    /// the boundary is resampled more finely than the solver grid.
    pub fn sample(&self, t: f64, dt: f64) -> BoundaryElement {
        element_at(self.major_axis, self.minor_axis, t, dt)
    }

    /// Value of `(x/a)^2 + (y/b)^2`; below one means inside.
    pub fn level(&self, p: [f64; 2]) -> f64 {
        let u = p[0] / self.major_axis;
        let v = p[1] / self.minor_axis;
        u * u + v * v
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.level(p) < 1.0
    }

    /// Index of the mirror image of element `i` under `x -> -x`.
    pub fn mirror_x(&self, i: usize) -> usize {
        let m = self.elements.len();
        (m + m / 2 - 1 - i) % m
    }

    /// Index of the mirror image of element `i` under `y -> -y`.
    pub fn mirror_y(&self, i: usize) -> usize {
        self.elements.len() - 1 - i
    }

    /// Index of the image of element `i` under inversion through the center.
    pub fn mirror_xy(&self, i: usize) -> usize {
        self.mirror_x(self.mirror_y(i))
    }
}
