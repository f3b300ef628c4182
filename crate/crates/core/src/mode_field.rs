//! Interior evaluation meshes, mode fields and their normalized intensities.
//!
//! Meshes are built in coordinates normalized by the semi-axes, so every
//! ellipse of the family gets the same cell layout (and, since `a b = 1`,
//! the same cell area). A cell index therefore names the same relative
//! position at every deformation, which lets patterns be compared across
//! `epsilon` during tracking.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CavityError, Result};
use crate::geometry::CavityGeometry;
use crate::summation::neumaier_sum;

pub const MIN_GRID_PER_AXIS: usize = 32;
pub const DEFAULT_GRID_PER_AXIS: usize = 200;
/// Cells are kept when `(x/a)^2 + (y/b)^2 < 1 - INTERIOR_MARGIN`.
pub const INTERIOR_MARGIN: f64 = 1e-6;
/// Intensities below this fraction of the maximum are treated as zero.
pub const INTENSITY_CLAMP: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationMesh {
    pub epsilon: f64,
    pub major_axis: f64,
    pub minor_axis: f64,
    pub grid_per_axis: usize,
    pub centers: Vec<[f64; 2]>,
    pub cell_area: f64,
    /// `(column, row)` of each cell in the bounding-box grid.
    pub grid_coords: Vec<(usize, usize)>,
    mirror_x: Vec<usize>,
    mirror_y: Vec<usize>,
    layout: u64,
}

/// FNV-1a over the normalized cell positions.
fn layout_fingerprint(normalized: impl Iterator<Item = [f64; 2]>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: i64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for [u, v] in normalized {
        feed((u * 1e8).round() as i64);
        feed((v * 1e8).round() as i64);
    }
    h
}

/// Uniform `grid_per_axis x grid_per_axis` grid over `[-a, a] x [-b, b]`,
/// keeping cells whose centers lie inside the ellipse.
pub fn build_mesh(geometry: &CavityGeometry, grid_per_axis: usize) -> Result<EvaluationMesh> {
    if grid_per_axis < MIN_GRID_PER_AXIS {
        return Err(CavityError::Config(format!(
            "grid_per_axis must be at least {MIN_GRID_PER_AXIS}, got {grid_per_axis}"
        )));
    }
    let g = grid_per_axis;
    let (a, b) = (geometry.major_axis, geometry.minor_axis);
    // integer numerator keeps mirrored cells exactly antisymmetric
    let coord = |i: usize| (2 * i as i64 + 1 - g as i64) as f64 / g as f64;
    let mut slot = vec![usize::MAX; g * g];
    let mut centers = Vec::new();
    let mut grid_coords = Vec::new();
    for iy in 0..g {
        for ix in 0..g {
            let (u, v) = (coord(ix), coord(iy));
            if u * u + v * v < 1.0 - INTERIOR_MARGIN {
                slot[iy * g + ix] = centers.len();
                centers.push([a * u, b * v]);
                grid_coords.push((ix, iy));
            }
        }
    }
    let mirror_x = grid_coords.iter().map(|&(ix, iy)| slot[iy * g + (g - 1 - ix)]).collect();
    let mirror_y = grid_coords.iter().map(|&(ix, iy)| slot[(g - 1 - iy) * g + ix]).collect();
    let layout = layout_fingerprint(grid_coords.iter().map(|&(ix, iy)| [coord(ix), coord(iy)]));
    Ok(EvaluationMesh {
        epsilon: geometry.epsilon,
        major_axis: a,
        minor_axis: b,
        grid_per_axis: g,
        cell_area: 4.0 * a * b / (g * g) as f64,
        centers,
        grid_coords,
        mirror_x,
        mirror_y,
        layout,
    })
}

impl EvaluationMesh {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Fingerprint of the cell layout; equal for meshes of the same grid size
    /// at any deformation.
    pub fn layout(&self) -> u64 {
        self.layout
    }

    /// Index of the cell at `(-x, y)`.
    pub fn mirror_x(&self, i: usize) -> usize {
        self.mirror_x[i]
    }

    /// Index of the cell at `(x, -y)`.
    pub fn mirror_y(&self, i: usize) -> usize {
        self.mirror_y[i]
    }

    /// Whether cell `i` is the representative of its mirror orbit (closed
    /// first quadrant).
    pub fn is_quadrant_representative(&self, i: usize) -> bool {
        let (ix, iy) = self.grid_coords[i];
        let g = self.grid_per_axis;
        2 * ix + 1 >= g && 2 * iy + 1 >= g
    }
}

/// Complex amplitudes of one mode on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub mesh: Arc<EvaluationMesh>,
    pub amplitudes: Vec<Complex64>,
}

impl ModeField {
    pub fn new(mesh: Arc<EvaluationMesh>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != mesh.len() {
            return Err(CavityError::MeshMismatch(format!(
                "{} amplitudes for a mesh of {} cells",
                amplitudes.len(),
                mesh.len()
            )));
        }
        Ok(Self { mesh, amplitudes })
    }
}

/// Normalized intensity distribution over mesh cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityGrid {
    layout: u64,
    probabilities: Vec<f64>,
}

impl ProbabilityGrid {
    /// Wraps an explicit distribution. Entries must be non-negative and sum
    /// to one within `1e-12`.
    pub fn from_probabilities(layout: u64, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(CavityError::Domain("empty distribution".into()));
        }
        if let Some(i) = probabilities.iter().position(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(CavityError::Domain(format!("invalid probability {} at cell {i}", probabilities[i])));
        }
        let total = neumaier_sum(probabilities.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(CavityError::Domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { layout, probabilities })
    }

    pub fn layout(&self) -> u64 {
        self.layout
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Errors unless both grids live on the same cell layout.
    pub fn check_same_mesh(&self, other: &ProbabilityGrid) -> Result<()> {
        if self.layout != other.layout || self.len() != other.len() {
            return Err(CavityError::MeshMismatch(format!(
                "layouts {:016x} ({} cells) and {:016x} ({} cells) differ",
                self.layout,
                self.len(),
                other.layout,
                other.len()
            )));
        }
        Ok(())
    }
}

/// `|psi_j|^2 / sum_i |psi_i|^2` for raw amplitudes on a given layout.
pub fn normalize_amplitudes(layout: u64, amplitudes: &[Complex64]) -> Result<ProbabilityGrid> {
    let mut intensity: Vec<f64> = amplitudes.iter().map(|z| z.norm_sqr()).collect();
    if let Some(i) = intensity.iter().position(|v| !v.is_finite()) {
        return Err(CavityError::Domain(format!("non-finite amplitude at cell {i}")));
    }
    let max = intensity.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(CavityError::DegenerateField);
    }
    let floor = INTENSITY_CLAMP * max;
    for v in intensity.iter_mut() {
        if *v < floor {
            *v = 0.0;
        }
    }
    // scale first so huge or tiny amplitudes cannot overflow the total
    let total = neumaier_sum(intensity.iter().map(|v| v / max));
    let probabilities = intensity.iter().map(|v| (v / max) / total).collect();
    Ok(ProbabilityGrid { layout, probabilities })
}

pub fn normalize_intensity(field: &ModeField) -> Result<ProbabilityGrid> {
    normalize_amplitudes(field.mesh.layout(), &field.amplitudes)
}

/// Parsed field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub major_axis: f64,
    pub minor_axis: f64,
    pub epsilon: f64,
    pub points: Vec<[f64; 2]>,
    pub amplitudes: Vec<Complex64>,
    /// Present in probability exports.
    pub probabilities: Option<Vec<f64>>,
}

impl FieldDump {
    /// Layout fingerprint recomputed from the points, compatible with
    /// [`EvaluationMesh::layout`].
    pub fn layout(&self) -> u64 {
        let (a, b) = (self.major_axis, self.minor_axis);
        layout_fingerprint(self.points.iter().map(|p| [p[0] / a, p[1] / b]))
    }

    pub fn normalized(&self) -> Result<ProbabilityGrid> {
        normalize_amplitudes(self.layout(), &self.amplitudes)
    }
}

fn header(mesh: &EvaluationMesh) -> String {
    format!("{} {:e} {:e} {:e}\n", mesh.len(), mesh.major_axis, mesh.minor_axis, mesh.epsilon)
}

/// Text dump: `N a b epsilon`, then `x y re im` per cell.
pub fn write_field_dump<W: Write>(field: &ModeField, mut out: W) -> Result<()> {
    let mesh = &field.mesh;
    let mut s = header(mesh);
    for (p, z) in mesh.centers.iter().zip(&field.amplitudes) {
        let _ = writeln!(s, "{:e} {:e} {:e} {:e}", p[0], p[1], z.re, z.im);
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Like [`write_field_dump`] with an extra probability column.
pub fn write_probability_dump<W: Write>(field: &ModeField, grid: &ProbabilityGrid, mut out: W) -> Result<()> {
    let mesh = &field.mesh;
    if grid.layout() != mesh.layout() || grid.len() != mesh.len() {
        return Err(CavityError::MeshMismatch("probability grid does not belong to this field".into()));
    }
    let mut s = header(mesh);
    for ((p, z), q) in mesh.centers.iter().zip(&field.amplitudes).zip(grid.probabilities()) {
        let _ = writeln!(s, "{:e} {:e} {:e} {:e} {:e}", p[0], p[1], z.re, z.im, q);
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_field_dump<R: BufRead>(input: R) -> Result<FieldDump> {
    let mut lines = input.lines();
    let head = lines.next().ok_or_else(|| CavityError::Parse("empty field dump".into()))??;
    let parse = |tok: &str, line: usize| -> Result<f64> {
        tok.parse::<f64>()
            .map_err(|_| CavityError::Parse(format!("line {line}: cannot parse {tok:?} as a number")))
    };
    let fields: Vec<&str> = head.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(CavityError::Parse(format!("header must be `N a b epsilon`, got {head:?}")));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| CavityError::Parse(format!("bad cell count {:?}", fields[0])))?;
    let (a, b, eps) = (parse(fields[1], 1)?, parse(fields[2], 1)?, parse(fields[3], 1)?);
    let mut points = Vec::with_capacity(n);
    let mut amplitudes = Vec::with_capacity(n);
    let mut probs: Vec<f64> = Vec::new();
    let mut width = None;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !(toks.len() == 4 || toks.len() == 5) || width.is_some_and(|w| w != toks.len()) {
            return Err(CavityError::Parse(format!("line {lineno}: expected 4 or 5 consistent columns")));
        }
        width = Some(toks.len());
        let v = toks.iter().map(|t| parse(t, lineno)).collect::<Result<Vec<f64>>>()?;
        points.push([v[0], v[1]]);
        amplitudes.push(Complex64::new(v[2], v[3]));
        if v.len() == 5 {
            probs.push(v[4]);
        }
    }
    if points.len() != n {
        return Err(CavityError::Parse(format!("header announces {n} cells, found {}", points.len())));
    }
    Ok(FieldDump {
        major_axis: a,
        minor_axis: b,
        epsilon: eps,
        points,
        amplitudes,
        probabilities: (width == Some(5)).then_some(probs),
    })
}
