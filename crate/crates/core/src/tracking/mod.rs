//! Deformation sweeps: continuation of two closed and two open levels,
//! level assignment by pattern overlap, and the derived avoided-crossing,
//! regime and mode-exchange diagnostics.

pub mod output;

use std::sync::Arc;

use log::{debug, info};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bem::circle::{closed_circle_mode, open_circle_mode};
use crate::bem::solve::{closed_in_interval, refine_open};
use crate::bem::{interior_field, Resonance, SolverConfig};
use crate::complex_serde;
use crate::entropy::{EntropyReport, DEFAULT_FLOOR};
use crate::error::{CavityError, Result};
use crate::geometry::discretize_boundary;
use crate::mode_field::{build_mesh, normalize_intensity, ModeField, ProbabilityGrid, DEFAULT_GRID_PER_AXIS};
use crate::summation::neumaier_sum;
use crate::two_level::Regime;

/// Largest deformation the sweep accepts.
pub const MAX_EPSILON: f64 = 0.23;
/// Finest spacing of closed roots the continuation scan must separate.
const CLOSED_SCAN_STEP: f64 = 1e-3;
const MIN_CLOSED_SCAN_STEP: f64 = 2e-5;
/// A closed match below this overlap triggers a finer scan (an intruder
/// close to the tracked root may have hidden it).
const CLEAN_OVERLAP: f64 = 0.9;

/// Half-width of the `epsilon` window around the crossing inspected by
/// [`classify_sweep_regime`].
pub const REGIME_WINDOW: f64 = 0.015;

/// Bhattacharyya coefficient `sum_j sqrt(P_j Q_j)`.
pub fn intensity_overlap(p: &ProbabilityGrid, q: &ProbabilityGrid) -> Result<f64> {
    p.check_same_mesh(q).map_err(|e| CavityError::Domain(e.to_string()))?;
    let s = neumaier_sum(p.probabilities().iter().zip(q.probabilities()).map(|(a, b)| (a * b).sqrt()));
    Ok(s.clamp(0.0, 1.0))
}

/// 24 uniform points on `[0, 0.23]` merged with 16 points on `[0.20, 0.23]`.
pub fn default_epsilon_grid() -> Vec<f64> {
    let mut v: Vec<f64> = (0..24).map(|i| i as f64 / 100.0).collect();
    v.extend((0..16).map(|i| (200 + 2 * i) as f64 / 1000.0));
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    v
}

/// Circle quantum numbers `(m, l)` labelling a tracked level at `epsilon = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeLabel {
    pub m: u32,
    pub l: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub solver: SolverConfig,
    pub epsilons: Vec<f64>,
    pub grid_per_axis: usize,
    pub labels: [ModeLabel; 2],
    pub overlap_threshold: f64,
    /// Continuation half-window as a multiple of the last step's movement.
    pub window_factor: f64,
    pub min_window: f64,
    pub floor_fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            epsilons: default_epsilon_grid(),
            grid_per_axis: DEFAULT_GRID_PER_AXIS,
            labels: [ModeLabel { m: 8, l: 5 }, ModeLabel { m: 14, l: 3 }],
            overlap_threshold: 0.5,
            window_factor: 3.0,
            min_window: 0.05,
            floor_fraction: DEFAULT_FLOOR,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.epsilons.is_empty() {
            return Err(CavityError::Config("epsilon grid is empty".into()));
        }
        if self.epsilons.iter().any(|&e| !(0.0..=MAX_EPSILON).contains(&e)) {
            return Err(CavityError::Config(format!("epsilon grid must lie within [0, {MAX_EPSILON}]")));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CavityError::Config("epsilon grid must be strictly increasing".into()));
        }
        if self.grid_per_axis < crate::mode_field::MIN_GRID_PER_AXIS {
            return Err(CavityError::Config(format!(
                "grid_per_axis must be at least {}",
                crate::mode_field::MIN_GRID_PER_AXIS
            )));
        }
        if !(0.0..=1.0).contains(&self.overlap_threshold) {
            return Err(CavityError::Config("overlap_threshold must lie in [0, 1]".into()));
        }
        if !(self.window_factor > 0.0) || !(self.min_window > 0.0) {
            return Err(CavityError::Config("continuation windows must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.floor_fraction) {
            return Err(CavityError::Config("floor_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Wavenumbers a tracked pair starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartSeeds {
    pub lambda: [f64; 2],
    pub zeta: [Complex64; 2],
}

impl StartSeeds {
    /// Analytic circle values for the labels at refractive index `n`.
    pub fn from_circle(labels: &[ModeLabel; 2], n: f64) -> Result<Self> {
        let mut lambda = [0.0; 2];
        let mut zeta = [Complex64::new(0.0, 0.0); 2];
        for j in 0..2 {
            lambda[j] = closed_circle_mode(labels[j].m, labels[j].l, n)?;
            zeta[j] = open_circle_mode(labels[j].m, labels[j].l, n)?;
        }
        Ok(Self { lambda, zeta })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelTrack {
    pub lambda: Vec<f64>,
    #[serde(with = "complex_serde::vec")]
    pub zeta: Vec<Complex64>,
    pub closed_residual: Vec<f64>,
    pub open_residual: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvoidedCrossing {
    pub epsilon_star: f64,
    pub gap: f64,
}

/// Patterns of one level at one deformation, on a mesh shared by all four.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFields {
    pub closed: ModeField,
    pub open: ModeField,
    pub q: ProbabilityGrid,
    pub p: ProbabilityGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub refractive_index: f64,
    pub element_count: usize,
    pub grid_per_axis: usize,
    pub labels: [ModeLabel; 2],
    pub epsilons: Vec<f64>,
    pub levels: [LevelTrack; 2],
    pub reports: Vec<[EntropyReport; 2]>,
    pub avoided_crossing: Option<AvoidedCrossing>,
    pub regime: Option<Regime>,
    /// Why no regime was assigned, when it was not.
    pub regime_note: Option<String>,
    pub exchange_detected: bool,
    #[serde(skip)]
    pub fields: Vec<[LevelFields; 2]>,
}

impl SweepResult {
    pub fn zeta(&self, level: usize) -> &[Complex64] {
        &self.levels[level].zeta
    }

    pub fn lambda(&self, level: usize) -> &[f64] {
        &self.levels[level].lambda
    }
}

/// One solved deformation handed to the sweep observer.
pub struct SweepStep<'a> {
    pub index: usize,
    pub epsilon: f64,
    pub closed: &'a [Resonance; 2],
    pub open: &'a [Resonance; 2],
    pub fields: &'a [LevelFields; 2],
    pub reports: &'a [EntropyReport; 2],
}

struct State {
    epsilon: f64,
    closed: [Resonance; 2],
    open: [Resonance; 2],
    fields: [LevelFields; 2],
    /// Change of each `k` over the step that led here.
    moved_closed: [Complex64; 2],
    moved_open: [Complex64; 2],
    step: f64,
}

/// Picks distinct candidates for the two levels minimizing the summed
/// distance to `prev`, among those within each level's window.
fn nearest_distinct(cands: &[Complex64], prev: [Complex64; 2], window: [f64; 2], eps: f64) -> Result<[usize; 2]> {
    let in_window = |j: usize| -> Vec<usize> {
        (0..cands.len()).filter(|&c| (cands[c] - prev[j]).norm() <= window[j]).collect()
    };
    let (a, b) = (in_window(0), in_window(1));
    for (j, list) in [&a, &b].into_iter().enumerate() {
        if list.is_empty() {
            return Err(CavityError::LevelLost { level: j + 1, epsilon: eps, last_good: None });
        }
    }
    let mut best: Option<([usize; 2], f64)> = None;
    for &i in &a {
        for &k in &b {
            if i == k {
                continue;
            }
            let cost = (cands[i] - prev[0]).norm() + (cands[k] - prev[1]).norm();
            if best.map_or(true, |(_, c)| cost < c) {
                best = Some(([i, k], cost));
            }
        }
    }
    best.map(|(p, _)| p).ok_or_else(|| {
        // only one solution serves both windows: the farther level is lost
        let lost = if (cands[a[0]] - prev[0]).norm() > (cands[b[0]] - prev[1]).norm() { 1 } else { 2 };
        CavityError::LevelLost { level: lost, epsilon: eps, last_good: None }
    })
}

/// Chooses identity or swap by the larger overlap sum among the
/// permutations whose overlaps both reach `threshold`.
fn assign_by_overlap(
    prev: [&ProbabilityGrid; 2],
    new: [&ProbabilityGrid; 2],
    threshold: f64,
    eps: f64,
) -> Result<bool> {
    let o = |a: usize, b: usize| intensity_overlap(prev[a], new[b]);
    let keep = [o(0, 0)?, o(1, 1)?];
    let swap = [o(0, 1)?, o(1, 0)?];
    let ok_keep = keep.iter().all(|&v| v >= threshold);
    let ok_swap = swap.iter().all(|&v| v >= threshold);
    debug!("eps {eps}: overlaps keep {keep:?} swap {swap:?}");
    match (ok_keep, ok_swap) {
        (false, false) => Err(CavityError::AmbiguousTracking {
            epsilon: eps,
            overlaps: [keep[0].min(keep[1]), swap[0].min(swap[1])],
        }),
        (true, false) => Ok(false),
        (false, true) => Ok(true),
        (true, true) => Ok(swap[0] + swap[1] > keep[0] + keep[1]),
    }
}

/// Distinct candidates `[i, k]` (`i` from `allowed[0]`, `k` from
/// `allowed[1]`) maximizing the overlap sum with `prev`, both overlaps
/// reaching `threshold`.
fn best_overlap_pair(
    prev: [&ProbabilityGrid; 2],
    grids: &[Option<&ProbabilityGrid>],
    allowed: &[Vec<usize>; 2],
    threshold: f64,
    eps: f64,
) -> Result<[usize; 2]> {
    let o = |level: usize, c: usize| -> Result<f64> {
        let g = grids[c].ok_or_else(|| CavityError::Domain(format!("candidate {c} has no field")))?;
        intensity_overlap(prev[level], g)
    };
    let mut best: Option<([usize; 2], f64)> = None;
    let mut best_min = [0.0f64; 2];
    for &i in &allowed[0] {
        for &k in &allowed[1] {
            if i == k {
                continue;
            }
            let (a, b) = (o(0, i)?, o(1, k)?);
            best_min[0] = best_min[0].max(a);
            best_min[1] = best_min[1].max(b);
            if a >= threshold && b >= threshold && best.map_or(true, |(_, v)| a + b > v) {
                best = Some(([i, k], a + b));
            }
        }
    }
    debug!("eps {eps}: best closed overlaps {best_min:?}");
    best.map(|(p, _)| p).ok_or(CavityError::AmbiguousTracking { epsilon: eps, overlaps: best_min })
}

fn window(config: &SweepConfig, moved: f64) -> f64 {
    (config.window_factor * moved).max(config.min_window)
}

/// Continuation over an arbitrary strictly monotone grid from given seeds.
///
/// This is the engine behind [`sweep`]; it does not derive the crossing,
/// regime or exchange diagnostics.
pub fn track_levels<F>(config: &SweepConfig, epsilons: &[f64], seeds: StartSeeds, mut observer: F) -> Result<SweepResult>
where
    F: FnMut(&SweepStep<'_>) -> Result<()>,
{
    config.solver.validate()?;
    let solver = &config.solver;
    let mut result = SweepResult {
        refractive_index: solver.refractive_index,
        element_count: solver.element_count,
        grid_per_axis: config.grid_per_axis,
        labels: config.labels,
        epsilons: Vec::new(),
        levels: Default::default(),
        reports: Vec::new(),
        avoided_crossing: None,
        regime: None,
        regime_note: None,
        exchange_detected: false,
        fields: Vec::new(),
    };
    let mut state: Option<State> = None;
    let mut last_good: Option<f64> = None;
    for (index, &eps) in epsilons.iter().enumerate() {
        let step = solve_step(config, eps, state.as_ref(), &seeds).map_err(|e| match e {
            CavityError::LevelLost { level, epsilon, .. } => CavityError::LevelLost { level, epsilon, last_good },
            other => other,
        })?;
        let mut reports = [0, 1].map(|j| {
            EntropyReport::compute(
                eps,
                j + 1,
                &step.fields[j].p,
                &step.fields[j].q,
                step.closed[j].k.re,
                step.open[j].k,
                config.floor_fraction,
            )
        });
        if let Some(i) = reports.iter().position(|r| r.is_err()) {
            return Err(std::mem::replace(&mut reports[i], Err(CavityError::DegenerateField)).unwrap_err());
        }
        let reports = reports.map(|r| r.unwrap());
        observer(&SweepStep {
            index,
            epsilon: eps,
            closed: &step.closed,
            open: &step.open,
            fields: &step.fields,
            reports: &reports,
        })?;
        info!(
            "eps {eps:.4}: lambda {:.6} {:.6}  zeta {:.6} {:.6}",
            step.closed[0].k.re, step.closed[1].k.re, step.open[0].k, step.open[1].k
        );
        result.epsilons.push(eps);
        for j in 0..2 {
            let t = &mut result.levels[j];
            t.lambda.push(step.closed[j].k.re);
            t.zeta.push(step.open[j].k);
            t.closed_residual.push(step.closed[j].residual);
            t.open_residual.push(step.open[j].residual);
        }
        result.reports.push(reports);
        result.fields.push(step.fields.clone());
        last_good = Some(eps);
        state = Some(step);
    }
    Ok(result)
}

/// Closed pair selected at one deformation.
struct ClosedChoice {
    pair: [Resonance; 2],
    fields: [(ModeField, ProbabilityGrid); 2],
    /// Overlaps with the previous step's patterns (1 on the first step).
    overlaps: [f64; 2],
}

impl ClosedChoice {
    fn overlap_sum(&self) -> f64 {
        self.overlaps[0] + self.overlaps[1]
    }
}

/// The closed system is integrable, so its levels cross other states
/// freely and the root nearest the prediction may be an intruder. With a
/// previous step the pair is chosen by pattern overlap among all roots in
/// the windows; the first step takes the nearest roots.
#[allow(clippy::too_many_arguments)]
fn choose_closed(
    config: &SweepConfig,
    eps: f64,
    prev: Option<&State>,
    closed: &[Resonance],
    prev_lambda: [Complex64; 2],
    w_closed: [f64; 2],
    field: &dyn Fn(&Resonance) -> Result<(ModeField, ProbabilityGrid)>,
) -> Result<ClosedChoice> {
    let ks: Vec<Complex64> = closed.iter().map(|r| r.k).collect();
    let Some(s) = prev else {
        let [c0, c1] = nearest_distinct(&ks, prev_lambda, w_closed, eps)?;
        return Ok(ClosedChoice {
            pair: [closed[c0].clone(), closed[c1].clone()],
            fields: [field(&closed[c0])?, field(&closed[c1])?],
            overlaps: [1.0; 2],
        });
    };
    let allowed = [0, 1].map(|j| -> Vec<usize> {
        (0..ks.len()).filter(|&c| (ks[c] - prev_lambda[j]).norm() <= w_closed[j]).collect()
    });
    for (j, list) in allowed.iter().enumerate() {
        if list.is_empty() {
            return Err(CavityError::LevelLost { level: j + 1, epsilon: eps, last_good: None });
        }
    }
    let mut fields: Vec<Option<(ModeField, ProbabilityGrid)>> = (0..ks.len()).map(|_| None).collect();
    for &c in allowed[0].iter().chain(&allowed[1]) {
        if fields[c].is_none() {
            fields[c] = Some(field(&closed[c])?);
        }
    }
    let grids: Vec<Option<&ProbabilityGrid>> = fields.iter().map(|f| f.as_ref().map(|(_, p)| p)).collect();
    let prev_q = [&s.fields[0].q, &s.fields[1].q];
    let [c0, c1] = best_overlap_pair(prev_q, &grids, &allowed, config.overlap_threshold, eps)?;
    let overlaps = [
        intensity_overlap(prev_q[0], grids[c0].expect("allowed candidate"))?,
        intensity_overlap(prev_q[1], grids[c1].expect("allowed candidate"))?,
    ];
    let f0 = fields[c0].take().expect("field computed for allowed candidate");
    let f1 = fields[c1].take().expect("field computed for allowed candidate");
    Ok(ClosedChoice { pair: [closed[c0].clone(), closed[c1].clone()], fields: [f0, f1], overlaps })
}

fn solve_step(config: &SweepConfig, eps: f64, prev: Option<&State>, seeds: &StartSeeds) -> Result<State> {
    let solver = &config.solver;
    let geometry = discretize_boundary(eps, solver.element_count)?;
    let mesh = Arc::new(build_mesh(&geometry, config.grid_per_axis)?);

    // windows are centred on the linear extrapolation of the last step and
    // widen when this step is longer than that one (either direction)
    let (prev_lambda, prev_zeta, w_closed, w_open) = match prev {
        Some(s) => {
            let scale = if s.step != 0.0 { (eps - s.epsilon) / s.step } else { 0.0 };
            let stretch = scale.abs().max(1.0);
            (
                [0, 1].map(|j| s.closed[j].k + s.moved_closed[j] * scale),
                [0, 1].map(|j| s.open[j].k + s.moved_open[j] * scale),
                [0, 1].map(|j| window(config, s.moved_closed[j].norm() * stretch)),
                [0, 1].map(|j| window(config, s.moved_open[j].norm() * stretch)),
            )
        }
        None => (
            seeds.lambda.map(|l| Complex64::new(l, 0.0)),
            seeds.zeta,
            [config.min_window; 2],
            [config.min_window; 2],
        ),
    };

    let field = |r: &Resonance| -> Result<(ModeField, ProbabilityGrid)> {
        let f = interior_field(r, &geometry, solver, &mesh)?;
        let p = normalize_intensity(&f)?;
        Ok((f, p))
    };

    // closed: all minima in both windows. Other states cross the tracked
    // ones, so the scan has to resolve close pairs, not just the spacing of
    // the two tracked levels; it is refined until the pattern match is clean.
    let separation = (prev_lambda[0].re - prev_lambda[1].re).abs();
    let mut step_closed = [0, 1]
        .map(|j| w_closed[j] / 8.0)
        .into_iter()
        .fold(1.0 / solver.scan_density_re, f64::min)
        .min(CLOSED_SCAN_STEP)
        .min((separation / 6.0).max(2e-4));
    let mut spans = [0, 1].map(|j| (prev_lambda[j].re - w_closed[j], prev_lambda[j].re + w_closed[j]));
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let spans = if spans[1].0 <= spans[0].1 { vec![(spans[0].0, spans[0].1.max(spans[1].1))] } else { spans.to_vec() };
    let mut best: Option<ClosedChoice> = None;
    loop {
        let mut closed: Vec<Resonance> = Vec::new();
        for &(lo, hi) in &spans {
            for r in closed_in_interval(&geometry, solver, lo.max(1e-3), hi, step_closed)? {
                if closed.iter().all(|c| (c.k - r.k).norm() > 1e-7) {
                    closed.push(r);
                }
            }
        }
        let attempt = choose_closed(config, eps, prev, &closed, prev_lambda, w_closed, &field);
        let finer = step_closed / 4.0;
        let clean = matches!(&attempt, Ok(c) if c.overlaps.iter().all(|&o| o >= CLEAN_OVERLAP));
        match attempt {
            Ok(c) if best.as_ref().map_or(true, |b| c.overlap_sum() > b.overlap_sum()) => best = Some(c),
            Ok(_) => {}
            Err(e) if finer < MIN_CLOSED_SCAN_STEP && best.is_none() => return Err(e),
            Err(e) => debug!("closed scan at step {step_closed:e}: {e}"),
        }
        if clean || finer < MIN_CLOSED_SCAN_STEP {
            break;
        }
        step_closed = finer;
    }
    let ClosedChoice { pair: closed_pair, fields: closed_fields, .. } = best.expect("loop exits with a choice or an error");

    // open: Muller from each predicted value, the second deflating the first;
    // the previous value is the fallback start
    let mut open_pair: Vec<Resonance> = Vec::with_capacity(2);
    for j in 0..2 {
        let deflate: Vec<Complex64> = open_pair.iter().map(|r| r.k).collect();
        let mut starts = vec![prev_zeta[j]];
        if let Some(s) = prev {
            starts.push(s.open[j].k);
        }
        let mut found = None;
        for start in starts {
            match refine_open(&geometry, solver, start, w_open[j], &deflate) {
                Ok(r) if (r.k - prev_zeta[j]).norm() <= w_open[j] => {
                    found = Some(r);
                    break;
                }
                Ok(r) => debug!("open level {} at eps {eps}: {} outside the window", j + 1, r.k),
                Err(e) => debug!("open level {} at eps {eps}: {e}", j + 1),
            }
        }
        let r = found.ok_or(CavityError::LevelLost { level: j + 1, epsilon: eps, last_good: None })?;
        open_pair.push(r);
    }
    let mut open_pair: [Resonance; 2] = [open_pair[0].clone(), open_pair[1].clone()];

    let mut open_fields = [field(&open_pair[0])?, field(&open_pair[1])?];

    if let Some(s) = prev {
        let prev_p = [&s.fields[0].p, &s.fields[1].p];
        if assign_by_overlap(prev_p, [&open_fields[0].1, &open_fields[1].1], config.overlap_threshold, eps)? {
            open_pair.swap(0, 1);
            open_fields.swap(0, 1);
        }
    }
    for j in 0..2 {
        if (open_pair[j].k - prev_zeta[j]).norm() > w_open[j] {
            return Err(CavityError::LevelLost { level: j + 1, epsilon: eps, last_good: None });
        }
        if (closed_pair[j].k - prev_lambda[j]).norm() > w_closed[j] {
            return Err(CavityError::LevelLost { level: j + 1, epsilon: eps, last_good: None });
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let (moved_closed, moved_open, step) = match prev {
        Some(s) => (
            [0, 1].map(|j| closed_pair[j].k - s.closed[j].k),
            [0, 1].map(|j| open_pair[j].k - s.open[j].k),
            eps - s.epsilon,
        ),
        None => ([zero; 2], [zero; 2], 0.0),
    };
    let [(cf0, q0), (cf1, q1)] = closed_fields;
    let [(of0, p0), (of1, p1)] = open_fields;
    Ok(State {
        epsilon: eps,
        step,
        moved_closed,
        moved_open,
        closed: closed_pair,
        open: open_pair,
        fields: [
            LevelFields { closed: cf0, open: of0, q: q0, p: p0 },
            LevelFields { closed: cf1, open: of1, q: q1, p: p1 },
        ],
    })
}

/// Tracks the configured levels from their circle values over the
/// configured grid and fills in the crossing, regime and exchange results.
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    sweep_with_observer(config, |_| Ok(()))
}

/// [`sweep`] with a callback after every solved deformation (used to stream
/// artifacts to disk so an aborted sweep leaves its partial output).
pub fn sweep_with_observer<F>(config: &SweepConfig, observer: F) -> Result<SweepResult>
where
    F: FnMut(&SweepStep<'_>) -> Result<()>,
{
    config.validate()?;
    let seeds = StartSeeds::from_circle(&config.labels, config.solver.refractive_index)?;
    let mut result = track_levels(config, &config.epsilons, seeds, observer)?;
    finish_sweep(&mut result)?;
    Ok(result)
}

/// Derives the avoided crossing, regime and exchange flag of a tracked sweep.
pub fn finish_sweep(result: &mut SweepResult) -> Result<()> {
    result.avoided_crossing = if result.epsilons.len() >= 3 {
        detect_avoided_crossing(&result.epsilons, result.zeta(0), result.zeta(1))?
    } else {
        None
    };
    result.regime = None;
    result.regime_note = None;
    if result.avoided_crossing.is_some() {
        match classify_sweep_regime(result) {
            Ok(r) => result.regime = Some(r),
            Err(e) => result.regime_note = Some(e.to_string()),
        }
    } else {
        result.regime_note = Some("no avoided crossing inside the grid".into());
    }
    result.exchange_detected = detect_mode_exchange(result)?;
    let regime = result.regime;
    for pair in result.reports.iter_mut() {
        for r in pair.iter_mut() {
            r.regime = regime;
        }
    }
    Ok(())
}

/// Position and size of the smallest `|zeta_1 - zeta_2|` on the grid,
/// refined by a parabola through the minimum and its neighbours. Absent
/// when the minimum lies on the first or last grid point.
pub fn detect_avoided_crossing(
    epsilons: &[f64],
    track_plus: &[Complex64],
    track_minus: &[Complex64],
) -> Result<Option<AvoidedCrossing>> {
    let n = epsilons.len();
    if n < 3 || track_plus.len() != n || track_minus.len() != n {
        return Err(CavityError::Domain(format!(
            "need two series of equal length >= 3 on the grid, got {} / {} for {n} points",
            track_plus.len(),
            track_minus.len()
        )));
    }
    let gap: Vec<f64> = track_plus.iter().zip(track_minus).map(|(a, b)| (a - b).norm()).collect();
    let min = gap.iter().copied().fold(f64::INFINITY, f64::min);
    // prefer an interior grid point when the minimum is attained repeatedly
    let i = match (1..n - 1).find(|&i| gap[i] == min) {
        Some(i) => i,
        None => return Ok(None),
    };
    let (x0, x1, x2) = (epsilons[i - 1], epsilons[i], epsilons[i + 1]);
    let (y0, y1, y2) = (gap[i - 1], gap[i], gap[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature > 0.0) {
        return Ok(Some(AvoidedCrossing { epsilon_star: x1, gap: y1 }));
    }
    // p(x) = y1 + b (x - x1) + curvature (x - x1)^2 with slope b at x1
    let b = d01 + curvature * (x1 - x0);
    let xs = (x1 - b / (2.0 * curvature)).clamp(x0, x2);
    let ys = y1 + b * (xs - x1) + curvature * (xs - x1) * (xs - x1);
    Ok(Some(AvoidedCrossing { epsilon_star: xs, gap: ys.max(0.0) }))
}

fn sign_changes(values: &[f64]) -> bool {
    values.windows(2).any(|w| w[0] * w[1] < 0.0 || (w[0] == 0.0) != (w[1] == 0.0))
}

/// Strong when, near the crossing, `Re zeta_1 - Re zeta_2` keeps its sign
/// while `Im zeta_1 - Im zeta_2` changes sign; weak for the opposite.
pub fn classify_sweep_regime(sweep: &SweepResult) -> Result<Regime> {
    let Some(ac) = sweep.avoided_crossing else {
        return Err(CavityError::IndeterminateRegime("no avoided crossing in the sweep".into()));
    };
    let eps = &sweep.epsilons;
    let star = eps
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - ac.epsilon_star).abs().total_cmp(&(b.1 - ac.epsilon_star).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let idx: Vec<usize> = (0..eps.len())
        .filter(|&i| (eps[i] - ac.epsilon_star).abs() <= REGIME_WINDOW || i.abs_diff(star) <= 1)
        .collect();
    let re: Vec<f64> = idx.iter().map(|&i| sweep.zeta(0)[i].re - sweep.zeta(1)[i].re).collect();
    let im: Vec<f64> = idx.iter().map(|&i| sweep.zeta(0)[i].im - sweep.zeta(1)[i].im).collect();
    match (sign_changes(&re), sign_changes(&im)) {
        (false, true) => Ok(Regime::Strong),
        (true, false) => Ok(Regime::Weak),
        (r, i) => Err(CavityError::IndeterminateRegime(format!(
            "near epsilon = {:.4}: real parts {} and imaginary parts {}",
            ac.epsilon_star,
            if r { "cross" } else { "keep a gap" },
            if i { "cross" } else { "keep a gap" }
        ))),
    }
}

/// Whether each open level ends on the other closed level's pattern.
pub fn detect_mode_exchange(sweep: &SweepResult) -> Result<bool> {
    let Some(ac) = sweep.avoided_crossing else {
        return Ok(false);
    };
    let Some(&end) = sweep.epsilons.last() else {
        return Ok(false);
    };
    if end <= ac.epsilon_star {
        return Ok(false);
    }
    let Some(last) = sweep.fields.last().filter(|_| sweep.fields.len() == sweep.epsilons.len()) else {
        return Err(CavityError::Domain("sweep carries no fields at its last deformation".into()));
    };
    let o = |a: &ProbabilityGrid, b: &ProbabilityGrid| intensity_overlap(a, b);
    let first = o(&last[0].p, &last[1].q)? > o(&last[0].p, &last[0].q)?;
    let second = o(&last[1].p, &last[0].q)? > o(&last[1].p, &last[1].q)?;
    Ok(first && second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::two_level::{eigenvalues, TwoLevelHamiltonian};

    fn grid(v: &[f64]) -> ProbabilityGrid {
        ProbabilityGrid::from_probabilities(3, v.to_vec()).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let p = grid(&[1.0, 0.0]);
        let q = grid(&[0.5, 0.5]);
        assert!((intensity_overlap(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(intensity_overlap(&p, &grid(&[0.0, 1.0])).unwrap(), 0.0);
        assert!((intensity_overlap(&p, &q).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let other = ProbabilityGrid::from_probabilities(4, vec![0.5, 0.5]).unwrap();
        assert!(matches!(intensity_overlap(&p, &other), Err(CavityError::Domain(_))));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_epsilon_grid();
        assert_eq!(g.len(), 36);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 0.23);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.iter().filter(|&&e| e >= 0.2).count(), 16);
    }

    fn model_tracks(delta_prime: f64, im_gap: f64) -> (Vec<f64>, Vec<Complex64>, Vec<Complex64>) {
        let eps: Vec<f64> = (0..=46).map(|i| i as f64 * 0.005).collect();
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for &e in &eps {
            let h = TwoLevelHamiltonian::from_omegas(
                Complex64::new(10.0 + (e - 0.215), -0.05 - im_gap / 2.0),
                Complex64::new(10.0, -0.05 + im_gap / 2.0),
                delta_prime,
            );
            let ev = eigenvalues(&h);
            plus.push(ev.zeta_plus);
            minus.push(ev.zeta_minus);
        }
        (eps, plus, minus)
    }

    #[test]
    fn crossing_of_linear_two_level_sweep() {
        let (eps, plus, minus) = model_tracks(0.01, 0.004);
        let ac = detect_avoided_crossing(&eps, &plus, &minus).unwrap().unwrap();
        assert!((ac.epsilon_star - 0.215).abs() <= 0.005);
        // at the centre |zeta+ - zeta-| = 2 |d| = 2 sqrt(delta'^2 - (gap/2)^2)
        let expect = 2.0 * (0.01f64.powi(2) - 0.002f64.powi(2)).sqrt();
        assert!((ac.gap - expect).abs() < 2e-3, "gap {} vs {expect}", ac.gap);
    }

    #[test]
    fn boundary_minimum_and_identical_series() {
        let eps = [0.0, 0.1, 0.2, 0.3];
        let a: Vec<Complex64> = eps.iter().map(|&e| Complex64::new(1.0 + e, 0.0)).collect();
        let b: Vec<Complex64> = eps.iter().map(|&e| Complex64::new(2.0 + 2.0 * e, 0.0)).collect();
        assert_eq!(detect_avoided_crossing(&eps, &a, &b).unwrap(), None);
        let ac = detect_avoided_crossing(&eps, &a, &a).unwrap().unwrap();
        assert_eq!(ac.gap, 0.0);
        assert!(ac.epsilon_star > 0.0 && ac.epsilon_star < 0.3);
        assert!(detect_avoided_crossing(&eps[..2], &a[..2], &b[..2]).is_err());
    }

    fn synthetic(delta_prime: f64, im_gap: f64) -> SweepResult {
        let (eps, plus, minus) = model_tracks(delta_prime, im_gap);
        // label by continuity the way the tracker would: follow the
        // eigenvalue nearest to the previous one
        let mut t1 = vec![plus[0]];
        let mut t2 = vec![minus[0]];
        for i in 1..eps.len() {
            let (a, b) = (plus[i], minus[i]);
            let last = *t1.last().unwrap();
            if (a - last).norm() <= (b - last).norm() {
                t1.push(a);
                t2.push(b);
            } else {
                t1.push(b);
                t2.push(a);
            }
        }
        let mut s = SweepResult {
            refractive_index: 2.0,
            element_count: 16,
            grid_per_axis: 32,
            labels: [ModeLabel { m: 0, l: 1 }, ModeLabel { m: 0, l: 2 }],
            epsilons: eps,
            levels: Default::default(),
            reports: vec![],
            avoided_crossing: None,
            regime: None,
            regime_note: None,
            exchange_detected: false,
            fields: vec![],
        };
        s.levels[0].zeta = t1;
        s.levels[1].zeta = t2;
        s.avoided_crossing = detect_avoided_crossing(&s.epsilons, s.zeta(0), s.zeta(1)).unwrap();
        s
    }

    #[test]
    fn regime_flips_with_coupling_margin() {
        let im_gap = 0.02;
        for (dp, expect) in [(0.02, Regime::Strong), (0.015, Regime::Strong), (0.005, Regime::Weak), (0.002, Regime::Weak)] {
            let s = synthetic(dp, im_gap);
            assert_eq!(classify_sweep_regime(&s).unwrap(), expect, "delta' = {dp}");
            let margin = 2.0 * dp - im_gap;
            assert_eq!(margin > 0.0, expect == Regime::Strong);
        }
    }

    #[test]
    fn regime_needs_a_crossing() {
        let mut s = synthetic(0.02, 0.02);
        s.avoided_crossing = None;
        assert!(matches!(classify_sweep_regime(&s), Err(CavityError::IndeterminateRegime(_))));
        assert!(!detect_mode_exchange(&s).unwrap());
    }

    #[test]
    fn nearest_distinct_pairs() {
        let c = [Complex64::new(1.0, 0.0), Complex64::new(1.02, 0.0), Complex64::new(3.0, 0.0)];
        let prev = [Complex64::new(1.01, 0.0), Complex64::new(1.0, 0.0)];
        let p = nearest_distinct(&c, prev, [0.05, 0.05], 0.1).unwrap();
        assert_eq!(p, [1, 0]);
        let lost = nearest_distinct(&c[..1], prev, [0.05, 0.05], 0.1);
        assert!(matches!(lost, Err(CavityError::LevelLost { .. })));
    }
}
