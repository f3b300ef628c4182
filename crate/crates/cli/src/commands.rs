use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use cavity_core::bem::cache::ResonanceCache;
use cavity_core::bem::{find_closed_eigenvalues, find_open_resonances, KWindow, Kind, Resonance, SolverConfig};
use cavity_core::entropy::{kl_divergence, kl_divergence_floored, lamb_shift, shannon_entropy, EntropyReport};
use cavity_core::geometry::discretize_boundary;
use cavity_core::mode_field::{read_field_dump, FieldDump};
use cavity_core::tracking::output::{atomic_write, entropy_csv, write_step_fields, write_sweep_summary};
use cavity_core::tracking::sweep_with_observer;
use cavity_core::two_level::{classify_regime, eigenvalues, exceptional_point_gap, TwoLevelHamiltonian, DEFAULT_REGIME_TOL};
use cavity_core::CavityError;
use log::{info, warn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_complex, parse_epsilons, parse_range, RunConfig};
use crate::{CliError, EntropyArgs, ModelArgs, SolveArgs, SolverFlags, SweepArgs};

/// Name of the sentinel left in the output directory by an aborted sweep.
pub const FAILED_SENTINEL: &str = "FAILED";

fn apply_solver_flags(solver: &mut SolverConfig, flags: &SolverFlags) -> Result<(), CliError> {
    if let Some(n) = flags.refractive_index {
        solver.refractive_index = n;
    }
    if let Some(m) = flags.elements {
        solver.element_count = m;
    }
    if let Some(p) = &flags.parity {
        solver.parity = p.parse().map_err(|e: CavityError| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

#[derive(Serialize)]
struct Listed {
    #[serde(with = "cavity_core::complex_serde")]
    k: Complex64,
    residual: f64,
    parity: cavity_core::bem::Parity,
}

pub fn solve(run: RunConfig, args: SolveArgs) -> Result<(), CliError> {
    let mut solver = run.solver.clone();
    apply_solver_flags(&mut solver, &args.solver)?;
    let (re_min, re_max) = match &args.window {
        Some(w) => parse_range(w)?,
        None => (solver.window.re_min, solver.window.re_max),
    };
    let kind = if args.closed { Kind::Closed } else { Kind::Open };
    solver.window = match kind {
        Kind::Closed => KWindow::real(re_min, re_max),
        Kind::Open => {
            let (im_min, im_max) = match &args.im_window {
                Some(w) => parse_range(w)?,
                None => (solver.window.im_min, solver.window.im_max),
            };
            KWindow { re_min, re_max, im_min, im_max }
        }
    };
    solver.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if !(0.0..1.0).contains(&args.epsilon) {
        return Err(CliError::Usage(format!("epsilon must lie in [0, 1), got {}", args.epsilon)));
    }

    let cache = if args.no_cache { None } else { Some(ResonanceCache::open(run.cache_dir())?) };
    let hit = cache.as_ref().and_then(|c| c.get(args.epsilon, &solver, kind));
    let cached = hit.is_some();
    let resonances: Vec<Resonance> = match hit {
        Some(r) => r,
        None => {
            let geometry = discretize_boundary(args.epsilon, solver.element_count)?;
            let found = match kind {
                Kind::Closed => find_closed_eigenvalues(&geometry, &solver)?,
                Kind::Open => find_open_resonances(&geometry, &solver)?,
            };
            if let Some(c) = &cache {
                if let Err(e) = c.put(args.epsilon, &solver, kind, &found) {
                    warn!("could not write cache {}: {e}", c.path().display());
                }
            }
            found
        }
    };
    let listed: Vec<Listed> =
        resonances.iter().map(|r| Listed { k: r.k, residual: r.residual, parity: r.parity }).collect();
    let body = json!({
        "epsilon": args.epsilon,
        "kind": kind,
        "refractive_index": solver.refractive_index,
        "element_count": solver.element_count,
        "resonances": listed,
    });
    if let Some(out) = &args.out {
        atomic_write(out, to_json(&body).as_bytes())?;
    }
    let mut shown = body;
    shown["cached"] = json!(cached);
    println!("{}", to_json(&shown));
    Ok(())
}

pub fn sweep(mut run: RunConfig, args: SweepArgs) -> Result<(), CliError> {
    apply_solver_flags(&mut run.solver, &args.solver)?;
    if let Some(e) = &args.epsilons {
        parse_epsilons(e)?;
        run.sweep.epsilons = e.clone();
    }
    if let Some(g) = args.grid {
        run.sweep.grid_per_axis = g;
    }
    if let Some(f) = args.floor {
        run.sweep.floor_fraction = f;
    }
    let out: PathBuf = args
        .out
        .or_else(|| run.paths.output_dir.clone())
        .ok_or_else(|| CliError::Usage("sweep needs an output directory (--out or paths.output_dir)".into()))?;
    let config = run.sweep_config()?;
    fs::create_dir_all(&out)?;
    let sentinel = out.join(FAILED_SENTINEL);
    if sentinel.exists() {
        fs::remove_file(&sentinel)?;
    }

    let mut done = Vec::new();
    let result = sweep_with_observer(&config, |step| {
        write_step_fields(&out, step)?;
        done.push(step.reports.clone());
        info!(
            "eps {:.4}: lambda {:.6} {:.6}, zeta {:.6} {:.6}",
            step.epsilon, step.closed[0].k.re, step.closed[1].k.re, step.open[0].k, step.open[1].k
        );
        Ok(())
    });
    match result {
        Ok(r) => {
            let written = write_sweep_summary(&out, &r)?;
            let summary = json!({
                "refractive_index": r.refractive_index,
                "points": r.epsilons.len(),
                "avoided_crossing": r.avoided_crossing,
                "regime": r.regime,
                "regime_note": r.regime_note,
                "exchange_detected": r.exchange_detected,
                "files": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            });
            println!("{}", to_json(&summary));
            Ok(())
        }
        Err(e) => {
            let failing = match &e {
                CavityError::LevelLost { epsilon, .. } | CavityError::AmbiguousTracking { epsilon, .. } => Some(*epsilon),
                _ => config.epsilons.get(done.len()).copied(),
            };
            atomic_write(&out.join("entropy.csv"), entropy_csv(&done).as_bytes())?;
            let eps_text = failing.map_or_else(|| "unknown".to_string(), |v| v.to_string());
            atomic_write(&sentinel, format!("epsilon = {eps_text}\nerror: {e}\n").as_bytes())?;
            Err(e.into())
        }
    }
}

fn read_dump(path: &Path) -> Result<FieldDump, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(read_field_dump(BufReader::new(file))?)
}

pub fn entropy(args: EntropyArgs) -> Result<(), CliError> {
    let a = read_dump(&args.open)?;
    let b = read_dump(&args.closed)?;
    if a.points.len() != b.points.len() {
        return Err(CavityError::MeshMismatch(format!(
            "{} has {} cells, {} has {}",
            args.open.display(),
            a.points.len(),
            args.closed.display(),
            b.points.len()
        ))
        .into());
    }
    let p = a.normalized()?;
    let q = b.normalized()?;
    p.check_same_mesh(&q)?;
    let d_kl = match args.floor {
        Some(f) => kl_divergence_floored(&p, &q, f)?,
        None => kl_divergence(&p, &q)?,
    };
    let zeta = args.zeta.as_deref().map(parse_complex).transpose()?;
    let lambda = args.lambda.unwrap_or(f64::NAN);
    let zeta_v = zeta.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let (e_open, e_closed) = (shannon_entropy(&p), shannon_entropy(&q));
    let report = EntropyReport {
        epsilon: a.epsilon,
        level: args.level,
        regime: None,
        d_kl,
        e_open,
        e_closed,
        delta_e: e_open - e_closed,
        lamb_shift: lamb_shift(lambda, zeta_v),
        lambda,
        re_zeta: zeta_v.re,
        im_zeta: zeta_v.im,
        floored: args.floor.is_some(),
    };
    // values not supplied print as null
    println!("{}", to_json(&report));
    Ok(())
}

pub fn model(run: RunConfig, args: ModelArgs) -> Result<(), CliError> {
    let tol = args.tol.unwrap_or(DEFAULT_REGIME_TOL);
    if !(tol >= 0.0) {
        return Err(CliError::Usage(format!("tol must be non-negative, got {tol}")));
    }
    if let Some(draws) = args.draws {
        return model_draws(draws, args.seed.unwrap_or(run.seed));
    }
    let h = TwoLevelHamiltonian::new(
        args.eta11,
        args.eta22,
        parse_complex(&args.delta11)?,
        parse_complex(&args.delta22)?,
        args.delta_prime,
    );
    let ev = eigenvalues(&h);
    let regime = classify_regime(&h, tol)?;
    let gap = exceptional_point_gap(&h);
    let body = json!({
        "hamiltonian": h,
        "zeta_plus": [ev.zeta_plus.re, ev.zeta_plus.im],
        "zeta_minus": [ev.zeta_minus.re, ev.zeta_minus.im],
        "d": [ev.d.re, ev.d.im],
        "regime": regime,
        "coupling_margin": h.coupling_margin(),
        "exceptional_point_gap": [gap.re, gap.im],
    });
    println!("{}", to_json(&body));
    Ok(())
}

/// Random Hamiltonians checked against `zeta_+ + zeta_- = tr H` and
/// `zeta_+ zeta_- = det H`.
fn model_draws(draws: usize, seed: u64) -> Result<(), CliError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_trace, mut worst_det) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let mut u = || rng.gen_range(-1.0..1.0);
        let h = TwoLevelHamiltonian::new(u(), u(), Complex64::new(u(), u()), Complex64::new(u(), u()), u());
        let ev = eigenvalues(&h);
        let m = h.matrix();
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = 1.0 + tr.norm() + det.norm();
        worst_trace = worst_trace.max((ev.zeta_plus + ev.zeta_minus - tr).norm() / scale);
        worst_det = worst_det.max((ev.zeta_plus * ev.zeta_minus - det).norm() / scale);
    }
    let body = json!({
        "draws": draws,
        "seed": seed,
        "max_trace_residual": worst_trace,
        "max_det_residual": worst_det,
    });
    println!("{}", to_json(&body));
    if worst_trace > 1e-10 || worst_det > 1e-10 {
        return Err(CavityError::Domain(format!("two-level identities violated: {worst_trace:e}, {worst_det:e}")).into());
    }
    Ok(())
}
