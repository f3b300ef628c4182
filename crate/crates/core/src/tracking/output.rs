//! Sweep artifacts on disk.
//!
//! ```text
//! <dir>/sweep.json
//! <dir>/entropy.csv
//! <dir>/fields/eps_<value>_level<j>_<open|closed>.txt
//! <dir>/plots/fig1_real.csv  fig1_imag.csv  fig3_lamb.csv  fig4_dkl.csv  fig5_shannon.csv
//! ```
//!
//! Every file is written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{SweepResult, SweepStep};
use crate::entropy::{EntropyReport, CSV_HEADER};
use crate::error::{CavityError, Result};
use crate::mode_field::write_field_dump;

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| CavityError::Io(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn field_file_name(epsilon: f64, level: usize, open: bool) -> String {
    format!("eps_{epsilon:.4}_level{level}_{}.txt", if open { "open" } else { "closed" })
}

/// Writes the four field dumps of one solved deformation.
pub fn write_step_fields(dir: &Path, step: &SweepStep<'_>) -> Result<()> {
    let fields_dir = dir.join("fields");
    for (j, f) in step.fields.iter().enumerate() {
        for (open, field) in [(false, &f.closed), (true, &f.open)] {
            let mut buf = Vec::new();
            write_field_dump(field, &mut buf)?;
            atomic_write(&fields_dir.join(field_file_name(step.epsilon, j + 1, open)), &buf)?;
        }
    }
    Ok(())
}

pub fn entropy_csv(reports: &[[EntropyReport; 2]]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for pair in reports {
        for r in pair {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
    }
    s
}

fn table(header: &str, reports: &[[EntropyReport; 2]], row: impl Fn(&EntropyReport, &EntropyReport) -> Vec<f64>) -> String {
    let mut s = format!("{header}\n");
    for [a, b] in reports {
        let _ = write!(s, "{}", a.epsilon);
        for v in row(a, b) {
            let _ = write!(s, ",{v:e}");
        }
        s.push('\n');
    }
    s
}

/// One tidy table per figure: `(file name, contents)`.
pub fn plot_tables(result: &SweepResult) -> Vec<(&'static str, String)> {
    let r = &result.reports;
    vec![
        (
            "fig1_real.csv",
            table("epsilon,lambda_1,lambda_2,re_zeta_1,re_zeta_2", r, |a, b| {
                vec![a.lambda, b.lambda, a.re_zeta, b.re_zeta]
            }),
        ),
        ("fig1_imag.csv", table("epsilon,im_zeta_1,im_zeta_2", r, |a, b| vec![a.im_zeta, b.im_zeta])),
        ("fig3_lamb.csv", table("epsilon,lamb_shift_1,lamb_shift_2", r, |a, b| vec![a.lamb_shift, b.lamb_shift])),
        ("fig4_dkl.csv", table("epsilon,d_kl_1,d_kl_2", r, |a, b| vec![a.d_kl, b.d_kl])),
        (
            "fig5_shannon.csv",
            table(
                "epsilon,e_open_1,e_closed_1,delta_e_1,d_kl_1,e_open_2,e_closed_2,delta_e_2,d_kl_2",
                r,
                |a, b| vec![a.e_open, a.e_closed, a.delta_e, a.d_kl, b.e_open, b.e_closed, b.delta_e, b.d_kl],
            ),
        ),
    ]
}

/// Writes `sweep.json`, `entropy.csv` and the plot tables; returns the paths.
pub fn write_sweep_summary(dir: &Path, result: &SweepResult) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(result).map_err(|e| CavityError::Io(e.to_string()))?;
    let p = dir.join("sweep.json");
    atomic_write(&p, json.as_bytes())?;
    written.push(p);
    let p = dir.join("entropy.csv");
    atomic_write(&p, entropy_csv(&result.reports).as_bytes())?;
    written.push(p);
    for (name, body) in plot_tables(result) {
        let p = dir.join("plots").join(name);
        atomic_write(&p, body.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}
