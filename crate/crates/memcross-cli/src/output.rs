//! CSV emitters for command output.
//!
//! Conventions shared by every emitter: comma delimiter, '.' decimal
//! separator, '#' comment lines carrying metadata (format version, grid,
//! leakage floor), numbers in Rust's shortest round-trip formatting. Set
//! names are restricted to `[A-Za-z0-9_.-]` at parse time, so fields never
//! need quoting.

use std::fmt::Write as _;
use std::path::Path;

use memcross::compiler::{LayoutKind, LayoutMeta, TargetMatrix};
use memcross::crossbar::CrossbarArray;
use memcross::programming::{measure_cell, ProgramReport};

use crate::error::{io_err, Result};

/// Atomic text write: sibling temp file, then rename.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

fn layout_line(layout: &LayoutMeta) -> String {
    match &layout.kind {
        LayoutKind::RowPerSet { sets } => format!("layout rows sets {}", sets.join(",")),
        LayoutKind::Antidiagonal { set } => format!("layout antidiagonal set {set}"),
    }
}

fn grid_line(layout: &LayoutMeta) -> String {
    format!(
        "grid {} {} {}",
        layout.grid.x_min, layout.grid.x_max, layout.grid.step
    )
}

/// Target matrix as one row per array row, columns labeled by domain value.
pub fn targets_csv(targets: &TargetMatrix, mu_floor: f64) -> String {
    let layout = targets.layout();
    let mut out = String::new();
    let _ = writeln!(out, "# memcross targets 1");
    let _ = writeln!(out, "# {}", layout_line(layout));
    let _ = writeln!(out, "# {}", grid_line(layout));
    let _ = writeln!(out, "# r_feedback {}", layout.r_feedback);
    let _ = writeln!(out, "# mu_floor {mu_floor}");
    out.push_str("row");
    for x in layout.grid.points() {
        let _ = write!(out, ",{x}");
    }
    out.push('\n');
    for r in 0..targets.rows() {
        let _ = write!(out, "{r}");
        for c in 0..targets.cols() {
            let _ = write!(out, ",{}", targets.target(r, c));
        }
        out.push('\n');
    }
    out
}

/// Programming outcome for every targeted cell (target below r_off).
pub fn report_csv(
    report: &ProgramReport,
    targets: &TargetMatrix,
    array: &CrossbarArray,
) -> Result<String> {
    let r_off = array.params().r_off;
    let mut out = String::new();
    let _ = writeln!(out, "# memcross report 1");
    let _ = writeln!(out, "# converged {}", report.converged);
    let _ = writeln!(out, "# sweeps {}", report.sweeps_used);
    let _ = writeln!(out, "# max_disturb {}", report.max_disturb);
    out.push_str("row,col,target_ohms,measured_ohms,pulses,rel_error\n");
    for r in 0..targets.rows() {
        for c in 0..targets.cols() {
            let target = targets.target(r, c);
            if target >= r_off {
                continue;
            }
            let measured = measure_cell(array, r, c)?;
            let _ = writeln!(
                out,
                "{r},{c},{target},{measured},{},{}",
                report.pulse_counts[(r, c)],
                report.rel_errors[(r, c)]
            );
        }
    }
    Ok(out)
}

/// Singleton query: one row per set. `ideals`, when present, follows set
/// order; missing ideals leave the field and the error column empty.
pub fn singleton_query_csv(
    x: f64,
    col: usize,
    sets: &[String],
    grades: &[f64],
    leakage_floor: f64,
    ideals: Option<&[f64]>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# memcross query 1");
    let _ = writeln!(out, "# leakage_floor {leakage_floor}");
    let _ = writeln!(out, "# x {x}");
    let _ = writeln!(out, "# column {col}");
    out.push_str("set,ideal_mu,grade,abs_error\n");
    for (i, (name, grade)) in sets.iter().zip(grades).enumerate() {
        match ideals.map(|v| v[i]) {
            Some(ideal) => {
                let _ = writeln!(out, "{name},{ideal},{grade},{}", (grade - ideal).abs());
            }
            None => {
                let _ = writeln!(out, "{name},,{grade},");
            }
        }
    }
    out
}

/// Fuzzy-number query: one row per grid point. `ideals` holds the expected
/// output (stored membership times input) when a spec was supplied.
pub fn fuzzy_query_csv(
    layout: &LayoutMeta,
    input: &[f64],
    grades: &[f64],
    leakage_floor: f64,
    ideals: Option<&[f64]>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# memcross query 1");
    let _ = writeln!(out, "# leakage_floor {leakage_floor}");
    let _ = writeln!(out, "# {}", grid_line(layout));
    out.push_str("x,input,ideal,grade,abs_error\n");
    for (k, (inp, grade)) in input.iter().zip(grades).enumerate() {
        let x = layout.grid.point(k);
        match ideals.map(|v| v[k]) {
            Some(ideal) => {
                let _ = writeln!(out, "{x},{inp},{ideal},{grade},{}", (grade - ideal).abs());
            }
            None => {
                let _ = writeln!(out, "{x},{inp},,{grade},");
            }
        }
    }
    out
}

/// Measured grade of every set at every grid point; plot-ready. `ideals`,
/// when present, appends one ideal-membership column per set.
pub fn sweep_csv(
    array: &CrossbarArray,
    layout: &LayoutMeta,
    ideals: Option<&[Vec<f64>]>,
) -> Result<String> {
    let names = layout.set_names();
    let cols = layout.grid.cols();
    let mut out = String::new();
    let _ = writeln!(out, "# memcross sweep 1");
    let _ = writeln!(out, "# leakage_floor {}", array.leakage_floor());
    let _ = writeln!(out, "# {}", grid_line(layout));
    out.push('x');
    for name in &names {
        let _ = write!(out, ",{name}");
    }
    if ideals.is_some() {
        for name in &names {
            let _ = write!(out, ",ideal_{name}");
        }
    }
    out.push('\n');
    for k in 0..cols {
        let _ = write!(out, "{}", layout.grid.point(k));
        let read = array.singleton_read(k)?;
        match &layout.kind {
            LayoutKind::RowPerSet { .. } => {
                for grade in &read.grades {
                    let _ = write!(out, ",{grade}");
                }
            }
            LayoutKind::Antidiagonal { .. } => {
                let _ = write!(out, ",{}", read.grades[cols - 1 - k]);
            }
        }
        if let Some(ideals) = ideals {
            for set_ideals in ideals {
                let _ = write!(out, ",{}", set_ideals[k]);
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Raw cell dump: state variable, scale factor and resulting memristance.
pub fn export_csv(array: &CrossbarArray) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# memcross export 1");
    let _ = writeln!(out, "# rows {}", array.rows());
    let _ = writeln!(out, "# cols {}", array.cols());
    let _ = writeln!(out, "# r_feedback {}", array.r_feedback());
    out.push_str("row,col,x,scale,memristance_ohms\n");
    for r in 0..array.rows() {
        for c in 0..array.cols() {
            let _ = writeln!(
                out,
                "{r},{c},{},{},{}",
                array.cell_state(r, c).x(),
                array.cell_scale(r, c),
                array.cell_memristance(r, c)
            );
        }
    }
    out
}
