//! The seven subcommands. Argument structs are clap derive sources; the
//! `cmd_*` functions hold all behavior so integration tests can go through
//! the binary and unit tests through the functions.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use memcross::compiler::{mu_floor, sample_mf, sub_floor_points, MembershipSpec, QuantizationGrid};
use memcross::crossbar::CrossbarArray;
use memcross::inference::{self, FuzzyNumber, QueryValues};
use memcross::programming::{measure_cell, program_matrix, ProgramConfig};

use crate::error::{io_err, CliError, Result};
use crate::output;
use crate::snapshot::{self, Snapshot};
use crate::spec_file::ProjectSpec;

fn validation(path: &Path, msg: String) -> CliError {
    CliError::Validation {
        path: path.display().to_string(),
        line: None,
        msg,
    }
}

/// Spec load with the optional --step override applied before compilation.
fn load_spec(path: &Path, step: Option<f64>) -> Result<ProjectSpec> {
    let mut spec = ProjectSpec::parse_file(path)?;
    if let Some(step) = step {
        spec.grid = QuantizationGrid::new(spec.grid.x_min, spec.grid.x_max, step)
            .map_err(|e| validation(path, e.to_string()))?;
    }
    Ok(spec)
}

fn find_set<'a>(path: &Path, spec: &'a ProjectSpec, name: &str) -> Result<&'a MembershipSpec> {
    spec.sets
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| validation(path, format!("spec does not define set {name}")))
}

fn check_grid_matches(path: &Path, spec: &ProjectSpec, snap: &Snapshot) -> Result<()> {
    if spec.grid != snap.layout.grid {
        return Err(validation(
            path,
            format!(
                "spec grid [{}, {}] step {} does not match the snapshot grid [{}, {}] step {}",
                spec.grid.x_min,
                spec.grid.x_max,
                spec.grid.step,
                snap.layout.grid.x_min,
                snap.layout.grid.x_max,
                snap.layout.grid.step
            ),
        ));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Project spec file
    #[arg(long)]
    pub spec: PathBuf,
    /// Target-matrix CSV to write
    #[arg(long)]
    pub out: PathBuf,
    /// Override the spec's grid step
    #[arg(long)]
    pub step: Option<f64>,
}

pub fn cmd_compile(args: &CompileArgs) -> Result<()> {
    let spec = load_spec(&args.spec, args.step)?;
    let targets = spec.compile()?;
    let floor = mu_floor(&spec.device, spec.r_feedback);
    output::write_text(&args.out, &output::targets_csv(&targets, floor))?;
    println!(
        "compiled {} set(s) onto {} grid column(s); array {} x {}",
        spec.sets.len(),
        spec.grid.cols(),
        targets.rows(),
        targets.cols()
    );
    println!("mu floor {floor}");
    for set in &spec.sets {
        let clipped = sub_floor_points(set, &spec.grid, &spec.device, spec.r_feedback);
        if !clipped.is_empty() {
            let mut points = String::new();
            for (k, mu) in &clipped {
                let _ = write!(points, " x={} (mu={mu})", spec.grid.point(*k));
            }
            println!(
                "warning: set {} has {} point(s) below the floor, clipped to r_off:{points}",
                set.name,
                clipped.len()
            );
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct ProgramArgs {
    /// Project spec file
    #[arg(long)]
    pub spec: PathBuf,
    /// Snapshot to continue from instead of a fresh array
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Snapshot file to write
    #[arg(long)]
    pub out: PathBuf,
    /// Report CSV to write (default: OUT with extension report.csv)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Override the spec's grid step
    #[arg(long)]
    pub step: Option<f64>,
    /// Override the spec's relative programming tolerance
    #[arg(long)]
    pub tolerance: Option<f64>,
}

pub fn cmd_program(args: &ProgramArgs) -> Result<()> {
    let spec = load_spec(&args.spec, args.step)?;
    let mut cfg = spec.program;
    if let Some(t) = args.tolerance {
        cfg.rel_tolerance = t;
    }
    let targets = spec.compile()?;
    let layout = targets.layout().clone();
    let array = match &args.snapshot {
        Some(path) => {
            let snap = snapshot::load(path)?;
            if snap.array.params() != &spec.device {
                return Err(validation(
                    path,
                    "snapshot device parameters differ from the spec".to_string(),
                ));
            }
            if snap.layout != layout {
                return Err(validation(
                    path,
                    "snapshot layout differs from the spec".to_string(),
                ));
            }
            snap.array
        }
        None => {
            let (rows, cols) = spec.array_dims();
            CrossbarArray::new(rows, cols, spec.device, spec.r_feedback)?
        }
    };
    let r_off = spec.device.r_off;
    let targeted = targets.targets().iter().filter(|&&t| t < r_off).count();
    let (array, report) = program_matrix(array, &targets, &cfg)?;
    snapshot::save(&args.out, &array, &layout)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.out.with_extension("report.csv"));
    output::write_text(
        &report_path,
        &output::report_csv(&report, &targets, &array)?,
    )?;
    let worst = report.rel_errors.iter().copied().fold(0.0, f64::max);
    println!(
        "programmed {targeted} cell(s) in {} sweep(s); converged {}",
        report.sweeps_used, report.converged
    );
    println!(
        "total pulses {}, worst relative error {worst}, max disturb {}",
        report.pulse_counts.sum(),
        report.max_disturb
    );
    println!("wrote {} and {}", args.out.display(), report_path.display());
    Ok(())
}

#[derive(Args, Debug)]
#[command(group(
    clap::ArgGroup::new("probe").required(true).args(["x", "input"])
))]
pub struct QueryArgs {
    /// Snapshot to query
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Singleton query at this domain value
    #[arg(long)]
    pub x: Option<f64>,
    /// Fuzzy-number file: one membership value per grid point
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Spec file supplying ideal-membership columns
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

/// Fuzzy-number file: values in [0, 1], whitespace or comma separated,
/// '#' comments allowed, exactly one value per grid point.
fn read_fuzzy_input(path: &Path, n: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let label = path.display().to_string();
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        for tok in line.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            let v: f64 = tok.parse().map_err(|_| CliError::Parse {
                path: label.clone(),
                line: idx + 1,
                msg: format!("cannot parse number {tok:?}"),
            })?;
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(CliError::Validation {
                    path: label.clone(),
                    line: Some(idx + 1),
                    msg: format!("membership values must lie in [0, 1], got {tok}"),
                });
            }
            values.push(v);
        }
    }
    if values.len() != n {
        return Err(CliError::Validation {
            path: label,
            line: None,
            msg: format!(
                "expected {n} values (one per grid point), found {}",
                values.len()
            ),
        });
    }
    Ok(values)
}

pub fn cmd_query(args: &QueryArgs) -> Result<()> {
    let snap = snapshot::load(&args.snapshot)?;
    let spec = match &args.spec {
        Some(p) => {
            let spec = load_spec(p, None)?;
            check_grid_matches(p, &spec, &snap)?;
            Some((p.clone(), spec))
        }
        None => None,
    };
    match (args.x, &args.input) {
        (Some(x), None) => {
            let result = inference::membership_query(&snap.array, &snap.layout, x)?;
            let QueryValues::Singleton { sets, grades } = &result.values else {
                unreachable!("membership_query returns singleton values")
            };
            let col = memcross::compiler::quantize(&snap.layout.grid, x)?;
            let ideals = match &spec {
                Some((path, spec)) => {
                    let mut v = Vec::with_capacity(sets.len());
                    for name in sets {
                        let set = find_set(path, spec, name)?;
                        v.push(set.evaluate(snap.layout.grid.point(col)));
                    }
                    Some(v)
                }
                None => None,
            };
            print!(
                "{}",
                output::singleton_query_csv(
                    x,
                    col,
                    sets,
                    grades,
                    result.leakage_floor,
                    ideals.as_deref()
                )
            );
        }
        (None, Some(input_path)) => {
            let input = read_fuzzy_input(input_path, snap.layout.grid.cols())?;
            let number = FuzzyNumber::new(input.clone())?;
            let result = inference::fuzzy_number_query(&snap.array, &snap.layout, &number)?;
            let QueryValues::Fuzzy { grades } = &result.values else {
                unreachable!("fuzzy_number_query returns fuzzy values")
            };
            let ideals = match &spec {
                Some((path, spec)) => {
                    let name = snap.layout.set_names()[0].to_string();
                    let set = find_set(path, spec, &name)?;
                    let mf = sample_mf(set, &snap.layout.grid);
                    Some(
                        mf.iter()
                            .zip(&input)
                            .map(|(mu, inp)| mu * inp)
                            .collect::<Vec<f64>>(),
                    )
                }
                None => None,
            };
            print!(
                "{}",
                output::fuzzy_query_csv(
                    &snap.layout,
                    &input,
                    grades,
                    result.leakage_floor,
                    ideals.as_deref()
                )
            );
        }
        _ => unreachable!("clap group enforces exactly one of --x and --input"),
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Snapshot to sweep
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Spec file supplying ideal-membership columns
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let snap = snapshot::load(&args.snapshot)?;
    let ideals = match &args.spec {
        Some(path) => {
            let spec = load_spec(path, None)?;
            check_grid_matches(path, &spec, &snap)?;
            let mut per_set = Vec::new();
            for name in snap.layout.set_names() {
                let set = find_set(path, &spec, name)?;
                per_set.push(sample_mf(set, &snap.layout.grid));
            }
            Some(per_set)
        }
        None => None,
    };
    print!(
        "{}",
        output::sweep_csv(&snap.array, &snap.layout, ideals.as_deref())?
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    /// Snapshot to update in place
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Stored set to change
    #[arg(long)]
    pub set: String,
    /// Domain value whose membership changes
    #[arg(long)]
    pub x: f64,
    /// New membership value (0, or within [floor, 1])
    #[arg(long)]
    pub mu: f64,
    /// Relative programming tolerance (default 0.01)
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Single-cell report CSV to write
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn cmd_evolve(args: &EvolveArgs) -> Result<()> {
    let snap = snapshot::load(&args.snapshot)?;
    let layout = snap.layout.clone();
    let r_off = snap.array.params().r_off;
    let mut cfg = ProgramConfig::default();
    if let Some(t) = args.tolerance {
        cfg.rel_tolerance = t;
    }
    let (row, col) = layout.cell_for(&args.set, args.x)?;
    let (array, report) =
        inference::evolve_cell(snap.array, &layout, &args.set, args.x, args.mu, &cfg)?;
    snapshot::save(&args.snapshot, &array, &layout)?;
    let pulses = report.pulse_counts[(row, col)];
    let rel_error = report.rel_errors[(row, col)];
    if let Some(report_path) = &args.report {
        let target = if args.mu == 0.0 {
            r_off
        } else {
            (layout.r_feedback / args.mu).min(r_off)
        };
        let measured = measure_cell(&array, row, col)?;
        let mut csv = String::new();
        let _ = writeln!(csv, "# memcross report 1");
        let _ = writeln!(csv, "# converged {}", report.converged);
        let _ = writeln!(csv, "# sweeps {}", report.sweeps_used);
        let _ = writeln!(csv, "# max_disturb {}", report.max_disturb);
        let _ = writeln!(csv, "row,col,target_ohms,measured_ohms,pulses,rel_error");
        let _ = writeln!(csv, "{row},{col},{target},{measured},{pulses},{rel_error}");
        output::write_text(report_path, &csv)?;
    }
    println!(
        "evolved set {} at x={} to mu={}: cell ({row}, {col}), {pulses} pulse(s), relative error {rel_error}, max disturb {}",
        args.set, args.x, args.mu, report.max_disturb
    );
    println!("updated {}", args.snapshot.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// Snapshot to export
    #[arg(long)]
    pub snapshot: PathBuf,
    /// CSV file to write (standard output when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_export(args: &ExportArgs) -> Result<()> {
    let snap = snapshot::load(&args.snapshot)?;
    let csv = output::export_csv(&snap.array);
    match &args.out {
        Some(path) => {
            output::write_text(path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ImportCheckArgs {
    /// Snapshot to validate
    #[arg(long)]
    pub snapshot: PathBuf,
}

pub fn cmd_import_check(args: &ImportCheckArgs) -> Result<()> {
    let snap = snapshot::load(&args.snapshot)?;
    let array = &snap.array;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in 0..array.rows() {
        for c in 0..array.cols() {
            let m = array.cell_memristance(r, c);
            lo = lo.min(m);
            hi = hi.max(m);
        }
    }
    println!("snapshot {} is valid", args.snapshot.display());
    println!(
        "array {} x {}, layout {}",
        array.rows(),
        array.cols(),
        match &snap.layout.kind {
            memcross::compiler::LayoutKind::RowPerSet { sets } =>
                format!("rows (sets {})", sets.join(",")),
            memcross::compiler::LayoutKind::Antidiagonal { set } =>
                format!("antidiagonal (set {set})"),
        }
    );
    println!(
        "grid [{}, {}] step {} ({} points)",
        snap.layout.grid.x_min,
        snap.layout.grid.x_max,
        snap.layout.grid.step,
        snap.layout.grid.cols()
    );
    println!(
        "r_feedback {} ohm, leakage floor {}",
        array.r_feedback(),
        array.leakage_floor()
    );
    println!("cell memristance range [{lo}, {hi}] ohm");
    Ok(())
}
