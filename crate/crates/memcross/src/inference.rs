//! Query layer over a programmed array: singleton membership lookups,
//! componentwise multiplication with a fuzzy input number, and in-place
//! evolution of single membership samples.
//!
//! Grades are reported raw. An unprogrammed cell never reads zero but the
//! leakage floor r_feedback / r_off, and under a fuzzy-number drive every
//! off-path cell adds leakage; results carry the floor so callers can
//! threshold for themselves.

use crate::compiler::{self, LayoutKind, LayoutMeta};
use crate::crossbar::{ColumnDrive, CrossbarArray};
use crate::error::{Error, Result};
use crate::programming::{program_cell, ProgramConfig, ProgramReport};
use ndarray::Array2;

/// Sampled fuzzy set used as a query input, aligned to a quantization grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyNumber {
    samples: Vec<f64>,
}

impl FuzzyNumber {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        for &s in &samples {
            if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidMembership(format!(
                    "fuzzy number samples must lie in [0, 1], got {s}"
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Query payload: either one grade per set (singleton input) or one grade
/// per grid point (fuzzy input, already in domain order). Fuzzy grades can
/// exceed 1 slightly because leakage adds to every output.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryValues {
    Singleton { sets: Vec<String>, grades: Vec<f64> },
    Fuzzy { grades: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub values: QueryValues,
    /// r_feedback / r_off for the queried array: the grade of an empty cell.
    pub leakage_floor: f64,
}

fn expected_dims(layout: &LayoutMeta) -> (usize, usize) {
    let cols = layout.grid.cols();
    match &layout.kind {
        LayoutKind::RowPerSet { sets } => (sets.len(), cols),
        LayoutKind::Antidiagonal { .. } => (cols, cols),
    }
}

fn check_layout(array: &CrossbarArray, layout: &LayoutMeta) -> Result<()> {
    let (rows, cols) = expected_dims(layout);
    if (array.rows(), array.cols()) != (rows, cols) {
        return Err(Error::DimensionMismatch {
            target_rows: rows,
            target_cols: cols,
            rows: array.rows(),
            cols: array.cols(),
        });
    }
    Ok(())
}

/// Crisp query: quantize `x`, pulse its column with -1, and report one grade
/// per stored set. Sets with zero membership at `x` read the leakage floor,
/// not zero.
pub fn membership_query(array: &CrossbarArray, layout: &LayoutMeta, x: f64) -> Result<QueryResult> {
    let LayoutKind::RowPerSet { sets } = &layout.kind else {
        return Err(Error::WrongLayout {
            expected: "row-per-set",
        });
    };
    check_layout(array, layout)?;
    let col = compiler::quantize(&layout.grid, x)?;
    let read = array.singleton_read(col)?;
    Ok(QueryResult {
        values: QueryValues::Singleton {
            sets: sets.clone(),
            grades: read.grades,
        },
        leakage_floor: array.leakage_floor(),
    })
}

/// Fuzzy query: drive every column j at -input[j] simultaneously. Each
/// output sample is the stored membership times the input sample at that
/// grid point, plus leakage bounded by (N-1) * leakage_floor * max(input).
/// Outputs come back in domain order; the antidiagonal row reversal stays
/// internal.
pub fn fuzzy_number_query(
    array: &CrossbarArray,
    layout: &LayoutMeta,
    input: &FuzzyNumber,
) -> Result<QueryResult> {
    if !matches!(layout.kind, LayoutKind::Antidiagonal { .. }) {
        return Err(Error::WrongLayout {
            expected: "antidiagonal",
        });
    }
    check_layout(array, layout)?;
    let n = array.cols();
    if input.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: input.len(),
        });
    }
    let voltages: Vec<f64> = input.samples().iter().map(|&s| -s).collect();
    let read = array.read(&ColumnDrive::from_voltages(&voltages));
    // Row n-1-k answers for domain point k.
    let grades = (0..n).map(|k| read.grades[n - 1 - k]).collect();
    Ok(QueryResult {
        values: QueryValues::Fuzzy { grades },
        leakage_floor: array.leakage_floor(),
    })
}

/// Reprogram the single cell that stores `set`'s membership at `x` to
/// `new_mu` (r_off for zero), via the ordinary program-and-verify loop, so
/// stored functions can be adjusted while the system runs. Everything else
/// is untouched up to write disturb, which the report bounds.
pub fn evolve_cell(
    array: CrossbarArray,
    layout: &LayoutMeta,
    set: &str,
    x: f64,
    new_mu: f64,
    cfg: &ProgramConfig,
) -> Result<(CrossbarArray, ProgramReport)> {
    check_layout(&array, layout)?;
    let floor = array.leakage_floor();
    if !(0.0..=1.0).contains(&new_mu) {
        return Err(Error::InvalidMembership(format!(
            "membership must lie in [0, 1], got {new_mu}"
        )));
    }
    if new_mu > 0.0 && new_mu < floor {
        return Err(Error::UnrepresentableMu {
            requested: new_mu,
            floor,
        });
    }
    let (row, col) = layout.cell_for(set, x)?;
    let target = if new_mu == 0.0 {
        array.params().r_off
    } else {
        (layout.r_feedback / new_mu).min(array.params().r_off)
    };

    let (rows, cols) = (array.rows(), array.cols());
    let mut initial = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            initial[(r, c)] = array.cell_memristance(r, c);
        }
    }
    let (array, pulses) = program_cell(array, row, col, target, cfg)?;

    let mut pulse_counts = Array2::<u64>::zeros((rows, cols));
    pulse_counts[(row, col)] = pulses;
    let mut rel_errors = Array2::zeros((rows, cols));
    let measured = array.cell_memristance(row, col);
    rel_errors[(row, col)] = ((measured - target) / target).abs();
    let mut max_disturb = 0.0f64;
    for r in 0..rows {
        for c in 0..cols {
            if (r, c) != (row, col) {
                let drift =
                    ((array.cell_memristance(r, c) - initial[(r, c)]) / initial[(r, c)]).abs();
                max_disturb = max_disturb.max(drift);
            }
        }
    }
    let report = ProgramReport {
        pulse_counts,
        rel_errors,
        sweeps_used: 1,
        converged: true,
        max_disturb,
    };
    Ok((array, report))
}
