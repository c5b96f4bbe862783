//! Crossbar array: memristors at every row/column intersection, with
//! inverting-opamp readout on the rows.
//!
//! Every row wire terminates in an ideal opamp with feedback resistance
//! `r_feedback`, so rows sit at exact virtual ground. Column `j` driven at
//! voltage `v_j` pushes current `v_j / M_ij` through cell `(i, j)`; the row
//! output is the inverted sum. Grades are reported with the inversion undone,
//! so driving a column at -1 V reads `r_feedback / M_ij` on each row.
//!
//! Virtual-ground rows null sneak paths exactly: an undriven (high-impedance)
//! column carries no current and floats at 0 V, so it contributes nothing.
//! Reads never move device state; the read pulse is taken to be narrow enough
//! by contract.

use ndarray::Array2;

use crate::device::{self, DeviceParams, DeviceState};
use crate::error::{Error, Result};

/// Substeps used to integrate one write pulse. Per-pulse state changes are
/// small (at most a few percent of M), where RK4 at this resolution is
/// accurate to ~1e-14 relative.
pub const WRITE_PULSE_SUBSTEPS: usize = 4;

/// Per-column stimulus for one read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveEntry {
    Voltage(f64),
    HighImpedance,
}

/// Stimulus vector, one entry per column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDrive(Vec<DriveEntry>);

impl ColumnDrive {
    pub fn new(entries: Vec<DriveEntry>) -> Self {
        Self(entries)
    }

    /// All columns floating.
    pub fn high_impedance(cols: usize) -> Self {
        Self(vec![DriveEntry::HighImpedance; cols])
    }

    /// One column driven, the rest floating.
    pub fn singleton(cols: usize, col: usize, v: f64) -> Self {
        let mut d = Self::high_impedance(cols);
        d.0[col] = DriveEntry::Voltage(v);
        d
    }

    /// Every column driven with the given voltages.
    pub fn from_voltages(vs: &[f64]) -> Self {
        Self(vs.iter().map(|&v| DriveEntry::Voltage(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[DriveEntry] {
        &self.0
    }
}

/// Per-row readout grades (opamp output magnitudes under the unit-amplitude
/// convention; dimensionless).
#[derive(Debug, Clone, PartialEq)]
pub struct ReadResult {
    pub grades: Vec<f64>,
}

/// The array value: device states and per-cell scale factors on a grid, plus
/// the shared feedback resistance.
///
/// Reads are pure; writes consume the array and return the updated value, so
/// snapshots are cheap to keep and write sequences are explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarArray {
    params: DeviceParams,
    r_feedback: f64,
    cell_states: Array2<DeviceState>,
    cell_scale: Array2<f64>,
}

impl CrossbarArray {
    /// Fresh array: every cell unprogrammed (`x = 0`, memristance `r_off`)
    /// with unit scale.
    pub fn new(rows: usize, cols: usize, params: DeviceParams, r_feedback: f64) -> Result<Self> {
        params.validate()?;
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArray(format!(
                "array must have at least one row and one column, got {rows}x{cols}"
            )));
        }
        if !(r_feedback.is_finite() && r_feedback >= params.r_on) {
            return Err(Error::FeedbackBelowROn {
                r_feedback,
                r_on: params.r_on,
            });
        }
        Ok(Self {
            params,
            r_feedback,
            cell_states: Array2::from_elem((rows, cols), DeviceState::fresh()),
            cell_scale: Array2::from_elem((rows, cols), 1.0),
        })
    }

    /// Rebuild an array from stored state, e.g. a snapshot file.
    pub fn from_parts(
        params: DeviceParams,
        r_feedback: f64,
        cell_states: Array2<DeviceState>,
        cell_scale: Array2<f64>,
    ) -> Result<Self> {
        let (rows, cols) = cell_states.dim();
        let mut array = Self::new(rows, cols, params, r_feedback)?;
        if cell_scale.dim() != (rows, cols) {
            return Err(Error::InvalidArray(format!(
                "scale grid {:?} does not match state grid {:?}",
                cell_scale.dim(),
                cell_states.dim()
            )));
        }
        for ((r, c), &s) in cell_scale.indexed_iter() {
            if !(0.5..=2.0).contains(&s) {
                return Err(Error::ScaleOutOfRange {
                    row: r,
                    col: c,
                    scale: s,
                });
            }
        }
        array.cell_states = cell_states;
        array.cell_scale = cell_scale;
        Ok(array)
    }

    pub fn rows(&self) -> usize {
        self.cell_states.nrows()
    }

    pub fn cols(&self) -> usize {
        self.cell_states.ncols()
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn r_feedback(&self) -> f64 {
        self.r_feedback
    }

    /// Smallest readable grade: what an unprogrammed cell returns under a
    /// unit singleton read.
    pub fn leakage_floor(&self) -> f64 {
        self.r_feedback / self.params.r_off
    }

    pub fn cell_state(&self, row: usize, col: usize) -> DeviceState {
        self.cell_states[(row, col)]
    }

    pub fn cell_scale(&self, row: usize, col: usize) -> f64 {
        self.cell_scale[(row, col)]
    }

    pub fn cell_states(&self) -> &Array2<DeviceState> {
        &self.cell_states
    }

    pub fn cell_scales(&self) -> &Array2<f64> {
        &self.cell_scale
    }

    /// Effective resistance at a crosspoint: scale times the state's
    /// memristance.
    pub fn cell_memristance(&self, row: usize, col: usize) -> f64 {
        self.cell_scale[(row, col)]
            * device::memristance(&self.params, self.cell_states[(row, col)])
    }

    /// Directly place a cell's state (test and snapshot plumbing; hardware
    /// goes through write pulses).
    pub fn set_cell_state(&mut self, row: usize, col: usize, state: DeviceState) -> Result<()> {
        self.check_cell(row, col)?;
        self.cell_states[(row, col)] = state;
        Ok(())
    }

    /// Inject device variability for one cell.
    pub fn set_cell_scale(&mut self, row: usize, col: usize, scale: f64) -> Result<()> {
        self.check_cell(row, col)?;
        if !(0.5..=2.0).contains(&scale) {
            return Err(Error::ScaleOutOfRange { row, col, scale });
        }
        self.cell_scale[(row, col)] = scale;
        Ok(())
    }

    fn check_cell(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.rows() || col >= self.cols() {
            return Err(Error::CellOutOfRange {
                row,
                col,
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        Ok(())
    }

    fn check_col(&self, col: usize) -> Result<()> {
        if col >= self.cols() {
            return Err(Error::ColumnOutOfRange {
                col,
                cols: self.cols(),
            });
        }
        Ok(())
    }

    /// Ideal inverting-summer readout. For each row `i`:
    ///
    /// ```text
    /// grade_i = r_feedback * sum over driven j of (-v_j) / M_ij
    /// ```
    ///
    /// High-impedance columns contribute nothing. Non-destructive: device
    /// state is untouched.
    pub fn read(&self, drive: &ColumnDrive) -> ReadResult {
        assert_eq!(
            drive.len(),
            self.cols(),
            "drive has {} entries for {} columns",
            drive.len(),
            self.cols()
        );
        let grades = (0..self.rows())
            .map(|i| {
                let mut sum = 0.0;
                for (j, entry) in drive.entries().iter().enumerate() {
                    if let DriveEntry::Voltage(v) = entry {
                        sum += -v / self.cell_memristance(i, j);
                    }
                }
                self.r_feedback * sum
            })
            .collect();
        ReadResult { grades }
    }

    /// The singleton-input read: -1 V narrow pulse on `col`, every other
    /// column high-impedance. Row `i` reads `r_feedback / M_i,col`.
    pub fn singleton_read(&self, col: usize) -> Result<ReadResult> {
        self.check_col(col)?;
        Ok(self.read(&ColumnDrive::singleton(self.cols(), col, -1.0)))
    }

    fn integrate_cell(&mut self, row: usize, col: usize, v: f64, width: f64) {
        // Scale s multiplies the cell resistance, so the current and the
        // drift rate divide by s: integrating at v/s on the unscaled device
        // is exact.
        let scale = self.cell_scale[(row, col)];
        let state = self.cell_states[(row, col)];
        self.cell_states[(row, col)] =
            device::apply_bias(&self.params, state, v / scale, width, WRITE_PULSE_SUBSTEPS);
    }

    /// Raw write pulse under the v/2 half-select discipline: the selected
    /// cell sees `v` for `width` seconds, cells sharing only the row or only
    /// the column see `v/2` (disturb is modeled, not ignored), all others 0.
    pub fn write_pulse(
        mut self,
        row: usize,
        col: usize,
        v: f64,
        width: f64,
    ) -> Result<CrossbarArray> {
        self.check_cell(row, col)?;
        if v == 0.0 {
            return Ok(self);
        }
        for j in 0..self.cols() {
            if j != col {
                self.integrate_cell(row, j, 0.5 * v, width);
            }
        }
        for i in 0..self.rows() {
            if i != row {
                self.integrate_cell(i, col, 0.5 * v, width);
            }
        }
        self.integrate_cell(row, col, v, width);
        Ok(self)
    }

    /// Write pulse with unselected rows and columns gated off (left
    /// high-impedance at the array periphery): only the selected cell sees a
    /// voltage, and with the rows at virtual ground there is no sneak path to
    /// disturb anything else.
    pub fn write_pulse_isolated(
        mut self,
        row: usize,
        col: usize,
        v: f64,
        width: f64,
    ) -> Result<CrossbarArray> {
        self.check_cell(row, col)?;
        if v != 0.0 {
            self.integrate_cell(row, col, v, width);
        }
        Ok(self)
    }
}
