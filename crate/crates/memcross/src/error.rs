use thiserror::Error;

/// Errors shared across the simulator modules.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    #[error("invalid quantization grid: {0}")]
    InvalidGrid(String),

    #[error("invalid membership spec: {0}")]
    InvalidMembership(String),

    #[error("invalid array geometry: {0}")]
    InvalidArray(String),

    #[error("invalid program config: {0}")]
    InvalidConfig(String),

    #[error("column {col} out of range for array with {cols} columns")]
    ColumnOutOfRange { col: usize, cols: usize },

    #[error("cell ({row}, {col}) out of range for {rows}x{cols} array")]
    CellOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("cell scale {scale} at ({row}, {col}) outside [0.5, 2.0]")]
    ScaleOutOfRange { row: usize, col: usize, scale: f64 },

    #[error("x = {x} outside quantizable domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("feedback resistance {r_feedback} ohm below r_on {r_on} ohm; a membership grade of 1 is not representable")]
    FeedbackBelowROn { r_feedback: f64, r_on: f64 },

    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("target matrix is {target_rows}x{target_cols} but array is {rows}x{cols}")]
    DimensionMismatch {
        target_rows: usize,
        target_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("unknown fuzzy set {name:?}")]
    UnknownSet { name: String },

    #[error("operation requires a {expected} layout")]
    WrongLayout { expected: &'static str },

    #[error("membership {requested} not representable: nonzero grades below the leakage floor {floor} cannot be encoded")]
    UnrepresentableMu { requested: f64, floor: f64 },

    #[error("cell ({row}, {col}) did not converge: target {target_ohms} ohm, measured {measured_ohms} ohm after {pulses} pulses")]
    CellNonConvergence {
        row: usize,
        col: usize,
        target_ohms: f64,
        measured_ohms: f64,
        pulses: u64,
    },

    #[error("array did not converge within {sweeps} sweeps; worst cell ({row}, {col}) at relative error {rel_error}")]
    MatrixNonConvergence {
        row: usize,
        col: usize,
        rel_error: f64,
        sweeps: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
