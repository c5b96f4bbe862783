//! Behavioral simulator of a memristor crossbar that stores fuzzy membership
//! functions as memristances.
//!
//! Each crossbar column stands for one quantized value of the input
//! variable, and a memristor programmed to `r_feedback / mu` makes the
//! inverting readout on its row report the membership grade `mu` when that
//! column is pulsed. The crate covers the full pipeline:
//!
//! - [`device`]: linear dopant-drift memristor model plus its closed-form
//!   solution under constant bias, used as the test oracle.
//! - [`crossbar`]: array state, ideal virtual-ground readout, raw write
//!   pulses (gated or half-select).
//! - [`compiler`]: membership shapes, grid quantization, and target
//!   memristance matrices in row or antidiagonal layout.
//! - [`programming`]: closed-loop program-and-verify with disturb
//!   accounting.
//! - [`inference`]: singleton and fuzzy-number queries, plus runtime
//!   evolution of stored memberships.
//!
//! ```
//! use memcross::compiler::{compile_rows, MembershipSpec, QuantizationGrid, Shape};
//! use memcross::crossbar::CrossbarArray;
//! use memcross::device::DeviceParams;
//! use memcross::inference::{membership_query, QueryValues};
//! use memcross::programming::{program_matrix, ProgramConfig};
//!
//! let params = DeviceParams::default();
//! let grid = QuantizationGrid::new(0.0, 4.0, 1.0).unwrap();
//! let set = MembershipSpec::new("warm", Shape::Triangular { a: 0.0, b: 2.0, c: 4.0 }).unwrap();
//! let targets = compile_rows(&params, &[set], &grid, params.r_on).unwrap();
//!
//! let array = CrossbarArray::new(1, grid.cols(), params, params.r_on).unwrap();
//! let (array, report) = program_matrix(array, &targets, &ProgramConfig::default()).unwrap();
//! assert!(report.converged);
//!
//! let result = membership_query(&array, targets.layout(), 2.0).unwrap();
//! let QueryValues::Singleton { grades, .. } = result.values else { unreachable!() };
//! assert!((grades[0] - 1.0).abs() < 0.011);
//! ```

pub mod compiler;
pub mod crossbar;
pub mod device;
pub mod error;
pub mod inference;
pub mod programming;

pub use compiler::{
    compile_antidiagonal, compile_rows, mu_floor, quantize, sample_mf, LayoutKind, LayoutMeta,
    MembershipSpec, QuantizationGrid, Shape, TargetMatrix,
};
pub use crossbar::{ColumnDrive, CrossbarArray, DriveEntry, ReadResult};
pub use device::{DeviceParams, DeviceState};
pub use error::{Error, Result};
pub use inference::{
    evolve_cell, fuzzy_number_query, membership_query, FuzzyNumber, QueryResult, QueryValues,
};
pub use programming::{
    measure_cell, program_cell, program_matrix, ProgramConfig, ProgramReport, WriteScheme,
};
