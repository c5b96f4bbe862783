//! Compilation of continuous fuzzy sets into quantized target-memristance
//! matrices.
//!
//! A membership function is sampled on a uniform grid (one crossbar column
//! per grid point) and each sample `mu` becomes a target resistance
//! `r_feedback / mu`, so that a unit singleton read returns `mu` again. Two
//! layouts exist: one row per fuzzy set (singleton queries), and an N x N
//! antidiagonal placement of a single set (fuzzy-number queries).
//!
//! Memberships below the representability floor `r_feedback / r_off` would
//! need a resistance above `r_off`; they are clipped to `r_off` and read back
//! as the floor.

use ndarray::Array2;

use crate::device::DeviceParams;
use crate::error::{Error, Result};

/// Largest grid we will compile. Keeps a typo in a spec file from requesting
/// a billion-column array.
pub const MAX_GRID_COLS: usize = 65_536;

/// Membership function shape. Piecewise-linear and tabulated shapes both
/// interpolate linearly between their knots and are zero outside the knot
/// span; they are distinct names because they communicate different intent
/// (designed shape vs. sampled data).
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Zero outside [a, c], peak 1 at b. Degenerate sides (a = b or b = c)
    /// are steps.
    Triangular {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Zero outside [a, d], plateau 1 on [b, c].
    Trapezoidal {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    /// exp(-(x - mean)^2 / (2 sigma^2)), never exactly zero.
    Gaussian {
        mean: f64,
        sigma: f64,
    },
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
    Tabulated {
        samples: Vec<(f64, f64)>,
    },
}

/// A named fuzzy set.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipSpec {
    pub name: String,
    pub shape: Shape,
}

fn validate_knots(kind: &str, knots: &[(f64, f64)]) -> Result<()> {
    if knots.is_empty() {
        return Err(Error::InvalidMembership(format!(
            "{kind} needs at least one point"
        )));
    }
    for &(x, mu) in knots {
        if !x.is_finite() || !mu.is_finite() || !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidMembership(format!(
                "{kind} point ({x}, {mu}) outside x finite, mu in [0, 1]"
            )));
        }
    }
    for w in knots.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidMembership(format!(
                "{kind} x values must be strictly increasing, got {} then {}",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(())
}

/// Linear interpolation over knots, zero outside their span. A single knot
/// is a spike at that x.
fn interp(knots: &[(f64, f64)], x: f64) -> f64 {
    let n = knots.len();
    if x < knots[0].0 || x > knots[n - 1].0 {
        return 0.0;
    }
    for w in knots.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x <= x1 {
            if x == x0 {
                return y0;
            }
            return y0 + (x - x0) / (x1 - x0) * (y1 - y0);
        }
    }
    knots[n - 1].1
}

impl MembershipSpec {
    pub fn new(name: impl Into<String>, shape: Shape) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            shape,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidMembership(
                "set name must be non-empty".into(),
            ));
        }
        match &self.shape {
            Shape::Triangular { a, b, c } => {
                if ![a, b, c].iter().all(|v| v.is_finite()) || !(a <= b && b <= c) {
                    return Err(Error::InvalidMembership(format!(
                        "triangular needs finite a <= b <= c, got ({a}, {b}, {c})"
                    )));
                }
            }
            Shape::Trapezoidal { a, b, c, d } => {
                if ![a, b, c, d].iter().all(|v| v.is_finite()) || !(a <= b && b <= c && c <= d) {
                    return Err(Error::InvalidMembership(format!(
                        "trapezoidal needs finite a <= b <= c <= d, got ({a}, {b}, {c}, {d})"
                    )));
                }
            }
            Shape::Gaussian { mean, sigma } => {
                if !mean.is_finite() || !sigma.is_finite() || *sigma <= 0.0 {
                    return Err(Error::InvalidMembership(format!(
                        "gaussian needs finite mean and sigma > 0, got ({mean}, {sigma})"
                    )));
                }
            }
            Shape::PiecewiseLinear { knots } => validate_knots("piecewise-linear", knots)?,
            Shape::Tabulated { samples } => validate_knots("tabulated", samples)?,
        }
        Ok(())
    }

    /// Continuous membership value at `x`. Always in [0, 1].
    pub fn evaluate(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Triangular { a, b, c } => {
                if x < *a || x > *c {
                    0.0
                } else if x == *b {
                    1.0
                } else if x < *b {
                    (x - a) / (b - a)
                } else {
                    (c - x) / (c - b)
                }
            }
            Shape::Trapezoidal { a, b, c, d } => {
                if x < *a || x > *d {
                    0.0
                } else if x >= *b && x <= *c {
                    1.0
                } else if x < *b {
                    (x - a) / (b - a)
                } else {
                    (d - x) / (d - c)
                }
            }
            Shape::Gaussian { mean, sigma } => {
                let z = (x - mean) / sigma;
                (-0.5 * z * z).exp()
            }
            Shape::PiecewiseLinear { knots } => interp(knots, x),
            Shape::Tabulated { samples } => interp(samples, x),
        }
    }
}

/// Uniform discretization of the input domain: points `x_min + k * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub step: f64,
}

impl QuantizationGrid {
    pub fn new(x_min: f64, x_max: f64, step: f64) -> Result<Self> {
        let grid = Self { x_min, x_max, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x_min.is_finite() || !self.x_max.is_finite() || !self.step.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "grid values must be finite, got [{}, {}] step {}",
                self.x_min, self.x_max, self.step
            )));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if self.x_min >= self.x_max {
            return Err(Error::InvalidGrid(format!(
                "need x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        let raw = (self.x_max - self.x_min) / self.step;
        if raw > MAX_GRID_COLS as f64 {
            return Err(Error::InvalidGrid(format!(
                "grid would have about {raw:.0} columns, limit is {MAX_GRID_COLS}"
            )));
        }
        Ok(())
    }

    /// Number of grid points, floor((x_max - x_min)/step) + 1. The 1e-9
    /// slack absorbs division round-off when the span is an exact multiple
    /// of the step.
    pub fn cols(&self) -> usize {
        ((self.x_max - self.x_min) / self.step + 1e-9).floor() as usize + 1
    }

    /// Domain value of grid point `k`.
    pub fn point(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.cols()).map(|k| self.point(k)).collect()
    }
}

/// Nearest grid point for `x`; exact midpoints round toward +infinity. The
/// accepted domain is the closed interval [x_min - step/2, x_max + step/2];
/// values past the last grid point (possible when the span is not an exact
/// multiple of the step, or at the very top edge) clamp to the last column.
pub fn quantize(grid: &QuantizationGrid, x: f64) -> Result<usize> {
    let lo = grid.x_min - 0.5 * grid.step;
    let hi = grid.x_max + 0.5 * grid.step;
    if !x.is_finite() || x < lo || x > hi {
        return Err(Error::OutOfDomain { x, lo, hi });
    }
    let idx = ((x - grid.x_min) / grid.step + 0.5).floor();
    let idx = if idx < 0.0 { 0.0 } else { idx };
    Ok((idx as usize).min(grid.cols() - 1))
}

/// Membership samples of `spec` at every grid point.
pub fn sample_mf(spec: &MembershipSpec, grid: &QuantizationGrid) -> Vec<f64> {
    grid.points().iter().map(|&x| spec.evaluate(x)).collect()
}

/// Smallest encodable nonzero membership: the grade of a cell parked at
/// r_off.
pub fn mu_floor(params: &DeviceParams, r_feedback: f64) -> f64 {
    r_feedback / params.r_off
}

/// Grid points whose membership is nonzero yet below the floor; these clip
/// to r_off when compiled. Returned as (column, mu).
pub fn sub_floor_points(
    spec: &MembershipSpec,
    grid: &QuantizationGrid,
    params: &DeviceParams,
    r_feedback: f64,
) -> Vec<(usize, f64)> {
    let floor = mu_floor(params, r_feedback);
    sample_mf(spec, grid)
        .into_iter()
        .enumerate()
        .filter(|&(_, mu)| mu > 0.0 && mu < floor)
        .collect()
}

/// How target rows map onto fuzzy sets and domain points.
#[derive(Debug, Clone, PartialEq)]
pub enum LayoutKind {
    /// Row i holds the whole sampled membership function of set i.
    RowPerSet { sets: Vec<String> },
    /// N x N array storing one set's samples at cells (N-1-k, k).
    Antidiagonal { set: String },
}

/// Geometry record shared by target matrices, snapshots, and queries.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutMeta {
    pub kind: LayoutKind,
    pub grid: QuantizationGrid,
    pub r_feedback: f64,
}

impl LayoutMeta {
    pub fn set_names(&self) -> Vec<&str> {
        match &self.kind {
            LayoutKind::RowPerSet { sets } => sets.iter().map(|s| s.as_str()).collect(),
            LayoutKind::Antidiagonal { set } => vec![set.as_str()],
        }
    }

    /// Array cell holding set `name` at domain value `x`.
    pub fn cell_for(&self, name: &str, x: f64) -> Result<(usize, usize)> {
        let col = quantize(&self.grid, x)?;
        match &self.kind {
            LayoutKind::RowPerSet { sets } => {
                let row = sets
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| Error::UnknownSet {
                        name: name.to_string(),
                    })?;
                Ok((row, col))
            }
            LayoutKind::Antidiagonal { set } => {
                if set != name {
                    return Err(Error::UnknownSet {
                        name: name.to_string(),
                    });
                }
                Ok((self.grid.cols() - 1 - col, col))
            }
        }
    }
}

/// Target resistances for one array, plus the layout that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatrix {
    targets: Array2<f64>,
    layout: LayoutMeta,
}

impl TargetMatrix {
    pub fn rows(&self) -> usize {
        self.targets.nrows()
    }

    pub fn cols(&self) -> usize {
        self.targets.ncols()
    }

    pub fn target(&self, row: usize, col: usize) -> f64 {
        self.targets[(row, col)]
    }

    pub fn targets(&self) -> &Array2<f64> {
        &self.targets
    }

    pub fn layout(&self) -> &LayoutMeta {
        &self.layout
    }
}

fn check_compile_inputs(
    params: &DeviceParams,
    specs: &[MembershipSpec],
    grid: &QuantizationGrid,
    r_feedback: f64,
) -> Result<()> {
    params.validate()?;
    grid.validate()?;
    if specs.is_empty() {
        return Err(Error::InvalidMembership(
            "need at least one fuzzy set".into(),
        ));
    }
    for spec in specs {
        spec.validate()?;
    }
    for (i, a) in specs.iter().enumerate() {
        if specs[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::InvalidMembership(format!(
                "duplicate set name {:?}",
                a.name
            )));
        }
    }
    if !(r_feedback.is_finite() && r_feedback >= params.r_on) {
        return Err(Error::FeedbackBelowROn {
            r_feedback,
            r_on: params.r_on,
        });
    }
    Ok(())
}

/// Resistance encoding one membership sample. Sub-floor values clip to
/// r_off; the min() guards the division's last-ulp excursion above r_off
/// when mu sits exactly on the floor.
fn encode(mu: f64, r_feedback: f64, floor: f64, r_off: f64) -> f64 {
    if mu >= floor {
        (r_feedback / mu).min(r_off)
    } else {
        r_off
    }
}

/// One row per set: entry (i, j) encodes set i's membership at grid point j.
pub fn compile_rows(
    params: &DeviceParams,
    specs: &[MembershipSpec],
    grid: &QuantizationGrid,
    r_feedback: f64,
) -> Result<TargetMatrix> {
    check_compile_inputs(params, specs, grid, r_feedback)?;
    let floor = mu_floor(params, r_feedback);
    let cols = grid.cols();
    let mut targets = Array2::from_elem((specs.len(), cols), params.r_off);
    for (i, spec) in specs.iter().enumerate() {
        for (j, mu) in sample_mf(spec, grid).into_iter().enumerate() {
            targets[(i, j)] = encode(mu, r_feedback, floor, params.r_off);
        }
    }
    Ok(TargetMatrix {
        targets,
        layout: LayoutMeta {
            kind: LayoutKind::RowPerSet {
                sets: specs.iter().map(|s| s.name.clone()).collect(),
            },
            grid: *grid,
            r_feedback,
        },
    })
}

/// N x N layout with one set's sample for grid point k at cell (N-1-k, k);
/// every other cell stays at r_off. Row N-1-k answers for domain point k.
pub fn compile_antidiagonal(
    params: &DeviceParams,
    spec: &MembershipSpec,
    grid: &QuantizationGrid,
    r_feedback: f64,
) -> Result<TargetMatrix> {
    check_compile_inputs(params, std::slice::from_ref(spec), grid, r_feedback)?;
    let floor = mu_floor(params, r_feedback);
    let n = grid.cols();
    let mut targets = Array2::from_elem((n, n), params.r_off);
    for (k, mu) in sample_mf(spec, grid).into_iter().enumerate() {
        targets[(n - 1 - k, k)] = encode(mu, r_feedback, floor, params.r_off);
    }
    Ok(TargetMatrix {
        targets,
        layout: LayoutMeta {
            kind: LayoutKind::Antidiagonal {
                set: spec.name.clone(),
            },
            grid: *grid,
            r_feedback,
        },
    })
}
