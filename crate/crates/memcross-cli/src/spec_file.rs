//! Project spec files: a line-oriented section/key-value format.
//!
//! ```text
//! # comment
//! [device]
//! r_on 100
//! r_off 16k
//! length_d 10n
//! mobility 1e-14
//!
//! [grid]
//! x_min 0
//! x_max 13
//! step 1
//!
//! [layout]
//! kind rows            # or: antidiagonal
//! r_feedback 100
//!
//! [program]
//! write_voltage 1
//! pulse_width 1u
//! rel_tolerance 0.01
//! max_pulses_per_cell 1M
//! max_sweeps 5
//! write_scheme gated   # or: half-select
//!
//! [set A]
//! shape tabulated      # triangular | trapezoidal | gaussian | piecewise | tabulated
//! point 3 0.25
//! ```
//!
//! Numbers are decimal with optional SI suffix (p, n, u, m, k, M, G).
//! `[grid]` and at least one `[set]` are required; everything else defaults.
//! Row order of sets follows file order. `#` starts a comment anywhere on a
//! line.

use std::path::Path;

use memcross::compiler::{
    compile_antidiagonal, compile_rows, MembershipSpec, QuantizationGrid, Shape, TargetMatrix,
};
use memcross::device::DeviceParams;
use memcross::programming::{ProgramConfig, WriteScheme};

use crate::error::{io_err, CliError, Result};

/// Number with optional SI suffix. Rejects non-finite values.
pub fn parse_number(s: &str) -> Option<f64> {
    let (body, mult) = match s.chars().last()? {
        'p' => (&s[..s.len() - 1], 1e-12),
        'n' => (&s[..s.len() - 1], 1e-9),
        'u' => (&s[..s.len() - 1], 1e-6),
        'm' => (&s[..s.len() - 1], 1e-3),
        'k' => (&s[..s.len() - 1], 1e3),
        'M' => (&s[..s.len() - 1], 1e6),
        'G' => (&s[..s.len() - 1], 1e9),
        _ => (s, 1.0),
    };
    let v: f64 = body.parse().ok()?;
    let v = v * mult;
    v.is_finite().then_some(v)
}

/// Which array layout the spec requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecLayout {
    Rows,
    Antidiagonal,
}

/// Everything a pipeline run needs, parsed and validated.
#[derive(Debug, Clone)]
pub struct ProjectSpec {
    pub device: DeviceParams,
    pub grid: QuantizationGrid,
    pub layout: SpecLayout,
    pub r_feedback: f64,
    pub sets: Vec<MembershipSpec>,
    pub program: ProgramConfig,
}

impl ProjectSpec {
    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    pub fn parse_str(text: &str, label: &str) -> Result<Self> {
        Parser::new(label).parse(text)
    }

    /// Array shape implied by the layout.
    pub fn array_dims(&self) -> (usize, usize) {
        let cols = self.grid.cols();
        match self.layout {
            SpecLayout::Rows => (self.sets.len(), cols),
            SpecLayout::Antidiagonal => (cols, cols),
        }
    }

    pub fn compile(&self) -> Result<TargetMatrix> {
        let m = match self.layout {
            SpecLayout::Rows => {
                compile_rows(&self.device, &self.sets, &self.grid, self.r_feedback)?
            }
            SpecLayout::Antidiagonal => {
                compile_antidiagonal(&self.device, &self.sets[0], &self.grid, self.r_feedback)?
            }
        };
        Ok(m)
    }
}

fn valid_set_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

#[derive(Debug, Default)]
struct SetBuilder {
    name: String,
    header_line: usize,
    shape: Option<(String, usize)>,
    scalars: Vec<(String, f64, usize)>,
    points: Vec<(f64, f64)>,
}

enum Section {
    None,
    Device,
    Grid,
    Layout,
    Program,
    Set(SetBuilder),
}

struct Parser {
    label: String,
    device: DeviceParams,
    grid_fields: (Option<f64>, Option<f64>, Option<f64>),
    layout: SpecLayout,
    r_feedback: Option<f64>,
    program: ProgramConfig,
    sets: Vec<MembershipSpec>,
    seen_keys: Vec<String>,
}

impl Parser {
    fn new(label: &str) -> Self {
        Self {
            label: label.to_string(),
            device: DeviceParams::default(),
            grid_fields: (None, None, None),
            layout: SpecLayout::Rows,
            r_feedback: None,
            program: ProgramConfig::default(),
            sets: Vec::new(),
            seen_keys: Vec::new(),
        }
    }

    fn parse_err(&self, line: usize, msg: impl Into<String>) -> CliError {
        CliError::Parse {
            path: self.label.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn validation_err(&self, line: Option<usize>, msg: impl Into<String>) -> CliError {
        CliError::Validation {
            path: self.label.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn number(&self, line: usize, key: &str, value: &str) -> Result<f64> {
        parse_number(value)
            .ok_or_else(|| self.parse_err(line, format!("{key}: cannot parse number {value:?}")))
    }

    fn count(&self, line: usize, key: &str, value: &str) -> Result<u64> {
        let v = self.number(line, key, value)?;
        if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(self.parse_err(
                line,
                format!("{key}: expected a whole count, got {value:?}"),
            ));
        }
        Ok(v as u64)
    }

    /// Duplicate-key guard, scoped per section instance.
    fn note_key(&mut self, line: usize, scope: &str, key: &str) -> Result<()> {
        let tag = format!("{scope}\u{0}{key}");
        if self.seen_keys.contains(&tag) {
            return Err(self.parse_err(line, format!("duplicate key {key} in [{scope}]")));
        }
        self.seen_keys.push(tag);
        Ok(())
    }

    fn parse(mut self, text: &str) -> Result<ProjectSpec> {
        let mut section = Section::None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('[') {
                let Some(header) = header.strip_suffix(']') else {
                    return Err(self.parse_err(line_no, "section header missing closing bracket"));
                };
                section = self.open_section(line_no, header.trim(), section)?;
                continue;
            }
            let (key, value) = match line.split_once(char::is_whitespace) {
                Some((k, v)) => (k, v.trim()),
                None => (line, ""),
            };
            if value.is_empty() {
                return Err(self.parse_err(line_no, format!("key {key} has no value")));
            }
            self.entry(line_no, &mut section, key, value)?;
        }
        self.finish_section(section)?;
        self.finish()
    }

    fn open_section(&mut self, line: usize, header: &str, prev: Section) -> Result<Section> {
        self.finish_section(prev)?;
        let section = match header {
            "device" => Section::Device,
            "grid" => Section::Grid,
            "layout" => Section::Layout,
            "program" => Section::Program,
            _ => {
                let Some(name) = header.strip_prefix("set ") else {
                    return Err(self.parse_err(line, format!("unknown section [{header}]")));
                };
                let name = name.trim();
                if !valid_set_name(name) {
                    return Err(self.parse_err(
                        line,
                        format!("set name {name:?} must use only letters, digits, '_', '.', '-'"),
                    ));
                }
                if self.sets.iter().any(|s| s.name == name) {
                    return Err(self.parse_err(line, format!("duplicate set name {name:?}")));
                }
                Section::Set(SetBuilder {
                    name: name.to_string(),
                    header_line: line,
                    ..SetBuilder::default()
                })
            }
        };
        Ok(section)
    }

    fn entry(&mut self, line: usize, section: &mut Section, key: &str, value: &str) -> Result<()> {
        match section {
            Section::None => Err(self.parse_err(line, format!("key {key} outside any section"))),
            Section::Device => {
                self.note_key(line, "device", key)?;
                let v = self.number(line, key, value)?;
                match key {
                    "r_on" => self.device.r_on = v,
                    "r_off" => self.device.r_off = v,
                    "length_d" => self.device.length_d = v,
                    "mobility" => self.device.mobility = v,
                    _ => return Err(self.parse_err(line, format!("unknown device key {key}"))),
                }
                Ok(())
            }
            Section::Grid => {
                self.note_key(line, "grid", key)?;
                let v = self.number(line, key, value)?;
                match key {
                    "x_min" => self.grid_fields.0 = Some(v),
                    "x_max" => self.grid_fields.1 = Some(v),
                    "step" => self.grid_fields.2 = Some(v),
                    _ => return Err(self.parse_err(line, format!("unknown grid key {key}"))),
                }
                Ok(())
            }
            Section::Layout => {
                self.note_key(line, "layout", key)?;
                match key {
                    "kind" => {
                        self.layout = match value {
                            "rows" => SpecLayout::Rows,
                            "antidiagonal" => SpecLayout::Antidiagonal,
                            _ => {
                                return Err(self.parse_err(
                                    line,
                                    format!(
                                        "layout kind must be rows or antidiagonal, got {value}"
                                    ),
                                ))
                            }
                        }
                    }
                    "r_feedback" => self.r_feedback = Some(self.number(line, key, value)?),
                    _ => return Err(self.parse_err(line, format!("unknown layout key {key}"))),
                }
                Ok(())
            }
            Section::Program => {
                self.note_key(line, "program", key)?;
                match key {
                    "write_voltage" => {
                        self.program.write_voltage = self.number(line, key, value)?
                    }
                    "pulse_width" => self.program.pulse_width = self.number(line, key, value)?,
                    "rel_tolerance" => {
                        self.program.rel_tolerance = self.number(line, key, value)?
                    }
                    "max_pulses_per_cell" => {
                        self.program.max_pulses_per_cell = self.count(line, key, value)?
                    }
                    "max_sweeps" => {
                        self.program.max_sweeps = self.count(line, key, value)? as usize
                    }
                    "write_scheme" => {
                        self.program.write_scheme = match value {
                            "gated" => WriteScheme::Gated,
                            "half-select" | "half_select" => WriteScheme::HalfSelect,
                            _ => {
                                return Err(self.parse_err(
                                    line,
                                    format!(
                                        "write_scheme must be gated or half-select, got {value}"
                                    ),
                                ))
                            }
                        }
                    }
                    _ => return Err(self.parse_err(line, format!("unknown program key {key}"))),
                }
                Ok(())
            }
            Section::Set(builder) => {
                match key {
                    "shape" => {
                        if builder.shape.is_some() {
                            return Err(self.parse_err(line, "duplicate shape key"));
                        }
                        builder.shape = Some((value.to_string(), line));
                    }
                    "point" => {
                        let parts: Vec<&str> = value.split_whitespace().collect();
                        if parts.len() != 2 {
                            return Err(self.parse_err(line, "point needs two numbers: point X MU"));
                        }
                        let x = self.number(line, "point x", parts[0])?;
                        let mu = self.number(line, "point mu", parts[1])?;
                        builder.points.push((x, mu));
                    }
                    "a" | "b" | "c" | "d" | "mean" | "sigma" => {
                        if builder.scalars.iter().any(|(k, _, _)| k == key) {
                            return Err(self.parse_err(line, format!("duplicate key {key}")));
                        }
                        let v = self.number(line, key, value)?;
                        builder.scalars.push((key.to_string(), v, line));
                    }
                    _ => return Err(self.parse_err(line, format!("unknown set key {key}"))),
                }
                Ok(())
            }
        }
    }

    fn finish_section(&mut self, section: Section) -> Result<()> {
        let Section::Set(builder) = section else {
            return Ok(());
        };
        let spec = self.build_set(builder)?;
        self.sets.push(spec);
        Ok(())
    }

    fn build_set(&self, b: SetBuilder) -> Result<MembershipSpec> {
        let Some((shape_name, shape_line)) = &b.shape else {
            return Err(self.parse_err(b.header_line, format!("set {} has no shape key", b.name)));
        };
        let scalar = |key: &str| -> Result<f64> {
            b.scalars
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, _)| *v)
                .ok_or_else(|| {
                    self.parse_err(*shape_line, format!("shape {shape_name} needs key {key}"))
                })
        };
        let no_points = || -> Result<()> {
            if b.points.is_empty() {
                Ok(())
            } else {
                Err(self.parse_err(
                    *shape_line,
                    format!("shape {shape_name} takes no point lines"),
                ))
            }
        };
        let shape = match shape_name.as_str() {
            "triangular" => {
                no_points()?;
                Shape::Triangular {
                    a: scalar("a")?,
                    b: scalar("b")?,
                    c: scalar("c")?,
                }
            }
            "trapezoidal" => {
                no_points()?;
                Shape::Trapezoidal {
                    a: scalar("a")?,
                    b: scalar("b")?,
                    c: scalar("c")?,
                    d: scalar("d")?,
                }
            }
            "gaussian" => {
                no_points()?;
                Shape::Gaussian {
                    mean: scalar("mean")?,
                    sigma: scalar("sigma")?,
                }
            }
            "piecewise" => Shape::PiecewiseLinear {
                knots: b.points.clone(),
            },
            "tabulated" => Shape::Tabulated {
                samples: b.points.clone(),
            },
            _ => {
                return Err(self.parse_err(
                    *shape_line,
                    format!(
                        "unknown shape {shape_name}; expected triangular, trapezoidal, gaussian, piecewise or tabulated"
                    ),
                ))
            }
        };
        MembershipSpec::new(b.name.clone(), shape)
            .map_err(|e| self.validation_err(Some(b.header_line), e.to_string()))
    }

    fn finish(self) -> Result<ProjectSpec> {
        let grid = match self.grid_fields {
            (Some(x_min), Some(x_max), Some(step)) => QuantizationGrid::new(x_min, x_max, step)
                .map_err(|e| self.validation_err(None, e.to_string()))?,
            (None, None, None) => {
                return Err(self.validation_err(None, "missing required [grid] section"))
            }
            _ => return Err(self.validation_err(None, "[grid] needs all of x_min, x_max and step")),
        };
        self.device
            .validate()
            .map_err(|e| self.validation_err(None, e.to_string()))?;
        self.program
            .validate()
            .map_err(|e| self.validation_err(None, e.to_string()))?;
        if self.sets.is_empty() {
            return Err(self.validation_err(None, "spec defines no [set] sections"));
        }
        if self.layout == SpecLayout::Antidiagonal && self.sets.len() != 1 {
            return Err(self.validation_err(
                None,
                format!(
                    "antidiagonal layout stores exactly one set, spec defines {}",
                    self.sets.len()
                ),
            ));
        }
        Ok(ProjectSpec {
            device: self.device,
            grid,
            layout: self.layout,
            r_feedback: self.r_feedback.unwrap_or(self.device.r_on),
            sets: self.sets,
            program: self.program,
        })
    }
}
