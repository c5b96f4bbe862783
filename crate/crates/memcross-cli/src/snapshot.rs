//! Array snapshots: persisted device state plus the layout needed to query it.
//!
//! Plain text, one record per line:
//!
//! ```text
//! memcross snapshot 1
//! rows 2
//! cols 14
//! r_on 100
//! r_off 16000
//! length_d 0.00000001
//! mobility 0.00000000000001
//! r_feedback 100
//! x_min 0
//! x_max 13
//! step 1
//! layout rows
//! sets A,B
//! cell 0 0 0.96875 1
//! ```
//!
//! The state variable `x` is stored, not the memristance, so reloading is
//! exact regardless of device parameters. Numbers use Rust's shortest
//! round-trip formatting; parsing them back yields bit-identical values.
//! Saves go through a sibling temp file and an atomic rename.

use std::fmt::Write as _;
use std::path::Path;

use memcross::compiler::{LayoutKind, LayoutMeta, QuantizationGrid};
use memcross::crossbar::CrossbarArray;
use memcross::device::{DeviceParams, DeviceState};
use ndarray::Array2;

use crate::error::{io_err, CliError, Result};

const MAGIC: &str = "memcross snapshot 1";

/// A reloaded array together with its layout record.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub array: CrossbarArray,
    pub layout: LayoutMeta,
}

pub fn render(array: &CrossbarArray, layout: &LayoutMeta) -> String {
    let p = array.params();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "rows {}", array.rows());
    let _ = writeln!(out, "cols {}", array.cols());
    let _ = writeln!(out, "r_on {}", p.r_on);
    let _ = writeln!(out, "r_off {}", p.r_off);
    let _ = writeln!(out, "length_d {}", p.length_d);
    let _ = writeln!(out, "mobility {}", p.mobility);
    let _ = writeln!(out, "r_feedback {}", array.r_feedback());
    let _ = writeln!(out, "x_min {}", layout.grid.x_min);
    let _ = writeln!(out, "x_max {}", layout.grid.x_max);
    let _ = writeln!(out, "step {}", layout.grid.step);
    match &layout.kind {
        LayoutKind::RowPerSet { sets } => {
            let _ = writeln!(out, "layout rows");
            let _ = writeln!(out, "sets {}", sets.join(","));
        }
        LayoutKind::Antidiagonal { set } => {
            let _ = writeln!(out, "layout antidiagonal");
            let _ = writeln!(out, "set {set}");
        }
    }
    for r in 0..array.rows() {
        for c in 0..array.cols() {
            let _ = writeln!(
                out,
                "cell {r} {c} {} {}",
                array.cell_state(r, c).x(),
                array.cell_scale(r, c)
            );
        }
    }
    out
}

/// Writes via `<path>.tmp` + rename so readers never see a torn file.
pub fn save(path: &Path, array: &CrossbarArray, layout: &LayoutMeta) -> Result<()> {
    crate::output::write_text(path, &render(array, layout))
}

pub fn load(path: &Path) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse(&text, &path.display().to_string())
}

struct Header {
    rows: Option<usize>,
    cols: Option<usize>,
    r_on: Option<f64>,
    r_off: Option<f64>,
    length_d: Option<f64>,
    mobility: Option<f64>,
    r_feedback: Option<f64>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    step: Option<f64>,
    layout: Option<String>,
    sets: Option<Vec<String>>,
}

pub fn parse(text: &str, label: &str) -> Result<Snapshot> {
    let parse_err = |line: usize, msg: String| CliError::Parse {
        path: label.to_string(),
        line,
        msg,
    };
    let validation_err = |line: Option<usize>, msg: String| CliError::Validation {
        path: label.to_string(),
        line,
        msg,
    };
    let number = |line: usize, key: &str, s: &str| -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| parse_err(line, format!("{key}: cannot parse number {s:?}")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("{key}: {s:?} is not finite")));
        }
        Ok(v)
    };
    let index = |line: usize, key: &str, s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| parse_err(line, format!("{key}: cannot parse integer {s:?}")))
    };

    let mut h = Header {
        rows: None,
        cols: None,
        r_on: None,
        r_off: None,
        length_d: None,
        mobility: None,
        r_feedback: None,
        x_min: None,
        x_max: None,
        step: None,
        layout: None,
        sets: None,
    };
    let mut cells: Vec<(usize, usize, f64, f64, usize)> = Vec::new();
    let mut saw_magic = false;

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
        if !saw_magic {
            if line != MAGIC {
                return Err(parse_err(
                    line_no,
                    format!("expected header {MAGIC:?}, got {line:?}"),
                ));
            }
            saw_magic = true;
            continue;
        }
        let (key, value) = match line.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => (line, ""),
        };
        if value.is_empty() {
            return Err(parse_err(line_no, format!("key {key} has no value")));
        }
        macro_rules! set_once {
            ($field:ident, $val:expr) => {{
                if h.$field.is_some() {
                    return Err(parse_err(line_no, format!("duplicate key {key}")));
                }
                h.$field = Some($val);
            }};
        }
        match key {
            "rows" => set_once!(rows, index(line_no, key, value)?),
            "cols" => set_once!(cols, index(line_no, key, value)?),
            "r_on" => set_once!(r_on, number(line_no, key, value)?),
            "r_off" => set_once!(r_off, number(line_no, key, value)?),
            "length_d" => set_once!(length_d, number(line_no, key, value)?),
            "mobility" => set_once!(mobility, number(line_no, key, value)?),
            "r_feedback" => set_once!(r_feedback, number(line_no, key, value)?),
            "x_min" => set_once!(x_min, number(line_no, key, value)?),
            "x_max" => set_once!(x_max, number(line_no, key, value)?),
            "step" => set_once!(step, number(line_no, key, value)?),
            "layout" => {
                if !matches!(value, "rows" | "antidiagonal") {
                    return Err(parse_err(
                        line_no,
                        format!("layout must be rows or antidiagonal, got {value}"),
                    ));
                }
                set_once!(layout, value.to_string())
            }
            "sets" | "set" => {
                let names: Vec<String> = value.split(',').map(|s| s.trim().to_string()).collect();
                if names.iter().any(|n| n.is_empty()) {
                    return Err(parse_err(line_no, "empty set name".to_string()));
                }
                if key == "set" && names.len() != 1 {
                    return Err(parse_err(line_no, "key set takes one name".to_string()));
                }
                set_once!(sets, names)
            }
            "cell" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 4 {
                    return Err(parse_err(
                        line_no,
                        "cell needs four fields: cell ROW COL X SCALE".to_string(),
                    ));
                }
                let r = index(line_no, "cell row", parts[0])?;
                let c = index(line_no, "cell col", parts[1])?;
                let x = number(line_no, "cell x", parts[2])?;
                let scale = number(line_no, "cell scale", parts[3])?;
                cells.push((r, c, x, scale, line_no));
            }
            _ => return Err(parse_err(line_no, format!("unknown key {key}"))),
        }
    }
    if !saw_magic {
        return Err(parse_err(1, format!("missing header {MAGIC:?}")));
    }

    macro_rules! require {
        ($field:ident) => {
            h.$field.ok_or_else(|| {
                validation_err(None, format!("missing key {}", stringify!($field)))
            })?
        };
    }
    let rows = require!(rows);
    let cols = require!(cols);
    let params = DeviceParams::new(
        require!(r_on),
        require!(r_off),
        require!(length_d),
        require!(mobility),
    )
    .map_err(|e| validation_err(None, e.to_string()))?;
    let r_feedback = require!(r_feedback);
    let grid = QuantizationGrid::new(require!(x_min), require!(x_max), require!(step))
        .map_err(|e| validation_err(None, e.to_string()))?;
    let layout_name = require!(layout);
    let sets = require!(sets);

    if grid.cols() != cols {
        return Err(validation_err(
            None,
            format!("grid spans {} columns but cols is {cols}", grid.cols()),
        ));
    }
    let kind = match layout_name.as_str() {
        "rows" => {
            if sets.len() != rows {
                return Err(validation_err(
                    None,
                    format!(
                        "layout rows needs one set per row: {} sets, {rows} rows",
                        sets.len()
                    ),
                ));
            }
            LayoutKind::RowPerSet { sets }
        }
        _ => {
            if sets.len() != 1 {
                return Err(validation_err(
                    None,
                    format!("antidiagonal layout stores one set, found {}", sets.len()),
                ));
            }
            if rows != cols {
                return Err(validation_err(
                    None,
                    format!("antidiagonal layout needs a square array, got {rows}x{cols}"),
                ));
            }
            LayoutKind::Antidiagonal {
                set: sets.into_iter().next().unwrap(),
            }
        }
    };

    if cells.len() != rows * cols {
        return Err(validation_err(
            None,
            format!("expected {} cell lines, found {}", rows * cols, cells.len()),
        ));
    }
    let mut states = Array2::from_elem((rows, cols), DeviceState::fresh());
    let mut scales = Array2::from_elem((rows, cols), f64::NAN);
    for (r, c, x, scale, line_no) in cells {
        if r >= rows || c >= cols {
            return Err(validation_err(
                Some(line_no),
                format!("cell ({r}, {c}) outside a {rows}x{cols} array"),
            ));
        }
        if scales[(r, c)].is_finite() {
            return Err(validation_err(
                Some(line_no),
                format!("cell ({r}, {c}) appears twice"),
            ));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(validation_err(
                Some(line_no),
                format!("cell x must lie in [0, 1], got {x}"),
            ));
        }
        states[(r, c)] = DeviceState::new(x);
        scales[(r, c)] = scale;
    }

    let array = CrossbarArray::from_parts(params, r_feedback, states, scales)
        .map_err(|e| validation_err(None, e.to_string()))?;
    let layout = LayoutMeta {
        kind,
        grid,
        r_feedback,
    };
    Ok(Snapshot { array, layout })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_snapshot() -> (CrossbarArray, LayoutMeta) {
        let params = DeviceParams::default();
        let mut array = CrossbarArray::new(2, 3, params, 100.0).unwrap();
        array.set_cell_state(0, 1, DeviceState::new(0.73)).unwrap();
        array
            .set_cell_state(1, 2, DeviceState::new(1.0 / 3.0))
            .unwrap();
        array.set_cell_scale(1, 0, 1.25).unwrap();
        let layout = LayoutMeta {
            kind: LayoutKind::RowPerSet {
                sets: vec!["A".into(), "B".into()],
            },
            grid: QuantizationGrid::new(0.0, 2.0, 1.0).unwrap(),
            r_feedback: 100.0,
        };
        (array, layout)
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let (array, layout) = sample_snapshot();
        let text = render(&array, &layout);
        let snap = parse(&text, "test").unwrap();
        assert_eq!(snap.layout, layout);
        for r in 0..2 {
            for c in 0..3 {
                let x0 = array.cell_state(r, c).x();
                let x1 = snap.array.cell_state(r, c).x();
                assert_eq!(x0.to_bits(), x1.to_bits());
                assert_eq!(
                    array.cell_scale(r, c).to_bits(),
                    snap.array.cell_scale(r, c).to_bits()
                );
            }
        }
        assert_eq!(render(&snap.array, &snap.layout), text);
    }

    #[test]
    fn save_and_load_through_files() {
        let (array, layout) = sample_snapshot();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.snap");
        save(&path, &array, &layout).unwrap();
        assert!(!path.with_extension("tmp").exists());
        let snap = load(&path).unwrap();
        assert_eq!(render(&snap.array, &snap.layout), render(&array, &layout));
    }

    #[test]
    fn antidiagonal_round_trip() {
        let params = DeviceParams::default();
        let array = CrossbarArray::new(3, 3, params, 100.0).unwrap();
        let layout = LayoutMeta {
            kind: LayoutKind::Antidiagonal { set: "age".into() },
            grid: QuantizationGrid::new(0.0, 2.0, 1.0).unwrap(),
            r_feedback: 100.0,
        };
        let text = render(&array, &layout);
        assert!(text.contains("layout antidiagonal\nset age\n"));
        let snap = parse(&text, "test").unwrap();
        assert_eq!(snap.layout, layout);
    }

    #[test]
    fn rejects_bad_magic() {
        let e = parse("memcross snapshot 2\nrows 1\n", "t").unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 1, .. }));
    }

    #[test]
    fn rejects_out_of_range_x() {
        let (array, layout) = sample_snapshot();
        let text = render(&array, &layout).replace("cell 0 1 0.73 1", "cell 0 1 1.5 1");
        match parse(&text, "t").unwrap_err() {
            CliError::Validation {
                line: Some(_), msg, ..
            } => {
                assert!(msg.contains("[0, 1]"), "{msg}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_and_missing_cells() {
        let (array, layout) = sample_snapshot();
        let base = render(&array, &layout);
        let dup = base.replace("cell 0 0 0 1\n", "cell 0 0 0 1\ncell 0 0 0 1\n");
        assert!(parse(&dup, "t").is_err());
        let missing = base.replace("cell 0 0 0 1\n", "");
        assert!(parse(&missing, "t").is_err());
    }

    #[test]
    fn rejects_layout_dimension_mismatch() {
        let (array, layout) = sample_snapshot();
        let text = render(&array, &layout).replace("sets A,B", "sets A,B,C");
        assert!(parse(&text, "t").is_err());
    }

    #[test]
    fn rejects_unknown_keys_with_line_numbers() {
        let (array, layout) = sample_snapshot();
        let text = render(&array, &layout) + "voltage 3\n";
        match parse(&text, "t").unwrap_err() {
            CliError::Parse { line, .. } => assert_eq!(line, text.lines().count()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn scale_range_is_enforced() {
        let (array, layout) = sample_snapshot();
        let text = render(&array, &layout).replace("cell 1 0 0 1.25", "cell 1 0 0 9");
        assert!(parse(&text, "t").is_err());
    }
}
