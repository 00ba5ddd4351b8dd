//! CSV data files and atomic output.
//!
//! Data files are comma-separated, one sample per row, `.` decimal point,
//! UTF-8. Lines starting with `#` are comments. An optional header row is
//! skipped when requested. Floats are written with 17 significant digits so
//! every value survives a save/load round trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use kscale_core::class_scale::LabeledDataset;
use kscale_core::Matrix;

use crate::error::{CliError, CliResult};

/// Which column, if any, holds class labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    None,
    First,
    Last,
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(LabelColumn::None),
            "first" => Ok(LabelColumn::First),
            "last" => Ok(LabelColumn::Last),
            other => other
                .parse()
                .map(LabelColumn::Index)
                .map_err(|_| format!("label column must be none, first, last or an index, got {other:?}")),
        }
    }
}

/// Rows of a data file, split into features and optional raw labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub x: Matrix,
    pub labels: Option<Vec<i64>>,
}

impl Table {
    /// Labelled dataset with class ids remapped to `0..N_C`; also returns
    /// the original label of each class id.
    pub fn labeled(self) -> CliResult<(LabeledDataset, Vec<i64>)> {
        let raw = self.labels.ok_or_else(|| CliError::Usage("this command needs a label column (--labels)".into()))?;
        Ok(LabeledDataset::from_raw_labels(self.x, &raw)?)
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_cell(path: &Path, line: u64, col: usize, cell: &str) -> CliResult<f64> {
    let t = cell.trim();
    let v: f64 = t.parse().map_err(|_| CliError::Parse {
        path: path.into(),
        line,
        message: format!("column {}: {t:?} is not a number", col + 1),
    })?;
    if !v.is_finite() {
        return Err(CliError::Parse {
            path: path.into(),
            line,
            message: format!("column {}: non-finite value {t:?}", col + 1),
        });
    }
    Ok(v)
}

fn parse_label(path: &Path, line: u64, col: usize, cell: &str) -> CliResult<i64> {
    let t = cell.trim();
    if let Ok(v) = t.parse::<i64>() {
        return Ok(v);
    }
    // Accept integral floats such as "1.0" or "1.0000000000000000e0".
    match t.parse::<f64>() {
        Ok(f) if f.is_finite() && f.fract() == 0.0 && f.abs() < 9.0e15 => Ok(f as i64),
        _ => Err(CliError::Parse {
            path: path.into(),
            line,
            message: format!("column {}: label {t:?} is not an integer", col + 1),
        }),
    }
}

/// Reads a numeric CSV file. Ragged rows and non-numeric cells are errors
/// that name the offending line.
pub fn load_labeled_csv(path: &Path, header: bool, labels: LabelColumn) -> CliResult<Table> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    // The reader's own line counter skips comment lines, so line numbers
    // come from byte offsets instead.
    let line_starts: Vec<u64> = std::iter::once(0)
        .chain(bytes.iter().enumerate().filter(|(_, &b)| b == b'\n').map(|(i, _)| i as u64 + 1))
        .collect();
    // A record's offset can point at comment or blank lines before it.
    let line_of = |pos: Option<&csv::Position>| {
        let Some(p) = pos else { return 0 };
        let mut line = line_starts.partition_point(|&s| s <= p.byte());
        while line < line_starts.len() {
            let rest = &bytes[line_starts[line - 1] as usize..];
            match rest.first() {
                Some(b'#') | Some(b'\n') | Some(b'\r') => line += 1,
                _ => break,
            }
        }
        line as u64
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut width = None;
    let mut data = Vec::new();
    let mut raw = Vec::new();
    let mut rows = 0usize;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = line_of(e.position());
            CliError::Parse { path: path.into(), line, message: e.to_string() }
        })?;
        let line = line_of(rec.position());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(CliError::Parse {
                    path: path.into(),
                    line,
                    message: format!("expected {w} columns, found {}", rec.len()),
                })
            }
            _ => {}
        }
        let w = rec.len();
        let label_at = match labels {
            LabelColumn::None => None,
            LabelColumn::First => Some(0),
            LabelColumn::Last => Some(w - 1),
            LabelColumn::Index(i) if i < w => Some(i),
            LabelColumn::Index(i) => {
                return Err(CliError::Parse {
                    path: path.into(),
                    line,
                    message: format!("label column {i} out of range for {w} columns"),
                })
            }
        };
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_at {
                raw.push(parse_label(path, line, c, cell)?);
            } else {
                data.push(parse_cell(path, line, c, cell)?);
            }
        }
        rows += 1;
    }
    let w = width.ok_or_else(|| CliError::Data(format!("{}: no data rows", path.display())))?;
    let cols = w - usize::from(labels != LabelColumn::None);
    if cols == 0 {
        return Err(CliError::Data(format!("{}: no feature columns", path.display())));
    }
    let x = Matrix::from_vec(rows, cols, data)?;
    Ok(Table { x, labels: (labels != LabelColumn::None).then_some(raw) })
}

/// CSV text for a matrix, with labels appended as the last column when
/// given. `comment` becomes a leading `#` line.
pub fn matrix_csv(x: &Matrix, labels: Option<&[i64]>, comment: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(c) = comment {
        let _ = writeln!(s, "# {c}");
    }
    for (i, row) in x.rows_iter().enumerate() {
        let mut first = true;
        for v in row {
            if !first {
                s.push(',');
            }
            first = false;
            s.push_str(&fmt_f64(*v));
        }
        if let Some(l) = labels {
            let _ = write!(s, ",{}", l[i]);
        }
        s.push('\n');
    }
    s
}

/// Header comment `x0,x1,..[,label]` for a data file.
pub fn column_names(cols: usize, labeled: bool) -> String {
    let mut names: Vec<String> = (0..cols).map(|c| format!("x{c}")).collect();
    if labeled {
        names.push("label".into());
    }
    names.join(",")
}

pub fn save_labeled_csv(path: &Path, x: &Matrix, labels: Option<&[i64]>) -> CliResult<()> {
    let comment = column_names(x.ncols(), labels.is_some());
    write_atomic(path, matrix_csv(x, labels, Some(&comment)).as_bytes())
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
