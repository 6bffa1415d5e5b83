//! CSV ingestion and quantization onto the non-negative integer grid the
//! learner operates on.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use log::debug;

use crate::error::{DlaError, Result};

/// Layout of a numeric CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub delimiter: u8,
    pub has_header: bool,
    /// Column holding the class label, if any. It is still numeric.
    pub label_column: Option<usize>,
    /// Accepted data-row counts. Empty accepts any count.
    pub allowed_rows: Vec<usize>,
    pub expected_columns: Option<usize>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            label_column: None,
            allowed_rows: Vec::new(),
            expected_columns: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub name: String,
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    pub label_column: Option<usize>,
    pub column_min: Vec<f64>,
    pub column_max: Vec<f64>,
}

impl RawDataset {
    /// Builds a dataset from in-memory rows, checking rectangularity.
    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        let width = rows.first().ok_or(DlaError::EmptyDataset)?.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(DlaError::RaggedRows {
                    row: i,
                    expected: width,
                    actual: row.len(),
                });
            }
        }
        let (column_min, column_max) = column_stats(&rows, width);
        Ok(Self {
            name,
            header: None,
            rows,
            label_column: None,
            column_min,
            column_max,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.column_min.len()
    }

    /// Copy of the dataset with the label column removed.
    pub fn without_label(&self) -> RawDataset {
        let Some(label) = self.label_column else {
            return self.clone();
        };
        let drop = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .enumerate()
                .filter(|&(j, _)| j != label)
                .map(|(_, &x)| x)
                .collect()
        };
        RawDataset {
            name: self.name.clone(),
            header: self.header.as_ref().map(|h| {
                h.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != label)
                    .map(|(_, s)| s.clone())
                    .collect()
            }),
            rows: self.rows.iter().map(|r| drop(r)).collect(),
            label_column: None,
            column_min: drop(&self.column_min),
            column_max: drop(&self.column_max),
        }
    }
}

fn column_stats(rows: &[Vec<f64>], width: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    for row in rows {
        for (j, &v) in row.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    (lo, hi)
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<RawDataset> {
    let file = File::open(path).map_err(|source| DlaError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_csv(&name, file, schema).map_err(|e| match e {
        DlaError::EmptyDataset => DlaError::EmptyFile {
            path: path.to_path_buf(),
        },
        other => other,
    })
}

/// Parses CSV text. Row and column positions in errors are 1-based file
/// line and field numbers.
pub fn parse_csv<R: Read>(name: &str, reader: R, schema: &CsvSchema) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let parse_error = |line: u64, column: usize, reason: String| DlaError::Parse {
        dataset: name.to_string(),
        row: line as usize,
        column,
        reason,
    };

    let header = if schema.has_header {
        let h = rdr
            .headers()
            .map_err(|e| parse_error(1, 0, e.to_string()))?;
        Some(h.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = header.as_ref().map(Vec::len).filter(|&w| w > 0);
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_error(
                line,
                record.len().min(expected) + 1,
                format!("ragged row: {} fields, expected {expected}", record.len()),
            ));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_error(
                    line,
                    j + 1,
                    format!("non-numeric cell `{cell}`"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(DlaError::EmptyDataset);
    }
    let width = rows[0].len();
    if let Some(cols) = schema.expected_columns {
        if cols != width {
            return Err(DlaError::Shape {
                dataset: name.to_string(),
                what: "columns",
                expected: cols,
                actual: width,
            });
        }
    }
    if !schema.allowed_rows.is_empty() && !schema.allowed_rows.contains(&rows.len()) {
        return Err(DlaError::Shape {
            dataset: name.to_string(),
            what: "rows",
            expected: schema.allowed_rows[0],
            actual: rows.len(),
        });
    }
    if let Some(label) = schema.label_column {
        if label >= width {
            return Err(DlaError::ColumnOutOfRange {
                column: label,
                width,
            });
        }
    }
    let (column_min, column_max) = column_stats(&rows, width);
    Ok(RawDataset {
        name: name.to_string(),
        header,
        rows,
        label_column: schema.label_column,
        column_min,
        column_max,
    })
}

/// How one column is mapped onto integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColumnQuant {
    /// `round((v - offset) * scale)`.
    Scale { scale: f64, offset: f64 },
    /// Column minimum to 0, maximum to `levels - 1`.
    MinMax { levels: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantSpec {
    Uniform(ColumnQuant),
    PerColumn(Vec<ColumnQuant>),
}

impl QuantSpec {
    pub fn scale(scale: f64) -> Self {
        QuantSpec::Uniform(ColumnQuant::Scale { scale, offset: 0.0 })
    }

    pub fn min_max(levels: u32) -> Self {
        QuantSpec::Uniform(ColumnQuant::MinMax { levels })
    }

    fn column(&self, j: usize) -> Option<ColumnQuant> {
        match self {
            QuantSpec::Uniform(q) => Some(*q),
            QuantSpec::PerColumn(v) => v.get(j).copied(),
        }
    }
}

/// Resolved affine map of a column: `q = round((v - offset) * scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnMap {
    pub scale: f64,
    pub offset: f64,
}

impl ColumnMap {
    pub fn quantize(&self, value: f64) -> (u32, bool) {
        let q = ((value - self.offset) * self.scale).round();
        if q < 0.0 {
            (0, true)
        } else if q > f64::from(u32::MAX) {
            (u32::MAX, true)
        } else {
            (q as u32, false)
        }
    }

    /// Back to original units.
    pub fn dequantize(&self, q: f64) -> f64 {
        q / self.scale + self.offset
    }

    /// Distance between two quantized values, in original units.
    pub fn distance(&self, a: f64, b: f64) -> f64 {
        (a - b).abs() / self.scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDataset {
    pub name: String,
    pub rows: Vec<Vec<u32>>,
    pub maps: Vec<ColumnMap>,
    /// Number of cells clamped onto the integer range.
    pub clamped: usize,
}

impl QuantizedDataset {
    /// Wraps already-integer rows with a unit scale.
    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<u32>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(DlaError::RaggedRows {
                    row: i,
                    expected: width,
                    actual: r.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            rows,
            maps: vec![
                ColumnMap {
                    scale: 1.0,
                    offset: 0.0
                };
                width
            ],
            clamped: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.maps.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = u32> + '_ {
        self.rows.iter().map(move |r| r[j])
    }

    pub fn max_value(&self) -> u32 {
        self.rows.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn column_max(&self, j: usize) -> u32 {
        self.column(j).max().unwrap_or(0)
    }
}

pub fn quantize(raw: &RawDataset, spec: &QuantSpec) -> Result<QuantizedDataset> {
    let width = raw.width();
    let maps = (0..width)
        .map(|j| {
            let q = spec.column(j).ok_or(DlaError::LengthMismatch {
                expected: width,
                actual: j,
            })?;
            resolve(q, raw.column_min[j], raw.column_max[j])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut clamped = 0;
    let rows = raw
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(&maps)
                .map(|(&v, m)| {
                    let (q, c) = m.quantize(v);
                    clamped += usize::from(c);
                    q
                })
                .collect()
        })
        .collect();
    if clamped > 0 {
        debug!("{}: clamped {clamped} cells during quantization", raw.name);
    }
    Ok(QuantizedDataset {
        name: raw.name.clone(),
        rows,
        maps,
        clamped,
    })
}

fn resolve(q: ColumnQuant, min: f64, max: f64) -> Result<ColumnMap> {
    match q {
        ColumnQuant::Scale { scale, offset } => {
            if !(scale > 0.0 && scale.is_finite()) || !offset.is_finite() {
                return Err(DlaError::config(
                    "quant_scale",
                    format!("invalid scale {scale}"),
                ));
            }
            Ok(ColumnMap { scale, offset })
        }
        ColumnQuant::MinMax { levels } => {
            if levels < 1 {
                return Err(DlaError::config("quant_levels", "must be positive"));
            }
            let span = max - min;
            let scale = if span > 0.0 && levels > 1 {
                f64::from(levels - 1) / span
            } else {
                1.0
            };
            Ok(ColumnMap { scale, offset: min })
        }
    }
}

pub const IRIS_SCALE: f64 = 10.0;
pub const WORDSIM_SCORE_SCALE: f64 = 10.0;

/// The three vendored benchmark tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Iris,
    Heart,
    WordSim,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Iris, Benchmark::Heart, Benchmark::WordSim];

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "iris" => Some(Benchmark::Iris),
            "heart" => Some(Benchmark::Heart),
            "wordsim" | "word-similarity" => Some(Benchmark::WordSim),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Iris => "iris",
            Benchmark::Heart => "heart",
            Benchmark::WordSim => "wordsim",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Benchmark::Iris => "iris.csv",
            Benchmark::Heart => "heart.csv",
            Benchmark::WordSim => "wordsim.csv",
        }
    }

    pub fn schema(self) -> CsvSchema {
        match self {
            Benchmark::Iris => CsvSchema {
                label_column: Some(4),
                allowed_rows: vec![150],
                expected_columns: Some(5),
                ..CsvSchema::default()
            },
            // Cleveland (303) or Statlog (270); both carry 13 attributes and a class.
            Benchmark::Heart => CsvSchema {
                label_column: Some(13),
                allowed_rows: vec![303, 270],
                expected_columns: Some(14),
                ..CsvSchema::default()
            },
            Benchmark::WordSim => CsvSchema {
                label_column: None,
                allowed_rows: vec![353],
                expected_columns: Some(2),
                ..CsvSchema::default()
            },
        }
    }

    /// Default quantization. `levels` is the number of integer levels used by
    /// min-max columns, normally the learning extent.
    pub fn quant_spec(self, levels: u32) -> QuantSpec {
        match self {
            Benchmark::Iris => QuantSpec::scale(IRIS_SCALE),
            Benchmark::Heart => QuantSpec::min_max(levels),
            Benchmark::WordSim => QuantSpec::PerColumn(vec![
                ColumnQuant::MinMax { levels },
                ColumnQuant::Scale {
                    scale: WORDSIM_SCORE_SCALE,
                    offset: 0.0,
                },
            ]),
        }
    }
}
