//! Dense matrices, file formats and seeding.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magic bytes at the start of a raw-f32 matrix file.
pub const RAW_MAGIC: &[u8; 4] = b"PCCM";

/// Dense row-major matrix of finite `f64` values with optional integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    labels: Option<Vec<i64>>,
}

/// Low-dimensional coordinates share the data container.
pub type Embedding = DataMatrix;

impl DataMatrix {
    /// Builds a matrix, rejecting empty shapes, length mismatches and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("matrix shape {rows}x{cols} is empty")));
        }
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Value(format!(
                "non-finite value {} at row {}, column {}",
                values[pos],
                pos / cols + 1,
                pos % cols + 1
            )));
        }
        Ok(Self { rows, cols, values, labels: None })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("expected {cols} columns, found {}", r.len()),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(Error::invalid(format!(
                "{} labels for {} rows",
                labels.len(),
                self.rows
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Mutable access for optimizers. Callers are responsible for keeping
    /// the values finite.
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= self.rows as f64);
        means
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Root seed of a run. Each stochastic component draws from its own
/// ChaCha stream so adding draws in one place never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RunSeed(pub u64);

impl RunSeed {
    pub const REFERENCES: u64 = 1;
    pub const KMEANS: u64 = 2;
    pub const INIT: u64 = 3;
    pub const PAIRS: u64 = 4;
    pub const DATASET: u64 = 5;

    pub fn rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    /// Derives an independent seed, e.g. for the i-th k-means task.
    pub fn derive(self, salt: u64) -> RunSeed {
        // splitmix64 finalizer
        let mut z = self.0 ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RunSeed(z ^ (z >> 31))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    RawF32,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(InputFormat::Csv),
            "raw-f32" | "raw" => Ok(InputFormat::RawF32),
            other => Err(Error::invalid(format!("unknown format {other:?}"))),
        }
    }
}

/// Loads a matrix from disk. `label_column` (0-based) is only meaningful
/// for CSV input; the column is removed from the features.
pub fn load_matrix(
    path: impl AsRef<Path>,
    format: InputFormat,
    has_header: bool,
    label_column: Option<usize>,
) -> Result<DataMatrix> {
    let file = BufReader::new(File::open(path)?);
    match format {
        InputFormat::Csv => read_csv(file, has_header, label_column),
        InputFormat::RawF32 => {
            if label_column.is_some() {
                return Err(Error::invalid("raw-f32 files carry no label column"));
            }
            read_raw_f32(file)
        }
    }
}

pub fn read_csv<R: Read>(reader: R, has_header: bool, label_column: Option<usize>) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut width: Option<usize> = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        // 1-based line number in the file, header included
        let row = idx + 1 + usize::from(has_header);
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        if let Some(lc) = label_column {
            if lc >= record.len() {
                return Err(Error::invalid(format!(
                    "label column {lc} out of range for {} fields",
                    record.len()
                )));
            }
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                message: format!("column {}: {cell:?} is not a number", c + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Value(format!("row {row}, column {}: {cell}", c + 1)));
            }
            if Some(c) == label_column {
                if v.fract() != 0.0 {
                    return Err(Error::Parse {
                        row,
                        message: format!("label {cell:?} is not an integer"),
                    });
                }
                labels.push(v as i64);
            } else {
                values.push(v);
            }
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0) - usize::from(label_column.is_some());
    let m = DataMatrix::new(rows, cols, values)?;
    if label_column.is_some() {
        m.with_labels(labels)
    } else {
        Ok(m)
    }
}

pub fn read_raw_f32<R: Read>(mut reader: R) -> Result<DataMatrix> {
    let mut header = [0u8; 16];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::Parse { row: 0, message: "truncated raw-f32 header".into() })?;
    if &header[0..4] != RAW_MAGIC {
        return Err(Error::Parse { row: 0, message: "bad magic, expected \"PCCM\"".into() });
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    if body.len() != rows * cols * 4 {
        return Err(Error::Parse {
            row: body.len() / (4 * cols.max(1)) + 1,
            message: format!("expected {} payload bytes, found {}", rows * cols * 4, body.len()),
        });
    }
    let values = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    DataMatrix::new(rows, cols, values)
}

/// Writes the matrix as raw-f32. Values are rounded to `f32`.
pub fn write_raw_f32<W: Write>(m: &DataMatrix, mut w: W) -> Result<()> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::invalid("too many rows for raw-f32"))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::invalid("too many columns for raw-f32"))?;
    w.write_all(RAW_MAGIC)?;
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&cols.to_le_bytes())?;
    // reserved
    w.write_all(&0u32.to_le_bytes())?;
    for &v in m.values() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Writes one CSV line per row, no header. `{}` on `f64` prints the
/// shortest string that parses back to the same bits.
pub fn write_embedding<W: Write>(emb: &Embedding, w: W) -> Result<()> {
    if emb.rows() == 0 {
        return Err(Error::invalid("embedding has no rows"));
    }
    let mut w = BufWriter::new(w);
    for row in emb.iter_rows() {
        let mut first = true;
        for v in row {
            if !v.is_finite() {
                return Err(Error::Value(format!("non-finite coordinate {v}")));
            }
            if !first {
                w.write_all(b",")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_embedding(emb: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    write_embedding(emb, File::create(path)?)
}

/// Centers every column; scales columns with nonzero (population)
/// variance to unit variance. Constant columns become zeros.
pub fn standardize(data: &DataMatrix) -> Result<DataMatrix> {
    let (n, d) = (data.rows(), data.cols());
    if n < 2 {
        return Err(Error::invalid("standardize needs at least two rows"));
    }
    let means = data.column_means();
    let mut var = vec![0.0; d];
    for row in data.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            if sd > 0.0 {
                1.0 / sd
            } else {
                0.0
            }
        })
        .collect();
    let values = data
        .iter_rows()
        .flat_map(|row| row.iter().zip(&means).zip(&scale).map(|((v, m), s)| (v - m) * s))
        .collect();
    let out = DataMatrix::new(n, d, values)?;
    match data.labels() {
        Some(l) => out.with_labels(l.to_vec()),
        None => Ok(out),
    }
}
