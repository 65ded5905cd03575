//! CSV feature files: `n` rows × `d` real columns with an optional header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use itrd_core::{FeatureBatch, Matrix};

use crate::error::{CliError, Result};

/// A parsed feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub path: PathBuf,
    pub header: Option<Vec<String>>,
    pub data: FeatureBatch,
}

impl FeatureFile {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let (header, data) = parse(file).map_err(|message| CliError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        log::info!(
            "read {}: {} rows x {} columns",
            path.display(),
            data.rows(),
            data.cols()
        );
        Ok(Self {
            path: path.to_path_buf(),
            header,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }
}

/// Parses CSV from `reader`. The first record is a header when any of its
/// fields is not a number. Errors name the 1-based line and column.
pub fn parse<R: Read>(reader: R) -> std::result::Result<(Option<Vec<String>>, Matrix), String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if k == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(record.iter().map(str::to_owned).collect());
            continue;
        }
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(format!(
                "line {line}: expected {expected} columns, found {}",
                record.len()
            ));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                format!(
                    "line {line}, column {}: cannot parse {field:?} as a number",
                    j + 1
                )
            })?;
            if !v.is_finite() {
                return Err(format!(
                    "line {line}, column {}: value {field} is not finite",
                    j + 1
                ));
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = match cols {
        Some(c) if rows > 0 => c,
        _ => return Err("no data rows".into()),
    };
    if let Some(h) = &header {
        if h.len() != cols {
            return Err(format!(
                "header has {} fields but rows have {cols} columns",
                h.len()
            ));
        }
    }
    let data = Matrix::new(rows, cols, values).map_err(|e| e.to_string())?;
    Ok((header, data))
}

/// Writes `z` as CSV with 17 significant digits per value, which
/// reproduces every `f64` exactly when read back.
pub fn write_features<W: Write>(
    writer: W,
    z: &FeatureBatch,
    header: Option<&[String]>,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for i in 0..z.rows() {
        w.write_record(z.row(i).iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()
}

pub fn write_features_to_path(path: impl AsRef<Path>, z: &FeatureBatch) -> Result<()> {
    let path = path.as_ref();
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_features(file, z, None).map_err(io)
}
