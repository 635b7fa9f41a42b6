use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{Dataset, Target, Task};
use crate::error::{Result, SlmError};

/// Which column of a CSV file holds the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
    /// The right-most column.
    Last,
}

impl TargetColumn {
    /// Interprets a command-line value: an integer selects by position,
    /// `last` the final column, anything else a header name.
    pub fn parse(s: &str) -> Self {
        if s == "last" {
            TargetColumn::Last
        } else if let Ok(i) = s.parse::<usize>() {
            TargetColumn::Index(i)
        } else {
            TargetColumn::Name(s.to_string())
        }
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    // `f64::from_str` also accepts "inf"/"nan"; only decimal and scientific notation are valid here.
    if cell.is_empty() || !cell.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E')) {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct RawTable {
    header: Option<Vec<String>>,
    rows: Vec<csv::StringRecord>,
}

impl RawTable {
    fn column_name(&self, c: usize) -> String {
        self.header
            .as_ref()
            .map(|h| h[c].clone())
            .unwrap_or_else(|| format!("column {c}"))
    }
}

fn read_table(path: &Path, has_header: bool) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => SlmError::InputNotFound(path.to_path_buf()),
        _ => SlmError::Io(e),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header: Option<Vec<String>> = if has_header {
        let h = reader.headers()?;
        if h.is_empty() || (h.len() == 1 && h[0].is_empty()) {
            return Err(SlmError::EmptyInput(path.display().to_string()));
        }
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        rows.push(rec);
    }
    if rows.is_empty() {
        return Err(SlmError::EmptyInput(path.display().to_string()));
    }
    Ok(RawTable { header, rows })
}

/// Reads every column as a feature. Returns the row-major matrix and its width.
pub fn load_features(path: &Path, has_header: bool) -> Result<(Vec<f64>, usize)> {
    let table = read_table(path, has_header)?;
    let n_cols = table.header.as_ref().map_or(table.rows[0].len(), Vec::len);
    let mut features = Vec::with_capacity(table.rows.len() * n_cols);
    for (r, rec) in table.rows.iter().enumerate() {
        if rec.len() != n_cols {
            return Err(SlmError::MalformedRow {
                row: r + 1,
                expected: n_cols,
                found: rec.len(),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            features.push(parse_number(cell).ok_or_else(|| SlmError::NonNumericCell {
                row: r + 1,
                column: table.column_name(c),
                value: cell.to_string(),
            })?);
        }
    }
    Ok((features, n_cols))
}

/// Loads a comma-separated file. Data rows are numbered from 1 in errors.
pub fn load_csv(path: &Path, target: &TargetColumn, task: Task, has_header: bool) -> Result<Dataset> {
    let table = read_table(path, has_header)?;
    let RawTable { header, rows } = &table;
    let n_cols = header.as_ref().map_or(rows[0].len(), Vec::len);
    if n_cols < 2 {
        return Err(SlmError::InvalidDataset(format!(
            "need at least one feature column and one target column, found {n_cols} columns"
        )));
    }
    let target_idx = match target {
        TargetColumn::Last => n_cols - 1,
        TargetColumn::Index(i) if *i < n_cols => *i,
        TargetColumn::Index(i) => return Err(SlmError::UnknownTargetColumn(i.to_string())),
        TargetColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| SlmError::UnknownTargetColumn(name.clone()))?,
    };
    let column_name = |c: usize| table.column_name(c);

    let n_features = n_cols - 1;
    let mut features = Vec::with_capacity(rows.len() * n_features);
    let mut raw_targets = Vec::with_capacity(rows.len());
    for (r, rec) in rows.iter().enumerate() {
        let row = r + 1;
        if rec.len() != n_cols {
            return Err(SlmError::MalformedRow {
                row,
                expected: n_cols,
                found: rec.len(),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            if c == target_idx {
                raw_targets.push((row, cell.to_string()));
                continue;
            }
            let v = parse_number(cell).ok_or_else(|| SlmError::NonNumericCell {
                row,
                column: column_name(c),
                value: cell.to_string(),
            })?;
            features.push(v);
        }
    }

    let target_name = column_name(target_idx);
    let target = match task {
        Task::Classification => {
            let mut labels = Vec::with_capacity(raw_targets.len());
            for (row, cell) in &raw_targets {
                let label = cell.parse::<usize>().map_err(|_| SlmError::InvalidTarget {
                    row: *row,
                    column: target_name.clone(),
                    value: cell.clone(),
                    reason: "expected a non-negative integer class id".into(),
                })?;
                labels.push(label);
            }
            let n_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
            Target::Labels { labels, n_classes }
        }
        Task::Regression => {
            let mut values = Vec::with_capacity(raw_targets.len());
            for (row, cell) in &raw_targets {
                let v = parse_number(cell).ok_or_else(|| SlmError::InvalidTarget {
                    row: *row,
                    column: target_name.clone(),
                    value: cell.clone(),
                    reason: "expected a finite real".into(),
                })?;
                values.push(v);
            }
            Target::Values(values)
        }
    };

    let ds = Dataset::new(features, n_features, target)?;
    match header {
        Some(h) => {
            let names = h
                .iter()
                .enumerate()
                .filter(|(c, _)| *c != target_idx)
                .map(|(_, n)| Some(n.clone()))
                .collect();
            ds.with_feature_names(names)
        }
        None => Ok(ds),
    }
}

/// Writes the dataset with a header row; the target is the last column,
/// named `y`. Reals use the shortest representation that parses back to
/// the same bits.
pub fn write_csv<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    let mut header: Vec<String> = ds
        .feature_names()
        .iter()
        .enumerate()
        .map(|(d, n)| n.clone().unwrap_or_else(|| format!("x{d}")))
        .collect();
    header.push("y".into());
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(ds.n_features() + 1);
    for i in 0..ds.n_samples() {
        record.clear();
        record.extend(ds.row(i).iter().map(|v| format!("{v:?}")));
        record.push(match ds.target() {
            Target::Labels { labels, .. } => labels[i].to_string(),
            Target::Values(v) => format!("{:?}", v[i]),
        });
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
