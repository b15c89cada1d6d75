//! The bins-by-features numeric table exchanged between pipeline stages.
//!
//! Serialized as CSV with a `bin_index,bin_start,<feature names>` header plus
//! a TOML sidecar (`<stem>.meta.toml`) that carries the bin width, dataset id
//! and the labeled anomaly interval.

use crate::error::{Error, Result};
use crate::num::Scalar;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One time bin: `start = dataset_start + index * width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinKey {
    pub index: u64,
    pub start: u64,
    pub width: u64,
}

/// Inclusive range of bin indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinRange {
    pub start: usize,
    pub end: usize,
}

impl BinRange {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if end < start {
            return Err(Error::param(format!("bin range [{start}, {end}] is empty")));
        }
        Ok(BinRange { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees start <= end
    }

    pub fn contains(&self, bin: usize) -> bool {
        bin >= self.start && bin <= self.end
    }

    pub fn intersects(&self, other: &BinRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }
}

impl Serialize for BinRange {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        [self.start, self.end].serialize(ser)
    }
}

impl<'de> Deserialize<'de> for BinRange {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(de)?;
        BinRange::new(start, end).map_err(serde::de::Error::custom)
    }
}

/// Sidecar metadata for a serialized matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub bin_width: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_id: Option<String>,
    /// Ground-truth anomaly interval, inclusive bin indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly_interval: Option<BinRange>,
    /// Number of source bins in the trailing partial group after a rebin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_tail_bins: Option<u64>,
    /// Columns zeroed by standardization because their fit-range variance
    /// was zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_columns: Vec<String>,
}

/// Row-major numeric table with named columns and aligned bin keys.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<F> {
    column_names: Vec<String>,
    bin_keys: Vec<BinKey>,
    values: Vec<F>,
    meta: MatrixMeta,
}

impl<F: Scalar> FeatureMatrix<F> {
    /// Builds a matrix, validating shape, finiteness and bin-key monotony.
    pub fn new(
        column_names: Vec<String>,
        bin_keys: Vec<BinKey>,
        values: Vec<F>,
        meta: MatrixMeta,
    ) -> Result<Self> {
        if column_names.is_empty() {
            return Err(Error::param("matrix needs at least one column"));
        }
        if values.len() != column_names.len() * bin_keys.len() {
            return Err(Error::param(format!(
                "value count {} != {} rows x {} columns",
                values.len(),
                bin_keys.len(),
                column_names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("matrix contains NaN or infinite values"));
        }
        for w in bin_keys.windows(2) {
            if w[1].index <= w[0].index || w[1].start <= w[0].start {
                return Err(Error::param("bin keys must be strictly increasing"));
            }
            if w[1].width != w[0].width {
                return Err(Error::param("bin keys must share one width"));
            }
        }
        if let Some(interval) = &meta.anomaly_interval {
            if !bin_keys.is_empty() && interval.end >= bin_keys.len() {
                return Err(Error::param(format!(
                    "anomaly interval [{}, {}] exceeds {} bins",
                    interval.start,
                    interval.end,
                    bin_keys.len()
                )));
            }
        }
        Ok(FeatureMatrix {
            column_names,
            bin_keys,
            values,
            meta,
        })
    }

    pub fn nrows(&self) -> usize {
        self.bin_keys.len()
    }

    pub fn ncols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn bin_keys(&self) -> &[BinKey] {
        &self.bin_keys
    }

    pub fn meta(&self) -> &MatrixMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut MatrixMeta {
        &mut self.meta
    }

    pub fn anomaly_interval(&self) -> Option<BinRange> {
        self.meta.anomaly_interval
    }

    pub fn row(&self, r: usize) -> &[F] {
        let n = self.ncols();
        &self.values[r * n..(r + 1) * n]
    }

    pub fn value(&self, r: usize, c: usize) -> F {
        self.values[r * self.ncols() + c]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Copies one column out as a contiguous series.
    pub fn column(&self, c: usize) -> Vec<F> {
        (0..self.nrows()).map(|r| self.value(r, c)).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Result<Vec<F>> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::ColumnMismatch(format!("no column named `{name}`")))?;
        Ok(self.column(idx))
    }

    /// Rows restricted to a bin range, as owned vectors.
    pub fn rows_in(&self, range: BinRange) -> Result<Vec<Vec<F>>> {
        self.check_range(range)?;
        Ok((range.start..=range.end).map(|r| self.row(r).to_vec()).collect())
    }

    pub(crate) fn check_range(&self, range: BinRange) -> Result<()> {
        if range.end >= self.nrows() {
            return Err(Error::param(format!(
                "bin range [{}, {}] exceeds {} rows",
                range.start,
                range.end,
                self.nrows()
            )));
        }
        Ok(())
    }

    /// Appends a column; the series must be finite and row-aligned.
    pub fn append_column(&mut self, name: impl Into<String>, series: &[F]) -> Result<()> {
        let name = name.into();
        if series.len() != self.nrows() {
            return Err(Error::LengthMismatch {
                left: series.len(),
                right: self.nrows(),
            });
        }
        if series.iter().any(|v| !v.is_finite()) {
            return Err(Error::param(format!("column `{name}` contains non-finite values")));
        }
        if self.column_index(&name).is_some() {
            return Err(Error::ColumnMismatch(format!("duplicate column `{name}`")));
        }
        let old_ncols = self.ncols();
        let mut values = Vec::with_capacity(self.values.len() + series.len());
        for (r, &v) in series.iter().enumerate() {
            values.extend_from_slice(&self.values[r * old_ncols..(r + 1) * old_ncols]);
            values.push(v);
        }
        self.values = values;
        self.column_names.push(name);
        Ok(())
    }

    /// New matrix with the given columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<Self> {
        let indices: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::ColumnMismatch(format!("no column named `{n}`")))
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(indices.len() * self.nrows());
        for r in 0..self.nrows() {
            for &c in &indices {
                values.push(self.value(r, c));
            }
        }
        FeatureMatrix::new(names.to_vec(), self.bin_keys.clone(), values, self.meta.clone())
    }

    /// Replaces the cell values of one column.
    pub(crate) fn set_column(&mut self, c: usize, series: &[F]) {
        debug_assert_eq!(series.len(), self.nrows());
        let n = self.ncols();
        for (r, &v) in series.iter().enumerate() {
            self.values[r * n + c] = v;
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("bin_index,bin_start");
        for name in &self.column_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (r, key) in self.bin_keys.iter().enumerate() {
            write!(out, "{},{}", key.index, key.start).unwrap();
            for c in 0..self.ncols() {
                write!(out, ",{}", self.value(r, c)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV body; `meta` supplies the bin width (and labels) the
    /// CSV itself does not carry.
    pub fn from_csv(text: &str, meta: MatrixMeta) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::line(1, "empty matrix CSV"))?;
        let mut cols = split_header(header).into_iter();
        if cols.next().as_deref() != Some("bin_index") || cols.next().as_deref() != Some("bin_start")
        {
            return Err(Error::line(1, "header must start with bin_index,bin_start"));
        }
        let column_names: Vec<String> = cols.collect();
        if column_names.is_empty() {
            return Err(Error::line(1, "no feature columns in header"));
        }

        let mut bin_keys = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let index: u64 = parse_field(fields.next(), lineno, "bin_index")?;
            let start: u64 = parse_field(fields.next(), lineno, "bin_start")?;
            bin_keys.push(BinKey {
                index,
                start,
                width: meta.bin_width,
            });
            let mut count = 0;
            for field in fields {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::line(lineno, format!("bad value `{field}`")))?;
                values.push(F::from_f64_lossy(v));
                count += 1;
            }
            if count != column_names.len() {
                return Err(Error::line(
                    lineno,
                    format!("expected {} values, found {count}", column_names.len()),
                ));
            }
        }
        FeatureMatrix::new(column_names, bin_keys, values, meta)
    }

    /// Writes `<path>` and its `<stem>.meta.toml` sidecar.
    pub fn write_files(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        let meta_text = toml::to_string(&self.meta)
            .map_err(|e| Error::format(meta_path(path).display().to_string(), e.to_string()))?;
        std::fs::write(meta_path(path), meta_text)?;
        Ok(())
    }

    /// Reads a matrix CSV plus its sidecar. A missing sidecar falls back to
    /// the bin width inferred from the first two rows.
    pub fn read_files(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let meta_file = meta_path(path);
        let meta = if meta_file.exists() {
            let meta_text = std::fs::read_to_string(&meta_file)?;
            toml::from_str(&meta_text)
                .map_err(|e| Error::format(meta_file.display().to_string(), e.to_string()))?
        } else {
            MatrixMeta {
                bin_width: infer_bin_width(&text)
                    .ok_or_else(|| Error::format(path.display().to_string(), "missing sidecar and cannot infer bin width"))?,
                ..MatrixMeta::default()
            }
        };
        Self::from_csv(&text, meta)
    }
}

/// Splits the header respecting parentheses: `corr(A,B)` column names carry
/// a comma that must not break the field.
fn split_header(header: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for ch in header.chars() {
        match ch {
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut current));
            }
            '(' => {
                depth += 1;
                current.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(ch);
            }
            _ => current.push(ch),
        }
    }
    out.push(current);
    out
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, lineno: usize, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::line(lineno, format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::line(lineno, format!("bad {what}")))
}

/// Sidecar path: `features.csv` -> `features.meta.toml`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.toml")
}

fn infer_bin_width(csv: &str) -> Option<u64> {
    let mut starts = csv.lines().skip(1).filter_map(|l| {
        let mut f = l.split(',');
        f.next()?;
        f.next()?.parse::<u64>().ok()
    });
    let a = starts.next()?;
    let b = starts.next()?;
    b.checked_sub(a)
}
