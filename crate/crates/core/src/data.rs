//! Survival datasets, CSV ingestion and train/test splitting.
//!
//! CSV files are comma separated with a header row. Lines starting with `#`
//! are treated as comments so files written by this crate (which carry a
//! metadata header) load back unchanged. Rows are numbered from 1, counting
//! data rows only.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts made by [`split_train_test`] to find a training set with an event.
pub const MAX_SPLIT_ATTEMPTS: usize = 100;

/// The bundled bone marrow transplant table (137 patients).
pub const BMT_CSV: &str = include_str!("../data/bmt.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl SurvivalRecord {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Result<Self> {
        if !time.is_finite() {
            return Err(Error::NonFinite("survival time"));
        }
        if time < 0.0 {
            return Err(Error::InvalidArgument(format!("negative survival time {time}")));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariates"));
        }
        Ok(SurvivalRecord {
            time,
            event,
            covariates,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalDataset {
    records: Vec<SurvivalRecord>,
    feature_names: Vec<String>,
}

impl SurvivalDataset {
    /// Builds a dataset, checking that every record has `feature_names.len()`
    /// covariates. Event presence is checked by the fitting routines, since
    /// held-out test sets may legitimately contain none.
    pub fn new(records: Vec<SurvivalRecord>, feature_names: Vec<String>) -> Result<Self> {
        let p = feature_names.len();
        for r in &records {
            if r.covariates.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: r.covariates.len(),
                });
            }
        }
        Ok(SurvivalDataset {
            records,
            feature_names,
        })
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Covariate dimension.
    pub fn p(&self) -> usize {
        self.feature_names.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.event).collect()
    }

    pub fn covariates(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.covariates.clone()).collect()
    }

    pub fn event_count(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    pub fn has_event(&self) -> bool {
        self.records.iter().any(|r| r.event)
    }

    pub fn ensure_events(&self) -> Result<()> {
        if self.has_event() {
            Ok(())
        } else {
            Err(Error::NoEvents)
        }
    }

    /// Records at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> SurvivalDataset {
        SurvivalDataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same responses with a new covariate matrix.
    pub fn with_covariates(&self, rows: Vec<Vec<f64>>, feature_names: Vec<String>) -> Result<Self> {
        if rows.len() != self.records.len() {
            return Err(Error::InvalidArgument(format!(
                "{} covariate rows for {} records",
                rows.len(),
                self.records.len()
            )));
        }
        let records = self
            .records
            .iter()
            .zip(rows)
            .map(|(r, covariates)| SurvivalRecord::new(r.time, r.event, covariates))
            .collect::<Result<Vec<_>>>()?;
        SurvivalDataset::new(records, feature_names)
    }

    /// Writes `time,event,<features>` with shortest round-trip float text.
    pub fn write_csv<W: Write>(&self, out: W, time_name: &str, event_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![time_name.to_string(), event_name.to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.time.to_string(), u8::from(r.event).to_string()];
            row.extend(r.covariates.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub time_column: String,
    pub event_column: String,
    /// Empty means every remaining numeric column.
    pub feature_columns: Vec<String>,
    pub ignored_columns: Vec<String>,
}

impl ColumnSchema {
    pub fn new(time_column: impl Into<String>, event_column: impl Into<String>) -> Self {
        ColumnSchema {
            time_column: time_column.into(),
            event_column: event_column.into(),
            feature_columns: Vec::new(),
            ignored_columns: Vec::new(),
        }
    }

    pub fn with_features<S: Into<String>>(mut self, features: impl IntoIterator<Item = S>) -> Self {
        self.feature_columns = features.into_iter().map(Into::into).collect();
        self
    }

    pub fn ignoring<S: Into<String>>(mut self, columns: impl IntoIterator<Item = S>) -> Self {
        self.ignored_columns = columns.into_iter().map(Into::into).collect();
        self
    }

    fn validate(&self) -> Result<()> {
        if self.time_column == self.event_column {
            return Err(Error::InvalidArgument(format!(
                "time and event column are both '{}'",
                self.time_column
            )));
        }
        for f in &self.feature_columns {
            if *f == self.time_column || *f == self.event_column {
                return Err(Error::InvalidArgument(format!(
                    "feature column '{f}' duplicates the time or event column"
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for f in &self.feature_columns {
            if !seen.insert(f) {
                return Err(Error::InvalidArgument(format!("feature column '{f}' listed twice")));
            }
        }
        Ok(())
    }
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl RawTable {
    fn read<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::row(i + 1, e.to_string()))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(RawTable { header, rows })
    }

    /// Index of the first column with this name.
    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn cell(&self, row: usize, col: usize) -> Result<&str> {
        let cell = self.rows[row][col].as_str();
        if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
            return Err(Error::row(row + 1, format!("missing value in column '{}'", self.header[col])));
        }
        Ok(cell)
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let cell = self.cell(row, col)?;
        let v: f64 = cell.parse().map_err(|_| {
            Error::row(
                row + 1,
                format!("non-numeric value '{cell}' in column '{}'", self.header[col]),
            )
        })?;
        if !v.is_finite() {
            return Err(Error::row(row + 1, format!("non-finite value in column '{}'", self.header[col])));
        }
        Ok(v)
    }

    fn time(&self, row: usize, col: usize) -> Result<f64> {
        let t = self.number(row, col)?;
        if t < 0.0 {
            return Err(Error::row(row + 1, format!("negative time {t}")));
        }
        Ok(t)
    }

    fn event(&self, row: usize, col: usize) -> Result<bool> {
        let v = self.number(row, col)?;
        if v == 0.0 {
            Ok(false)
        } else if v == 1.0 {
            Ok(true)
        } else {
            Err(Error::row(row + 1, format!("event value {v} outside {{0,1}}")))
        }
    }

    fn is_numeric_column(&self, col: usize) -> bool {
        self.rows.iter().all(|r| r[col].parse::<f64>().is_ok())
    }
}

/// Loads a CSV file according to `schema`.
pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<SurvivalDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: Read>(input: R, schema: &ColumnSchema) -> Result<SurvivalDataset> {
    schema.validate()?;
    let table = RawTable::read(input)?;
    let time_col = table.column(&schema.time_column)?;
    let event_col = table.column(&schema.event_column)?;
    let feature_cols: Vec<usize> = if schema.feature_columns.is_empty() {
        (0..table.header.len())
            .filter(|&c| c != time_col && c != event_col)
            .filter(|&c| !schema.ignored_columns.contains(&table.header[c]))
            .filter(|&c| table.is_numeric_column(c))
            .collect()
    } else {
        schema
            .feature_columns
            .iter()
            .map(|f| table.column(f))
            .collect::<Result<_>>()?
    };

    let mut records = Vec::with_capacity(table.rows.len());
    for row in 0..table.rows.len() {
        let time = table.time(row, time_col)?;
        let event = table.event(row, event_col)?;
        let covariates = feature_cols
            .iter()
            .map(|&c| table.number(row, c))
            .collect::<Result<Vec<_>>>()?;
        records.push(SurvivalRecord {
            time,
            event,
            covariates,
        });
    }
    let names = feature_cols.iter().map(|&c| table.header[c].clone()).collect();
    SurvivalDataset::new(records, names)
}

/// Reads the named covariate columns, in the given order, from a CSV file
/// that need not contain time or event columns.
pub fn load_features(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_features(file, names)
}

/// Same as [`load_features`] over any reader.
pub fn read_features<R: Read>(input: R, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let table = RawTable::read(input)?;
    let cols = names
        .iter()
        .map(|f| table.column(f))
        .collect::<Result<Vec<_>>>()?;
    (0..table.rows.len())
        .map(|row| cols.iter().map(|&c| table.number(row, c)).collect())
        .collect()
}

/// Column layout of the BMT table: `ID, c, t, ta, a, tc, c, tp, p, Z1..Z10, Group`.
pub const BMT_LAYOUT: [&str; 20] = [
    "ID", "c", "t", "ta", "a", "tc", "c", "tp", "p", "Z1", "Z2", "Z3", "Z4", "Z5", "Z6", "Z7", "Z8",
    "Z9", "Z10", "Group",
];

const BMT_COVARIATES: std::ops::RangeInclusive<usize> = 9..=18;
const BMT_GROUP: usize = 19;

/// Which (time, indicator) pair of the BMT table is analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BmtEndpoint {
    /// Columns `t` and the first `c`: death or end of follow-up.
    #[default]
    Primary,
    /// Columns `ta`, `a`: acute graft-versus-host disease.
    Agvhd,
    /// Columns `tc` and the second `c`: chronic graft-versus-host disease.
    Cgvhd,
    /// Columns `tp`, `p`: platelet recovery.
    Platelet,
}

impl BmtEndpoint {
    pub const ALL: [BmtEndpoint; 4] = [
        BmtEndpoint::Primary,
        BmtEndpoint::Agvhd,
        BmtEndpoint::Cgvhd,
        BmtEndpoint::Platelet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BmtEndpoint::Primary => "primary",
            BmtEndpoint::Agvhd => "agvhd",
            BmtEndpoint::Cgvhd => "cgvhd",
            BmtEndpoint::Platelet => "platelet",
        }
    }

    /// Positions of the (time, event) columns in [`BMT_LAYOUT`].
    fn columns(self) -> (usize, usize) {
        match self {
            BmtEndpoint::Primary => (2, 1),
            BmtEndpoint::Agvhd => (3, 4),
            BmtEndpoint::Cgvhd => (5, 6),
            BmtEndpoint::Platelet => (7, 8),
        }
    }
}

impl fmt::Display for BmtEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BmtEndpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BmtEndpoint::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownEndpoint {
                name: s.to_string(),
                valid: BmtEndpoint::ALL.map(BmtEndpoint::name).join(", "),
            })
    }
}

pub fn load_bmt(path: impl AsRef<Path>, endpoint: BmtEndpoint) -> Result<SurvivalDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_bmt(file, endpoint)
}

/// The bundled BMT table.
pub fn bundled_bmt(endpoint: BmtEndpoint) -> Result<SurvivalDataset> {
    read_bmt(BMT_CSV.as_bytes(), endpoint)
}

pub fn read_bmt<R: Read>(input: R, endpoint: BmtEndpoint) -> Result<SurvivalDataset> {
    let table = RawTable::read(input)?;
    if table.header.len() != BMT_LAYOUT.len()
        || table.header.iter().zip(BMT_LAYOUT).any(|(h, want)| h != want)
    {
        return Err(Error::InvalidArgument(format!(
            "BMT layout mismatch: expected header {}, found {}",
            BMT_LAYOUT.join(","),
            table.header.join(",")
        )));
    }
    let (time_col, event_col) = endpoint.columns();
    let group_codes = category_codes(&table, BMT_GROUP)?;

    let mut records = Vec::with_capacity(table.rows.len());
    for (row, &group) in group_codes.iter().enumerate() {
        let time = table.time(row, time_col)?;
        let event = table.event(row, event_col)?;
        let mut covariates = BMT_COVARIATES
            .map(|c| table.number(row, c))
            .collect::<Result<Vec<_>>>()?;
        covariates.push(group);
        records.push(SurvivalRecord {
            time,
            event,
            covariates,
        });
    }
    let names = BMT_COVARIATES
        .map(|c| BMT_LAYOUT[c].to_string())
        .chain(std::iter::once("Group".to_string()))
        .collect();
    SurvivalDataset::new(records, names)
}

/// Numeric values are kept as is; text labels get codes 1..k in sorted order.
fn category_codes(table: &RawTable, col: usize) -> Result<Vec<f64>> {
    if table.is_numeric_column(col) {
        return (0..table.rows.len()).map(|r| table.number(r, col)).collect();
    }
    let mut labels: Vec<&str> = (0..table.rows.len())
        .map(|r| table.cell(r, col))
        .collect::<Result<_>>()?;
    let column = labels.clone();
    labels.sort_unstable();
    labels.dedup();
    let codes: HashMap<&str, f64> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (*l, (i + 1) as f64))
        .collect();
    Ok(column.iter().map(|l| codes[l]).collect())
}

/// Random partition into training and test parts.
///
/// The training part has `round(train_fraction * n)` records and must contain
/// an event; otherwise the draw is repeated up to [`MAX_SPLIT_ATTEMPTS`]
/// times. Both parts keep the original record order.
pub fn split_train_test<R: Rng + ?Sized>(
    data: &SurvivalDataset,
    train_fraction: f64,
    rng: &mut R,
) -> Result<(SurvivalDataset, SurvivalDataset)> {
    let (train, test) = split_indices(data, train_fraction, rng)?;
    Ok((data.subset(&train), data.subset(&test)))
}

/// Index form of [`split_train_test`].
pub fn split_indices<R: Rng + ?Sized>(
    data: &SurvivalDataset,
    train_fraction: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    let n = data.len();
    let k = (train_fraction * n as f64).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} leaves an empty part for n = {n}"
        )));
    }
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        let mut in_train = vec![false; n];
        for i in index::sample(rng, n, k) {
            in_train[i] = true;
        }
        if (0..n).any(|i| in_train[i] && data.records[i].event) {
            let train = (0..n).filter(|&i| in_train[i]).collect();
            let test = (0..n).filter(|&i| !in_train[i]).collect();
            return Ok((train, test));
        }
    }
    Err(Error::SplitRetriesExhausted {
        attempts: MAX_SPLIT_ATTEMPTS,
    })
}
