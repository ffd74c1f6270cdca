//! CSV input series and sweep result tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn data_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Data { path: path.to_path_buf(), reason: reason.into() }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Read one numeric column.
///
/// Accepts `value` or `t,value` rows with an optional header. Without a
/// `column` name the last column is used. Lines starting with `#` are skipped.
pub fn load_series_csv(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows = rdr.records();
    let first = match rows.next() {
        Some(r) => r.map_err(|e| data_err(path, e.to_string()))?,
        None => return Err(data_err(path, "no rows")),
    };
    let is_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let col = match (is_header, column) {
        (true, Some(name)) => first
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| data_err(path, format!("no column named `{name}`")))?,
        (false, Some(name)) => return Err(data_err(path, format!("column `{name}` requested but file has no header"))),
        (_, None) => first.len().checked_sub(1).ok_or_else(|| data_err(path, "empty first row"))?,
    };

    let mut out = Vec::new();
    let mut parse = |rec: &csv::StringRecord, line: usize| -> Result<()> {
        let field = rec.get(col).ok_or_else(|| data_err(path, format!("row {line}: missing column {col}")))?;
        let v: f64 = field.parse().map_err(|_| data_err(path, format!("row {line}: `{field}` is not a number")))?;
        if !v.is_finite() {
            return Err(data_err(path, format!("row {line}: non-finite value")));
        }
        out.push(v);
        Ok(())
    };
    if !is_header {
        parse(&first, 1)?;
    }
    for (i, rec) in rows.enumerate() {
        let rec = rec.map_err(|e| data_err(path, e.to_string()))?;
        parse(&rec, i + 2)?;
    }
    if out.is_empty() {
        return Err(data_err(path, "no data rows"));
    }
    Ok(out)
}

/// One row of a sweep table. Theory columns are NaN when not computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub eta2: f64,
    pub train_nmse_mc: f64,
    pub train_nmse_mc_std: f64,
    pub test_nmse_mc: f64,
    pub test_nmse_mc_std: f64,
    #[serde(rename = "train_nmse_theory_fixedW")]
    pub train_nmse_theory_fixed_w: f64,
    #[serde(rename = "test_nmse_theory_fixedW")]
    pub test_nmse_theory_fixed_w: f64,
    pub train_nmse_theory_limit: f64,
    pub test_nmse_theory_limit: f64,
    pub n: usize,
    #[serde(rename = "T")]
    pub t_len: usize,
    #[serde(rename = "That")]
    pub t_hat: usize,
    pub trials: usize,
    pub seed: u64,
}

pub const RESULT_COLUMNS: [&str; 14] = [
    "eta2",
    "train_nmse_mc",
    "train_nmse_mc_std",
    "test_nmse_mc",
    "test_nmse_mc_std",
    "train_nmse_theory_fixedW",
    "test_nmse_theory_fixedW",
    "train_nmse_theory_limit",
    "test_nmse_theory_limit",
    "n",
    "T",
    "That",
    "trials",
    "seed",
];

/// Write through a sibling temp file and a rename, so readers never see a
/// partial table.
fn atomic_csv<F>(path: &Path, timestamp: bool, fill: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<fs::File>) -> std::result::Result<(), csv::Error>,
{
    let tmp = temp_sibling(path);
    let res = (|| -> Result<()> {
        let mut file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        if timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            writeln!(file, "# generated at unix time {secs}").map_err(io_err(&tmp))?;
        }
        let mut w = csv::Writer::from_writer(file);
        fill(&mut w).map_err(|e| data_err(&tmp, e.to_string()))?;
        let file = w.into_inner().map_err(|e| data_err(&tmp, e.to_string()))?;
        file.sync_all().map_err(io_err(&tmp))?;
        fs::rename(&tmp, path).map_err(io_err(path))
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    res
}

/// Serialize records atomically, header taken from the record fields.
pub fn write_csv_atomic<R: Serialize>(path: &Path, rows: &[R], timestamp: bool) -> Result<()> {
    atomic_csv(path, timestamp, |w| rows.iter().try_for_each(|row| w.serialize(row)))
}

/// Numeric table with an explicit header.
pub fn write_table_atomic(path: &Path, header: &[String], rows: &[Vec<f64>], timestamp: bool) -> Result<()> {
    if rows.iter().any(|r| r.len() != header.len()) {
        return Err(data_err(path, "row width differs from the header"));
    }
    atomic_csv(path, timestamp, |w| {
        w.write_record(header)?;
        rows.iter().try_for_each(|r| w.write_record(r.iter().map(|v| v.to_string())))
    })
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow], timestamp: bool) -> Result<()> {
    write_csv_atomic(path, rows, timestamp)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = rdr.headers().map_err(|e| data_err(path, e.to_string()))?;
    if headers.iter().ne(RESULT_COLUMNS.iter().copied()) {
        return Err(data_err(path, "unexpected result columns"));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| data_err(path, e.to_string())))
        .collect()
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}
