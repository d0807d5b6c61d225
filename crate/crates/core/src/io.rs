//! CSV ingestion and report output.
//!
//! Target series: header `year,value`, one row per consecutive year.
//! Proxy matrix: header `year,<id>,<id>,...`, years identical to the target.
//! Reports: `block_start,block_rmse,lambda` (single experiment) or
//! `block_start,<member>...,mean,scatter` (ensemble). Floats are written
//! with 17 significant digits so every `f64` survives a round trip.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::crossval::{EnsembleReport, ExperimentReport, RunMode};
use crate::data::{ProxyMatrix, TimeSeries};
use crate::error::{Error, Result};
use crate::limit::DEFAULT_PSI_COLUMNS;
use crate::noise::{NoiseKind, NoiseSpec};
use crate::scalar::Real;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

/// Decimal with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn parse_field<V: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &str,
    what: &str,
) -> Result<V> {
    field.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse {what} from `{field}`"),
    })
}

fn parse_value<T: Real>(path: &Path, line: usize, field: &str) -> Result<T> {
    let v: f64 = parse_field(path, line, field, "a number")?;
    if !v.is_finite() {
        return Err(Error::NonFiniteValue {
            path: path.to_path_buf(),
            line,
        });
    }
    Ok(T::lit(v))
}

/// Reads a `year,value` target series.
pub fn load_target<T: Real>(path: impl AsRef<Path>) -> Result<TimeSeries<T>> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "year" || &headers[1] != "value" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header `year,value`".into(),
        });
    }
    let mut years: Vec<i32> = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let year: i32 = parse_field(path, line, &rec[0], "a year")?;
        if let Some(&prev) = years.last() {
            if year != prev + 1 {
                return Err(Error::NonAnnualYears {
                    path: path.to_path_buf(),
                    line,
                });
            }
        }
        years.push(year);
        values.push(parse_value(path, line, &rec[1])?);
    }
    TimeSeries::new(years, values).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

/// Reads a proxy matrix whose `year` column must equal `expected_years`.
pub fn load_proxies<T: Real>(
    path: impl AsRef<Path>,
    expected_years: &[i32],
) -> Result<ProxyMatrix<T>> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() < 2 || &headers[0] != "year" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header `year,<proxy id>,...` with at least one proxy".into(),
        });
    }
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let p = ids.len();
    let mut years = Vec::new();
    let mut flat: Vec<T> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        years.push(parse_field::<i32>(path, line, &rec[0], "a year")?);
        for field in rec.iter().skip(1) {
            flat.push(parse_value(path, line, field)?);
        }
    }
    if years != expected_years {
        let message = if years.len() != expected_years.len() {
            format!(
                "{} rows vs {} target years",
                years.len(),
                expected_years.len()
            )
        } else {
            let i = years
                .iter()
                .zip(expected_years)
                .position(|(a, b)| a != b)
                .unwrap_or(0);
            format!(
                "row {} has year {} but the target has {}",
                i + 1,
                years[i],
                expected_years[i]
            )
        };
        return Err(Error::YearMismatch {
            path: path.to_path_buf(),
            message,
        });
    }
    let data = Array2::from_shape_vec((years.len(), p), flat)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    ProxyMatrix::new(data, ids)
}

/// Writes a CSV file from preformatted cells.
pub fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_target<T: Real>(series: &TimeSeries<T>, path: impl AsRef<Path>) -> Result<()> {
    let header = vec!["year".to_string(), "value".to_string()];
    let rows = series
        .years()
        .iter()
        .zip(series.values())
        .map(|(y, v)| vec![y.to_string(), format_float(v.as_f64())]);
    write_csv(path.as_ref(), &header, rows)
}

pub fn save_proxies<T: Real>(
    x: &ProxyMatrix<T>,
    years: &[i32],
    path: impl AsRef<Path>,
) -> Result<()> {
    if years.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            actual: years.len(),
        });
    }
    let mut header = vec!["year".to_string()];
    header.extend(x.column_ids().iter().cloned());
    let rows = x.data().rows().into_iter().zip(years).map(|(row, y)| {
        let mut r = vec![y.to_string()];
        r.extend(row.iter().map(|v| format_float(v.as_f64())));
        r
    });
    write_csv(path.as_ref(), &header, rows)
}

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `blocks_<label>.csv` with `block_start,block_rmse,lambda`.
pub fn write_report<T: Real>(
    report: &ExperimentReport<T>,
    dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    let path = dir.join(format!("blocks_{}.csv", file_safe(&report.label)));
    let header = ["block_start", "block_rmse", "lambda"]
        .map(String::from)
        .to_vec();
    let rows = (0..report.len()).map(|i| {
        vec![
            report.block_starts[i].to_string(),
            format_float(report.block_rmse[i].as_f64()),
            format_float(report.per_block_lambda[i].as_f64()),
        ]
    });
    write_csv(&path, &header, rows)?;
    Ok(path)
}

/// Writes `blocks_<label>.csv` with one RMSE column per member plus the
/// ensemble mean and scatter.
pub fn write_ensemble_report<T: Real>(
    report: &EnsembleReport<T>,
    dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    let path = dir.join(format!("blocks_{}.csv", file_safe(&report.label)));
    let mut header = vec!["block_start".to_string()];
    header.extend(report.member_reports.iter().map(|m| m.label.clone()));
    header.push("mean".into());
    header.push("scatter".into());
    let rows = report.block_starts.iter().enumerate().map(|(b, &start)| {
        let mut r = vec![start.to_string()];
        for m in &report.member_reports {
            let cell = m
                .block_starts
                .iter()
                .position(|&s| s == start)
                .map(|i| format_float(m.block_rmse[i].as_f64()))
                .unwrap_or_default();
            r.push(cell);
        }
        r.push(format_float(report.mean_curve[b].as_f64()));
        r.push(format_float(report.member_scatter[b].as_f64()));
        r
    });
    write_csv(&path, &header, rows)?;
    Ok(path)
}

/// One labelled row of a summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub mean_rmse: f64,
    pub n_blocks: usize,
}

/// Writes `label,mean_rmse,n_blocks`, sorted by mean RMSE (ascending).
pub fn write_summary(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| {
        a.mean_rmse
            .total_cmp(&b.mean_rmse)
            .then_with(|| a.label.cmp(&b.label))
    });
    let header = ["label", "mean_rmse", "n_blocks"]
        .map(String::from)
        .to_vec();
    write_csv(
        path.as_ref(),
        &header,
        sorted
            .into_iter()
            .map(|r| vec![r.label, format_float(r.mean_rmse), r.n_blocks.to_string()]),
    )
}

/// A numeric CSV table read back from disk. Empty cells become NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn load_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        rows.push(
            rec.iter()
                .map(|f| {
                    if f.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        parse_field(path, line, f, "a number")
                    }
                })
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(Table { headers, rows })
}

/// Where the predictor matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProxySource {
    File(PathBuf),
    Noise(NoiseSpec),
}

/// Batch experiment configuration (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target_path: PathBuf,
    pub proxy_source: Option<ProxySource>,
    pub n_v: usize,
    pub ensemble_size: usize,
    pub seed: u64,
    /// AR(1) coefficients for the one-realization noise experiments.
    pub phi_list: Vec<f64>,
    /// AR(1) coefficient for the ensemble, limit and kriging comparisons.
    pub limit_phi: f64,
    pub psi_mc_columns: usize,
    pub mode: RunMode,
    pub output_dir: PathBuf,
    /// Columns per noise matrix; defaults to the proxy count, else 1138.
    pub noise_columns: Option<usize>,
    /// Noise experiments for `crossval`. `None` means white, Brownian and
    /// AR(1) for every `phi_list` entry when proxies come from a file, and
    /// nothing extra when the proxy source is itself noise.
    pub noise_experiments: Option<Vec<NoiseKind>>,
    /// Column counts for the convergence study.
    pub p_ladder: Vec<usize>,
    /// Noise realizations per ladder entry.
    pub limit_members: usize,
    pub drop_degenerate: bool,
    pub center_target: bool,
}

pub const DEFAULT_NOISE_COLUMNS: usize = 1138;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            target_path: PathBuf::from("target.csv"),
            proxy_source: None,
            n_v: 30,
            ensemble_size: 100,
            seed: 1,
            phi_list: vec![0.9, 0.95, 0.99],
            limit_phi: 0.99,
            psi_mc_columns: DEFAULT_PSI_COLUMNS,
            mode: RunMode::Strict,
            output_dir: PathBuf::from("out"),
            noise_columns: None,
            noise_experiments: None,
            p_ladder: vec![100, 1000, 10_000],
            limit_members: 10,
            drop_degenerate: false,
            center_target: false,
        }
    }
}

impl ExperimentConfig {
    /// Loads a config file, or the config embedded in a run manifest.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json_err = |source| Error::Json {
            path: path.to_path_buf(),
            source,
        };
        let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
        let value = match value {
            serde_json::Value::Object(mut obj) if obj.contains_key("manifest_version") => {
                obj.remove("config").unwrap_or_default()
            }
            other => other,
        };
        serde_json::from_value(value).map_err(json_err)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_v < 2 {
            return Err(Error::InvalidInput(format!(
                "n_v must be >= 2, got {}",
                self.n_v
            )));
        }
        if self.ensemble_size == 0 || self.limit_members == 0 {
            return Err(Error::InvalidInput("ensemble sizes must be >= 1".into()));
        }
        for &phi in self.phi_list.iter().chain(std::iter::once(&self.limit_phi)) {
            NoiseKind::Ar1 { phi }.validate()?;
        }
        if !(self.limit_phi > 0.0) {
            return Err(Error::InvalidInput("limit_phi must be > 0".into()));
        }
        if self.p_ladder.contains(&0) {
            return Err(Error::InvalidInput("p_ladder entries must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything needed to rerun a command and get identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool: String,
    pub library_version: String,
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, outputs: Vec<String>) -> Self {
        Self {
            manifest_version: 1,
            tool: "paleo-xval".into(),
            library_version: LIBRARY_VERSION.into(),
            command: command.into(),
            seed: config.seed,
            config: config.clone(),
            outputs,
        }
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        ensure_dir(dir)?;
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.clone(),
            source,
        })?;
        let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(text.as_bytes())
            .and_then(|_| f.write_all(b"\n"))
            .map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        let mut f = File::create(&p).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        p
    }

    #[test]
    fn target_examples() {
        let dir = tempfile::tempdir().unwrap();
        let ok = write_file(dir.path(), "a.csv", "year,value\n1850,-0.3\n1851,-0.2\n");
        let y = load_target::<f64>(&ok).unwrap();
        assert_eq!(y.len(), 2);
        assert_eq!(y.values(), &[-0.3, -0.2]);

        let gap = write_file(dir.path(), "b.csv", "year,value\n1850,0\n1851,0\n1853,0\n");
        assert!(matches!(
            load_target::<f64>(&gap),
            Err(Error::NonAnnualYears { line: 4, .. })
        ));

        let nan = write_file(dir.path(), "c.csv", "year,value\n1850,NaN\n1851,0\n");
        assert!(matches!(
            load_target::<f64>(&nan),
            Err(Error::NonFiniteValue { line: 2, .. })
        ));

        let bad = write_file(dir.path(), "d.csv", "year,value\n1850,0\n1851,abc\n");
        assert!(matches!(
            load_target::<f64>(&bad),
            Err(Error::Parse { line: 3, .. })
        ));

        let header = write_file(dir.path(), "e.csv", "yr,val\n1850,0\n1851,0\n");
        assert!(matches!(
            load_target::<f64>(&header),
            Err(Error::Parse { line: 1, .. })
        ));

        assert!(matches!(
            load_target::<f64>(dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn proxy_year_checks() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(
            dir.path(),
            "x.csv",
            "year,a,b\n1850,1,2\n1851,3,4\n1852,5,6\n",
        );
        let x = load_proxies::<f64>(&p, &[1850, 1851, 1852]).unwrap();
        assert_eq!(x.column_ids(), &["a".to_string(), "b".to_string()]);
        assert_eq!(x.data()[[2, 1]], 6.0);
        assert!(matches!(
            load_proxies::<f64>(&p, &[1850, 1851]),
            Err(Error::YearMismatch { .. })
        ));
        assert!(matches!(
            load_proxies::<f64>(&p, &[1849, 1850, 1851]),
            Err(Error::YearMismatch { .. })
        ));
        let ragged = write_file(dir.path(), "r.csv", "year,a,b\n1850,1,2\n1851,3\n");
        assert!(matches!(
            load_proxies::<f64>(&ragged, &[1850, 1851]),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn single_block_report_has_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let r = ExperimentReport {
            label: "one".into(),
            block_starts: vec![3],
            block_rmse: vec![0.25],
            per_block_lambda: vec![2.0],
            predictions: vec![vec![0.0]],
            mean_rmse: 0.25,
            failed_blocks: vec![],
        };
        let path = write_report(&r, dir.path()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().next().unwrap(),
            "block_start,block_rmse,lambda"
        );
    }

    #[test]
    fn config_defaults_and_manifest_reload() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.n_v, 30);
        assert_eq!(cfg.ensemble_size, 100);
        assert_eq!(cfg.psi_mc_columns, 100_000);

        let dir = tempfile::tempdir().unwrap();
        let partial = write_file(
            dir.path(),
            "c.json",
            r#"{"target_path": "t.csv", "seed": 9}"#,
        );
        let loaded = ExperimentConfig::load(&partial).unwrap();
        assert_eq!(loaded.seed, 9);
        assert_eq!(loaded.n_v, 30);

        let m = RunManifest::new("crossval", &loaded, vec!["summary.csv".into()]);
        let mpath = m.write(dir.path()).unwrap();
        assert_eq!(ExperimentConfig::load(&mpath).unwrap(), loaded);

        let unknown = write_file(dir.path(), "u.json", r#"{"n_vv": 3}"#);
        assert!(matches!(
            ExperimentConfig::load(&unknown),
            Err(Error::Json { .. })
        ));
    }

    #[test]
    fn proxy_source_json() {
        let src = ProxySource::Noise(NoiseSpec::new(NoiseKind::White, 40, 5, 3).unwrap());
        let s = serde_json::to_string(&src).unwrap();
        assert_eq!(s, r#"{"noise":{"kind":"white","n":40,"p":5,"seed":3}}"#);
        let f: ProxySource = serde_json::from_str(r#"{"file":"proxies.csv"}"#).unwrap();
        assert_eq!(f, ProxySource::File("proxies.csv".into()));
    }
}
