//! CSV ingestion and atomic artifact output.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use fbtc_core::Trajectory;
use serde::{Deserialize, Serialize};
use tempfile::TempDir;

use crate::error::{CliError, Result};

/// Trajectories in input order, with optional per-trajectory labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub trajectories: Vec<Trajectory>,
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// Long if the header has `time` and `value` columns, wide otherwise.
    #[default]
    Auto,
    /// One row per observation: `id,time,value[,label]`.
    Long,
    /// One row per trajectory: `id,<t1>,<t2>,...`; empty cells are skipped.
    Wide,
}

/// Lossless decimal form with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn open(path: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| CliError::io(path, e))?;
    Ok(s)
}

fn csv_error(path: &str, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    CliError::Parse {
        path: path.into(),
        line,
        column: String::new(),
        message: e.to_string(),
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn parse_f64(path: &str, line: u64, column: &str, cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| CliError::Parse {
        path: path.into(),
        line,
        column: column.into(),
        message: format!("expected a number, found {cell:?}"),
    })
}

/// Builds trajectories from `(id, times, values)` groups, collecting every
/// validation failure.
fn assemble(groups: Vec<(String, Vec<(f64, f64)>)>) -> Result<Vec<Trajectory>> {
    let mut out = Vec::with_capacity(groups.len());
    let mut errors = Vec::new();
    for (id, mut obs) in groups {
        obs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (times, values) = obs.into_iter().unzip();
        match Trajectory::new(id, times, values) {
            Ok(t) => out.push(t),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(CliError::InvalidTrajectories(errors))
    }
}

/// Parses long-format CSV text; `path` is only used in error messages.
pub fn parse_long(text: &str, path: &str) -> Result<LoadedData> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| {
        column(&headers, name).ok_or_else(|| CliError::Parse {
            path: path.into(),
            line: 1,
            column: name.into(),
            message: format!("missing required column {name:?}"),
        })
    };
    let (id_col, time_col, value_col) = (find("id")?, find("time")?, find("value")?);
    let label_col = column(&headers, "label");

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record.get(id_col).unwrap_or_default().to_string();
        let time = parse_f64(path, line, "time", record.get(time_col).unwrap_or_default())?;
        let value = parse_f64(path, line, "value", record.get(value_col).unwrap_or_default())?;
        let label = label_col.map(|c| record.get(c).unwrap_or_default().to_string());
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            groups.push((id.clone(), Vec::new()));
            if let Some(l) = &label {
                labels.push(l.clone());
            }
            groups.len() - 1
        });
        if let Some(l) = label {
            if labels[slot] != l {
                return Err(CliError::Parse {
                    path: path.into(),
                    line,
                    column: "label".into(),
                    message: format!("trajectory {id:?} has conflicting labels {:?} and {l:?}", labels[slot]),
                });
            }
        }
        groups[slot].1.push((time, value));
    }
    Ok(LoadedData {
        trajectories: assemble(groups)?,
        labels: label_col.map(|_| labels),
    })
}

/// Parses wide-format CSV text: first column `id`, an optional `label`
/// column, all other headers numeric times.
pub fn parse_wide(text: &str, path: &str) -> Result<LoadedData> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let label_col = column(&headers, "label");
    let mut times = Vec::new();
    for (c, h) in headers.iter().enumerate().skip(1) {
        if Some(c) != label_col {
            times.push((c, parse_f64(path, 1, h, h)?));
        }
    }
    let mut groups = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record.get(0).unwrap_or_default().to_string();
        let mut obs = Vec::new();
        for &(c, t) in &times {
            let cell = record.get(c).unwrap_or_default();
            if !cell.is_empty() {
                obs.push((t, parse_f64(path, line, &headers[c], cell)?));
            }
        }
        if let Some(c) = label_col {
            labels.push(record.get(c).unwrap_or_default().to_string());
        }
        groups.push((id, obs));
    }
    Ok(LoadedData {
        trajectories: assemble(groups)?,
        labels: label_col.map(|_| labels),
    })
}

pub fn detect_format(text: &str) -> InputFormat {
    let mut rdr = reader(text);
    match rdr.headers() {
        Ok(h) if column(h, "time").is_some() && column(h, "value").is_some() => InputFormat::Long,
        _ => InputFormat::Wide,
    }
}

pub fn load_data(path: &Path, format: InputFormat) -> Result<LoadedData> {
    let text = open(path)?;
    let name = path.display().to_string();
    match format {
        InputFormat::Auto => match detect_format(&text) {
            InputFormat::Wide => parse_wide(&text, &name),
            _ => parse_long(&text, &name),
        },
        InputFormat::Long => parse_long(&text, &name),
        InputFormat::Wide => parse_wide(&text, &name),
    }
}

pub fn load_long_csv(path: &Path) -> Result<LoadedData> {
    load_data(path, InputFormat::Long)
}

/// `(id, value)` pairs of two named columns, in file order.
pub fn load_id_column(path: &Path, value_column: &str) -> Result<Vec<(String, String)>> {
    let text = open(path)?;
    let name = path.display().to_string();
    let mut rdr = reader(&text);
    let headers = rdr.headers().map_err(|e| csv_error(&name, e))?.clone();
    let missing = |col: &str| CliError::Parse {
        path: name.clone(),
        line: 1,
        column: col.into(),
        message: format!("missing required column {col:?}"),
    };
    let id_col = column(&headers, "id").ok_or_else(|| missing("id"))?;
    let val_col = column(&headers, value_column).ok_or_else(|| missing(value_column))?;
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&name, e))?;
        let id = record.get(id_col).unwrap_or_default().to_string();
        let value = record.get(val_col).unwrap_or_default().to_string();
        match seen.get(&id) {
            Some(prev) if *prev != value => {
                return Err(CliError::Parse {
                    path: name.clone(),
                    line: record.position().map_or(0, |p| p.line()),
                    column: value_column.into(),
                    message: format!("id {id:?} has conflicting values"),
                })
            }
            Some(_) => {}
            None => {
                seen.insert(id.clone(), value.clone());
                out.push((id, value));
            }
        }
    }
    Ok(out)
}

/// Long-format CSV text of `data`, with a `label` column when labels exist.
pub fn long_csv(data: &LoadedData) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Config(e.to_string());
    if data.labels.is_some() {
        w.write_record(["id", "time", "value", "label"]).map_err(io)?;
    } else {
        w.write_record(["id", "time", "value"]).map_err(io)?;
    }
    for (i, t) in data.trajectories.iter().enumerate() {
        for (&time, &value) in t.times().iter().zip(t.values()) {
            let mut row = vec![t.id().to_string(), fmt_num(time), fmt_num(value)];
            if let Some(labels) = &data.labels {
                row.push(labels[i].clone());
            }
            w.write_record(&row).map_err(io)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Config(e.to_string()))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_file_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// A set of output files staged in a temporary directory and moved into the
/// output directory together once every file is complete.
pub struct ArtifactSet {
    dir: PathBuf,
    staging: TempDir,
    written: Vec<String>,
}

impl ArtifactSet {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let staging = tempfile::Builder::new()
            .prefix(".fbtc-staging")
            .tempdir_in(dir)
            .map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staging,
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.staging.path().join(name);
        let mut f = BufWriter::new(File::create(&path).map_err(|e| CliError::io(&path, e))?);
        f.write_all(bytes)
            .and_then(|_| f.flush())
            .map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Moves the staged files into place and deletes any file named in
    /// `stale` that this set did not produce.
    pub fn commit(self, stale: &[&str]) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for name in &self.written {
            let target = self.dir.join(name);
            fs::rename(self.staging.path().join(name), &target).map_err(|e| CliError::io(&target, e))?;
            paths.push(target);
        }
        for name in stale {
            if !self.written.iter().any(|w| w == name) {
                let old = self.dir.join(name);
                if old.exists() {
                    fs::remove_file(&old).map_err(|e| CliError::io(&old, e))?;
                }
            }
        }
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_groups_by_first_appearance() {
        let text = "id,time,value\nb,1,2\na,0,1\nb,0,5\na,1,1\nb,2,0\na,2,3\n";
        let data = parse_long(text, "x").unwrap();
        let ids: Vec<&str> = data.trajectories.iter().map(|t| t.id()).collect();
        assert_eq!(ids, ["b", "a"]);
        assert_eq!(data.trajectories[0].times(), [0.0, 1.0, 2.0]);
        assert_eq!(data.trajectories[0].values(), [5.0, 2.0, 0.0]);
        assert!(data.labels.is_none());
    }

    #[test]
    fn duplicate_time_is_reported_with_id() {
        let text = "id,time,value\na,0,1\na,1,1\na,1,2\nb,0,1\nb,1,2\nb,2,3\n";
        match parse_long(text, "x") {
            Err(CliError::InvalidTrajectories(errors)) => {
                assert_eq!(errors.len(), 1);
                assert!(matches!(&errors[0], fbtc_core::Error::Trajectory { id, .. } if id == "a"));
                assert_eq!(errors[0].kind(), "NonMonotoneTimes");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_names_line_and_column() {
        let text = "id,time,value\na,0,1\na,1,oops\n";
        match parse_long(text, "x") {
            Err(CliError::Parse { line, column, .. }) => assert_eq!((line, column.as_str()), (3, "value")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wide_matches_long() {
        let wide = "id,0,0.5,1\nu,1,2,4\nv,0,,1\nw,3,3,3\n";
        let long = "id,time,value\nu,0,1\nu,0.5,2\nu,1,4\nw,0,3\nw,0.5,3\nw,1,3\n";
        assert_eq!(detect_format(wide), InputFormat::Wide);
        assert!(matches!(parse_wide(wide, "x"), Err(CliError::InvalidTrajectories(_))));
        let wide_ok = "id,0,0.5,1\nu,1,2,4\nw,3,3,3\n";
        assert_eq!(parse_wide(wide_ok, "x").unwrap(), parse_long(long, "x").unwrap());
    }

    #[test]
    fn long_round_trip_is_bit_exact() {
        let t = Trajectory::new("a", vec![0.1, 1.0 / 3.0, 0.7], vec![1e-300, -2.5e17, 0.30000000000000004]).unwrap();
        let data = LoadedData {
            trajectories: vec![t],
            labels: Some(vec!["g".into()]),
        };
        let text = String::from_utf8(long_csv(&data).unwrap()).unwrap();
        assert_eq!(parse_long(&text, "x").unwrap(), data);
    }
}
