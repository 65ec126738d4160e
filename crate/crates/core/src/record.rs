//! Run records: a diagnostic time series, run metadata and field snapshots,
//! persisted as a directory:
//!
//! ```text
//! run.json               metadata, columns, snapshot index
//! series.csv             one row per recorded time
//! snapshots/NNNN.bin     little-endian f64, row-major (axis 0 slowest)
//! snapshots/NNNN.json    grid, time, sha256 of the .bin file
//! ```
//!
//! Every file is written to a temporary name and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Column names; the first column is the time coordinate.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Value,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub grid: Grid,
    pub time: f64,
    pub dtype: String,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunIndex {
    metadata: Value,
    columns: Vec<String>,
    snapshots: Vec<SnapshotHeader>,
}

impl RunRecord {
    pub fn new(columns: Vec<String>, metadata: Value) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            metadata,
            snapshots: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid(format!(
                "row has {} entries, record has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(last) = self.rows.last() {
            if !(row[0] > last[0]) {
                return Err(Error::invalid("record times must increase strictly"));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::invalid(format!("record has no column '{name}'")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    /// Snapshot whose time is closest to `t`.
    pub fn snapshot_near(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir)?;
        let mut headers = Vec::with_capacity(self.snapshots.len());
        for (i, snap) in self.snapshots.iter().enumerate() {
            let stem = format!("{i:04}");
            let bytes = field_bytes(&snap.field);
            write_atomic(&snap_dir.join(format!("{stem}.bin")), &bytes)?;
            let header = SnapshotHeader {
                grid: snap.field.grid,
                time: snap.time,
                dtype: "f64le".into(),
                file: format!("{stem}.bin"),
                sha256: sha256_hex(&bytes),
            };
            write_json(&snap_dir.join(format!("{stem}.json")), &header)?;
            headers.push(header);
        }
        write_atomic(&dir.join("series.csv"), self.to_csv().as_bytes())?;
        let index = RunIndex {
            metadata: self.metadata.clone(),
            columns: self.columns.clone(),
            snapshots: headers,
        };
        write_json(&dir.join("run.json"), &index)
    }

    /// Load a run directory, verifying every snapshot checksum.
    pub fn load(dir: &Path) -> Result<Self> {
        let index: RunIndex = serde_json::from_slice(&fs::read(dir.join("run.json"))?)?;
        let csv = fs::read_to_string(dir.join("series.csv"))?;
        let mut lines = csv.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::invalid("empty series.csv"))?
            .split(',')
            .map(str::to_owned)
            .collect();
        if header != index.columns {
            return Err(Error::invalid("series.csv columns disagree with run.json"));
        }
        let mut record = RunRecord::new(index.columns, index.metadata);
        for line in lines.filter(|l| !l.is_empty()) {
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| Error::invalid(format!("series.csv: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            record.push_row(row)?;
        }
        let mut last = f64::NEG_INFINITY;
        for h in index.snapshots {
            if !(h.time > last) {
                return Err(Error::invalid("snapshot times must increase strictly"));
            }
            last = h.time;
            let path = dir.join("snapshots").join(&h.file);
            let bytes = fs::read(&path)?;
            if sha256_hex(&bytes) != h.sha256 {
                return Err(Error::Checksum(path.display().to_string()));
            }
            let values = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            record.snapshots.push(Snapshot {
                time: h.time,
                field: Field::new(h.grid, values)?,
            });
        }
        Ok(record)
    }
}

pub fn field_bytes(field: &Field) -> Vec<u8> {
    field.values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

/// Write `bytes` to a temporary sibling of `path`, then rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = temp_path(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// A single field with its JSON header, in the snapshot format.
pub fn save_field(path_stem: &Path, field: &Field, time: f64) -> Result<()> {
    let bytes = field_bytes(field);
    let bin = path_stem.with_extension("bin");
    write_atomic(&bin, &bytes)?;
    let header = SnapshotHeader {
        grid: field.grid,
        time,
        dtype: "f64le".into(),
        file: bin.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: sha256_hex(&bytes),
    };
    write_json(&path_stem.with_extension("json"), &header)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> RunRecord {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let mut r = RunRecord::new(vec!["t".into(), "sup_norm".into()], json!({"n": 2}));
        r.push_row(vec![1.0, 0.5]).unwrap();
        r.push_row(vec![2.0, 0.125]).unwrap();
        r.snapshots.push(Snapshot {
            time: 1.0,
            field: Field::from_fn(g, |x| (-x[0] * x[0]).exp()),
        });
        r.snapshots.push(Snapshot {
            time: 2.0,
            field: Field::from_fn(g, |x| 1.0 / 3.0 * (-x[0] * x[0]).exp()),
        });
        r
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        r.save(dir.path()).unwrap();
        let back = RunRecord::load(dir.path()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.column("sup_norm").unwrap(), vec![0.5, 0.125]);
        // No temporaries left behind.
        let stray = fs::read_dir(dir.path()).unwrap().filter(|e| {
            e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp-")
        });
        assert_eq!(stray.count(), 0);
    }

    #[test]
    fn corrupted_snapshot_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        sample().save(dir.path()).unwrap();
        let bin = dir.path().join("snapshots/0001.bin");
        let mut bytes = fs::read(&bin).unwrap();
        bytes[17] ^= 1;
        fs::write(&bin, bytes).unwrap();
        assert!(matches!(RunRecord::load(dir.path()), Err(Error::Checksum(_))));
    }

    #[test]
    fn rows_must_increase() {
        let mut r = sample();
        assert!(r.push_row(vec![2.0, 0.1]).is_err());
        assert!(r.push_row(vec![3.0]).is_err());
    }

    #[test]
    fn saving_twice_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        sample().save(a.path()).unwrap();
        sample().save(b.path()).unwrap();
        for f in ["run.json", "series.csv", "snapshots/0000.bin", "snapshots/0000.json"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
    }
}
