//! Append-only dataset file: one JSON reading per line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{DataError, Dataset, Reading, Scalar};

#[derive(Debug)]
pub struct DatasetFile {
    path: PathBuf,
}

impl DatasetFile {
    /// Opens (creating if needed) the file at `path` and rebuilds the
    /// dataset from its lines.
    pub fn open<T: Scalar>(path: impl AsRef<Path>) -> Result<(Self, Dataset<T>), DataError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        OpenOptions::new().create(true).append(true).open(&path)?;
        let mut readings = Vec::new();
        for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: Reading<T> = serde_json::from_str(&line).map_err(|e| DataError::Corrupt {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            readings.push(r);
        }
        let mut dataset = Dataset::new();
        dataset.insert(readings)?;
        Ok((Self { path }, dataset))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends readings and syncs the file.
    pub fn append<T: Scalar>(&self, readings: &[Reading<T>]) -> Result<(), DataError> {
        if readings.is_empty() {
            return Ok(());
        }
        let mut buf = String::new();
        for r in readings {
            buf.push_str(&serde_json::to_string(r).expect("reading serializes"));
            buf.push('\n');
        }
        let mut f = OpenOptions::new().append(true).open(&self.path)?;
        f.write_all(buf.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }
}
