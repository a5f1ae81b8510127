use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cfs_core::CfsError;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Compute(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Compute(_) => 1,
        }
    }
}

impl From<CfsError> for Failure {
    fn from(e: CfsError) -> Self {
        match e {
            CfsError::Parse(_) => Failure::Io(e.to_string()),
            CfsError::InvalidConfig(_) | CfsError::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Writes report files into one directory.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }

    pub fn json<S: Serialize>(&self, name: &str, value: &S) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn csv<S: Serialize>(&self, name: &str, rows: &[S]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row).map_err(|e| Failure::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
        self.write(name, &bytes)
    }
}

#[derive(Debug, Serialize)]
pub struct ActionJson {
    pub action: f64,
    pub volume: f64,
    pub trace_integral: f64,
    pub boundedness: f64,
    pub s_constant: f64,
    pub ell_values: Vec<f64>,
    pub trace_mean: f64,
    pub trace_max_deviation: f64,
}
