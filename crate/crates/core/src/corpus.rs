//! Record sets for benchmarks.
//!
//! The desk corpus is the first minute of MIT-BIH records 100, 101 and 119
//! when `ECGSQ_DATA_DIR` points at a directory holding them. Otherwise three
//! one-minute windows of the bundled 208x excerpt stand in.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::signal::{load_wfdb_record, EcgRecord};

pub const DATA_DIR_ENV: &str = "ECGSQ_DATA_DIR";
pub const DESK_RECORDS: [&str; 3] = ["100", "101", "119"];
pub const BUNDLED_WINDOWS_S: [f64; 3] = [0.0, 120.0, 240.0];
pub const WINDOW_S: f64 = 60.0;

/// Header of the bundled five-minute excerpt of MIT-BIH record 208.
pub fn bundled_header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mitdb/208x.hea")
}

pub fn bundled_record() -> Result<EcgRecord> {
    load_wfdb_record(bundled_header())
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusSource {
    MitBih(PathBuf),
    Bundled,
}

impl std::fmt::Display for CorpusSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CorpusSource::MitBih(dir) => write!(f, "MIT-BIH records {:?} from {}", DESK_RECORDS, dir.display()),
            CorpusSource::Bundled => write!(f, "bundled 208x windows at {:?} s", BUNDLED_WINDOWS_S),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub source: CorpusSource,
    /// One-minute evaluation windows.
    pub records: Vec<EcgRecord>,
}

fn mitdb_dir() -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os(DATA_DIR_ENV)?);
    DESK_RECORDS
        .iter()
        .all(|r| dir.join(format!("{r}.hea")).is_file())
        .then_some(dir)
}

/// Windows of the bundled excerpt, named `208x@<start>s`.
pub fn bundled_windows(starts_s: &[f64], dur_s: f64) -> Result<Vec<EcgRecord>> {
    let full = bundled_record()?;
    starts_s
        .iter()
        .map(|&s| {
            let mut w = full.slice(s, dur_s)?;
            w.record_id = format!("{}@{s}s", full.record_id);
            Ok(w)
        })
        .collect()
}

pub fn desk_corpus() -> Result<Corpus> {
    match mitdb_dir() {
        Some(dir) => {
            let records = DESK_RECORDS
                .iter()
                .map(|r| load_wfdb_record(dir.join(format!("{r}.hea")))?.slice(0.0, WINDOW_S))
                .collect::<Result<_>>()?;
            Ok(Corpus {
                source: CorpusSource::MitBih(dir),
                records,
            })
        }
        None => Ok(Corpus {
            source: CorpusSource::Bundled,
            records: bundled_windows(&BUNDLED_WINDOWS_S, WINDOW_S)?,
        }),
    }
}

/// Full-length records for codebook training: every header in the
/// MIT-BIH directory, or the whole bundled excerpt.
pub fn training_records(source: &CorpusSource) -> Result<Vec<EcgRecord>> {
    match source {
        CorpusSource::Bundled => Ok(vec![bundled_record()?]),
        CorpusSource::MitBih(dir) => {
            let mut headers: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| Error::io(dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "hea"))
                .collect();
            headers.sort();
            headers.iter().map(load_wfdb_record).collect()
        }
    }
}

/// Resolves a `--records` argument: a directory (every `.hea` inside), a
/// single header, or a comma-separated list of record names looked up in
/// `root`.
pub fn resolve_records(spec: &str, root: Option<&Path>) -> Result<Vec<PathBuf>> {
    let p = Path::new(spec);
    if p.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(p)
            .map_err(|e| Error::io(p, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|x| x.extension().is_some_and(|e| e == "hea"))
            .collect();
        v.sort();
        if v.is_empty() {
            return Err(Error::InvalidParameter(format!("no .hea files in {spec}")));
        }
        return Ok(v);
    }
    if p.extension().is_some_and(|e| e == "hea") {
        return Ok(vec![p.to_path_buf()]);
    }
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            let base = root.ok_or_else(|| {
                Error::InvalidParameter(format!("record {name:?} given by name but {DATA_DIR_ENV} is unset"))
            })?;
            Ok(base.join(format!("{name}.hea")))
        })
        .collect()
}
