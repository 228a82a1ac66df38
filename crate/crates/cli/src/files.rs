//! On-disk layout of a working directory and the readers and writers for it.
//!
//! ```text
//! site.toml                      lanes, segments, geographic origin
//! tracks.jsonl                   roadside trajectories, one sample per line
//! faces/<stream>.jsonl           in-cabin face frames
//! faces/<stream>.calibration.jsonl
//! datasets/<model>.csv           labeled training tables
//! datasets/manifest.json
//! models/<model>.json            trained classifiers
//! cv_report.json, importance.csv
//! predictions.csv, scores.csv
//! heatmap_cells.{svg,csv}, heatmap_timeline.{svg,csv}
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srm_core::config::PipelineConfig;
use srm_core::driver::{read_calibration, read_face_frames, write_calibration, write_face_frames};
use srm_core::learn::{GbdtModel, LabeledTable};
use srm_core::pipeline::{DriverStream, ModelKey, ModelSet, Site};
use srm_core::trajectory::{read_track_records, resolve_records, write_track_points, TrackPoint};

use crate::{CliError, CliResult};

pub const SITE: &str = "site.toml";
pub const TRACKS: &str = "tracks.jsonl";
pub const FACES: &str = "faces";
pub const CALIBRATION_SUFFIX: &str = ".calibration.jsonl";
pub const DATASETS: &str = "datasets";
pub const MANIFEST: &str = "manifest.json";
pub const MODELS: &str = "models";
pub const CV_REPORT: &str = "cv_report.json";
pub const IMPORTANCE: &str = "importance.csv";
pub const PREDICTIONS: &str = "predictions.csv";
pub const SCORES: &str = "scores.csv";
pub const TRUTH: &str = "truth.json";

/// Attaches the offending path to a core error.
pub fn at<T>(path: &Path, r: srm_core::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Data {
        path: path.to_path_buf(),
        source,
    })
}

fn open(path: &Path) -> CliResult<File> {
    at(path, File::open(path).map_err(Into::into))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        at(dir, fs::create_dir_all(dir).map_err(Into::into))?;
    }
    at(path, File::create(path).map(BufWriter::new).map_err(Into::into))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut w = create(path)?;
    at(path, w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(Into::into))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = at(path, serde_json::to_string_pretty(value).map_err(Into::into))?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = at(path, fs::read_to_string(path).map_err(Into::into))?;
    at(path, serde_json::from_str(&text).map_err(Into::into))
}

/// Input locations: configured paths win over the working directory.
pub struct Layout {
    pub out: PathBuf,
    pub site: PathBuf,
    pub tracks: PathBuf,
    pub faces: PathBuf,
    pub datasets: PathBuf,
    pub models: PathBuf,
    pub scores: PathBuf,
}

impl Layout {
    pub fn new(config: &PipelineConfig, out: &Path) -> Self {
        let p = &config.paths;
        let pick = |configured: &Option<PathBuf>, name: &str| configured.clone().unwrap_or_else(|| out.join(name));
        Layout {
            out: out.to_path_buf(),
            site: pick(&p.site, SITE),
            tracks: pick(&p.tracks, TRACKS),
            faces: pick(&p.faces, FACES),
            datasets: pick(&p.datasets, DATASETS),
            models: pick(&p.models, MODELS),
            scores: pick(&p.scores, SCORES),
        }
    }
}

pub fn write_site(path: &Path, site: &Site) -> CliResult<()> {
    let text = at(path, site.to_toml())?;
    write_text(path, &text)
}

pub fn read_site(path: &Path) -> CliResult<Site> {
    let text = at(path, fs::read_to_string(path).map_err(Into::into))?;
    at(path, Site::from_toml(&text))
}

pub fn write_tracks(path: &Path, tracks: &BTreeMap<String, Vec<TrackPoint>>) -> CliResult<()> {
    let mut w = create(path)?;
    for points in tracks.values() {
        at(path, write_track_points(&mut w, points))?;
    }
    at(path, w.flush().map_err(Into::into))
}

pub fn read_tracks(path: &Path, site: &Site) -> CliResult<BTreeMap<String, Vec<TrackPoint>>> {
    let records = at(path, read_track_records(BufReader::new(open(path)?)))?;
    at(path, resolve_records(records, Some(&site.segments)))
}

/// Replaces the stream directory's contents.
pub fn write_streams(dir: &Path, streams: &[DriverStream]) -> CliResult<()> {
    if dir.exists() {
        at(dir, fs::remove_dir_all(dir).map_err(Into::into))?;
    }
    for s in streams {
        let frames = dir.join(format!("{}.jsonl", s.id));
        let mut w = create(&frames)?;
        at(&frames, write_face_frames(&mut w, &s.frames))?;
        at(&frames, w.flush().map_err(Into::into))?;
        let cal = dir.join(format!("{}{CALIBRATION_SUFFIX}", s.id));
        let mut w = create(&cal)?;
        at(&cal, write_calibration(&mut w, &s.calibration))?;
        at(&cal, w.flush().map_err(Into::into))?;
    }
    Ok(())
}

/// Every `<id>.jsonl` with its `<id>.calibration.jsonl`, sorted by id. A
/// missing directory means no equipped vehicles.
pub fn read_streams(dir: &Path) -> CliResult<Vec<DriverStream>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let entries = at(dir, fs::read_dir(dir).map_err(Into::into))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = at(dir, entry.map_err(Into::into))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(CALIBRATION_SUFFIX) {
            continue;
        }
        if let Some(id) = name.strip_suffix(".jsonl") {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    ids.into_iter()
        .map(|id| {
            let frames_path = dir.join(format!("{id}.jsonl"));
            let frames = at(&frames_path, read_face_frames(BufReader::new(open(&frames_path)?)))?;
            let cal_path = dir.join(format!("{id}{CALIBRATION_SUFFIX}"));
            let calibration = at(&cal_path, read_calibration(BufReader::new(open(&cal_path)?)))?;
            Ok(DriverStream { id, frames, calibration })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Rows before this time train; later rows are held out.
    pub split_at: Option<f64>,
    pub horizons: Vec<u8>,
    pub rows: usize,
    pub matched_streams: usize,
    /// Share of labeled rows with any conflict, per horizon.
    pub prevalence: BTreeMap<u8, f64>,
    pub tables: BTreeMap<String, TableSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub rows: usize,
    pub positive_rate: f64,
}

pub fn write_table(path: &Path, table: &LabeledTable, comments: &[String]) -> CliResult<()> {
    let mut w = create(path)?;
    at(path, table.write_csv(&mut w, comments))?;
    at(path, w.flush().map_err(Into::into))
}

/// Tables present in `dir` for the requested keys. Missing tables are
/// skipped; the caller decides whether that is an error.
pub fn read_tables(dir: &Path, keys: &[ModelKey]) -> CliResult<BTreeMap<ModelKey, LabeledTable>> {
    let mut out = BTreeMap::new();
    for key in keys {
        let path = dir.join(format!("{}.csv", key.stem()));
        if !path.exists() {
            continue;
        }
        out.insert(*key, at(&path, LabeledTable::read_csv(BufReader::new(open(&path)?)))?);
    }
    Ok(out)
}

pub fn write_models(dir: &Path, models: &ModelSet) -> CliResult<()> {
    at(dir, fs::create_dir_all(dir).map_err(Into::into))?;
    for (key, model) in models {
        let path = dir.join(format!("{}.json", key.stem()));
        at(&path, model.save(&path))?;
    }
    Ok(())
}

/// Every `<model>.json` in `dir` whose name is a model key.
pub fn read_models(dir: &Path) -> CliResult<ModelSet> {
    let entries = at(dir, fs::read_dir(dir).map_err(Into::into))?;
    let mut out = ModelSet::new();
    for entry in entries {
        let path = at(dir, entry.map_err(Into::into))?.path();
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        if let Some(key) = ModelKey::parse(stem) {
            out.insert(key, at(&path, GbdtModel::load(&path))?);
        }
    }
    Ok(out)
}

/// Creates `path` and hands a buffered writer to `f`, flushing afterwards.
pub fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> srm_core::Result<()>) -> CliResult<()> {
    let mut w = create(path)?;
    at(path, f(&mut w))?;
    at(path, w.flush().map_err(Into::into))
}

pub fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}
