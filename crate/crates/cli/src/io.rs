//! File formats.
//!
//! - Event CSV: header `seq_id,time,type`, one row per event, with a
//!   sidecar JSON (`<stem>.meta.json`) carrying per-sequence horizons and
//!   the type count.
//! - Matrix CSV: dense, row-major, no header; dimensions inferred.
//! - Heatmap: binary 8-bit grayscale PGM, max entry mapped to 255.
//! - Floats are written with 17 significant digits so every CSV
//!   round-trips bit-exactly.

use crate::error::{io_error, validation, CliError, Result};
use hawkes_align::hawkes::{Event, EventSequence};
use hawkes_align::{EventSequenceF64, HawkesParamsF64};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// 17 significant digits: exact `f64` round-trip through decimal text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Serialize, Deserialize)]
struct EventsMeta {
    horizons: BTreeMap<String, f64>,
    num_types: usize,
}

/// Sidecar path for an event CSV: `events.csv` -> `events.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Write a corpus as `events.csv` plus its sidecar; sequences are assigned
/// ids `0..n` in order.
pub fn write_events_csv(csv_path: &Path, sequences: &[EventSequenceF64]) -> Result<()> {
    let mut writer = csv::Writer::from_path(csv_path).map_err(|e| io_error(csv_path, e))?;
    writer
        .write_record(["seq_id", "time", "type"])
        .map_err(|e| io_error(csv_path, e))?;
    for (id, seq) in sequences.iter().enumerate() {
        for ev in seq.events() {
            writer
                .write_record([id.to_string(), fmt_f64(ev.time), ev.type_id.to_string()])
                .map_err(|e| io_error(csv_path, e))?;
        }
    }
    writer.flush().map_err(|e| io_error(csv_path, e))?;

    let meta = EventsMeta {
        horizons: sequences
            .iter()
            .enumerate()
            .map(|(id, seq)| (id.to_string(), seq.horizon()))
            .collect(),
        num_types: sequences.first().map(|s| s.num_types()).unwrap_or(0),
    };
    write_json_pretty(&sidecar_path(csv_path), &meta)
}

/// Read a corpus from an event CSV and its sidecar. Rows may arrive in any
/// order; ties are broken (with a warning) by the smallest representable
/// increment. Sequences listed in the sidecar but absent from the CSV are
/// empty.
pub fn read_events_csv(csv_path: &Path) -> Result<Vec<EventSequenceF64>> {
    let meta_path = sidecar_path(csv_path);
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| io_error(&meta_path, e))?;
    let meta: EventsMeta = serde_json::from_str(&meta_text)
        .map_err(|e| validation(format!("{}: {e}", meta_path.display())))?;
    if meta.num_types == 0 {
        return Err(validation(format!(
            "{}: num_types must be positive",
            meta_path.display()
        )));
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(csv_path)
        .map_err(|e| io_error(csv_path, e))?;
    {
        let headers = reader.headers().map_err(|e| io_error(csv_path, e))?;
        let expected = ["seq_id", "time", "type"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(validation(format!(
                "{}: expected header seq_id,time,type, got {}",
                csv_path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }

    let mut events: BTreeMap<String, Vec<Event<f64>>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| io_error(csv_path, e))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or_default();
        let context = |what: &str| {
            validation(format!("{} line {line}: {what}", csv_path.display()))
        };
        if record.len() != 3 {
            return Err(context("expected 3 fields"));
        }
        let seq_id = record[0].to_string();
        let horizon = *meta
            .horizons
            .get(&seq_id)
            .ok_or_else(|| context(&format!("unknown seq_id '{seq_id}' (not in sidecar)")))?;
        let time: f64 = record[1]
            .parse()
            .map_err(|_| context(&format!("invalid time '{}'", &record[1])))?;
        let type_id: usize = record[2]
            .parse()
            .map_err(|_| context(&format!("invalid type '{}'", &record[2])))?;
        if !(0.0..=horizon).contains(&time) {
            return Err(context(&format!(
                "time {time} outside [0, {horizon}] for seq '{seq_id}'"
            )));
        }
        if type_id >= meta.num_types {
            return Err(context(&format!(
                "type {type_id} out of range ({} types)",
                meta.num_types
            )));
        }
        events.entry(seq_id).or_default().push(Event { time, type_id });
    }

    // Deterministic sequence order: numeric when every id parses, else
    // lexicographic.
    let mut ids: Vec<String> = meta.horizons.keys().cloned().collect();
    if ids.iter().all(|id| id.parse::<u64>().is_ok()) {
        ids.sort_by_key(|id| id.parse::<u64>().unwrap());
    } else {
        ids.sort();
    }

    ids.iter()
        .map(|id| {
            let horizon = meta.horizons[id];
            let evs = events.remove(id).unwrap_or_default();
            EventSequence::from_unordered(evs, horizon, meta.num_types).map_err(CliError::from)
        })
        .collect()
}

/// Dense row-major matrix CSV without a header.
pub fn write_matrix_csv(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for row in matrix.rows() {
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_error(path, e))
}

/// Read a headerless dense matrix CSV, inferring dimensions.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .enumerate()
            .map(|(col, cell)| {
                cell.trim().parse::<f64>().map_err(|_| {
                    validation(format!(
                        "{} line {}: invalid number '{cell}' in column {}",
                        path.display(),
                        idx + 1,
                        col + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(validation(format!(
                    "{} line {}: expected {} columns, got {}",
                    path.display(),
                    idx + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(validation(format!("{}: empty matrix", path.display())));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(Array2::from_shape_fn((m, n), |(i, j)| rows[i][j]))
}

/// Binary 8-bit grayscale PGM; the largest entry maps to 255 linearly.
pub fn write_pgm(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    let (h, w) = matrix.dim();
    let max = matrix.iter().cloned().fold(0.0f64, f64::max);
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for &v in matrix.iter() {
        let level = if max > 0.0 {
            (v / max * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        };
        bytes.push(level);
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamsFile {
    mu: Vec<f64>,
    a: Vec<Vec<f64>>,
    beta: f64,
}

pub fn read_params_json(path: &Path) -> Result<HawkesParamsF64> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let file: ParamsFile = serde_json::from_str(&text)
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let c = file.mu.len();
    if file.a.len() != c || file.a.iter().any(|row| row.len() != c) {
        return Err(validation(format!(
            "{}: infectivity matrix must be {c}x{c}",
            path.display()
        )));
    }
    let mu = Array1::from_vec(file.mu);
    let a = Array2::from_shape_fn((c, c), |(i, j)| file.a[i][j]);
    HawkesParamsF64::new(mu, a, file.beta).map_err(CliError::from)
}

pub fn write_params_json(path: &Path, params: &HawkesParamsF64) -> Result<()> {
    let file = ParamsFile {
        mu: params.mu().to_vec(),
        a: params
            .a()
            .rows()
            .into_iter()
            .map(|row| row.to_vec())
            .collect(),
        beta: params.beta(),
    };
    write_json_pretty(path, &file)
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| validation(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

/// Everything needed to reproduce a run, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub timings_ms: BTreeMap<String, u128>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: std::env::args().skip(1).collect(),
            seed,
            threads: 1,
            config: serde_json::Value::Null,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    write_json_pretty(&dir.join("manifest.json"), manifest)
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}
