//! Trial files: one CSV of samples plus a JSON sidecar with the metadata.
//!
//! Canonical CSV header is `t,fx,fy,fz,tx,ty,tz`. The sidecar sits next to
//! the CSV with the same stem and a `.json` extension:
//!
//! ```json
//! {"rate_hz": 1000.0, "outcome": "nominal", "arm_id": "right",
//!  "transitions": [["approach", 0.0], ["rotation", 2.5]]}
//! ```
//!
//! An optional `"key"` groups trials of different arms recorded together;
//! it defaults to the file stem.

use super::{Axis, Outcome, SignalError, Transition, WrenchSample, WrenchTrial};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Maps an external CSV layout onto the canonical one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSchema {
    pub time_column: String,
    /// Column names in `fx, fy, fz, tx, ty, tz` order.
    pub axis_columns: [String; 6],
    pub delimiter: u8,
    pub sidecar_extension: String,
}

impl Default for TrialSchema {
    fn default() -> Self {
        Self {
            time_column: "t".into(),
            axis_columns: Axis::ALL.map(|a| a.name().to_string()),
            delimiter: b',',
            sidecar_extension: "json".into(),
        }
    }
}

/// Sidecar contents: everything about a trial except its samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub rate_hz: f64,
    pub outcome: Outcome,
    pub arm_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub transitions: Vec<(String, f64)>,
}

impl Sidecar {
    pub fn load(path: &Path) -> Result<Self, SignalError> {
        let text = fs::read_to_string(path).map_err(|e| SignalError::Sidecar(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| SignalError::Sidecar(format!("{}: {e}", path.display())))
    }

    pub fn transitions(&self) -> Vec<Transition> {
        self.transitions.iter().map(|(s, t)| Transition::new(s.clone(), *t)).collect()
    }

    /// Attaches samples; `fallback_key` is used when the sidecar names none.
    pub fn into_trial(self, samples: Vec<WrenchSample>, fallback_key: &str) -> Result<WrenchTrial, SignalError> {
        let trial = WrenchTrial {
            samples,
            rate_hz: self.rate_hz,
            transitions: self.transitions(),
            outcome: self.outcome,
            arm_id: self.arm_id,
            key: self.key.unwrap_or_else(|| fallback_key.to_string()),
        };
        trial.validate()?;
        Ok(trial)
    }
}

pub fn sidecar_path(csv_path: &Path, schema: &TrialSchema) -> PathBuf {
    csv_path.with_extension(&schema.sidecar_extension)
}

/// Loads and validates one trial.
pub fn load_trial(path: &Path, schema: &TrialSchema) -> Result<WrenchTrial, SignalError> {
    let sidecar = Sidecar::load(&sidecar_path(path, schema))?;
    let file = fs::File::open(path)?;
    let samples = read_samples(file, schema)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    sidecar.into_trial(samples, &stem)
}

/// Parses sample rows from any reader using the given schema.
pub fn read_samples<R: std::io::Read>(reader: R, schema: &TrialSchema) -> Result<Vec<WrenchSample>, SignalError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(schema.delimiter).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| SignalError::MalformedRecord { line: 1, reason: e.to_string() })?
        .clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| SignalError::MalformedRecord {
            line: 1,
            reason: format!("missing column '{name}'"),
        })
    };
    let t_col = column(&schema.time_column)?;
    let mut axis_cols = [0usize; 6];
    for (slot, name) in axis_cols.iter_mut().zip(&schema.axis_columns) {
        *slot = column(name)?;
    }

    let mut samples = Vec::new();
    let mut prev_t: Option<f64> = None;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| SignalError::MalformedRecord { line, reason: e.to_string() })?;
        let field = |col: usize| -> Result<f64, SignalError> {
            let raw = record.get(col).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| SignalError::MalformedRecord { line, reason: format!("'{raw}' is not a number") })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(SignalError::MalformedRecord { line, reason: format!("'{raw}' is not finite") })
            }
        };
        let t = field(t_col)?;
        if t < 0.0 {
            return Err(SignalError::MalformedRecord { line, reason: "negative time".into() });
        }
        let mut values = [0.0; 6];
        for (v, &col) in values.iter_mut().zip(&axis_cols) {
            *v = field(col)?;
        }
        if let Some(p) = prev_t {
            if t <= p {
                return Err(SignalError::NonMonotoneTime { index: samples.len(), prev: p, next: t });
            }
        }
        prev_t = Some(t);
        samples.push(WrenchSample::new(t, values));
    }
    Ok(samples)
}

/// Parses one canonical `t,fx,fy,fz,tx,ty,tz` data row (no header).
pub fn parse_sample_row(line: &str, line_no: usize) -> Result<WrenchSample, SignalError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 7 {
        return Err(SignalError::MalformedRecord {
            line: line_no,
            reason: format!("expected 7 fields, found {}", fields.len()),
        });
    }
    let mut v = [0.0; 7];
    for (slot, raw) in v.iter_mut().zip(&fields) {
        *slot = raw
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| SignalError::MalformedRecord { line: line_no, reason: format!("'{raw}' is not a finite number") })?;
    }
    Ok(WrenchSample::new(v[0], [v[1], v[2], v[3], v[4], v[5], v[6]]))
}

/// Writes a trial in the canonical format. Numbers use the shortest
/// representation that parses back to the identical `f64`.
pub fn write_trial(trial: &WrenchTrial, path: &Path) -> Result<(), SignalError> {
    let mut out = String::with_capacity(trial.samples.len() * 64);
    out.push_str("t,fx,fy,fz,tx,ty,tz\n");
    for s in &trial.samples {
        out.push_str(&format!("{},{},{},{},{},{},{}\n", s.t, s.fx, s.fy, s.fz, s.tx, s.ty, s.tz));
    }
    fs::write(path, out)?;
    let sidecar = Sidecar {
        rate_hz: trial.rate_hz,
        outcome: trial.outcome,
        arm_id: trial.arm_id.clone(),
        key: Some(trial.key.clone()),
        transitions: trial.transitions.iter().map(|t| (t.state.clone(), t.t_start)).collect(),
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| SignalError::Sidecar(e.to_string()))?;
    fs::write(sidecar_path(path, &TrialSchema::default()), json + "\n")?;
    Ok(())
}

/// Loads every `*.csv` trial in a directory, in file-name order.
pub fn load_corpus(dir: &Path, schema: &TrialSchema) -> Result<Vec<WrenchTrial>, SignalError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_trial(p, schema)).collect()
}
