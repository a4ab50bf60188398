//! Wiring of the layers: samples → primitives → filter → MC → filter →
//! LLB → filter, either over a whole recorded trial or one sample at a
//! time.
//!
//! Each axis is an independent chain. At every state transition the chain
//! flushes, so sentences never straddle states. While a state is running
//! the primitive pipe holds its reduced labels; the upper layers of the
//! current state are derived from that provisional view on demand.

use crate::behaviors::behave_sequence;
use crate::classifier::{CvReport, SvmEnsemble};
use crate::compositions::{compose_sequence, CompositionError};
use crate::features::{FeatureError, FeatureLayout, StateGrammar, TrialGrammar};
use crate::filterpipe::{filter_labels, FilterError, FilterPipe, DEFAULT_MERGE_RATIO};
use crate::primitives::{extract_adaptive, extract_primitives, AxisThresholds, PrimitiveAccumulator, PrimitiveError};
use crate::signal::{segment_states, state_index_at, Axis, Outcome, SignalError, Transition, WrenchSample, WrenchTrial};
use crate::symbols::{Layer, Symbol, TaggedLabel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("encoder already finished")]
    Finished,
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How primitives are segmented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Segmentation {
    /// Fixed windows of `window` samples; the online scheme.
    #[default]
    FixedWindow,
    /// Segments grown while R² stays at or above `r2_min`. Offline only.
    Adaptive { r2_min: f64 },
}

pub const DEFAULT_R2_MIN: f64 = 0.70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub window: usize,
    pub merge_ratio: f64,
    pub thresholds: AxisThresholds,
    #[serde(default)]
    pub segmentation: Segmentation,
    /// Monitoring tick rate.
    pub rate_hz: f64,
}

impl PipelineConfig {
    pub fn new(thresholds: AxisThresholds) -> Self {
        Self {
            window: thresholds.window,
            merge_ratio: DEFAULT_MERGE_RATIO,
            thresholds,
            segmentation: Segmentation::FixedWindow,
            rate_hz: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.window < 2 {
            return Err(PipelineError::Config(format!("window must be >= 2, got {}", self.window)));
        }
        if !(self.merge_ratio.is_finite() && self.merge_ratio > 1.0) {
            return Err(PipelineError::Config(format!("merge ratio must be > 1, got {}", self.merge_ratio)));
        }
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(PipelineError::Config(format!("rate must be > 0, got {}", self.rate_hz)));
        }
        if let Segmentation::Adaptive { r2_min } = self.segmentation {
            if !(0.0..=1.0).contains(&r2_min) {
                return Err(PipelineError::Config(format!("r2_min must lie in [0, 1], got {r2_min}")));
            }
        }
        self.thresholds.validate()?;
        Ok(())
    }
}

/// Filters the primitives of one axis and state and builds the upper
/// layers from them, filtering each in turn.
pub fn build_layers(prims: &[TaggedLabel], merge_ratio: f64) -> Result<[Vec<TaggedLabel>; 3], PipelineError> {
    let prims = filter_labels(prims, merge_ratio)?;
    upper_layers(prims, merge_ratio)
}

fn upper_layers(prims: Vec<TaggedLabel>, merge_ratio: f64) -> Result<[Vec<TaggedLabel>; 3], PipelineError> {
    let mcs: Vec<TaggedLabel> = compose_sequence(&prims)?.iter().map(|m| m.tagged()).collect();
    let mcs = filter_labels(&mcs, merge_ratio)?;
    let llbs: Vec<TaggedLabel> = behave_sequence(&mcs)?.iter().map(|b| b.tagged()).collect();
    let llbs = filter_labels(&llbs, merge_ratio)?;
    Ok([prims, mcs, llbs])
}

fn transpose(per_axis: Vec<[Vec<TaggedLabel>; 3]>) -> [[Vec<TaggedLabel>; 6]; 3] {
    let mut out: [[Vec<TaggedLabel>; 6]; 3] = Default::default();
    for (a, layers) in per_axis.into_iter().enumerate() {
        for (l, labels) in layers.into_iter().enumerate() {
            out[l][a] = labels;
        }
    }
    out
}

/// Encodes a whole recorded trial.
pub fn run_offline(trial: &WrenchTrial, config: &PipelineConfig) -> Result<TrialGrammar, PipelineError> {
    config.validate()?;
    trial.validate()?;
    let mut states = Vec::new();
    for seg in segment_states(trial)? {
        let mut per_axis = Vec::with_capacity(6);
        for axis in Axis::ALL {
            let th = config.thresholds.get(axis).expect("validated");
            let prims = match config.segmentation {
                Segmentation::FixedWindow => extract_primitives(&seg.samples, axis, config.window, th)?,
                Segmentation::Adaptive { r2_min } => extract_adaptive(&seg.samples, axis, r2_min, config.window, th)?,
            };
            let tagged: Vec<TaggedLabel> = prims.iter().map(|p| p.tagged()).collect();
            per_axis.push(build_layers(&tagged, config.merge_ratio)?);
        }
        states.push(StateGrammar {
            state: seg.state.clone(),
            t_start: seg.t_start(),
            t_end: seg.t_end(),
            complete: true,
            sentences: transpose(per_axis),
        });
    }
    Ok(TrialGrammar { key: trial.key.clone(), arm_id: trial.arm_id.clone(), outcome: trial.outcome, complete: true, states })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// A primitive as its window completes, before filtering.
    Raw,
    /// A filtered label of a finished state.
    Final,
}

/// One emitted label. `t` is the source time at emission: the window end
/// for raw primitives, the last sample of the state for final labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub t: f64,
    pub state: String,
    pub kind: EventKind,
    #[serde(flatten)]
    pub label: TaggedLabel,
}

struct AxisChain {
    acc: PrimitiveAccumulator,
    pipe: FilterPipe,
}

struct CurrentState {
    index: usize,
    t_start: f64,
    t_last: f64,
}

/// Sample-by-sample encoder of one arm of one trial.
pub struct OnlineEncoder {
    merge_ratio: f64,
    key: String,
    arm_id: String,
    outcome: Outcome,
    transitions: Vec<Transition>,
    chains: Vec<AxisChain>,
    done: Vec<StateGrammar>,
    current: Option<CurrentState>,
    version: u64,
    finished: bool,
}

impl OnlineEncoder {
    pub fn new(
        config: &PipelineConfig,
        key: &str,
        arm_id: &str,
        outcome: Outcome,
        transitions: Vec<Transition>,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        if config.segmentation != Segmentation::FixedWindow {
            return Err(PipelineError::Config("online encoding requires fixed-window segmentation".into()));
        }
        if transitions.is_empty() {
            return Err(SignalError::MissingTransitions.into());
        }
        if transitions.windows(2).any(|w| w[1].t_start < w[0].t_start) {
            return Err(SignalError::InvalidTransitions("transitions are not time-ordered".into()).into());
        }
        let chains = Axis::ALL
            .iter()
            .map(|&axis| {
                let th = *config.thresholds.get(axis).expect("validated");
                Ok(AxisChain {
                    acc: PrimitiveAccumulator::new(axis, config.window, th),
                    pipe: FilterPipe::new(Layer::Prim, axis, config.merge_ratio)?,
                })
            })
            .collect::<Result<Vec<_>, FilterError>>()?;
        Ok(Self {
            merge_ratio: config.merge_ratio,
            key: key.into(),
            arm_id: arm_id.into(),
            outcome,
            transitions,
            chains,
            done: Vec::new(),
            current: None,
            version: 0,
            finished: false,
        })
    }

    pub fn for_trial(config: &PipelineConfig, trial: &WrenchTrial) -> Result<Self, PipelineError> {
        Self::new(config, &trial.key, &trial.arm_id, trial.outcome, trial.transitions.clone())
    }

    /// Changes whenever the grammar snapshot may have changed.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Index and start time of the running state.
    pub fn current_state(&self) -> Option<(usize, f64)> {
        self.current.as_ref().map(|c| (c.index, c.t_start))
    }

    /// Completed state grammars so far.
    pub fn completed(&self) -> &[StateGrammar] {
        &self.done
    }

    pub fn push(&mut self, sample: &WrenchSample) -> Result<Vec<LabelEvent>, PipelineError> {
        if self.finished {
            return Err(PipelineError::Finished);
        }
        if !sample.is_finite() {
            return Err(SignalError::MalformedRecord { line: 0, reason: format!("non-finite sample at t = {}", sample.t) }.into());
        }
        let idx = state_index_at(&self.transitions, sample.t).expect("transitions non-empty");
        let mut events = Vec::new();
        match &self.current {
            Some(c) if sample.t <= c.t_last => {
                return Err(SignalError::NonMonotoneTime { index: 0, prev: c.t_last, next: sample.t }.into());
            }
            Some(c) if idx != c.index => {
                if idx != c.index + 1 {
                    return Err(SignalError::EmptySegment(self.transitions[c.index + 1].state.clone()).into());
                }
                events.extend(self.close_state()?);
                self.current = Some(CurrentState { index: idx, t_start: sample.t, t_last: sample.t });
            }
            Some(_) => {}
            None => {
                if idx != 0 || !self.done.is_empty() {
                    return Err(SignalError::EmptySegment(self.transitions[0].state.clone()).into());
                }
                self.current = Some(CurrentState { index: 0, t_start: sample.t, t_last: sample.t });
            }
        }
        let cur = self.current.as_mut().expect("set above");
        cur.t_last = sample.t;
        let state = &self.transitions[cur.index].state;
        for chain in &mut self.chains {
            if let Some(p) = chain.acc.push_sample(sample) {
                let label = p.tagged();
                chain.pipe.push(label)?;
                events.push(LabelEvent { t: label.t_end, state: state.clone(), kind: EventKind::Raw, label });
                self.version += 1;
            }
        }
        Ok(events)
    }

    fn close_state(&mut self) -> Result<Vec<LabelEvent>, PipelineError> {
        let cur = self.current.take().expect("a state is running");
        let state = self.transitions[cur.index].state.clone();
        let mut per_axis = Vec::with_capacity(6);
        let mut events = Vec::new();
        for chain in &mut self.chains {
            chain.acc.reset();
            let layers = upper_layers(chain.pipe.flush(), self.merge_ratio)?;
            for labels in &layers {
                events.extend(labels.iter().map(|&label| LabelEvent { t: cur.t_last, state: state.clone(), kind: EventKind::Final, label }));
            }
            per_axis.push(layers);
        }
        self.done.push(StateGrammar { state, t_start: cur.t_start, t_end: cur.t_last, complete: true, sentences: transpose(per_axis) });
        self.version += 1;
        Ok(events)
    }

    /// Flushes the last state. Every declared state must have received samples.
    pub fn finish(&mut self) -> Result<Vec<LabelEvent>, PipelineError> {
        if self.finished {
            return Err(PipelineError::Finished);
        }
        let Some(cur) = &self.current else {
            return Err(SignalError::EmptySegment(self.transitions[0].state.clone()).into());
        };
        if cur.index + 1 < self.transitions.len() {
            return Err(SignalError::EmptySegment(self.transitions[cur.index + 1].state.clone()).into());
        }
        let events = self.close_state()?;
        self.finished = true;
        Ok(events)
    }

    /// Provisional grammar of the running state.
    pub fn current_grammar(&self) -> Result<Option<StateGrammar>, PipelineError> {
        let Some(cur) = &self.current else { return Ok(None) };
        let mut per_axis = Vec::with_capacity(6);
        for chain in &self.chains {
            per_axis.push(upper_layers(chain.pipe.pending().to_vec(), self.merge_ratio)?);
        }
        Ok(Some(StateGrammar {
            state: self.transitions[cur.index].state.clone(),
            t_start: cur.t_start,
            t_end: cur.t_last,
            complete: false,
            sentences: transpose(per_axis),
        }))
    }

    /// Completed states plus the provisional running state.
    pub fn snapshot(&self) -> Result<TrialGrammar, PipelineError> {
        let mut states = self.done.clone();
        states.extend(self.current_grammar()?);
        Ok(TrialGrammar {
            key: self.key.clone(),
            arm_id: self.arm_id.clone(),
            outcome: self.outcome,
            complete: self.finished,
            states,
        })
    }
}

/// Result of streaming a trial through an [`OnlineEncoder`].
#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub events: Vec<LabelEvent>,
    pub grammar: TrialGrammar,
}

/// Streams the samples of a trial one at a time.
pub fn run_online(trial: &WrenchTrial, config: &PipelineConfig) -> Result<OnlineRun, PipelineError> {
    let mut enc = OnlineEncoder::for_trial(config, trial)?;
    let mut events = Vec::new();
    for s in &trial.samples {
        events.extend(enc.push(s)?);
    }
    events.extend(enc.finish()?);
    Ok(OnlineRun { events, grammar: enc.snapshot()? })
}

/// Alphabets in ordinal order, stored with models to detect mismatches.
pub fn alphabets() -> BTreeMap<String, Vec<String>> {
    Layer::ALL.iter().map(|l| (l.name().to_string(), l.alphabet().iter().map(|s| s.name().to_string()).collect())).collect()
}

pub const MODEL_FORMAT: &str = "rcbht-model/1";

/// A trained classifier together with everything needed to encode input
/// the way it was encoded for training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub alphabets: BTreeMap<String, Vec<String>>,
    pub config: PipelineConfig,
    pub layout: FeatureLayout,
    pub ensemble: SvmEnsemble,
    pub cv: Option<CvReport>,
}

impl TrainedModel {
    pub fn new(config: PipelineConfig, layout: FeatureLayout, ensemble: SvmEnsemble, cv: Option<CvReport>) -> Self {
        Self { format: MODEL_FORMAT.into(), alphabets: alphabets(), config, layout, ensemble, cv }
    }

    /// Reasons this model cannot be used by this build, if any.
    pub fn compatibility_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.format != MODEL_FORMAT {
            issues.push(format!("model format '{}' (expected '{MODEL_FORMAT}')", self.format));
        }
        if self.alphabets != alphabets() {
            issues.push("symbol alphabets differ from this build".into());
        }
        issues
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| PipelineError::Model(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Model(format!("{}: {e}", path.display())))
    }
}

/// One row per trial, one block per axis, one cell per symbol of the
/// chosen layer (states concatenated).
#[derive(Debug, Clone, PartialEq)]
pub struct GrammarMap {
    pub layer: Layer,
    pub keys: Vec<String>,
    pub rows: Vec<[Vec<Symbol>; 6]>,
}

pub fn render_grammar_map(grammars: &[TrialGrammar], layer: Layer) -> GrammarMap {
    let mut keys = Vec::with_capacity(grammars.len());
    let mut rows = Vec::with_capacity(grammars.len());
    for g in grammars {
        let mut row: [Vec<Symbol>; 6] = Default::default();
        for axis in Axis::ALL {
            row[axis.index()] = g.states.iter().flat_map(|s| s.symbols(layer, axis)).collect();
        }
        keys.push(format!("{}/{}", g.key, g.arm_id));
        rows.push(row);
    }
    GrammarMap { layer, keys, rows }
}

/// RGB color per ordinal, cycling for the larger alphabet.
const PALETTE: [[u8; 3]; 9] = [
    [228, 26, 28],
    [55, 126, 184],
    [77, 175, 74],
    [152, 78, 163],
    [255, 127, 0],
    [255, 255, 51],
    [166, 86, 40],
    [247, 129, 191],
    [153, 153, 153],
];

impl GrammarMap {
    pub fn block_widths(&self) -> [usize; 6] {
        let mut w = [0; 6];
        for row in &self.rows {
            for (a, cells) in row.iter().enumerate() {
                w[a] = w[a].max(cells.len());
            }
        }
        w
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Glyph grid; blocks separated by `|`, short rows padded with spaces.
    pub fn to_text(&self) -> String {
        let widths = self.block_widths();
        let key_w = self.keys.iter().map(String::len).max().unwrap_or(0);
        let mut out = String::new();
        if self.rows.is_empty() {
            return out;
        }
        let _ = write!(out, "{:key_w$} ", "");
        for axis in Axis::ALL {
            let w = widths[axis.index()].max(2);
            let _ = write!(out, "|{:<w$}", axis.name());
        }
        out.push_str("|\n");
        for (key, row) in self.keys.iter().zip(&self.rows) {
            let _ = write!(out, "{key:key_w$} ");
            for (a, cells) in row.iter().enumerate() {
                let w = widths[a].max(2);
                let text: String = cells.iter().map(|s| s.glyph()).collect();
                let _ = write!(out, "|{text:<w$}");
            }
            out.push_str("|\n");
        }
        out
    }

    /// Binary PPM image, `scale` pixels per cell, gray gaps between blocks.
    pub fn to_ppm(&self, scale: usize) -> Vec<u8> {
        let scale = scale.max(1);
        let widths = self.block_widths();
        let gap = 1;
        let cols: usize = widths.iter().sum::<usize>() + gap * 5;
        let (w, h) = ((cols * scale).max(1), (self.rows.len() * scale).max(1));
        let mut pixels = vec![255u8; w * h * 3];
        for (r, row) in self.rows.iter().enumerate() {
            let mut x0 = 0;
            for (a, cells) in row.iter().enumerate() {
                for (c, sym) in cells.iter().enumerate() {
                    let color = PALETTE[(usize::from(sym.ordinal()) - 1) % PALETTE.len()];
                    for dy in 0..scale {
                        for dx in 0..scale {
                            let px = ((r * scale + dy) * w + (x0 + c) * scale + dx) * 3;
                            pixels[px..px + 3].copy_from_slice(&color);
                        }
                    }
                }
                x0 += widths[a] + gap;
            }
        }
        let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
        out.extend(pixels);
        out
    }
}
