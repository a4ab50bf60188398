//! Online introspection: sample the evolving grammar at a fixed rate,
//! classify it, and summarize how early and how confidently each
//! (sub)task is recognized.
//!
//! Ticks of a (sub)task fall at `T0 + i / rate` from its first sample up
//! to the first sample of the next one; each tick sees every sample at or
//! before its time. A tick is correct when its most probable class is the
//! ground truth of the (sub)task at that moment.

use crate::features::{FeatureError, Regime, StateGrammar};
use crate::pipeline::{OnlineEncoder, PipelineError, TrainedModel};
use crate::signal::{state_index_at, WrenchSample, WrenchTrial};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use thiserror::Error;

/// Tick rates used for online evaluation.
pub const RATES_HZ: [f64; 3] = [2.0, 10.0, 100.0];

/// How `b_i` is judged, recorded alongside every report.
pub const CORRECTNESS_BASIS: &str = "per-tick: top class against the ground-truth state at the tick";

/// Confidence thresholds `0.70, 0.75, …, 0.95`.
pub const THRESHOLDS: [f64; 6] = [0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("trace has no snapshots")]
    EmptyTrace,
    #[error("no trials to evaluate")]
    EmptyCorpus,
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("threshold k must lie in [0.5, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("tick rate must be positive, got {0}")]
    InvalidRate(f64),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] crate::classifier::ClassifierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Inadmissible,
    Uncertain,
    Certain,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Inadmissible => "inadmissible",
            Verdict::Uncertain => "uncertain",
            Verdict::Certain => "certain",
        })
    }
}

/// Verdict for the top class probability `p`.
pub fn verdict_for(p: f64, k: f64) -> Verdict {
    if p < 0.5 {
        Verdict::Inadmissible
    } else if p <= k {
        Verdict::Uncertain
    } else {
        Verdict::Certain
    }
}

pub fn verdict(probs: &[f64], k: f64) -> Verdict {
    verdict_for(probs.iter().copied().fold(f64::NEG_INFINITY, f64::max), k)
}

pub fn check_threshold(k: f64) -> Result<(), MonitorError> {
    if (0.5..1.0).contains(&k) {
        Ok(())
    } else {
        Err(MonitorError::InvalidThreshold(k))
    }
}

/// Index of the largest probability; the lowest index on ties.
fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceSnapshot {
    pub t: f64,
    pub predicted: String,
    pub truth: String,
    pub probs: Vec<f64>,
    pub verdict: Verdict,
    pub correct: bool,
}

impl InferenceSnapshot {
    pub fn top_probability(&self) -> f64 {
        self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn certain_and_correct(&self, k: f64) -> bool {
        self.correct && verdict_for(self.top_probability(), k) == Verdict::Certain
    }
}

/// Ticks of one (sub)task and its decision once complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceTrace {
    pub key: String,
    pub class: String,
    pub snapshots: Vec<InferenceSnapshot>,
    pub final_prediction: String,
    pub final_correct: bool,
}

impl InferenceTrace {
    /// Task length `L` in ticks.
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// `C`: certain-and-correct ticks over the whole (sub)task.
    pub fn certain_correct(&self, k: f64) -> usize {
        self.snapshots.iter().filter(|s| s.certain_and_correct(k)).count()
    }
}

/// `Σ P_i b_i / n` with `P_i` the top probability and `b_i` correctness.
pub fn overall_probability(snapshots: &[InferenceSnapshot]) -> Result<f64, MonitorError> {
    if snapshots.is_empty() {
        return Err(MonitorError::EmptyTrace);
    }
    let total: f64 = snapshots.iter().filter(|s| s.correct).map(|s| s.top_probability()).sum();
    Ok(total / snapshots.len() as f64)
}

/// `m = C / (L / 3)`.
pub fn metric_m_from_counts(c: f64, l: f64) -> Result<f64, MonitorError> {
    if l <= 0.0 {
        return Err(MonitorError::EmptyTrace);
    }
    Ok(c / (l / 3.0))
}

pub fn metric_m(trace: &InferenceTrace, k: f64) -> Result<f64, MonitorError> {
    metric_m_from_counts(trace.certain_correct(k) as f64, trace.len() as f64)
}

/// Checks that a model can drive online evaluation.
pub fn check_model(model: &TrainedModel) -> Result<(), MonitorError> {
    let issues = model.compatibility_issues();
    if !issues.is_empty() {
        return Err(MonitorError::ModelMismatch(issues.join("; ")));
    }
    if !model.ensemble.has_probability() {
        return Err(MonitorError::ModelMismatch("model has no probability calibration".into()));
    }
    let n = model.layout.len();
    let dims = model.ensemble.machines.iter().flat_map(|m| m.model.support_vectors.iter()).map(Vec::len);
    if let Some(d) = dims.clone().find(|&d| d != n) {
        return Err(MonitorError::ModelMismatch(format!("support vectors have {d} features, layout has {n}")));
    }
    Ok(())
}

/// Groups trials by key with arms ordered as in the model's layout.
pub fn group_for_model<'a>(trials: &'a [WrenchTrial], model: &TrainedModel) -> Result<Vec<Vec<&'a WrenchTrial>>, MonitorError> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&WrenchTrial>> = BTreeMap::new();
    for t in trials {
        let g = groups.entry(&t.key).or_default();
        if g.is_empty() {
            order.push(&t.key);
        }
        g.push(t);
    }
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let mut g = groups.remove(key).expect("recorded");
        g.sort_by(|a, b| a.arm_id.cmp(&b.arm_id));
        let arms: Vec<&str> = g.iter().map(|t| t.arm_id.as_str()).collect();
        if arms != model.layout.arms.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(MonitorError::ModelMismatch(format!(
                "trial '{key}' has arms {arms:?}, model expects {:?}",
                model.layout.arms
            )));
        }
        out.push(g);
    }
    Ok(out)
}

/// Classifies the current grammar of a group of arm encoders.
struct Sampler<'m> {
    model: &'m TrainedModel,
    k: f64,
    cache: Option<(u64, Vec<f64>)>,
}

impl<'m> Sampler<'m> {
    fn features(&self, encoders: &[OnlineEncoder]) -> Result<Vec<u16>, MonitorError> {
        let layout = &self.model.layout;
        Ok(match layout.regime {
            Regime::NominalState => {
                let mut grammars = Vec::with_capacity(encoders.len());
                for enc in encoders {
                    grammars.push(match enc.current_grammar()? {
                        Some(g) => g,
                        None => StateGrammar::empty("", 0.0, false),
                    });
                }
                let arms: Vec<(&str, &StateGrammar)> =
                    layout.arms.iter().map(String::as_str).zip(grammars.iter()).collect();
                layout.encode_state(&arms)?
            }
            Regime::Abnormality => {
                let snaps = encoders.iter().map(|e| e.snapshot()).collect::<Result<Vec<_>, _>>()?;
                layout.encode_trial(&snaps.iter().collect::<Vec<_>>())?
            }
        })
    }

    fn probabilities(&self, row: &[u16]) -> Result<Vec<f64>, MonitorError> {
        let x: Vec<f64> = row.iter().map(|&c| f64::from(c)).collect();
        Ok(self.model.ensemble.predict_proba(&x)?)
    }

    fn tick(&mut self, t: f64, encoders: &[OnlineEncoder], truth: &str) -> Result<InferenceSnapshot, MonitorError> {
        let version: u64 = encoders.iter().map(|e| e.version()).sum();
        let probs = match &self.cache {
            Some((v, p)) if *v == version => p.clone(),
            _ => {
                let p = self.probabilities(&self.features(encoders)?)?;
                self.cache = Some((version, p.clone()));
                p
            }
        };
        let predicted = self.model.ensemble.classes[argmax(&probs)].clone();
        Ok(InferenceSnapshot {
            t,
            correct: predicted == truth,
            verdict: verdict(&probs, self.k),
            predicted,
            truth: truth.to_string(),
            probs,
        })
    }

    /// Decision on a finished (sub)task from its complete encoding.
    fn decide(&self, row: &[u16]) -> Result<String, MonitorError> {
        let probs = self.probabilities(row)?;
        Ok(self.model.ensemble.classes[argmax(&probs)].clone())
    }
}

struct OpenTask {
    class: String,
    next_tick: u64,
    t0: f64,
    snapshots: Vec<InferenceSnapshot>,
}

/// Replays one trial group (arms sorted as in the layout) sample by sample.
pub fn replay_group(group: &[&WrenchTrial], model: &TrainedModel, rate_hz: f64, k: f64) -> Result<Vec<InferenceTrace>, MonitorError> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(MonitorError::InvalidRate(rate_hz));
    }
    check_threshold(k)?;
    let regime = model.layout.regime;
    let mut encoders =
        group.iter().map(|t| OnlineEncoder::for_trial(&model.config, t)).collect::<Result<Vec<_>, _>>()?;
    let reference = &group[0];
    let key = reference.key.clone();
    let mut sampler = Sampler { model, k, cache: None };

    let mut stream: Vec<(f64, usize, &WrenchSample)> =
        group.iter().enumerate().flat_map(|(a, t)| t.samples.iter().map(move |s| (s.t, a, s))).collect();
    stream.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let truth_of = |state: usize| match regime {
        Regime::NominalState => reference.transitions[state].state.clone(),
        Regime::Abnormality => reference.outcome.name().to_string(),
    };
    let task_of = |t: f64| match regime {
        Regime::NominalState => state_index_at(&reference.transitions, t).unwrap_or(0),
        Regime::Abnormality => 0,
    };

    let mut finished: Vec<(usize, OpenTask)> = Vec::new();
    let mut open: Option<(usize, OpenTask)> = None;

    fn emit_until(
        task: &mut OpenTask,
        limit: f64,
        inclusive: bool,
        rate: f64,
        sampler: &mut Sampler,
        encoders: &[OnlineEncoder],
    ) -> Result<(), MonitorError> {
        loop {
            let tau = task.t0 + task.next_tick as f64 / rate;
            if tau > limit || (!inclusive && tau >= limit) {
                return Ok(());
            }
            task.snapshots.push(sampler.tick(tau, encoders, &task.class)?);
            task.next_tick += 1;
        }
    }

    for &(t, arm, sample) in &stream {
        let task = task_of(t);
        if let Some((_, cur)) = &mut open {
            emit_until(cur, t, false, rate_hz, &mut sampler, &encoders)?;
        }
        if open.as_ref().is_none_or(|(idx, _)| *idx != task) {
            finished.extend(open.take());
            open = Some((task, OpenTask { class: truth_of(task), next_tick: 0, t0: t, snapshots: Vec::new() }));
        }
        encoders[arm].push(sample)?;
    }

    let last_t = stream.last().map_or(0.0, |s| s.0);
    if let Some((_, cur)) = &mut open {
        emit_until(cur, last_t, true, rate_hz, &mut sampler, &encoders)?;
    }
    finished.extend(open.take());
    for e in &mut encoders {
        e.finish()?;
    }
    // final decisions use the complete encodings
    finished.into_iter().map(|(idx, task)| close_task(&key, idx, task, &encoders, &sampler, regime)).collect()
}

fn close_task(
    key: &str,
    state_idx: usize,
    task: OpenTask,
    encoders: &[OnlineEncoder],
    sampler: &Sampler,
    regime: Regime,
) -> Result<InferenceTrace, MonitorError> {
    let layout = &sampler.model.layout;
    let row = match regime {
        Regime::NominalState => {
            let mut grammars = Vec::with_capacity(encoders.len());
            for enc in encoders {
                let g = enc.completed().get(state_idx).cloned();
                grammars.push(g.unwrap_or_else(|| StateGrammar::empty("", 0.0, true)));
            }
            let arms: Vec<(&str, &StateGrammar)> = layout.arms.iter().map(String::as_str).zip(grammars.iter()).collect();
            layout.encode_state(&arms)?
        }
        Regime::Abnormality => {
            let snaps = encoders.iter().map(|e| e.snapshot()).collect::<Result<Vec<_>, _>>()?;
            layout.encode_trial(&snaps.iter().collect::<Vec<_>>())?
        }
    };
    let final_prediction = sampler.decide(&row)?;
    Ok(InferenceTrace {
        key: key.to_string(),
        final_correct: final_prediction == task.class,
        class: task.class,
        snapshots: task.snapshots,
        final_prediction,
    })
}

/// Replays every trial (grouped by key) of a corpus. In the per-state
/// regime only nominal trials are replayed.
pub fn replay_corpus(trials: &[WrenchTrial], model: &TrainedModel, rate_hz: f64, k: f64) -> Result<Vec<InferenceTrace>, MonitorError> {
    check_model(model)?;
    let groups = group_for_model(trials, model)?;
    let groups: Vec<_> = groups
        .into_iter()
        .filter(|g| model.layout.regime == Regime::Abnormality || g[0].outcome == crate::signal::Outcome::Nominal)
        .collect();
    if groups.is_empty() {
        return Err(MonitorError::EmptyCorpus);
    }
    let per_group =
        groups.par_iter().map(|g| replay_group(g, model, rate_hz, k)).collect::<Result<Vec<_>, MonitorError>>()?;
    Ok(per_group.into_iter().flatten().collect())
}

/// One report row per (threshold, class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    #[serde(rename = "Type")]
    pub kind: String,
    #[serde(rename = "Thresh")]
    pub k: f64,
    #[serde(rename = "Class")]
    pub class: String,
    #[serde(rename = "Acc")]
    pub accuracy: f64,
    #[serde(rename = "OverallPr")]
    pub overall_prob: f64,
    #[serde(rename = "ClassPr")]
    pub class_prob: f64,
    #[serde(rename = "minC")]
    pub c_min: f64,
    #[serde(rename = "meanC")]
    pub c_mean: f64,
    #[serde(rename = "maxC")]
    pub c_max: f64,
    #[serde(rename = "AvgLen")]
    pub avg_len: f64,
    #[serde(rename = "minM")]
    pub m_min: f64,
    #[serde(rename = "meanM")]
    pub m_mean: f64,
    #[serde(rename = "maxM")]
    pub m_max: f64,
}

fn min_mean_max(v: &[f64]) -> (f64, f64, f64) {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, v.iter().sum::<f64>() / v.len() as f64, max)
}

/// Summarizes traces per class for each threshold. Classes appear in
/// order of first occurrence.
pub fn summarize(traces: &[InferenceTrace], kind: &str, thresholds: &[f64]) -> Result<Vec<ConfidenceReport>, MonitorError> {
    if traces.is_empty() {
        return Err(MonitorError::EmptyCorpus);
    }
    let all: Vec<InferenceSnapshot> = traces.iter().flat_map(|t| t.snapshots.iter().cloned()).collect();
    let overall = overall_probability(&all)?;
    let mut classes: Vec<&str> = Vec::new();
    for t in traces {
        if !classes.contains(&t.class.as_str()) {
            classes.push(&t.class);
        }
    }
    let mut rows = Vec::new();
    for &k in thresholds {
        check_threshold(k)?;
        for &class in &classes {
            let of_class: Vec<&InferenceTrace> = traces.iter().filter(|t| t.class == class).collect();
            let snaps: Vec<InferenceSnapshot> = of_class.iter().flat_map(|t| t.snapshots.iter().cloned()).collect();
            let cs: Vec<f64> = of_class.iter().map(|t| t.certain_correct(k) as f64).collect();
            let ms = of_class.iter().map(|t| metric_m(t, k)).collect::<Result<Vec<f64>, _>>()?;
            let (c_min, c_mean, c_max) = min_mean_max(&cs);
            let (m_min, m_mean, m_max) = min_mean_max(&ms);
            rows.push(ConfidenceReport {
                kind: kind.to_string(),
                k,
                class: class.to_string(),
                accuracy: of_class.iter().filter(|t| t.final_correct).count() as f64 / of_class.len() as f64,
                overall_prob: overall,
                class_prob: overall_probability(&snaps)?,
                c_min,
                c_mean,
                c_max,
                avg_len: of_class.iter().map(|t| t.len() as f64).sum::<f64>() / of_class.len() as f64,
                m_min,
                m_mean,
                m_max,
            });
        }
    }
    Ok(rows)
}

/// Replays a corpus at `rate_hz` and reports each threshold.
pub fn evaluate_online(
    trials: &[WrenchTrial],
    model: &TrainedModel,
    rate_hz: f64,
    thresholds: &[f64],
) -> Result<(Vec<InferenceTrace>, Vec<ConfidenceReport>), MonitorError> {
    let k0 = thresholds.first().copied().unwrap_or(THRESHOLDS[0]);
    let traces = replay_corpus(trials, model, rate_hz, k0)?;
    let rows = summarize(&traces, &model.layout.regime.to_string(), thresholds)?;
    Ok((traces, rows))
}

pub fn write_report_csv<W: Write>(rows: &[ConfidenceReport], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["Type", "Thresh", "Class", "Acc", "OverallPr", "ClassPr", "minC", "meanC", "maxC", "AvgLen", "minM", "meanM", "maxM"])?;
    for r in rows {
        let f2 = |v: f64| match format!("{v:.2}") {
            s if s == "-0.00" => "0.00".to_string(),
            s => s,
        };
        w.write_record([
            r.kind.clone(),
            r.k.to_string(),
            r.class.clone(),
            f2(r.accuracy),
            f2(r.overall_prob),
            f2(r.class_prob),
            f2(r.c_min),
            f2(r.c_mean),
            f2(r.c_max),
            f2(r.avg_len),
            f2(r.m_min),
            f2(r.m_mean),
            f2(r.m_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}
