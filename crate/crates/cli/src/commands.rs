use crate::config::{self, FileConfig};
use crate::exit::CliError;
use crate::{
    CalibrateArgs, Cli, Command, EncodeArgs, EncodingFlags, EvaluateArgs, MapFormat, MonitorArgs, ReportArgs,
    SegmentationArg, SynthArgs, TrainArgs,
};
use anyhow::{Context, Result};
use rcbht::classifier::cv::DEFAULT_FOLDS;
use rcbht::classifier::{c_grid, cross_validate, train_multiclass, TrainOptions};
use rcbht::features::{build_features, FeatureLayout, FeatureMatrix, Regime};
use rcbht::filterpipe::DEFAULT_MERGE_RATIO;
use rcbht::monitor::{check_model, replay_corpus, summarize, write_report_csv, InferenceTrace, CORRECTNESS_BASIS, THRESHOLDS};
use rcbht::pipeline::{run_offline, render_grammar_map, OnlineEncoder, PipelineConfig, Segmentation, TrainedModel};
use rcbht::primitives::{calibrate_all, default_window, AxisThresholds};
use rcbht::signal::{
    generate_snap_corpus, load_corpus, load_trial, parse_sample_row, write_trial, Sidecar, SnapCorpusParams,
    TrialSchema, WrenchTrial,
};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

const DEFAULT_RATE_HZ: f64 = 10.0;
const DEFAULT_K: f64 = 0.7;
const DEFAULT_C_POWERS: &str = "-5..4";
const DEFAULT_TASK: &str = "snap";
const FEATURES_FORMAT: &str = "rcbht-features/1";

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Calibrate(a) => calibrate(a, &file),
        Command::Encode(a) => encode(a, &file),
        Command::Train(a) => train(a, &file),
        Command::Evaluate(a) => evaluate(a, &file),
        Command::Monitor(a) => monitor(a, &file),
        Command::Report(a) => report(a, &file),
        Command::Synth(a) => synth(a, &file),
    }
}

fn load_trials(dir: &Path) -> Result<Vec<WrenchTrial>> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("corpus directory {} does not exist", dir.display())).into());
    }
    let trials = load_corpus(dir, &TrialSchema::default()).with_context(|| format!("loading {}", dir.display()))?;
    if trials.is_empty() {
        return Err(CliError::InsufficientData(format!("no trials in {}", dir.display())).into());
    }
    Ok(trials)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(bytes).context("writing standard output"),
    }
}

fn read_thresholds(path: &Path) -> Result<AxisThresholds> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(AxisThresholds::from_json(&text).with_context(|| format!("thresholds {}", path.display()))?)
}

fn pipeline_config(th: AxisThresholds, flags: &EncodingFlags, file: &FileConfig) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::new(th);
    if let Some(w) = flags.window.or(file.window) {
        config.window = config::check_window(w)?;
    }
    config.merge_ratio = config::check_merge_ratio(flags.merge_ratio.or(file.merge_ratio).unwrap_or(DEFAULT_MERGE_RATIO))?;
    config.rate_hz = config::check_rate(file.rate.unwrap_or(DEFAULT_RATE_HZ))?;
    Ok(config)
}

fn load_model(path: &Path) -> Result<TrainedModel> {
    let model = TrainedModel::load(path).with_context(|| format!("loading model {}", path.display()))?;
    check_model(&model).with_context(|| format!("model {}", path.display()))?;
    Ok(model)
}

fn calibrate(a: CalibrateArgs, file: &FileConfig) -> Result<()> {
    let trials = load_trials(&a.corpus)?;
    let window = match a.window.or(file.window) {
        Some(w) => config::check_window(w)?,
        None => default_window(trials[0].rate_hz),
    };
    let task = a.task.or_else(|| file.task.clone()).unwrap_or_else(|| DEFAULT_TASK.into());
    let th = calibrate_all(&trials, &task, window)?;
    write_output(Some(&a.out), th.to_json().as_bytes())?;
    eprintln!("calibrated {} trials, window {window}", trials.len());
    Ok(())
}

/// Written next to a features CSV so `train` can rebuild the pipeline.
#[derive(Debug, Serialize, Deserialize)]
struct FeatureMeta {
    format: String,
    regime: Regime,
    config: PipelineConfig,
    layout: FeatureLayout,
}

fn meta_path(features: &Path) -> PathBuf {
    features.with_extension("meta.json")
}

fn encode(a: EncodeArgs, file: &FileConfig) -> Result<()> {
    let trials = load_trials(&a.corpus)?;
    let mut config = pipeline_config(read_thresholds(&a.thresholds)?, &a.encoding, file)?;
    if a.segmentation == SegmentationArg::Adaptive {
        if !(0.0..=1.0).contains(&a.r2_min) {
            return Err(CliError::Usage(format!("r2-min must lie in [0, 1], got {}", a.r2_min)).into());
        }
        config.segmentation = Segmentation::Adaptive { r2_min: a.r2_min };
    }
    let grammars =
        trials.iter().map(|t| run_offline(t, &config).with_context(|| format!("encoding {}", t.key))).collect::<Result<Vec<_>>>()?;
    let fm = build_features(&grammars, a.regime)?;
    if fm.is_empty() {
        return Err(CliError::InsufficientData(format!("no {} samples in the corpus", a.regime)).into());
    }
    fm.write_csv(&a.out)?;
    let meta = FeatureMeta { format: FEATURES_FORMAT.into(), regime: a.regime, config, layout: fm.layout.clone() };
    fs::write(meta_path(&a.out), serde_json::to_string_pretty(&meta)? + "\n")?;
    eprintln!("{} samples x {} features ({})", fm.len(), fm.n_features(), a.regime);
    Ok(())
}

fn read_meta(features: &Path) -> Result<FeatureMeta> {
    let path = meta_path(features);
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Malformed(format!("feature metadata {}: {e}", path.display())))?;
    let meta: FeatureMeta =
        serde_json::from_str(&text).map_err(|e| CliError::Malformed(format!("feature metadata {}: {e}", path.display())))?;
    if meta.format != FEATURES_FORMAT {
        return Err(CliError::Malformed(format!("unknown feature format '{}'", meta.format)).into());
    }
    Ok(meta)
}

fn train(a: TrainArgs, file: &FileConfig) -> Result<()> {
    let meta = read_meta(&a.features)?;
    if let Some(r) = a.regime {
        if r != meta.regime {
            return Err(CliError::Usage(format!("features are {}, --regime asks for {r}", meta.regime)).into());
        }
    }
    let fm = FeatureMatrix::read_csv(&a.features, meta.regime).with_context(|| format!("reading {}", a.features.display()))?;
    if fm.layout != meta.layout {
        return Err(CliError::Malformed("features header does not match its metadata".into()).into());
    }
    let kernels = config::parse_kernels(a.kernel.as_deref().or(file.kernel.as_deref()).unwrap_or("all")).map_err(CliError::Usage)?;
    let (lo, hi) =
        config::parse_powers(a.c_powers.as_deref().or(file.c_powers.as_deref()).unwrap_or(DEFAULT_C_POWERS)).map_err(CliError::Usage)?;
    let folds = a.folds.or(file.folds).unwrap_or(DEFAULT_FOLDS);
    let seed = a.seed.or(file.seed).unwrap_or(0);

    let x = fm.to_f64();
    let cv = cross_validate(&x, &fm.labels, folds, &kernels, &c_grid(lo..=hi), seed)?;
    let best = cv.best_cell().clone();
    let opts = TrainOptions { seed, ..TrainOptions::new(best.kernel, best.c) };
    let ensemble = train_multiclass(&x, &fm.labels, &opts)?;

    let report_path = a.report.unwrap_or_else(|| a.out.with_extension("cv.csv"));
    let mut buf = Vec::new();
    cv.write_csv(&mut buf)?;
    fs::write(&report_path, buf).with_context(|| format!("writing {}", report_path.display()))?;
    TrainedModel::new(meta.config, fm.layout, ensemble, Some(cv)).save(&a.out)?;
    eprintln!("best: {} C={:e} mean accuracy {:.4} over {folds} folds", best.kernel.kind, best.c, best.mean);
    Ok(())
}

fn write_traces(path: &Path, traces: &[InferenceTrace]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for t in traces {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Report settings go to `<report>.meta.json` when the report is a file,
/// and to standard error either way.
fn write_report_meta(report: Option<&Path>, rate: f64, thresholds: &[f64], traces: usize) -> Result<()> {
    eprintln!("correctness {CORRECTNESS_BASIS}");
    if let Some(path) = report {
        let meta = serde_json::json!({
            "rate_hz": rate,
            "thresholds": thresholds,
            "traces": traces,
            "correctness": CORRECTNESS_BASIS,
        });
        let path = path.with_extension("meta.json");
        fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn resolve_rate(flag: Option<f64>, file: &FileConfig) -> Result<f64> {
    Ok(config::check_rate(flag.or(file.rate).unwrap_or(DEFAULT_RATE_HZ))?)
}

fn evaluate(a: EvaluateArgs, file: &FileConfig) -> Result<()> {
    let model = load_model(&a.model)?;
    let trials = load_trials(&a.corpus)?;
    let rate = resolve_rate(a.rate, file)?;
    let thresholds: Vec<f64> = if !a.k.is_empty() {
        a.k.clone()
    } else if let Some(k) = file.k {
        vec![config::check_k(k)?]
    } else {
        THRESHOLDS.to_vec()
    };
    let traces = replay_corpus(&trials, &model, rate, thresholds[0])?;
    let kind = a.kind.unwrap_or_else(|| model.layout.regime.to_string());
    let rows = summarize(&traces, &kind, &thresholds)?;
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf)?;
    write_output(a.out.as_deref(), &buf)?;
    write_report_meta(a.out.as_deref(), rate, &thresholds, traces.len())?;
    if let Some(log) = &a.log {
        write_traces(log, &traces)?;
    }
    let correct = traces.iter().filter(|t| t.final_correct).count();
    eprintln!("{} traces at {rate} Hz, final decisions {correct}/{} correct", traces.len(), traces.len());
    Ok(())
}

/// Reads canonical rows from standard input, feeding a single-arm encoder
/// as they arrive so label events stream out live.
fn read_stdin_trial(sidecar_path: &Path, model: &TrainedModel, events: Option<&Path>) -> Result<WrenchTrial> {
    let sidecar = Sidecar::load(sidecar_path)?;
    if model.layout.arms.len() != 1 || model.layout.arms[0] != sidecar.arm_id {
        return Err(CliError::ModelMismatch(format!(
            "standard input carries arm '{}', model expects {:?}",
            sidecar.arm_id, model.layout.arms
        ))
        .into());
    }
    let key = sidecar.key.clone().unwrap_or_else(|| "stdin".into());
    let mut enc = OnlineEncoder::new(&model.config, &key, &sidecar.arm_id, sidecar.outcome, sidecar.transitions())?;
    let mut sink: Option<BufWriter<fs::File>> = match events {
        Some(p) => Some(BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => None,
    };
    let mut emit = |evs: Vec<rcbht::pipeline::LabelEvent>| -> Result<()> {
        if let Some(w) = sink.as_mut() {
            for e in evs {
                serde_json::to_writer(&mut *w, &e)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        Ok(())
    };

    let mut samples = Vec::new();
    for (i, line) in io::stdin().lock().lines().enumerate() {
        let line = line.context("reading standard input")?;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let sample = parse_sample_row(line, i + 1)?;
        if let Some(prev) = samples.last() {
            let prev: &rcbht::signal::WrenchSample = prev;
            if sample.t <= prev.t {
                return Err(CliError::Malformed(format!("line {}: time {} does not increase", i + 1, sample.t)).into());
            }
        }
        emit(enc.push(&sample)?)?;
        samples.push(sample);
    }
    emit(enc.finish()?)?;
    if samples.is_empty() {
        return Err(CliError::InsufficientData("no samples on standard input".into()).into());
    }
    Ok(sidecar.into_trial(samples, &key)?)
}

fn monitor(a: MonitorArgs, file: &FileConfig) -> Result<()> {
    let model = load_model(&a.model)?;
    let rate = resolve_rate(a.rate, file)?;
    let k = match a.k {
        Some(k) => k,
        None => config::check_k(file.k.unwrap_or(DEFAULT_K))?,
    };
    let trial = match (&a.trial, &a.sidecar) {
        (Some(path), _) => {
            let trial = load_trial(path, &TrialSchema::default()).with_context(|| format!("loading {}", path.display()))?;
            if let Some(p) = &a.events {
                let run = rcbht::pipeline::run_online(&trial, &model.config)?;
                let mut w = BufWriter::new(fs::File::create(p)?);
                for e in &run.events {
                    serde_json::to_writer(&mut w, e)?;
                    w.write_all(b"\n")?;
                }
                w.flush()?;
            }
            trial
        }
        (None, Some(sidecar)) => read_stdin_trial(sidecar, &model, a.events.as_deref())?,
        (None, None) => return Err(CliError::Usage("give --trial, or --sidecar with rows on standard input".into()).into()),
    };

    let traces = replay_corpus(std::slice::from_ref(&trial), &model, rate, k)?;
    if traces.is_empty() {
        return Err(CliError::InsufficientData(format!(
            "trial '{}' has nothing to classify under the {} model",
            trial.key, model.layout.regime
        ))
        .into());
    }
    let rows = summarize(&traces, &model.layout.regime.to_string(), &[k])?;
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf)?;
    write_output(a.report.as_deref(), &buf)?;
    write_report_meta(a.report.as_deref(), rate, &[k], traces.len())?;
    if let Some(log) = &a.log {
        let mut w = BufWriter::new(fs::File::create(log)?);
        for t in &traces {
            for s in &t.snapshots {
                serde_json::to_writer(&mut w, &serde_json::json!({ "key": t.key, "class": t.class, "snapshot": s }))?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
    }
    for t in &traces {
        eprintln!("{} {}: final {} ({} ticks)", t.key, t.class, t.final_prediction, t.len());
    }
    Ok(())
}

fn report(a: ReportArgs, file: &FileConfig) -> Result<()> {
    let trials = load_trials(&a.corpus)?;
    let config = match (&a.thresholds, &a.model) {
        (Some(th), _) => pipeline_config(read_thresholds(th)?, &a.encoding, file)?,
        (None, Some(m)) => load_model(m)?.config,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let grammars =
        trials.iter().map(|t| run_offline(t, &config).with_context(|| format!("encoding {}", t.key))).collect::<Result<Vec<_>>>()?;
    let map = render_grammar_map(&grammars, a.layer);
    let bytes = match a.format {
        MapFormat::Text => map.to_text().into_bytes(),
        MapFormat::Ppm => {
            if a.scale == 0 {
                return Err(CliError::Usage("scale must be at least 1".into()).into());
            }
            map.to_ppm(a.scale)
        }
    };
    write_output(a.out.as_deref(), &bytes)
}

fn synth(a: SynthArgs, file: &FileConfig) -> Result<()> {
    if a.nominal + a.abnormal == 0 {
        return Err(CliError::Usage("ask for at least one trial".into()).into());
    }
    let params = SnapCorpusParams {
        nominal_trials: a.nominal,
        abnormal_trials: a.abnormal,
        rate_hz: a.sample_rate,
        noise_std: a.noise,
        seed: a.seed.or(file.seed).unwrap_or(0),
        two_arm: a.two_arm,
    };
    let trials = generate_snap_corpus(&params)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for t in &trials {
        let name = if a.two_arm { format!("{}_{}.csv", t.key, t.arm_id) } else { format!("{}.csv", t.key) };
        write_trial(t, &a.out.join(name))?;
    }
    eprintln!("wrote {} trials to {}", trials.len(), a.out.display());
    Ok(())
}
