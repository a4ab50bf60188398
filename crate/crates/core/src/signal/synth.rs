//! Synthetic wrench trials built from piecewise-linear profiles.
//!
//! Generation is a pure function of the `SynthSpec` and the seed. The noiseless
//! profile is returned alongside the trial so tests can compare encoder
//! output against known slopes.

use super::{Outcome, SignalError, Transition, WrenchSample, WrenchTrial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// A stretch of constant slope on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSegment {
    pub state: String,
    pub duration: f64,
    /// Slope per axis in units per second, `fx..tz` order.
    pub slopes: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rate_hz: f64,
    pub noise_std: f64,
    pub initial: [f64; 6],
    pub segments: Vec<ProfileSegment>,
    pub outcome: Outcome,
    pub arm_id: String,
    pub key: String,
}

/// Ground truth of one profile segment as sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSegment {
    pub state: String,
    pub first_sample: usize,
    pub sample_count: usize,
    pub slopes: [f64; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrial {
    pub trial: WrenchTrial,
    pub truth: Vec<TruthSegment>,
}

pub fn generate_synthetic_trial(spec: &SynthSpec, seed: u64) -> Result<SyntheticTrial, SignalError> {
    if spec.segments.is_empty() {
        return Err(SignalError::EmptySpec);
    }
    if !(spec.rate_hz.is_finite() && spec.rate_hz > 0.0) {
        return Err(SignalError::InvalidSpec(format!("rate_hz {}", spec.rate_hz)));
    }
    if !(spec.noise_std.is_finite() && spec.noise_std >= 0.0) {
        return Err(SignalError::InvalidSpec(format!("noise_std {}", spec.noise_std)));
    }
    for seg in &spec.segments {
        if !(seg.duration.is_finite() && seg.duration > 0.0) || seg.slopes.iter().any(|s| !s.is_finite()) {
            return Err(SignalError::InvalidSpec(format!("segment of state '{}'", seg.state)));
        }
    }

    let dt = 1.0 / spec.rate_hz;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| SignalError::InvalidSpec(e.to_string()))?;

    let mut samples = Vec::new();
    let mut transitions: Vec<Transition> = Vec::new();
    let mut truth = Vec::with_capacity(spec.segments.len());
    let mut anchor = spec.initial;
    for seg in &spec.segments {
        let count = ((seg.duration * spec.rate_hz).round() as usize).max(1);
        let first = samples.len();
        let t0 = first as f64 * dt;
        if transitions.last().is_none_or(|tr| tr.state != seg.state) {
            transitions.push(Transition::new(seg.state.clone(), t0));
        }
        for k in 0..count {
            let t = (first + k) as f64 * dt;
            let mut values = [0.0; 6];
            for (axis, v) in values.iter_mut().enumerate() {
                let clean = anchor[axis] + seg.slopes[axis] * (t - t0);
                *v = if spec.noise_std > 0.0 { clean + noise.sample(&mut rng) } else { clean };
            }
            samples.push(WrenchSample::new(t, values));
        }
        let t_next = (first + count) as f64 * dt;
        for (axis, a) in anchor.iter_mut().enumerate() {
            *a += seg.slopes[axis] * (t_next - t0);
        }
        truth.push(TruthSegment { state: seg.state.clone(), first_sample: first, sample_count: count, slopes: seg.slopes });
    }

    let trial = WrenchTrial {
        samples,
        rate_hz: spec.rate_hz,
        transitions,
        outcome: spec.outcome,
        arm_id: spec.arm_id.clone(),
        key: spec.key.clone(),
    };
    trial.validate()?;
    Ok(SyntheticTrial { trial, truth })
}

/// The four sub-tasks of a nominal snap assembly, in execution order.
pub const SNAP_STATES: [&str; 4] = ["approach", "rotation", "insertion", "mating"];

/// Parameters for a synthetic snap-assembly corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapCorpusParams {
    pub nominal_trials: usize,
    pub abnormal_trials: usize,
    pub rate_hz: f64,
    pub noise_std: f64,
    pub seed: u64,
    pub two_arm: bool,
}

impl Default for SnapCorpusParams {
    fn default() -> Self {
        Self { nominal_trials: 10, abnormal_trials: 0, rate_hz: 200.0, noise_std: 0.05, seed: 0, two_arm: false }
    }
}

// (duration s, slopes fx fy fz tx ty tz)
type Piece = (f64, [f64; 6]);

fn nominal_pieces(state: &str) -> &'static [Piece] {
    match state {
        "approach" => &[
            (1.5, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            (0.25, [6.0, 0.0, 40.0, 0.0, 1.0, 0.0]),
            (0.25, [-2.0, 0.0, -8.0, 0.0, 0.0, 0.0]),
        ],
        "rotation" => &[
            (0.5, [0.0, 1.0, 0.0, 3.0, -1.5, 0.0]),
            (0.5, [0.0, -1.0, 0.0, -3.0, 1.5, 0.0]),
            (0.5, [0.0, 0.0, 0.0, 2.0, 0.0, 0.5]),
        ],
        "insertion" => &[
            (1.0, [0.0, 3.0, 30.0, 0.0, 0.0, 0.0]),
            (0.25, [0.0, -6.0, -110.0, 0.0, 0.0, 0.0]),
            (0.25, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        ],
        "mating" => &[(1.5, [0.0, 0.0, -2.0, 0.0, 0.0, 0.0]), (1.0, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0])],
        _ => &[],
    }
}

fn abnormal_pieces(state: &str, mode: usize) -> Vec<Piece> {
    match (mode, state) {
        // misplaced part: early lateral contact during the approach
        (0, "approach") => vec![
            (1.0, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            (0.25, [-30.0, 0.0, 12.0, 0.0, -6.0, 0.0]),
            (0.75, [4.0, 0.0, -2.0, 0.0, 1.0, 0.0]),
        ],
        (0, "rotation") => vec![(0.75, [0.0, 0.0, 0.0, -4.0, 3.0, 0.0]), (0.75, [0.0, 0.0, 0.0, -1.0, 1.0, 0.0])],
        // jamming during the insertion: force keeps building, no snap
        (1, "insertion") => vec![
            (1.0, [0.0, 6.0, 45.0, 2.0, -2.0, 0.0]),
            (0.5, [0.0, 4.0, 20.0, 3.0, -3.0, 0.0]),
        ],
        (1, "mating") => vec![(1.0, [0.0, -5.0, -30.0, -4.0, 4.0, 0.0]), (1.5, [0.0, 0.0, -4.0, 0.0, 0.0, 0.0])],
        _ => nominal_pieces(state).to_vec(),
    }
}

fn jitter_pieces(pieces: &[Piece], state: &str, rng: &mut ChaCha8Rng) -> Vec<ProfileSegment> {
    pieces
        .iter()
        .map(|(duration, slopes)| ProfileSegment {
            state: state.to_string(),
            duration: duration * rng.random_range(0.85..1.15),
            slopes: slopes.map(|s| s * rng.random_range(0.8..1.2)),
        })
        .collect()
}

/// Builds the profile of one snap-assembly trial. `abnormal_mode` selects
/// a failure pattern; `None` produces a nominal trial.
pub fn snap_trial_spec(
    key: &str,
    arm_id: &str,
    abnormal_mode: Option<usize>,
    params: &SnapCorpusParams,
    rng: &mut ChaCha8Rng,
) -> SynthSpec {
    let mut segments = Vec::new();
    for state in SNAP_STATES {
        let pieces = match abnormal_mode {
            Some(mode) => abnormal_pieces(state, mode % 2),
            None => nominal_pieces(state).to_vec(),
        };
        segments.extend(jitter_pieces(&pieces, state, rng));
    }
    // the reactive arm of a two-arm assembly sees a damped, mirrored wrench
    if arm_id == "left" {
        for seg in &mut segments {
            seg.slopes = seg.slopes.map(|s| -0.6 * s);
        }
    }
    let initial = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0), 0.0, 0.0, 0.0];
    SynthSpec {
        rate_hz: params.rate_hz,
        noise_std: params.noise_std,
        initial,
        segments,
        outcome: if abnormal_mode.is_some() { Outcome::Abnormal } else { Outcome::Nominal },
        arm_id: arm_id.to_string(),
        key: key.to_string(),
    }
}

/// Generates a seeded snap-assembly corpus: nominal trials first, then
/// abnormal ones. Two-arm corpora yield a left and a right trial per key.
pub fn generate_snap_corpus(params: &SnapCorpusParams) -> Result<Vec<WrenchTrial>, SignalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let arms: &[&str] = if params.two_arm { &["left", "right"] } else { &["right"] };
    let total = params.nominal_trials + params.abnormal_trials;
    let mut trials = Vec::with_capacity(total * arms.len());
    for i in 0..total {
        let abnormal = (i >= params.nominal_trials).then(|| i - params.nominal_trials);
        let key = match abnormal {
            None => format!("nominal_{i:03}"),
            Some(j) => format!("abnormal_{j:03}"),
        };
        let trial_seed: u64 = rng.random();
        for arm in arms {
            // both arms share the same jitter so their phases line up
            let mut trial_rng = ChaCha8Rng::seed_from_u64(trial_seed);
            let spec = snap_trial_spec(&key, arm, abnormal, params, &mut trial_rng);
            let noise_seed = trial_seed ^ if *arm == "left" { 0x5bd1_e995 } else { 0 };
            trials.push(generate_synthetic_trial(&spec, noise_seed)?.trial);
        }
    }
    Ok(trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(segments: Vec<ProfileSegment>, noise: f64) -> SynthSpec {
        SynthSpec {
            rate_hz: 100.0,
            noise_std: noise,
            initial: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            segments,
            outcome: Outcome::Nominal,
            arm_id: "right".into(),
            key: "s".into(),
        }
    }

    fn seg(state: &str, duration: f64, slope: f64) -> ProfileSegment {
        ProfileSegment { state: state.into(), duration, slopes: [slope; 6] }
    }

    #[test]
    fn zero_slope_zero_noise_is_flat() {
        let out = generate_synthetic_trial(&spec(vec![seg("a", 1.0, 0.0)], 0.0), 1).unwrap();
        assert_eq!(out.trial.samples.len(), 100);
        for s in &out.trial.samples {
            assert_eq!(s.values(), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let sp = spec(vec![seg("a", 1.0, 2.0), seg("b", 0.5, -1.0)], 0.3);
        let a = generate_synthetic_trial(&sp, 42).unwrap();
        let b = generate_synthetic_trial(&sp, 42).unwrap();
        let c = generate_synthetic_trial(&sp, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trial.samples, c.trial.samples);
        assert_eq!(a.trial.transitions.len(), 2);
        assert_eq!(a.trial.transitions[1].t_start, 1.0);
    }

    #[test]
    fn two_segment_truth_has_opposite_signs() {
        let out = generate_synthetic_trial(&spec(vec![seg("a", 1.0, 3.0), seg("a", 1.0, -3.0)], 0.0), 0).unwrap();
        assert_eq!(out.truth.len(), 2);
        assert!(out.truth[0].slopes[0] > 0.0 && out.truth[1].slopes[0] < 0.0);
        assert_eq!(out.trial.transitions.len(), 1);
        // continuous at the corner, exactly linear inside each segment
        let s = &out.trial.samples;
        assert!((s[100].fx - (1.0 + 3.0)).abs() < 1e-12);
        assert!((s[150].fx - (4.0 - 1.5)).abs() < 1e-12);
    }

    #[test]
    fn empty_and_invalid_specs() {
        assert!(matches!(generate_synthetic_trial(&spec(vec![], 0.0), 0), Err(SignalError::EmptySpec)));
        assert!(matches!(
            generate_synthetic_trial(&spec(vec![seg("a", f64::NAN, 0.0)], 0.0), 0),
            Err(SignalError::InvalidSpec(_))
        ));
    }

    #[test]
    fn snap_corpus_shapes() {
        let params = SnapCorpusParams { nominal_trials: 3, abnormal_trials: 2, two_arm: true, ..Default::default() };
        let trials = generate_snap_corpus(&params).unwrap();
        assert_eq!(trials.len(), 10);
        assert_eq!(trials[0].key, trials[1].key);
        assert_eq!(trials[0].arm_id, "left");
        assert_eq!(trials[0].samples.len(), trials[1].samples.len());
        assert!(trials.iter().all(|t| t.transitions.len() == 4));
        assert_eq!(trials.iter().filter(|t| t.outcome == Outcome::Abnormal).count(), 4);
        assert_eq!(generate_snap_corpus(&params).unwrap(), trials);
    }
}
