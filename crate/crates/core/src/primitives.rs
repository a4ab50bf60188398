//! Primitive layer: straight-line fits over windows of one axis, labeled by
//! gradient band.
//!
//! Online extraction fits fixed-length windows of `W` samples. The span of
//! window `k > 0` starts at the last timestamp of window `k - 1`, so the
//! primitives of one state tile time without gaps.

use crate::signal::{segment_states, Axis, SignalError, WrenchSample, WrenchTrial};
use crate::symbols::{PrimSymbol, Symbol, TaggedLabel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrimitiveError {
    #[error("window needs at least 2 distinct timestamps, got {0} samples")]
    DegenerateWindow(usize),
    #[error("insufficient calibration data: {0}")]
    InsufficientData(String),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Least-squares line over a window of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// max - min of the fitted line over the window.
    pub amplitude: f64,
    pub mean_value: f64,
}

pub fn fit_window(times: &[f64], values: &[f64]) -> Result<LinearFit, PrimitiveError> {
    assert_eq!(times.len(), values.len(), "times and values differ in length");
    let n = times.len();
    if n < 2 {
        return Err(PrimitiveError::DegenerateWindow(n));
    }
    let nf = n as f64;
    let t_mean = times.iter().sum::<f64>() / nf;
    let v_mean = values.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&t, &v) in times.iter().zip(values) {
        let dt = t - t_mean;
        let dv = v - v_mean;
        sxx += dt * dt;
        sxy += dt * dv;
        syy += dv * dv;
    }
    if sxx <= 0.0 {
        return Err(PrimitiveError::DegenerateWindow(n));
    }
    let slope = sxy / sxx;
    let intercept = v_mean - slope * t_mean;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = times.iter().zip(values).map(|(&t, &v)| (v - (intercept + slope * t)).powi(2)).sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    let (t_first, t_last) = (times[0], times[n - 1]);
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        t_start: t_first,
        t_end: t_last,
        amplitude: slope.abs() * (t_last - t_first).abs(),
        mean_value: v_mean,
    })
}

/// Slope cut points partitioning gradient space into the nine primitive
/// bands. Negative slopes use the same magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientThresholds {
    pub eps_const: f64,
    pub cut_small: f64,
    pub cut_medium: f64,
    pub cut_large: f64,
}

impl GradientThresholds {
    pub fn new(eps_const: f64, cut_small: f64, cut_medium: f64, cut_large: f64) -> Result<Self, PrimitiveError> {
        let th = Self { eps_const, cut_small, cut_medium, cut_large };
        th.validate()?;
        Ok(th)
    }

    pub fn validate(&self) -> Result<(), PrimitiveError> {
        let v = [self.eps_const, self.cut_small, self.cut_medium, self.cut_large];
        if v.iter().all(|x| x.is_finite()) && 0.0 < v[0] && v[0] < v[1] && v[1] < v[2] && v[2] < v[3] {
            Ok(())
        } else {
            Err(PrimitiveError::InvalidThresholds(format!("{self:?}")))
        }
    }

    /// Geometric progression from `eps_const` to `cut_large`.
    pub fn geometric(eps_const: f64, cut_large: f64) -> Result<Self, PrimitiveError> {
        let q = (cut_large / eps_const).cbrt();
        Self::new(eps_const, eps_const * q, eps_const * q * q, cut_large)
    }

    /// Band of a slope. `|slope| <= eps_const` is constant; above that a
    /// value equal to a cut point joins the larger band.
    pub fn classify(&self, slope: f64) -> PrimSymbol {
        let m = slope.abs();
        if m <= self.eps_const {
            return PrimSymbol::Const;
        }
        let band = if m >= self.cut_large {
            3
        } else if m >= self.cut_medium {
            2
        } else if m >= self.cut_small {
            1
        } else {
            0
        };
        use PrimSymbol::*;
        let positive = [Spos, Mpos, Bpos, Pimp];
        let negative = [Sneg, Mneg, Bneg, Nimp];
        if slope > 0.0 {
            positive[band]
        } else {
            negative[band]
        }
    }
}

/// Thresholds for all six axes of a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisThresholds {
    pub task: String,
    pub window: usize,
    pub axes: BTreeMap<Axis, GradientThresholds>,
}

impl AxisThresholds {
    pub fn uniform(task: &str, window: usize, th: GradientThresholds) -> Self {
        Self { task: task.into(), window, axes: Axis::ALL.iter().map(|&a| (a, th)).collect() }
    }

    pub fn get(&self, axis: Axis) -> Option<&GradientThresholds> {
        self.axes.get(&axis)
    }

    pub fn validate(&self) -> Result<(), PrimitiveError> {
        for axis in Axis::ALL {
            self.get(axis)
                .ok_or_else(|| PrimitiveError::InvalidThresholds(format!("missing axis {axis}")))?
                .validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("thresholds serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, PrimitiveError> {
        let th: Self = serde_json::from_str(text).map_err(|e| PrimitiveError::InvalidThresholds(e.to_string()))?;
        th.validate()?;
        Ok(th)
    }
}

/// A classified straight-line segment of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveLabel {
    pub symbol: PrimSymbol,
    pub fit: LinearFit,
    pub axis: Axis,
    /// Label span; starts where the previous window of the state ended.
    pub t_start: f64,
    pub t_end: f64,
}

impl PrimitiveLabel {
    pub fn tagged(&self) -> TaggedLabel {
        TaggedLabel::new(Symbol::Prim(self.symbol), self.t_start, self.t_end, self.fit.amplitude, self.axis)
    }
}

pub fn classify_gradient(fit: &LinearFit, th: &GradientThresholds, axis: Axis) -> PrimitiveLabel {
    PrimitiveLabel { symbol: th.classify(fit.slope), fit: *fit, axis, t_start: fit.t_start, t_end: fit.t_end }
}

/// Linear-interpolated percentile of sorted data, `p` in `[0, 1]`.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub const CALIBRATION_LOW_PERCENTILE: f64 = 0.02;
pub const CALIBRATION_HIGH_PERCENTILE: f64 = 0.98;

/// Calibrates one axis from the fixed windows of every state of every trial.
///
/// `cut_large` is the 98th percentile of `|slope|` and `eps_const` the 2nd;
/// the two middle cuts follow the geometric progression between them.
pub fn calibrate_gradients(
    trials: &[WrenchTrial],
    axis: Axis,
    window: usize,
) -> Result<GradientThresholds, PrimitiveError> {
    if trials.is_empty() {
        return Err(PrimitiveError::InsufficientData("no calibration trials".into()));
    }
    let mut slopes = Vec::new();
    for trial in trials {
        let mut count = 0;
        for seg in segment_states(trial)? {
            for label in extract_primitives(&seg.samples, axis, window, &NEVER_CONST)? {
                slopes.push(label.fit.slope.abs());
                count += 1;
            }
        }
        if count < 4 {
            return Err(PrimitiveError::InsufficientData(format!(
                "trial '{}' yields {count} windows of {window} samples, need 4",
                trial.key
            )));
        }
    }
    slopes.sort_by(f64::total_cmp);
    let low = percentile(&slopes, CALIBRATION_LOW_PERCENTILE);
    let high = percentile(&slopes, CALIBRATION_HIGH_PERCENTILE);
    if !(low > 0.0 && high - low > 1e-9 * high) {
        return Err(PrimitiveError::InsufficientData(format!(
            "degenerate slope spread on {axis}: p2 = {low}, p98 = {high}"
        )));
    }
    GradientThresholds::geometric(low, high)
}

/// Calibrates all six axes.
pub fn calibrate_all(trials: &[WrenchTrial], task: &str, window: usize) -> Result<AxisThresholds, PrimitiveError> {
    let mut axes = BTreeMap::new();
    for axis in Axis::ALL {
        axes.insert(axis, calibrate_gradients(trials, axis, window)?);
    }
    Ok(AxisThresholds { task: task.into(), window, axes })
}

// placeholder thresholds for slope collection; the symbols are discarded
const NEVER_CONST: GradientThresholds =
    GradientThresholds { eps_const: f64::MIN_POSITIVE, cut_small: 1.0, cut_medium: 2.0, cut_large: 3.0 };

/// Default window: a quarter second of samples, at least 2.
pub fn default_window(rate_hz: f64) -> usize {
    ((0.25 * rate_hz).round() as usize).max(2)
}

/// Stateful per-axis window accumulator for online extraction.
#[derive(Debug, Clone)]
pub struct PrimitiveAccumulator {
    axis: Axis,
    window: usize,
    thresholds: GradientThresholds,
    times: Vec<f64>,
    values: Vec<f64>,
    prev_end: Option<f64>,
}

impl PrimitiveAccumulator {
    pub fn new(axis: Axis, window: usize, thresholds: GradientThresholds) -> Self {
        assert!(window >= 2, "window must hold at least 2 samples");
        Self {
            axis,
            window,
            thresholds,
            times: Vec::with_capacity(window),
            values: Vec::with_capacity(window),
            prev_end: None,
        }
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// Adds one sample; returns a label when a window completes.
    pub fn push(&mut self, t: f64, value: f64) -> Option<PrimitiveLabel> {
        self.times.push(t);
        self.values.push(value);
        if self.times.len() < self.window {
            return None;
        }
        // strictly increasing trial time guarantees distinct timestamps
        let fit = fit_window(&self.times, &self.values).expect("window has distinct timestamps");
        let mut label = classify_gradient(&fit, &self.thresholds, self.axis);
        if let Some(start) = self.prev_end {
            label.t_start = start;
        }
        self.prev_end = Some(fit.t_end);
        self.times.clear();
        self.values.clear();
        Some(label)
    }

    pub fn push_sample(&mut self, sample: &WrenchSample) -> Option<PrimitiveLabel> {
        self.push(sample.t, sample.get(self.axis))
    }

    /// Samples waiting for the current window to fill.
    pub fn pending(&self) -> usize {
        self.times.len()
    }

    /// Starts a new state: drops the trailing partial window.
    pub fn reset(&mut self) {
        self.times.clear();
        self.values.clear();
        self.prev_end = None;
    }
}

/// Whole-segment fixed-window extraction. A trailing partial window is
/// dropped, matching [`PrimitiveAccumulator`] reset at end of state.
pub fn extract_primitives(
    samples: &[WrenchSample],
    axis: Axis,
    window: usize,
    th: &GradientThresholds,
) -> Result<Vec<PrimitiveLabel>, PrimitiveError> {
    if window < 2 {
        return Err(PrimitiveError::DegenerateWindow(window));
    }
    let mut labels: Vec<PrimitiveLabel> = Vec::with_capacity(samples.len() / window);
    for chunk in samples.chunks_exact(window) {
        let times: Vec<f64> = chunk.iter().map(|s| s.t).collect();
        let values: Vec<f64> = chunk.iter().map(|s| s.get(axis)).collect();
        let fit = fit_window(&times, &values)?;
        let mut label = classify_gradient(&fit, th, axis);
        if let Some(prev) = labels.last() {
            label.t_start = prev.fit.t_end;
        }
        labels.push(label);
    }
    Ok(labels)
}

/// Offline adaptive segmentation: grows each segment while the fit's R²
/// stays at or above `r2_min`. Segments hold at least `min_samples`.
pub fn extract_adaptive(
    samples: &[WrenchSample],
    axis: Axis,
    r2_min: f64,
    min_samples: usize,
    th: &GradientThresholds,
) -> Result<Vec<PrimitiveLabel>, PrimitiveError> {
    let min_samples = min_samples.max(2);
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let values: Vec<f64> = samples.iter().map(|s| s.get(axis)).collect();
    let mut labels: Vec<PrimitiveLabel> = Vec::new();
    let mut start = 0;
    while start + min_samples <= samples.len() {
        let mut end = start + min_samples;
        let mut fit = fit_window(&times[start..end], &values[start..end])?;
        while end < samples.len() {
            let grown = fit_window(&times[start..=end], &values[start..=end])?;
            if grown.r2 < r2_min {
                break;
            }
            fit = grown;
            end += 1;
        }
        let mut label = classify_gradient(&fit, th, axis);
        if let Some(prev) = labels.last() {
            label.t_start = prev.fit.t_end;
        }
        labels.push(label);
        start = end;
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Outcome, Transition};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn th() -> GradientThresholds {
        GradientThresholds::new(0.1, 1.0, 5.0, 20.0).unwrap()
    }

    /// Normal equations solved independently of `fit_window`.
    /// Least squares on the design matrix `[1, t]` via SVD.
    fn svd_fit(t: &[f64], v: &[f64]) -> (f64, f64, f64) {
        let a = nalgebra::DMatrix::from_fn(t.len(), 2, |r, c| if c == 0 { 1.0 } else { t[r] });
        let b = nalgebra::DVector::from_column_slice(v);
        let x = a.svd(true, true).solve(&b, 1e-14).unwrap();
        let (icpt, slope) = (x[0], x[1]);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let ss_tot: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
        let ss_res: f64 = t.iter().zip(v).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
        (slope, icpt, 1.0 - ss_res / ss_tot)
    }

    #[test]
    fn exact_line() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|x| 3.0 * x + 1.0).collect();
        let fit = fit_window(&t, &v).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!((fit.amplitude - 2.7).abs() < 1e-12);
    }

    #[test]
    fn constant_window_has_unit_r2() {
        let fit = fit_window(&[0.0, 1.0, 2.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r2, 1.0);
        assert_eq!(fit.amplitude, 0.0);
    }

    #[test]
    fn degenerate_windows() {
        assert!(matches!(fit_window(&[1.0], &[1.0]), Err(PrimitiveError::DegenerateWindow(1))));
        assert!(matches!(fit_window(&[1.0, 1.0], &[1.0, 2.0]), Err(PrimitiveError::DegenerateWindow(2))));
    }

    #[test]
    fn noisy_line_matches_least_squares_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|x| 2.0 * x + rng.sample::<f64, _>(StandardNormal)).collect();
        let fit = fit_window(&t, &v).unwrap();
        let (slope, icpt, r2) = svd_fit(&t, &v);
        assert!((fit.slope - 2.0).abs() < 0.2, "slope {}", fit.slope);
        assert!((fit.slope - slope).abs() < 1e-9);
        assert!((fit.intercept - icpt).abs() < 1e-9);
        assert!((fit.r2 - r2).abs() < 1e-9);
    }

    #[test]
    fn band_boundaries() {
        let th = th();
        use PrimSymbol::*;
        assert_eq!(th.classify(0.0), Const);
        assert_eq!(th.classify(0.1), Const);
        assert_eq!(th.classify(-0.1), Const);
        assert_eq!(th.classify(0.2), Spos);
        assert_eq!(th.classify(1.0), Mpos);
        assert_eq!(th.classify(3.0), Mpos);
        assert_eq!(th.classify(5.0), Bpos);
        assert_eq!(th.classify(20.0), Pimp);
        assert_eq!(th.classify(-20.0), Nimp);
        assert_eq!(th.classify(-19.9), Bneg);
        assert_eq!(th.classify(-1.0), Mneg);
        assert_eq!(th.classify(-0.5), Sneg);
    }

    #[test]
    fn threshold_ordering_enforced() {
        assert!(GradientThresholds::new(0.0, 1.0, 2.0, 3.0).is_err());
        assert!(GradientThresholds::new(1.0, 1.0, 2.0, 3.0).is_err());
        assert!(GradientThresholds::new(0.1, 2.0, 1.0, 3.0).is_err());
        let g = GradientThresholds::geometric(0.01, 10.0).unwrap();
        assert!((g.cut_small - 0.1).abs() < 1e-12 && (g.cut_medium - 1.0).abs() < 1e-9);
    }

    #[test]
    fn accumulator_emits_per_window() {
        let mut acc = PrimitiveAccumulator::new(Axis::Fx, 10, th());
        for i in 0..9 {
            assert!(acc.push(i as f64, 0.0).is_none());
        }
        let label = acc.push(9.0, 0.0).expect("window complete");
        assert_eq!(label.symbol, PrimSymbol::Const);
        assert_eq!((label.t_start, label.t_end), (0.0, 9.0));
        let mut emitted = 1;
        for i in 10..57 {
            emitted += usize::from(acc.push(i as f64, i as f64).is_some());
        }
        assert_eq!(emitted, 57 / 10);
        assert_eq!(acc.pending(), 7);
    }

    #[test]
    fn spans_tile_within_a_state() {
        let samples: Vec<WrenchSample> = (0..35).map(|i| WrenchSample::new(i as f64 * 0.01, [i as f64; 6])).collect();
        let labels = extract_primitives(&samples, Axis::Tz, 10, &th()).unwrap();
        assert_eq!(labels.len(), 3);
        for w in labels.windows(2) {
            assert_eq!(w[0].t_end, w[1].t_start);
        }
        assert_eq!(labels[0].t_start, 0.0);
    }

    fn calibration_trial(slopes: &[f64], window: usize) -> WrenchTrial {
        let mut samples = Vec::new();
        let mut value = 0.0;
        for (k, &s) in slopes.iter().enumerate() {
            for j in 0..window {
                let t = (k * window + j) as f64 * 0.01;
                samples.push(WrenchSample::new(t, [value + s * j as f64 * 0.01; 6]));
            }
            value += s * window as f64 * 0.01;
        }
        WrenchTrial {
            samples,
            rate_hz: 100.0,
            transitions: vec![Transition::new("a", 0.0)],
            outcome: Outcome::Nominal,
            arm_id: "right".into(),
            key: "cal".into(),
        }
    }

    #[test]
    fn identical_slopes_are_degenerate() {
        let tr = calibration_trial(&[2.0, -2.0, 2.0, -2.0, 2.0], 10);
        assert!(matches!(calibrate_gradients(&[tr], Axis::Fx, 10), Err(PrimitiveError::InsufficientData(_))));
        let tr = calibration_trial(&[1.0, 2.0, 3.0], 10);
        assert!(matches!(calibrate_gradients(&[tr], Axis::Fx, 10), Err(PrimitiveError::InsufficientData(_))));
        assert!(matches!(calibrate_gradients(&[], Axis::Fx, 10), Err(PrimitiveError::InsufficientData(_))));
    }

    #[test]
    fn uniform_slopes_calibrate_to_percentiles() {
        let g = 50.0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials: Vec<WrenchTrial> = (0..20)
            .map(|_| {
                let slopes: Vec<f64> = (0..100)
                    .map(|_| {
                        let s: f64 = rng.random_range(0.0..g);
                        if rng.random_bool(0.5) { s } else { -s }
                    })
                    .collect();
                calibration_trial(&slopes, 10)
            })
            .collect();
        // oracle: percentiles of the generated population computed directly
        let mut population: Vec<f64> = trials
            .iter()
            .flat_map(|tr| {
                tr.samples.chunks(10).map(|c| ((c[9].fx - c[0].fx) / (c[9].t - c[0].t)).abs()).collect::<Vec<_>>()
            })
            .collect();
        population.sort_by(f64::total_cmp);
        let n = population.len() as f64;
        let rank = |p: f64| {
            let pos = p * (n - 1.0);
            let lo = pos.floor() as usize;
            population[lo] + (population[lo + 1] - population[lo]) * (pos - lo as f64)
        };
        let cal = calibrate_gradients(&trials, Axis::Fy, 10).unwrap();
        assert!((cal.cut_large - rank(0.98)).abs() < 1e-9 * g);
        assert!((cal.eps_const - rank(0.02)).abs() < 1e-9 * g);
        assert!((cal.cut_large - 0.98 * g).abs() < 0.02 * g);
        assert!((cal.eps_const - 0.02 * g).abs() < 0.01 * g);
        cal.validate().unwrap();
    }

    #[test]
    fn adaptive_segmentation_splits_at_corners() {
        let samples: Vec<WrenchSample> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.01;
                let v = if i < 100 { 10.0 * t } else { 10.0 - 10.0 * (t - 1.0) };
                WrenchSample::new(t, [v; 6])
            })
            .collect();
        let labels = extract_adaptive(&samples, Axis::Fx, 0.7, 5, &th()).unwrap();
        assert!(labels.len() >= 2 && labels.len() <= 3, "{}", labels.len());
        assert_eq!(labels[0].symbol, PrimSymbol::Bpos);
        assert_eq!(labels.last().unwrap().symbol, PrimSymbol::Bneg);
    }

    proptest! {
        #[test]
        fn classification_is_total_and_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0) {
            let th = th();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let band = |s: f64| match th.classify(s) {
                PrimSymbol::Const => 0, PrimSymbol::Spos => 1, PrimSymbol::Mpos => 2,
                PrimSymbol::Bpos => 3, PrimSymbol::Pimp => 4, other => panic!("{other} for positive slope"),
            };
            prop_assert!(band(lo) <= band(hi));
            prop_assert_eq!(th.classify(-hi).negated(), th.classify(hi));
        }

        #[test]
        fn fit_matches_closed_form(values in proptest::collection::vec(-1e3f64..1e3, 3..60), dt in 1e-3f64..1.0) {
            let t: Vec<f64> = (0..values.len()).map(|i| 5.0 + i as f64 * dt).collect();
            let fit = fit_window(&t, &values).unwrap();
            let (slope, icpt, r2) = svd_fit(&t, &values);
            let span = t[t.len() - 1] - t[0];
            let vmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let tol = 1e-8 * (1.0 + slope.abs() + vmax / span);
            prop_assert!((fit.slope - slope).abs() <= tol, "{} vs {}", fit.slope, slope);
            prop_assert!((fit.intercept - icpt).abs() <= 1e-8 * (1.0 + icpt.abs()) + 6.0 * tol);
            if r2.is_finite() {
                prop_assert!((fit.r2 - r2.clamp(0.0, 1.0)).abs() <= 1e-6);
            }
        }

        #[test]
        fn streaming_equals_batch(values in proptest::collection::vec(-50f64..50.0, 0..120), w in 2usize..12) {
            let samples: Vec<WrenchSample> =
                values.iter().enumerate().map(|(i, &v)| WrenchSample::new(i as f64 * 0.01, [v; 6])).collect();
            let batch = extract_primitives(&samples, Axis::Fz, w, &th()).unwrap();
            let mut acc = PrimitiveAccumulator::new(Axis::Fz, w, th());
            let streamed: Vec<PrimitiveLabel> = samples.iter().filter_map(|s| acc.push_sample(s)).collect();
            prop_assert_eq!(streamed.len(), samples.len() / w);
            prop_assert_eq!(streamed, batch);
        }
    }
}
