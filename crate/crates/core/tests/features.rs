use proptest::prelude::*;
use rcbht::features::{build_features, encode_sentence, FeatureLayout, FeatureMatrix, Regime, PAD_CODE};
use rcbht::pipeline::{run_offline, PipelineConfig};
use rcbht::primitives::{calibrate_all, default_window};
use rcbht::signal::{generate_snap_corpus, Axis, SnapCorpusParams, WrenchTrial, SNAP_STATES};
use rcbht::symbols::{Layer, Symbol};

fn layer_symbols(layer: Layer) -> impl Strategy<Value = Vec<Symbol>> {
    let alphabet = layer.alphabet();
    prop::collection::vec(prop::sample::select(alphabet), 0..12)
}

proptest! {
    #[test]
    fn padding_matches_a_hand_rolled_encoder(
        symbols in layer_symbols(Layer::Mc),
        width in 1usize..16,
        complete in any::<bool>(),
    ) {
        let got = encode_sentence(&symbols, Layer::Mc, width, complete).unwrap();
        let mut want: Vec<u16> = Vec::new();
        for i in 0..width {
            let code = match symbols.get(i) {
                Some(s) => s.ordinal(),
                None if !complete => PAD_CODE,
                None => symbols.last().map_or(Layer::Mc.neutral().ordinal(), |s| s.ordinal()),
            };
            want.push(code);
        }
        prop_assert_eq!(got, want);
    }
}

fn grammars(params: &SnapCorpusParams) -> (Vec<WrenchTrial>, Vec<rcbht::features::TrialGrammar>) {
    let trials = generate_snap_corpus(params).unwrap();
    let config = PipelineConfig::new(calibrate_all(&trials, "snap", default_window(params.rate_hz)).unwrap());
    let g = trials.iter().map(|t| run_offline(t, &config).unwrap()).collect();
    (trials, g)
}

#[test]
fn row_counts_follow_the_regime() {
    let params = SnapCorpusParams { nominal_trials: 5, abnormal_trials: 3, ..Default::default() };
    let (_, g) = grammars(&params);
    let states = build_features(&g, Regime::NominalState).unwrap();
    assert_eq!(states.len(), 5 * SNAP_STATES.len());
    assert_eq!(states.classes(), {
        let mut c: Vec<String> = SNAP_STATES.iter().map(|s| s.to_string()).collect();
        c.sort();
        c
    });
    let outcomes = build_features(&g, Regime::Abnormality).unwrap();
    assert_eq!(outcomes.len(), 8);
    assert_eq!(outcomes.labels.iter().filter(|l| *l == "abnormal").count(), 3);
    assert!(outcomes.n_features() > states.n_features());
}

#[test]
fn two_arm_rows_concatenate_the_arms() {
    let params = SnapCorpusParams { nominal_trials: 4, two_arm: true, ..Default::default() };
    let (_, g) = grammars(&params);
    let both = build_features(&g, Regime::NominalState).unwrap();
    assert_eq!(both.len(), 4 * SNAP_STATES.len());
    let left: Vec<_> = g.iter().filter(|t| t.arm_id == "left").cloned().collect();
    let right: Vec<_> = g.iter().filter(|t| t.arm_id == "right").cloned().collect();
    let l = build_features(&left, Regime::NominalState).unwrap();
    let r = build_features(&right, Regime::NominalState).unwrap();
    assert_eq!(both.n_features(), l.n_features() + r.n_features());
    for i in 0..both.len() {
        let mut joined = l.rows[i].clone();
        joined.extend(&r.rows[i]);
        assert_eq!(both.rows[i], joined);
    }
}

#[test]
fn decode_inverts_encode() {
    let params = SnapCorpusParams { nominal_trials: 3, abnormal_trials: 2, ..Default::default() };
    let (_, g) = grammars(&params);
    for regime in [Regime::NominalState, Regime::Abnormality] {
        let fm = build_features(&g, regime).unwrap();
        for row in &fm.rows {
            let decoded = fm.layout.decode(row).unwrap();
            let mut back: Vec<u16> = Vec::new();
            for s in &decoded {
                back.extend(s.symbols.iter().map(|x| x.map_or(PAD_CODE, |s| s.ordinal())));
            }
            assert_eq!(&back, row);
        }
    }
}

#[test]
fn state_rows_hold_the_state_sentences() {
    let params = SnapCorpusParams { nominal_trials: 2, ..Default::default() };
    let (_, g) = grammars(&params);
    let fm = build_features(&g, Regime::NominalState).unwrap();
    let decoded = fm.layout.decode(&fm.rows[1]).unwrap();
    let st = &g[0].states[1];
    for d in decoded {
        let want = st.symbols(d.layer, d.axis);
        let got: Vec<Symbol> = d.symbols.iter().map(|s| s.unwrap()).collect();
        assert_eq!(&got[..want.len().min(got.len())], &want[..want.len().min(got.len())]);
    }
}

#[test]
fn csv_round_trip() {
    let params = SnapCorpusParams { nominal_trials: 3, abnormal_trials: 3, ..Default::default() };
    let (_, g) = grammars(&params);
    let dir = tempfile::tempdir().unwrap();
    for regime in [Regime::NominalState, Regime::Abnormality] {
        let fm = build_features(&g, regime).unwrap();
        let path = dir.path().join(format!("{regime}.csv"));
        fm.write_csv(&path).unwrap();
        let back = FeatureMatrix::read_csv(&path, regime).unwrap();
        assert_eq!(back.rows, fm.rows);
        assert_eq!(back.labels, fm.labels);
        assert_eq!(back.keys, fm.keys);
        assert_eq!(back.layout, fm.layout);
    }
}

#[test]
fn layout_rejects_wrong_row_length() {
    let params = SnapCorpusParams { nominal_trials: 2, ..Default::default() };
    let (_, g) = grammars(&params);
    let layout = FeatureLayout::fit(&g, Regime::NominalState).unwrap();
    assert!(layout.decode(&vec![1; layout.len() + 1]).is_err());
    let columns = layout.columns();
    assert_eq!(columns.len(), layout.len());
    assert_eq!(columns[0].axis, Axis::Fx);
    assert_eq!(columns[0].layer, Layer::Prim);
}
