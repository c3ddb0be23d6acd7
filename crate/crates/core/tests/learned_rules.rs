use std::ops::Range;

use nntts::corpus::{generate_synthetic_corpus, PhoneSet, Rulebook, Utterance};
use nntts::duration::{train_duration_model, DurationModel, DurationNetConfig, LabelledSegments};
use nntts::encoding::{Encoder, EncodingConfig};
use nntts::netgraph::{build_graph, tap_saliency, train, Activation, Sequence, SparseVec, TopologySpec, TrainingSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAPS: usize = 11;
const TAP_WIDTH: usize = 4;
const CENTRE: usize = TAPS / 2;

#[allow(clippy::single_range_in_vec_init)]
fn tap_ranges() -> Vec<Vec<Range<usize>>> {
    (0..TAPS).map(|t| vec![t * TAP_WIDTH..(t + 1) * TAP_WIDTH]).collect()
}

// target depends on the centre tap only
fn centre_rule(x: &[f64]) -> f64 {
    let c = &x[CENTRE * TAP_WIDTH..(CENTRE + 1) * TAP_WIDTH];
    0.2 + 0.5 * c[0] * c[1] + 0.2 * c[2] - 0.1 * c[3]
}

fn centre_task(rng: &mut ChaCha8Rng, n_seq: usize, len: usize) -> Vec<Sequence> {
    (0..n_seq)
        .map(|_| {
            let xs: Vec<Vec<f64>> = (0..len)
                .map(|_| (0..TAPS * TAP_WIDTH).map(|_| rng.gen_range(0..2) as f64).collect())
                .collect();
            Sequence {
                targets: xs.iter().map(|x| vec![centre_rule(x)]).collect(),
                inputs: xs.into_iter().map(|x| vec![SparseVec::from(x)]).collect(),
                initial: None,
            }
        })
        .collect()
}

#[test]
fn centre_tap_is_most_salient_after_training_on_a_centre_tap_task() {
    let mut spec = TopologySpec::new(3);
    spec.input("x", TAPS * TAP_WIDTH)
        .dense("hidden", TAPS * TAP_WIDTH, 12, Activation::Sigmoid)
        .dense("out", 12, 1, Activation::Linear)
        .output("y", 1)
        .edge("x", "hidden")
        .edge("hidden", "out")
        .edge("out", "y");
    let mut g = build_graph(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = centre_task(&mut rng, 40, 25);
    let sched = TrainingSchedule { epochs: 60, lr0: 0.1, lr_decay: 0.97, ..Default::default() };
    let report = train(&mut g, &data, &[1.0], &sched).unwrap();
    assert!(report.losses.last().unwrap() < &(0.05 * report.baseline), "{report:?}");

    let held_out = centre_task(&mut rng, 10, 25);
    let score = tap_saliency(&g, &held_out, &[1.0], 0, &tap_ranges()).unwrap();
    let (best, _) = score.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert_eq!(best, CENTRE, "{score:?}");
    let runner_up = score.iter().enumerate().filter(|(i, _)| *i != CENTRE).map(|(_, s)| *s).fold(0.0, f64::max);
    assert!(score[CENTRE] > runner_up, "{score:?}");
}

fn labelled(utts: &[Utterance]) -> Vec<LabelledSegments<'_>> {
    utts.iter()
        .map(|u| LabelledSegments { segments: &u.segments, syntax: &u.syntax, sample_rate: u.sample_rate })
        .collect()
}

fn trained_duration_model(train: &[Utterance], enc: &Encoder) -> DurationModel {
    let sched = TrainingSchedule { epochs: 10, ..Default::default() };
    let (model, report) =
        train_duration_model(&labelled(train), enc, &DurationNetConfig::default(), &sched, None).unwrap();
    assert!(report.losses.last().unwrap() < &report.baseline);
    model
}

#[test]
fn learned_vowel_consonant_duration_ratio_follows_the_rulebook() {
    let rb = Rulebook::default();
    let corpus = generate_synthetic_corpus(31, 120, &rb);
    let (train, test) = corpus.split_at(90);
    let enc = Encoder::new(EncodingConfig::default(), 160).unwrap();
    let model = trained_duration_model(train, &enc);
    let phones = PhoneSet::timit();

    // oracle: the generator's rule, read back from the rulebook
    let rule = rb.frames_for(&rb.vowels[0].phone) as f64 / rb.frames_for(&rb.consonants[0].phone) as f64;
    assert_eq!(rule, 2.0);

    let (mut vowel, mut consonant) = (Vec::new(), Vec::new());
    for u in test {
        let pred = model.predict_seconds(&u.segments, &u.syntax, &enc).unwrap();
        for (s, d) in u.segments.iter().zip(pred) {
            let name = phones.name(s.phone);
            if rb.vowels.iter().any(|r| r.phone == name) {
                vowel.push(d);
            } else if rb.consonants.iter().any(|r| r.phone == name) {
                consonant.push(d);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ratio = mean(&vowel) / mean(&consonant);
    assert!((ratio - rule).abs() <= 0.1 * rule, "predicted ratio {ratio}");
}

#[test]
fn duration_predictions_do_not_depend_on_utterance_order() {
    let corpus = generate_synthetic_corpus(32, 40, &Rulebook::default());
    let enc = Encoder::new(EncodingConfig::default(), 160).unwrap();
    let model = trained_duration_model(&corpus[..30], &enc);
    let test = &corpus[30..];
    let forward: Vec<Vec<f64>> =
        test.iter().map(|u| model.predict_seconds(&u.segments, &u.syntax, &enc).unwrap()).collect();
    let backward: Vec<Vec<f64>> =
        test.iter().rev().map(|u| model.predict_seconds(&u.segments, &u.syntax, &enc).unwrap()).collect();
    assert!(forward.iter().eq(backward.iter().rev()));
}
