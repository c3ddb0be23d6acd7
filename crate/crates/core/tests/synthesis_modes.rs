use std::path::Path;

use nntts::acoustic::retime;
use nntts::corpus::{write_phone_labels, write_syntax_labels, PhoneSet};
use nntts::duration::parse_durations;
use nntts::pipeline::{cmd_gen_corpus, cmd_synth, cmd_train, load_labels, ProjectConfig, TrainTarget};

fn small_config() -> ProjectConfig {
    ProjectConfig::parse("[duration_training]\nepochs = 2\n[acoustic_training]\nepochs = 1\n").unwrap()
}

fn train_models(cfg: &ProjectConfig, dir: &Path) {
    cmd_gen_corpus(cfg, &dir.join("corpus"), 6, 11).unwrap();
    cmd_train(cfg, &dir.join("corpus"), TrainTarget::Duration, &dir.join("dur.nnbg")).unwrap();
    cmd_train(cfg, &dir.join("corpus"), TrainTarget::Acoustic, &dir.join("ac.nnbg")).unwrap();
}

#[test]
fn natural_synthesis_of_retimed_labels_matches_network_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config();
    train_models(&cfg, d);
    let phones = PhoneSet::timit();
    let labels = d.join("corpus/synth0002.phn");

    let net = cmd_synth(&cfg, &labels, Some(&d.join("dur.nnbg")), &d.join("ac.nnbg"), &d.join("net.wav"), false).unwrap();
    let dur_file = net.durations.expect("network mode writes durations");
    let durations = parse_durations(&std::fs::read_to_string(&dur_file).unwrap()).unwrap();

    // rebuild the network's timing from the duration file alone
    let (segments, syntax) = load_labels(&labels, phones, None).unwrap();
    assert_eq!(durations.len(), segments.len());
    for ((name, _), s) in durations.iter().zip(&segments) {
        assert_eq!(name, phones.name(s.phone));
    }
    let frames: Vec<usize> = durations.iter().map(|(_, ms)| (*ms / 10) as usize).collect();
    assert!(durations.iter().all(|(_, ms)| ms % 10 == 0 && *ms >= 10));
    let (segments, syntax) = retime(&segments, &syntax, &frames, cfg.hop()).unwrap();
    std::fs::create_dir(d.join("retimed")).unwrap();
    let retimed = d.join("retimed/synth0002.phn");
    std::fs::write(&retimed, write_phone_labels(&segments, phones)).unwrap();
    std::fs::write(retimed.with_extension("syn"), write_syntax_labels(&syntax)).unwrap();

    let nat = cmd_synth(&cfg, &retimed, None, &d.join("ac.nnbg"), &d.join("nat.wav"), true).unwrap();
    assert_eq!(nat.durations, None);
    assert_eq!(nat.frames, frames.iter().sum::<usize>());
    assert_eq!(net.frames, nat.frames);
    assert_eq!(std::fs::read(d.join("net.wav")).unwrap(), std::fs::read(d.join("nat.wav")).unwrap());
}

#[test]
fn natural_synthesis_keeps_label_timing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config();
    train_models(&cfg, d);
    let labels = d.join("corpus/synth0004.phn");
    let (segments, _) = load_labels(&labels, PhoneSet::timit(), None).unwrap();
    let r = cmd_synth(&cfg, &labels, None, &d.join("ac.nnbg"), &d.join("out.wav"), true).unwrap();
    let labelled = segments.last().unwrap().end;
    assert_eq!(r.frames, labelled / cfg.hop());
    assert_eq!(r.samples, r.frames * cfg.hop());
    // the synthesized file is as long as the recording it was labelled from
    let original = hound::WavReader::open(d.join("corpus/synth0004.wav")).unwrap().len() as usize;
    assert_eq!(r.samples, original / cfg.hop() * cfg.hop());
}
