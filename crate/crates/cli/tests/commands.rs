use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use miemph::eeg::{load_trialset, save_trialset, FileFormat, TrialSet};
use miemph::synth::{generate_trialset, SynthConfig};

fn miemph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miemph"))
        .args(args)
        .env_remove("MIEMPH_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_synth(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["synth", "--seed", "3", "--trials-per-class", "4", "--out", p(&path)];
    args.extend_from_slice(extra);
    let out = miemph(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

#[test]
fn synth_without_out_is_a_usage_error() {
    let out = miemph(&["synth", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn synth_default_profile_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.mieeg");
    let b = dir.path().join("b.mieeg");
    for path in [&a, &b] {
        let out = miemph(&["synth", "--profile", "separable", "--seed", "7", "--out", p(path)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let set = load_trialset(&a, FileFormat::Binary).unwrap();
    assert_eq!(set.len(), 150);
    assert_eq!(set.class_counts(), [50, 50, 50]);
}

#[test]
fn synth_seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_synth(dir.path(), "a.mieeg", &[]);
    let b = dir.path().join("b.mieeg");
    let out = Command::new(env!("CARGO_BIN_EXE_miemph"))
        .args(["synth", "--trials-per-class", "4", "--out", p(&b)])
        .env("MIEMPH_SEED", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn second_session_differs_and_is_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = small_synth(dir.path(), "s1.mieeg", &[]);
    let s2 = small_synth(dir.path(), "s2.mieeg", &["--session", "2", "--perturb"]);
    let a = load_trialset(s1, FileFormat::Binary).unwrap();
    let b = load_trialset(s2, FileFormat::Binary).unwrap();
    assert_eq!(a.session_ids(), vec![1]);
    assert_eq!(b.session_ids(), vec![2]);
    assert_eq!(a.subject_id(), b.subject_id());
    assert_ne!(a.trials()[0].data, b.trials()[0].data);
}

#[test]
fn import_converts_csv() {
    let dir = tempfile::tempdir().unwrap();
    let bin = small_synth(dir.path(), "s.mieeg", &[]);
    let set = load_trialset(&bin, FileFormat::Binary).unwrap();
    let csv = dir.path().join("s.csv");
    save_trialset(&set, &csv, FileFormat::Csv { fs: 250 }).unwrap();
    let back = dir.path().join("back.mieeg");
    let out = miemph(&["import", "--input", p(&csv), "--fs", "250", "--out", p(&back)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(load_trialset(back, FileFormat::Binary).unwrap(), set);
}

#[test]
fn psd_dump_one_trial_has_one_row_per_channel_and_bin() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_synth(dir.path(), "s.mieeg", &[]);
    let csv = dir.path().join("psd.csv");
    let out = miemph(&["psd-dump", "--input", p(&input), "--trials", "0", "--out", p(&csv)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("subject,trial,channel,freq_hz,power"));
    // 4 s epoch at 250 Hz: 1000 samples, 501 one-sided bins
    assert_eq!(lines.count(), 60 * 501);
}

#[test]
fn psd_dump_band_limits_bins() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_synth(dir.path(), "s.mieeg", &[]);
    let csv = dir.path().join("psd.csv");
    let out = miemph(&[
        "psd-dump", "--input", p(&input), "--trials", "1,2", "--f1", "8", "--f2", "30", "--filtered", "--out", p(&csv),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(csv).unwrap();
    let freqs: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(freqs.iter().all(|f| (8.0..=30.0).contains(f)));
    // 8.00, 8.25, ..., 30.00
    assert_eq!(freqs.len(), 2 * 60 * 89);
}

#[test]
fn psd_dump_empty_selection_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_synth(dir.path(), "s.mieeg", &[]);
    let csv = dir.path().join("psd.csv");
    let out = miemph(&["psd-dump", "--input", p(&input), "--trials", "999", "--out", p(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(csv).unwrap(), "subject,trial,channel,freq_hz,power\n");
}

#[test]
fn inter_with_the_same_file_twice_is_leakage() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = small_synth(dir.path(), "s1.mieeg", &[]);
    let outdir = dir.path().join("out");
    let out = miemph(&["run", "--mode", "inter", "--train", p(&s1), "--valid", p(&s1), "--epochs", "1", "--out", p(&outdir)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("leakage"));
    assert!(!outdir.join("report.csv").exists());
}

#[test]
fn silent_channel_under_db_weights_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { trials_per_class: 4, n_channels: 12, motifs: vec![], seed: 1, ..Default::default() };
    let set = generate_trialset(&cfg).unwrap();
    let channels = set.channels().clone();
    let mut trials = set.into_trials();
    trials[2].data.row_mut(5).fill(0.0);
    let path = dir.path().join("silent.mieeg");
    save_trialset(&TrialSet::new(channels.clone(), 250, trials).unwrap(), &path, FileFormat::Binary).unwrap();

    let out = miemph(&[
        "run", "--valid", p(&path), "--emphasis-mode", "db-raw", "--epochs", "1", "--out", p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let msg = stderr(&out);
    assert!(msg.contains(&format!("channel {} is silent", channels.label(5).unwrap())), "{msg}");
}

#[test]
fn run_rejects_bad_config_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = small_synth(dir.path(), "s1.mieeg", &[]);
    let out = miemph(&["run", "--valid", p(&s1), "--folds", "1", "--out", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = miemph(&["run", "--valid", p(&dir.path().join("missing.mieeg")), "--out", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = miemph(&["run", "--valid", p(&s1)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn intra_run_writes_report_and_report_command_renders_it() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = small_synth(dir.path(), "s1.mieeg", &[]);
    let outdir = dir.path().join("out");
    let out = miemph(&[
        "run", "--valid", p(&s1), "--folds", "2", "--epochs", "1", "--batch-size", "8", "--seed", "5", "--out", p(&outdir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in [
        "report.csv",
        "report.txt",
        "predictions.csv",
        "manifest.json",
        "weights/synth01_valid.csv",
        "folds/synth01-intra-fold0.minet",
        "folds/synth01-intra-fold1-history.csv",
    ] {
        assert!(outdir.join(f).is_file(), "missing {f}");
    }
    let csv = std::fs::read_to_string(outdir.join("report.csv")).unwrap();
    assert!(csv.starts_with("subject,mode,fold,trial_acc,window_acc,n_trials\n"));
    assert_eq!(csv.lines().count(), 3);
    let weights = std::fs::read_to_string(outdir.join("weights/synth01_valid.csv")).unwrap();
    assert_eq!(weights.lines().next(), Some("subject,trial,channel,weight"));
    assert_eq!(weights.lines().count(), 1 + 12 * 60);

    let shown = miemph(&["report", "--input", p(&outdir.join("report.csv"))]);
    assert!(shown.status.success());
    assert_eq!(String::from_utf8_lossy(&shown.stdout), std::fs::read_to_string(outdir.join("report.txt")).unwrap());
    let again = miemph(&["report", "--input", p(&outdir.join("report.csv")), "--format", "csv"]);
    assert_eq!(String::from_utf8_lossy(&again.stdout), csv);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = small_synth(dir.path(), "s1.mieeg", &[]);
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!("valid = [{:?}]\nseed = 11\n[training]\nepochs = 1\nbatch_size = 8\n[eval]\nn_folds = 3\n", p(&s1)),
    )
    .unwrap();
    let outdir = dir.path().join("out");
    let out = miemph(&["run", "--config", p(&cfg), "--folds", "2", "--out", p(&outdir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outdir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["eval"]["n_folds"], 2);
    assert_eq!(manifest["config"]["seed"], 11);
    assert_eq!(manifest["config"]["training"]["seed"], 11);
    assert_eq!(manifest["config"]["training"]["epochs"], 1);
    assert_eq!(manifest["seeds"][0]["fold_seeds"].as_array().unwrap().len(), 2);
}

#[test]
fn manifest_rerun_rejects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = small_synth(dir.path(), "s1.mieeg", &[]);
    let outdir = dir.path().join("out");
    let out = miemph(&["run", "--valid", p(&s1), "--folds", "2", "--epochs", "1", "--out", p(&outdir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    small_synth(dir.path(), "s1.mieeg", &["--subject", "other"]);
    let out = miemph(&["run", "--manifest", p(&outdir.join("manifest.json")), "--out", p(&dir.path().join("again"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("differs from the manifest"));
}
