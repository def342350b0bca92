use std::fs;
use std::path::Path;

use ats2s::cli::run_with_output;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn ats2s(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with_output(std::iter::once("ats2s").chain(args.iter().copied()), &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL_MODEL: &str = "hidden = 6\nattention_width = 6\npredictor_hidden = [6]\nepochs = 1\n";

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ats2s(&[]).code, 1);
    assert_eq!(ats2s(&["frobnicate"]).code, 1);
    assert_eq!(ats2s(&["train", "--seed", "x"]).code, 1);
    let help = ats2s(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.out.contains("experiment"));
}

#[test]
fn config_errors_list_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "dataset = \"FD009\"\nalpa = 1.0\nhidden = \"wide\"\n");
    let run = ats2s(&["train", "--config", &cfg]);
    assert_eq!(run.code, 2);
    for needle in ["dataset", "alpa", "did you mean `alpha`", "hidden"] {
        assert!(run.err.contains(needle), "missing {needle:?} in {}", run.err);
    }
    let run = ats2s(&["train", "--config", &cfg, "dataset=FD001", "alpa=2"]);
    assert_eq!(run.code, 2);
    assert!(!run.err.contains("FD009"));
}

#[test]
fn unreadable_config_is_a_usage_error() {
    assert_eq!(ats2s(&["train", "--config", "/nonexistent/run.toml"]).code, 1);
}

#[test]
fn gradcheck_command_passes() {
    let run = ats2s(&["gradcheck"]);
    assert_eq!(run.code, 0, "{}", run.err);
    assert!(run.out.contains("max relative error"));
}

#[test]
fn synth_files_feed_train_eval_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let synth = write(
        base,
        "synth.toml",
        "dataset = \"FD001\"\nsource = \"synthetic\"\nsynth_fleet_size = 4\nsynth_min_length = 50\nsynth_max_length = 60\nout_dir = \"fleet\"\n",
    );
    let run = ats2s(&["synth", "--config", &synth]);
    assert_eq!(run.code, 0, "{}", run.err);
    for f in ["synth_train.txt", "synth_test.txt", "synth_RUL.txt"] {
        assert!(base.join("fleet").join(f).is_file(), "{f}");
    }

    let files = format!(
        "dataset = \"FD001\"\ntrain_file = \"fleet/synth_train.txt\"\ntest_file = \"fleet/synth_test.txt\"\nrul_file = \"fleet/synth_RUL.txt\"\nseq_len = 20\n{SMALL_MODEL}"
    );
    let cfg = write(base, "files.toml", &files);
    let out = base.join("model");
    let run = ats2s(&["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.err);
    assert!(run.out.contains("rmse="));
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().filter(|l| !l.starts_with('#')).count(), 5);

    let ckpt = out.join("checkpoint.ats2s");
    let eval_out = base.join("eval");
    let run = ats2s(&["eval", "--config", &cfg, "--checkpoint", ckpt.to_str().unwrap(), "--out", eval_out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.err);
    assert_eq!(fs::read(eval_out.join("report.csv")).unwrap(), fs::read(out.join("report.csv")).unwrap());

    let test_file = base.join("fleet/synth_test.txt");
    let run = ats2s(&["predict", "--checkpoint", ckpt.to_str().unwrap(), "--engine", "2", "--input", test_file.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.err);
    assert!(run.out.starts_with("engine 2: predicted RUL"));
    let run = ats2s(&["predict", "--checkpoint", ckpt.to_str().unwrap(), "--engine", "99", "--input", test_file.to_str().unwrap()]);
    assert_eq!(run.code, 3);

    let run = ats2s(&["eval", "--config", &cfg, "--checkpoint", ckpt.to_str().unwrap(), "dataset=FD003", "--out", eval_out.to_str().unwrap()]);
    assert_eq!(run.code, 3);
    assert!(run.err.contains("FD001"));
}

#[test]
fn corrupt_checkpoint_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = write(dir.path(), "bogus.ats2s", "not a checkpoint");
    let run = ats2s(&["predict", "--checkpoint", &bogus, "--engine", "1", "--input", &bogus]);
    assert_eq!(run.code, 3);
}

#[test]
fn seed_flag_changes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        &format!("dataset = \"FD001\"\nsource = \"synthetic\"\nsynth_fleet_size = 3\nsynth_min_length = 40\nsynth_max_length = 50\nseq_len = 20\n{SMALL_MODEL}"),
    );
    let mut ckpts = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let run = ats2s(&["train", "--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(run.code, 0, "{}", run.err);
        ckpts.push(fs::read(out.join("checkpoint.ats2s")).unwrap());
    }
    assert_ne!(ckpts[0], ckpts[1]);
}

#[test]
fn features_suite_forces_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        &format!("dataset = \"FD001\"\nsource = \"synthetic\"\nsynth_fleet_size = 3\nsynth_min_length = 40\nsynth_max_length = 50\nseq_len = 20\nuse_reconstruction = false\n{SMALL_MODEL}"),
    );
    let out = dir.path().join("exp");
    let run = ats2s(&["experiment", "features", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.err);
    let table = fs::read_to_string(out.join("experiment_features.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("true")));
    assert_eq!(ats2s(&["experiment", "ablation", "--values", "1", "--config", &cfg]).code, 1);
}
