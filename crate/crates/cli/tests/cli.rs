use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_softspell"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn softspell")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const WORDS: &str = "HAUS\nMAUS\nBAUM\nSCHULE\nSCHULD\nKATZE\nHUND\nGARTEN\nWASSER\nSONNE\nMOND\nSTERN\nWALD\nFELD\nBERG\nTAL\n";
const FREQ: &str = "HAUS\t50\nMAUS\t10\nBAUM\t20\nSCHULE\t30\nSCHULD\t40\nKATZE\t5\nHUND\t8\nGARTEN\t7\n";

fn workspace() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("words.txt"), WORDS).unwrap();
    fs::write(dir.path().join("freq.tsv"), FREQ).unwrap();
    ok(dir.path(), &["calibrate", "--samples", "20000", "--seed", "1", "--out", "model.txt"]);
    let root = dir.path().to_path_buf();
    (dir, root)
}

#[test]
fn calibrate_reports_targets_and_writes_manifest() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), &["calibrate", "--samples", "20000", "--out", "m.txt"]);
    assert!(out.contains("top1\t0.75"), "{out}");
    assert!(out.contains("top5\t0.98"), "{out}");
    let manifest = fs::read_to_string(dir.path().join("m.txt.manifest.json")).unwrap();
    assert!(manifest.contains("\"command\": \"calibrate\""));
    assert!(manifest.contains("sha256"));
}

#[test]
fn invalid_targets_exit_with_usage_code() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["calibrate", "--top1", "0.9", "--top5", "0.8", "--out", "m.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("m.txt").exists());
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["train", "--bogus"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_runtime_error() {
    let (_d, root) = workspace();
    let out = run(&root, &["correct", "--lexicon", "nope.txt", "--model", "model.txt", "--word", "HAUS"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unsupported_word_is_usage_error() {
    let (_d, root) = workspace();
    let out = run(&root, &["correct", "--lexicon", "words.txt", "--model", "model.txt", "--word", "CAFÉ"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn correct_observed_word_with_norvig() {
    let (_d, root) = workspace();
    let args = [
        "correct", "--lexicon", "words.txt", "--freq", "freq.tsv", "--model", "model.txt", "--norvig",
        "--word", "schule", "--observed", "SCHULF",
    ];
    let out = ok(&root, &args);
    // both SCHULE and SCHULD are one edit away; SCHULD is more frequent
    assert_eq!(out, "SCHULE\tSCHULF\tSCHULD\tnorvig\n");
}

#[test]
fn correct_dictionary_hit_and_stdin() {
    let (_d, root) = workspace();
    let out = ok(&root, &["correct", "--lexicon", "words.txt", "--model", "model.txt", "--word", "Haus", "--observed", "HAUS"]);
    assert_eq!(out, "HAUS\tHAUS\tHAUS\tdictionary\n");

    let mut child = bin()
        .current_dir(&root)
        .args(["correct", "--lexicon", "words.txt", "--model", "model.txt", "--norvig", "--stdin", "--seed", "4"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(b"Baum\n\nKatze\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("BAUM\t"));
    assert!(lines[1].starts_with("KATZE\t"));
}

#[test]
fn observed_requires_word() {
    let (_d, root) = workspace();
    let out = run(&root, &["correct", "--lexicon", "words.txt", "--model", "model.txt", "--stdin", "--observed", "X"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_then_train_from_dataset() {
    let (_d, root) = workspace();
    ok(&root, &["generate", "--lexicon", "words.txt", "--model", "model.txt", "--variant", "mix", "--pairs", "64", "--out", "d.bin"]);
    let bytes = fs::read(root.join("d.bin")).unwrap();
    assert_eq!(&bytes[..8], b"SSPLDATA");
    ok(&root, &[
        "train", "--lexicon", "words.txt", "--model", "model.txt", "--data", "d.bin", "--epochs", "3", "--width", "8",
        "--out", "n.ckpt",
    ]);
    let hist = fs::read_to_string(root.join("n.ckpt.history.csv")).unwrap();
    assert_eq!(hist.lines().count(), 4);
    let out = ok(&root, &[
        "correct", "--lexicon", "words.txt", "--model", "model.txt", "--ckpt", "n.ckpt", "--word", "MOND",
    ]);
    assert!(out.starts_with("MOND\t"));
}

#[test]
fn train_and_eval_are_byte_reproducible() {
    let (_d, root) = workspace();
    let train = |out: &str| {
        ok(&root, &[
            "train", "--lexicon", "words.txt", "--model", "model.txt", "--variant", "ss", "--pairs", "128",
            "--epochs", "4", "--batch", "32", "--width", "8", "--seed", "9", "--out", out,
        ]);
    };
    train("a.ckpt");
    train("b.ckpt");
    assert_eq!(fs::read(root.join("a.ckpt")).unwrap(), fs::read(root.join("b.ckpt")).unwrap());
    assert_eq!(
        fs::read(root.join("a.ckpt.history.csv")).unwrap(),
        fs::read(root.join("b.ckpt.history.csv")).unwrap()
    );

    let eval = |out: &str, threads: &str| {
        ok(&root, &[
            "eval", "--lexicon", "words.txt", "--freq", "freq.tsv", "--model", "model.txt", "--configs", "hh,ss+n,n",
            "--words", "4", "--training-words", "8", "--pairs", "64", "--epochs", "2", "--width", "8", "--seed",
            "1,2", "--threads", threads, "--out", out,
        ])
    };
    let table = eval("a.csv", "1");
    eval("b.csv", "3");
    let a = fs::read_to_string(root.join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(root.join("b.csv")).unwrap());
    assert!(a.starts_with("label,char_num,char_den,word_num,word_den,seed\n"));
    // argmax baseline plus three configs, two seeds
    assert_eq!(a.lines().count(), 1 + 4 * 2);
    assert!(table.contains("argmax"));
    assert!(root.join("a.csv.table.txt").exists());
    assert!(root.join("a.csv.manifest.json").exists());
}

#[test]
fn bad_eval_config_is_usage_error() {
    let (_d, root) = workspace();
    let out = run(&root, &["eval", "--lexicon", "words.txt", "--model", "model.txt", "--configs", "xx", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(2));
}
